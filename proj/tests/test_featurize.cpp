#include <doctest.h>

#include <cmath>
#include <numeric>

#include "readmit/embedder.hpp"
#include "readmit/error.hpp"
#include "readmit/featurize.hpp"
#include "readmit/schema.hpp"
#include "test_support.hpp"

using namespace readmit;
using namespace readmit::featurize;

namespace {

struct Fixture {
  datagen::RawTables tables;
  ingest::Cohort cohort;
  Fixture() : tables(datagen::generate(testing::small_gen(21, 120))), cohort(ingest::prepare_cohort(tables)) {}
};

std::vector<std::int64_t> ids_of(const ingest::Cohort& c) {
  std::vector<std::int64_t> ids;
  for (const auto& r : c.records) ids.push_back(r.admission_id);
  return ids;
}

double norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w" + std::to_string(i % 97) + " ";
  return s;
}

}  // namespace

TEST_CASE("admissions block layout") {
  std::size_t width = schema::kAdmissionNumericColumns;
  for (const auto& cat : schema::admission_categoricals()) width += cat.width();
  CHECK(width == 78);
  CHECK(schema::admission_column_names().size() == 78);

  Fixture f;
  const auto block = encode_admissions(f.cohort);
  CHECK(block.values.cols == 78);
  CHECK(block.values.rows == f.cohort.records.size());
  for (std::size_t i = 0; i < block.values.rows; ++i) {
    std::size_t col = schema::kAdmissionNumericColumns;
    CHECK(block.values(i, 0) == f.cohort.records[i].age);
    CHECK(block.values(i, 3) == f.cohort.records[i].days_since_previous);
    for (const auto& cat : schema::admission_categoricals()) {
      double hot = 0;
      for (std::size_t k = 0; k < cat.width(); ++k) hot += block.values(i, col + k);
      CHECK(hot == 1.0);
      col += cat.width();
    }
  }
}

TEST_CASE("identical admissions encode identically and unknown values are rejected") {
  Fixture f;
  ingest::Cohort two;
  two.records = {f.cohort.records[0], f.cohort.records[0]};
  two.records[1].admission_id += 1;
  auto block = encode_admissions(two);
  CHECK(std::equal(block.values.row(0).begin(), block.values.row(0).end(), block.values.row(1).begin()));

  two.records[1].insurance = "Gold plan";
  CHECK_THROWS_WITH_AS(encode_admissions(two), doctest::Contains("Gold plan"), Error);
}

TEST_CASE("lab abnormal fractions") {
  Fixture f;
  const auto& r0 = f.cohort.records[0];
  const auto& r1 = f.cohort.records[1];
  datagen::RawTables t;
  auto lab = [&](std::int64_t hadm, std::int64_t item, bool abnormal) {
    t.labevents.push_back({r0.patient_id, hadm, item, 0, abnormal});
  };
  lab(r0.admission_id, 50000, true);
  lab(r0.admission_id, 50000, true);
  lab(r0.admission_id, 50000, false);
  lab(r0.admission_id, 50000, true);
  lab(r0.admission_id, 50002, false);
  lab(r0.admission_id, 99999, true);  // outside the vocabulary
  lab(r1.admission_id, 50001, false);
  LabReport report;
  const auto block = encode_labevents(t, f.cohort, default_item_vocab(4), &report);
  CHECK(block.values.cols == 4);
  CHECK(block.values(0, 0) == 0.75);
  CHECK(block.values(0, 1) == 0.0);
  CHECK(block.values(0, 2) == 0.0);
  CHECK(block.values(1, 1) == 0.0);
  CHECK(report.events_used == 6);
  CHECK(report.events_dropped == 1);
  CHECK_FALSE(block.missing[0]);
  for (std::size_t i = 2; i < block.values.rows; ++i) {
    CHECK(block.missing[i]);
    CHECK(norm(block.values.row(i)) == 0.0);
  }
}

TEST_CASE("code selection") {
  std::vector<datagen::CodeRow> codes;
  for (int s = 12; s >= 1; --s) codes.push_back({1, 2, s, "C" + std::to_string(s), 10});
  const auto top = select_codes(codes, kMaxDiagnoses);
  REQUIRE(top.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(top[i].seq_num == i + 1);
  CHECK(select_codes({codes.begin(), codes.begin() + 3}, kMaxProcedures).size() == 3);
  const auto tied = select_codes({{1, 2, 1, "B", 10}, {1, 2, 1, "A", 10}}, 1);
  CHECK(tied[0].icd_code == "A");
}

TEST_CASE("code set embedding") {
  MockEmbedder emb(16, 3);
  const CodeTextMap titles({{"A1", 10, "alpha beta"}, {"B2", 10, "gamma"}});
  const datagen::CodeRow a{1, 2, 1, "A1", 10};
  const auto one = embed_code_set({a}, titles, emb);
  const auto tok = emb.tokenize("alpha beta");
  const auto direct = emb.embed_tokens(tok);
  for (std::size_t k = 0; k < 16; ++k) CHECK(one[k] == doctest::Approx(direct[k]).epsilon(1e-15));
  const auto three = embed_code_set({a, a, a}, titles, emb);
  for (std::size_t k = 0; k < 16; ++k) CHECK(three[k] == doctest::Approx(one[k]).epsilon(1e-14));
  CHECK(norm(embed_code_set({}, titles, emb)) == 0.0);
  CHECK_THROWS_WITH_AS(embed_code_set({{1, 2, 1, "ZZ9", 9}}, titles, emb), doctest::Contains("ZZ9"), Error);
}

TEST_CASE("note windows") {
  CHECK(note_window_offsets(0, 512, 256).empty());
  CHECK(note_window_offsets(1, 512, 256) == std::vector<std::size_t>{0});
  CHECK(note_window_offsets(512, 512, 256) == std::vector<std::size_t>{0});
  CHECK(note_window_offsets(513, 512, 256) == std::vector<std::size_t>{0, 256});
  CHECK(note_window_offsets(768, 512, 256) == std::vector<std::size_t>{0, 256});
  CHECK(note_window_offsets(1024, 512, 256) == std::vector<std::size_t>{0, 256, 512});
  // Reference enumeration: every window start until one covers the last token.
  for (std::size_t n = 1; n < 3000; n += 37) {
    std::vector<std::size_t> ref;
    std::size_t o = 0;
    do {
      ref.push_back(o);
      o += 256;
    } while (ref.back() + 512 < n);
    CHECK(note_window_offsets(n, 512, 256) == ref);
  }
}

TEST_CASE("note embedding averages windows") {
  MockEmbedder emb(8, 1);
  const std::string short_text = words(300);
  const auto tokens = emb.tokenize(short_text);
  CHECK(embed_note(short_text, emb) == emb.embed_tokens(tokens));

  const std::string long_text = words(768);
  const auto t = emb.tokenize(long_text);
  REQUIRE(t.size() == 768);
  const auto w0 = emb.embed_tokens(std::span<const std::string>(t.data(), 512));
  const auto w1 = emb.embed_tokens(std::span<const std::string>(t.data() + 256, 512));
  const auto got = embed_note(long_text, emb);
  for (std::size_t k = 0; k < 8; ++k) CHECK(got[k] == doctest::Approx((w0[k] + w1[k]) / 2).epsilon(1e-14));
  CHECK(norm(embed_note("", emb)) == 0.0);
}

TEST_CASE("assembly widths and selection rules") {
  Fixture f;
  FeatureOptions opt;
  opt.embed_dim = 24;
  opt.n_lab_items = 40;
  const auto blocks = encode_all(f.tables, f.cohort, opt);
  const auto ids = ids_of(f.cohort);
  CHECK(assemble(blocks, BlockSelection::all(), ids).values.cols == 78 + 24 * 3 + 40);
  const auto al = assemble(blocks, {BlockKind::Admissions, BlockKind::Labevents}, ids);
  CHECK(al.values.cols == 118);
  REQUIRE(al.layout.size() == 2);
  CHECK(al.layout[1].offset == 78);
  CHECK_THROWS_AS(assemble(blocks, {BlockKind::Notes}, ids), Error);
  CHECK_THROWS_AS(BlockSelection::parse("labevents+notes"), Error);
  CHECK(BlockSelection::parse("notes+admissions").label() == "admissions+notes");
  CHECK(ablation_selections().size() == 6);
  CHECK(ablation_selections().back() == BlockSelection::all());

  auto short_blocks = blocks;
  short_blocks[4].values = Matrix(3, 24);
  CHECK_THROWS_AS(assemble(short_blocks, BlockSelection::all(), ids), Error);

  // Full-size widths.
  std::vector<FeatureBlock> full(5);
  const std::size_t widths[] = {78, 768, 768, 856, 768};
  for (std::size_t k = 0; k < 5; ++k) {
    full[k].kind = kAllBlocks[k];
    full[k].values = Matrix(2, widths[k]);
  }
  CHECK(assemble(full, BlockSelection::all(), {1, 2}).values.cols == 3238);
  CHECK(assemble(full, {BlockKind::Admissions, BlockKind::Labevents}, {1, 2}).values.cols == 934);
}

TEST_CASE("scaling") {
  Fixture f;
  FeatureOptions opt;
  opt.embed_dim = 24;
  opt.n_lab_items = 40;
  const auto blocks = encode_all(f.tables, f.cohort, opt);
  auto m = assemble(blocks, BlockSelection::all(), ids_of(f.cohort));
  // Plant a norm-2 note row and a constant column.
  const auto notes = m.layout.back();
  for (std::size_t c = notes.offset; c < notes.offset + notes.width; ++c) m.values(0, c) = 2.0 / std::sqrt(24.0);
  for (std::size_t i = 0; i < m.values.rows; ++i) m.values(i, 1) = 5.0;

  std::vector<std::size_t> train(m.values.rows / 2);
  std::iota(train.begin(), train.end(), 0);
  const auto s = fit_scalers(m, train);
  const auto once = apply_scalers(m, s);
  const auto twice = apply_scalers(once, s);
  CHECK(once.values == twice.values);
  CHECK(once.scaled_with == s.fingerprint());
  for (std::size_t i = 0; i < once.values.rows; ++i) {
    CHECK(once.values(i, 1) == 0.0);
    for (const auto& span : once.layout) {
      const auto row = once.values.row(i).subspan(span.offset, span.width);
      if (is_minmax_block(span.kind)) {
        for (double x : row) {
          CHECK(x >= 0.0);
          CHECK(x <= 1.0);
        }
      } else {
        const double n = norm(row);
        if (n != 0.0) CHECK(std::abs(n - 1.0) < 1e-9);
      }
    }
  }
  CHECK(norm(once.values.row(0).subspan(notes.offset, notes.width)) == doctest::Approx(1.0));

  auto other = s;
  other.ranges[0].max += 1.0;
  CHECK_THROWS_AS(apply_scalers(once, other), Error);
  CHECK_THROWS_AS(fit_scalers(m, {}), Error);
}

TEST_CASE("mock embedder") {
  MockEmbedder a(32, 9), b(32, 9), c(32, 10);
  CHECK(a.token_vector("fever") == b.token_vector("fever"));
  CHECK(a.token_vector("fever") != c.token_vector("fever"));
  CHECK(norm(a.token_vector("fever")) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.tokenize("  a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  std::vector<std::string> too_many(513, "x");
  CHECK_THROWS_AS(a.embed_tokens(too_many), Error);
}
