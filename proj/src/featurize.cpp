#include "readmit/featurize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "readmit/error.hpp"
#include "readmit/rng.hpp"
#include "readmit/schema.hpp"

namespace readmit::featurize {

std::string_view block_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Admissions: return "admissions";
    case BlockKind::Diagnoses: return "diagnoses";
    case BlockKind::Procedures: return "procedures";
    case BlockKind::Labevents: return "labevents";
    case BlockKind::Notes: return "notes";
  }
  return "?";
}

BlockKind block_from_name(std::string_view name) {
  for (auto k : kAllBlocks) {
    if (block_name(k) == name) return k;
  }
  fail(ErrorKind::Config, "unknown feature block '" + std::string(name) + "'");
}

bool is_minmax_block(BlockKind kind) { return kind == BlockKind::Admissions || kind == BlockKind::Labevents; }

BlockSelection::BlockSelection(std::initializer_list<BlockKind> kinds) {
  for (auto k : kinds) add(k);
}

BlockSelection BlockSelection::all() {
  BlockSelection s;
  for (auto k : kAllBlocks) s.add(k);
  return s;
}

BlockSelection BlockSelection::parse(std::string_view text) {
  if (text == "all") return all();
  BlockSelection s;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('+', start);
    if (end == std::string_view::npos) end = text.size();
    s.add(block_from_name(text.substr(start, end - start)));
    start = end + 1;
  }
  if (!s.contains(BlockKind::Admissions)) {
    fail(ErrorKind::Config, "feature selection '" + std::string(text) + "' must include admissions");
  }
  return s;
}

std::vector<BlockKind> BlockSelection::kinds() const {
  std::vector<BlockKind> out;
  for (auto k : kAllBlocks) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

std::string BlockSelection::label() const {
  if (*this == all()) return "all";
  std::string out;
  for (auto k : kinds()) {
    if (!out.empty()) out += '+';
    out += block_name(k);
  }
  return out;
}

std::vector<BlockSelection> ablation_selections() {
  using B = BlockKind;
  return {
      {B::Admissions, B::Diagnoses, B::Procedures, B::Labevents},
      {B::Admissions, B::Diagnoses, B::Labevents, B::Notes},
      {B::Admissions, B::Procedures, B::Labevents, B::Notes},
      {B::Admissions, B::Labevents, B::Notes},
      {B::Admissions, B::Labevents},
      BlockSelection::all(),
  };
}

std::uint64_t ScalerSet::fingerprint() const {
  std::uint64_t h = 0x51ca1e5ULL;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    h = splitmix64(h ^ columns[i]);
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(ranges[i].min));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(ranges[i].max));
  }
  return h == 0 ? 1 : h;
}

CodeTextMap::CodeTextMap(const std::vector<datagen::CodeTitleRow>& rows) {
  for (const auto& r : rows) titles_[r.icd_code + "|" + std::to_string(r.icd_version)] = r.long_title;
}

const std::string* CodeTextMap::find(std::string_view code, int version) const {
  auto it = titles_.find(std::string(code) + "|" + std::to_string(version));
  return it == titles_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view field_of(const ingest::AdmissionRecord& r, std::string_view group) {
  if (group == "gender") return r.gender;
  if (group == "admission_type") return r.admission_type;
  if (group == "admission_location") return r.admission_location;
  if (group == "discharge_location") return r.discharge_location;
  if (group == "insurance") return r.insurance;
  if (group == "language") return r.language;
  if (group == "ethnicity") return r.ethnicity;
  if (group == "marital_status") return r.marital_status;
  if (group == "previous_admission_type") return r.previous_admission_type;
  fail(ErrorKind::Encoding, "no admission field for group " + std::string(group));
}

std::unordered_map<std::int64_t, std::size_t> row_of_admission(const ingest::Cohort& cohort) {
  std::unordered_map<std::int64_t, std::size_t> out;
  out.reserve(cohort.records.size());
  for (std::size_t i = 0; i < cohort.records.size(); ++i) out[cohort.records[i].admission_id] = i;
  return out;
}

}  // namespace

FeatureBlock encode_admissions(const ingest::Cohort& cohort) {
  const std::size_t n = cohort.records.size();
  FeatureBlock b{BlockKind::Admissions, Matrix(n, schema::kAdmissionBlockWidth), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = cohort.records[i];
    auto row = b.values.row(i);
    row[0] = r.age;
    row[1] = r.month_of_admission;
    row[2] = r.length_of_stay_hours;
    row[3] = r.days_since_previous;
    std::size_t offset = schema::kAdmissionNumericColumns;
    for (const auto& group : schema::admission_categoricals()) {
      const auto value = field_of(r, group.name);
      const int idx = schema::category_index(group, value);
      if (idx < 0) {
        fail(ErrorKind::Encoding, "column '" + std::string(group.name) + "' has unknown value '" +
                                      std::string(value) + "' (admission " + std::to_string(r.admission_id) + ")");
      }
      row[offset + static_cast<std::size_t>(idx)] = 1.0;
      offset += group.width();
    }
  }
  return b;
}

std::vector<std::int64_t> default_item_vocab(std::size_t n_items) {
  std::vector<std::int64_t> v(n_items);
  for (std::size_t i = 0; i < n_items; ++i) v[i] = datagen::kFirstLabItem + static_cast<std::int64_t>(i);
  return v;
}

FeatureBlock encode_labevents(const datagen::RawTables& tables, const ingest::Cohort& cohort,
                              const std::vector<std::int64_t>& item_vocab, LabReport* report) {
  const std::size_t n = cohort.records.size();
  const std::size_t width = item_vocab.size();
  std::unordered_map<std::int64_t, std::size_t> item_col;
  for (std::size_t i = 0; i < width; ++i) item_col[item_vocab[i]] = i;
  const auto rows = row_of_admission(cohort);

  Matrix abnormal(n, width), total(n, width);
  LabReport rep;
  for (const auto& ev : tables.labevents) {
    auto r = rows.find(ev.hadm_id);
    if (r == rows.end()) continue;
    auto c = item_col.find(ev.itemid);
    if (c == item_col.end()) {
      ++rep.events_dropped;
      continue;
    }
    ++rep.events_used;
    total(r->second, c->second) += 1.0;
    if (ev.abnormal) abnormal(r->second, c->second) += 1.0;
  }
  FeatureBlock b{BlockKind::Labevents, Matrix(n, width), std::vector<std::uint8_t>(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (total(i, j) > 0.0) {
        b.values(i, j) = abnormal(i, j) / total(i, j);
        b.missing[i] = 0;
      }
    }
  }
  if (report) *report = rep;
  return b;
}

std::vector<datagen::CodeRow> select_codes(std::vector<datagen::CodeRow> codes, std::size_t limit) {
  std::stable_sort(codes.begin(), codes.end(), [](const datagen::CodeRow& a, const datagen::CodeRow& b) {
    if (a.seq_num != b.seq_num) return a.seq_num < b.seq_num;
    return a.icd_code < b.icd_code;
  });
  if (codes.size() > limit) codes.resize(limit);
  return codes;
}

std::vector<double> embed_code_set(const std::vector<datagen::CodeRow>& codes, const CodeTextMap& titles,
                                   const Embedder& embedder) {
  std::vector<double> out(embedder.dimension(), 0.0);
  if (codes.empty()) return out;
  std::string unresolved;
  for (const auto& c : codes) {
    if (!titles.find(c.icd_code, c.icd_version)) {
      if (!unresolved.empty()) unresolved += ", ";
      unresolved += c.icd_code + " (ICD-" + std::to_string(c.icd_version) + ")";
    }
  }
  if (!unresolved.empty()) fail(ErrorKind::Lookup, "no title for codes: " + unresolved);
  for (const auto& c : codes) {
    auto tokens = embedder.tokenize(*titles.find(c.icd_code, c.icd_version));
    if (tokens.size() > embedder.max_window()) tokens.resize(embedder.max_window());
    const auto v = embedder.embed_tokens(tokens);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(codes.size());
  for (auto& x : out) x *= inv;
  return out;
}

std::vector<std::size_t> note_window_offsets(std::size_t n_tokens, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> out;
  if (n_tokens == 0) return out;
  for (std::size_t offset = 0;; offset += stride) {
    out.push_back(offset);
    if (offset + window >= n_tokens) break;
  }
  return out;
}

std::vector<double> embed_note(std::string_view text, const Embedder& embedder) {
  const auto tokens = embedder.tokenize(text);
  std::vector<double> out(embedder.dimension(), 0.0);
  const auto offsets = note_window_offsets(tokens.size(), embedder.max_window(), kNoteStride);
  if (offsets.empty()) return out;
  for (auto o : offsets) {
    const std::size_t len = std::min(embedder.max_window(), tokens.size() - o);
    const auto v = embedder.embed_tokens(std::span<const std::string>(tokens.data() + o, len));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(offsets.size());
  for (auto& x : out) x *= inv;
  return out;
}

FeatureBlock encode_codes(BlockKind kind, const std::vector<datagen::CodeRow>& rows, const ingest::Cohort& cohort,
                          const CodeTextMap& titles, const Embedder& embedder) {
  const std::size_t limit = kind == BlockKind::Diagnoses ? kMaxDiagnoses : kMaxProcedures;
  const std::size_t n = cohort.records.size();
  const auto index = row_of_admission(cohort);
  std::vector<std::vector<datagen::CodeRow>> per_row(n);
  for (const auto& c : rows) {
    auto it = index.find(c.hadm_id);
    if (it != index.end()) per_row[it->second].push_back(c);
  }
  FeatureBlock b{kind, Matrix(n, embedder.dimension()), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (per_row[i].empty()) {
      b.missing[i] = 1;
      continue;
    }
    const auto v = embed_code_set(select_codes(std::move(per_row[i]), limit), titles, embedder);
    std::copy(v.begin(), v.end(), b.values.row(i).begin());
  }
  return b;
}

FeatureBlock encode_notes(const std::vector<datagen::NoteRow>& rows, const ingest::Cohort& cohort,
                          const Embedder& embedder) {
  const std::size_t n = cohort.records.size();
  const auto index = row_of_admission(cohort);
  std::vector<std::vector<const datagen::NoteRow*>> per_row(n);
  for (const auto& note : rows) {
    auto it = index.find(note.hadm_id);
    if (it != index.end()) per_row[it->second].push_back(&note);
  }
  FeatureBlock b{BlockKind::Notes, Matrix(n, embedder.dimension()), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (per_row[i].empty()) {
      b.missing[i] = 1;
      continue;
    }
    auto row = b.values.row(i);
    for (const auto* note : per_row[i]) {
      const auto v = embed_note(note->note_text, embedder);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += v[k];
    }
    const double inv = 1.0 / static_cast<double>(per_row[i].size());
    for (auto& x : row) x *= inv;
  }
  return b;
}

std::vector<FeatureBlock> encode_all(const datagen::RawTables& tables, const ingest::Cohort& cohort,
                                     const FeatureOptions& options, LabReport* lab_report) {
  const MockEmbedder embedder(options.embed_dim, options.embed_seed);
  const CodeTextMap titles(tables.code_text_map);
  std::vector<FeatureBlock> blocks;
  blocks.push_back(encode_admissions(cohort));
  blocks.push_back(encode_codes(BlockKind::Diagnoses, tables.diagnoses_icd, cohort, titles, embedder));
  blocks.push_back(encode_codes(BlockKind::Procedures, tables.procedures_icd, cohort, titles, embedder));
  blocks.push_back(encode_labevents(tables, cohort, default_item_vocab(options.n_lab_items), lab_report));
  blocks.push_back(encode_notes(tables.discharge_notes, cohort, embedder));
  return blocks;
}

NodeFeatureMatrix assemble(const std::vector<FeatureBlock>& blocks, const BlockSelection& selection,
                           const std::vector<std::int64_t>& admission_ids) {
  if (!selection.contains(BlockKind::Admissions)) {
    fail(ErrorKind::Config, "feature selection must include the admissions block");
  }
  std::vector<const FeatureBlock*> chosen;
  for (auto kind : selection.kinds()) {
    auto it = std::find_if(blocks.begin(), blocks.end(), [&](const FeatureBlock& b) { return b.kind == kind; });
    if (it == blocks.end()) fail(ErrorKind::Alignment, "block '" + std::string(block_name(kind)) + "' not provided");
    chosen.push_back(&*it);
  }
  const std::size_t n = admission_ids.size();
  NodeFeatureMatrix out;
  std::size_t width = 0;
  for (const auto* b : chosen) {
    if (b->values.rows != n) {
      fail(ErrorKind::Alignment, "block '" + std::string(block_name(b->kind)) + "' has " +
                                     std::to_string(b->values.rows) + " rows, expected " + std::to_string(n));
    }
    out.layout.push_back({b->kind, width, b->values.cols});
    width += b->values.cols;
  }
  out.values = Matrix(n, width);
  out.admission_ids = admission_ids;
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.values.row(i);
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      auto src = chosen[k]->values.row(i);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(out.layout[k].offset));
    }
  }
  return out;
}

ScalerSet fit_scalers(const NodeFeatureMatrix& m, const std::vector<std::size_t>& train_rows) {
  if (train_rows.empty()) fail(ErrorKind::Config, "fit_scalers needs at least one training row");
  ScalerSet s;
  for (const auto& span : m.layout) {
    if (!is_minmax_block(span.kind)) continue;
    for (std::size_t c = span.offset; c < span.offset + span.width; ++c) {
      ColumnRange r{m.values(train_rows[0], c), m.values(train_rows[0], c)};
      for (auto i : train_rows) {
        r.min = std::min(r.min, m.values(i, c));
        r.max = std::max(r.max, m.values(i, c));
      }
      s.columns.push_back(c);
      s.ranges.push_back(r);
    }
  }
  return s;
}

NodeFeatureMatrix apply_scalers(NodeFeatureMatrix m, const ScalerSet& s) {
  const std::uint64_t fp = s.fingerprint();
  if (m.scaled_with == fp) return m;
  if (m.scaled_with != 0) fail(ErrorKind::State, "matrix already scaled with a different scaler set");
  const std::size_t n = m.values.rows;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.values.row(i);
    for (std::size_t k = 0; k < s.columns.size(); ++k) {
      const auto [lo, hi] = s.ranges[k];
      double& x = row[s.columns[k]];
      x = hi > lo ? std::clamp((x - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    }
    for (const auto& span : m.layout) {
      if (is_minmax_block(span.kind)) continue;
      double norm2 = 0.0;
      for (std::size_t c = span.offset; c < span.offset + span.width; ++c) norm2 += row[c] * row[c];
      if (norm2 == 0.0) continue;
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t c = span.offset; c < span.offset + span.width; ++c) row[c] *= inv;
    }
  }
  m.scaled_with = fp;
  return m;
}

}  // namespace readmit::featurize
