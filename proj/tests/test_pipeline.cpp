#include <doctest.h>

#include <fstream>
#include <sstream>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/matrix_io.hpp"
#include "readmit/pipeline.hpp"
#include "test_support.hpp"

using namespace readmit;
using namespace readmit::pipeline;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

std::size_t data_rows(const std::filesystem::path& p) {
  csv::Reader r(p);
  std::vector<std::string> f;
  std::size_t n = 0;
  while (r.next(f)) ++n;
  return n - 1;
}

}  // namespace

TEST_CASE("stage names and dependencies") {
  for (auto s : {Stage::Generate, Stage::Train, Stage::Report}) CHECK(stage_from_name(stage_name(s)) == s);
  CHECK_THROWS_AS(stage_from_name("deploy"), Error);
  CHECK(upstream_of(Stage::Generate).empty());
  CHECK(upstream_of(Stage::Graph) == std::vector<Stage>{Stage::Featurize});

  testing::TempDir dir("pipe");
  auto a = testing::small_run(dir.path());
  auto b = a;
  b.tau = 0.95;
  CHECK(config_hash(a, Stage::Featurize) == config_hash(b, Stage::Featurize));
  CHECK(config_hash(a, Stage::Graph) != config_hash(b, Stage::Graph));
  CHECK(config_hash(a, Stage::Train) != config_hash(b, Stage::Train));
  CHECK(config_hash(a, Stage::Ablate) != config_hash(b, Stage::Ablate));
  CHECK(config_hash(a, Stage::Generate) == config_hash(b, Stage::Generate));
  b = a;
  b.set_seed(2);
  CHECK(config_hash(a, Stage::Generate) != config_hash(b, Stage::Generate));
}

TEST_CASE("missing upstream artifacts are staleness errors") {
  testing::TempDir dir("pipe");
  const auto cfg = testing::small_run(dir.path());
  CHECK(kind_of([&] { run_stage(Stage::Train, cfg, {}); }) == ErrorKind::Staleness);
  CHECK(exit_code_for(ErrorKind::Staleness) == 3);
  CHECK(run_stage(Stage::Generate, cfg, {}));
  CHECK(kind_of([&] { run_stage(Stage::Featurize, cfg, {}); }) == ErrorKind::Staleness);
}

TEST_CASE("full run, idempotence and invalidation") {
  testing::TempDir dir("pipe");
  auto cfg = testing::small_run(dir.path());
  std::ostringstream log;
  run_all(cfg, {.log = &log});
  CHECK(log.str().find("graphsage epoch 1 ") != std::string::npos);

  const auto report = slurp(report_path(cfg));
  CHECK(report.find("\"ablate\"") != std::string::npos);
  CHECK(report.find("\"crossval\"") != std::string::npos);
  CHECK(report.find("\"grid\"") == std::string::npos);
  CHECK(report.find(dir.path().string()) == std::string::npos);

  for (auto s : {Stage::Generate, Stage::Ingest, Stage::Featurize, Stage::Graph, Stage::Train, Stage::Ablate,
                 Stage::Crossval, Stage::Report}) {
    CAPTURE(stage_name(s));
    CHECK_FALSE(run_stage(s, cfg, {}));
  }
  CHECK(run_stage(Stage::Report, cfg, {.force = true}));
  CHECK(slurp(report_path(cfg)) == report);

  // Every table carries the stage hash as a leading comment.
  const std::string gen_hash = "# config_hash=" + config_hash(cfg, Stage::Generate);
  CHECK(first_line(cfg.data_dir / "admissions.csv") == gen_hash);
  CHECK(first_line(cfg.data_dir / "labevents.csv") == gen_hash);
  CHECK(first_line(cfg.artifact_dir / "cohort.csv") == "# config_hash=" + config_hash(cfg, Stage::Ingest));
  CHECK(first_line(cfg.artifact_dir / "ablate" / "ablation.csv") ==
        "# config_hash=" + config_hash(cfg, Stage::Ablate));

  CHECK(data_rows(cfg.artifact_dir / "ablate" / "ablation.csv") == 6);
  CHECK(data_rows(cfg.artifact_dir / "crossval" / "table3_models.csv") == 3);
  CHECK(data_rows(cfg.artifact_dir / "crossval" / "table4_normality.csv") == 6);
  CHECK(data_rows(cfg.artifact_dir / "crossval" / "table5_ttests.csv") == 6);
  CHECK(data_rows(cfg.artifact_dir / "graph" / "threshold_sweep.csv") == 4);

  // A modified output invalidates its stage, and downstream stages refuse to run.
  {
    std::ofstream out(cfg.artifact_dir / "cohort.csv", std::ios::app);
    out << "\n";
  }
  CHECK(kind_of([&] { run_stage(Stage::Featurize, cfg, {}); }) == ErrorKind::Staleness);
  CHECK(run_stage(Stage::Ingest, cfg, {}));
  // Regenerated content is identical, so nothing downstream has to change.
  CHECK_FALSE(run_stage(Stage::Featurize, cfg, {}));

  // Changing the threshold leaves features alone but stales the graph.
  cfg.tau = 0.95;
  CHECK_FALSE(run_stage(Stage::Featurize, cfg, {}));
  CHECK(kind_of([&] { run_stage(Stage::Train, cfg, {}); }) == ErrorKind::Staleness);
  CHECK(run_stage(Stage::Graph, cfg, {}));
  CHECK(run_stage(Stage::Train, cfg, {}));
}

TEST_CASE("grid stage and report inclusion") {
  testing::TempDir dir("pipe");
  const auto cfg = testing::small_run(dir.path());
  for (auto s : {Stage::Generate, Stage::Ingest, Stage::Featurize, Stage::Graph, Stage::Train}) run_stage(s, cfg, {});
  run_stage(Stage::Grid, cfg, {});
  CHECK(data_rows(cfg.artifact_dir / "grid" / "grid.csv") == 2);
  run_stage(Stage::Report, cfg, {});
  const auto report = slurp(report_path(cfg));
  CHECK(report.find("\"grid\"") != std::string::npos);
  CHECK(report.find("\"ablate\"") == std::string::npos);
  // A new optional input makes the report stale.
  run_stage(Stage::Ablate, cfg, {});
  CHECK(run_stage(Stage::Report, cfg, {}));
}

TEST_CASE("feature files round trip") {
  testing::TempDir dir("pipe");
  const auto cfg = testing::small_run(dir.path());
  for (auto s : {Stage::Generate, Stage::Ingest, Stage::Featurize}) run_stage(s, cfg, {});
  const auto prepared = prepare(cfg);
  const auto stored = matrix_io::read_matrix(cfg.artifact_dir / "features" / "node_features.bin");
  REQUIRE(stored.same_shape(prepared.features.values));
  for (std::size_t i = 0; i < stored.size(); ++i) {
    CHECK(stored.data[i] == doctest::Approx(prepared.features.values.data[i]).epsilon(1e-6));
  }
  CHECK(matrix_io::read_ids(cfg.artifact_dir / "features" / "admission_ids.txt") == prepared.features.admission_ids);
}
