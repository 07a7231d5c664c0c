#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "readmit/config.hpp"
#include "readmit/error.hpp"
#include "readmit/pipeline.hpp"

namespace {

struct Flags {
  std::string config_path;
  bool force = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "run configuration file")->check(CLI::ExistingFile);
  cmd->add_flag("--force", f.force, "rerun even when outputs are up to date");
  cmd->add_option("--threads", f.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "override the configured seed");
}

readmit::config::RunConfig resolve(const Flags& f) {
  readmit::config::RunConfig cfg;
  if (!f.config_path.empty()) cfg = readmit::config::load_run_config(f.config_path);
  if (f.seed) cfg.set_seed(*f.seed);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using readmit::pipeline::Stage;
  CLI::App app{"30-day readmission pipeline on synthetic EHR tables: generate, featurize, build the "
               "admission similarity graph, train GraphSAGE and baselines, compare models."};
  app.require_subcommand(1);
  Flags flags;

  const std::pair<Stage, const char*> commands[] = {
      {Stage::Generate, "write synthetic raw tables"},
      {Stage::Ingest, "apply cohort filters, derive temporal fields and labels"},
      {Stage::Featurize, "encode feature blocks and the scaled node matrix"},
      {Stage::Graph, "cosine range search graph and threshold sweep"},
      {Stage::Train, "train GraphSAGE, MLP and LR on the primary split"},
      {Stage::Grid, "GraphSAGE hyperparameter grid search"},
      {Stage::Ablate, "feature-combination ablation"},
      {Stage::Crossval, "k-fold comparison with normality and t-tests"},
      {Stage::Report, "collect stage summaries into report.json"},
  };
  std::optional<Stage> selected;
  bool run_all = false;
  for (const auto& [stage, help] : commands) {
    auto* cmd = app.add_subcommand(std::string(readmit::pipeline::stage_name(stage)), help);
    add_common(cmd, flags);
    cmd->callback([&selected, s = stage] { selected = s; });
  }
  auto* all = app.add_subcommand("all", "run every stage except grid");
  add_common(all, flags);
  all->callback([&run_all] { run_all = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (flags.threads > 0) omp_set_num_threads(flags.threads);
    const auto cfg = resolve(flags);
    readmit::pipeline::RunOptions options{flags.force, &std::cout};
    if (run_all) {
      readmit::pipeline::run_all(cfg, options);
    } else {
      readmit::pipeline::run_stage(*selected, cfg, options);
    }
  } catch (const readmit::Error& e) {
    std::cerr << "error (" << readmit::to_string(e.kind()) << "): " << e.what() << '\n';
    return readmit::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
