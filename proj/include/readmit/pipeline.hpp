#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "readmit/config.hpp"

// Stage runner behind the command-line tool. Each stage writes its outputs
// and a manifest (config hash, seed, upstream hashes, content hash per
// output) under <artifact_dir>/manifests. A stage whose manifest matches the
// current config and whose outputs are intact is skipped unless forced;
// a missing or stale upstream manifest is a staleness error naming the
// stage to rerun.
namespace readmit::pipeline {

enum class Stage { Generate, Ingest, Featurize, Graph, Train, Grid, Ablate, Crossval, Report };

std::string_view stage_name(Stage stage);
Stage stage_from_name(std::string_view name);
std::vector<Stage> upstream_of(Stage stage);

// Hash of the settings a stage depends on, chained through its upstream
// stages. Hex string.
std::string config_hash(const config::RunConfig& cfg, Stage stage);

struct RunOptions {
  bool force = false;
  std::ostream* log = nullptr;
};

// Runs one stage; returns false when it was already up to date.
bool run_stage(Stage stage, const config::RunConfig& cfg, const RunOptions& options);

// generate, ingest, featurize, graph, train, ablate, crossval, report.
void run_all(const config::RunConfig& cfg, const RunOptions& options);

std::filesystem::path manifest_path(const config::RunConfig& cfg, Stage stage);
std::filesystem::path report_path(const config::RunConfig& cfg);

// FNV-1a over a file's bytes, hex.
std::string content_hash(const std::filesystem::path& path);

}  // namespace readmit::pipeline

namespace readmit::pipeline {

// In-memory pipeline up to the graph, shared by the stage runner and tests.
struct Prepared {
  ingest::Cohort cohort;
  std::vector<std::uint8_t> labels;
  evalstat::NodeMasks masks;
  std::vector<featurize::FeatureBlock> blocks;
  featurize::NodeFeatureMatrix features;  // scaled, for cfg.selection
  simgraph::SimilarityGraph graph;
};

std::vector<std::uint8_t> labels_of(const ingest::Cohort& cohort);

// Assembles the selected blocks and scales them with scalers fit on the
// train rows.
featurize::NodeFeatureMatrix scaled_features(const std::vector<featurize::FeatureBlock>& blocks,
                                             const featurize::BlockSelection& selection,
                                             const std::vector<std::int64_t>& admission_ids,
                                             std::span<const std::uint8_t> train_mask);

Prepared prepare(const config::RunConfig& cfg);
Prepared prepare(const config::RunConfig& cfg, const datagen::RawTables& tables);

}  // namespace readmit::pipeline
