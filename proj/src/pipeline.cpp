#include "readmit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/matrix_io.hpp"
#include "readmit/rng.hpp"

namespace readmit::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using featurize::BlockKind;

namespace {

constexpr Stage kAllStages[] = {Stage::Generate, Stage::Ingest,   Stage::Featurize, Stage::Graph, Stage::Train,
                                Stage::Grid,     Stage::Ablate, Stage::Crossval,  Stage::Report};

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string p_value(double p) {
  if (p < evalstat::kPValueFloor) return "<1e-12";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4e", p);
  return buf;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string sage_text(const models::SageConfig& s) {
  return "layers=" + std::to_string(s.n_layers) + ";hidden=" + std::to_string(s.hidden) +
         ";aggregator=" + std::string(neuro::aggregator_name(s.aggregator)) + ";lr=" + real(s.learning_rate) +
         ";max_epochs=" + std::to_string(s.max_epochs) + ";patience=" + std::to_string(s.patience) +
         ";seed=" + std::to_string(s.seed);
}

std::string mlp_text(const models::MlpConfig& m) {
  std::string s = "hidden=";
  for (int h : m.hidden_layers) s += std::to_string(h) + ",";
  return s + ";lr=" + real(m.learning_rate) + ";max_epochs=" + std::to_string(m.max_epochs) +
         ";patience=" + std::to_string(m.patience) + ";seed=" + std::to_string(m.seed);
}

std::string stage_text(const config::RunConfig& c, Stage stage) {
  switch (stage) {
    case Stage::Generate: {
      const auto& g = c.gen;
      return "seed=" + std::to_string(g.seed) + ";n_patients=" + std::to_string(g.n_patients) +
             ";mean_adm=" + real(g.mean_admissions_per_patient) + ";base=" + real(g.readmission_base_rate) +
             ";homophily=" + real(g.homophily_strength) + ";labs=" + std::to_string(g.n_lab_items) +
             ";diag=" + std::to_string(g.n_icd_diag) + ";proc=" + std::to_string(g.n_icd_proc) +
             ";note_scale=" + real(g.note_length_scale) + ";missing=" + real(g.missing_modality_fraction) +
             ";death=" + real(g.death_fraction) + ";concentration=" + real(g.demographic_concentration);
    }
    case Stage::Ingest: return {};
    case Stage::Featurize:
      return "embed_dim=" + std::to_string(c.features.embed_dim) + ";embed_seed=" +
             std::to_string(c.features.embed_seed) + ";lab_items=" + std::to_string(c.features.n_lab_items) +
             ";selection=" + c.selection.label() + ";split=" + real(c.split.train) + "," + real(c.split.val) + "," +
             real(c.split.test) + ";split_seed=" + std::to_string(c.split.seed);
    case Stage::Graph: return "tau=" + real(c.tau);
    case Stage::Train:
      return "sage{" + sage_text(c.sage) + "};mlp{" + mlp_text(c.mlp) + "};logreg{" + mlp_text(c.logreg()) + "}";
    case Stage::Grid: {
      std::string s;
      for (const auto& cfg : c.grid.configs()) s += sage_text(cfg) + "|";
      return s;
    }
    case Stage::Ablate: return "tau=" + real(c.tau) + ";sage{" + sage_text(c.sage) + "}";
    case Stage::Crossval:
      return "folds=" + std::to_string(c.folds) + ";paired=" + (c.paired ? "1" : "0") + ";seed=" +
             std::to_string(c.seed) + ";sage{" + sage_text(c.sage) + "};mlp{" + mlp_text(c.mlp) + "};logreg{" +
             mlp_text(c.logreg()) + "}";
    case Stage::Report: return {};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Paths

fs::path art(const config::RunConfig& c, const std::string& rel) { return c.artifact_dir / rel; }
fs::path block_path(const config::RunConfig& c, BlockKind k) {
  return art(c, "features/" + std::string(featurize::block_name(k)) + ".bin");
}
fs::path ids_path(const config::RunConfig& c) { return art(c, "features/admission_ids.txt"); }
fs::path node_features_path(const config::RunConfig& c) { return art(c, "features/node_features.bin"); }
fs::path cohort_path(const config::RunConfig& c) { return art(c, "cohort.csv"); }
fs::path graph_path(const config::RunConfig& c) { return art(c, "graph/graph.bin"); }
fs::path summary_path(const config::RunConfig& c, Stage s) {
  if (s == Stage::Generate) return c.data_dir / "summary.json";
  return art(c, std::string(stage_name(s)) + "/summary.json");
}

const char* const kRawTables[] = {"admissions.csv",     "patients.csv",        "diagnoses_icd.csv",
                                  "procedures_icd.csv", "labevents.csv",       "discharge_notes.csv",
                                  "code_text_map.csv"};

// ---------------------------------------------------------------------------
// Manifests

json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Corruption, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

bool fresh(const config::RunConfig& cfg, Stage stage);

// Why a stage is not fresh; empty when it is.
std::string staleness(const config::RunConfig& cfg, Stage stage) {
  const fs::path mp = manifest_path(cfg, stage);
  if (!fs::exists(mp)) return "no manifest";
  json m;
  try {
    m = read_json(mp);
  } catch (const Error&) {
    return "unreadable manifest";
  }
  if (m.value("config_hash", "") != config_hash(cfg, stage)) return "config changed";
  const json outputs = m.value("outputs", json::object());
  const json inputs = m.value("inputs", json::object());
  for (const auto& [path, hash] : outputs.items()) {
    if (!fs::exists(path)) return "missing output " + path;
    if (content_hash(path) != hash.get<std::string>()) return "modified output " + path;
  }
  for (const auto& [name, hash] : inputs.items()) {
    const fs::path up = manifest_path(cfg, stage_from_name(name));
    if (!fs::exists(up) || content_hash(up) != hash.get<std::string>()) return "upstream '" + name + "' changed";
  }
  for (Stage up : upstream_of(stage)) {
    if (!fresh(cfg, up)) return "upstream '" + std::string(stage_name(up)) + "' is stale";
  }
  if (stage == Stage::Report) {
    for (Stage s : {Stage::Grid, Stage::Ablate, Stage::Crossval}) {
      if (fresh(cfg, s) != inputs.contains(std::string(stage_name(s)))) return "optional inputs changed";
    }
  }
  return {};
}

bool fresh(const config::RunConfig& cfg, Stage stage) { return staleness(cfg, stage).empty(); }

void require_fresh(const config::RunConfig& cfg, Stage stage) {
  const std::string why = staleness(cfg, stage);
  if (!why.empty()) {
    const std::string name(stage_name(stage));
    fail(ErrorKind::Staleness,
         "artifacts of stage '" + name + "' are missing or stale (" + why + "); rerun `readmit " + name + "`");
  }
}

void write_manifest(const config::RunConfig& cfg, Stage stage, const std::vector<Stage>& inputs,
                    const std::vector<fs::path>& outputs) {
  json m;
  m["stage"] = stage_name(stage);
  m["config_hash"] = config_hash(cfg, stage);
  m["seed"] = cfg.seed;
  json in = json::object();
  for (Stage s : inputs) in[std::string(stage_name(s))] = content_hash(manifest_path(cfg, s));
  m["inputs"] = in;
  json out = json::object();
  for (const auto& p : outputs) out[p.generic_string()] = content_hash(p);
  m["outputs"] = out;
  write_json(manifest_path(cfg, stage), m);
}

std::string hash_comment(const config::RunConfig& cfg, Stage stage) {
  return "config_hash=" + config_hash(cfg, stage);
}

// ---------------------------------------------------------------------------
// Shared loaders

std::vector<featurize::FeatureBlock> load_blocks(const config::RunConfig& cfg, std::size_t n_rows) {
  std::vector<featurize::FeatureBlock> blocks;
  for (BlockKind k : featurize::kAllBlocks) {
    featurize::FeatureBlock b;
    b.kind = k;
    b.values = matrix_io::read_matrix(block_path(cfg, k));
    if (b.values.rows != n_rows) {
      fail(ErrorKind::Alignment, "block " + std::string(featurize::block_name(k)) + " has " +
                                     std::to_string(b.values.rows) + " rows, cohort has " + std::to_string(n_rows));
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<std::int64_t> admission_ids(const ingest::Cohort& cohort) {
  std::vector<std::int64_t> ids;
  ids.reserve(cohort.records.size());
  for (const auto& r : cohort.records) ids.push_back(r.admission_id);
  return ids;
}

struct Loaded {
  ingest::Cohort cohort;
  std::vector<std::uint8_t> labels;
  evalstat::NodeMasks masks;
  Matrix x;
  simgraph::SimilarityGraph graph;
};

Loaded load_for_training(const config::RunConfig& cfg, bool with_graph) {
  Loaded l;
  l.cohort = ingest::read_cohort_csv(cohort_path(cfg));
  l.labels = labels_of(l.cohort);
  l.masks = evalstat::make_splits(l.cohort, cfg.split);
  l.x = matrix_io::read_matrix(node_features_path(cfg));
  if (matrix_io::read_ids(ids_path(cfg)) != admission_ids(l.cohort)) {
    fail(ErrorKind::Alignment, "feature rows do not match the cohort admission order");
  }
  if (with_graph) {
    l.graph = simgraph::load_graph(graph_path(cfg));
    if (l.graph.n_nodes != l.x.rows) fail(ErrorKind::Alignment, "graph node count differs from feature rows");
  }
  return l;
}

models::EpochLogger epoch_logger(std::ostream* log, const std::string& model, std::ostream* table) {
  return [log, model, table](const models::EpochRecord& r) {
    if (log) {
      *log << model << " epoch " << r.epoch << " train_loss=" << fixed(r.train_loss, 6)
           << " val_loss=" << fixed(r.val_loss, 6) << " val_auroc=" << fixed(r.val_auroc) << '\n';
    }
    if (table) {
      *table << model << ',' << r.epoch << ',' << real(r.train_loss) << ',' << real(r.val_loss) << ','
             << (std::isnan(r.val_auroc) ? std::string("nan") : real(r.val_auroc)) << '\n';
    }
  };
}

json result_json(const models::TrainResult& r) {
  json j;
  j["model"] = r.model;
  j["best_epoch"] = r.best_epoch;
  j["stopped_epoch"] = r.stopped_epoch;
  j["val_auroc"] = number(r.val_auroc);
  j["val_bacc"] = number(r.val_bacc);
  j["test_auroc"] = number(r.test_auroc);
  j["test_bacc"] = number(r.test_bacc);
  return j;
}

std::string display_name(const std::string& kind) {
  if (kind == "graphsage") return "GraphSAGE";
  if (kind == "mlp") return "MLP";
  if (kind == "logreg") return "LR";
  return kind;
}

// ---------------------------------------------------------------------------
// Stages

void stage_generate(const config::RunConfig& cfg, std::ostream* log) {
  const auto tables = datagen::generate(cfg.gen, nullptr);
  datagen::write_tables(tables, cfg.data_dir, hash_comment(cfg, Stage::Generate));
  json s;
  s["patients"] = tables.patients.size();
  s["admissions"] = tables.admissions.size();
  s["diagnoses"] = tables.diagnoses_icd.size();
  s["procedures"] = tables.procedures_icd.size();
  s["labevents"] = tables.labevents.size();
  s["discharge_notes"] = tables.discharge_notes.size();
  write_json(summary_path(cfg, Stage::Generate), s);
  std::vector<fs::path> outs;
  for (const char* f : kRawTables) outs.push_back(cfg.data_dir / f);
  outs.push_back(summary_path(cfg, Stage::Generate));
  write_manifest(cfg, Stage::Generate, {}, outs);
  if (log) *log << "generate: " << tables.admissions.size() << " admissions for " << tables.patients.size()
                << " patients in " << cfg.data_dir.string() << '\n';
}

void stage_ingest(const config::RunConfig& cfg, std::ostream* log) {
  const auto tables = datagen::read_tables(cfg.data_dir);
  const auto cohort = ingest::prepare_cohort(tables);
  fs::create_directories(cfg.artifact_dir);
  ingest::write_cohort_csv(cohort, cohort_path(cfg), hash_comment(cfg, Stage::Ingest));
  const auto& r = cohort.report;
  json s;
  s["admissions_in"] = r.admissions_in;
  s["removed_death"] = r.removed_death;
  s["removed_no_note"] = r.removed_no_note;
  s["cohort_admissions"] = r.cohort_admissions;
  s["cohort_patients"] = r.cohort_patients;
  s["positives"] = r.positives;
  write_json(summary_path(cfg, Stage::Ingest), s);
  write_manifest(cfg, Stage::Ingest, {Stage::Generate}, {cohort_path(cfg), summary_path(cfg, Stage::Ingest)});
  if (log) *log << "ingest: " << r.cohort_admissions << " admissions (" << r.positives << " readmitted within 30 days)\n";
}

void stage_featurize(const config::RunConfig& cfg, std::ostream* log) {
  const auto tables = datagen::read_tables(cfg.data_dir);
  const auto cohort = ingest::read_cohort_csv(cohort_path(cfg));
  featurize::LabReport lab;
  const auto encoded = featurize::encode_all(tables, cohort, cfg.features, &lab);
  fs::create_directories(art(cfg, "features"));
  std::vector<fs::path> outs;
  json widths = json::object();
  json missing = json::object();
  for (const auto& b : encoded) {
    matrix_io::write_matrix(block_path(cfg, b.kind), b.values);
    outs.push_back(block_path(cfg, b.kind));
    widths[std::string(featurize::block_name(b.kind))] = b.values.cols;
    missing[std::string(featurize::block_name(b.kind))] =
        std::count(b.missing.begin(), b.missing.end(), std::uint8_t{1});
  }
  const auto ids = admission_ids(cohort);
  matrix_io::write_ids(ids_path(cfg), ids);
  outs.push_back(ids_path(cfg));

  // Downstream stages read the stored (float32) blocks, so scale those.
  const auto blocks = load_blocks(cfg, cohort.records.size());
  const auto masks = evalstat::make_splits(cohort, cfg.split);
  const auto node = scaled_features(blocks, cfg.selection, ids, masks.train);
  matrix_io::write_matrix(node_features_path(cfg), node.values);
  outs.push_back(node_features_path(cfg));

  const auto labels = labels_of(cohort);
  json splits = json::object();
  const std::pair<const char*, const std::vector<std::uint8_t>*> parts[] = {
      {"train", &masks.train}, {"val", &masks.val}, {"test", &masks.test}};
  for (const auto& [name, mask] : parts) {
    std::size_t n = 0, pos = 0;
    for (std::size_t i = 0; i < mask->size(); ++i) {
      if (!(*mask)[i]) continue;
      ++n;
      pos += labels[i];
    }
    splits[name] = {{"admissions", n}, {"positives", pos}};
  }
  json s;
  s["selection"] = cfg.selection.label();
  s["block_widths"] = widths;
  s["missing_rows"] = missing;
  s["node_feature_width"] = node.values.cols;
  s["lab_events_used"] = lab.events_used;
  s["lab_events_dropped"] = lab.events_dropped;
  s["splits"] = splits;
  write_json(summary_path(cfg, Stage::Featurize), s);
  outs.push_back(summary_path(cfg, Stage::Featurize));
  write_manifest(cfg, Stage::Featurize, {Stage::Generate, Stage::Ingest}, outs);
  if (log) *log << "featurize: " << node.values.rows << " x " << node.values.cols << " node features ("
                << cfg.selection.label() << ")\n";
}

void stage_graph(const config::RunConfig& cfg, std::ostream* log) {
  const Matrix x = matrix_io::read_matrix(node_features_path(cfg));
  fs::create_directories(art(cfg, "graph"));
  const fs::path sweep_path = art(cfg, "graph/threshold_sweep.csv");
  csv::Writer sweep(sweep_path);
  sweep.comment(hash_comment(cfg, Stage::Graph));
  sweep.row({"tau", "edges", "average_degree"});
  json sweep_json = json::array();
  simgraph::SimilarityGraph chosen;
  std::vector<double> taus(std::begin(config::kReferenceThresholds), std::end(config::kReferenceThresholds));
  if (std::find(taus.begin(), taus.end(), cfg.tau) == taus.end()) taus.push_back(cfg.tau);
  for (double tau : taus) {
    auto g = simgraph::range_search(x, tau, cfg.tile);
    const auto st = simgraph::graph_stats(g);
    sweep.row({fixed(tau, 2), std::to_string(st.edge_count), fixed(st.average_degree)});
    sweep_json.push_back({{"tau", tau}, {"edges", st.edge_count}, {"average_degree", st.average_degree}});
    if (log) *log << "graph: tau=" << fixed(tau, 2) << " edges=" << st.edge_count
                  << " average_degree=" << fixed(st.average_degree) << '\n';
    if (tau == cfg.tau) chosen = std::move(g);
  }
  sweep.close();
  simgraph::save_graph(chosen, graph_path(cfg));
  const auto st = simgraph::graph_stats(chosen);
  json s;
  s["tau"] = cfg.tau;
  s["nodes"] = chosen.n_nodes;
  s["edges"] = st.edge_count;
  s["average_degree"] = st.average_degree;
  s["built_on"] = "scaled node features";
  s["sweep"] = sweep_json;
  write_json(summary_path(cfg, Stage::Graph), s);
  write_manifest(cfg, Stage::Graph, {Stage::Featurize}, {graph_path(cfg), sweep_path, summary_path(cfg, Stage::Graph)});
}

void stage_train(const config::RunConfig& cfg, std::ostream* log) {
  const Loaded l = load_for_training(cfg, true);
  fs::create_directories(art(cfg, "train"));
  const fs::path epochs_path = art(cfg, "train/epochs.csv");
  std::ofstream epochs(epochs_path, std::ios::binary);
  epochs << "# " << hash_comment(cfg, Stage::Train) << "\nmodel,epoch,train_loss,val_loss,val_auroc\n";

  models::SageModel sage(cfg.sage, l.x.cols, l.graph);
  const auto rs = models::train(sage, l.x, l.labels, l.masks,
                                {cfg.sage.learning_rate, cfg.sage.max_epochs, cfg.sage.patience,
                                 epoch_logger(log, "graphsage", &epochs)});
  const auto rm = models::train_mlp(cfg.mlp, l.x, l.labels, l.masks, epoch_logger(log, "mlp", &epochs));
  const auto rl = models::train_mlp(cfg.logreg(), l.x, l.labels, l.masks, epoch_logger(log, "logreg", &epochs));
  epochs.close();

  json hp;
  hp["layers"] = cfg.sage.n_layers;
  hp["hidden"] = cfg.sage.hidden;
  hp["aggregator"] = neuro::aggregator_name(cfg.sage.aggregator);
  hp["learning_rate"] = cfg.sage.learning_rate;
  hp["max_epochs"] = cfg.sage.max_epochs;
  hp["patience"] = cfg.sage.patience;
  hp["in_dim"] = l.x.cols;
  const fs::path stem = art(cfg, "train/graphsage");
  models::save_checkpoint(sage, hp.dump(), cfg.sage.seed, stem);

  const fs::path metrics_path = art(cfg, "train/metrics.csv");
  csv::Writer w(metrics_path);
  w.comment(hash_comment(cfg, Stage::Train));
  w.row({"model", "val_auroc", "val_bacc", "test_auroc", "test_bacc", "best_epoch", "stopped_epoch"});
  json models_json = json::array();
  for (const auto* r : {&rs, &rm, &rl}) {
    w.row({display_name(r->model), fixed(r->val_auroc), fixed(r->val_bacc), fixed(r->test_auroc),
           fixed(r->test_bacc), std::to_string(r->best_epoch), std::to_string(r->stopped_epoch)});
    models_json.push_back(result_json(*r));
    if (log) *log << "train: " << display_name(r->model) << " test AUROC " << fixed(r->test_auroc) << " BAcc "
                  << fixed(r->test_bacc) << " (best epoch " << r->best_epoch << ")\n";
  }
  w.close();
  json s;
  s["graphsage"] = {{"layers", cfg.sage.n_layers},
                    {"hidden", cfg.sage.hidden},
                    {"aggregator", neuro::aggregator_name(cfg.sage.aggregator)},
                    {"learning_rate", cfg.sage.learning_rate},
                    {"parameters", sage.parameter_count()}};
  s["models"] = models_json;
  write_json(summary_path(cfg, Stage::Train), s);
  write_manifest(cfg, Stage::Train, {Stage::Ingest, Stage::Featurize, Stage::Graph},
                 {epochs_path, metrics_path, fs::path(stem.string() + ".json"), fs::path(stem.string() + ".bin"),
                  summary_path(cfg, Stage::Train)});
}

void stage_grid(const config::RunConfig& cfg, std::ostream* log) {
  const Loaded l = load_for_training(cfg, true);
  const std::size_t total = cfg.grid.configs().size();
  const auto rows = models::grid_search(cfg.grid, l.graph, l.x, l.labels, l.masks,
                                        [&](std::size_t i, const models::GridRow& r) {
                                          if (log) *log << "grid: " << i + 1 << "/" << total << ' '
                                                        << r.config.label() << " val_auroc=" << fixed(r.val_auroc)
                                                        << '\n';
                                        });
  fs::create_directories(art(cfg, "grid"));
  const fs::path path = art(cfg, "grid/grid.csv");
  models::write_grid_csv(rows, path, config_hash(cfg, Stage::Grid));
  json s;
  s["runs"] = rows.size();
  const auto& best = rows.front();
  s["best"] = {{"layers", best.config.n_layers},
               {"hidden", best.config.hidden},
               {"aggregator", neuro::aggregator_name(best.config.aggregator)},
               {"learning_rate", best.config.learning_rate},
               {"val_auroc", number(best.val_auroc)},
               {"test_auroc", number(best.test_auroc)},
               {"test_bacc", number(best.test_bacc)}};
  write_json(summary_path(cfg, Stage::Grid), s);
  write_manifest(cfg, Stage::Grid, {Stage::Ingest, Stage::Featurize, Stage::Graph}, {path, summary_path(cfg, Stage::Grid)});
}

struct AblationRow {
  std::string combination;
  double auroc;
  double bacc;
  double val_auroc;
  std::size_t edges;
};

void stage_ablate(const config::RunConfig& cfg, std::ostream* log) {
  const auto cohort = ingest::read_cohort_csv(cohort_path(cfg));
  const auto labels = labels_of(cohort);
  const auto masks = evalstat::make_splits(cohort, cfg.split);
  const auto ids = admission_ids(cohort);
  if (matrix_io::read_ids(ids_path(cfg)) != ids) {
    fail(ErrorKind::Alignment, "feature rows do not match the cohort admission order");
  }
  const auto blocks = load_blocks(cfg, cohort.records.size());
  std::vector<AblationRow> rows;
  for (const auto& sel : featurize::ablation_selections()) {
    const auto x = scaled_features(blocks, sel, ids, masks.train);
    const auto g = simgraph::range_search(x.values, cfg.tau, cfg.tile);
    const auto r = models::train_sage(cfg.sage, g, x.values, labels, masks);
    rows.push_back({sel.label(), r.test_auroc, r.test_bacc, r.val_auroc, simgraph::graph_stats(g).edge_count});
    if (log) *log << "ablate: " << sel.label() << " test AUROC " << fixed(r.test_auroc) << " BAcc "
                  << fixed(r.test_bacc) << '\n';
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) { return a.auroc > b.auroc; });
  fs::create_directories(art(cfg, "ablate"));
  const fs::path path = art(cfg, "ablate/ablation.csv");
  csv::Writer w(path);
  w.comment(hash_comment(cfg, Stage::Ablate));
  w.row({"combination", "auroc", "bacc"});
  json rows_json = json::array();
  for (const auto& r : rows) {
    w.row({r.combination, fixed(r.auroc), fixed(r.bacc)});
    rows_json.push_back({{"combination", r.combination},
                         {"auroc", number(r.auroc)},
                         {"bacc", number(r.bacc)},
                         {"val_auroc", number(r.val_auroc)},
                         {"edges", r.edges}});
  }
  w.close();
  json s;
  s["rows"] = rows_json;
  write_json(summary_path(cfg, Stage::Ablate), s);
  write_manifest(cfg, Stage::Ablate, {Stage::Ingest, Stage::Featurize}, {path, summary_path(cfg, Stage::Ablate)});
}

void stage_crossval(const config::RunConfig& cfg, std::ostream* log) {
  const Loaded l = load_for_training(cfg, true);
  const auto plan = evalstat::make_folds(l.cohort, cfg.folds, cfg.seed);
  const std::vector<std::string> names = {"GraphSAGE", "MLP", "LR"};
  std::map<std::string, evalstat::FoldMetrics> metrics;
  fs::create_directories(art(cfg, "crossval"));
  const fs::path folds_path = art(cfg, "crossval/folds.csv");
  csv::Writer fw(folds_path);
  fw.comment(hash_comment(cfg, Stage::Crossval));
  fw.row({"fold", "model", "auroc", "bacc"});
  for (int f = 0; f < plan.k; ++f) {
    const auto masks = plan.masks(f);
    const models::TrainResult results[] = {models::train_sage(cfg.sage, l.graph, l.x, l.labels, masks),
                                           models::train_mlp(cfg.mlp, l.x, l.labels, masks),
                                           models::train_mlp(cfg.logreg(), l.x, l.labels, masks)};
    for (std::size_t m = 0; m < names.size(); ++m) {
      metrics[names[m]]["AUROC"].push_back(results[m].test_auroc);
      metrics[names[m]]["BAcc"].push_back(results[m].test_bacc);
      fw.row({std::to_string(f), names[m], real(results[m].test_auroc), real(results[m].test_bacc)});
    }
    if (log) *log << "crossval: fold " << f + 1 << "/" << plan.k << " AUROC GraphSAGE "
                  << fixed(results[0].test_auroc) << " MLP " << fixed(results[1].test_auroc) << " LR "
                  << fixed(results[2].test_auroc) << '\n';
  }
  fw.close();
  std::vector<std::pair<std::string, evalstat::FoldMetrics>> ordered;
  for (const auto& n : names) ordered.emplace_back(n, metrics[n]);
  const auto report = evalstat::compare_models(ordered, cfg.paired);

  auto mean_sd = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  };
  const fs::path t3 = art(cfg, "crossval/table3_models.csv");
  const fs::path t4 = art(cfg, "crossval/table4_normality.csv");
  const fs::path t5 = art(cfg, "crossval/table5_ttests.csv");
  json s;
  {
    csv::Writer w(t3);
    w.comment(hash_comment(cfg, Stage::Crossval));
    w.row({"model", "auroc_mean", "auroc_sd", "bacc_mean", "bacc_sd"});
    json rows = json::array();
    for (const auto& n : names) {
      const auto [am, as] = mean_sd(metrics[n]["AUROC"]);
      const auto [bm, bs] = mean_sd(metrics[n]["BAcc"]);
      w.row({n, fixed(am), fixed(as), fixed(bm), fixed(bs)});
      rows.push_back({{"model", n}, {"auroc_mean", number(am)}, {"auroc_sd", number(as)},
                      {"bacc_mean", number(bm)}, {"bacc_sd", number(bs)}});
    }
    s["models"] = rows;
  }
  {
    csv::Writer w(t4);
    w.comment(hash_comment(cfg, Stage::Crossval));
    w.row({"model", "metric", "w", "p", "normal"});
    json rows = json::array();
    for (const auto& e : report.normality) {
      w.row({e.model, e.metric, fixed(e.result.w, 5), fixed(e.result.p, 5), e.normal ? "yes" : "no"});
      rows.push_back({{"model", e.model}, {"metric", e.metric}, {"w", number(e.result.w)},
                      {"p", number(e.result.p)}, {"normal", e.normal}});
    }
    s["normality"] = rows;
  }
  {
    csv::Writer w(t5);
    w.comment(hash_comment(cfg, Stage::Crossval));
    w.row({"comparison", "metric", "statistic", "p", "significant"});
    json rows = json::array();
    for (const auto& e : report.comparisons) {
      const std::string label = e.model_a + " vs. " + e.model_b;
      const std::string stat = std::isinf(e.result.statistic) ? (e.result.statistic > 0 ? "inf" : "-inf")
                                                              : fixed(e.result.statistic);
      w.row({label, e.metric, stat, p_value(e.result.p), e.significant ? "yes" : "no"});
      rows.push_back({{"comparison", label}, {"metric", e.metric}, {"statistic", number(e.result.statistic)},
                      {"p", p_value(e.result.p)}, {"significant", e.significant}});
    }
    s["ttests"] = rows;
  }
  s["folds"] = plan.k;
  s["paired"] = cfg.paired;
  write_json(summary_path(cfg, Stage::Crossval), s);
  write_manifest(cfg, Stage::Crossval, {Stage::Ingest, Stage::Featurize, Stage::Graph},
                 {folds_path, t3, t4, t5, summary_path(cfg, Stage::Crossval)});
}

void stage_report(const config::RunConfig& cfg, std::ostream* log) {
  std::vector<Stage> inputs = {Stage::Generate, Stage::Ingest, Stage::Featurize, Stage::Graph, Stage::Train};
  for (Stage s : {Stage::Grid, Stage::Ablate, Stage::Crossval}) {
    if (fresh(cfg, s)) inputs.push_back(s);
  }
  json r;
  r["seed"] = cfg.seed;
  json hashes = json::object();
  for (Stage s : inputs) hashes[std::string(stage_name(s))] = config_hash(cfg, s);
  r["config_hashes"] = hashes;
  for (Stage s : inputs) r[std::string(stage_name(s))] = read_json(summary_path(cfg, s));
  write_json(report_path(cfg), r);
  write_manifest(cfg, Stage::Report, inputs, {report_path(cfg)});
  if (log) *log << "report: " << report_path(cfg).string() << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Generate: return "generate";
    case Stage::Ingest: return "ingest";
    case Stage::Featurize: return "featurize";
    case Stage::Graph: return "graph";
    case Stage::Train: return "train";
    case Stage::Grid: return "grid";
    case Stage::Ablate: return "ablate";
    case Stage::Crossval: return "crossval";
    case Stage::Report: return "report";
  }
  return "?";
}

Stage stage_from_name(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  fail(ErrorKind::Config, "unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> upstream_of(Stage stage) {
  switch (stage) {
    case Stage::Generate: return {};
    case Stage::Ingest: return {Stage::Generate};
    case Stage::Featurize: return {Stage::Generate, Stage::Ingest};
    case Stage::Graph: return {Stage::Featurize};
    case Stage::Train:
    case Stage::Grid:
    case Stage::Crossval: return {Stage::Ingest, Stage::Featurize, Stage::Graph};
    case Stage::Ablate: return {Stage::Ingest, Stage::Featurize};
    case Stage::Report: return {Stage::Generate, Stage::Ingest, Stage::Featurize, Stage::Graph, Stage::Train};
  }
  return {};
}

std::string config_hash(const config::RunConfig& cfg, Stage stage) {
  std::string text = std::string(stage_name(stage)) + "|" + stage_text(cfg, stage);
  for (Stage up : upstream_of(stage)) text += "|" + config_hash(cfg, up);
  return hex(fnv1a64(text));
}

fs::path manifest_path(const config::RunConfig& cfg, Stage stage) {
  return cfg.artifact_dir / "manifests" / (std::string(stage_name(stage)) + ".json");
}

fs::path report_path(const config::RunConfig& cfg) { return cfg.artifact_dir / "report.json"; }

std::string content_hash(const fs::path& path) {
  const auto bytes = matrix_io::read_file(path);
  return hex(fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
}

bool run_stage(Stage stage, const config::RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  if (!options.force && fresh(cfg, stage)) {
    if (options.log) *options.log << stage_name(stage) << ": up to date\n";
    return false;
  }
  for (Stage up : upstream_of(stage)) require_fresh(cfg, up);
  switch (stage) {
    case Stage::Generate: stage_generate(cfg, options.log); break;
    case Stage::Ingest: stage_ingest(cfg, options.log); break;
    case Stage::Featurize: stage_featurize(cfg, options.log); break;
    case Stage::Graph: stage_graph(cfg, options.log); break;
    case Stage::Train: stage_train(cfg, options.log); break;
    case Stage::Grid: stage_grid(cfg, options.log); break;
    case Stage::Ablate: stage_ablate(cfg, options.log); break;
    case Stage::Crossval: stage_crossval(cfg, options.log); break;
    case Stage::Report: stage_report(cfg, options.log); break;
  }
  return true;
}

void run_all(const config::RunConfig& cfg, const RunOptions& options) {
  for (Stage s : {Stage::Generate, Stage::Ingest, Stage::Featurize, Stage::Graph, Stage::Train, Stage::Ablate,
                  Stage::Crossval, Stage::Report}) {
    run_stage(s, cfg, options);
  }
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> labels_of(const ingest::Cohort& cohort) {
  std::vector<std::uint8_t> y;
  y.reserve(cohort.records.size());
  for (const auto& r : cohort.records) y.push_back(r.label_readmit_30d ? 1 : 0);
  return y;
}

featurize::NodeFeatureMatrix scaled_features(const std::vector<featurize::FeatureBlock>& blocks,
                                             const featurize::BlockSelection& selection,
                                             const std::vector<std::int64_t>& ids,
                                             std::span<const std::uint8_t> train_mask) {
  auto node = featurize::assemble(blocks, selection, ids);
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < train_mask.size(); ++i) {
    if (train_mask[i]) train_rows.push_back(i);
  }
  const auto scalers = featurize::fit_scalers(node, train_rows);
  return featurize::apply_scalers(std::move(node), scalers);
}

Prepared prepare(const config::RunConfig& cfg, const datagen::RawTables& tables) {
  Prepared p;
  p.cohort = ingest::prepare_cohort(tables);
  p.labels = labels_of(p.cohort);
  p.masks = evalstat::make_splits(p.cohort, cfg.split);
  p.blocks = featurize::encode_all(tables, p.cohort, cfg.features);
  p.features = scaled_features(p.blocks, cfg.selection, admission_ids(p.cohort), p.masks.train);
  p.graph = simgraph::range_search(p.features.values, cfg.tau, cfg.tile);
  return p;
}

Prepared prepare(const config::RunConfig& cfg) { return prepare(cfg, datagen::generate(cfg.gen, nullptr)); }

}  // namespace readmit::pipeline
