#include "readmit/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/matrix_io.hpp"
#include "readmit/rng.hpp"

namespace readmit::models {

namespace {

template <class T, std::size_t N>
bool on_grid(const T (&grid)[N], T value) {
  return std::find(std::begin(grid), std::end(grid), value) != std::end(grid);
}

std::string format_lr(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lr);
  return buf;
}

void check_training_budget(int max_epochs, int patience) {
  if (max_epochs < 1 || max_epochs > kMaxEpochs) {
    fail(ErrorKind::Config, "max_epochs must lie in [1, 150], got " + std::to_string(max_epochs));
  }
  if (patience < 1) fail(ErrorKind::Config, "patience must be positive, got " + std::to_string(patience));
}

// Metric on the masked rows, NaN when the mask lacks a class.
template <class Metric>
double masked_metric(Metric metric, std::span<const double> scores, std::span<const std::uint8_t> labels,
                     std::span<const std::uint8_t> mask) {
  const auto sub = evalstat::select(scores, labels, mask);
  const auto pos = std::count(sub.labels.begin(), sub.labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(sub.labels.size())) return std::nan("");
  return metric(sub.scores, sub.labels);
}

double masked_auroc(std::span<const double> s, std::span<const std::uint8_t> y, std::span<const std::uint8_t> m) {
  return masked_metric([](auto a, auto b) { return evalstat::auroc(a, b); }, s, y, m);
}

double masked_bacc(std::span<const double> s, std::span<const std::uint8_t> y, std::span<const std::uint8_t> m) {
  return masked_metric([](auto a, auto b) { return evalstat::balanced_accuracy_at(a, b, kDecisionThreshold); }, s,
                       y, m);
}

}  // namespace

void SageConfig::validate() const {
  if (!on_grid(kGridLayers, n_layers)) {
    fail(ErrorKind::Config, "n_layers must be one of 2, 3, 4; got " + std::to_string(n_layers));
  }
  if (!on_grid(kGridHidden, hidden)) {
    fail(ErrorKind::Config, "hidden must be one of 32, 64, 128; got " + std::to_string(hidden));
  }
  if (!on_grid(kGridLearningRates, learning_rate)) {
    fail(ErrorKind::Config, "learning_rate must be one of 1e-3, 1e-4, 1e-5, 1e-6; got " + format_lr(learning_rate));
  }
  check_training_budget(max_epochs, patience);
}

std::string SageConfig::label() const {
  return "layers=" + std::to_string(n_layers) + " hidden=" + std::to_string(hidden) +
         " aggregator=" + std::string(neuro::aggregator_name(aggregator)) + " lr=" + format_lr(learning_rate);
}

void MlpConfig::validate() const {
  for (int h : hidden_layers) {
    if (h <= 0) fail(ErrorKind::Config, "MLP hidden layer sizes must be positive");
  }
  if (!(learning_rate > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  check_training_budget(max_epochs, patience);
}

// ---------------------------------------------------------------------------

std::size_t Classifier::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

std::vector<double> Classifier::predict(const Tensor2& x) {
  Tape tape;
  auto p = forward(tape, x);
  return tape.value(p).data;
}

SageModel::SageModel(const SageConfig& config, std::size_t in_dim, const simgraph::SimilarityGraph& graph)
    : config_(config), graph_(&graph) {
  config_.validate();
  if (in_dim == 0) fail(ErrorKind::Config, "GraphSAGE input dimension must be positive");
  Rng rng(config_.seed);
  std::size_t d_in = in_dim;
  for (int k = 0; k < config_.n_layers; ++k) {
    const bool last = k + 1 == config_.n_layers;
    const std::size_t d_out = last ? 1 : static_cast<std::size_t>(config_.hidden);
    const std::string prefix = "sage" + std::to_string(k) + ".";
    Layer layer{Parameter(prefix + "w_self", d_in, d_out), Parameter(prefix + "w_neigh", d_in, d_out),
                Parameter(prefix + "bias", 1, d_out)};
    glorot_uniform(layer.w_self, rng);
    glorot_uniform(layer.w_neigh, rng);
    layers_.push_back(std::move(layer));
    d_in = d_out;
  }
}

Tape::Var SageModel::forward(Tape& tape, const Tensor2& x) {
  if (x.rows != graph_->n_nodes) {
    fail(ErrorKind::Shape, "feature rows (" + std::to_string(x.rows) + ") differ from graph nodes (" +
                               std::to_string(graph_->n_nodes) + ")");
  }
  if (cached_input_ != &x || !cached_aggregate_.same_shape(x)) {
    cached_aggregate_ = neuro::aggregate(x, *graph_, config_.aggregator);
    cached_input_ = &x;
  }
  Tape::Var h = tape.constant_ref(x);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    auto& layer = layers_[k];
    const Tape::Var neigh = k == 0 ? tape.constant_ref(cached_aggregate_) : tape.aggregate(h, *graph_, config_.aggregator);
    Tape::Var out = tape.add(tape.matmul(h, tape.parameter(layer.w_self)),
                             tape.matmul(neigh, tape.parameter(layer.w_neigh)));
    out = tape.add_bias(out, tape.parameter(layer.bias));
    h = k + 1 == layers_.size() ? tape.sigmoid(out) : tape.relu(out);
  }
  return h;
}

std::vector<Parameter*> SageModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.w_self);
    out.push_back(&l.w_neigh);
    out.push_back(&l.bias);
  }
  return out;
}

MlpModel::MlpModel(const MlpConfig& config, std::size_t in_dim) : config_(config) {
  config_.validate();
  if (in_dim == 0) fail(ErrorKind::Config, "MLP input dimension must be positive");
  Rng rng(config_.seed);
  std::size_t d_in = in_dim;
  const std::size_t depth = config_.hidden_layers.size() + 1;
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t d_out = k + 1 == depth ? 1 : static_cast<std::size_t>(config_.hidden_layers[k]);
    const std::string prefix = "dense" + std::to_string(k) + ".";
    Layer layer{Parameter(prefix + "weight", d_in, d_out), Parameter(prefix + "bias", 1, d_out)};
    glorot_uniform(layer.weight, rng);
    layers_.push_back(std::move(layer));
    d_in = d_out;
  }
}

Tape::Var MlpModel::forward(Tape& tape, const Tensor2& x) {
  Tape::Var h = tape.constant_ref(x);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Tape::Var out = tape.add_bias(tape.matmul(h, tape.parameter(layers_[k].weight)), tape.parameter(layers_[k].bias));
    h = k + 1 == layers_.size() ? tape.sigmoid(out) : tape.relu(out);
  }
  return h;
}

std::vector<Parameter*> MlpModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::unique_ptr<SageModel> build_sage(const SageConfig& config, std::size_t in_dim,
                                      const simgraph::SimilarityGraph& graph) {
  return std::make_unique<SageModel>(config, in_dim, graph);
}

// ---------------------------------------------------------------------------

bool EarlyStopper::update(double loss) {
  if (loss < best_) {
    best_ = loss;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

TrainResult train(Classifier& model, const Tensor2& x, std::span<const std::uint8_t> labels,
                  const evalstat::NodeMasks& masks, const TrainOptions& options) {
  check_training_budget(options.max_epochs, options.patience);
  if (labels.size() != x.rows || masks.train.size() != x.rows || masks.val.size() != x.rows ||
      masks.test.size() != x.rows) {
    fail(ErrorKind::Shape, "labels and masks must have one entry per feature row");
  }
  if (std::none_of(masks.val.begin(), masks.val.end(), [](auto v) { return v != 0; })) {
    fail(ErrorKind::Config, "validation mask is empty; early stopping needs validation nodes");
  }
  const neuro::ClassWeights weights = neuro::class_weights(labels, masks.train);
  const neuro::AdamOptions adam{options.learning_rate};
  const auto params = model.parameters();

  TrainResult result;
  result.model = model.kind();
  EarlyStopper stopper(options.patience);
  std::vector<Tensor2> best_values;
  for (auto* p : params) best_values.push_back(p->value);

  Tape tape;
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    tape.clear();
    const Tape::Var prob = model.forward(tape, x);
    const Tape::Var loss = tape.weighted_bce(prob, labels, weights, masks.train);
    const auto& p = tape.value(prob).data;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = tape.value(loss).data[0];
    rec.val_loss = neuro::weighted_bce(p, labels, weights, masks.val);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      fail(ErrorKind::Numeric, result.model + ": non-finite loss at epoch " + std::to_string(epoch));
    }
    rec.val_auroc = masked_auroc(p, labels, masks.val);
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (stopper.update(rec.val_loss)) {
      result.best_epoch = epoch;
      for (std::size_t i = 0; i < params.size(); ++i) best_values[i] = params[i]->value;
    }
    result.stopped_epoch = epoch;
    if (stopper.should_stop() || epoch == options.max_epochs) break;

    tape.backward(loss);
    neuro::adam_step(params, adam);
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  result.scores = model.predict(x);
  result.val_auroc = masked_auroc(result.scores, labels, masks.val);
  result.val_bacc = masked_bacc(result.scores, labels, masks.val);
  result.test_auroc = masked_auroc(result.scores, labels, masks.test);
  result.test_bacc = masked_bacc(result.scores, labels, masks.test);
  return result;
}

TrainResult train_sage(const SageConfig& config, const simgraph::SimilarityGraph& graph, const Tensor2& x,
                       std::span<const std::uint8_t> labels, const evalstat::NodeMasks& masks,
                       EpochLogger on_epoch) {
  SageModel model(config, x.cols, graph);
  return train(model, x, labels, masks, {config.learning_rate, config.max_epochs, config.patience, std::move(on_epoch)});
}

TrainResult train_mlp(const MlpConfig& config, const Tensor2& x, std::span<const std::uint8_t> labels,
                      const evalstat::NodeMasks& masks, EpochLogger on_epoch) {
  MlpModel model(config, x.cols);
  return train(model, x, labels, masks, {config.learning_rate, config.max_epochs, config.patience, std::move(on_epoch)});
}

TrainResult train_logreg(MlpConfig config, const Tensor2& x, std::span<const std::uint8_t> labels,
                         const evalstat::NodeMasks& masks, EpochLogger on_epoch) {
  config.hidden_layers.clear();
  return train_mlp(config, x, labels, masks, std::move(on_epoch));
}

// ---------------------------------------------------------------------------

std::vector<SageConfig> GridSpec::configs() const {
  std::vector<SageConfig> out;
  for (double lr : learning_rates) {
    for (int l : layers) {
      for (int h : hidden) {
        for (Aggregator a : aggregators) {
          SageConfig c{l, h, a, lr, max_epochs, patience, seed};
          c.validate();
          out.push_back(c);
        }
      }
    }
  }
  if (out.empty()) fail(ErrorKind::Config, "grid is empty");
  return out;
}

std::vector<GridRow> grid_search(const GridSpec& spec, const simgraph::SimilarityGraph& graph, const Tensor2& x,
                                 std::span<const std::uint8_t> labels, const evalstat::NodeMasks& masks,
                                 const std::function<void(std::size_t, const GridRow&)>& progress) {
  const auto configs = spec.configs();
  std::vector<GridRow> rows;
  rows.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const TrainResult r = train_sage(configs[i], graph, x, labels, masks);
    rows.push_back({configs[i], r.stopped_epoch, r.val_auroc, r.val_bacc, r.test_auroc, r.test_bacc});
    if (progress) progress(i, rows.back());
  }
  // NaN validation AUROC sorts last.
  std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    const bool an = std::isnan(a.val_auroc), bn = std::isnan(b.val_auroc);
    if (an != bn) return bn;
    return a.val_auroc > b.val_auroc;
  });
  return rows;
}

void write_grid_csv(const std::vector<GridRow>& rows, const std::filesystem::path& path,
                    const std::string& config_hash) {
  csv::Writer w(path);
  w.comment("config_hash=" + config_hash);
  w.row({"lr", "layers", "hidden", "aggregator", "stopped_epoch", "val_auroc", "val_bacc", "test_auroc", "test_bacc",
         "seed"});
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    w.row({format_lr(r.config.learning_rate), std::to_string(r.config.n_layers), std::to_string(r.config.hidden),
           std::string(neuro::aggregator_name(r.config.aggregator)), std::to_string(r.stopped_epoch),
           num(r.val_auroc), num(r.val_bacc), num(r.test_auroc), num(r.test_bacc), std::to_string(r.config.seed)});
  }
}

// ---------------------------------------------------------------------------

void save_checkpoint(Classifier& model, const std::string& hyperparameters_json, std::uint64_t seed,
                     const std::filesystem::path& stem) {
  const auto params = model.parameters();
  nlohmann::ordered_json manifest;
  manifest["architecture"] = model.kind();
  manifest["seed"] = seed;
  manifest["hyperparameters"] = nlohmann::ordered_json::parse(hyperparameters_json);
  auto& shapes = manifest["parameters"] = nlohmann::ordered_json::array();
  std::size_t total = 0;
  for (auto* p : params) {
    shapes.push_back({{"name", p->name}, {"rows", p->value.rows}, {"cols", p->value.cols}});
    total += p->value.size();
  }
  Matrix blob(total, 1);
  std::size_t at = 0;
  for (auto* p : params) {
    std::copy(p->value.data.begin(), p->value.data.end(), blob.data.begin() + static_cast<std::ptrdiff_t>(at));
    at += p->value.size();
  }
  matrix_io::write_matrix(std::filesystem::path(stem.string() + ".bin"), blob);
  std::ofstream out(stem.string() + ".json");
  if (!out) fail(ErrorKind::Io, "cannot write " + stem.string() + ".json");
  out << manifest.dump(2) << '\n';
}

void load_checkpoint(Classifier& model, const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  if (!in) fail(ErrorKind::Io, "cannot read " + stem.string() + ".json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Corruption, stem.string() + ".json: " + e.what());
  }
  if (manifest.value("architecture", "") != model.kind()) {
    fail(ErrorKind::Config, "checkpoint architecture '" + manifest.value("architecture", "") + "' does not match '" +
                                model.kind() + "'");
  }
  const auto params = model.parameters();
  const auto& shapes = manifest.at("parameters");
  if (shapes.size() != params.size()) fail(ErrorKind::Shape, "checkpoint parameter count differs from the model");
  const Matrix blob = matrix_io::read_matrix(std::filesystem::path(stem.string() + ".bin"));
  std::size_t at = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (shapes[i].at("rows").get<std::size_t>() != p->value.rows ||
        shapes[i].at("cols").get<std::size_t>() != p->value.cols) {
      fail(ErrorKind::Shape, "checkpoint shape mismatch for " + p->name);
    }
    if (at + p->value.size() > blob.size()) fail(ErrorKind::Corruption, "checkpoint blob too short");
    std::copy_n(blob.data.begin() + static_cast<std::ptrdiff_t>(at), p->value.size(), p->value.data.begin());
    at += p->value.size();
  }
  if (at != blob.size()) fail(ErrorKind::Corruption, "checkpoint blob has trailing values");
}

}  // namespace readmit::models
