#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "readmit/evalstat.hpp"
#include "readmit/neuro.hpp"
#include "readmit/simgraph.hpp"

namespace readmit::models {

using neuro::Aggregator;
using neuro::Parameter;
using neuro::Tape;
using neuro::Tensor2;

inline constexpr int kMaxEpochs = 150;
inline constexpr int kPatience = 10;
inline constexpr double kDecisionThreshold = 0.5;

inline constexpr int kGridLayers[] = {2, 3, 4};
inline constexpr int kGridHidden[] = {32, 64, 128};
inline constexpr Aggregator kGridAggregators[] = {Aggregator::Mean, Aggregator::Max, Aggregator::Add};
inline constexpr double kGridLearningRates[] = {1e-3, 1e-4, 1e-5, 1e-6};

struct SageConfig {
  int n_layers = 2;
  int hidden = 64;
  Aggregator aggregator = Aggregator::Mean;
  double learning_rate = 1e-5;
  int max_epochs = kMaxEpochs;
  int patience = kPatience;
  std::uint64_t seed = 1;

  // Throws a configuration error unless every field lies on the grid.
  void validate() const;
  std::string label() const;
};

struct MlpConfig {
  std::vector<int> hidden_layers{64, 64};  // empty: logistic regression
  double learning_rate = 1e-3;
  int max_epochs = kMaxEpochs;
  int patience = kPatience;
  std::uint64_t seed = 1;

  void validate() const;
};

// Node classifier producing an n x 1 probability column.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string kind() const = 0;
  virtual Tape::Var forward(Tape& tape, const Tensor2& x) = 0;
  virtual std::vector<Parameter*> parameters() = 0;

  std::size_t parameter_count();
  // Probabilities without recording gradients.
  std::vector<double> predict(const Tensor2& x);
};

class SageModel final : public Classifier {
 public:
  SageModel(const SageConfig& config, std::size_t in_dim, const simgraph::SimilarityGraph& graph);

  std::string kind() const override { return "graphsage"; }
  Tape::Var forward(Tape& tape, const Tensor2& x) override;
  std::vector<Parameter*> parameters() override;

  struct Layer {
    Parameter w_self;
    Parameter w_neigh;
    Parameter bias;
  };
  std::vector<Layer>& layers() { return layers_; }
  const SageConfig& config() const { return config_; }

 private:
  SageConfig config_;
  const simgraph::SimilarityGraph* graph_;
  std::vector<Layer> layers_;
  // aggregate(x) for the first layer; x is constant across epochs.
  const Tensor2* cached_input_ = nullptr;
  Tensor2 cached_aggregate_;
};

// Dense ReLU layers and a sigmoid head; no hidden layers is logistic
// regression.
class MlpModel final : public Classifier {
 public:
  MlpModel(const MlpConfig& config, std::size_t in_dim);

  std::string kind() const override { return config_.hidden_layers.empty() ? "logreg" : "mlp"; }
  Tape::Var forward(Tape& tape, const Tensor2& x) override;
  std::vector<Parameter*> parameters() override;

  struct Layer {
    Parameter weight;
    Parameter bias;
  };
  std::vector<Layer>& layers() { return layers_; }

 private:
  MlpConfig config_;
  std::vector<Layer> layers_;
};

std::unique_ptr<SageModel> build_sage(const SageConfig& config, std::size_t in_dim,
                                      const simgraph::SimilarityGraph& graph);

// Counts epochs without improvement of the monitored loss.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // Returns true when `loss` is a new strict minimum.
  bool update(double loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auroc = 0.0;  // NaN when the validation mask has one class
};

using EpochLogger = std::function<void(const EpochRecord&)>;

struct TrainOptions {
  double learning_rate = 1e-3;
  int max_epochs = kMaxEpochs;
  int patience = kPatience;
  EpochLogger on_epoch;
};

struct TrainResult {
  std::string model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  int stopped_epoch = 0;
  double val_auroc = 0.0;
  double val_bacc = 0.0;
  double test_auroc = 0.0;
  double test_bacc = 0.0;
  std::vector<double> scores;  // best-epoch probabilities for every node
};

// Full-batch training: loss on the train mask, early stopping on the
// validation loss, parameters restored to the best validation epoch.
TrainResult train(Classifier& model, const Tensor2& x, std::span<const std::uint8_t> labels,
                  const evalstat::NodeMasks& masks, const TrainOptions& options);

TrainResult train_sage(const SageConfig& config, const simgraph::SimilarityGraph& graph, const Tensor2& x,
                       std::span<const std::uint8_t> labels, const evalstat::NodeMasks& masks,
                       EpochLogger on_epoch = {});
TrainResult train_mlp(const MlpConfig& config, const Tensor2& x, std::span<const std::uint8_t> labels,
                      const evalstat::NodeMasks& masks, EpochLogger on_epoch = {});
TrainResult train_logreg(MlpConfig config, const Tensor2& x, std::span<const std::uint8_t> labels,
                         const evalstat::NodeMasks& masks, EpochLogger on_epoch = {});

struct GridSpec {
  std::vector<double> learning_rates{std::begin(kGridLearningRates), std::end(kGridLearningRates)};
  std::vector<int> layers{std::begin(kGridLayers), std::end(kGridLayers)};
  std::vector<int> hidden{std::begin(kGridHidden), std::end(kGridHidden)};
  std::vector<Aggregator> aggregators{std::begin(kGridAggregators), std::end(kGridAggregators)};
  int max_epochs = kMaxEpochs;
  int patience = kPatience;
  std::uint64_t seed = 1;

  // Cartesian product in (lr, layers, hidden, aggregator) order.
  std::vector<SageConfig> configs() const;
};

struct GridRow {
  SageConfig config;
  int stopped_epoch = 0;
  double val_auroc = 0.0;
  double val_bacc = 0.0;
  double test_auroc = 0.0;
  double test_bacc = 0.0;
};

// Every configuration trained once; rows ranked by validation AUROC
// (descending, grid order on ties).
std::vector<GridRow> grid_search(const GridSpec& spec, const simgraph::SimilarityGraph& graph, const Tensor2& x,
                                 std::span<const std::uint8_t> labels, const evalstat::NodeMasks& masks,
                                 const std::function<void(std::size_t, const GridRow&)>& progress = {});

void write_grid_csv(const std::vector<GridRow>& rows, const std::filesystem::path& path,
                    const std::string& config_hash);

// `<stem>.json` (architecture, hyperparameters, parameter shapes) and
// `<stem>.bin` (all parameter values stacked into one column).
void save_checkpoint(Classifier& model, const std::string& hyperparameters_json, std::uint64_t seed,
                     const std::filesystem::path& stem);
// Restores values into a model of the same architecture.
void load_checkpoint(Classifier& model, const std::filesystem::path& stem);

}  // namespace readmit::models
