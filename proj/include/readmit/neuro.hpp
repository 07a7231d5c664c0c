#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "readmit/kernels.hpp"
#include "readmit/matrix.hpp"
#include "readmit/rng.hpp"
#include "readmit/simgraph.hpp"

namespace readmit::neuro {

using Tensor2 = Matrix;
using kernels::Aggregator;

Aggregator aggregator_from_name(std::string_view name);
std::string_view aggregator_name(Aggregator kind);

inline constexpr double kProbabilityFloor = 1e-7;

// Trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
  Tensor2 first_moment;
  Tensor2 second_moment;
  std::uint64_t step = 0;

  Parameter() = default;
  Parameter(std::string name, std::size_t rows, std::size_t cols);

  void zero_grad();
};

// Glorot-uniform fill, limit sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Parameter& p, Rng& rng);

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

// w_c = N / (2 N_c) over the masked rows.
ClassWeights class_weights(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask);

// Records a forward computation and replays it in reverse. Values are owned
// by the tape except for constants registered by reference, which must
// outlive it.
class Tape {
 public:
  struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
  };

  Var constant(Tensor2 value);
  Var constant_ref(const Tensor2& value);
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // a + row vector broadcast over rows.
  Var add_bias(Var a, Var bias);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var scale(Var a, double factor);
  Var aggregate(Var h, const simgraph::SimilarityGraph& graph, Aggregator kind);
  // Scalar -(1/|mask|) sum_mask [w+ y ln p + w- (1-y) ln(1-p)], p clamped to
  // [1e-7, 1 - 1e-7]; clamped entries pass no gradient. `p` is n x 1.
  Var weighted_bce(Var p, std::span<const std::uint8_t> labels, ClassWeights weights,
                   std::span<const std::uint8_t> mask);

  const Tensor2& value(Var v) const;
  // Accumulates d(loss)/d(parameter) into every Parameter reached from loss.
  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 owned;
    const Tensor2* external = nullptr;
    Tensor2 grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&, Node&)> backward;

    const Tensor2& value() const { return external ? *external : owned; }
  };

  Var push(Node node);
  Node& node(Var v);
  Tensor2& grad_of(Var v);
  bool needs_grad(Var v) const { return nodes_[v.id].requires_grad; }

  std::vector<Node> nodes_;
};

// Eager forms of the tape operations.
Tensor2 aggregate(const Tensor2& h, const simgraph::SimilarityGraph& graph, Aggregator kind);
// ReLU(H W_self + aggregate(H) W_neigh + bias); no ReLU when `final_layer`.
Tensor2 sage_layer(const Tensor2& h, const simgraph::SimilarityGraph& graph, const Tensor2& w_self,
                   const Tensor2& w_neigh, const Tensor2& bias, Aggregator kind, bool final_layer = false);
double weighted_bce(std::span<const double> p, std::span<const std::uint8_t> labels, ClassWeights weights,
                    std::span<const std::uint8_t> mask);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update of every parameter, then zeroes gradients.
void adam_step(std::span<Parameter* const> params, const AdamOptions& options);

}  // namespace readmit::neuro
