#include "readmit/neuro.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "readmit/error.hpp"

namespace readmit::neuro {

Aggregator aggregator_from_name(std::string_view name) {
  if (name == "mean") return Aggregator::Mean;
  if (name == "max") return Aggregator::Max;
  if (name == "add") return Aggregator::Add;
  fail(ErrorKind::Config, "unknown aggregator '" + std::string(name) + "' (expected mean, max or add)");
}

std::string_view aggregator_name(Aggregator kind) {
  switch (kind) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Max: return "max";
    case Aggregator::Add: return "add";
  }
  return "?";
}

Parameter::Parameter(std::string n, std::size_t rows, std::size_t cols)
    : name(std::move(n)), value(rows, cols), grad(rows, cols), first_moment(rows, cols), second_moment(rows, cols) {}

void Parameter::zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }

void glorot_uniform(Parameter& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows + p.value.cols));
  for (auto& x : p.value.data) x = rng.uniform(-limit, limit);
}

ClassWeights class_weights(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> mask) {
  std::size_t n = 0, pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) continue;
    ++n;
    pos += labels[i] ? 1 : 0;
  }
  if (pos == 0 || pos == n) fail(ErrorKind::Config, "class weights need both classes in the mask");
  const double total = static_cast<double>(n);
  return {total / (2.0 * static_cast<double>(pos)), total / (2.0 * static_cast<double>(n - pos))};
}

// ---------------------------------------------------------------------------

namespace {

void check_finite(const Tensor2& t, const char* op) {
#ifndef NDEBUG
  for (double v : t.data) {
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, std::string("non-finite value after ") + op);
  }
#else
  (void)t;
  (void)op;
#endif
}

void shape_error(const char* op, const Tensor2& a, const Tensor2& b) {
  fail(ErrorKind::Shape, std::string(op) + ": expected compatible shapes, got " + std::to_string(a.rows) + "x" +
                             std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

void add_into(Tensor2& dst, const Tensor2& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Tape::Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  check_finite(nodes_.back().value(), "op");
  return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) fail(ErrorKind::State, "variable does not belong to this tape");
  return nodes_[v.id];
}

const Tensor2& Tape::value(Var v) const {
  if (v.id >= nodes_.size()) fail(ErrorKind::State, "variable does not belong to this tape");
  return nodes_[v.id].value();
}

Tensor2& Tape::grad_of(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.rows != n.value().rows || n.grad.cols != n.value().cols) {
    n.grad = Tensor2(n.value().rows, n.value().cols);
  }
  return n.grad;
}

Tape::Var Tape::constant(Tensor2 value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::constant_ref(const Tensor2& value) {
  Node n;
  n.external = &value;
  return push(std::move(n));
}

Tape::Var Tape::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Tensor2& av = value(a);
  const Tensor2& bv = value(b);
  if (av.cols != bv.rows) shape_error("matmul", av, bv);
  Node n;
  kernels::gemm(av, bv, n.owned);
  n.requires_grad = needs_grad(a) || needs_grad(b);
  n.backward = [a, b](Tape& t, Node& self) {
    if (t.needs_grad(a)) kernels::gemm_nt(self.grad, t.value(b), t.grad_of(a), true);
    if (t.needs_grad(b)) kernels::gemm_tn(t.value(a), self.grad, t.grad_of(b), true);
  };
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  const Tensor2& av = value(a);
  const Tensor2& bv = value(b);
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Node n;
  n.owned = av;
  add_into(n.owned, bv);
  n.requires_grad = needs_grad(a) || needs_grad(b);
  n.backward = [a, b](Tape& t, Node& self) {
    if (t.needs_grad(a)) add_into(t.grad_of(a), self.grad);
    if (t.needs_grad(b)) add_into(t.grad_of(b), self.grad);
  };
  return push(std::move(n));
}

Tape::Var Tape::add_bias(Var a, Var bias) {
  const Tensor2& av = value(a);
  const Tensor2& bv = value(bias);
  if (bv.rows != 1 || bv.cols != av.cols) shape_error("add_bias", av, bv);
  Node n;
  n.owned = av;
  for (std::size_t i = 0; i < av.rows; ++i) {
    auto r = n.owned.row(i);
    for (std::size_t c = 0; c < av.cols; ++c) r[c] += bv.data[c];
  }
  n.requires_grad = needs_grad(a) || needs_grad(bias);
  n.backward = [a, bias](Tape& t, Node& self) {
    if (t.needs_grad(a)) add_into(t.grad_of(a), self.grad);
    if (t.needs_grad(bias)) {
      Tensor2& gb = t.grad_of(bias);
      for (std::size_t i = 0; i < self.grad.rows; ++i) {
        auto r = self.grad.row(i);
        for (std::size_t c = 0; c < self.grad.cols; ++c) gb.data[c] += r[c];
      }
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::relu(Var a) {
  Node n;
  n.owned = value(a);
  for (auto& x : n.owned.data) x = x > 0.0 ? x : 0.0;
  n.requires_grad = needs_grad(a);
  n.backward = [a](Tape& t, Node& self) {
    if (!t.needs_grad(a)) return;
    Tensor2& ga = t.grad_of(a);
    const Tensor2& out = self.value();
    for (std::size_t i = 0; i < ga.data.size(); ++i) {
      if (out.data[i] > 0.0) ga.data[i] += self.grad.data[i];
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var a) {
  Node n;
  n.owned = value(a);
  for (auto& x : n.owned.data) x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  n.requires_grad = needs_grad(a);
  n.backward = [a](Tape& t, Node& self) {
    if (!t.needs_grad(a)) return;
    Tensor2& ga = t.grad_of(a);
    const Tensor2& p = self.value();
    for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += self.grad.data[i] * p.data[i] * (1.0 - p.data[i]);
  };
  return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double factor) {
  Node n;
  n.owned = value(a);
  for (auto& x : n.owned.data) x *= factor;
  n.requires_grad = needs_grad(a);
  n.backward = [a, factor](Tape& t, Node& self) {
    if (!t.needs_grad(a)) return;
    Tensor2& ga = t.grad_of(a);
    for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += factor * self.grad.data[i];
  };
  return push(std::move(n));
}

Tape::Var Tape::aggregate(Var h, const simgraph::SimilarityGraph& graph, Aggregator kind) {
  Node n;
  auto argmax = std::make_shared<std::vector<std::uint32_t>>();
  kernels::aggregate_forward(value(h), graph.view(), kind, n.owned, argmax.get());
  n.requires_grad = needs_grad(h);
  const kernels::CsrView view = graph.view();
  n.backward = [h, view, kind, argmax](Tape& t, Node& self) {
    if (t.needs_grad(h)) kernels::aggregate_backward(self.grad, view, kind, argmax.get(), t.grad_of(h));
  };
  return push(std::move(n));
}

Tape::Var Tape::weighted_bce(Var p, std::span<const std::uint8_t> labels, ClassWeights w,
                             std::span<const std::uint8_t> mask) {
  const Tensor2& pv = value(p);
  if (pv.cols != 1 || pv.rows != labels.size() || mask.size() != labels.size()) {
    fail(ErrorKind::Shape, "weighted_bce: probabilities must be n x 1 with n labels and n mask entries");
  }
  std::vector<std::uint8_t> y(labels.begin(), labels.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  std::size_t count = 0;
  for (auto v : m) count += v ? 1 : 0;
  if (count == 0) fail(ErrorKind::Config, "weighted_bce: empty mask");
  Node n;
  n.owned = Tensor2(1, 1, neuro::weighted_bce(pv.data, y, w, m));
  n.requires_grad = needs_grad(p);
  n.backward = [p, y = std::move(y), m = std::move(m), w, count](Tape& t, Node& self) {
    if (!t.needs_grad(p)) return;
    const Tensor2& pv = t.value(p);
    Tensor2& gp = t.grad_of(p);
    const double scale = self.grad.data[0] / static_cast<double>(count);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!m[i]) continue;
      const double pi = pv.data[i];
      if (pi < kProbabilityFloor || pi > 1.0 - kProbabilityFloor) continue;
      gp.data[i] += y[i] ? -scale * w.positive / pi : scale * w.negative / (1.0 - pi);
    }
  };
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) fail(ErrorKind::State, "backward called before any forward computation");
  Node& root = node(loss);
  if (root.value().rows != 1 || root.value().cols != 1) fail(ErrorKind::Shape, "backward needs a scalar loss");
  grad_of(loss).data[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.rows != n.value().rows || n.grad.cols != n.value().cols) continue;
    if (n.backward) n.backward(*this, n);
    if (n.param) add_into(n.param->grad, n.grad);
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------

Tensor2 aggregate(const Tensor2& h, const simgraph::SimilarityGraph& graph, Aggregator kind) {
  Tensor2 out;
  std::vector<std::uint32_t> argmax;
  kernels::aggregate_forward(h, graph.view(), kind, out, &argmax);
  return out;
}

Tensor2 sage_layer(const Tensor2& h, const simgraph::SimilarityGraph& graph, const Tensor2& w_self,
                   const Tensor2& w_neigh, const Tensor2& bias, Aggregator kind, bool final_layer) {
  if (w_self.rows != h.cols) shape_error("sage_layer self weight", h, w_self);
  if (w_neigh.rows != h.cols || w_neigh.cols != w_self.cols) shape_error("sage_layer neighbor weight", w_self, w_neigh);
  if (bias.rows != 1 || bias.cols != w_self.cols) shape_error("sage_layer bias", w_self, bias);
  Tape tape;
  auto x = tape.constant_ref(h);
  auto out = tape.add_bias(tape.add(tape.matmul(x, tape.constant_ref(w_self)),
                                    tape.matmul(tape.aggregate(x, graph, kind), tape.constant_ref(w_neigh))),
                           tape.constant_ref(bias));
  if (!final_layer) out = tape.relu(out);
  return tape.value(out);
}

double weighted_bce(std::span<const double> p, std::span<const std::uint8_t> labels, ClassWeights w,
                    std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!mask[i]) continue;
    ++count;
    const double pi = std::clamp(p[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    sum += labels[i] ? w.positive * std::log(pi) : w.negative * std::log(1.0 - pi);
  }
  if (count == 0) fail(ErrorKind::Config, "weighted_bce: empty mask");
  return -sum / static_cast<double>(count);
}

void adam_step(std::span<Parameter* const> params, const AdamOptions& o) {
  if (!(o.learning_rate > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  for (Parameter* p : params) {
    ++p->step;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(p->step));
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double g = p->grad.data[i];
      double& m = p->first_moment.data[i];
      double& v = p->second_moment.data[i];
      m = o.beta1 * m + (1.0 - o.beta1) * g;
      v = o.beta2 * v + (1.0 - o.beta2) * g * g;
      p->value.data[i] -= o.learning_rate * (m / c1) / (std::sqrt(v / c2) + o.epsilon);
    }
    p->zero_grad();
  }
}

}  // namespace readmit::neuro
