#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "readmit/error.hpp"
#include "readmit/neuro.hpp"
#include "readmit/rng.hpp"
#include "readmit/simgraph.hpp"

using namespace readmit;
using namespace readmit::neuro;

namespace {

simgraph::SimilarityGraph path3() { return simgraph::from_pairs(3, {{0, 1}, {1, 2}}, 0.9); }

simgraph::SimilarityGraph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) pairs.emplace_back(i, j);
    }
  }
  return simgraph::from_pairs(n, pairs, 0.9);
}

Parameter random_param(const std::string& name, std::size_t r, std::size_t c, Rng& rng) {
  Parameter p(name, r, c);
  for (auto& x : p.value.data) x = rng.uniform(-0.8, 0.8);
  return p;
}

}  // namespace

TEST_CASE("path graph aggregation") {
  Tensor2 h(3, 1);
  h(0, 0) = 1;
  h(1, 0) = 2;
  h(2, 0) = 3;
  const auto g = path3();
  CHECK(aggregate(h, g, Aggregator::Mean)(1, 0) == 2.0);
  CHECK(aggregate(h, g, Aggregator::Max)(1, 0) == 3.0);
  CHECK(aggregate(h, g, Aggregator::Add)(1, 0) == 6.0);
  CHECK(aggregate(h, g, Aggregator::Mean)(0, 0) == 1.5);

  const auto isolated = simgraph::from_pairs(3, {}, 0.9);
  for (auto kind : {Aggregator::Mean, Aggregator::Max, Aggregator::Add}) CHECK(aggregate(h, isolated, kind) == h);

  Tensor2 same(3, 2, 0.25);
  CHECK(aggregate(same, g, Aggregator::Max) == same);
  CHECK(aggregate(same, g, Aggregator::Add)(1, 1) == 0.75);
}

TEST_CASE("mean and add are linear") {
  Rng rng(1);
  const auto g = random_graph(25, 0.2, rng);
  Tensor2 a(25, 4), b(25, 4), mix(25, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data[i] = rng.normal();
    b.data[i] = rng.normal();
    mix.data[i] = 2.0 * a.data[i] - 0.5 * b.data[i];
  }
  for (auto kind : {Aggregator::Mean, Aggregator::Add}) {
    const auto am = aggregate(a, g, kind), bm = aggregate(b, g, kind), mm = aggregate(mix, g, kind);
    for (std::size_t i = 0; i < mm.size(); ++i) CHECK(mm.data[i] == doctest::Approx(2.0 * am.data[i] - 0.5 * bm.data[i]));
  }
  CHECK_THROWS_AS(aggregator_from_name("median"), Error);
  CHECK(aggregator_from_name("max") == Aggregator::Max);
}

TEST_CASE("sage layer special cases and scalar recomputation") {
  Rng rng(2);
  const auto g = random_graph(12, 0.3, rng);
  Tensor2 h(12, 3);
  for (auto& x : h.data) x = rng.uniform();
  Tensor2 eye(3, 3), zero(3, 3), bias(1, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  CHECK(sage_layer(h, g, eye, zero, bias, Aggregator::Mean) == h);
  CHECK(sage_layer(h, g, zero, eye, bias, Aggregator::Max) == aggregate(h, g, Aggregator::Max));

  Tensor2 ws(3, 2), wn(3, 2), b(1, 2);
  for (auto* m : {&ws, &wn, &b}) {
    for (auto& x : m->data) x = rng.uniform(-1, 1);
  }
  const auto out = sage_layer(h, g, ws, wn, b, Aggregator::Mean);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto nb = g.view().of(i);
    for (std::size_t o = 0; o < 2; ++o) {
      double v = b(0, o);
      for (std::size_t k = 0; k < 3; ++k) {
        double agg = 0;
        for (auto j : nb) agg += h(j, k);
        agg /= static_cast<double>(nb.size());
        v += h(i, k) * ws(k, o) + agg * wn(k, o);
      }
      CHECK(out(i, o) == doctest::Approx(std::max(v, 0.0)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(sage_layer(h, g, Tensor2(2, 2), wn, b, Aggregator::Mean), Error);
}

TEST_CASE("binary cross-entropy") {
  const std::vector<double> half(4, 0.5);
  const std::vector<std::uint8_t> y{1, 0, 1, 0}, all(4, 1), none(4, 0);
  CHECK(weighted_bce(half, y, {}, all) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> exact{1.0, 0.0, 1.0, 0.0};
  CHECK(weighted_bce(exact, y, {}, all) == doctest::Approx(-std::log1p(-kProbabilityFloor)).epsilon(1e-9));
  CHECK_THROWS_AS(weighted_bce(half, y, {}, none), Error);
}

TEST_CASE("class weights") {
  const std::size_t n = 303571, pos = 51985;
  std::vector<std::uint8_t> labels(n, 0), mask(n, 1);
  for (std::size_t i = 0; i < pos; ++i) labels[i] = 1;
  const auto w = class_weights(labels, mask);
  CHECK(w.positive == doctest::Approx(2.9198).epsilon(1e-4));
  CHECK(w.negative == doctest::Approx(0.6033).epsilon(1e-4));
  CHECK_THROWS_AS(class_weights(std::vector<std::uint8_t>(3, 1), std::vector<std::uint8_t>(3, 1)), Error);
}

TEST_CASE("gradients match finite differences") {
  Rng rng(3);
  const std::size_t n = 30, d = 16, hdim = 8;
  const auto g = random_graph(n, 0.15, rng);
  Tensor2 x(n, d);
  for (auto& v : x.data) v = rng.normal();
  std::vector<std::uint8_t> labels(n), mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 3 == 0;
    mask[i] = i % 5 != 4;
  }
  const ClassWeights w{1.7, 0.6};
  for (auto kind : {Aggregator::Mean, Aggregator::Max, Aggregator::Add}) {
    auto ws0 = random_param("ws0", d, hdim, rng), wn0 = random_param("wn0", d, hdim, rng);
    auto b0 = random_param("b0", 1, hdim, rng);
    auto ws1 = random_param("ws1", hdim, 1, rng), wn1 = random_param("wn1", hdim, 1, rng);
    auto b1 = random_param("b1", 1, 1, rng);
    const double scale = kind == Aggregator::Add ? 0.1 : 0.3;
    auto loss = [&](Tape& t) {
      auto in = t.constant_ref(x);
      auto h = t.relu(t.add_bias(
          t.add(t.matmul(in, t.parameter(ws0)), t.matmul(t.aggregate(in, g, kind), t.parameter(wn0))), t.parameter(b0)));
      auto z = t.add_bias(t.add(t.matmul(h, t.parameter(ws1)), t.matmul(t.aggregate(h, g, kind), t.parameter(wn1))),
                          t.parameter(b1));
      return t.weighted_bce(t.sigmoid(t.scale(z, scale)), labels, w, mask);
    };
    const auto r = testing::grad_check({&ws0, &wn0, &b0, &ws1, &wn1, &b1}, loss);
    CAPTURE(neuro::aggregator_name(kind));
    CHECK(r.entries == 2 * d * hdim + hdim + 2 * hdim + 1);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("unused parameters get zero gradient and scaling is linear") {
  Rng rng(4);
  auto a = random_param("a", 3, 1, rng);
  auto unused = random_param("u", 2, 2, rng);
  Tensor2 x(5, 3);
  for (auto& v : x.data) v = rng.normal();
  const std::vector<std::uint8_t> y{1, 0, 0, 1, 0}, m(5, 1);
  auto run = [&](double factor) {
    a.zero_grad();
    unused.zero_grad();
    Tape t;
    auto p = t.sigmoid(t.matmul(t.constant_ref(x), t.parameter(a)));
    t.parameter(unused);
    t.backward(t.scale(t.weighted_bce(p, y, {}, m), factor));
    return a.grad;
  };
  const auto g1 = run(1.0);
  const auto g2 = run(2.0);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2.data[i] == doctest::Approx(2 * g1.data[i]).epsilon(1e-15));
  for (double v : unused.grad.data) CHECK(v == 0.0);

  Tape empty;
  CHECK_THROWS_AS(empty.backward(Tape::Var{}), Error);
}

TEST_CASE("adam") {
  Parameter p("p", 1, 1);
  p.value(0, 0) = 0.5;
  p.grad(0, 0) = 1.0;
  Parameter* ps[] = {&p};
  adam_step(ps, {.learning_rate = 0.01});
  CHECK(p.value(0, 0) == doctest::Approx(0.5 - 0.01 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p.grad(0, 0) == 0.0);

  const double before = p.value(0, 0);
  Parameter q("q", 2, 2);
  Parameter* qs[] = {&q};
  adam_step(qs, {});
  CHECK(q.value == Tensor2(2, 2));
  CHECK(p.value(0, 0) == before);
  CHECK_THROWS_AS(adam_step(qs, {.learning_rate = 0.0}), Error);

  Parameter a("a", 2, 1), b("b", 2, 1);
  for (int step = 0; step < 5; ++step) {
    a.grad(0, 0) = b.grad(0, 0) = 0.3 * step - 0.2;
    a.grad(1, 0) = b.grad(1, 0) = 1.0 / (step + 1);
    Parameter* as[] = {&a};
    Parameter* bs[] = {&b};
    adam_step(as, {});
    adam_step(bs, {});
  }
  CHECK(a.value == b.value);
}
