#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "readmit/error.hpp"
#include "readmit/models.hpp"
#include "readmit/rng.hpp"
#include "readmit/simgraph.hpp"
#include "test_support.hpp"

using namespace readmit;
using namespace readmit::models;

namespace {

struct Toy {
  Tensor2 x;
  std::vector<std::uint8_t> labels;
  evalstat::NodeMasks masks;
  simgraph::SimilarityGraph graph;
};

// Two Gaussian blobs separated along the first feature; the graph links
// nodes of equal label with a few cross edges.
Toy make_toy(std::size_t n, std::size_t d, double gap, std::uint64_t seed) {
  Rng rng(seed);
  Toy t;
  t.x = Tensor2(n, d);
  t.labels.resize(n);
  t.masks.train.assign(n, 0);
  t.masks.val.assign(n, 0);
  t.masks.test.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    t.labels[i] = rng.bernoulli(0.3);
    for (std::size_t k = 0; k < d; ++k) t.x(i, k) = rng.normal();
    t.x(i, 0) += t.labels[i] ? gap : -gap;
    (i % 5 < 3 ? t.masks.train : i % 5 == 3 ? t.masks.val : t.masks.test)[i] = 1;
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const double p = t.labels[i] == t.labels[j] ? 0.02 : 0.002;
      if (rng.bernoulli(p)) pairs.emplace_back(i, j);
    }
  }
  t.graph = simgraph::from_pairs(n, pairs, 0.9);
  return t;
}

}  // namespace

TEST_CASE("parameter count and grid validation") {
  const auto g = simgraph::from_pairs(1, {}, 0.9);
  SageModel m(SageConfig{}, 3238, g);
  CHECK(m.parameter_count() == (3238 * 64 * 2 + 64) + (64 * 1 * 2 + 1));
  CHECK(m.parameter_count() == 414657);
  CHECK(m.parameters().size() == 6);
  CHECK(m.layers()[0].w_self.value.rows == 3238);
  CHECK(m.layers()[1].w_neigh.value.cols == 1);

  SageConfig bad;
  bad.hidden = 48;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("hidden"), Error);
  bad = SageConfig{};
  bad.n_layers = 5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SageConfig{};
  bad.learning_rate = 3e-4;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SageConfig{};
  bad.max_epochs = 151;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(build_sage(SageConfig{}, 0, g), Error);

  GridSpec full;
  CHECK(full.configs().size() == 108);
}

TEST_CASE("early stopping counts epochs without improvement") {
  EarlyStopper s(10);
  int stopped = 0;
  for (int epoch = 1; epoch <= 150; ++epoch) {
    s.update(1.0 + 0.01 * epoch);
    if (s.should_stop()) {
      stopped = epoch;
      break;
    }
  }
  CHECK(stopped == 11);

  EarlyStopper t(3);
  CHECK(t.update(1.0));
  CHECK_FALSE(t.update(1.0));
  CHECK_FALSE(t.update(2.0));
  CHECK(t.update(0.5));
  CHECK_FALSE(t.should_stop());
}

TEST_CASE("self-loop-only GraphSAGE is an MLP with tied weights") {
  const auto t = make_toy(40, 6, 1.0, 3);
  const auto isolated = simgraph::from_pairs(40, {}, 0.9);
  for (auto kind : {Aggregator::Mean, Aggregator::Max, Aggregator::Add}) {
    SageConfig sc;
    sc.hidden = 32;
    sc.aggregator = kind;
    SageModel sage(sc, 6, isolated);
    MlpConfig mc;
    mc.hidden_layers = {32};
    MlpModel mlp(mc, 6);
    for (std::size_t l = 0; l < 2; ++l) {
      auto& s = sage.layers()[l];
      auto& d = mlp.layers()[l];
      for (std::size_t k = 0; k < d.weight.value.size(); ++k) {
        d.weight.value.data[k] = s.w_self.value.data[k] + s.w_neigh.value.data[k];
      }
      d.bias.value = s.bias.value;
    }
    const auto a = sage.predict(t.x);
    const auto b = mlp.predict(t.x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("an MLP without hidden layers is logistic regression") {
  const auto t = make_toy(120, 4, 1.0, 4);
  MlpConfig mc;
  mc.hidden_layers = {};
  mc.max_epochs = 30;
  const auto a = train_mlp(mc, t.x, t.labels, t.masks);
  const auto b = train_logreg(mc, t.x, t.labels, t.masks);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
  CHECK(a.scores == b.scores);
  CHECK(b.model == "logreg");
}

TEST_CASE("logistic regression separates separable data") {
  auto t = make_toy(400, 2, 4.0, 5);
  MlpConfig mc;
  mc.learning_rate = 1e-2;
  const auto r = train_logreg(mc, t.x, t.labels, t.masks);
  CHECK(r.test_auroc > 0.99);
  CHECK(r.val_auroc > 0.99);
}

TEST_CASE("training is deterministic and restores the best epoch") {
  const auto t = make_toy(200, 8, 0.8, 6);
  SageConfig sc;
  sc.hidden = 32;
  sc.learning_rate = 1e-3;
  sc.max_epochs = 60;
  int logged = 0;
  const auto a = train_sage(sc, t.graph, t.x, t.labels, t.masks, [&](const EpochRecord&) { ++logged; });
  const auto b = train_sage(sc, t.graph, t.x, t.labels, t.masks);
  CHECK(logged == static_cast<int>(a.history.size()));
  CHECK(a.scores == b.scores);
  CHECK(a.test_auroc == b.test_auroc);
  CHECK(a.stopped_epoch <= 60);
  CHECK(a.stopped_epoch == static_cast<int>(a.history.size()));
  double best = a.history.front().val_loss;
  for (const auto& r : a.history) best = std::min(best, r.val_loss);
  CHECK(a.history[a.best_epoch - 1].val_loss == best);
  CHECK(a.test_auroc > 0.7);

  sc.seed = 2;
  const auto c = train_sage(sc, t.graph, t.x, t.labels, t.masks);
  CHECK(c.scores != a.scores);
}

TEST_CASE("training preconditions") {
  auto t = make_toy(50, 3, 1.0, 7);
  MlpConfig mc;
  auto one_class = t.labels;
  std::fill(one_class.begin(), one_class.end(), 0);
  CHECK_THROWS_AS(train_logreg(mc, t.x, one_class, t.masks), Error);
  auto no_val = t.masks;
  std::fill(no_val.val.begin(), no_val.val.end(), 0);
  CHECK_THROWS_AS(train_logreg(mc, t.x, t.labels, no_val), Error);
  std::vector<std::uint8_t> short_labels(10, 1);
  CHECK_THROWS_AS(train_logreg(mc, t.x, short_labels, t.masks), Error);
}

TEST_CASE("grid search ranks every configuration") {
  const auto t = make_toy(120, 5, 1.0, 8);
  GridSpec single;
  single.learning_rates = {1e-3};
  single.layers = {2};
  single.hidden = {32};
  single.aggregators = {Aggregator::Mean};
  single.max_epochs = 5;
  const auto one = grid_search(single, t.graph, t.x, t.labels, t.masks);
  REQUIRE(one.size() == 1);
  CHECK(one[0].config.hidden == 32);

  GridSpec spec = single;
  spec.layers = {2, 3};
  spec.aggregators = {Aggregator::Mean, Aggregator::Max, Aggregator::Add};
  std::size_t calls = 0;
  const auto rows = grid_search(spec, t.graph, t.x, t.labels, t.masks, [&](std::size_t, const GridRow&) { ++calls; });
  CHECK(rows.size() == 6);
  CHECK(calls == 6);
  std::set<std::string> labels;
  for (const auto& r : rows) labels.insert(r.config.label());
  CHECK(labels.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].val_auroc >= rows[i].val_auroc);

  testing::TempDir dir("grid");
  write_grid_csv(rows, dir / "grid.csv", "abc123");
  std::ifstream in(dir / "grid.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_hash=abc123");
  std::getline(in, line);
  CHECK(line.rfind("lr,layers,hidden,aggregator", 0) == 0);
  spec.hidden = {};
  CHECK_THROWS_AS(spec.configs(), Error);
}

TEST_CASE("checkpoint round trip") {
  const auto t = make_toy(30, 4, 1.0, 9);
  testing::TempDir dir("ckpt");
  SageConfig sc;
  sc.hidden = 32;
  SageModel a(sc, 4, t.graph);
  save_checkpoint(a, "{\"hidden\":32}", 1, dir / "model");
  sc.seed = 99;
  SageModel b(sc, 4, t.graph);
  CHECK(a.predict(t.x) != b.predict(t.x));
  load_checkpoint(b, dir / "model");
  const auto pa = a.predict(t.x), pb = b.predict(t.x);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-5));

  MlpModel wrong(MlpConfig{}, 4);
  CHECK_THROWS_AS(load_checkpoint(wrong, dir / "model"), Error);
  sc.hidden = 64;
  SageModel other_shape(sc, 4, t.graph);
  CHECK_THROWS_AS(load_checkpoint(other_shape, dir / "model"), Error);
}
