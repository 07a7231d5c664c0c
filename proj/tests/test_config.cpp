#include <doctest.h>

#include <fstream>

#include "readmit/config.hpp"
#include "readmit/error.hpp"
#include "test_support.hpp"

using namespace readmit;
using namespace readmit::config;

namespace {

RunConfig from_text(const std::string& text) { return from_key_values(KeyValues::parse(text)); }

ErrorKind kind_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("key value syntax") {
  const auto kv = KeyValues::parse(R"(seed = 7   # trailing comment
# whole line
[model]
aggregator = "max"
layers = 3
[grid]
hidden = [32, 128]
[crossval]
paired = false
)");
  CHECK(kv.get_int("seed", 0) == 7);
  CHECK(kv.get_string("model.aggregator", "") == "max");
  CHECK(kv.get_list("grid.hidden", {}) == std::vector<std::string>{"32", "128"});
  CHECK_FALSE(kv.get_bool("crossval.paired", true));
  CHECK(kv.get_real("missing.key", 2.5) == 2.5);
  CHECK_THROWS_AS(kv.get_int("model.aggregator", 0), Error);

  CHECK_THROWS_WITH_AS(KeyValues::parse("a = 1\na = 2\n"), doctest::Contains("duplicate"), Error);
  CHECK_THROWS_AS(KeyValues::parse("[open\n"), Error);
  CHECK_THROWS_AS(KeyValues::parse("just words\n"), Error);
  CHECK_THROWS_AS(KeyValues::load("/nonexistent/run.toml"), Error);
}

TEST_CASE("run config defaults") {
  const auto c = from_text("");
  CHECK(c.seed == 1);
  CHECK(c.tau == 0.9);
  CHECK(c.sage.n_layers == 2);
  CHECK(c.sage.hidden == 64);
  CHECK(c.sage.learning_rate == 1e-5);
  CHECK(c.sage.max_epochs == 150);
  CHECK(c.sage.patience == 10);
  CHECK(c.features.embed_dim == 768);
  CHECK(c.features.n_lab_items == 856);
  CHECK(c.folds == 20);
  CHECK(c.paired);
  CHECK(c.selection == featurize::BlockSelection::all());
  CHECK(c.grid.configs().size() == 108);
}

TEST_CASE("seed drives every component") {
  const auto c = from_text("seed = 42\n[generate]\nn_patients = 50\n[features]\nembed_dim = 8\n");
  CHECK(c.gen.seed == 42);
  CHECK(c.split.seed == 42);
  CHECK(c.sage.seed == 42);
  CHECK(c.mlp.seed == 42);
  CHECK(c.grid.seed == 42);
  CHECK(c.gen.n_patients == 50);
  CHECK(c.features.embed_dim == 8);
  CHECK(c.features.n_lab_items == 856);
  CHECK(c.logreg().hidden_layers.empty());
}

TEST_CASE("configuration errors") {
  CHECK(kind_of("[model]\nhidden = 48\n") == ErrorKind::Config);
  CHECK(kind_of("[model]\naggregator = \"median\"\n") == ErrorKind::Config);
  CHECK(kind_of("[graph]\ntau = 0.85\n") == ErrorKind::Config);
  CHECK(from_text("[graph]\ntau = 0.85\ntau_override = true\n").tau == 0.85);
  CHECK(kind_of("[graph]\ntau = 1.5\ntau_override = true\n") == ErrorKind::Config);
  CHECK(kind_of("[features]\nselection = \"notes\"\n") == ErrorKind::Config);
  CHECK(kind_of("[split]\ntrain = 0.9\n") == ErrorKind::Config);
  CHECK(kind_of("[crossval]\nfolds = 1\n") == ErrorKind::Config);
  CHECK(kind_of("[model]\nmax_epochs = 200\n") == ErrorKind::Config);
  CHECK(kind_of("[generate]\nhomophily_strength = 2\n") == ErrorKind::Config);
  CHECK_THROWS_WITH_AS(from_text("[model]\nlayerz = 2\n"), doctest::Contains("model.layerz"), Error);
  CHECK(exit_code_for(ErrorKind::Config) == 2);
  CHECK(exit_code_for(ErrorKind::Staleness) == 3);
  CHECK(exit_code_for(ErrorKind::Numeric) == 4);
  CHECK(exit_code_for(ErrorKind::Parse) == 1);
}

TEST_CASE("config file") {
  testing::TempDir dir("cfg");
  {
    std::ofstream out(dir / "run.toml");
    out << "seed = 3\n[paths]\nartifact_dir = \"out dir\"\n[grid]\naggregators = [mean, add]\nlearning_rates = [1e-3]\n";
  }
  const auto c = load_run_config(dir / "run.toml");
  CHECK(c.artifact_dir == "out dir");
  CHECK(c.grid.aggregators.size() == 2);
  CHECK(c.grid.configs().size() == 18);
}
