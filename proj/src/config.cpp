#include "readmit/config.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "readmit/error.hpp"

namespace readmit::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside double quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& raw, const char* expected) {
  fail(ErrorKind::Config, "config key '" + key + "': expected " + expected + ", got '" + raw + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "paths.data_dir",
      "paths.artifact_dir",
      "generate.n_patients",
      "generate.mean_admissions_per_patient",
      "generate.readmission_base_rate",
      "generate.homophily_strength",
      "generate.n_lab_items",
      "generate.n_icd_diag",
      "generate.n_icd_proc",
      "generate.note_length_scale",
      "generate.missing_modality_fraction",
      "generate.death_fraction",
      "generate.demographic_concentration",
      "features.embed_dim",
      "features.embed_seed",
      "features.n_lab_items",
      "features.selection",
      "graph.tau",
      "graph.tau_override",
      "graph.tile",
      "model.layers",
      "model.hidden",
      "model.aggregator",
      "model.learning_rate",
      "model.max_epochs",
      "model.patience",
      "baseline.mlp_hidden",
      "baseline.mlp_learning_rate",
      "baseline.logreg_learning_rate",
      "grid.learning_rates",
      "grid.layers",
      "grid.hidden",
      "grid.aggregators",
      "split.train",
      "split.val",
      "split.test",
      "crossval.folds",
      "crossval.paired",
  };
  return keys;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
  KeyValues kv;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(strip_comment(text.substr(pos, end - pos)));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Config, where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(ErrorKind::Config, where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::Config, where + "expected 'key = value'");
    const std::string key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) fail(ErrorKind::Config, where + "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.has(full)) fail(ErrorKind::Config, where + "duplicate key '" + full + "'");
    kv.values_[full] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::vector<std::string> KeyValues::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : unquote(it->second);
}

double KeyValues::get_real(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string s = unquote(it->second);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "a number");
  return v;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string s = unquote(it->second);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "an integer");
  return v;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string s = unquote(it->second);
  if (s == "true") return true;
  if (s == "false") return false;
  bad_value(key, s, "true or false");
}

std::vector<std::string> KeyValues::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string_view v = trim(it->second);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') bad_value(key, std::string(v), "a [list]");
  v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto end = std::min(v.find(',', pos), v.size());
    out.push_back(unquote(v.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  gen.seed = s;
  split.seed = s;
  sage.seed = s;
  mlp.seed = s;
  grid.seed = s;
}

models::MlpConfig RunConfig::logreg() const {
  models::MlpConfig c = mlp;
  c.hidden_layers.clear();
  c.learning_rate = logreg_learning_rate;
  return c;
}

void RunConfig::validate() const {
  gen.validate();
  if (features.embed_dim == 0) fail(ErrorKind::Config, "features.embed_dim must be positive");
  if (features.n_lab_items == 0) fail(ErrorKind::Config, "features.n_lab_items must be positive");
  if (!selection.contains(featurize::BlockKind::Admissions)) {
    fail(ErrorKind::Config, "features.selection must include admissions");
  }
  if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorKind::Config, "graph.tau must lie in (0, 1]");
  if (!tau_override && std::find(std::begin(kReferenceThresholds), std::end(kReferenceThresholds), tau) ==
                           std::end(kReferenceThresholds)) {
    fail(ErrorKind::Config, "graph.tau must be one of 0.8, 0.9, 0.95, 0.99 unless graph.tau_override = true");
  }
  if (tile == 0) fail(ErrorKind::Config, "graph.tile must be positive");
  sage.validate();
  mlp.validate();
  logreg().validate();
  (void)grid.configs();
  if (split.train <= 0.0 || split.val <= 0.0 || split.test < 0.0 ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
    fail(ErrorKind::Config, "split.train and split.val must be positive, split.test non-negative, summing to 1");
  }
  if (folds < 2) fail(ErrorKind::Config, "crossval.folds must be at least 2");
}

RunConfig from_key_values(const KeyValues& kv) {
  for (const auto& k : kv.keys()) {
    if (!known_keys().count(k)) fail(ErrorKind::Config, "unknown config key '" + k + "'");
  }
  auto to_int = [](const std::string& key, const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "an integer");
    return v;
  };
  auto to_real = [](const std::string& key, const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "a number");
    return v;
  };

  RunConfig c;
  const std::int64_t seed = kv.get_int("seed", 1);
  if (seed < 0) fail(ErrorKind::Config, "seed must be non-negative");
  c.set_seed(static_cast<std::uint64_t>(seed));
  c.data_dir = kv.get_string("paths.data_dir", c.data_dir.string());
  c.artifact_dir = kv.get_string("paths.artifact_dir", c.artifact_dir.string());

  auto& g = c.gen;
  g.n_patients = static_cast<int>(kv.get_int("generate.n_patients", g.n_patients));
  g.mean_admissions_per_patient = kv.get_real("generate.mean_admissions_per_patient", g.mean_admissions_per_patient);
  g.readmission_base_rate = kv.get_real("generate.readmission_base_rate", g.readmission_base_rate);
  g.homophily_strength = kv.get_real("generate.homophily_strength", g.homophily_strength);
  g.n_lab_items = static_cast<int>(kv.get_int("generate.n_lab_items", g.n_lab_items));
  g.n_icd_diag = static_cast<int>(kv.get_int("generate.n_icd_diag", g.n_icd_diag));
  g.n_icd_proc = static_cast<int>(kv.get_int("generate.n_icd_proc", g.n_icd_proc));
  g.note_length_scale = kv.get_real("generate.note_length_scale", g.note_length_scale);
  g.missing_modality_fraction = kv.get_real("generate.missing_modality_fraction", g.missing_modality_fraction);
  g.death_fraction = kv.get_real("generate.death_fraction", g.death_fraction);
  g.demographic_concentration = kv.get_real("generate.demographic_concentration", g.demographic_concentration);

  const std::int64_t embed_dim = kv.get_int("features.embed_dim", static_cast<std::int64_t>(c.features.embed_dim));
  const std::int64_t lab_items = kv.get_int("features.n_lab_items", g.n_lab_items);
  if (embed_dim <= 0) fail(ErrorKind::Config, "features.embed_dim must be positive");
  if (lab_items <= 0) fail(ErrorKind::Config, "features.n_lab_items must be positive");
  c.features.embed_dim = static_cast<std::size_t>(embed_dim);
  c.features.n_lab_items = static_cast<std::size_t>(lab_items);
  c.features.embed_seed =
      static_cast<std::uint64_t>(kv.get_int("features.embed_seed", static_cast<std::int64_t>(c.features.embed_seed)));
  c.selection = featurize::BlockSelection::parse(kv.get_string("features.selection", "all"));

  c.tau = kv.get_real("graph.tau", c.tau);
  c.tau_override = kv.get_bool("graph.tau_override", c.tau_override);
  const std::int64_t tile = kv.get_int("graph.tile", static_cast<std::int64_t>(c.tile));
  if (tile <= 0) fail(ErrorKind::Config, "graph.tile must be positive");
  c.tile = static_cast<std::size_t>(tile);

  auto& s = c.sage;
  s.n_layers = static_cast<int>(kv.get_int("model.layers", s.n_layers));
  s.hidden = static_cast<int>(kv.get_int("model.hidden", s.hidden));
  s.aggregator = neuro::aggregator_from_name(kv.get_string("model.aggregator", "mean"));
  s.learning_rate = kv.get_real("model.learning_rate", s.learning_rate);
  s.max_epochs = static_cast<int>(kv.get_int("model.max_epochs", s.max_epochs));
  s.patience = static_cast<int>(kv.get_int("model.patience", s.patience));

  c.mlp.max_epochs = s.max_epochs;
  c.mlp.patience = s.patience;
  c.mlp.learning_rate = kv.get_real("baseline.mlp_learning_rate", c.mlp.learning_rate);
  if (kv.has("baseline.mlp_hidden")) {
    c.mlp.hidden_layers.clear();
    for (const auto& v : kv.get_list("baseline.mlp_hidden", {})) c.mlp.hidden_layers.push_back(to_int("baseline.mlp_hidden", v));
  }
  c.logreg_learning_rate = kv.get_real("baseline.logreg_learning_rate", c.logreg_learning_rate);

  c.grid.max_epochs = s.max_epochs;
  c.grid.patience = s.patience;
  if (kv.has("grid.learning_rates")) {
    c.grid.learning_rates.clear();
    for (const auto& v : kv.get_list("grid.learning_rates", {})) c.grid.learning_rates.push_back(to_real("grid.learning_rates", v));
  }
  if (kv.has("grid.layers")) {
    c.grid.layers.clear();
    for (const auto& v : kv.get_list("grid.layers", {})) c.grid.layers.push_back(to_int("grid.layers", v));
  }
  if (kv.has("grid.hidden")) {
    c.grid.hidden.clear();
    for (const auto& v : kv.get_list("grid.hidden", {})) c.grid.hidden.push_back(to_int("grid.hidden", v));
  }
  if (kv.has("grid.aggregators")) {
    c.grid.aggregators.clear();
    for (const auto& v : kv.get_list("grid.aggregators", {})) c.grid.aggregators.push_back(neuro::aggregator_from_name(v));
  }

  c.split.train = kv.get_real("split.train", c.split.train);
  c.split.val = kv.get_real("split.val", c.split.val);
  c.split.test = kv.get_real("split.test", c.split.test);
  c.folds = static_cast<int>(kv.get_int("crossval.folds", c.folds));
  c.paired = kv.get_bool("crossval.paired", c.paired);

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return from_key_values(KeyValues::load(path)); }

}  // namespace readmit::config
