#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "readmit/datagen.hpp"
#include "readmit/evalstat.hpp"
#include "readmit/featurize.hpp"
#include "readmit/models.hpp"

namespace readmit::config {

// "key = value" lines grouped under "[section]" headers; '#' starts a
// comment. Values are numbers, booleans, bare or double-quoted strings, or
// bracketed comma-separated lists. Keys are addressed as "section.key"
// (top-level keys have no prefix).
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& source = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string raw) { values_[key] = std::move(raw); }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

inline constexpr double kReferenceThresholds[] = {0.8, 0.9, 0.95, 0.99};

struct RunConfig {
  // Drives the generator, splits, folds and model initialization.
  std::uint64_t seed = 1;
  std::filesystem::path data_dir = "data";
  std::filesystem::path artifact_dir = "artifacts";

  datagen::GenConfig gen;
  featurize::FeatureOptions features;
  featurize::BlockSelection selection = featurize::BlockSelection::all();

  double tau = 0.9;
  bool tau_override = false;  // permit a threshold outside the reference sweep
  std::size_t tile = 1024;

  models::SageConfig sage;
  models::MlpConfig mlp;
  double logreg_learning_rate = 1e-3;
  models::GridSpec grid;

  evalstat::SplitSpec split;
  int folds = 20;
  bool paired = true;

  void set_seed(std::uint64_t s);
  // Throws a configuration error naming the offending key.
  void validate() const;
  // Baseline settings with no hidden layers and the logistic-regression rate.
  models::MlpConfig logreg() const;
};

// Defaults for absent keys; unknown keys are configuration errors.
RunConfig from_key_values(const KeyValues& kv);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace readmit::config
