#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "readmit/ingest.hpp"

namespace readmit::evalstat {

// P(score_pos > score_neg) + P(tie)/2 via the Mann-Whitney rank sum with
// average ranks for ties. Throws MetricUndefined unless both classes occur.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// (sensitivity + specificity) / 2.
double balanced_accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels);
// Predictions are score >= threshold.
double balanced_accuracy_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            double threshold = 0.5);

// Restriction of scores/labels to rows where mask is set.
struct Subset {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};
Subset select(std::span<const double> scores, std::span<const std::uint8_t> labels,
              std::span<const std::uint8_t> mask);

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 1;
};

struct NodeMasks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;
};

// One entry per patient: grouping key, stratum (patient has any positive
// admission) and group size in admissions.
struct PatientGroup {
  std::int64_t patient_id = 0;
  bool positive = false;
  std::size_t admissions = 0;
};

std::vector<PatientGroup> patient_groups(const ingest::Cohort& cohort);

// Greedy stratified-group allocation: patients sorted by (stratum,
// admissions descending, seeded hash) and dealt one at a time to the bin with
// the largest remaining admission deficit within their stratum. Returns the
// bin of each group.
std::vector<int> assign_groups(const std::vector<PatientGroup>& groups, std::span<const double> fractions,
                               std::uint64_t seed);

NodeMasks make_splits(const ingest::Cohort& cohort, const SplitSpec& spec);

struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of_node;                      // aligned with cohort records
  std::vector<std::vector<std::int64_t>> patients;    // per fold, ascending

  // Fold f is the test set, fold (f + 1) mod k the validation set used for
  // early stopping, and the remaining folds train.
  NodeMasks masks(int fold) const;
};

FoldPlan make_folds(const ingest::Cohort& cohort, int k, std::uint64_t seed);

struct ShapiroWilk {
  double w = 0.0;
  double p = 0.0;
};

// Royston's AS R94 algorithm; 3 <= n <= 5000.
ShapiroWilk shapiro_wilk(std::span<const double> x);

inline constexpr double kPValueFloor = 1e-12;

struct TTest {
  double statistic = 0.0;  // +-inf when the paired differences are constant and nonzero
  double p = 1.0;
  double df = 0.0;
  bool below_floor() const { return p < kPValueFloor; }
};

// Paired Student t on a - b, or Welch's unpaired test. Two-sided p.
TTest t_test(std::span<const double> a, std::span<const double> b, bool paired = true);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-sided tail probability P(|T| >= |t|) for Student t with df degrees.
double student_t_two_sided(double t, double df);
double normal_cdf(double z);
double normal_quantile(double p);

// metric name -> per-fold values
using FoldMetrics = std::map<std::string, std::vector<double>>;

struct NormalityEntry {
  std::string model;
  std::string metric;
  ShapiroWilk result;
  bool normal = false;  // p > 0.05
};

struct ComparisonEntry {
  std::string model_a;
  std::string model_b;
  std::string metric;
  TTest result;
  bool significant = false;  // p < 0.05
};

struct StatReport {
  std::vector<std::string> models;
  std::map<std::string, FoldMetrics> folds;
  std::vector<NormalityEntry> normality;
  std::vector<ComparisonEntry> comparisons;
};

inline constexpr double kSignificance = 0.05;

// Shapiro-Wilk per model and metric, then t-tests for every model pair in
// input order. Models must share metric names and fold counts.
StatReport compare_models(const std::vector<std::pair<std::string, FoldMetrics>>& models, bool paired = true);

}  // namespace readmit::evalstat
