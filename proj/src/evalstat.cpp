#include "readmit/evalstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "readmit/error.hpp"
#include "readmit/rng.hpp"

namespace readmit::evalstat {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::Shape, "auroc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (auto y : labels) n_pos += y ? 1 : 0;
  const std::size_t n = labels.size(), n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::MetricUndefined, "auroc needs both classes");
  for (double s : scores) {
    if (std::isnan(s)) fail(ErrorKind::MetricUndefined, "auroc: NaN score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum of the positives; tied runs share rank (s + e) / 2.
  std::int64_t twice_rank_sum = 0;
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s;
    while (e + 1 < n && scores[order[e + 1]] == scores[order[s]]) ++e;
    const auto twice_rank = static_cast<std::int64_t>(s + 1 + e + 1);
    for (std::size_t k = s; k <= e; ++k) {
      if (labels[order[k]]) twice_rank_sum += twice_rank;
    }
    s = e + 1;
  }
  const auto np = static_cast<std::int64_t>(n_pos), nn = static_cast<std::int64_t>(n_neg);
  const std::int64_t twice_u = twice_rank_sum - np * (np + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * np * nn);
}

double balanced_accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
  if (predicted.size() != labels.size()) fail(ErrorKind::Shape, "balanced_accuracy: length mismatch");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      (predicted[i] ? tp : fn) += 1;
    } else {
      (predicted[i] ? fp : tn) += 1;
    }
  }
  if (tp + fn == 0 || tn + fp == 0) fail(ErrorKind::MetricUndefined, "balanced accuracy needs both classes");
  const double sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return 0.5 * (sensitivity + specificity);
}

double balanced_accuracy_at(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  std::vector<std::uint8_t> pred(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold ? 1 : 0;
  return balanced_accuracy(pred, labels);
}

Subset select(std::span<const double> scores, std::span<const std::uint8_t> labels,
              std::span<const std::uint8_t> mask) {
  Subset s;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    s.scores.push_back(scores[i]);
    s.labels.push_back(labels[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<PatientGroup> patient_groups(const ingest::Cohort& cohort) {
  std::vector<PatientGroup> out;
  out.reserve(cohort.patients.size());
  for (const auto& [pid, rows] : cohort.patients) {
    PatientGroup g{pid, false, rows.size()};
    for (auto r : rows) g.positive = g.positive || cohort.records[r].label_readmit_30d;
    out.push_back(g);
  }
  return out;
}

std::vector<int> assign_groups(const std::vector<PatientGroup>& groups, std::span<const double> fractions,
                               std::uint64_t seed) {
  const std::size_t bins = fractions.size();
  const std::uint64_t salt = splitmix64(seed);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> hash(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    hash[i] = splitmix64(static_cast<std::uint64_t>(groups[i].patient_id) ^ salt);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (groups[a].positive != groups[b].positive) return groups[a].positive > groups[b].positive;
    if (groups[a].admissions != groups[b].admissions) return groups[a].admissions > groups[b].admissions;
    if (hash[a] != hash[b]) return hash[a] < hash[b];
    return groups[a].patient_id < groups[b].patient_id;
  });

  std::vector<int> bin_of(groups.size(), -1);
  for (int stratum = 1; stratum >= 0; --stratum) {
    double total = 0.0;
    for (const auto& g : groups) {
      if (g.positive == static_cast<bool>(stratum)) total += static_cast<double>(g.admissions);
    }
    std::vector<double> filled(bins, 0.0);
    for (auto idx : order) {
      const auto& g = groups[idx];
      if (g.positive != static_cast<bool>(stratum)) continue;
      std::size_t best = 0;
      double best_deficit = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < bins; ++b) {
        const double deficit = fractions[b] * total - filled[b];
        if (deficit > best_deficit) {
          best_deficit = deficit;
          best = b;
        }
      }
      filled[best] += static_cast<double>(g.admissions);
      bin_of[idx] = static_cast<int>(best);
    }
  }
  return bin_of;
}

NodeMasks make_splits(const ingest::Cohort& cohort, const SplitSpec& spec) {
  if (cohort.records.empty()) fail(ErrorKind::Config, "cannot split an empty cohort");
  if (spec.train <= 0.0 || spec.val < 0.0 || spec.test < 0.0 ||
      std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    fail(ErrorKind::Config, "split fractions must be non-negative, train positive, and sum to 1");
  }
  const auto groups = patient_groups(cohort);
  const double fractions[3] = {spec.train, spec.val, spec.test};
  const auto bins = assign_groups(groups, fractions, spec.seed);
  const std::size_t n = cohort.records.size();
  NodeMasks m{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& mask = bins[g] == 0 ? m.train : bins[g] == 1 ? m.val : m.test;
    for (auto r : cohort.patients.at(groups[g].patient_id)) mask[r] = 1;
  }
  return m;
}

NodeMasks FoldPlan::masks(int fold) const {
  const int val_fold = (fold + 1) % k;
  const std::size_t n = fold_of_node.size();
  NodeMasks m{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const int f = fold_of_node[i];
    if (f == fold) {
      m.test[i] = 1;
    } else if (f == val_fold) {
      m.val[i] = 1;
    } else {
      m.train[i] = 1;
    }
  }
  return m;
}

FoldPlan make_folds(const ingest::Cohort& cohort, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::Config, "need at least 2 folds, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > cohort.patients.size()) {
    fail(ErrorKind::Config, std::to_string(k) + " folds requested for " + std::to_string(cohort.patients.size()) +
                                " patients");
  }
  const auto groups = patient_groups(cohort);
  const std::vector<double> fractions(static_cast<std::size_t>(k), 1.0 / k);
  const auto bins = assign_groups(groups, fractions, seed);
  FoldPlan plan;
  plan.k = k;
  plan.fold_of_node.assign(cohort.records.size(), -1);
  plan.patients.resize(static_cast<std::size_t>(k));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    plan.patients[static_cast<std::size_t>(bins[g])].push_back(groups[g].patient_id);
    for (auto r : cohort.patients.at(groups[g].patient_id)) plan.fold_of_node[r] = bins[g];
  }
  for (auto& p : plan.patients) std::sort(p.begin(), p.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Distributions

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::Config, "normal quantile needs p in (0,1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Numeric, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorKind::Config, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk, AS R94

namespace {

double poly(const double* c, int n, double x) {
  double r = c[0];
  if (n > 1) {
    double p = x * c[n - 1];
    for (int j = n - 2; j > 0; --j) p = (p + c[j]) * x;
    r += p;
  }
  return r;
}

}  // namespace

ShapiroWilk shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) fail(ErrorKind::Config, "Shapiro-Wilk needs 3 <= n <= 5000, got " + std::to_string(n));
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (x.back() - x.front() < 1e-19 * std::max(1.0, std::abs(x.front()))) {
    fail(ErrorKind::DegenerateSample, "Shapiro-Wilk on a sample with zero variance");
  }

  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  // Coefficients for the upper half of the order statistics, a[0] largest.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first_scaled;
    double fac;
    if (n > 5) {
      first_scaled = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first_scaled = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first_scaled; i < half; ++i) a[i] = -m[i] / fac;
  }

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= an;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double num = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  double w = num * num / ss;
  w = std::min(w, 1.0);

  ShapiroWilk r{w, 1.0};
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;  // 6 / pi
    constexpr double stqr = 1.04719755119660;  // pi / 3
    r.p = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    return r;
  }
  double y = std::log(1.0 - w);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      r.p = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    const double ln_n = std::log(an);
    mu = poly(c5, 4, ln_n);
    sigma = std::exp(poly(c6, 3, ln_n));
  }
  r.p = 1.0 - normal_cdf((y - mu) / sigma);
  return r;
}

// ---------------------------------------------------------------------------

TTest t_test(std::span<const double> a, std::span<const double> b, bool paired) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorKind::Config, "t-test needs at least 2 samples per group");
  TTest r;
  if (paired) {
    if (a.size() != b.size()) fail(ErrorKind::Config, "paired t-test needs equal lengths");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    var /= static_cast<double>(n - 1);
    r.df = static_cast<double>(n - 1);
    if (var == 0.0) {
      if (mean == 0.0) {
        r.statistic = 0.0;
        r.p = 1.0;
      } else {
        r.statistic = mean > 0.0 ? INFINITY : -INFINITY;
        r.p = 0.0;
      }
      return r;
    }
    r.statistic = mean / std::sqrt(var / static_cast<double>(n));
  } else {
    auto moments = [](std::span<const double> v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return std::pair{m, s / static_cast<double>(v.size() - 1)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
      r.df = na + nb - 2.0;
      r.statistic = ma == mb ? 0.0 : (ma > mb ? INFINITY : -INFINITY);
      r.p = ma == mb ? 1.0 : 0.0;
      return r;
    }
    r.statistic = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  }
  r.p = std::clamp(student_t_two_sided(r.statistic, r.df), 0.0, 1.0);
  return r;
}

StatReport compare_models(const std::vector<std::pair<std::string, FoldMetrics>>& models, bool paired) {
  if (models.size() < 2) fail(ErrorKind::Config, "compare_models needs at least two models");
  StatReport rep;
  const FoldMetrics& ref = models.front().second;
  for (const auto& [name, metrics] : models) {
    if (metrics.size() != ref.size()) fail(ErrorKind::Config, "model '" + name + "' has a different metric set");
    for (const auto& [metric, values] : ref) {
      auto it = metrics.find(metric);
      if (it == metrics.end()) fail(ErrorKind::Config, "model '" + name + "' lacks metric '" + metric + "'");
      if (it->second.size() != values.size()) {
        fail(ErrorKind::Config, "model '" + name + "' has " + std::to_string(it->second.size()) + " folds for '" +
                                    metric + "', expected " + std::to_string(values.size()));
      }
    }
    rep.models.push_back(name);
    rep.folds[name] = metrics;
  }
  for (const auto& [name, metrics] : models) {
    for (const auto& [metric, values] : metrics) {
      NormalityEntry e{name, metric, shapiro_wilk(values), false};
      e.normal = e.result.p > kSignificance;
      rep.normality.push_back(e);
    }
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = i + 1; j < models.size(); ++j) {
      for (const auto& [metric, values] : models[i].second) {
        ComparisonEntry e{models[i].first, models[j].first, metric,
                          t_test(values, models[j].second.at(metric), paired), false};
        e.significant = e.result.p < kSignificance;
        rep.comparisons.push_back(e);
      }
    }
  }
  return rep;
}

}  // namespace readmit::evalstat
