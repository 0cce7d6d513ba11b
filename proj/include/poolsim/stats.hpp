// Report type and the small statistical toolbox shared by the estimators.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "poolsim/geomfield.hpp"

namespace poolsim {

enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view name);

struct StatReport {
  std::string name;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t n_samples = 0;
  Verdict verdict = Verdict::inconclusive;
  /// Tolerances, sub-statistics and anything else needed to audit the verdict.
  nlohmann::json details = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;
  static StatReport from_json(const nlohmann::json& j);
  [[nodiscard]] double ci_width() const { return ci_high - ci_low; }
};

/// Per-replica counts over a list of annuli.
struct AnnulusCounts {
  std::vector<Annulus> annuli;
  std::vector<std::vector<std::uint64_t>> counts;  // replica x annulus

  /// Throws std::invalid_argument on ragged rows.
  void validate() const;
  [[nodiscard]] std::size_t replicas() const { return counts.size(); }
  [[nodiscard]] std::vector<double> column(std::size_t a) const;
};

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  std::uint64_t n = 0;
  [[nodiscard]] double se() const;
  [[nodiscard]] double fano() const;
};

Summary summarize(std::span<const double> xs);
double pearson(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs two distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Sample quantile, linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> xs, double p);

/// Upper tail P(chi2_df >= x).
double chi_square_sf(double x, double df);

/// Pearson goodness-of-fit p-value for observed counts against expected
/// class probabilities (which must sum to 1).
double chi_square_gof_pvalue(std::span<const std::uint64_t> observed,
                             std::span<const double> probs);

/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_sf(double x);

/// One-sided KS statistic sup_x (F_n(x) - F(x)) for a sample against a cdf.
template <typename Cdf>
double ks_plus(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - cdf(xs[i]));
  }
  return d;
}

/// Upper bound on P(D+_n >= d): exp(-2 n d^2).
inline double ks_one_sided_pvalue(double d, std::size_t n) {
  return std::exp(-2.0 * static_cast<double>(n) * d * d);
}

}  // namespace poolsim
