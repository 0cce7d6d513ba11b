// Monte Carlo estimators and hypothesis tests on the field, the pool and
// the branching approximations. Every estimator derives its randomness from
// the stream it is handed (one substream per replica), so reports are
// deterministic and independent of thread count.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "poolsim/geomfield.hpp"
#include "poolsim/stats.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

/// Radius of the unit-area ball.
double unit_ball_radius();

/// P(|S_N| >= r) for a Gaussian-jump walk with N ~ Poisson(T) jumps.
double endpoint_tail_probability(double r, double T);

/// Expected number of free walkers of a PPP(lambda) started outside
/// B(radius) that reach B(hint) by time T. With `path` set this bounds
/// visits at any jump (maximal inequality), otherwise only the endpoint.
double field_truncation_bound(double lambda, double T, double hint, double radius, bool path);

/// Smallest field radius whose truncation bound is below `tol`.
double field_radius_for(double lambda, double T, double hint, double tol, bool path);

// ---- Conditional field structure around a frozen pool ----

struct KurtzTolerances {
  double fano_lo = 0.9;
  double fano_hi = 1.1;
  double max_abs_correlation = 0.05;
  double mean_z = 3.0;
};

struct KurtzParams {
  double lambda = 1.0;
  double pool_radius = 0.5641895835477563;
  double t = 1.0;
  std::vector<Annulus> annuli;
  /// Attempted replicas; only those without an arrival by t are kept.
  std::uint64_t replicas = 10'000;
  /// Walkers per annulus for the avoidance-probability oracle.
  std::uint64_t oracle_walkers = 100'000;
  /// Outer radius of the simulated field; 0 picks one automatically.
  double field_radius = 0.0;
  KurtzTolerances tol;
};

struct KurtzSample {
  AnnulusCounts counts;
  std::uint64_t attempted = 0;
};

/// Frozen-pool field replicas, keeping those with no entry by time t.
KurtzSample kurtz_sample(const KurtzParams& p, const RngStream& rng);

/// lambda * area * P(walk started uniformly in the annulus avoids the pool
/// through time t), with its Monte Carlo standard error.
void kurtz_intensity(const KurtzParams& p, const RngStream& rng, std::vector<double>& mean,
                     std::vector<double>& se);

/// The statistical core: per-annulus means against intensities, Fano
/// factors and pairwise correlations.
StatReport kurtz_verdict(const AnnulusCounts& counts, std::span<const double> intensity,
                         std::span<const double> intensity_se, const KurtzTolerances& tol);

StatReport kurtz_test(const KurtzParams& p, const RngStream& rng);

// ---- Arrival hazard of a fixed pool ----

struct HazardParams {
  double R = 2.0;
  std::uint64_t replicas = 10'000;
  double lambda = 1.0;
  double t_max = 1.0;
  /// Reference hazard constant for the domination test; 0 means use the
  /// exact initial rate r(R, 0) / R.
  double c_hat = 0.0;
  double alpha = 0.01;
  double field_radius = 0.0;
};

/// Exact initial arrival rate lambda * integral over |y| > R of
/// P(|y + N(0, I)| <= R) dy.
double initial_arrival_rate(double R, double lambda = 1.0);

StatReport hazard_estimate(const HazardParams& p, const RngStream& rng);

/// Linearity check across several hazard reports: r/R spread within `tol`.
StatReport hazard_linearity(std::span<const StatReport> reports, double tol = 0.25);

// ---- Refill of an emptied ball ----

struct RefillParams {
  double lambda = 1.0;
  double R = 5.0;
  double t = 175.0;
  Annulus probe{0.0, 1.0};
  std::uint64_t replicas = 10'000;
  double delta = 0.1;
  double field_radius = 0.0;
};

StatReport refill_density_estimate(const RefillParams& p, const RngStream& rng);

// ---- Single-walker hitting of the unit-area ball ----

struct HittingParams {
  double x_radius = 5.0;
  double k = 100.0;
  std::uint64_t replicas = 100'000;
  double band_lo = 0.2;
  double band_hi = 5.0;
};

StatReport hitting_prob_estimate(const HittingParams& p, const RngStream& rng);

// ---- Distinct particles entering the unit-area ball ----

struct EnteredParams {
  double lambda = 1.0;
  double k = 100.0;
  std::uint64_t replicas = 1000;
  double fano_lo = 0.85;
  double fano_hi = 1.15;
  double field_radius = 0.0;
};

StatReport entered_count_estimate(const EnteredParams& p, const RngStream& rng);

// ---- Growth exponent of the radius ----

struct GrowthFitParams {
  double t_min = 50.0;
  double t_max = 500.0;
  std::size_t points = 64;
  double slope_lo = 0.4;
  double slope_hi = 0.6;
};

StatReport growth_exponent_fit(const Trajectory& traj, const GrowthFitParams& p);
/// Same fit on a sampled curve (e.g. an ensemble median).
StatReport growth_exponent_fit(std::span<const double> times, std::span<const double> radii,
                               const GrowthFitParams& p);

// ---- Tail exponent of cascade / progeny sizes ----

struct TailFitParams {
  double n_min = 10.0;
  double upper_quantile = 0.999;
  double expected_slope = -0.5;
  double tol = 0.1;
  std::size_t min_samples = 10'000;
};

StatReport cascade_tail_fit(std::span<const double> samples, const TailFitParams& p = {});

// ---- Law of large numbers for weighted exponentials ----

struct LlnParams {
  std::uint64_t n = 1'000'000;
  double tol = 0.01;
};

/// Weights c_k = sqrt(pi) / sqrt(k); reports sum T_k / sum c_k.
StatReport exp_lln_check(const LlnParams& p, const RngStream& rng);
/// Same statistic for caller-supplied T_k.
StatReport exp_lln_check(std::span<const double> t, double tol = 0.01);

// ---- Time-0 cascade against the branching law ----

struct CascadeLawParams {
  double lambda = 1.0;
  std::uint64_t replicas = 100'000;
  double p0_tol = 0.005;
  double p1_tol = 0.004;
  double min_pvalue = 0.001;
};

/// Probability that a time-0 cascade started from mass 1 adds n particles,
/// under the Poisson(lambda) branching law: classes 0, 1, 2, 3, >= 4.
std::vector<double> cascade_class_probs(double lambda);

StatReport cascade_law_test(const CascadeLawParams& p, const RngStream& rng);

// ---- Particle-count deviations in a fixed ball ----

struct VolumeSnapshot {
  double time = 0.0;
  std::uint64_t count = 0;
};

StatReport volume_deviation_scan(std::span<const VolumeSnapshot> snapshots, double lambda,
                                 double R, double delta);

/// Counts of free (non-absorbed) walkers in B(R) at the given times.
std::vector<VolumeSnapshot> free_field_ball_counts(double lambda, double R,
                                                   std::span<const double> times,
                                                   const RngStream& rng,
                                                   double field_radius = 0.0);

}  // namespace poolsim
