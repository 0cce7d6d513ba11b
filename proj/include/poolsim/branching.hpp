// Poisson Galton-Watson analytics, total-progeny sampling and the
// branching-driven process that dominates the pool radius.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "poolsim/geomfield.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

struct GwParams {
  double offspring_mean = 1.0;
  double root_mean = 1.0;
  void validate() const;
};

/// Smallest root of q = exp(lambda (q - 1)). Equal to 1 for lambda <= 1.
double extinction_prob(double lambda);

/// (1 - 1/e) (1 - q(lambda)); lambda must exceed 1.
double survival_lower_bound(double lambda);

/// Borel(1) law: e^{-n} n^{n-1} / n!. Throws for n == 0.
double borel_pmf(std::uint64_t n);

struct ProgenySample {
  std::uint64_t count = 0;
  bool capped = false;
};

/// Total size of generations 1, 2, ... of a Poisson GW process whose first
/// generation is Poisson(root_mean). The root itself is not counted.
ProgenySample sample_total_progeny(const GwParams& params, std::uint64_t cap, RngStream& rng);

/// Total progeny including the root of a Poisson(mean) tree: 1 + progeny.
/// At mean 1 this is a Borel(1) draw.
std::uint64_t sample_borel(double mean, RngStream& rng, std::uint64_t cap = std::uint64_t{1} << 50);

struct DominatingConfig {
  double hazard_constant = 1.0;
  std::uint64_t step_count = 1000;
  /// Offspring mean of the progeny law (1 is the critical case).
  double offspring_mean = 1.0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  void validate() const;
};

/// Dominating step process: R_n = sqrt(sum_{i<=n} X_i / pi), event times
/// tau_n = sum_{k<n} T_k / (C R_k) with T_k ~ Exp(1).
Trajectory dominating_trajectory(const DominatingConfig& cfg);

/// Same construction from fixed inputs. x has step_count + 1 entries
/// (X_0 .. X_n); t has step_count entries (T_0 .. T_{n-1}).
Trajectory dominating_trajectory(std::span<const std::uint64_t> x, std::span<const double> t,
                                 double hazard_constant);

/// Copy of `cfg` with C replaced by an estimated hazard constant.
DominatingConfig with_hazard_constant(DominatingConfig cfg, double c_hat);

}  // namespace poolsim
