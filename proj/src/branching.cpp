#include "poolsim/branching.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "poolsim/engulf.hpp"

namespace poolsim {

void GwParams::validate() const {
  if (!(offspring_mean > 0.0) || !std::isfinite(offspring_mean)) {
    throw std::invalid_argument("offspring_mean must be finite and > 0");
  }
  if (!(root_mean > 0.0) || !std::isfinite(root_mean)) {
    throw std::invalid_argument("root_mean must be finite and > 0");
  }
}

double extinction_prob(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("extinction_prob requires lambda > 0");
  }
  if (lambda <= 1.0) return 1.0;

  // Damped iteration from 0 increases monotonically toward the smallest root.
  double q = 0.0;
  const double omega = 0.9;
  for (int it = 0; it < 10'000'000; ++it) {
    const double next = (1.0 - omega) * q + omega * std::exp(lambda * (q - 1.0));
    if (std::abs(next - q) < 1e-10) {
      q = next;
      break;
    }
    q = next;
  }
  for (int it = 0; it < 50; ++it) {
    const double e = std::exp(lambda * (q - 1.0));
    const double f = e - q;
    const double df = lambda * e - 1.0;
    if (df >= 0.0) break;  // would head for the trivial root at 1
    const double step = f / df;
    q -= step;
    if (std::abs(step) < 1e-16) break;
  }
  return q;
}

double survival_lower_bound(double lambda) {
  if (!(lambda > 1.0)) {
    throw std::invalid_argument("survival_lower_bound requires lambda > 1");
  }
  return (1.0 - std::exp(-1.0)) * (1.0 - extinction_prob(lambda));
}

double borel_pmf(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("borel_pmf requires n >= 1");
  const double x = static_cast<double>(n);
  return std::exp(-x + (x - 1.0) * std::log(x) - std::lgamma(x + 1.0));
}

ProgenySample sample_total_progeny(const GwParams& params, std::uint64_t cap, RngStream& rng) {
  params.validate();
  if (cap < 1) throw std::invalid_argument("sample_total_progeny requires cap >= 1");
  ProgenySample out;
  double mean = params.root_mean;
  while (true) {
    const std::uint64_t gen = poisson_count(mean, rng);
    if (gen == 0) break;
    out.count += gen;
    if (out.count > cap) {
      out.capped = true;
      break;
    }
    mean = static_cast<double>(gen) * params.offspring_mean;
  }
  return out;
}

std::uint64_t sample_borel(double mean, RngStream& rng, std::uint64_t cap) {
  const ProgenySample s = sample_total_progeny({mean, mean}, cap, rng);
  return 1 + s.count;
}

void DominatingConfig::validate() const {
  if (!(hazard_constant > 0.0) || !std::isfinite(hazard_constant)) {
    throw std::invalid_argument("hazard_constant > 0");
  }
  if (!(offspring_mean > 0.0) || !std::isfinite(offspring_mean)) {
    throw std::invalid_argument("offspring_mean > 0");
  }
}

Trajectory dominating_trajectory(std::span<const std::uint64_t> x, std::span<const double> t,
                                 double hazard_constant) {
  if (x.size() != t.size() + 1) {
    throw std::invalid_argument("dominating_trajectory needs one more X than T");
  }
  if (!(hazard_constant > 0.0)) throw std::invalid_argument("hazard_constant > 0");
  Trajectory traj;
  traj.info.engine = "dominating";
  std::uint64_t total = 0;
  double tau = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (x[n] == 0) throw std::invalid_argument("progeny samples include the root, so X >= 1");
    if (n > 0) {
      const double r_prev = radius_from_mass(total);
      const double next = tau + t[n - 1] / (hazard_constant * r_prev);
      // A zero holding time would break strict time ordering; fold it in.
      if (!(next > tau) && !traj.events.empty()) {
        auto& last = traj.events.back();
        total += x[n];
        last.mass_after = total;
        last.radius_after = radius_from_mass(total);
        last.rounds.back() += x[n];
        continue;
      }
      tau = next;
    }
    total += x[n];
    TrajectoryEvent ev;
    ev.time = tau;
    ev.kind = n == 0 ? EventKind::initial_cascade : EventKind::arrival;
    ev.mass_after = total;
    ev.radius_after = radius_from_mass(total);
    ev.arrivals = n == 0 ? 0 : 1;
    ev.rounds = {x[n] - 1};
    traj.events.push_back(std::move(ev));
  }
  traj.horizon = tau;
  traj.info.events_processed = x.size();
  return traj;
}

Trajectory dominating_trajectory(const DominatingConfig& cfg) {
  cfg.validate();
  RngStream root(cfg.master_seed, cfg.stream_index);
  RngStream prog = root.substream(StreamTag::branching);
  RngStream clocks = root.substream(StreamTag::clocks);
  std::vector<std::uint64_t> x(cfg.step_count + 1);
  std::vector<double> t(cfg.step_count);
  for (auto& xi : x) xi = sample_borel(cfg.offspring_mean, prog);
  for (auto& ti : t) ti = -std::log(clocks.uniform_open());
  return dominating_trajectory(x, t, cfg.hazard_constant);
}

DominatingConfig with_hazard_constant(DominatingConfig cfg, double c_hat) {
  if (!(c_hat > 0.0) || !std::isfinite(c_hat)) {
    throw std::invalid_argument("estimated hazard constant must be finite and > 0");
  }
  cfg.hazard_constant = c_hat;
  return cfg;
}

}  // namespace poolsim
