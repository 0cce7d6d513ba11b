#include "poolsim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "poolsim/engulf.hpp"

namespace poolsim {

double unit_ball_radius() { return 1.0 / std::sqrt(kPi); }

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double exp1(RngStream& rng) { return -std::log(rng.uniform_open()); }

// Runs a rate-1 Gaussian-jump walker from p over (0, t]. Returns the time of
// the first jump landing in the closed ball of squared radius r2, or nullopt.
// On return p holds the position at the stopping time (or at t).
std::optional<double> walk_until_hit(Point2& p, double t, double r2, RngStream& rng) {
  double s = exp1(rng);
  while (s <= t) {
    p = p + gaussian_jump(rng);
    if (p.norm2() <= r2) return s;
    s += exp1(rng);
  }
  return std::nullopt;
}

Point2 uniform_in_annulus(const Annulus& a, RngStream& rng) {
  const double ri2 = a.inner() * a.inner();
  const double r = std::sqrt(ri2 + rng.uniform_open() * (a.outer() * a.outer() - ri2));
  const double th = 2.0 * kPi * rng.uniform_open();
  return {r * std::cos(th), r * std::sin(th)};
}

StatReport make_report(std::string name, double est, double se, std::uint64_t n) {
  StatReport r;
  r.name = std::move(name);
  r.estimate = est;
  r.ci_low = est - 1.96 * se;
  r.ci_high = est + 1.96 * se;
  r.n_samples = n;
  return r;
}

}  // namespace

// E[exp(-r^2 / 2N)] for N ~ Poisson(T): the exact probability that the
// endpoint of a T-horizon walk has moved at least r. Mass beyond the summed
// range is counted as 1.
double endpoint_tail_probability(double r, double T) {
  if (r <= 0.0) return 1.0;
  if (T <= 0.0) return 0.0;
  const double nmax = std::ceil(T + 12.0 * std::sqrt(T) + 30.0);
  double sum = 0.0;
  double log_pmf = -T;  // n = 0, contributes 0 since r > 0
  for (double n = 1.0; n <= nmax; n += 1.0) {
    log_pmf += std::log(T) - std::log(n);
    sum += std::exp(log_pmf - r * r / (2.0 * n));
  }
  return std::min(1.0, sum + boost::math::gamma_p(nmax + 1.0, T));
}

// Expected number of walkers started outside B(radius) that reach B(hint)
// by time T: path = true uses Levy's maximal inequality (factor 2), else the
// endpoint only.
double field_truncation_bound(double lambda, double T, double hint, double radius, bool path) {
  if (lambda <= 0.0) return 0.0;
  const double c = path ? 2.0 : 1.0;
  auto f = [&](double d) { return 2.0 * kPi * d * std::min(1.0, c * endpoint_tail_probability(d - hint, T)); };
  const double width = std::max(2.0, std::sqrt(T + 1.0));
  double total = 0.0;
  double lo = std::max(radius, hint);
  for (int seg = 0; seg < 10000; ++seg) {
    const double part = GK::integrate(f, lo, lo + width, 8, 1e-10);
    total += part;
    if (lo - hint > 3.0 * width && part <= 1e-14 * std::max(total, 1e-300)) break;
    lo += width;
  }
  return lambda * total;
}

double field_radius_for(double lambda, double T, double hint, double tol, bool path) {
  double lo = hint;
  double hi = hint + 1.0;
  while (field_truncation_bound(lambda, T, hint, hi, path) > tol) hi = hint + 2.0 * (hi - hint);
  for (int i = 0; i < 40 && hi - lo > 1e-3; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (field_truncation_bound(lambda, T, hint, mid, path) > tol) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------------------

KurtzSample kurtz_sample(const KurtzParams& p, const RngStream& rng) {
  if (p.annuli.empty()) throw std::invalid_argument("kurtz_test needs at least one annulus");
  for (const auto& a : p.annuli) {
    if (a.inner() < p.pool_radius) {
      throw std::invalid_argument("kurtz_test annuli must lie outside the pool");
    }
  }
  if (!(p.t >= 0.0)) throw std::invalid_argument("kurtz_test needs t >= 0");
  double outer = 0.0;
  for (const auto& a : p.annuli) outer = std::max(outer, a.outer());
  const double rf = p.field_radius > 0.0
                        ? p.field_radius
                        : field_radius_for(p.lambda, p.t, outer, 1e-4, true);
  const double pool2 = p.pool_radius * p.pool_radius;
  const Annulus field(p.pool_radius, std::max(rf, outer));
  const std::size_t na = p.annuli.size();

  std::vector<std::vector<std::uint64_t>> rows(p.replicas);
  std::vector<std::uint8_t> kept(p.replicas, 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream frng = rng.substream(StreamTag::field, static_cast<std::uint64_t>(i));
    RngStream mrng = rng.substream(StreamTag::moves, static_cast<std::uint64_t>(i));
    auto pts = sample_ppp_annulus(p.lambda, field, frng);
    std::vector<std::uint64_t> row(na, 0);
    bool hit = false;
    for (auto& q : pts) {
      if (walk_until_hit(q, p.t, pool2, mrng)) {
        hit = true;
        break;
      }
      for (std::size_t a = 0; a < na; ++a) {
        if (p.annuli[a].contains(q)) {
          ++row[a];
          break;
        }
      }
    }
    if (!hit) {
      rows[static_cast<std::size_t>(i)] = std::move(row);
      kept[static_cast<std::size_t>(i)] = 1;
    }
  }
  KurtzSample out;
  out.attempted = p.replicas;
  out.counts.annuli = p.annuli;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (kept[i]) out.counts.counts.push_back(std::move(rows[i]));
  }
  return out;
}

void kurtz_intensity(const KurtzParams& p, const RngStream& rng, std::vector<double>& mean,
                     std::vector<double>& se) {
  const double pool2 = p.pool_radius * p.pool_radius;
  mean.assign(p.annuli.size(), 0.0);
  se.assign(p.annuli.size(), 0.0);
  for (std::size_t a = 0; a < p.annuli.size(); ++a) {
    RngStream orng = rng.substream(StreamTag::oracle, a);
    std::uint64_t avoid = 0;
    for (std::uint64_t w = 0; w < p.oracle_walkers; ++w) {
      Point2 q = uniform_in_annulus(p.annuli[a], orng);
      if (!walk_until_hit(q, p.t, pool2, orng)) ++avoid;
    }
    const double n = static_cast<double>(p.oracle_walkers);
    const double ph = static_cast<double>(avoid) / n;
    const double scale = p.lambda * p.annuli[a].area();
    mean[a] = scale * ph;
    se[a] = scale * std::sqrt(ph * (1.0 - ph) / n);
  }
}

StatReport kurtz_verdict(const AnnulusCounts& counts, std::span<const double> intensity,
                         std::span<const double> intensity_se, const KurtzTolerances& tol) {
  counts.validate();
  const std::size_t na = counts.annuli.size();
  if (intensity.size() != na || intensity_se.size() != na) {
    throw std::invalid_argument("kurtz_verdict: intensity list does not match annuli");
  }
  StatReport r;
  r.name = "kurtz_test";
  r.n_samples = counts.replicas();
  r.details["fano_lo"] = tol.fano_lo;
  r.details["fano_hi"] = tol.fano_hi;
  r.details["max_abs_correlation"] = tol.max_abs_correlation;
  r.details["mean_z"] = tol.mean_z;
  if (counts.replicas() < 2) {
    r.verdict = Verdict::inconclusive;
    r.details["reason"] = "fewer than two retained replicas";
    return r;
  }

  bool ok = true;
  double worst_fano = 1.0;
  double worst_fano_se = 0.0;
  nlohmann::json per = nlohmann::json::array();
  std::vector<std::vector<double>> cols(na);
  for (std::size_t a = 0; a < na; ++a) {
    cols[a] = counts.column(a);
    const Summary s = summarize(cols[a]);
    const double fano = s.fano();
    const double z = (s.mean - intensity[a]) /
                     std::sqrt(s.se() * s.se() + intensity_se[a] * intensity_se[a] + 1e-300);
    const bool fano_ok = fano >= tol.fano_lo && fano <= tol.fano_hi;
    const bool mean_ok = std::abs(z) <= tol.mean_z;
    ok = ok && fano_ok && mean_ok;
    const double fano_se = std::sqrt((2.0 + (s.mean > 0 ? 1.0 / s.mean : 0.0)) /
                                     static_cast<double>(s.n));
    if (std::abs(fano - 1.0) >= std::abs(worst_fano - 1.0)) {
      worst_fano = fano;
      worst_fano_se = fano_se;
    }
    per.push_back({{"inner", counts.annuli[a].inner()},
                   {"outer", counts.annuli[a].outer()},
                   {"mean", s.mean},
                   {"mean_se", s.se()},
                   {"intensity", intensity[a]},
                   {"intensity_se", intensity_se[a]},
                   {"z", z},
                   {"fano", fano},
                   {"fano_ok", fano_ok},
                   {"mean_ok", mean_ok}});
  }
  double worst_corr = 0.0;
  nlohmann::json corr = nlohmann::json::array();
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = a + 1; b < na; ++b) {
      const double c = pearson(cols[a], cols[b]);
      worst_corr = std::max(worst_corr, std::abs(c));
      corr.push_back({{"a", a}, {"b", b}, {"r", c}});
    }
  }
  if (worst_corr >= tol.max_abs_correlation) ok = false;
  r.details["annuli"] = per;
  r.details["correlations"] = corr;
  r.details["worst_abs_correlation"] = worst_corr;
  r.estimate = worst_fano;
  r.ci_low = worst_fano - 1.96 * worst_fano_se;
  r.ci_high = worst_fano + 1.96 * worst_fano_se;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  return r;
}

StatReport kurtz_test(const KurtzParams& p, const RngStream& rng) {
  if (p.replicas < 1000) throw std::invalid_argument("kurtz_test needs replicas >= 1000");
  KurtzSample s = kurtz_sample(p, rng);
  if (s.counts.replicas() == 0) {
    StatReport r;
    r.name = "kurtz_test";
    r.verdict = Verdict::inconclusive;
    r.details["reason"] = "no retained replicas";
    r.details["attempted"] = s.attempted;
    return r;
  }
  std::vector<double> mean, se;
  kurtz_intensity(p, rng, mean, se);
  StatReport r = kurtz_verdict(s.counts, mean, se, p.tol);
  r.details["attempted"] = s.attempted;
  r.details["retained"] = s.counts.replicas();
  r.details["t"] = p.t;
  r.details["lambda"] = p.lambda;
  r.details["pool_radius"] = p.pool_radius;
  return r;
}

// ---------------------------------------------------------------------------

double initial_arrival_rate(double R, double lambda) {
  if (!(R > 0.0)) throw std::invalid_argument("initial_arrival_rate needs R > 0");
  auto f = [&](double rho) {
    boost::math::non_central_chi_squared_distribution<double> d(2.0, rho * rho);
    return 2.0 * kPi * rho * boost::math::cdf(d, R * R);
  };
  double total = 0.0;
  for (double lo = R; lo < R + 16.0; lo += 4.0) total += GK::integrate(f, lo, lo + 4.0, 10, 1e-12);
  return lambda * total;
}

StatReport hazard_estimate(const HazardParams& p, const RngStream& rng) {
  if (!(p.R >= unit_ball_radius())) throw std::invalid_argument("hazard_estimate needs R >= 1/sqrt(pi)");
  if (p.replicas < 1000) throw std::invalid_argument("hazard_estimate needs replicas >= 1000");
  if (!(p.t_max > 0.0)) throw std::invalid_argument("hazard_estimate needs t_max > 0");
  if (!(p.lambda >= 0.0)) throw std::invalid_argument("hazard_estimate needs lambda >= 0");

  const double rf =
      p.field_radius > 0.0 ? p.field_radius : field_radius_for(p.lambda, p.t_max, p.R, 1e-4, true);
  const double R2 = p.R * p.R;
  const Annulus field(p.R, std::max(rf, p.R));
  std::vector<double> dtau(p.replicas);
  std::vector<std::uint8_t> hit(p.replicas, 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream frng = rng.substream(StreamTag::field, static_cast<std::uint64_t>(i));
    RngStream mrng = rng.substream(StreamTag::moves, static_cast<std::uint64_t>(i));
    auto pts = sample_ppp_annulus(p.lambda, field, frng);
    double best = p.t_max;
    bool any = false;
    for (auto& q : pts) {
      // Only the earliest entry matters; stop each walker at the current best.
      if (auto s = walk_until_hit(q, best, R2, mrng)) {
        if (*s < best) {
          best = *s;
          any = true;
        }
      }
    }
    dtau[static_cast<std::size_t>(i)] = best;
    hit[static_cast<std::size_t>(i)] = any ? 1 : 0;
  }

  const auto events = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
  const double exposure = std::accumulate(dtau.begin(), dtau.end(), 0.0);
  const double rate = static_cast<double>(events) / exposure;
  const double se = events > 0 ? rate / std::sqrt(static_cast<double>(events)) : 0.0;
  StatReport r = make_report("hazard_estimate", rate, se, p.replicas);
  r.details["R"] = p.R;
  r.details["lambda"] = p.lambda;
  r.details["t_max"] = p.t_max;
  r.details["censored"] = p.replicas - events;
  r.details["rate_over_R"] = rate / p.R;
  r.details["rate_over_R_se"] = se / p.R;
  r.details["field_radius"] = field.outer();
  r.details["truncation_bound"] = field_truncation_bound(p.lambda, p.t_max, p.R, field.outer(), true);
  if (events == 0) {
    r.verdict = Verdict::inconclusive;
    r.details["reason"] = "no arrivals";
    return r;
  }

  const double exact0 = initial_arrival_rate(p.R, p.lambda);
  const double c_hat = p.c_hat > 0.0 ? p.c_hat : exact0 / p.R;
  const double ref_rate = c_hat * p.R;
  // One-sided KS: the first-arrival time should dominate Exp(C R); censored
  // times never count as arrivals.
  std::vector<double> arrived;
  for (std::size_t i = 0; i < dtau.size(); ++i) {
    if (hit[i]) arrived.push_back(dtau[i]);
  }
  std::sort(arrived.begin(), arrived.end());
  const double n = static_cast<double>(p.replicas);
  double d_plus = 0.0;
  for (std::size_t i = 0; i < arrived.size(); ++i) {
    d_plus = std::max(d_plus, static_cast<double>(i + 1) / n + std::expm1(-ref_rate * arrived[i]));
  }
  const double ks_p = ks_one_sided_pvalue(d_plus, p.replicas);
  r.details["initial_rate_exact"] = exact0;
  r.details["c_hat"] = c_hat;
  r.details["ks_d_plus"] = d_plus;
  r.details["ks_pvalue"] = ks_p;
  r.details["alpha"] = p.alpha;
  r.verdict = ks_p > p.alpha ? Verdict::pass : Verdict::fail;
  return r;
}

StatReport hazard_linearity(std::span<const StatReport> reports, double tol) {
  StatReport r;
  r.name = "hazard_linearity";
  r.details["tol"] = tol;
  std::vector<double> ratios;
  bool sub_ok = true;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& rep : reports) {
    if (rep.verdict == Verdict::inconclusive) continue;
    const double R = rep.details.at("R").get<double>();
    ratios.push_back(rep.estimate / R);
    sub_ok = sub_ok && rep.verdict == Verdict::pass;
    per.push_back({{"R", R}, {"rate", rep.estimate}, {"ratio", rep.estimate / R},
                   {"domination", std::string(to_string(rep.verdict))}});
    r.n_samples += rep.n_samples;
  }
  r.details["per_radius"] = per;
  if (ratios.size() < 2) {
    r.verdict = Verdict::inconclusive;
    return r;
  }
  const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = *mx / *mn - 1.0;
  r.estimate = spread;
  r.ci_low = r.ci_high = spread;
  r.details["min_ratio"] = *mn;
  r.details["max_ratio"] = *mx;
  r.details["domination_all_pass"] = sub_ok;
  r.verdict = (spread <= tol && sub_ok) ? Verdict::pass : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------

StatReport refill_density_estimate(const RefillParams& p, const RngStream& rng) {
  if (!(p.t >= 0.0)) throw std::invalid_argument("refill needs t >= 0");
  if (!(p.R > 0.0)) throw std::invalid_argument("refill needs R > 0");
  if (!(p.lambda > 0.0)) throw std::invalid_argument("refill needs lambda > 0");
  const double hint = std::max(p.R, p.probe.outer());
  const double expected = p.lambda * p.probe.area();
  const double rf = p.field_radius > 0.0
                        ? p.field_radius
                        : field_radius_for(p.lambda, p.t, hint, 1e-3 * expected, false);
  const Annulus field(p.R, std::max(rf, hint));
  std::vector<double> counts(p.replicas);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream frng = rng.substream(StreamTag::field, static_cast<std::uint64_t>(i));
    RngStream mrng = rng.substream(StreamTag::moves, static_cast<std::uint64_t>(i));
    auto pts = sample_ppp_annulus(p.lambda, field, frng);
    std::uint64_t c = 0;
    if (p.t > 0.0) {
      for (const auto& q : pts) {
        const Point2 z = q + displacement_after_jumps(poisson_count(p.t, mrng), mrng);
        if (p.probe.contains(z)) ++c;
      }
    } else {
      for (const auto& q : pts) {
        if (p.probe.contains(q)) ++c;
      }
    }
    counts[static_cast<std::size_t>(i)] = static_cast<double>(c);
  }
  const Summary s = summarize(counts);
  StatReport r = make_report("refill_density_estimate", s.mean / expected, s.se() / expected,
                             p.replicas);
  r.details["lambda"] = p.lambda;
  r.details["R"] = p.R;
  r.details["t"] = p.t;
  r.details["delta"] = p.delta;
  r.details["threshold"] = 1.0 - p.delta;
  r.details["mean_count"] = s.mean;
  r.details["field_radius"] = field.outer();
  r.details["truncation_bound"] = field_truncation_bound(p.lambda, p.t, hint, field.outer(), false);
  r.verdict = r.estimate >= 1.0 - p.delta ? Verdict::pass : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------

StatReport hitting_prob_estimate(const HittingParams& p, const RngStream& rng) {
  const double r0 = unit_ball_radius();
  if (!(p.x_radius > r0)) throw std::invalid_argument("hitting_prob_estimate needs x_radius > r0");
  if (!(p.k > 0.0)) throw std::invalid_argument("hitting_prob_estimate needs k > 0");
  std::vector<std::uint8_t> hits(p.replicas, 0);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream w = rng.substream(StreamTag::moves, static_cast<std::uint64_t>(i));
    Point2 q{p.x_radius, 0.0};
    hits[static_cast<std::size_t>(i)] = walk_until_hit(q, p.k, r0 * r0, w) ? 1 : 0;
  }
  const double n = static_cast<double>(p.replicas);
  const double ph = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / n;
  StatReport r = make_report("hitting_prob_estimate", ph, std::sqrt(ph * (1.0 - ph) / n),
                             p.replicas);
  const double lk = std::log(p.k);
  r.details["x_radius"] = p.x_radius;
  r.details["k"] = p.k;
  r.details["p_log_k"] = ph * lk;
  r.details["band_lo"] = p.band_lo;
  r.details["band_hi"] = p.band_hi;
  if (!(lk > 0.0)) {
    r.verdict = Verdict::inconclusive;
  } else {
    r.verdict = (ph * lk >= p.band_lo && ph * lk <= p.band_hi) ? Verdict::pass : Verdict::fail;
  }
  return r;
}

// ---------------------------------------------------------------------------

StatReport entered_count_estimate(const EnteredParams& p, const RngStream& rng) {
  if (p.replicas < 100) throw std::invalid_argument("entered_count_estimate needs replicas >= 100");
  if (!(p.k >= 0.0)) throw std::invalid_argument("entered_count_estimate needs k >= 0");
  if (!(p.lambda > 0.0)) throw std::invalid_argument("entered_count_estimate needs lambda > 0");
  const double r0 = unit_ball_radius();
  const double lk = p.k > 1.0 ? std::log(p.k) : 0.0;
  const double lower = lk > 1.0 ? p.lambda * kPi * p.k / std::pow(lk, 1.5) : 0.0;
  const double effect = std::max(p.lambda, lower);
  const double rf = p.field_radius > 0.0
                        ? p.field_radius
                        : field_radius_for(p.lambda, p.k, r0, 1e-3 * effect, true);
  const Annulus field(0.0, std::max(rf, r0));
  std::vector<double> counts(p.replicas);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream frng = rng.substream(StreamTag::field, static_cast<std::uint64_t>(i));
    RngStream mrng = rng.substream(StreamTag::moves, static_cast<std::uint64_t>(i));
    auto pts = sample_ppp_annulus(p.lambda, field, frng);
    std::uint64_t c = 0;
    for (auto& q : pts) {
      if (q.norm2() <= r0 * r0 || walk_until_hit(q, p.k, r0 * r0, mrng)) ++c;
    }
    counts[static_cast<std::size_t>(i)] = static_cast<double>(c);
  }
  const Summary s = summarize(counts);
  StatReport r = make_report("entered_count_estimate", s.mean, s.se(), p.replicas);
  const double fano = s.fano();
  const bool fano_ok = fano >= p.fano_lo && fano <= p.fano_hi;
  const bool mean_ok = lower <= 0.0 || s.mean > lower;
  r.details["lambda"] = p.lambda;
  r.details["k"] = p.k;
  r.details["fano"] = fano;
  r.details["fano_lo"] = p.fano_lo;
  r.details["fano_hi"] = p.fano_hi;
  r.details["mean_lower_bound"] = lower;
  r.details["field_radius"] = field.outer();
  r.details["truncation_bound"] = field_truncation_bound(p.lambda, p.k, r0, field.outer(), true);
  r.verdict = fano_ok && mean_ok ? Verdict::pass : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------

StatReport growth_exponent_fit(std::span<const double> times, std::span<const double> radii,
                               const GrowthFitParams& p) {
  if (times.size() != radii.size() || times.size() < 2) {
    throw std::invalid_argument("growth fit needs at least two (time, radius) samples");
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < p.t_min || times[i] > p.t_max) continue;
    if (!(times[i] > 0.0) || !(radii[i] > 0.0)) continue;
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(radii[i]));
  }
  if (lx.size() < 2) throw std::invalid_argument("growth fit window holds fewer than two samples");
  const LinearFit fit = linear_fit(lx, ly);
  StatReport r = make_report("growth_exponent_fit", fit.slope, fit.slope_se, lx.size());
  r.details["t_min"] = p.t_min;
  r.details["t_max"] = p.t_max;
  r.details["slope_lo"] = p.slope_lo;
  r.details["slope_hi"] = p.slope_hi;
  r.details["intercept"] = fit.intercept;
  r.verdict = (fit.slope >= p.slope_lo && fit.slope <= p.slope_hi) ? Verdict::pass : Verdict::fail;
  return r;
}

StatReport growth_exponent_fit(const Trajectory& traj, const GrowthFitParams& p) {
  if (!(p.t_min > 0.0) || !(p.t_max > p.t_min)) {
    throw std::invalid_argument("growth fit needs 0 < t_min < t_max");
  }
  if (traj.events.empty() || traj.events.front().time > p.t_min || traj.horizon < p.t_max) {
    throw std::invalid_argument("trajectory does not cover the growth fit window");
  }
  const std::size_t m = std::max<std::size_t>(p.points, 2);
  std::vector<double> ts(m), rs(m);
  const double ratio = std::log(p.t_max / p.t_min) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    ts[i] = i + 1 == m ? p.t_max : p.t_min * std::exp(ratio * static_cast<double>(i));
    rs[i] = traj.radius_at(ts[i]);
  }
  return growth_exponent_fit(ts, rs, p);
}

// ---------------------------------------------------------------------------

StatReport cascade_tail_fit(std::span<const double> samples, const TailFitParams& p) {
  if (samples.size() < p.min_samples) {
    throw std::invalid_argument("cascade_tail_fit needs at least " +
                                std::to_string(p.min_samples) + " samples");
  }
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  StatReport r;
  r.name = "cascade_tail_fit";
  r.n_samples = xs.size();
  r.details["expected_slope"] = p.expected_slope;
  r.details["tol"] = p.tol;
  const double hi = quantile_sorted(xs, p.upper_quantile);
  if (xs.back() < p.n_min || hi <= p.n_min) {
    r.verdict = Verdict::inconclusive;
    r.details["reason"] = "tail window is empty";
    return r;
  }
  // Log-spaced integer thresholds in [n_min, hi].
  std::vector<double> grid;
  const int pts = 40;
  for (int i = 0; i < pts; ++i) {
    const double v = std::ceil(p.n_min * std::pow(hi / p.n_min, i / double(pts - 1)));
    if (grid.empty() || v > grid.back()) grid.push_back(v);
  }
  std::vector<double> lx, ly;
  const double n = static_cast<double>(xs.size());
  for (double g : grid) {
    const auto ge = static_cast<double>(xs.end() - std::lower_bound(xs.begin(), xs.end(), g));
    if (ge <= 0.0) continue;
    lx.push_back(std::log(g));
    ly.push_back(std::log(ge / n));
  }
  if (lx.size() < 3) {
    r.verdict = Verdict::inconclusive;
    r.details["reason"] = "fewer than three tail points";
    return r;
  }
  const LinearFit fit = linear_fit(lx, ly);
  r.estimate = fit.slope;
  r.ci_low = fit.slope - 1.96 * fit.slope_se;
  r.ci_high = fit.slope + 1.96 * fit.slope_se;
  r.details["n_min"] = p.n_min;
  r.details["n_max"] = hi;
  r.details["points"] = lx.size();
  r.verdict = std::abs(fit.slope - p.expected_slope) <= p.tol ? Verdict::pass : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------

namespace {
double lln_weight(std::uint64_t k) { return std::sqrt(kPi / static_cast<double>(k)); }

StatReport lln_report(double sum_t, double sum_c, double sum_c2, std::uint64_t n, double tol) {
  const double ratio = sum_t / sum_c;
  StatReport r = make_report("exp_lln_check", ratio, std::sqrt(sum_c2) / sum_c, n);
  r.details["tol"] = tol;
  r.details["sum_c"] = sum_c;
  r.verdict = std::abs(ratio - 1.0) <= tol ? Verdict::pass : Verdict::fail;
  return r;
}
}  // namespace

StatReport exp_lln_check(const LlnParams& p, const RngStream& rng) {
  if (p.n < 1) throw std::invalid_argument("exp_lln_check needs n >= 1");
  RngStream s = rng.substream(StreamTag::estimator, 0);
  double st = 0.0, sc = 0.0, sc2 = 0.0;
  for (std::uint64_t k = 1; k <= p.n; ++k) {
    const double c = lln_weight(k);
    st += c * exp1(s);
    sc += c;
    sc2 += c * c;
  }
  return lln_report(st, sc, sc2, p.n, p.tol);
}

StatReport exp_lln_check(std::span<const double> t, double tol) {
  if (t.empty()) throw std::invalid_argument("exp_lln_check needs at least one T");
  double st = 0.0, sc = 0.0, sc2 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double c = lln_weight(i + 1);
    st += t[i];
    sc += c;
    sc2 += c * c;
  }
  return lln_report(st, sc, sc2, t.size(), tol);
}

// ---------------------------------------------------------------------------

std::vector<double> cascade_class_probs(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("cascade_class_probs needs lambda > 0");
  // P(added = n) = P(total progeny incl. root = n + 1), Borel(lambda).
  auto borel = [&](double m) {
    return std::exp(-lambda * m + (m - 1.0) * std::log(lambda * m) - std::lgamma(m + 1.0));
  };
  std::vector<double> p(5);
  double acc = 0.0;
  for (int n = 0; n < 4; ++n) {
    p[n] = borel(n + 1.0);
    acc += p[n];
  }
  p[4] = 1.0 - acc;
  return p;
}

StatReport cascade_law_test(const CascadeLawParams& p, const RngStream& rng) {
  if (p.replicas < 1) throw std::invalid_argument("cascade_law_test needs replicas >= 1");
  // Classes 0..3 and ">= 4" only depend on the field inside B(sqrt(5/pi));
  // a disk of area 8 leaves margin.
  const Annulus field(0.0, std::sqrt(8.0 / kPi));
  std::vector<std::uint8_t> cls(p.replicas);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p.replicas); ++i) {
    RngStream f = rng.substream(StreamTag::field, static_cast<std::uint64_t>(i));
    auto pts = sample_ppp_annulus(p.lambda, field, f);
    std::vector<ActiveParticle> act;
    act.reserve(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) act.push_back({j, pts[j]});
    const CascadeResult c = cascade(act, 1, 0.0, 100);
    cls[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(std::min<std::uint64_t>(c.absorbed(), 4));
  }
  std::vector<std::uint64_t> obs(5, 0);
  for (auto c : cls) ++obs[c];
  const auto probs = cascade_class_probs(p.lambda);
  const double n = static_cast<double>(p.replicas);
  const double f0 = static_cast<double>(obs[0]) / n;
  const double f1 = static_cast<double>(obs[1]) / n;
  const double pv = chi_square_gof_pvalue(obs, probs);
  StatReport r = make_report("cascade_law_test", f0, std::sqrt(f0 * (1 - f0) / n), p.replicas);
  r.details["lambda"] = p.lambda;
  r.details["observed"] = obs;
  r.details["expected_probs"] = probs;
  r.details["p0_hat"] = f0;
  r.details["p1_hat"] = f1;
  r.details["p0_tol"] = p.p0_tol;
  r.details["p1_tol"] = p.p1_tol;
  r.details["chi2_pvalue"] = pv;
  r.details["min_pvalue"] = p.min_pvalue;
  const bool ok = std::abs(f0 - probs[0]) <= p.p0_tol && std::abs(f1 - probs[1]) <= p.p1_tol &&
                  pv > p.min_pvalue;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------

StatReport volume_deviation_scan(std::span<const VolumeSnapshot> snapshots, double lambda,
                                 double R, double delta) {
  if (snapshots.empty()) throw std::invalid_argument("volume_deviation_scan needs snapshots");
  const double threshold = lambda * (kPi * R * R - std::pow(R, 1.0 + delta));
  double worst = std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  nlohmann::json viol = nlohmann::json::array();
  std::uint64_t nviol = 0;
  for (const auto& s : snapshots) {
    const double margin = static_cast<double>(s.count) - threshold;
    if (margin < worst) {
      worst = margin;
      worst_t = s.time;
    }
    if (margin < 0.0) {
      ++nviol;
      if (viol.size() < 50) viol.push_back({{"time", s.time}, {"count", s.count}});
    }
  }
  StatReport r;
  r.name = "volume_deviation_scan";
  r.estimate = r.ci_low = r.ci_high = worst;
  r.n_samples = snapshots.size();
  r.details["threshold"] = threshold;
  r.details["worst_margin_time"] = worst_t;
  r.details["violations"] = nviol;
  r.details["violation_times"] = viol;
  r.details["R"] = R;
  r.details["delta"] = delta;
  r.verdict = nviol == 0 ? Verdict::pass : Verdict::fail;
  return r;
}

std::vector<VolumeSnapshot> free_field_ball_counts(double lambda, double R,
                                                   std::span<const double> times,
                                                   const RngStream& rng, double field_radius) {
  if (times.empty()) return {};
  std::vector<double> ts(times.begin(), times.end());
  if (!std::is_sorted(ts.begin(), ts.end()) || ts.front() < 0.0) {
    throw std::invalid_argument("snapshot times must be sorted and nonnegative");
  }
  const double expected = lambda * kPi * R * R;
  const double rf = field_radius > 0.0
                        ? field_radius
                        : field_radius_for(lambda, ts.back(), R, 1e-4 * std::max(1.0, expected),
                                           true);
  RngStream frng = rng.substream(StreamTag::field, 0);
  RngStream mrng = rng.substream(StreamTag::moves, 0);
  auto pts = sample_ppp_annulus(lambda, Annulus(0.0, std::max(rf, R)), frng);
  std::vector<std::uint64_t> counts(ts.size(), 0);
  const double R2 = R * R;
  for (auto q : pts) {
    double s = exp1(mrng);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      while (s <= ts[i]) {
        q = q + gaussian_jump(mrng);
        s += exp1(mrng);
      }
      if (q.norm2() <= R2) ++counts[i];
    }
  }
  std::vector<VolumeSnapshot> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) out[i] = {ts[i], counts[i]};
  return out;
}

}  // namespace poolsim
