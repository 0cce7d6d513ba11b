#include "poolsim/exact_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "poolsim/engulf.hpp"

namespace poolsim {

std::string_view to_string(Scheduler s) {
  return s == Scheduler::heap ? "heap" : "uniformized";
}

Scheduler parse_scheduler(std::string_view name) {
  if (name == "heap") return Scheduler::heap;
  if (name == "uniformized") return Scheduler::uniformized;
  throw std::invalid_argument("unknown scheduler '" + std::string(name) + "'");
}

std::vector<std::string> ExactConfig::violations() const {
  std::vector<std::string> out;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) out.push_back("lambda > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) out.push_back("horizon > 0");
  if (!(sim_radius > 0.0) || !std::isfinite(sim_radius)) out.push_back("sim_radius > 0");
  if (cap < 1) out.push_back("cap >= 1");
  if (!(target_radius_hint >= 1.0 / std::sqrt(kPi))) {
    out.push_back("target_radius_hint >= 1/sqrt(pi)");
  }
  if (!(sim_radius > target_radius_hint)) out.push_back("sim_radius > target_radius_hint");
  return out;
}

void ExactConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid exact-engine config:";
  for (const auto& s : v) msg << " [" << s << "]";
  throw std::invalid_argument(msg.str());
}

std::optional<JumpScheduler::Entry> JumpScheduler::next_event() {
  if (heap_.empty()) return std::nullopt;
  Entry e = heap_.top();
  heap_.pop();
  return e;
}

namespace {

double exp1(RngStream& rng) { return -std::log(rng.uniform_open()); }

class ExactRun {
 public:
  ExactRun(const ExactConfig& cfg, std::vector<Point2> field)
      : cfg_(cfg), pos_(std::move(field)), root_(cfg.master_seed, cfg.stream_index),
        clocks_(root_.substream(StreamTag::clocks)), moves_(root_.substream(StreamTag::moves)),
        select_(root_.substream(StreamTag::selection)) {}

  Trajectory run() {
    traj_.horizon = cfg_.horizon;
    traj_.info.engine = "exact";
    traj_.info.initial_particles = pos_.size();
    traj_.info.truncation_bound = truncation_error_bound(cfg_);

    const auto n = static_cast<std::uint32_t>(pos_.size());
    alive_.assign(n, 1);
    index_.reset(n, near_zone_limit(1, cfg_.cap));
    for (std::uint32_t id = 0; id < n; ++id) index_.place(id, mass_key(pos_[id].norm2()));
    grow_ = [this](std::uint64_t needed) { grow_index(needed); };

    IndexedCascade ic = indexed_cascade(index_, pos_, 0, 1, cfg_.cap, ~std::uint64_t{0}, grow_);
    for (auto id : ic.result.absorbed_ids) alive_[id] = 0;
    released_ = ic.result.absorbed();
    mass_ = ic.result.final_mass;
    record(0.0, EventKind::initial_cascade, 0, ic.result);
    if (!ic.result.exploded) audit_emptiness();
    if (ic.result.exploded) {
      traj_.events.back().flag = true;
      traj_.exploded_at = 0.0;
      return finish();
    }

    if (cfg_.scheduler == Scheduler::heap) {
      run_heap();
    } else {
      run_uniformized();
    }
    return finish();
  }

 private:
  // Moves particle `id` by one jump. Returns true if the pool exploded.
  bool jump(std::uint32_t id, double t) {
    ++traj_.info.events_processed;
    const Point2 old = pos_[id];
    const Point2 p = old + gaussian_jump(moves_);
    pos_[id] = p;
    const double n2 = p.norm2();
    if (!inside_mass(n2, mass_)) {
      // Walkers beyond the near zone before and after are not indexed.
      const std::uint64_t lim = index_.key_limit();
      if (inside_mass(n2, lim) || inside_mass(old.norm2(), lim)) index_.place(id, mass_key(n2));
      return false;
    }
    index_.erase(id);
    alive_[id] = 0;
    on_removed(id);
    ++released_;
    if (mass_ + 1 > cfg_.cap) {
      CascadeResult r = begin_cascade(mass_ + 1);
      mass_ += 1;
      record(t, EventKind::cap_hit, 1, r);
      traj_.events.back().flag = true;
      traj_.exploded_at = t;
      return true;
    }
    IndexedCascade ic =
        indexed_cascade(index_, pos_, mass_, mass_ + 1, cfg_.cap, ~std::uint64_t{0}, grow_);
    for (auto a : ic.result.absorbed_ids) {
      alive_[a] = 0;
      on_removed(a);
    }
    released_ += ic.result.absorbed_ids.size();
    mass_ = ic.result.final_mass;
    const bool exploded = ic.result.exploded;
    record(t, exploded ? EventKind::cap_hit : EventKind::arrival, 1, ic.result);
    if (exploded) {
      traj_.events.back().flag = true;
      traj_.exploded_at = t;
    } else {
      audit_emptiness();
    }
    return exploded;
  }

  // Only walkers keyed inside the near zone are indexed; widen it when a
  // cascade needs more.
  void grow_index(std::uint64_t needed) {
    const std::uint64_t old = index_.key_limit();
    const std::uint64_t lim = std::max(needed, near_zone_limit(needed, cfg_.cap));
    index_.raise_key_limit(lim);
    for (std::uint32_t id = 0; id < pos_.size(); ++id) {
      if (!alive_[id]) continue;
      const std::uint64_t k = mass_key(pos_[id].norm2());
      if (k > old && k <= lim) index_.place(id, k);
    }
  }

  void audit_emptiness() {
    if (!cfg_.audit) return;
    for (std::uint32_t id = 0; id < pos_.size(); ++id) {
      if (alive_[id] && inside_mass(pos_[id].norm2(), mass_)) {
        throw std::logic_error("active particle " + std::to_string(id) +
                               " inside the pool after a cascade");
      }
    }
    ++traj_.info.audited_events;
  }

  void run_heap() {
    JumpScheduler sched;
    for (std::uint32_t id = 0; id < pos_.size(); ++id) {
      if (alive_[id]) sched.push(exp1(clocks_), id);
    }
    while (auto ev = sched.next_event()) {
      if (!alive_[ev->id]) continue;
      if (ev->time > cfg_.horizon) break;
      if (jump(ev->id, ev->time)) return;
      if (alive_[ev->id]) sched.push(ev->time + exp1(clocks_), ev->id);
    }
  }

  void run_uniformized() {
    active_.clear();
    slot_.assign(pos_.size(), RadialIndex::kNone);
    for (std::uint32_t id = 0; id < pos_.size(); ++id) {
      if (!alive_[id]) continue;
      slot_[id] = static_cast<std::uint32_t>(active_.size());
      active_.push_back(id);
    }
    track_slots_ = true;
    double t = 0.0;
    while (!active_.empty()) {
      t += exp1(clocks_) / static_cast<double>(active_.size());
      if (t > cfg_.horizon) break;
      if (jump(active_[uniform_index(active_.size(), select_)], t)) return;
    }
  }

  void on_removed(std::uint32_t id) {
    if (!track_slots_) return;
    const std::uint32_t s = slot_[id];
    const std::uint32_t last = active_.back();
    active_[s] = last;
    slot_[last] = s;
    active_.pop_back();
    slot_[id] = RadialIndex::kNone;
  }

  void record(double t, EventKind kind, std::uint64_t arrivals, const CascadeResult& r) {
    TrajectoryEvent ev;
    ev.time = t;
    ev.kind = kind;
    ev.mass_after = r.final_mass;
    ev.radius_after = radius_from_mass(r.final_mass);
    ev.arrivals = arrivals;
    ev.rounds = r.rounds;
    if (ev.radius_after > cfg_.target_radius_hint) traj_.info.hint_exceeded = true;
    traj_.events.push_back(std::move(ev));
  }

  Trajectory finish() {
    traj_.info.released = released_;
    traj_.info.remaining_active = pos_.size() - released_;
    return std::move(traj_);
  }

  const ExactConfig& cfg_;
  std::vector<Point2> pos_;
  RngStream root_;
  RngStream clocks_;
  RngStream moves_;
  RngStream select_;
  RadialIndex index_;
  IndexGrower grow_;
  std::vector<std::uint8_t> alive_;
  std::vector<std::uint32_t> active_;
  std::vector<std::uint32_t> slot_;
  bool track_slots_ = false;
  std::uint64_t mass_ = 1;
  std::uint64_t released_ = 0;
  Trajectory traj_;
};

}  // namespace

Trajectory run_exact_with_field(const ExactConfig& cfg, std::vector<Point2> field) {
  cfg.validate();
  if (field.size() >= RadialIndex::kNone) {
    throw std::invalid_argument("initial field too large for 32-bit particle ids");
  }
  ExactRun run(cfg, std::move(field));
  return run.run();
}

Trajectory run_exact(const ExactConfig& cfg) {
  cfg.validate();
  RngStream field_rng = RngStream(cfg.master_seed, cfg.stream_index).substream(StreamTag::field);
  return run_exact_with_field(cfg, sample_ppp_annulus(cfg.lambda, Annulus(0.0, cfg.sim_radius),
                                                      field_rng));
}

// A walker starting at distance d from the origin reaches B(h) by time T only
// if it makes at least one jump and some partial sum of its jumps has norm at
// least d - h. With K jumps allowed, P(max_{k<=K} |S_k| >= r) is at most
// K exp(-r^2 / 2K). K grows with d so the tail integral converges.
double truncation_error_bound(const ExactConfig& cfg) {
  const double T = std::max(0.0, cfg.horizon);
  const double h = cfg.target_radius_hint;
  const double k0 = std::ceil(2.0 * T + 10.0 * std::sqrt(T) + 10.0);
  auto b = [&](double d) {
    const double r = d - h;
    if (r <= 0.0) return 1.0;
    const double k = std::max(k0, std::ceil(r));
    const double jumps_tail = T > 0.0 ? boost::math::gamma_p(k + 1.0, T) : 0.0;
    const double walk_tail = k * std::exp(-r * r / (2.0 * k));
    return std::min(1.0, jumps_tail + walk_tail);
  };
  auto integrand = [&](double d) { return 2.0 * kPi * d * b(d); };

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double width = std::max(5.0, std::sqrt(k0));
  double total = 0.0;
  double lo = std::max(cfg.sim_radius, 0.0);
  for (int seg = 0; seg < 100000; ++seg) {
    const double hi = lo + width;
    const double part = GK::integrate(integrand, lo, hi, 10, 1e-12);
    total += part;
    // Past the peak the integrand is decreasing; stop once segments vanish.
    if (lo - h > std::sqrt(k0) && part <= 1e-16 * total) break;
    if (part == 0.0 && lo - h > k0) break;
    lo = hi;
  }
  return cfg.lambda * total;
}

double sim_radius_for_bound(ExactConfig cfg, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  double lo = cfg.target_radius_hint;
  double hi = lo + 1.0;
  cfg.sim_radius = hi;
  while (truncation_error_bound(cfg) > tolerance) {
    hi = lo + 2.0 * (hi - lo);
    cfg.sim_radius = hi;
  }
  for (int i = 0; i < 60 && hi - lo > 1e-6; ++i) {
    const double mid = 0.5 * (lo + hi);
    cfg.sim_radius = mid;
    if (truncation_error_bound(cfg) > tolerance) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace poolsim
