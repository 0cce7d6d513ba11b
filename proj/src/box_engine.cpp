#include "poolsim/box_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace poolsim {

std::string_view to_string(Kinematics k) {
  return k == Kinematics::brownian ? "brownian" : "random-walk";
}

Kinematics parse_kinematics(std::string_view name) {
  if (name == "brownian") return Kinematics::brownian;
  if (name == "random-walk" || name == "random_walk") return Kinematics::random_walk;
  throw std::invalid_argument("unknown kinematics '" + std::string(name) + "'");
}

std::vector<std::string> BoxConfig::violations() const {
  std::vector<std::string> out;
  // lambda = 0 is allowed: the empty box is a useful degenerate case.
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) out.push_back("lambda >= 0");
  if (!(box_side > 0.0) || !std::isfinite(box_side)) out.push_back("box_side > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) out.push_back("dt > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) out.push_back("horizon > 0");
  if (dt > 0.0 && horizon > 0.0 && dt > horizon) out.push_back("dt <= horizon");
  if (cap < 1) out.push_back("cap >= 1");
  return out;
}

void BoxConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid box-engine config:";
  for (const auto& s : v) msg << " [" << s << "]";
  throw std::invalid_argument(msg.str());
}

std::uint64_t BoxConfig::step_count() const {
  const double n = std::floor(horizon / dt + 1e-9);
  return n < 0.0 ? 0 : static_cast<std::uint64_t>(n);
}

std::uint64_t BoxConfig::ceiling_mass() const {
  const double half2 = 0.25 * box_side * box_side;
  auto m = static_cast<std::uint64_t>(std::floor(half2 * kPi));
  while (m > 1 && radius2_from_mass(m) > half2) --m;
  while (radius2_from_mass(m + 1) <= half2) ++m;
  return std::max<std::uint64_t>(m, 1);
}

namespace {

void record(BoxState& st, EventKind kind, std::uint64_t arrivals, const CascadeResult& r) {
  TrajectoryEvent ev;
  ev.time = st.time;
  ev.kind = kind;
  ev.mass_after = r.final_mass;
  ev.radius_after = radius_from_mass(r.final_mass);
  ev.arrivals = arrivals;
  ev.rounds = r.rounds;
  st.traj.events.push_back(std::move(ev));
}

void remove_active(BoxState& st, std::uint32_t id) {
  st.alive[id] = 0;
  const std::uint32_t s = st.slot[id];
  const std::uint32_t last = st.active.back();
  st.active[s] = last;
  st.slot[last] = s;
  st.active.pop_back();
  st.slot[id] = RadialIndex::kNone;
}

void audit_emptiness(BoxState& st, const BoxConfig& cfg) {
  if (!cfg.audit) return;
  for (std::uint32_t id : st.active) {
    if (inside_mass(st.pos[id].norm2(), st.mass)) {
      throw std::logic_error("active particle " + std::to_string(id) +
                             " inside the pool after a sweep");
    }
  }
  ++st.traj.info.audited_events;
}

IndexGrower grower(BoxState& st, const BoxConfig& cfg) {
  const std::uint64_t hard = std::min(cfg.cap, cfg.ceiling_mass());
  return [&st, hard](std::uint64_t needed) {
    const std::uint64_t old = st.index.key_limit();
    const std::uint64_t lim = std::max(needed, near_zone_limit(needed, hard));
    st.index.raise_key_limit(lim);
    for (std::uint32_t id : st.active) {
      const std::uint64_t k = mass_key(st.pos[id].norm2());
      if (k > old && k <= lim) st.index.place(id, k);
    }
  };
}

void stop(BoxState& st, EventKind kind) {
  st.stopped = true;
  st.traj.events.back().kind = kind;
  st.traj.events.back().flag = true;
  if (kind == EventKind::cap_hit) st.traj.exploded_at = st.time;
}

RngStream particle_stream(const BoxConfig& cfg, std::uint64_t step, std::uint32_t id) {
  const std::uint64_t base = derive_stream(cfg.stream_index,
                                           static_cast<std::uint64_t>(StreamTag::moves), step);
  return RngStream(cfg.master_seed, derive_stream(base, 0, id));
}

void move_random_walk(BoxState& st, const BoxConfig& cfg) {
  // Each particle jumps at least once in the step with probability p; walk
  // the active list by geometric gaps so only the movers cost anything.
  // The pool cannot change during the move, so movers are classified here:
  // those landing inside go to `pending`, the rest are re-keyed at once.
  RngStream rng = RngStream(cfg.master_seed, cfg.stream_index)
                      .substream(StreamTag::moves, st.step);
  if (!st.jumps || st.jumps->dt() != cfg.dt) st.jumps.emplace(cfg.dt);
  const JumpCountTable& jumps = *st.jumps;
  const double inv_log_q = -1.0 / cfg.dt;  // 1 / log(1 - p)
  const std::uint64_t limit = st.index.key_limit();
  const std::size_t n = st.active.size();
  std::size_t i = 0;
  while (true) {
    const double gap = std::floor(std::log(rng.uniform_open()) * inv_log_q);
    if (gap >= static_cast<double>(n - i)) break;
    i += static_cast<std::size_t>(gap);
    const std::uint32_t id = st.active[i];
    const Point2 old = st.pos[id];
    const Point2 p = wrap_periodic(old + displacement_after_jumps(jumps(rng), rng), cfg.box_side);
    st.pos[id] = p;
    const double n2 = p.norm2();
    if (inside_mass(n2, st.mass)) {
      st.pending.push_back(id);
    } else if (inside_mass(n2, limit) || inside_mass(old.norm2(), limit)) {
      // Walkers beyond the near zone before and after are not indexed.
      st.index.place(id, mass_key(n2));
    }
    ++st.traj.info.events_processed;
    ++i;
    if (i >= n) break;
  }
}

void move_brownian(BoxState& st, const BoxConfig& cfg, bool parallel) {
  const double scale = std::sqrt(cfg.dt);
  const auto n = static_cast<std::int64_t>(st.active.size());
  auto kernel = [&](std::int64_t i) {
    const std::uint32_t id = st.active[static_cast<std::size_t>(i)];
    RngStream rng = particle_stream(cfg, st.step, id);
    const Point2 z = gaussian_jump(rng);
    st.pos[id] = wrap_periodic({st.pos[id].x + scale * z.x, st.pos[id].y + scale * z.y},
                               cfg.box_side);
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) kernel(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) kernel(i);
  }
  st.pending.assign(st.active.begin(), st.active.end());
}

}  // namespace

BoxState init_box_with_field(const BoxConfig& cfg, std::vector<Point2> field) {
  cfg.validate();
  if (field.size() >= RadialIndex::kNone) {
    throw std::invalid_argument("box field too large for 32-bit particle ids");
  }
  BoxState st;
  st.traj.horizon = cfg.horizon;
  st.traj.info.engine = std::string("box-") + std::string(to_string(cfg.kinematics));
  st.traj.info.initial_particles = field.size();
  st.pos = std::move(field);
  for (auto& p : st.pos) p = wrap_periodic(p, cfg.box_side);
  const auto n = static_cast<std::uint32_t>(st.pos.size());
  st.alive.assign(n, 1);
  st.slot.resize(n);
  st.active.resize(n);
  st.index.reset(n, near_zone_limit(1, std::min(cfg.cap, cfg.ceiling_mass())));
  for (std::uint32_t id = 0; id < n; ++id) {
    st.active[id] = id;
    st.slot[id] = id;
    st.index.place(id, mass_key(st.pos[id].norm2()));
  }

  const std::uint64_t ceiling = cfg.ceiling_mass();
  IndexedCascade ic = indexed_cascade(st.index, st.pos, 0, 1, cfg.cap, ceiling, grower(st, cfg));
  for (auto id : ic.result.absorbed_ids) remove_active(st, static_cast<std::uint32_t>(id));
  st.released = ic.result.absorbed();
  st.mass = ic.result.final_mass;
  record(st, EventKind::initial_cascade, 0, ic.result);
  if (!ic.ceiling_hit && !ic.result.exploded) audit_emptiness(st, cfg);
  if (ic.ceiling_hit) {
    st.stopped = true;
    st.traj.events.back().flag = true;
  } else if (ic.result.exploded) {
    st.stopped = true;
    st.traj.events.back().flag = true;
    st.traj.exploded_at = 0.0;
  }
  return st;
}

BoxState init_box(const BoxConfig& cfg) {
  cfg.validate();
  RngStream rng = RngStream(cfg.master_seed, cfg.stream_index).substream(StreamTag::field);
  return init_box_with_field(cfg, sample_ppp_box(cfg.lambda, cfg.box_side, rng));
}

std::uint32_t inject_particle(BoxState& st, const BoxConfig& cfg, Point2 p) {
  const auto id = static_cast<std::uint32_t>(st.pos.size());
  st.pos.push_back(wrap_periodic(p, cfg.box_side));
  st.alive.push_back(1);
  st.slot.push_back(static_cast<std::uint32_t>(st.active.size()));
  st.active.push_back(id);
  st.index.place(id, mass_key(st.pos[id].norm2()));
  st.pending.push_back(id);
  ++st.traj.info.initial_particles;
  return id;
}

void box_move(BoxState& st, const BoxConfig& cfg, bool parallel) {
  if (st.stopped) return;
  ++st.step;
  st.time = static_cast<double>(st.step) * cfg.dt;
  if (st.active.empty()) return;
  if (cfg.kinematics == Kinematics::brownian) {
    move_brownian(st, cfg, parallel);
    st.traj.info.events_processed += st.pending.size();
  } else {
    move_random_walk(st, cfg);
  }
}

void box_sweep(BoxState& st, const BoxConfig& cfg) {
  if (st.stopped) {
    st.pending.clear();
    return;
  }
  // First pass: pending particles inside the current pool are arrivals;
  // everyone else gets re-keyed.
  std::vector<std::uint32_t> landed;
  for (std::uint32_t id : st.pending) {
    if (!st.alive[id]) continue;
    const double n2 = st.pos[id].norm2();
    if (inside_mass(n2, st.mass)) {
      landed.push_back(id);
    } else {
      st.index.place(id, mass_key(n2));
    }
  }
  st.pending.clear();
  if (landed.empty()) return;

  const std::uint64_t ceiling = cfg.ceiling_mass();
  bool boundary = false;
  if (st.mass + landed.size() > ceiling) {
    std::sort(landed.begin(), landed.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double na = st.pos[a].norm2();
      const double nb = st.pos[b].norm2();
      return na < nb || (na == nb && a < b);
    });
    landed.resize(ceiling - st.mass);
    boundary = true;
  }
  for (std::uint32_t id : landed) {
    st.index.erase(id);
    remove_active(st, id);
  }
  const std::uint64_t arrivals = landed.size();
  st.released += arrivals;
  const std::uint64_t start = st.mass + arrivals;

  if (boundary || start > cfg.cap) {
    st.mass = start;
    record(st, EventKind::arrival, arrivals, begin_cascade(start));
    stop(st, boundary ? EventKind::boundary_hit : EventKind::cap_hit);
    return;
  }
  IndexedCascade ic =
      indexed_cascade(st.index, st.pos, st.mass, start, cfg.cap, ceiling, grower(st, cfg));
  for (auto id : ic.result.absorbed_ids) remove_active(st, static_cast<std::uint32_t>(id));
  st.released += ic.result.absorbed_ids.size();
  st.mass = ic.result.final_mass;
  record(st, EventKind::arrival, arrivals, ic.result);
  if (ic.ceiling_hit) {
    stop(st, EventKind::boundary_hit);
  } else if (ic.result.exploded) {
    stop(st, EventKind::cap_hit);
  } else {
    audit_emptiness(st, cfg);
  }
}

void box_step(BoxState& st, const BoxConfig& cfg, bool parallel) {
  box_move(st, cfg, parallel);
  box_sweep(st, cfg);
}

Trajectory run_box(const BoxConfig& cfg, bool parallel) {
  BoxState st = init_box(cfg);
  const std::uint64_t steps = cfg.step_count();
  while (!st.stopped && st.step < steps) box_step(st, cfg, parallel);
  st.traj.info.released = st.released;
  st.traj.info.remaining_active = st.active.size();
  return std::move(st.traj);
}

}  // namespace poolsim
