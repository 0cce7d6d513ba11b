#include "poolsim/engulf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poolsim {

double radius_from_mass(std::uint64_t mass) {
  if (mass == 0) throw std::invalid_argument("radius_from_mass requires mass >= 1");
  return std::sqrt(radius2_from_mass(mass));
}

std::uint64_t mass_key(double norm2) {
  if (!(norm2 > 0.0)) return 1;
  const double scaled = norm2 * kPi;
  if (scaled >= 1e18) return std::uint64_t{1} << 62;
  auto k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(scaled)));
  while (k > 1 && inside_mass(norm2, k - 1)) --k;
  while (!inside_mass(norm2, k)) ++k;
  return k;
}

CascadeResult begin_cascade(std::uint64_t initial_mass) {
  CascadeResult res;
  res.initial_mass = initial_mass;
  res.final_mass = initial_mass;
  res.radii.push_back(radius_from_mass(initial_mass));
  return res;
}

void push_round(CascadeResult& res, std::uint64_t absorbed_in_round) {
  res.rounds.push_back(absorbed_in_round);
  res.final_mass += absorbed_in_round;
  res.radii.push_back(radius_from_mass(res.final_mass));
}

CascadeResult cascade(std::span<const ActiveParticle> active, std::uint64_t initial_mass,
                      double exclusion_radius, std::uint64_t cap) {
  if (initial_mass == 0) throw std::invalid_argument("cascade requires initial_mass >= 1");
  if (cap < initial_mass) {
    throw std::invalid_argument("cascade requires cap >= initial_mass (cap=" + std::to_string(cap) +
                                ", initial_mass=" + std::to_string(initial_mass) + ")");
  }
  if (!(exclusion_radius >= 0.0)) {
    throw std::invalid_argument("exclusion_radius must be >= 0");
  }

  struct Entry {
    double norm2;
    std::uint64_t id;
  };
  const double excl2 = exclusion_radius * exclusion_radius;
  std::vector<Entry> sorted;
  sorted.reserve(active.size());
  for (const auto& p : active) {
    const double n2 = p.pos.norm2();
    if (!(n2 > excl2)) {
      throw PreconditionError("active particle " + std::to_string(p.id) +
                              " lies at or inside the exclusion radius");
    }
    sorted.push_back({n2, p.id});
  }
  std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
    return a.norm2 < b.norm2 || (a.norm2 == b.norm2 && a.id < b.id);
  });

  CascadeResult res = begin_cascade(initial_mass);
  std::size_t cursor = 0;
  while (true) {
    const double threshold = radius2_from_mass(res.final_mass);
    std::uint64_t count = 0;
    while (cursor < sorted.size() && sorted[cursor].norm2 <= threshold) {
      res.absorbed_ids.push_back(sorted[cursor].id);
      ++cursor;
      ++count;
    }
    push_round(res, count);
    if (count == 0) break;
    if (res.final_mass > cap) {
      res.exploded = true;
      break;
    }
  }
  return res;
}

void RadialIndex::reset(std::size_t particle_capacity, std::uint64_t key_limit) {
  key_limit_ = key_limit;
  head_.clear();
  next_.assign(particle_capacity, kNone);
  prev_.assign(particle_capacity, kNone);
  key_.assign(particle_capacity, kUnindexed);
}

void RadialIndex::unlink(std::uint32_t id) {
  const std::uint64_t k = key_[id];
  if (k == kUnindexed) return;
  const std::uint32_t p = prev_[id];
  const std::uint32_t n = next_[id];
  if (p != kNone) {
    next_[p] = n;
  } else {
    head_[k] = n;
  }
  if (n != kNone) prev_[n] = p;
  next_[id] = prev_[id] = kNone;
  key_[id] = kUnindexed;
}

void RadialIndex::place(std::uint32_t id, std::uint64_t key) {
  if (id >= key_.size()) {
    next_.resize(id + 1, kNone);
    prev_.resize(id + 1, kNone);
    key_.resize(id + 1, kUnindexed);
  }
  if (key_[id] == key) return;
  unlink(id);
  if (key > key_limit_) return;
  if (key >= head_.size()) head_.resize(key + 1, kNone);
  const std::uint32_t h = head_[key];
  next_[id] = h;
  prev_[id] = kNone;
  if (h != kNone) prev_[h] = id;
  head_[key] = id;
  key_[id] = key;
}

void RadialIndex::erase(std::uint32_t id) {
  if (id < key_.size()) unlink(id);
}

void RadialIndex::extract_range(std::uint64_t lo, std::uint64_t hi,
                                std::vector<std::uint32_t>& out) {
  const std::uint64_t top = std::min<std::uint64_t>(hi, head_.empty() ? 0 : head_.size() - 1);
  for (std::uint64_t k = lo + 1; k <= top; ++k) {
    std::uint32_t cur = head_[k];
    while (cur != kNone) {
      const std::uint32_t nxt = next_[cur];
      out.push_back(cur);
      next_[cur] = prev_[cur] = kNone;
      key_[cur] = kUnindexed;
      cur = nxt;
    }
    head_[k] = kNone;
  }
}

std::uint64_t RadialIndex::count_range(std::uint64_t lo, std::uint64_t hi) const {
  const std::uint64_t top = std::min<std::uint64_t>(hi, head_.empty() ? 0 : head_.size() - 1);
  std::uint64_t n = 0;
  for (std::uint64_t k = lo + 1; k <= top; ++k) {
    for (std::uint32_t cur = head_[k]; cur != kNone; cur = next_[cur]) ++n;
  }
  return n;
}


IndexedCascade indexed_cascade(RadialIndex& index, std::span<const Point2> positions,
                               std::uint64_t pool_mass, std::uint64_t initial_mass,
                               std::uint64_t cap, std::uint64_t ceiling,
                               const IndexGrower& grow) {
  if (cap < initial_mass) {
    throw std::invalid_argument("indexed_cascade requires cap >= initial_mass");
  }
  IndexedCascade out{begin_cascade(initial_mass), false};
  CascadeResult& res = out.result;
  std::uint64_t lo = pool_mass;
  std::vector<std::uint32_t> round;
  while (true) {
    const std::uint64_t hi = res.final_mass;
    if (grow && hi > index.key_limit()) grow(hi);
    round.clear();
    index.extract_range(lo, hi, round);
    std::uint64_t count = round.size();
    if (count > 0 && res.final_mass + count > ceiling) {
      // Keep the innermost (ceiling - mass) particles, return the rest.
      const std::uint64_t room = ceiling - res.final_mass;
      std::sort(round.begin(), round.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double na = positions[a].norm2();
        const double nb = positions[b].norm2();
        return na < nb || (na == nb && a < b);
      });
      for (std::size_t i = room; i < round.size(); ++i) {
        index.place(round[i], mass_key(positions[round[i]].norm2()));
      }
      round.resize(room);
      count = room;
      out.ceiling_hit = true;
    }
    res.absorbed_ids.insert(res.absorbed_ids.end(), round.begin(), round.end());
    push_round(res, count);
    if (out.ceiling_hit || count == 0) break;
    if (res.final_mass > cap) {
      res.exploded = true;
      break;
    }
    lo = hi;
  }
  // Bucket order depends on insertion history; callers see ids ascending.
  std::sort(res.absorbed_ids.begin(), res.absorbed_ids.end());
  return out;
}

}  // namespace poolsim
