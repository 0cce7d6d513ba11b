// The instantaneous engulfing cascade.
//
// Mass is the integer source of truth. A point p lies inside a pool of mass m
// iff |p|^2 <= m / pi, evaluated by `inside_mass`. Every component that
// decides absorption goes through that predicate, so the sort-based reference
// cascade and the bucketed engine index agree bit for bit.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "poolsim/geomfield.hpp"

namespace poolsim {

inline constexpr double kPi = std::numbers::pi;

/// Raised when a documented precondition on the inputs does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// sqrt(mass / pi). Throws std::invalid_argument for mass == 0.
double radius_from_mass(std::uint64_t mass);

inline double radius2_from_mass(std::uint64_t mass) { return static_cast<double>(mass) / kPi; }

inline bool inside_mass(double norm2, std::uint64_t mass) {
  return norm2 <= radius2_from_mass(mass);
}

/// Smallest mass m >= 1 with inside_mass(norm2, m); for every m >= 1,
/// mass_key(n2) <= m iff inside_mass(n2, m).
std::uint64_t mass_key(double norm2);

struct ActiveParticle {
  std::uint64_t id = 0;
  Point2 pos;
};

struct CascadeResult {
  std::vector<std::uint64_t> rounds;  // xi_1 .. xi_N
  std::vector<double> radii;          // r_0 .. r_N
  std::uint64_t initial_mass = 1;
  std::uint64_t final_mass = 1;
  bool exploded = false;
  std::vector<std::uint64_t> absorbed_ids;

  [[nodiscard]] std::uint64_t absorbed() const { return final_mass - initial_mass; }
};

/// Runs the annulus-counting recursion starting from `initial_mass`.
///
/// Round j absorbs every active particle with |p| in (r_{j-1}, r_j], where
/// r_j = radius_from_mass(mass after round j - 1) and round 1 starts at
/// `exclusion_radius`. Stops when a round absorbs nothing, or flags an
/// explosion as soon as the mass exceeds `cap`.
///
/// Throws PreconditionError if a particle sits at or inside
/// `exclusion_radius`, std::invalid_argument if cap < initial_mass or
/// initial_mass == 0.
CascadeResult cascade(std::span<const ActiveParticle> active, std::uint64_t initial_mass,
                      double exclusion_radius, std::uint64_t cap);

/// Builds a CascadeResult skeleton (r_0 filled in) for incremental drivers.
CascadeResult begin_cascade(std::uint64_t initial_mass);

/// Records one completed round on a cascade result.
void push_round(CascadeResult& res, std::uint64_t absorbed_in_round);

/// Particles bucketed by mass_key. Supports O(1) insert/erase/move and
/// extraction of every particle whose key falls in a mass interval, which
/// is exactly one cascade round. Keys above `key_limit` are tracked as
/// unindexed; such particles cannot be absorbed before the cap trips.
class RadialIndex {
 public:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  explicit RadialIndex(std::uint64_t key_limit = 0) : key_limit_(key_limit) {}

  void reset(std::size_t particle_capacity, std::uint64_t key_limit);

  /// Inserts (or moves) particle `id` under `key`.
  void place(std::uint32_t id, std::uint64_t key);
  void erase(std::uint32_t id);

  /// Appends all particles keyed in (lo, hi] to `out` and removes them.
  void extract_range(std::uint64_t lo, std::uint64_t hi, std::vector<std::uint32_t>& out);

  /// Number of indexed particles keyed in (lo, hi].
  [[nodiscard]] std::uint64_t count_range(std::uint64_t lo, std::uint64_t hi) const;

  [[nodiscard]] std::uint64_t key_limit() const { return key_limit_; }
  /// Raises the limit. Particles keyed above the old limit stay unindexed
  /// until the caller places them again.
  void raise_key_limit(std::uint64_t limit) { key_limit_ = std::max(key_limit_, limit); }
  [[nodiscard]] bool indexed(std::uint32_t id) const { return key_[id] != kUnindexed; }

 private:
  static constexpr std::uint64_t kUnindexed = ~std::uint64_t{0};

  void unlink(std::uint32_t id);

  std::uint64_t key_limit_;
  std::vector<std::uint32_t> head_;
  std::vector<std::uint32_t> next_;
  std::vector<std::uint32_t> prev_;
  std::vector<std::uint64_t> key_;
};

struct IndexedCascade {
  CascadeResult result;
  /// Set when the mass ceiling stopped the cascade part-way through a round.
  bool ceiling_hit = false;
};

/// Cascade driven by a RadialIndex rather than a sorted list. The caller
/// guarantees no indexed particle is keyed at or below `pool_mass`; the
/// first round starts from `initial_mass` (pool mass plus any arrivals).
/// Absorbed particle ids are removed from the index and reported in
/// result.absorbed_ids. If `ceiling` is finite, the cascade never grows the mass past
/// it: the innermost particles of the last round are taken until the mass
/// equals the ceiling and the remainder are put back.
///
/// Callers that index only a zone near the pool pass `grow`: before a round
/// reaches past the index's key limit, grow(needed) must raise the limit to
/// at least `needed` and place every particle keyed between the old and new
/// limits.
using IndexGrower = std::function<void(std::uint64_t needed)>;
IndexedCascade indexed_cascade(RadialIndex& index, std::span<const Point2> positions,
                               std::uint64_t pool_mass, std::uint64_t initial_mass,
                               std::uint64_t cap, std::uint64_t ceiling = ~std::uint64_t{0},
                               const IndexGrower& grow = {});

/// Key limit of the near zone kept indexed around a pool of mass `mass`.
inline std::uint64_t near_zone_limit(std::uint64_t mass, std::uint64_t hard_limit) {
  const std::uint64_t want = std::max(2 * mass, mass + 4096);
  return std::min(want, hard_limit);
}

}  // namespace poolsim
