// Exact event-driven simulation of the pool on a truncated initial field.
//
// Walkers are piecewise constant between rate-1 clock rings, so a walker can
// only enter the pool at one of its own jump instants. Two schedulers realise
// the clocks:
//   - heap:         one Exp(1) clock per walker in a priority queue
//                   (reference implementation, used in tests and benchmarks);
//   - uniformized:  the superposed clock of n walkers rings at rate n and
//                   picks a walker uniformly (same law, O(1) per event).

#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "poolsim/geomfield.hpp"
#include "poolsim/trajectory.hpp"

namespace poolsim {

enum class Scheduler { uniformized, heap };

std::string_view to_string(Scheduler s);
Scheduler parse_scheduler(std::string_view name);

struct ExactConfig {
  double lambda = 1.0;
  double horizon = 10.0;
  double sim_radius = 40.0;
  std::uint64_t cap = 10'000'000;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  double target_radius_hint = 10.0;
  Scheduler scheduler = Scheduler::uniformized;
  /// After every completed cascade, scan all active particles and throw
  /// std::logic_error if one lies inside the pool. O(n) per event.
  bool audit = false;

  /// Every violated bound, one message each.
  [[nodiscard]] std::vector<std::string> violations() const;
  /// Throws std::invalid_argument carrying all violations.
  void validate() const;
};

/// Min-heap of (time, walker id); equal times pop the smaller id first.
class JumpScheduler {
 public:
  struct Entry {
    double time;
    std::uint32_t id;
  };

  void push(double time, std::uint32_t id) { heap_.push({time, id}); }
  /// Pops the earliest pending jump, or nullopt when nothing is pending.
  std::optional<Entry> next_event();
  [[nodiscard]] bool empty() const { return heap_.empty(); }
  [[nodiscard]] std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.time > b.time || (a.time == b.time && a.id > b.id);
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
};

/// Runs one replica. The initial field is PPP(lambda) on B(sim_radius)
/// drawn from the replica's field substream.
Trajectory run_exact(const ExactConfig& cfg);

/// Runs from a caller-supplied initial field (fixtures, one-shot studies).
Trajectory run_exact_with_field(const ExactConfig& cfg, std::vector<Point2> field);

/// Upper bound on the probability that some walker started outside
/// B(sim_radius) reaches B(target_radius_hint) before the horizon.
double truncation_error_bound(const ExactConfig& cfg);

/// Smallest radius whose truncation bound is below `tolerance` (bisection on
/// the monotone bound).
double sim_radius_for_bound(ExactConfig cfg, double tolerance);

}  // namespace poolsim
