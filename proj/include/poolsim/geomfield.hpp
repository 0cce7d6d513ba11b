// Point-process and particle-kinematics primitives.
//
// All randomness flows through RngStream, a counter-based generator keyed by
// (master_seed, stream_index). Draw sequences depend only on that key, so
// replicas and per-particle kernels stay reproducible under any thread
// schedule.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace poolsim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  [[nodiscard]] double norm2() const { return x * x + y * y; }
  [[nodiscard]] double norm() const { return std::sqrt(norm2()); }

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Purpose tags used to carve independent substreams out of a replica stream.
enum class StreamTag : std::uint64_t {
  field = 1,
  clocks = 2,
  moves = 3,
  selection = 4,
  branching = 5,
  estimator = 6,
  oracle = 7,
};

/// Philox4x32-10 counter-based generator. The 128-bit counter holds
/// (draw block, stream_index) and the 64-bit key is the master seed, so
/// distinct (seed, stream) pairs can never share a block.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : seed_(master_seed), stream_(stream_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Child stream for a (tag, index) pair; independent of this stream and
  /// of every other child with a different pair.
  [[nodiscard]] RngStream substream(std::uint64_t tag, std::uint64_t index = 0) const;
  [[nodiscard]] RngStream substream(StreamTag tag, std::uint64_t index = 0) const {
    return substream(static_cast<std::uint64_t>(tag), index);
  }

  [[nodiscard]] std::uint64_t master_seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_index() const { return stream_; }
  [[nodiscard]] std::uint64_t blocks_drawn() const { return block_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int pos_ = 2;
};

/// Mixes a stream index and a tag into a new stream index.
std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t tag, std::uint64_t index);

class Annulus {
 public:
  /// Throws std::invalid_argument unless 0 <= r_inner <= r_outer.
  Annulus(double r_inner, double r_outer);

  [[nodiscard]] double inner() const { return r_inner_; }
  [[nodiscard]] double outer() const { return r_outer_; }
  [[nodiscard]] double area() const;
  [[nodiscard]] bool contains(Point2 p) const {
    const double n2 = p.norm2();
    return n2 > r_inner_ * r_inner_ && n2 <= r_outer_ * r_outer_;
  }

 private:
  double r_inner_;
  double r_outer_;
};

/// Poisson point process of the given intensity restricted to an annulus.
std::vector<Point2> sample_ppp_annulus(double intensity, const Annulus& ann, RngStream& rng);

/// Poisson point process on the canonical box [-side/2, side/2)^2.
std::vector<Point2> sample_ppp_box(double intensity, double side, RngStream& rng);

/// Poisson(mean) draw; mean 0 gives 0.
std::uint64_t poisson_count(double mean, RngStream& rng);

/// Uniform draw from {0, ..., n - 1}.
std::uint64_t uniform_index(std::uint64_t n, RngStream& rng);

/// One standard bivariate normal jump.
Point2 gaussian_jump(RngStream& rng);

/// Sum of `jumps` standard normal jumps, drawn as one Normal(0, jumps * I).
Point2 displacement_after_jumps(std::uint64_t jumps, RngStream& rng);

/// Number of rate-1 Poisson clock rings in an interval of length dt.
std::uint64_t jump_count(double dt, RngStream& rng);

/// Jump count for an interval of length dt conditioned on at least one jump.
std::uint64_t jump_count_at_least_one(double dt, RngStream& rng);

/// Inversion table for the jump count of a length-dt interval conditioned
/// on at least one jump. Same law as jump_count_at_least_one, one uniform
/// per draw.
class JumpCountTable {
 public:
  explicit JumpCountTable(double dt);
  std::uint64_t operator()(RngStream& rng) const;
  [[nodiscard]] double dt() const { return dt_; }

 private:
  double dt_;
  std::vector<double> cdf_;  // P(N <= k + 1 | N >= 1)
};

/// Translates p by integer multiples of box_side into [-side/2, side/2)^2.
Point2 wrap_periodic(Point2 p, double box_side);

}  // namespace poolsim
