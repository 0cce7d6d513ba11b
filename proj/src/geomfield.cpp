#include "poolsim/geomfield.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace poolsim {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32_10(ctr, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  ++block_;
  pos_ = 0;
}

std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t tag, std::uint64_t index) {
  return splitmix64(splitmix64(stream ^ splitmix64(tag)) + index);
}

RngStream RngStream::substream(std::uint64_t tag, std::uint64_t index) const {
  return RngStream(seed_, derive_stream(stream_, tag, index));
}

Annulus::Annulus(double r_inner, double r_outer) : r_inner_(r_inner), r_outer_(r_outer) {
  if (!(r_inner >= 0.0) || !(r_outer >= r_inner) || !std::isfinite(r_outer)) {
    throw std::invalid_argument("annulus requires 0 <= r_inner <= r_outer < inf, got (" +
                                std::to_string(r_inner) + ", " + std::to_string(r_outer) + ")");
  }
}

double Annulus::area() const {
  return std::numbers::pi * (r_outer_ * r_outer_ - r_inner_ * r_inner_);
}

std::vector<Point2> sample_ppp_annulus(double intensity, const Annulus& ann, RngStream& rng) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("intensity must be finite and >= 0");
  }
  const double mean = intensity * ann.area();
  std::vector<Point2> pts;
  if (mean <= 0.0) return pts;

  const std::uint64_t n = poisson_count(mean, rng);
  pts.reserve(n);
  const double r_in2 = ann.inner() * ann.inner();
  const double span = ann.outer() * ann.outer() - r_in2;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double r = std::sqrt(r_in2 + rng.uniform_open() * span);
    const double theta = 2.0 * std::numbers::pi * rng.uniform_open();
    pts.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return pts;
}

std::vector<Point2> sample_ppp_box(double intensity, double side, RngStream& rng) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("intensity must be finite and >= 0");
  }
  if (!(side > 0.0)) throw std::invalid_argument("box side must be > 0");
  std::vector<Point2> pts;
  const double mean = intensity * side * side;
  if (mean <= 0.0) return pts;

  const std::uint64_t n = poisson_count(mean, rng);
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = (rng.uniform_open() - 0.5) * side;
    const double y = (rng.uniform_open() - 0.5) * side;
    pts.push_back(wrap_periodic({x, y}, side));
  }
  return pts;
}

std::uint64_t poisson_count(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
  return dist(rng);
}

std::uint64_t uniform_index(std::uint64_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("uniform_index needs n >= 1");
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(rng);
}

Point2 gaussian_jump(RngStream& rng) {
  boost::random::normal_distribution<double> normal;
  const double x = normal(rng);
  const double y = normal(rng);
  return {x, y};
}

Point2 displacement_after_jumps(std::uint64_t jumps, RngStream& rng) {
  if (jumps == 0) return {};
  const double scale = std::sqrt(static_cast<double>(jumps));
  const Point2 z = gaussian_jump(rng);
  return {scale * z.x, scale * z.y};
}

std::uint64_t jump_count(double dt, RngStream& rng) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("jump_count requires dt >= 0");
  }
  return poisson_count(dt, rng);
}

std::uint64_t jump_count_at_least_one(double dt, RngStream& rng) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("jump_count_at_least_one requires dt > 0");
  }
  // First ring is Exp(1) truncated to [0, dt]; the rest of the interval is
  // an ordinary Poisson count.
  const double p_any = -std::expm1(-dt);
  const double first = -std::log1p(-rng.uniform_open() * p_any);
  const double rest = dt - first;
  if (!(rest > 0.0)) return 1;
  return 1 + poisson_count(rest, rng);
}

JumpCountTable::JumpCountTable(double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("JumpCountTable requires dt > 0");
  }
  // pmf of N given N >= 1 is e^{-dt} dt^k / k! / (1 - e^{-dt}), k >= 1.
  const double norm = -std::expm1(-dt);
  double term = std::exp(-dt) * dt / norm;  // k = 1
  double acc = 0.0;
  for (std::uint64_t k = 1; k < 100000; ++k) {
    acc += term;
    cdf_.push_back(std::min(acc, 1.0));
    if (1.0 - acc < 1e-16 && term < 1e-18) break;
    term *= dt / static_cast<double>(k + 1);
  }
  cdf_.back() = 1.0;
}

std::uint64_t JumpCountTable::operator()(RngStream& rng) const {
  const double u = rng.uniform_open();
  std::uint64_t k = 0;
  while (u > cdf_[k]) ++k;
  return k + 1;
}

namespace {
inline double wrap_coord(double v, double side) {
  const double half = 0.5 * side;
  if (v >= -half && v < half) return v;
  double w = v - side * std::floor((v + half) / side);
  if (w >= half) w -= side;
  if (w < -half) w += side;
  return w;
}
}  // namespace

Point2 wrap_periodic(Point2 p, double box_side) {
  if (!(box_side > 0.0)) throw std::invalid_argument("box side must be > 0");
  return {wrap_coord(p.x, box_side), wrap_coord(p.y, box_side)};
}

}  // namespace poolsim
