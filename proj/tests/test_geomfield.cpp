#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "poolsim/geomfield.hpp"
#include "poolsim/stats.hpp"

using namespace poolsim;

namespace {

struct Moments {
  double mean_x = 0, mean_y = 0, var_x = 0, var_y = 0, corr = 0;
};

template <typename Draw>
Moments moments(std::size_t n, Draw draw) {
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = draw();
    xs[i] = p.x;
    ys[i] = p.y;
  }
  const Summary sx = summarize(xs), sy = summarize(ys);
  return {sx.mean, sy.mean, sx.variance, sy.variance, pearson(xs, ys)};
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);

  const RngStream root(1, 0);
  CHECK(root.substream(StreamTag::field, 3) == root.substream(StreamTag::field, 3));
  CHECK_FALSE(root.substream(StreamTag::field, 3) == root.substream(StreamTag::moves, 3));
  CHECK_FALSE(root.substream(StreamTag::field, 3) == root.substream(StreamTag::field, 4));
}

TEST_CASE("uniform_open stays strictly inside (0, 1)") {
  RngStream r(5, 5);
  double lo = 1, hi = 0;
  for (int i = 0; i < 200000; ++i) {
    const double u = r.uniform_open();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("annulus validation") {
  CHECK_THROWS_AS(Annulus(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(Annulus(3, 2), std::invalid_argument);
  CHECK(Annulus(5, 5).area() == 0.0);
  CHECK(Annulus(0, 10).area() == doctest::Approx(100 * std::numbers::pi));
}

TEST_CASE("sample_ppp_annulus") {
  RngStream r(1, 1);
  SUBCASE("zero intensity gives nothing") {
    CHECK(sample_ppp_annulus(0.0, Annulus(0, 10), r).empty());
  }
  SUBCASE("degenerate annulus gives nothing") {
    CHECK(sample_ppp_annulus(2.0, Annulus(5, 5), r).empty());
  }
  SUBCASE("negative intensity is rejected") {
    CHECK_THROWS_AS(sample_ppp_annulus(-1.0, Annulus(0, 1), r), std::invalid_argument);
  }
  SUBCASE("mean count is the area") {
    // Poisson mean 100 pi; 1e5 draws put the sample mean within about 0.06.
    const RngStream root(9, 0);
    double total = 0;
    const int reps = 100000;
    for (int i = 0; i < reps; ++i) {
      RngStream s = root.substream(StreamTag::field, i);
      total += static_cast<double>(poisson_count(100 * std::numbers::pi, s));
    }
    CHECK(std::abs(total / reps - 314.159) < 3.0);
    // Also through the full sampler at a smaller replica count.
    double t2 = 0;
    for (int i = 0; i < 2000; ++i) {
      RngStream s = root.substream(StreamTag::oracle, i);
      t2 += static_cast<double>(sample_ppp_annulus(1.0, Annulus(0, 10), s).size());
    }
    CHECK(std::abs(t2 / 2000 - 314.159) < 3.0);
  }
  SUBCASE("points lie in the annulus and fill it uniformly") {
    auto pts = sample_ppp_annulus(50.0, Annulus(2, 4), r);
    REQUIRE(pts.size() > 1000);
    std::size_t inner_half = 0;
    const double split2 = (4.0 + 16.0) / 2.0;  // r^2 midpoint halves the area
    for (const auto& p : pts) {
      CHECK(p.norm2() > 4.0 - 1e-12);
      CHECK(p.norm2() <= 16.0 + 1e-12);
      if (p.norm2() <= split2) ++inner_half;
    }
    const double frac = static_cast<double>(inner_half) / static_cast<double>(pts.size());
    CHECK(std::abs(frac - 0.5) < 4.0 * std::sqrt(0.25 / static_cast<double>(pts.size())));
  }
  SUBCASE("counts over disjoint annuli are uncorrelated") {
    const RngStream root(3, 0);
    std::vector<double> a, b;
    for (int i = 0; i < 100000; ++i) {
      RngStream s1 = root.substream(StreamTag::field, 2 * i);
      RngStream s2 = root.substream(StreamTag::field, 2 * i + 1);
      a.push_back(static_cast<double>(sample_ppp_annulus(1.0, Annulus(0, 1), s1).size()));
      b.push_back(static_cast<double>(sample_ppp_annulus(1.0, Annulus(1, 1.5), s2).size()));
    }
    CHECK(std::abs(pearson(a, b)) < 0.02);
  }
}

TEST_CASE("sample_ppp_box stays in the canonical box") {
  RngStream r(2, 2);
  const auto pts = sample_ppp_box(1.0, 30.0, r);
  CHECK(pts.size() > 700);
  for (const auto& p : pts) {
    CHECK(p.x >= -15.0);
    CHECK(p.x < 15.0);
    CHECK(p.y >= -15.0);
    CHECK(p.y < 15.0);
  }
}

TEST_CASE("gaussian_jump moments") {
  RngStream r(11, 0);
  const auto m = moments(1000000, [&] { return gaussian_jump(r); });
  CHECK(m.var_x >= 0.995);
  CHECK(m.var_x <= 1.005);
  CHECK(m.var_y >= 0.995);
  CHECK(m.var_y <= 1.005);
  CHECK(std::abs(m.mean_x) <= 0.004);
  CHECK(std::abs(m.mean_y) <= 0.004);
  CHECK(std::abs(m.corr) <= 0.01);
}

TEST_CASE("displacement_after_jumps") {
  RngStream r(12, 0);
  CHECK(displacement_after_jumps(0, r) == Point2{0, 0});

  const auto m4 = moments(1000000, [&] { return displacement_after_jumps(4, r); });
  CHECK(m4.var_x >= 3.97);
  CHECK(m4.var_x <= 4.03);

  // Radial second moment 2j within 1%.
  double sum = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += displacement_after_jumps(3, r).norm2();
  CHECK(std::abs(sum / n / 6.0 - 1.0) < 0.01);

  // j = 1 has the law of a single jump: two-sample KS on the x component.
  std::vector<double> a, b;
  RngStream r1(13, 0), r2(13, 1);
  for (int i = 0; i < 100000; ++i) {
    a.push_back(displacement_after_jumps(1, r1).x);
    b.push_back(gaussian_jump(r2).x);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = 100000.0 * 100000.0 / 200000.0;
  CHECK(kolmogorov_sf(std::sqrt(ne) * d) > 0.01);
}

TEST_CASE("jump_count") {
  RngStream r(14, 0);
  CHECK(jump_count(0.0, r) == 0);
  CHECK_THROWS_AS(jump_count(-1.0, r), std::invalid_argument);

  std::uint64_t nonzero = 0;
  for (int i = 0; i < 1000000; ++i) nonzero += jump_count(0.01, r) > 0 ? 1 : 0;
  CHECK(std::abs(nonzero / 1e6 - (1 - std::exp(-0.01))) < 0.0003);

  double total = 0;
  for (int i = 0; i < 10000; ++i) total += static_cast<double>(jump_count(100.0, r));
  CHECK(std::abs(total / 1e4 - 100.0) < 0.3);
}

TEST_CASE("conditioned jump counts: sampler and table agree with the pmf") {
  for (double dt : {0.01, 0.5, 3.0}) {
    RngStream r(15, 0);
    const JumpCountTable table(dt);
    const int n = 400000;
    std::vector<std::uint64_t> hs(6, 0), ht(6, 0);
    for (int i = 0; i < n; ++i) {
      const auto a = jump_count_at_least_one(dt, r);
      const auto b = table(r);
      REQUIRE(a >= 1);
      REQUIRE(b >= 1);
      ++hs[std::min<std::uint64_t>(a, 5)];
      ++ht[std::min<std::uint64_t>(b, 5)];
    }
    // pmf of N | N >= 1 for N ~ Poisson(dt), classes 1..4 and >= 5.
    std::vector<double> probs(5);
    double term = std::exp(-dt) / (1 - std::exp(-dt));
    double acc = 0;
    for (int k = 1; k <= 4; ++k) {
      term *= dt / k;
      probs[k - 1] = term;
      acc += term;
    }
    probs[4] = std::max(0.0, 1 - acc);
    std::vector<std::uint64_t> os(hs.begin() + 1, hs.end()), ot(ht.begin() + 1, ht.end());
    // Merge sparse classes for the chi-square.
    std::vector<double> p2;
    std::vector<std::uint64_t> s2, t2;
    double pm = 0;
    std::uint64_t sm = 0, tm = 0;
    for (int k = 0; k < 5; ++k) {
      pm += probs[k];
      sm += os[k];
      tm += ot[k];
      if (pm * n >= 20 || k == 4) {
        p2.push_back(pm);
        s2.push_back(sm);
        t2.push_back(tm);
        pm = 0;
        sm = tm = 0;
      }
    }
    if (p2.size() >= 2) {
      if (p2.back() * n < 20) {  // fold a thin last class into its neighbour
        p2[p2.size() - 2] += p2.back();
        s2[s2.size() - 2] += s2.back();
        t2[t2.size() - 2] += t2.back();
        p2.pop_back();
        s2.pop_back();
        t2.pop_back();
      }
    }
    if (p2.size() >= 2) {
      CHECK(chi_square_gof_pvalue(s2, p2) > 1e-3);
      CHECK(chi_square_gof_pvalue(t2, p2) > 1e-3);
    }
  }
}

TEST_CASE("wrap_periodic") {
  CHECK(wrap_periodic({0, 0}, 800) == Point2{0, 0});
  CHECK(wrap_periodic({401, 0}, 800) == Point2{-399, 0});
  CHECK(wrap_periodic({-1203, 799}, 800) == Point2{397, -1});
  CHECK(wrap_periodic({400, -400}, 800) == Point2{-400, -400});
  RngStream r(16, 0);
  for (int i = 0; i < 10000; ++i) {
    const Point2 p{(r.uniform_open() - 0.5) * 1e5, (r.uniform_open() - 0.5) * 1e5};
    const Point2 w = wrap_periodic(p, 800);
    CHECK(w.x >= -400);
    CHECK(w.x < 400);
    CHECK(w.y >= -400);
    CHECK(w.y < 400);
    CHECK(wrap_periodic(w, 800) == w);
    // Translation by an integer number of box sides.
    CHECK(std::abs(std::remainder((p.x - w.x) / 800, 1.0)) < 1e-9);
  }
  CHECK_THROWS_AS(wrap_periodic({0, 0}, 0), std::invalid_argument);
}
