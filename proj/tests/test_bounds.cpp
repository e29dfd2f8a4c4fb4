#include <doctest.h>

#include <cmath>
#include <random>

#include "wgcorr/bounds.hpp"

using namespace wgcorr;

namespace {

const DispersionRelation d1(1.0);

std::vector<BoundSample> synthetic(double C, double t0) {
  std::vector<BoundSample> s;
  for (double t1 : {1.0, 3.0, 10.0, 30.0})
    for (double t2 : {2.0, 5.0, 20.0})
      s.push_back({{0.0, t1}, {0.0, t2}, C / ((t0 + t1) * (t0 + t2)) * (t1 == 10.0 && t2 == 5.0 ? 1.0 : 0.5)});
  return s;
}

BiphotonGrid small_grid() { return {{20.0, 40.0, 80.0}, {0.3, 0.5, 0.7}, {0.3, 0.5, 0.7}}; }

} // namespace

TEST_CASE("slope fit recovers a power law") {
  std::vector<double> x, p;
  for (int i = 0; i < 12; ++i) {
    x.push_back(std::pow(10.0, 0.2 * i));
    p.push_back(3.0 * std::pow(x.back(), -2.0));
  }
  const auto f = decay_slope_fit(x, p);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.half_width95 < 1e-10);
  CHECK(f.used == 12);
  CHECK(f.excluded == 0);
}

TEST_CASE("slope fit of a constant is flat") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6}, p(6, 0.7);
  CHECK(std::abs(decay_slope_fit(x, p).slope) < 1e-12);
}

TEST_CASE("slope fit drops nonpositive samples and needs five") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6, 7}, p = {1, 0.5, 0.0, 0.25, -1.0, 1.0 / 6, 1.0 / 7};
  p[1] = 1.0 / 2;
  p[3] = 1.0 / 4;
  const auto f = decay_slope_fit(x, p);
  CHECK(f.used == 5);
  CHECK(f.excluded == 2);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  std::vector<double> x4 = {1, 2, 3, 4}, p4 = {1, 2, 3, 4};
  CHECK_THROWS_AS(decay_slope_fit(x4, p4), std::invalid_argument);
  std::vector<double> px = {1, 2, 0, 0, 0, 3};
  CHECK_THROWS_AS(decay_slope_fit(std::span<const double>(x).first(6), px), std::invalid_argument);
}

TEST_CASE("slope fit reports scatter") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<double> x, p;
  for (int i = 0; i < 40; ++i) {
    x.push_back(1.0 + i);
    p.push_back(std::pow(x.back(), -3.0) * std::exp(n(rng)));
  }
  const auto f = decay_slope_fit(x, p);
  CHECK(f.half_width95 > 0.0);
  CHECK(std::abs(f.slope + 3.0) < 3.0 * f.half_width95);
}

TEST_CASE("universal constant and violation") {
  const auto s = synthetic(2.0, 1.0);
  CHECK(universal_constant(s, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(universal_violation(s, 2.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(universal_violation(s, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // C(t0) is nondecreasing in t0 for nonnegative samples.
  double prev = 0.0;
  for (double t0 : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double c = universal_constant(s, t0);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("fit on precomputed samples bounds every sample") {
  const auto s = synthetic(2.0, 1.0);
  UniversalBoundOptions o;
  const auto f = fit_universal_constant(s, 1.0, o);
  CHECK(f.t0 >= o.t0_min);
  CHECK(f.t0 <= o.t0_max);
  CHECK(f.max_violation <= 1e-12 * f.C);
  CHECK(f.C == doctest::Approx(universal_constant(s, f.t0)).epsilon(1e-14));
  CHECK(f.t0_profile.size() == std::size_t(o.t0_points));
  for (const auto &p : f.t0_profile)
    CHECK(p.C >= f.C * (1.0 - 1e-12));
  CHECK(f.argsup.p1.t == 10.0);
  CHECK(f.argsup.p2.t == 5.0);
}

TEST_CASE("doubling a sample set scales C linearly") {
  auto s = synthetic(1.0, 0.5);
  const auto a = fit_universal_constant(s, 1.0);
  for (auto &x : s)
    x.probability *= 3.0;
  const auto b = fit_universal_constant(s, 1.0);
  CHECK(b.C / a.C == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(b.t0 == doctest::Approx(a.t0).epsilon(1e-10));
}

TEST_CASE("refined grid nests the original") {
  const auto g = small_grid();
  const auto r = g.refined();
  CHECK(r.t_values.size() == 5);
  CHECK(r.v1_values.size() == 5);
  CHECK(r.size() == 5 * 5 * 5 * 5);
  CHECK(g.size() == 81);
  for (std::size_t i = 0; i < g.t_values.size(); ++i) {
    CHECK(r.t_values[2 * i] == g.t_values[i]);
    CHECK(r.v2_values[2 * i] == g.v2_values[i]);
  }
  CHECK(r.t_values[1] == doctest::Approx(std::sqrt(20.0 * 40.0)));
  CHECK(r.v1_values[1] == doctest::Approx(0.4));
  CHECK_FALSE(g.describe().empty());
}

TEST_CASE("universal bound on a small grid") {
  const auto f = normalize(BiphotonSpec::gaussian_correlated(1.5, 0.1, 0.4));
  UniversalBoundOptions o;
  const auto b = fit_universal_bound(f, d1, small_grid(), o);
  CHECK(b.kind == BoundKind::two_photon_universal);
  CHECK(b.C > 0.0);
  CHECK(b.max_violation <= 1e-12 * b.C);
  CHECK(b.points_evaluated == small_grid().size());
  CHECK(b.points_excluded == 0);
  CHECK(b.points_asymptotic == 0);
  CHECK(b.refined_C >= b.C * (1.0 - 1e-12));
  CHECK(b.refinement_drift == doctest::Approx(std::abs(b.refined_C - b.C) / b.refined_C));
  CHECK(b.asymptotic_C > 0.0);
  CHECK(b.verdict != Verdict::fail);

  // P is quadratic in |f|^2: f -> 2 f multiplies every sample and C by 4.
  const auto b2 = fit_universal_bound(f.scaled(2.0), d1, small_grid(), o);
  CHECK(b2.C / b.C == doctest::Approx(4.0).epsilon(1e-6));

  const auto z = fit_universal_bound(f.scaled(0.0), d1, small_grid(), o);
  CHECK(z.C == 0.0);
  CHECK(z.max_violation <= 0.0);
}

TEST_CASE("light-cone decay of a single photon") {
  const auto g = normalize(WavePacketSpec::gaussian(0.75, 0.1));
  std::vector<Ray> rays(1);
  rays[0].t = 50.0;
  for (int i = 0; i <= 16; ++i)
    rays[0].z.push_back(60.0 + 2.5 * i);
  const auto r = check_lightcone_decay(g, d1, rays, 6);
  REQUIRE(r.rays.size() == 1);
  REQUIRE(r.rays[0].fit);
  CHECK(r.rays[0].fit->slope <= -6.0);
  REQUIRE(r.orders.size() == 7);
  for (int n = 0; n <= 6; ++n) {
    CHECK(r.orders[n].order1 == n);
    CHECK(r.orders[n].kind == BoundKind::outside_lightcone);
    CHECK(r.orders[n].verdict == Verdict::pass);
  }
  for (const auto &s : r.rays[0].samples) {
    CHECK_FALSE(s.failed);
    CHECK((s.probability >= kProbabilityFloor || s.below_floor));
  }
  double c6 = 0.0;
  for (const auto &s : r.rays[0].samples)
    c6 = std::max(c6, s.probability * std::pow(1.0 + std::abs(s.z), 6));
  CHECK(r.orders[6].C == doctest::Approx(c6).epsilon(1e-14));

  std::vector<Ray> inside = {{50.0, {10.0, 60.0}}};
  CHECK_THROWS_AS(check_lightcone_decay(g, d1, inside, 6), std::invalid_argument);
}

TEST_CASE("biphoton with a frozen detector decays like the single photon") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1);
  const auto f = BiphotonSpec::separable_symmetrized(g, g);
  std::vector<Ray> rays(1);
  rays[0].t = 30.0;
  for (int i = 0; i <= 10; ++i)
    rays[0].z.push_back(36.0 + 2.0 * i);
  const SpacetimePoint other{12.0, 20.0};
  const auto s = check_lightcone_decay(g, d1, rays, 4);
  const auto b = check_lightcone_decay(f, d1, rays, other, 4, 2);
  REQUIRE(s.rays[0].fit);
  REQUIRE(b.rays[0].fit);
  CHECK(b.rays[0].fit->slope == doctest::Approx(s.rays[0].fit->slope).epsilon(1e-3));
  CHECK(b.orders[4].order2 == 2);
  // P2 = 4 P1(z) P1(other) for f = g g.
  const double p_other = probability_single(g, d1, other);
  CHECK(b.orders[4].C ==
        doctest::Approx(4.0 * s.orders[4].C * p_other * std::pow(1.0 + other.z, 2)).epsilon(1e-5));
}
