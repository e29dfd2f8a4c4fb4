#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "wgcorr/correlators.hpp"
#include "wgcorr/errors.hpp"

using namespace wgcorr;
using cplx = std::complex<double>;

namespace {

const DispersionRelation d1(1.0);

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<BiphotonSpec> families() {
  return {normalize(BiphotonSpec::separable_symmetrized(WavePacketSpec::gaussian(0.6, 0.1),
                                                        WavePacketSpec::gaussian(0.9, 0.15))),
          normalize(BiphotonSpec::gaussian_correlated(1.5, 0.1, 0.4)),
          normalize(BiphotonSpec::yls(GaussianPacket{2.0, 0.1, 1.0}, 2.0))};
}

} // namespace

TEST_CASE("zero packet gives zero amplitude") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1, 0.0);
  CHECK(amplitude_single(g, d1, {3.0, 5.0}).amplitude == cplx(0.0));
  CHECK(probability_single(g, d1, {3.0, 5.0}) == 0.0);
  const auto f = families()[0].scaled(0.0);
  CHECK(probability_biphoton(f, d1, {1.0, 2.0}, {0.5, 3.0}) == 0.0);
}

TEST_CASE("even real packet at the origin gives a real positive amplitude") {
  const auto g = WavePacketSpec::gaussian(0.0, 0.5);
  const auto r = amplitude_single(g, d1, {0.0, 0.0});
  CHECK(r.amplitude.real() > 0.0);
  CHECK(std::abs(r.amplitude.imag()) < 1e-14 * r.amplitude.real());
}

TEST_CASE("single amplitude against a dense Riemann sum") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1);
  const Interval dom = g.domain();
  for (SpacetimePoint pt : {SpacetimePoint{0.0, 0.0}, SpacetimePoint{6.0, 10.0},
                            SpacetimePoint{-3.0, 25.0}, SpacetimePoint{60.0, 100.0}}) {
    const cplx ref = oracle::riemann_amplitude([&](double k) { return g(k); }, 1.0, dom.lo,
                                               dom.hi, pt.z, pt.t, 400000);
    const cplx a = amplitude_single(g, d1, pt).amplitude;
    CHECK(std::abs(a - ref) <= std::max(1e-8 * std::abs(ref), 1e-14));
  }
}

TEST_CASE("parity for an even real packet") {
  const auto g = WavePacketSpec::gaussian(0.0, 0.3);
  for (double t : {0.0, 5.0, 40.0})
    for (double z : {0.5, 3.0, 20.0}) {
      const double a = probability_single(g, d1, {z, t}), b = probability_single(g, d1, {-z, t});
      CHECK(std::abs(a - b) <= 1e-10 * std::max(a, b) + 1e-30);
    }
}

TEST_CASE("asymptotic single-photon closed forms") {
  const auto flat = WavePacketSpec::gaussian(0.0, 100.0);
  for (double t : {1.0, 10.0, 123.0})
    CHECK(asymptotic_single(flat, d1, 0.0, t).probability == doctest::Approx(0.25 / t).epsilon(1e-12));
  const auto at = WavePacketSpec::gaussian(0.75, 100.0);
  const auto a = asymptotic_single(at, d1, 0.6, 100.0);
  CHECK(a.k0 == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(a.probability == doctest::Approx(3.90625e-3).epsilon(1e-12));
  CHECK(std::norm(a.amplitude) == doctest::Approx(a.probability).epsilon(1e-12));
  CHECK(std::arg(a.amplitude * std::exp(cplx(0.0, 100.0 * (1.25 - 0.75 * 0.6)))) ==
        doctest::Approx(-std::numbers::pi / 4).epsilon(1e-10));

  const auto node = WavePacketSpec::table({0.5, 0.7, 0.8, 1.0}, {1.0, 0.0, 0.0, 1.0});
  CHECK(asymptotic_single(node, d1, 0.6, 100.0).probability == 0.0);

  CHECK_THROWS_AS(asymptotic_single(at, d1, 1.0, 10.0), DomainError);
  CHECK_THROWS_AS(asymptotic_single(at, d1, -1.2, 10.0), DomainError);
  CHECK_THROWS_AS(asymptotic_single(at, d1, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("asymptotic guard tracks t omega'' sigma^2") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1);
  const auto a = asymptotic_single(g, d1, 0.6, 400.0);
  CHECK(a.guard_parameter == doctest::Approx(400.0 * 0.512 * 0.01).epsilon(1e-4));
  CHECK_FALSE(a.guard_ok);
  CHECK(asymptotic_single(g, d1, 0.6, 2000.0).guard_ok);
}

TEST_CASE("quadrature approaches the stationary-phase value at large t") {
  const auto g = normalize(WavePacketSpec::gaussian(0.75, 0.1));
  double prev = INFINITY;
  for (double t : {1000.0, 3000.0, 10000.0}) {
    const double q = probability_single(g, d1, {0.6 * t, t});
    const double a = asymptotic_single(g, d1, 0.6, t).probability;
    const double r = std::abs(q / a - 1.0);
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("Parseval: spatial norm is conserved and matches momentum space") {
  const auto g = normalize(WavePacketSpec::gaussian(0.75, 0.1));
  const double ref = momentum_norm_single(g, d1);
  for (double t : {0.0, 10.0, 100.0})
    CHECK(spatial_norm_single(g, d1, t) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("Klein-Gordon residual is second order") {
  const auto g = normalize(WavePacketSpec::gaussian(0.75, 0.1));
  const SpacetimePoint pt{4.0, 10.0};
  const double a = std::abs(klein_gordon_residual(g, d1, pt, 1e-2));
  const double b = std::abs(klein_gordon_residual(g, d1, pt, 5e-3));
  CHECK(a / b == doctest::Approx(4.0).epsilon(0.05));
  CHECK(a < 1e-4 * std::abs(amplitude_single(g, d1, pt).amplitude));
}

TEST_CASE("separable biphoton factorizes into single amplitudes") {
  const auto g1 = WavePacketSpec::gaussian(0.6, 0.1), g2 = WavePacketSpec::gaussian(0.9, 0.15);
  const auto f = BiphotonSpec::separable_symmetrized(g1, g2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, 30.0), uv(-0.3, 0.9);
  for (int i = 0; i < 10; ++i) {
    const double t1 = ut(rng), t2 = ut(rng);
    const SpacetimePoint p1{uv(rng) * t1, t1}, p2{uv(rng) * t2, t2};
    const cplx ref = amplitude_single(g1, d1, p1, 1e-12).amplitude * amplitude_single(g2, d1, p2, 1e-12).amplitude +
                     amplitude_single(g2, d1, p1, 1e-12).amplitude * amplitude_single(g1, d1, p2, 1e-12).amplitude;
    const cplx a = amplitude_biphoton(f, d1, p1, p2, 1e-11).amplitude;
    CHECK(std::abs(a - ref) <= 1e-8 * std::abs(ref) + 1e-14);
  }
}

TEST_CASE("YLS biphoton against the substitution oracle") {
  const auto f = normalize(BiphotonSpec::yls(GaussianPacket{2.0, 0.1, 1.0}, 2.0));
  const double kmax = f.domain().hi;
  for (auto [p1, p2] : {std::pair{SpacetimePoint{0.0, 0.0}, SpacetimePoint{0.0, 0.0}},
                        std::pair{SpacetimePoint{3.0, 5.0}, SpacetimePoint{2.5, 4.0}},
                        std::pair{SpacetimePoint{6.0, 10.0}, SpacetimePoint{8.0, 10.0}}}) {
    const cplx ref = oracle::biphoton_amplitude_s2([&](double a, double b) { return f(a, b); }, 1.0,
                                                   kmax, p1.z, p1.t, p2.z, p2.t);
    const cplx a = amplitude_biphoton(f, d1, p1, p2).amplitude;
    CHECK(std::norm(a) == doctest::Approx(std::norm(ref)).epsilon(1e-6));
  }
}

TEST_CASE("exchange symmetry of the two-photon probability") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ut(1.0, 20.0), uv(0.0, 0.9);
  for (const auto &f : families())
    for (int i = 0; i < 8; ++i) {
      const double t1 = ut(rng), t2 = ut(rng);
      const SpacetimePoint p1{uv(rng) * t1, t1}, p2{uv(rng) * t2, t2};
      const double a = probability_biphoton(f, d1, p1, p2), b = probability_biphoton(f, d1, p2, p1);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(a, b) + 1e-30);
      const cplx x = amplitude_biphoton(f, d1, p1, p2).amplitude, y = amplitude_biphoton(f, d1, p2, p1).amplitude;
      CHECK(std::abs(x - y) <= 1e-12 * std::abs(x) + 1e-15);
    }
}

TEST_CASE("two-photon probability is quartic in the amplitude scale") {
  const auto f = families()[1];
  const SpacetimePoint p1{2.0, 4.0}, p2{3.0, 6.0};
  const double a = probability_biphoton(f, d1, p1, p2, 1e-12);
  const double b = probability_biphoton(f.scaled(2.0), d1, p1, p2, 1e-12);
  // A is linear in f, so P picks up |lambda|^2.
  CHECK(b / a == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("asymptotic biphoton structure") {
  const auto f = families()[1];
  for (double v : {0.3, 0.6}) {
    const auto a = asymptotic_biphoton(f, d1, v, v, 50.0, 80.0);
    CHECK(a.k10 == a.k20);
    // Equal stationary points: twice the product of single-photon terms.
    const double k0 = d1.stationary_point(v);
    double pref = 1.0;
    for (double t : {50.0, 80.0})
      pref *= 2.0 * std::numbers::pi / (t * d1.omega_dd(k0)) / (8.0 * std::numbers::pi * d1.omega(k0));
    CHECK(a.probability == doctest::Approx(4.0 * std::norm(f(k0, k0)) * pref).epsilon(1e-12));
    CHECK(a.envelope == doctest::Approx(a.probability).epsilon(1e-12));
  }
  const auto far = asymptotic_biphoton(families()[0], d1, 0.99, 0.995, 100.0, 100.0);
  CHECK(far.probability == 0.0);
  CHECK(far.envelope == 0.0);
  CHECK_THROWS_AS(asymptotic_biphoton(f, d1, 1.0, 0.5, 10.0, 10.0), DomainError);
}

TEST_CASE("biphoton envelope agrees with quadrature at large t") {
  const auto f = BiphotonSpec::separable_symmetrized(WavePacketSpec::gaussian(0.6, 0.2),
                                                     WavePacketSpec::gaussian(0.9, 0.2));
  const double t = 600.0;
  for (auto [v1, v2] : {std::pair{0.55, 0.6}, std::pair{0.45, 0.6}}) {
    const auto a = asymptotic_biphoton(f, d1, v1, v2, t, t);
    REQUIRE(a.guard_ok);
    const double q = probability_biphoton(f, d1, {v1 * t, t}, {v2 * t, t});
    CHECK(q == doctest::Approx(a.envelope).epsilon(0.1));
  }
}

TEST_CASE("spacetime profile") {
  const auto g1 = WavePacketSpec::gaussian(0.6, 0.2), g2 = WavePacketSpec::gaussian(0.9, 0.3);
  const JointEnvelope product = [&](double a, double b) { return g1(a) * g2(b); };
  const std::vector<double> v1 = {0.3, 0.5, 0.6}, v2 = {0.4, 0.55, 1.0};
  const auto p = entangled_spacetime_profile(product, d1, v1, v2);
  REQUIRE(p.n1 == 3);
  REQUIRE(p.n2 == 3);
  CHECK_FALSE(p.at(0, 2).valid);
  CHECK(p.at(0, 2).value == 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(p.at(i, j).valid == (j != 2));
  const double lhs = p.at(0, 0).value * p.at(2, 1).value, rhs = p.at(0, 1).value * p.at(2, 0).value;
  CHECK(std::abs(lhs - rhs) <= 1e-8 * lhs);
  CHECK(p.at(1, 1).k10 == doctest::Approx(d1.stationary_point(0.5)));

  const auto yls = BiphotonSpec::yls(GaussianPacket{2.0, 0.1, 1.0}, 2.0);
  std::vector<double> vs;
  for (int i = 0; i < 41; ++i)
    vs.push_back(0.02 * i + 0.05);
  const auto q = entangled_spacetime_profile(yls, d1, vs, vs);
  double best = 0.0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < q.n1; ++i)
    for (std::size_t j = 0; j < q.n2; ++j)
      if (q.at(i, j).value > best) {
        best = q.at(i, j).value;
        bi = i;
        bj = j;
      }
  CHECK(q.at(bi, bj).k10 + q.at(bi, bj).k20 == doctest::Approx(2.0).epsilon(0.05));
  // Along the ridge k1 + k2 = 2 the profile stays within a pump width of its peak;
  // across it it falls by more than the cutoff at a few widths.
  const double k1 = d1.stationary_point(0.6), k2 = 2.0 - k1;
  CHECK(std::norm(yls(k1, k2)) > 0.1 * best);
  CHECK(std::norm(yls(k1, k2 + 0.5)) < 1e-6 * best);
}

TEST_CASE("scans are deterministic across thread counts") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1);
  std::vector<SpacetimePoint> pts;
  for (int i = 0; i < 12; ++i)
    pts.push_back({0.6 * 5.0 * i, 5.0 * i});
  const auto a = scan_single(g, d1, pts, 1e-10, 1), b = scan_single(g, d1, pts, 1e-10, 3);
  REQUIRE(a.probabilities.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(a.amplitudes[i] == b.amplitudes[i]);
    CHECK(a.probabilities[i] == doctest::Approx(std::norm(a.amplitudes[i])).epsilon(1e-15));
    CHECK(a.probabilities[i] >= 0.0);
    CHECK_FALSE(a.failed[i]);
  }
  const auto f = families()[1];
  std::vector<std::pair<SpacetimePoint, SpacetimePoint>> pairs;
  for (int i = 1; i < 5; ++i)
    pairs.push_back({{0.5 * i, 1.0 * i}, {0.7 * i, 1.5 * i}});
  const auto c = scan_biphoton(f, d1, pairs, 1e-10, 1), e = scan_biphoton(f, d1, pairs, 1e-10, 2);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    CHECK(c.amplitudes[i] == e.amplitudes[i]);
}

TEST_CASE("unreachable tolerance raises a quadrature error") {
  const auto g = WavePacketSpec::gaussian(0.75, 0.1);
  QuadOptions o;
  o.max_panels = 4;
  CHECK_THROWS_AS(amplitude_single(g, d1, {60.0, 100.0}, 1e-12, o), QuadratureError);
}
