// Acceptance criteria; one PASS/FAIL line each. Exit status is nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wgcorr/bounds.hpp"
#include "wgcorr/correlators.hpp"
#include "wgcorr/modes.hpp"

using namespace wgcorr;
using cplx = std::complex<double>;

namespace {

int failures = 0;

void report(int n, const char *name, bool ok, const std::string &detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", n, name, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string fmt(const char *f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return out;
}

const DispersionRelation d1(1.0);

WavePacketSpec reference_packet() { return normalize(WavePacketSpec::gaussian(0.75, 0.1)); }

// Detector on the group-velocity ray of a momentum drawn from the domain.
SpacetimePoint ray_point(std::mt19937_64 &rng, Interval dom) {
  std::uniform_real_distribution<double> uk(dom.lo, dom.hi), ut(1.0, 50.0);
  const double t = ut(rng);
  return {d1.omega_d(uk(rng)) * t, t};
}

void stationary_phase() {
  const auto g = reference_packet();
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0, worst_t = 0.0;
  for (double t : log_space(200.0, 1000.0, 17)) {
    const double q = probability_single(g, d1, {0.6 * t, t});
    const double a = asymptotic_single(g, d1, 0.6, t).probability;
    const double r = std::abs(q - a) / a;
    if (r > worst) {
      worst = r;
      worst_t = t;
    }
  }
  const double secs = seconds_since(start);
  report(1, "stationary-phase convergence", worst <= 0.05 && secs <= 60.0,
         fmt("max |P - P_asym|/P_asym = %.4g at t = %.4g (threshold 0.05), %.3f s (limit 60 s)",
             worst, worst_t, secs));
}

void correction_order() {
  const auto g = reference_packet();
  std::vector<double> ts = log_space(100.0, 1000.0, 19), diff;
  for (double t : ts)
    diff.push_back(std::abs(t * probability_single(g, d1, {0.6 * t, t}) -
                            t * asymptotic_single(g, d1, 0.6, t).probability));
  const auto f = decay_slope_fit(ts, diff);
  report(2, "correction order", std::abs(f.slope + 0.5) <= 0.15,
         fmt("slope of |tP - tP_asym| = %.4f +- %.3f (target -0.5 +- 0.15)", f.slope,
             f.half_width95));
}

void universal_bound() {
  const auto f = normalize(BiphotonSpec::yls(GaussianPacket{2.0, 0.1, 1.0}, 2.0));
  BiphotonGrid grid;
  grid.t_values = log_space(50.0, 800.0, 3);
  for (int i = 0; i < 10; ++i) {
    const double k = 0.4 + 1.2 * i / 9.0;
    grid.v1_values.push_back(d1.omega_d(k));
  }
  grid.v2_values = grid.v1_values;
  UniversalBoundOptions o;
  o.threads = 1;
  const auto start = std::chrono::steady_clock::now();
  const auto b = fit_universal_bound(f, d1, grid, o);
  const double secs = seconds_since(start);
  const bool ok = b.max_violation <= 0.0 && b.refinement_drift < 0.10 && b.points_excluded == 0 &&
                  secs <= 300.0;
  report(3, "universal two-photon bound", ok,
         fmt("C = %.6g, t0 = %.3g, max_violation = %.3g, drift = %.3g (limit 0.10), excluded = %zu, "
             "%.1f s (limit 300 s)",
             b.C, b.t0, b.max_violation, b.refinement_drift, b.points_excluded, secs));
}

void lightcone() {
  const auto g = reference_packet();
  std::vector<Ray> rays(1);
  rays[0].t = 50.0;
  for (int i = 0; i <= 40; ++i)
    rays[0].z.push_back(60.0 + i);
  const auto r = check_lightcone_decay(g, d1, rays, 6);
  const auto &ray = r.rays[0];
  std::size_t below = 0, unflagged = 0;
  for (const auto &s : ray.samples) {
    below += s.below_floor ? 1 : 0;
    unflagged += (s.probability < kProbabilityFloor && !s.below_floor) || s.failed ? 1 : 0;
  }
  const bool ok = ray.fit && ray.fit->slope <= -6.0 && unflagged == 0 &&
                  r.orders[6].verdict == Verdict::pass;
  report(4, "outside light-cone decay", ok,
         fmt("slope = %.3f (limit -6), below floor = %zu, unflagged = %zu, order 6 %s",
             ray.fit ? ray.fit->slope : NAN, below, unflagged, to_string(r.orders[6].verdict)));
}

void klein_gordon() {
  const auto g = reference_packet();
  const SpacetimePoint pt{30.0, 50.0};
  const double a = std::abs(klein_gordon_residual(g, d1, pt, 1e-2));
  const double b = std::abs(klein_gordon_residual(g, d1, pt, 5e-3));
  report(5, "Klein-Gordon residual", std::abs(a / b - 4.0) <= 0.5,
         fmt("residual(h=1e-2) = %.4g, residual(h=5e-3) = %.4g, ratio = %.4f (target 4 +- 0.5)", a,
             b, a / b));
}

void parseval() {
  const auto g = reference_packet();
  const double ref = momentum_norm_single(g, d1);
  double worst = 0.0;
  std::string detail = fmt("momentum norm = %.12g;", ref);
  for (double t : {0.0, 10.0, 100.0}) {
    const double n = spatial_norm_single(g, d1, t);
    worst = std::max(worst, std::abs(n - ref) / ref);
    detail += fmt(" N(%g) = %.12g", t, n);
  }
  report(6, "norm conservation", worst <= 1e-6, detail + fmt("; max rel diff = %.3g (limit 1e-6)", worst));
}

void factorization() {
  const auto g1 = WavePacketSpec::gaussian(0.6, 0.1), g2 = WavePacketSpec::gaussian(0.9, 0.15);
  const auto f = BiphotonSpec::separable_symmetrized(g1, g2);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto p1 = ray_point(rng, f.domain()), p2 = ray_point(rng, f.domain());
    auto a = [&](const WavePacketSpec &g, SpacetimePoint p) {
      return amplitude_single(g, d1, p, 1e-12).amplitude;
    };
    const cplx ref = a(g1, p1) * a(g2, p2) + a(g2, p1) * a(g1, p2);
    const cplx got = amplitude_biphoton(f, d1, p1, p2, 1e-11).amplitude;
    worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
  }
  report(7, "separable factorization", worst <= 1e-8,
         fmt("max relative difference over 100 pairs = %.3g (limit 1e-8)", worst));
}

void exchange() {
  const std::vector<std::pair<const char *, BiphotonSpec>> fams = {
      {"separable", normalize(BiphotonSpec::separable_symmetrized(WavePacketSpec::gaussian(0.6, 0.1),
                                                                  WavePacketSpec::gaussian(0.9, 0.15)))},
      {"correlated", normalize(BiphotonSpec::gaussian_correlated(1.5, 0.1, 0.4))},
      {"yls", normalize(BiphotonSpec::yls(GaussianPacket{2.0, 0.1, 1.0}, 2.0))}};
  bool ok = true;
  std::string detail;
  for (const auto &[name, f] : fams) {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto p1 = ray_point(rng, f.domain()), p2 = ray_point(rng, f.domain());
      const double a = probability_biphoton(f, d1, p1, p2, 1e-12),
                   b = probability_biphoton(f, d1, p2, p1, 1e-12);
      worst = std::max(worst, std::abs(a - b) / std::max(a, b));
    }
    ok = ok && worst <= 1e-10;
    detail += fmt("%s%s %.3g", detail.empty() ? "" : ", ", name, worst);
  }
  report(8, "exchange symmetry", ok, "max relative asymmetry: " + detail + " (limit 1e-10)");
}

void mode_solver() {
  const double pi = std::numbers::pi;
  const auto sq = CrossSection::rectangle(pi, pi);
  const double e32 = std::abs(fd_spectrum(sq, 1, pi / 32).entries[0].eigenvalue - 2.0);
  const double l64 = fd_spectrum(sq, 1, pi / 64).entries[0].eigenvalue;
  const double e64 = std::abs(l64 - 2.0);
  const double disk = fd_spectrum(CrossSection::disk(1.0), 1, 1.0 / 64).entries[0].cutoff_mass;
  const double j01 = 2.404826;
  const bool ok = e64 <= 0.02 && std::abs(e32 / e64 - 4.0) <= 1.0 && std::abs(disk - j01) <= 0.02 * j01;
  report(9, "mode solver", ok,
         fmt("square eigenvalue %.6f (|rel err| %.3g, limit 0.01), error ratio %.3f (target 4 +- 1), "
             "disk m1 %.6f (rel err %.3g, limit 0.02)",
             l64, e64 / 2.0, e32 / e64, disk, std::abs(disk - j01) / j01));
}

void quadrature_oracle() {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uc(-1.0, 2.0), us(0.05, 0.6), ut(0.0, 100.0),
      uz(-100.0, 100.0), um(0.3, 2.0);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double c = uc(rng), s = us(rng), z = uz(rng), t = ut(rng), m = um(rng);
    OscIntegralProblem p;
    p.envelope = [c, s](double k) { return cplx(std::exp(-0.5 * (k - c) * (k - c) / (s * s)), 0.0); };
    p.z = z;
    p.t = t;
    p.dispersion = DispersionRelation(m);
    const double reach = s * std::sqrt(2.0 * std::log(1e14));
    p.domain = {c - reach, c + reach};
    p.rel_tol = 1e-9;
    const cplx got = osc_integrate_1d(p).value;
    // Riemann oracle with the (2 sqrt(2 pi omega)) weight undone.
    const long n = 400000;
    const double h = p.domain.width() / n;
    cplx ref = 0.0;
    for (long j = 0; j < n; ++j) {
      const double k = p.domain.lo + (j + 0.5) * h;
      ref += p.envelope(k) * std::polar(1.0, k * z - std::sqrt(k * k + m * m) * t);
    }
    ref *= h;
    const double err = std::abs(got - ref), allowed = std::max(10.0 * p.rel_tol * std::abs(got), 1e-12);
    worst = std::max(worst, err / allowed);
    bad += err <= allowed ? 0 : 1;
  }
  report(10, "quadrature oracle", bad == 0,
         fmt("%d of 50 cases outside max(10 tol |value|, 1e-12); worst error/allowed = %.3g", bad, worst));
}

} // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      stationary_phase, correction_order, universal_bound, lightcone,     klein_gordon,
      parseval,         factorization,    exchange,        mode_solver,   quadrature_oracle};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception &e) {
      std::printf("FAIL %zu threw: %s\n", i + 1, e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
