#include "wgcorr/correlators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wgcorr/errors.hpp"
#include "wgcorr/parallel.hpp"

namespace wgcorr {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Mode-function normalization 1 / (2 sqrt(2 pi omega)).
double mode_weight(const DispersionRelation &d, double k) {
  return 1.0 / (2.0 * std::sqrt(kTwoPi * d.omega(k)));
}

OscIntegralProblem axis_problem(const DispersionRelation &d, SpacetimePoint pt, Interval domain,
                                double tol) {
  OscIntegralProblem p;
  p.envelope = [d](double k) { return cplx(mode_weight(d, k), 0.0); };
  p.z = pt.z;
  p.t = pt.t;
  p.dispersion = d;
  p.domain = domain;
  p.rel_tol = tol;
  return p;
}

// exp(-i t (omega(k) - k v))
cplx moving_frame_phase(const DispersionRelation &d, double k, double v, double t) {
  const double ph = -t * (d.omega(k) - k * v);
  return {std::cos(ph), std::sin(ph)};
}

void require_positive_time(double t, const char *who) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(std::string(who) + ": t must be positive and finite");
}

} // namespace

AmplitudeResult amplitude_single(const WavePacketSpec &g, const DispersionRelation &d,
                                 SpacetimePoint pt, double tol, const QuadOptions &opts) {
  OscIntegralProblem p;
  p.envelope = [&g, d](double k) { return g(k) * mode_weight(d, k); };
  p.z = pt.z;
  p.t = pt.t;
  p.dispersion = d;
  p.domain = g.domain();
  p.rel_tol = tol;
  const QuadResult r = osc_integrate_1d(p, opts);
  return {r.value, r.error_estimate, r.panels_used, r.method};
}

double probability_single(const WavePacketSpec &g, const DispersionRelation &d, SpacetimePoint pt,
                          double tol, const QuadOptions &opts) {
  return amplitude_single(g, d, pt, tol, opts).probability();
}

double spatial_norm_single(const WavePacketSpec &g, const DispersionRelation &d, double t,
                           double tol) {
  const Interval dom = g.domain();
  if (dom.empty())
    return 0.0;
  const double sigma = dom.width() / (2.0 * std::sqrt(2.0 * std::log(1.0 / kEnvelopeCutoff)));
  const double margin = 1.5 * std::sqrt(2.0 * std::log(1e16)) / sigma;
  const double va = d.omega_d(dom.lo) * t, vb = d.omega_d(dom.hi) * t;
  const double a = std::min(va, vb) - margin, b = std::max(va, vb) + margin;
  auto density = [&](double z) { return probability_single(g, d, {z, t}, 1e-12); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, a, b, 20, tol,
                                                                       &err);
}

double momentum_norm_single(const WavePacketSpec &g, const DispersionRelation &d) {
  const Interval dom = g.domain();
  if (dom.empty())
    return 0.0;
  auto density = [&](double k) { return std::norm(g(k)) / (4.0 * d.omega(k)); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, dom.lo, dom.hi,
                                                                       20, 1e-14, &err);
}

std::complex<double> klein_gordon_residual(const WavePacketSpec &g, const DispersionRelation &d,
                                           SpacetimePoint pt, double h, double tol) {
  if (!(h > 0.0))
    throw std::invalid_argument("klein_gordon_residual: step must be positive");
  auto A = [&](double z, double t) { return amplitude_single(g, d, {z, t}, tol).amplitude; };
  const cplx c = A(pt.z, pt.t);
  const cplx att = (A(pt.z, pt.t + h) - 2.0 * c + A(pt.z, pt.t - h)) / (h * h);
  const cplx azz = (A(pt.z + h, pt.t) - 2.0 * c + A(pt.z - h, pt.t)) / (h * h);
  return att - azz + d.mass() * d.mass() * c;
}

AsymptoticSingle asymptotic_single(const WavePacketSpec &g, const DispersionRelation &d, double v,
                                   double t) {
  require_positive_time(t, "asymptotic_single");
  AsymptoticSingle out;
  out.k0 = d.stationary_point(v);
  const double w0 = d.omega(out.k0);
  const double wdd = d.omega_dd(out.k0);
  const cplx g0 = g(out.k0);
  const cplx quarter = std::polar(1.0, -0.25 * std::numbers::pi);
  out.amplitude = g0 * moving_frame_phase(d, out.k0, v, t) * quarter * mode_weight(d, out.k0) *
                  std::sqrt(kTwoPi / (t * wdd));
  out.probability = std::norm(g0) / (4.0 * t * w0 * wdd);
  const double sigma = g.effective_width(out.k0);
  out.guard_parameter = t * wdd * sigma * sigma;
  out.guard_ok = out.guard_parameter >= kAsymptoticGuard;
  return out;
}

AmplitudeResult amplitude_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                   SpacetimePoint pt1, SpacetimePoint pt2, double tol,
                                   const QuadOptions &opts) {
  const Interval dom = f.domain();
  const auto p1 = axis_problem(d, pt1, dom, tol);
  const auto p2 = axis_problem(d, pt2, dom, tol);
  const QuadResult r = osc_integrate_2d(p1, p2, f.integrand(), opts);
  return {2.0 * r.value, 2.0 * r.error_estimate, r.panels_used, r.method};
}

double probability_biphoton(const BiphotonSpec &f, const DispersionRelation &d, SpacetimePoint pt1,
                            SpacetimePoint pt2, double tol, const QuadOptions &opts) {
  return amplitude_biphoton(f, d, pt1, pt2, tol, opts).probability();
}

AsymptoticBiphoton asymptotic_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                       double v1, double v2, double t1, double t2) {
  require_positive_time(t1, "asymptotic_biphoton");
  require_positive_time(t2, "asymptotic_biphoton");
  AsymptoticBiphoton out;
  out.k10 = d.stationary_point(v1);
  out.k20 = d.stationary_point(v2);
  const double wdd1 = d.omega_dd(out.k10), wdd2 = d.omega_dd(out.k20);
  const double pref = std::sqrt(kTwoPi / (t1 * wdd1)) * std::sqrt(kTwoPi / (t2 * wdd2)) *
                      mode_weight(d, out.k10) * mode_weight(d, out.k20);
  const cplx f12 = f(out.k10, out.k20);
  const cplx f21 = f(out.k20, out.k10);
  const cplx direct = f12 * moving_frame_phase(d, out.k10, v1, t1) * moving_frame_phase(d, out.k20, v2, t2);
  const cplx exchange = f21 * moving_frame_phase(d, out.k20, v1, t1) * moving_frame_phase(d, out.k10, v2, t2);
  out.amplitude = pref * cplx(0.0, -1.0) * (direct + exchange);
  out.probability = std::norm(out.amplitude);
  const double peak = std::abs(f12) + std::abs(f21);
  out.envelope = pref * pref * peak * peak;
  const auto [s1, s2] = f.effective_widths(out.k10, out.k20);
  out.guard_parameter = std::min(t1 * wdd1 * s1 * s1, t2 * wdd2 * s2 * s2);
  out.guard_ok = out.guard_parameter >= kAsymptoticGuard;
  return out;
}

SpacetimeProfile entangled_spacetime_profile(const JointEnvelope &f, const DispersionRelation &d,
                                             std::span<const double> v1s,
                                             std::span<const double> v2s) {
  SpacetimeProfile out;
  out.n1 = v1s.size();
  out.n2 = v2s.size();
  out.points.reserve(out.n1 * out.n2);
  for (double v1 : v1s)
    for (double v2 : v2s) {
      ProfilePoint p;
      p.v1 = v1;
      p.v2 = v2;
      p.valid = std::abs(v1) < 1.0 && std::abs(v2) < 1.0;
      if (p.valid) {
        p.k10 = d.stationary_point(v1);
        p.k20 = d.stationary_point(v2);
        p.value = std::norm(f(p.k10, p.k20));
      }
      out.points.push_back(p);
    }
  return out;
}

SpacetimeProfile entangled_spacetime_profile(const BiphotonSpec &f, const DispersionRelation &d,
                                             std::span<const double> v1s,
                                             std::span<const double> v2s) {
  return entangled_spacetime_profile([&f](double a, double b) { return f(a, b); }, d, v1s, v2s);
}

namespace {

void size_result(CorrelationResult &r, std::size_t n) {
  r.amplitudes.assign(n, 0.0);
  r.probabilities.assign(n, 0.0);
  r.error_estimates.assign(n, 0.0);
  r.methods.assign(n, QuadMethod::adaptive_panel);
  r.failed.assign(n, 0);
}

template <class Eval> void fill_slot(CorrelationResult &r, std::size_t i, Eval &&eval) {
  try {
    const AmplitudeResult a = eval();
    r.amplitudes[i] = a.amplitude;
    r.error_estimates[i] = a.error_estimate;
    r.methods[i] = a.method;
  } catch (const QuadratureError &e) {
    r.amplitudes[i] = e.best_value();
    r.error_estimates[i] = e.achieved_error();
    r.failed[i] = 1;
  }
  r.probabilities[i] = std::norm(r.amplitudes[i]);
}

} // namespace

CorrelationResult scan_single(const WavePacketSpec &g, const DispersionRelation &d,
                              std::span<const SpacetimePoint> points, double tol, int threads,
                              const QuadOptions &opts) {
  CorrelationResult r;
  r.points1.assign(points.begin(), points.end());
  size_result(r, points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    fill_slot(r, i, [&] { return amplitude_single(g, d, points[i], tol, opts); });
  });
  return r;
}

CorrelationResult scan_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                std::span<const std::pair<SpacetimePoint, SpacetimePoint>> pairs,
                                double tol, int threads, const QuadOptions &opts) {
  CorrelationResult r;
  for (const auto &[a, b] : pairs) {
    r.points1.push_back(a);
    r.points2.push_back(b);
  }
  size_result(r, pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    fill_slot(r, i, [&] { return amplitude_biphoton(f, d, pairs[i].first, pairs[i].second, tol, opts); });
  });
  return r;
}

} // namespace wgcorr
