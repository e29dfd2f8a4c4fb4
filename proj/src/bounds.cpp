#include "wgcorr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "wgcorr/errors.hpp"

namespace wgcorr {

const char *to_string(BoundKind k) {
  switch (k) {
  case BoundKind::two_photon_universal:
    return "two_photon_universal";
  case BoundKind::outside_lightcone:
    return "outside_lightcone";
  }
  return "unknown";
}

const char *to_string(Verdict v) {
  switch (v) {
  case Verdict::pass:
    return "pass";
  case Verdict::fail:
    return "fail";
  case Verdict::inconclusive:
    return "inconclusive";
  }
  return "unknown";
}

SlopeFit decay_slope_fit(std::span<const double> x, std::span<const double> p) {
  if (x.size() != p.size())
    throw std::invalid_argument("decay_slope_fit: size mismatch");
  std::vector<double> lx, lp;
  SlopeFit fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(p[i] > 0.0) || !std::isfinite(p[i])) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(x[i]));
    lp.push_back(std::log(p[i]));
  }
  const std::size_t n = lx.size();
  if (n < 5)
    throw std::invalid_argument("decay_slope_fit: fewer than 5 positive samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += lp[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (lp[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("decay_slope_fit: abscissae are all equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = lp[i] - fit.intercept - fit.slope * lx[i];
    ssr += r * r;
  }
  const double df = double(n) - 2.0;
  const double se = std::sqrt(ssr / df / sxx);
  boost::math::students_t dist(df);
  fit.half_width95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  fit.used = int(n);
  return fit;
}

namespace {

std::vector<double> refine_arithmetic(const std::vector<double> &v) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
    if (i + 1 < v.size())
      out.push_back(0.5 * (v[i] + v[i + 1]));
  }
  return out;
}

std::vector<double> refine_geometric(const std::vector<double> &v) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
    if (i + 1 < v.size()) {
      if (v[i] > 0.0 && v[i + 1] > 0.0)
        out.push_back(std::sqrt(v[i] * v[i + 1]));
      else
        out.push_back(0.5 * (v[i] + v[i + 1]));
    }
  }
  return out;
}

std::string join(const std::vector<double> &v) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i)
    os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

} // namespace

BiphotonGrid BiphotonGrid::refined() const {
  return {refine_geometric(t_values), refine_arithmetic(v1_values), refine_arithmetic(v2_values)};
}

std::size_t BiphotonGrid::size() const {
  const std::size_t n1 = t_values.size() * v1_values.size();
  const std::size_t n2 = t_values.size() * v2_values.size();
  return n1 * n2;
}

std::string BiphotonGrid::describe() const {
  std::ostringstream os;
  os << "t=" << join(t_values) << " v1=" << join(v1_values) << " v2=" << join(v2_values)
     << " points=" << size();
  return os.str();
}

double universal_constant(std::span<const BoundSample> samples, double t0) {
  double c = 0.0;
  for (const auto &s : samples)
    c = std::max(c, s.probability * (t0 + std::abs(s.p1.t)) * (t0 + std::abs(s.p2.t)));
  return c;
}

double universal_violation(std::span<const BoundSample> samples, double C, double t0) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto &s : samples)
    worst = std::max(worst, s.probability * (t0 + std::abs(s.p1.t)) * (t0 + std::abs(s.p2.t)) - C);
  return worst;
}

BoundFit fit_universal_constant(std::span<const BoundSample> samples, double mass,
                                const UniversalBoundOptions &opts) {
  if (samples.empty())
    throw std::invalid_argument("fit_universal_constant: no samples");
  if (!(mass > 0.0) || opts.t0_points < 2 || !(opts.t0_min > 0.0) ||
      !(opts.t0_max > opts.t0_min))
    throw std::invalid_argument("fit_universal_constant: bad t0 search window");
  BoundFit fit;
  fit.kind = BoundKind::two_photon_universal;
  fit.order1 = 1;
  fit.order2 = 1;
  const double lo = std::log(opts.t0_min / mass);
  const double hi = std::log(opts.t0_max / mass);
  const int n = opts.t0_points;
  std::size_t best = 0;
  for (int i = 0; i < n; ++i) {
    const double t0 = std::exp(lo + (hi - lo) * double(i) / double(n - 1));
    fit.t0_profile.push_back({t0, universal_constant(samples, t0)});
    if (fit.t0_profile.back().C < fit.t0_profile[best].C)
      best = fit.t0_profile.size() - 1;
  }
  double a = std::log(fit.t0_profile[best == 0 ? 0 : best - 1].t0);
  double b = std::log(fit.t0_profile[std::min<std::size_t>(best + 1, n - 1)].t0);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  auto cost = [&](double lt) { return universal_constant(samples, std::exp(lt)); };
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = cost(x2);
    }
  }
  fit.t0 = fit.t0_profile[best].t0;
  fit.C = fit.t0_profile[best].C;
  for (double lt : {a, b, x1, x2}) {
    const double c = cost(lt);
    if (c < fit.C) {
      fit.C = c;
      fit.t0 = std::exp(lt);
    }
  }
  double top = -1.0;
  for (const auto &s : samples) {
    const double w = s.probability * (fit.t0 + std::abs(s.p1.t)) * (fit.t0 + std::abs(s.p2.t));
    if (w > top) {
      top = w;
      fit.argsup = s;
    }
  }
  fit.max_violation = universal_violation(samples, fit.C, fit.t0);
  fit.points_evaluated = samples.size();
  return fit;
}

namespace {

struct GridEval {
  std::vector<BoundSample> samples;
  std::vector<char> excluded;
  std::vector<char> asymptotic;
  double overlap_discrepancy = 0.0;
  std::size_t n1 = 0, n2 = 0;
};

GridEval evaluate_grid(const BiphotonSpec &f, const DispersionRelation &d, const BiphotonGrid &g,
                       const UniversalBoundOptions &opts) {
  GridEval out;
  const std::size_t nv1 = g.v1_values.size(), nv2 = g.v2_values.size(), nt = g.t_values.size();
  out.n1 = nt * nv1;
  out.n2 = nt * nv2;
  auto point1 = [&](std::size_t u) {
    const double t = g.t_values[u / nv1];
    return SpacetimePoint{g.v1_values[u % nv1] * t, t};
  };
  auto point2 = [&](std::size_t w) {
    const double t = g.t_values[w / nv2];
    return SpacetimePoint{g.v2_values[w % nv2] * t, t};
  };
  const bool mirror = g.v1_values == g.v2_values;
  const std::size_t total = out.n1 * out.n2;
  out.samples.resize(total);
  out.excluded.assign(total, 0);
  out.asymptotic.assign(total, 0);

  std::vector<std::size_t> quad_index;
  std::vector<std::pair<SpacetimePoint, SpacetimePoint>> quad_pairs;
  std::vector<double> overlap_env(total, -1.0);
  std::vector<char> computed(total, 0);
  for (std::size_t u = 0; u < out.n1; ++u) {
    for (std::size_t w = 0; w < out.n2; ++w) {
      if (mirror && w < u)
        continue;
      const std::size_t idx = u * out.n2 + w;
      const SpacetimePoint p1 = point1(u), p2 = point2(w);
      out.samples[idx] = {p1, p2, 0.0};
      computed[idx] = 1;
      const double v1 = p1.t != 0.0 ? p1.z / p1.t : 2.0;
      const double v2 = p2.t != 0.0 ? p2.z / p2.t : 2.0;
      const bool inside = std::abs(v1) < 1.0 && std::abs(v2) < 1.0 && p1.t > 0.0 && p2.t > 0.0;
      if (opts.asymptotic_beyond_guard && inside) {
        const auto a = asymptotic_biphoton(f, d, v1, v2, p1.t, p2.t);
        if (a.guard_ok) {
          if (std::max(p1.t, p2.t) > opts.quadrature_t_max) {
            out.samples[idx].probability = a.envelope;
            out.asymptotic[idx] = 1;
            continue;
          }
          overlap_env[idx] = a.envelope;
        }
      }
      quad_index.push_back(idx);
      quad_pairs.emplace_back(p1, p2);
    }
  }
  QuadOptions q = opts.quad;
  q.abs_floor = std::max(q.abs_floor, opts.amplitude_floor);
  const auto res = scan_biphoton(f, d, quad_pairs, opts.rel_tol, opts.threads, q);
  for (std::size_t i = 0; i < quad_index.size(); ++i) {
    const std::size_t idx = quad_index[i];
    out.samples[idx].probability = res.probabilities[i];
    out.excluded[idx] = res.failed[i];
    if (overlap_env[idx] > 0.0 && !res.failed[i])
      out.overlap_discrepancy = std::max(
          out.overlap_discrepancy, std::abs(res.probabilities[i] - overlap_env[idx]) / overlap_env[idx]);
  }
  if (mirror) {
    for (std::size_t u = 0; u < out.n1; ++u)
      for (std::size_t w = 0; w < u; ++w) {
        const std::size_t idx = u * out.n2 + w, src = w * out.n2 + u;
        out.samples[idx] = {point1(u), point2(w), out.samples[src].probability};
        out.excluded[idx] = out.excluded[src];
        out.asymptotic[idx] = out.asymptotic[src];
      }
  }
  return out;
}

BoundFit fit_from_eval(const GridEval &e, const std::vector<std::size_t> &indices, double mass,
                       const UniversalBoundOptions &opts) {
  std::vector<BoundSample> kept;
  std::size_t excluded = 0, asym = 0;
  for (std::size_t idx : indices) {
    if (e.excluded[idx]) {
      ++excluded;
      continue;
    }
    asym += e.asymptotic[idx];
    kept.push_back(e.samples[idx]);
  }
  BoundFit fit = fit_universal_constant(kept, mass, opts);
  fit.points_evaluated = indices.size();
  fit.points_excluded = excluded;
  fit.points_asymptotic = asym;
  return fit;
}

double asymptotic_constant(const BiphotonSpec &f, const DispersionRelation &d) {
  constexpr int n = 201;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v1 = -1.0 + 2.0 * (i + 0.5) / n;
    for (int j = i; j < n; ++j) {
      const double v2 = -1.0 + 2.0 * (j + 0.5) / n;
      best = std::max(best, asymptotic_biphoton(f, d, v1, v2, 1.0, 1.0).envelope);
    }
  }
  return best;
}

} // namespace

BoundFit fit_universal_bound(const BiphotonSpec &f, const DispersionRelation &d,
                             const BiphotonGrid &grid, const UniversalBoundOptions &opts) {
  if (grid.t_values.empty() || grid.v1_values.empty() || grid.v2_values.empty())
    throw std::invalid_argument("fit_universal_bound: empty grid");
  const BiphotonGrid eval_grid = opts.refine ? grid.refined() : grid;
  const GridEval e = evaluate_grid(f, d, eval_grid, opts);

  std::vector<std::size_t> all(e.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = i;

  BoundFit fit;
  if (opts.refine) {
    // Original grid points sit at even indices of every refined axis.
    const std::size_t nv1 = eval_grid.v1_values.size(), nv2 = eval_grid.v2_values.size();
    std::vector<std::size_t> base;
    for (std::size_t u = 0; u < e.n1; ++u) {
      if ((u / nv1) % 2 || (u % nv1) % 2)
        continue;
      for (std::size_t w = 0; w < e.n2; ++w) {
        if ((w / nv2) % 2 || (w % nv2) % 2)
          continue;
        base.push_back(u * e.n2 + w);
      }
    }
    fit = fit_from_eval(e, base, d.mass(), opts);
    const BoundFit fine = fit_from_eval(e, all, d.mass(), opts);
    fit.refined_C = fine.C;
    fit.refinement_drift = fine.C > 0.0 ? std::abs(fine.C - fit.C) / fine.C : 0.0;
  } else {
    fit = fit_from_eval(e, all, d.mass(), opts);
    fit.refined_C = fit.C;
  }
  fit.grid_descriptor = grid.describe();
  fit.overlap_discrepancy = e.overlap_discrepancy;
  fit.asymptotic_C = asymptotic_constant(f, d);
  if (fit.max_violation > 1e-12 * fit.C)
    fit.verdict = Verdict::fail;
  else if (fit.points_excluded > 0 || fit.refinement_drift > 0.05)
    fit.verdict = Verdict::inconclusive;
  else
    fit.verdict = Verdict::pass;
  return fit;
}

namespace {

void check_rays(std::span<const Ray> rays) {
  for (const auto &r : rays)
    for (double z : r.z)
      if (std::abs(z) < std::abs(r.t))
        throw std::invalid_argument("check_lightcone_decay: sample inside the light cone");
}

LightconeReport summarize(std::vector<RayReport> rays, int max_order, int order2, double other_z) {
  LightconeReport rep;
  const double frozen = std::pow(1.0 + std::abs(other_z), order2);
  for (auto &ray : rays) {
    std::sort(ray.samples.begin(), ray.samples.end(),
              [](const RaySample &a, const RaySample &b) { return std::abs(a.z) < std::abs(b.z); });
    std::vector<double> x, p;
    int floor_count = 0, failed = 0;
    for (const auto &s : ray.samples) {
      if (s.failed) {
        ++failed;
        continue;
      }
      if (s.below_floor) {
        ++floor_count;
        continue;
      }
      x.push_back(1.0 + std::abs(s.z));
      p.push_back(s.probability);
    }
    for (std::size_t j = 0; j + 1 < x.size(); ++j)
      ray.local_slopes.push_back(std::log(p[j + 1] / p[j]) / std::log(x[j + 1] / x[j]));
    if (x.size() >= 5)
      ray.fit = decay_slope_fit(x, p);
    std::ostringstream os;
    os << "t=" << ray.t << " valid=" << x.size() << " below_floor=" << floor_count
       << " failed=" << failed;
    ray.diagnostics = os.str();
  }
  for (int n = 0; n <= max_order; ++n) {
    BoundFit fit;
    fit.kind = BoundKind::outside_lightcone;
    fit.order1 = n;
    fit.order2 = order2;
    fit.fitted_slope = -std::numeric_limits<double>::infinity();
    bool any_fail = false, any_inconclusive = false;
    for (const auto &ray : rays) {
      for (const auto &s : ray.samples) {
        if (s.failed) {
          ++fit.points_excluded;
          continue;
        }
        ++fit.points_evaluated;
        const double w = s.probability * std::pow(1.0 + std::abs(s.z), n) * frozen;
        if (w > fit.C) {
          fit.C = w;
          fit.argsup.p1 = {s.z, s.t};
          fit.argsup.probability = s.probability;
        }
      }
      if (!ray.fit) {
        any_inconclusive = true;
        continue;
      }
      fit.fitted_slope = std::max(fit.fitted_slope, ray.fit->slope);
      // Onset: the first valid radius beyond which every local slope is <= -n.
      std::size_t j = ray.local_slopes.size();
      while (j > 0 && ray.local_slopes[j - 1] <= -double(n))
        --j;
      if (j == ray.local_slopes.size()) {
        any_fail = true;
        continue;
      }
      std::size_t valid = 0;
      for (const auto &s : ray.samples) {
        if (s.failed || s.below_floor)
          continue;
        if (valid++ == j) {
          fit.onset_radius = std::max(fit.onset_radius, std::abs(s.z));
          break;
        }
      }
    }
    fit.verdict = any_fail ? Verdict::fail : any_inconclusive ? Verdict::inconclusive : Verdict::pass;
    rep.orders.push_back(fit);
  }
  rep.rays = std::move(rays);
  return rep;
}

} // namespace

LightconeReport check_lightcone_decay(const WavePacketSpec &g, const DispersionRelation &d,
                                      std::span<const Ray> rays, int max_order,
                                      const LightconeOptions &opts) {
  check_rays(rays);
  std::vector<SpacetimePoint> pts;
  for (const auto &r : rays)
    for (double z : r.z)
      pts.push_back({z, r.t});
  const auto res = scan_single(g, d, pts, opts.rel_tol, opts.threads, opts.quad);
  std::vector<RayReport> reports;
  std::size_t k = 0;
  for (const auto &r : rays) {
    RayReport rr;
    rr.t = r.t;
    for (double z : r.z) {
      const double p = res.probabilities[k];
      rr.samples.push_back({z, r.t, p, p < kProbabilityFloor, res.failed[k] != 0});
      ++k;
    }
    reports.push_back(std::move(rr));
  }
  return summarize(std::move(reports), max_order, 0, 0.0);
}

LightconeReport check_lightcone_decay(const BiphotonSpec &f, const DispersionRelation &d,
                                      std::span<const Ray> rays, SpacetimePoint other,
                                      int max_order, int order2, const LightconeOptions &opts) {
  check_rays(rays);
  std::vector<std::pair<SpacetimePoint, SpacetimePoint>> pairs;
  for (const auto &r : rays)
    for (double z : r.z)
      pairs.emplace_back(SpacetimePoint{z, r.t}, other);
  const auto res = scan_biphoton(f, d, pairs, opts.rel_tol, opts.threads, opts.quad);
  std::vector<RayReport> reports;
  std::size_t k = 0;
  for (const auto &r : rays) {
    RayReport rr;
    rr.t = r.t;
    for (double z : r.z) {
      const double p = res.probabilities[k];
      rr.samples.push_back({z, r.t, p, p < kProbabilityFloor, res.failed[k] != 0});
      ++k;
    }
    reports.push_back(std::move(rr));
  }
  auto rep = summarize(std::move(reports), max_order, order2, other.z);
  for (auto &o : rep.orders)
    o.argsup.p2 = other;
  return rep;
}

} // namespace wgcorr
