#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wgcorr/bounds.hpp"
#include "wgcorr/config.hpp"
#include "wgcorr/correlators.hpp"
#include "wgcorr/errors.hpp"
#include "wgcorr/modes.hpp"
#include "wgcorr/output.hpp"

namespace fs = std::filesystem;
using namespace wgcorr;

namespace {

// Exit codes: 0 success, 1 numeric failure, 2 invalid usage or config.
struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunContext {
  ExperimentConfig cfg;
  fs::path out;
  int threads = 1;
};

std::string path_in(const RunContext &ctx, const std::string &name) {
  return (ctx.out / name).string();
}

std::int64_t i64(std::size_t n) { return static_cast<std::int64_t>(n); }
std::int64_t flag(bool b) { return b ? 1 : 0; }

QuadOptions quad_options(const ExperimentConfig &cfg) {
  QuadOptions q;
  q.order = cfg.tolerances.order;
  return q;
}

void require(bool ok, const std::string &message) {
  if (!ok)
    throw UsageError(message);
}

int run_modes(const RunContext &ctx) {
  const MassConfig &m = ctx.cfg.mass;
  require(m.source != MassSource::direct, "modes needs 'shape' or 'raster' in [mass]");
  const ModeSpectrum s = make_spectrum(m);
  CsvWriter csv(path_in(ctx, "modes.csv"),
                {"index", "label", "class", "eigenvalue", "cutoff_mass", "cluster", "residual"});
  PlotSeries series{"eigenvalue", {}, {}};
  for (const auto &e : s.entries) {
    csv.row({i64(e.index), e.label, std::string("TM"), e.eigenvalue, e.cutoff_mass,
             i64(e.cluster), e.residual});
    series.x.push_back(e.index);
    series.y.push_back(e.eigenvalue);
  }
  csv.close();
  write_svg_plot(path_in(ctx, "modes.svg"), {"Dirichlet spectrum", "index", "eigenvalue"},
                 {series});
  std::cout << "modes: " << s.entries.size() << " entries, selected m = "
            << format_double(s.entries.at(m.mode_index - 1).cutoff_mass) << "\n";
  return 0;
}

int run_single(const RunContext &ctx) {
  const ExperimentConfig &cfg = ctx.cfg;
  require(cfg.packet.present, "single needs a [packet] section");
  const ScanConfig &sc = cfg.scan;
  require(!sc.t.empty() && (!sc.z.empty() || !sc.v.empty()),
          "single needs [scan] t together with z or v");
  const DispersionRelation d = make_dispersion(cfg.mass);
  const WavePacketSpec g = make_packet(cfg.packet);
  const QuadOptions q = quad_options(cfg);
  std::size_t failures = 0;

  if (!sc.z.empty()) {
    std::vector<SpacetimePoint> pts;
    for (double t : sc.t)
      for (double z : sc.z)
        pts.push_back({z, t});
    const auto r = scan_single(g, d, pts, cfg.tolerances.rel_tol, ctx.threads, q);
    CsvWriter csv(path_in(ctx, "single_zt.csv"),
                  {"t", "z", "re_A", "im_A", "P", "error", "method", "failed"});
    std::vector<PlotSeries> series;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i % sc.z.size() == 0)
        series.push_back({"t=" + format_double(pts[i].t), {}, {}});
      csv.row({pts[i].t, pts[i].z, r.amplitudes[i].real(), r.amplitudes[i].imag(),
               r.probabilities[i], r.error_estimates[i], std::string(to_string(r.methods[i])),
               flag(r.failed[i])});
      series.back().x.push_back(pts[i].z);
      series.back().y.push_back(r.probabilities[i]);
      failures += r.failed[i] ? 1 : 0;
    }
    csv.close();
    write_svg_plot(path_in(ctx, "single_zt.svg"), {"P(z, t)", "z", "P"}, series);
  }

  if (!sc.v.empty()) {
    std::vector<SpacetimePoint> pts;
    for (double v : sc.v)
      for (double t : sc.t)
        pts.push_back({v * t, t});
    const auto r = scan_single(g, d, pts, cfg.tolerances.rel_tol, ctx.threads, q);
    CsvWriter csv(path_in(ctx, "single_frame.csv"),
                  {"v", "t", "z", "P", "error", "failed", "P_asymptotic", "relative_difference",
                   "guard_parameter", "guard_ok"});
    std::vector<PlotSeries> series;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = sc.v[i / sc.t.size()], t = pts[i].t;
      double pa = std::nan(""), guard = std::nan("");
      bool ok = false;
      if (std::abs(v) < 1.0 && t > 0.0) {
        const auto a = asymptotic_single(g, d, v, t);
        pa = a.probability;
        guard = a.guard_parameter;
        ok = a.guard_ok;
      }
      const double rel = pa > 0.0 ? (r.probabilities[i] - pa) / pa : std::nan("");
      csv.row({v, t, pts[i].z, r.probabilities[i], r.error_estimates[i], flag(r.failed[i]), pa,
               rel, guard, flag(ok)});
      if (i % sc.t.size() == 0) {
        series.push_back({"v=" + format_double(v), {}, {}});
        series.push_back({"v=" + format_double(v) + " asymptotic", {}, {}});
      }
      series[series.size() - 2].x.push_back(t);
      series[series.size() - 2].y.push_back(t * r.probabilities[i]);
      series.back().x.push_back(t);
      series.back().y.push_back(t * pa);
      failures += r.failed[i] ? 1 : 0;
    }
    csv.close();
    write_svg_plot(path_in(ctx, "single_frame.svg"),
                   {"t P(vt, t) against the stationary-phase limit", "t", "t P", true, true},
                   series);
  }
  if (failures)
    throw NumericFailure("single: " + std::to_string(failures) +
                         " quadrature point(s) missed tolerance (see 'failed' column)");
  return 0;
}

int run_biphoton(const RunContext &ctx) {
  const ExperimentConfig &cfg = ctx.cfg;
  require(cfg.biphoton.present, "biphoton needs a [biphoton] section");
  const ScanConfig &sc = cfg.scan;
  require(!sc.t1.empty() && !sc.v1.empty(), "biphoton needs [scan] t1 and v1 (t2, v2 default to them)");
  const DispersionRelation d = make_dispersion(cfg.mass);
  const BiphotonSpec f = make_biphoton(cfg.biphoton, cfg.packet);

  std::vector<std::pair<SpacetimePoint, SpacetimePoint>> pairs;
  std::vector<std::array<double, 4>> keys;
  for (double t1 : sc.t1)
    for (double t2 : sc.t2)
      for (double v1 : sc.v1)
        for (double v2 : sc.v2) {
          pairs.push_back({{v1 * t1, t1}, {v2 * t2, t2}});
          keys.push_back({t1, t2, v1, v2});
        }
  const auto r = scan_biphoton(f, d, pairs, cfg.tolerances.rel_tol, ctx.threads, quad_options(cfg));
  CsvWriter csv(path_in(ctx, "biphoton.csv"),
                {"t1", "t2", "v1", "v2", "z1", "z2", "P", "error", "failed", "P_asymptotic",
                 "envelope_asymptotic", "guard_ok"});
  std::vector<PlotSeries> series;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto &[t1, t2, v1, v2] = keys[i];
    double pa = std::nan(""), env = std::nan("");
    bool ok = false;
    if (std::abs(v1) < 1.0 && std::abs(v2) < 1.0 && t1 > 0.0 && t2 > 0.0) {
      const auto a = asymptotic_biphoton(f, d, v1, v2, t1, t2);
      pa = a.probability;
      env = a.envelope;
      ok = a.guard_ok;
    }
    csv.row({t1, t2, v1, v2, pairs[i].first.z, pairs[i].second.z, r.probabilities[i],
             r.error_estimates[i], flag(r.failed[i]), pa, env, flag(ok)});
    failures += r.failed[i] ? 1 : 0;
    if (t1 == sc.t1.front() && t2 == sc.t2.front()) {
      const std::size_t j = i % sc.v2.size();
      if (series.size() <= j)
        series.push_back({"v2=" + format_double(sc.v2[j]), {}, {}});
      series[j].x.push_back(v1);
      series[j].y.push_back(r.probabilities[i]);
    }
  }
  csv.close();
  write_svg_plot(path_in(ctx, "biphoton.svg"),
                 {"P at t1=" + format_double(sc.t1.front()) + ", t2=" + format_double(sc.t2.front()),
                  "v1", "P"},
                 series);

  const auto prof = entangled_spacetime_profile(f, d, sc.v1, sc.v2);
  CsvWriter pcsv(path_in(ctx, "profile.csv"), {"v1", "v2", "k10", "k20", "value", "valid"});
  std::vector<PlotSeries> pseries;
  for (std::size_t i = 0; i < prof.n1; ++i)
    for (std::size_t j = 0; j < prof.n2; ++j) {
      const auto &p = prof.at(i, j);
      pcsv.row({p.v1, p.v2, p.k10, p.k20, p.value, flag(p.valid)});
      if (pseries.size() <= j)
        pseries.push_back({"v2=" + format_double(p.v2), {}, {}});
      pseries[j].x.push_back(p.v1);
      pseries[j].y.push_back(p.valid ? p.value : std::nan(""));
    }
  pcsv.close();
  write_svg_plot(path_in(ctx, "profile.svg"), {"|f(k10, k20)|^2 over velocities", "v1", "|f|^2"},
                 pseries);
  if (failures)
    throw NumericFailure("biphoton: " + std::to_string(failures) +
                         " quadrature point(s) missed tolerance (see 'failed' column)");
  return 0;
}

void bound_row(CsvWriter &csv, const BoundFit &b) {
  csv.row({std::string(to_string(b.kind)), i64(b.order1), i64(b.order2), b.C, b.t0,
           b.asymptotic_C, b.max_violation, b.refinement_drift, b.refined_C, b.fitted_slope,
           b.onset_radius, b.argsup.p1.z, b.argsup.p1.t, b.argsup.p2.z, b.argsup.p2.t,
           i64(b.points_evaluated), i64(b.points_excluded), i64(b.points_asymptotic),
           b.overlap_discrepancy, std::string(to_string(b.verdict)), b.grid_descriptor});
}

int run_bounds(const RunContext &ctx) {
  const ExperimentConfig &cfg = ctx.cfg;
  const BoundsConfig &bc = cfg.bounds;
  const bool universal = cfg.biphoton.present && !bc.t.empty() && !bc.v1.empty();
  const bool lightcone = cfg.packet.present && !bc.ray_t.empty() && !bc.ray_z.empty();
  require(universal || lightcone,
          "bounds needs [biphoton] with [bounds] t, v1 or [packet] with [bounds] ray_t, ray_z");
  const DispersionRelation d = make_dispersion(cfg.mass);
  CsvWriter csv(path_in(ctx, "bounds.csv"),
                {"kind", "order1", "order2", "C", "t0", "asymptotic_C", "max_violation",
                 "refinement_drift", "refined_C", "fitted_slope", "onset_radius", "argsup_z1",
                 "argsup_t1", "argsup_z2", "argsup_t2", "points", "excluded", "asymptotic_points",
                 "overlap_discrepancy", "verdict", "grid"});
  std::ofstream summary(path_in(ctx, "bounds_summary.txt"), std::ios::binary);
  if (universal) {
    const BiphotonSpec f = make_biphoton(cfg.biphoton, cfg.packet);
    UniversalBoundOptions o;
    o.rel_tol = cfg.tolerances.bound_rel_tol;
    o.threads = ctx.threads;
    o.refine = bc.refine;
    o.t0_min = bc.t0_min;
    o.t0_max = bc.t0_max;
    o.t0_points = bc.t0_points;
    o.quadrature_t_max = bc.quadrature_t_max;
    o.quad = quad_options(cfg);
    const BoundFit b = fit_universal_bound(f, d, {bc.t, bc.v1, bc.v2}, o);
    bound_row(csv, b);
    CsvWriter prof(path_in(ctx, "t0_profile.csv"), {"t0", "C"});
    PlotSeries s{"C(t0)", {}, {}};
    for (const auto &p : b.t0_profile) {
      prof.row({p.t0, p.C});
      s.x.push_back(p.t0);
      s.y.push_back(p.C);
    }
    prof.close();
    write_svg_plot(path_in(ctx, "t0_profile.svg"), {"Universal constant against t0", "t0", "C", true, true},
                   {s});
    summary << "[two_photon_universal]\n"
            << "C = " << format_double(b.C) << "\nt0 = " << format_double(b.t0)
            << "\nasymptotic_C = " << format_double(b.asymptotic_C)
            << "\nmax_violation = " << format_double(b.max_violation)
            << "\nrefined_C = " << format_double(b.refined_C)
            << "\nrefinement_drift = " << format_double(b.refinement_drift)
            << "\npoints = " << b.points_evaluated << "\nexcluded = " << b.points_excluded
            << "\nasymptotic_points = " << b.points_asymptotic
            << "\noverlap_discrepancy = " << format_double(b.overlap_discrepancy)
            << "\nverdict = " << to_string(b.verdict) << "\ngrid = " << b.grid_descriptor << "\n\n";
  }
  if (lightcone) {
    const WavePacketSpec g = make_packet(cfg.packet);
    std::vector<Ray> rays;
    for (double t : bc.ray_t) {
      for (double z : bc.ray_z)
        require(std::abs(z) >= std::abs(t), "[bounds] ray_z must satisfy |z| >= |t| for every ray_t");
      rays.push_back({t, bc.ray_z});
    }
    LightconeOptions lo;
    lo.rel_tol = cfg.tolerances.rel_tol;
    lo.threads = ctx.threads;
    lo.quad = quad_options(cfg);
    const auto rep = check_lightcone_decay(g, d, rays, bc.max_order, lo);
    for (const auto &b : rep.orders)
      bound_row(csv, b);
    CsvWriter rc(path_in(ctx, "lightcone.csv"), {"t", "z", "P", "below_floor", "failed"});
    std::vector<PlotSeries> series;
    for (const auto &ray : rep.rays) {
      series.push_back({"t=" + format_double(ray.t), {}, {}});
      for (const auto &s : ray.samples) {
        rc.row({s.t, s.z, s.probability, flag(s.below_floor), flag(s.failed)});
        series.back().x.push_back(1.0 + std::abs(s.z));
        series.back().y.push_back(s.probability);
      }
    }
    rc.close();
    write_svg_plot(path_in(ctx, "lightcone.svg"),
                   {"P outside the light cone", "1 + |z|", "P", true, true}, series);
    summary << "[outside_lightcone]\n";
    for (const auto &ray : rep.rays) {
      summary << "ray " << ray.diagnostics;
      if (ray.fit)
        summary << " slope = " << format_double(ray.fit->slope)
                << " half_width95 = " << format_double(ray.fit->half_width95);
      summary << "\n";
    }
    for (const auto &b : rep.orders)
      summary << "order " << b.order1 << ": C = " << format_double(b.C)
              << " onset_radius = " << format_double(b.onset_radius)
              << " verdict = " << to_string(b.verdict) << "\n";
  }
  csv.close();
  return 0;
}

struct Check {
  std::string name;
  double value;
  double threshold;
  bool passed;
};

int run_validate(const RunContext &ctx) {
  const ExperimentConfig &cfg = ctx.cfg;
  const DispersionRelation d = make_dispersion(cfg.mass);
  std::vector<Check> checks;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> ut(1.0, 50.0);

  if (cfg.mass.source != MassSource::direct) {
    const ModeSpectrum s = make_spectrum(cfg.mass);
    bool sorted = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
      if (i && s.entries[i].eigenvalue < s.entries[i - 1].eigenvalue)
        sorted = false;
      worst = std::max(worst, s.entries[i].residual);
    }
    checks.push_back({"modes_ascending", sorted ? 1.0 : 0.0, 1.0, sorted});
    checks.push_back({"modes_max_residual", worst, 1e-8, worst <= 1e-8});
  }
  if (cfg.packet.present) {
    const WavePacketSpec g = make_packet(cfg.packet);
    const double ref = momentum_norm_single(g, d);
    double worst = 0.0;
    for (double t : {0.0, 10.0, 100.0}) {
      const double n = spatial_norm_single(g, d, t);
      worst = std::max(worst, ref > 0.0 ? std::abs(n - ref) / ref : std::abs(n));
    }
    checks.push_back({"norm_conservation", worst, 1e-6, worst <= 1e-6});
    const SpacetimePoint pt{0.6 * 20.0, 20.0};
    const double r1 = std::abs(klein_gordon_residual(g, d, pt, 1e-2));
    const double r2 = std::abs(klein_gordon_residual(g, d, pt, 5e-3));
    const double ratio = r2 > 0.0 ? r1 / r2 : std::nan("");
    checks.push_back({"klein_gordon_residual_ratio", ratio, 4.0,
                      std::abs(ratio - 4.0) <= 0.5 || (r1 == 0.0 && r2 == 0.0)});
  }
  if (cfg.biphoton.present) {
    const BiphotonSpec f = make_biphoton(cfg.biphoton, cfg.packet);
    double worst = 0.0;
    // Detectors ride group-velocity rays of the spectrum, where P is well above
    // the quadrature floor.
    const Interval dom = f.domain();
    std::uniform_real_distribution<double> uk(dom.lo, dom.hi);
    auto draw = [&] {
      const double t = ut(rng);
      return SpacetimePoint{d.omega_d(uk(rng)) * t, t};
    };
    for (int i = 0; i < 10; ++i) {
      const SpacetimePoint a = draw(), b = draw();
      const double p = probability_biphoton(f, d, a, b, 1e-12);
      const double q = probability_biphoton(f, d, b, a, 1e-12);
      const double scale = std::max(std::abs(p), std::abs(q));
      if (scale > 0.0)
        worst = std::max(worst, std::abs(p - q) / scale);
    }
    checks.push_back({"exchange_symmetry", worst, 1e-10, worst <= 1e-10});
    double asym = 0.0;
    for (double k1 : {0.3, 0.9, 1.4})
      for (double k2 : {0.1, 1.1, 1.7})
        asym = std::max(asym, std::abs(f(k1, k2) - f(k2, k1)));
    checks.push_back({"amplitude_symmetric", asym, 0.0, asym == 0.0});
  }
  require(!checks.empty(), "validate found nothing to check: add [packet], [biphoton] or a cross-section");
  CsvWriter csv(path_in(ctx, "validate.csv"), {"check", "value", "threshold", "passed"});
  bool ok = true;
  for (const auto &c : checks) {
    csv.row({c.name, c.value, c.threshold, flag(c.passed)});
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_double(c.value)
              << " threshold=" << format_double(c.threshold) << "\n";
    ok = ok && c.passed;
  }
  csv.close();
  if (!ok)
    throw NumericFailure("validate: one or more property checks failed");
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Photon detection probabilities in hollow waveguides"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = int(std::max(1u, std::thread::hardware_concurrency()));
  const std::vector<std::string> names = {"modes", "single", "biphoton", "bounds", "validate"};
  for (const auto &n : names) {
    auto *sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  RunContext ctx;
  try {
    ctx.cfg = load_config(config_path);
    if (!out_dir.empty())
      ctx.cfg.output_dir = fs::absolute(out_dir).lexically_normal().string();
    ctx.out = ctx.cfg.output_dir;
    ctx.threads = threads;
    fs::create_directories(ctx.out);
    std::ofstream echo(ctx.out / "config.effective.ini", std::ios::binary);
    write_config(echo, ctx.cfg);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }

  try {
    if (sub == "modes")
      return run_modes(ctx);
    if (sub == "single")
      return run_single(ctx);
    if (sub == "biphoton")
      return run_biphoton(ctx);
    if (sub == "bounds")
      return run_bounds(ctx);
    return run_validate(ctx);
  } catch (const UsageError &e) {
    std::cerr << "error: " << config_path << ": " << e.what() << "\n";
    return 2;
  } catch (const NumericFailure &e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const QuadratureError &e) {
    std::cerr << "numeric failure in " << sub << ": " << e.what()
              << " (best value " << format_double(std::abs(e.best_value()))
              << ", achieved error " << format_double(e.achieved_error()) << ")\n";
    return 1;
  } catch (const SolverError &e) {
    std::cerr << "numeric failure in " << sub << ": " << e.what() << " (residual "
              << format_double(e.residual()) << ")\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error in " << sub << ": " << e.what() << "\n";
    return 1;
  }
}
