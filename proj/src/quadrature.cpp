#include "wgcorr/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wgcorr/errors.hpp"

namespace wgcorr {

namespace {

using cplx = std::complex<double>;

constexpr double kQuarterTurn = 0.5 * std::numbers::pi;

struct Rule {
  std::vector<double> x, w;
};

Rule make_rule(int n) {
  if (n < 2 || n > 64)
    throw std::invalid_argument("quadrature: panel order must lie in [2, 64]");
  Rule r;
  gauss_legendre(n, r.x, r.w);
  return r;
}

cplx phase_factor(const OscIntegralProblem &p, double k) {
  if (p.z == 0.0 && p.t == 0.0)
    return 1.0;
  const double ph = k * p.z - p.dispersion.omega(k) * p.t;
  return {std::cos(ph), std::sin(ph)};
}

cplx integrand(const OscIntegralProblem &p, double k) { return p.envelope(k) * phase_factor(p, k); }

cplx gl(const Rule &r, const OscIntegralProblem &p, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i)
    s += r.w[i] * integrand(p, c + h * r.x[i]);
  return s * h;
}

void validate(const OscIntegralProblem &p) {
  if (!p.envelope)
    throw std::invalid_argument("quadrature: envelope is empty");
  if (!std::isfinite(p.domain.lo) || !std::isfinite(p.domain.hi) || p.domain.hi < p.domain.lo)
    throw std::invalid_argument("quadrature: domain must be a finite interval");
  if (!(p.rel_tol > 0.0 && p.rel_tol < 1.0))
    throw std::invalid_argument("quadrature: tolerance must lie in (0, 1)");
  if (!std::isfinite(p.z) || !std::isfinite(p.t))
    throw std::invalid_argument("quadrature: z and t must be finite");
}

// Error estimates cannot drop below the rounding of the summed integrand; the
// phase kz - omega t is itself only known to eps * |phase|.
double roundoff_floor(const Rule &r, const OscIntegralProblem &p, const std::vector<Interval> &parts) {
  double l1 = 0.0;
  for (const auto &iv : parts) {
    const double c = 0.5 * (iv.lo + iv.hi), h = 0.5 * (iv.hi - iv.lo);
    for (std::size_t i = 0; i < r.x.size(); ++i)
      l1 += r.w[i] * h * std::abs(p.envelope(c + h * r.x[i]));
  }
  double phase = 0.0;
  for (double k : {p.domain.lo, p.domain.hi})
    phase = std::max(phase, std::abs(k * p.z) + p.dispersion.omega(k) * std::abs(p.t));
  return 10.0 * std::numeric_limits<double>::epsilon() * (1.0 + phase) * l1;
}

struct Panel1D {
  double a, b;
  cplx coarse, left, right;
  cplx fine() const { return left + right; }
  double err() const { return std::abs(left + right - coarse); }
};

Panel1D eval_panel(const Rule &r, const OscIntegralProblem &p, double a, double b) {
  const double m = 0.5 * (a + b);
  return {a, b, gl(r, p, a, b), gl(r, p, a, m), gl(r, p, m, b)};
}

// Child reuses the parent's half-panel value as its coarse estimate.
Panel1D eval_child(const Rule &r, const OscIntegralProblem &p, double a, double b, cplx coarse) {
  const double m = 0.5 * (a + b);
  return {a, b, coarse, gl(r, p, a, m), gl(r, p, m, b)};
}

// Node data of one axis panel for the tensor rule: u = weight * envelope * phase.
struct AxisPanel {
  double a, b;
  std::vector<double> kc, kf;
  std::vector<cplx> uc, uf;
};

void fill_nodes(const Rule &r, const OscIntegralProblem &p, double a, double b,
                std::vector<double> &k, std::vector<cplx> &u) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double ki = c + h * r.x[i];
    k.push_back(ki);
    u.push_back(r.w[i] * h * integrand(p, ki));
  }
}

AxisPanel make_axis_panel(const Rule &r, const OscIntegralProblem &p, double a, double b) {
  AxisPanel ap{a, b, {}, {}, {}, {}};
  const std::size_t n = r.x.size();
  ap.kc.reserve(n);
  ap.uc.reserve(n);
  ap.kf.reserve(2 * n);
  ap.uf.reserve(2 * n);
  fill_nodes(r, p, a, b, ap.kc, ap.uc);
  const double m = 0.5 * (a + b);
  fill_nodes(r, p, a, m, ap.kf, ap.uf);
  fill_nodes(r, p, m, b, ap.kf, ap.uf);
  return ap;
}

struct Cell {
  cplx coarse, fine;
  // Errors of refining one axis only; negative until computed.
  double dir1 = -1.0, dir2 = -1.0;
  double err() const { return std::abs(fine - coarse); }
};

class CellEvaluator {
public:
  explicit CellEvaluator(const JointIntegrand &j) : joint_(j) {}

  Cell operator()(const AxisPanel &p1, const AxisPanel &p2) {
    if (joint_.cell_bound && joint_.cell_bound({p1.a, p1.b}, {p2.a, p2.b}) <= joint_.negligible)
      return {0.0, 0.0};
    return {sum(p1.kc, p1.uc, p2.kc, p2.uc), sum(p1.kf, p1.uf, p2.kf, p2.uf)};
  }

  void directional(const AxisPanel &p1, const AxisPanel &p2, Cell &c) {
    if (c.dir1 >= 0.0)
      return;
    if (c.coarse == 0.0 && c.fine == 0.0) {
      c.dir1 = c.dir2 = 0.0;
      return;
    }
    c.dir1 = std::abs(sum(p1.kf, p1.uf, p2.kc, p2.uc) - c.coarse);
    c.dir2 = std::abs(sum(p1.kc, p1.uc, p2.kf, p2.uf) - c.coarse);
  }

private:
  cplx sum(const std::vector<double> &k1, const std::vector<cplx> &u1,
           const std::vector<double> &k2, const std::vector<cplx> &u2) {
    const std::size_t n1 = k1.size(), n2 = k2.size();
    buf_.resize(n1 * n2);
    if (joint_.block) {
      joint_.block(k1, k2, buf_);
    } else {
      for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
          buf_[i * n2 + j] = joint_.value(k1[i], k2[j]);
    }
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      cplx row = 0.0;
      for (std::size_t j = 0; j < n2; ++j)
        row += u2[j] * buf_[i * n2 + j];
      acc += u1[i] * row;
    }
    return acc;
  }

  const JointIntegrand &joint_;
  std::vector<cplx> buf_;
};

std::vector<AxisPanel> build_axis(const Rule &r, const OscIntegralProblem &p,
                                  const std::vector<Interval> &parts) {
  std::vector<AxisPanel> out;
  out.reserve(parts.size());
  for (const auto &iv : parts)
    out.push_back(make_axis_panel(r, p, iv.lo, iv.hi));
  return out;
}

// Splits the panels whose indicator exceeds `threshold`; `origin[i]` is the old
// index of panel i, or -1 for freshly created halves.
std::vector<AxisPanel> split_axis(const Rule &r, const OscIntegralProblem &p,
                                  std::vector<AxisPanel> &old, const std::vector<double> &indicator,
                                  double threshold, std::vector<int> &origin, bool &changed) {
  std::vector<AxisPanel> out;
  origin.clear();
  changed = false;
  for (std::size_t i = 0; i < old.size(); ++i) {
    if (indicator[i] > threshold) {
      const double m = 0.5 * (old[i].a + old[i].b);
      out.push_back(make_axis_panel(r, p, old[i].a, m));
      origin.push_back(-1);
      out.push_back(make_axis_panel(r, p, m, old[i].b));
      origin.push_back(-1);
      changed = true;
    } else {
      out.push_back(std::move(old[i]));
      origin.push_back(static_cast<int>(i));
    }
  }
  return out;
}

} // namespace

const char *to_string(QuadMethod m) {
  switch (m) {
  case QuadMethod::adaptive_panel:
    return "adaptive_panel";
  case QuadMethod::asymptotic_spa:
    return "asymptotic_spa";
  }
  return "unknown";
}

void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = w;
  }
  if (n % 2 == 1)
    nodes[n / 2] = 0.0;
}

double max_phase_rate(const OscIntegralProblem &p, double a, double b) {
  const auto rate = [&](double k) { return std::abs(p.z - p.dispersion.omega_d(k) * p.t); };
  return std::max(rate(a), rate(b));
}

std::vector<Interval> oscillation_panels(const OscIntegralProblem &p, int min_panels) {
  std::vector<Interval> out;
  const double lo = p.domain.lo, hi = p.domain.hi;
  if (!(hi > lo)) {
    out.push_back({lo, lo});
    return out;
  }
  const int pieces = std::max(1, min_panels);
  const double step = (hi - lo) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double end = (i + 1 == pieces) ? hi : lo + (i + 1) * step;
    double a = lo + i * step;
    while (a < end) {
      double w = end - a;
      const double r = max_phase_rate(p, a, a + w);
      // Shrinking the panel can only lower its maximal rate, so one cut suffices.
      if (r * w > kQuarterTurn)
        w = kQuarterTurn / r;
      double b = a + w;
      if (b >= end || end - b < 1e-12 * (hi - lo))
        b = end;
      out.push_back({a, b});
      a = b;
    }
  }
  return out;
}

QuadResult osc_integrate_1d(const OscIntegralProblem &p, const QuadOptions &opts) {
  validate(p);
  const Rule rule = make_rule(opts.order);
  if (p.domain.empty())
    return {0.0, 0.0, 1, QuadMethod::adaptive_panel};

  const auto parts = oscillation_panels(p, opts.min_panels);
  if (static_cast<int>(parts.size()) > opts.max_panels)
    throw QuadratureError("osc_integrate_1d: oscillation constraint needs " +
                              std::to_string(parts.size()) + " panels, cap is " +
                              std::to_string(opts.max_panels),
                          0.0, std::numeric_limits<double>::infinity());

  std::vector<Panel1D> panels;
  panels.reserve(parts.size());
  for (const auto &iv : parts)
    panels.push_back(eval_panel(rule, p, iv.lo, iv.hi));

  const double floor = std::max(opts.abs_floor, roundoff_floor(rule, p, parts));
  cplx total = 0.0;
  double err = 0.0;
  for (int round = 0;; ++round) {
    total = 0.0;
    err = 0.0;
    for (const auto &pn : panels) {
      total += pn.fine();
      err += pn.err();
    }
    const double allowed = std::max(p.rel_tol * std::abs(total), floor);
    if (err <= allowed)
      return {total, err, static_cast<int>(panels.size()), QuadMethod::adaptive_panel};
    if (round >= opts.max_rounds || static_cast<int>(panels.size()) >= opts.max_panels)
      break;

    const double threshold = allowed / static_cast<double>(panels.size());
    std::vector<Panel1D> next;
    next.reserve(panels.size() * 2);
    for (const auto &pn : panels) {
      if (pn.err() > threshold) {
        const double m = 0.5 * (pn.a + pn.b);
        next.push_back(eval_child(rule, p, pn.a, m, pn.left));
        next.push_back(eval_child(rule, p, m, pn.b, pn.right));
      } else {
        next.push_back(pn);
      }
    }
    if (static_cast<int>(next.size()) > opts.max_panels)
      break;
    panels = std::move(next);
  }
  throw QuadratureError("osc_integrate_1d: tolerance unreachable (error " + std::to_string(err) +
                            " with " + std::to_string(panels.size()) + " panels)",
                        total, err);
}

QuadResult osc_integrate_2d(const OscIntegralProblem &p1, const OscIntegralProblem &p2,
                            const JointEnvelope &joint, const QuadOptions &opts) {
  JointIntegrand j;
  j.value = joint;
  return osc_integrate_2d(p1, p2, j, opts);
}

QuadResult osc_integrate_2d(const OscIntegralProblem &p1, const OscIntegralProblem &p2,
                            const JointIntegrand &joint, const QuadOptions &opts) {
  validate(p1);
  validate(p2);
  if (!joint.value)
    throw std::invalid_argument("osc_integrate_2d: joint envelope is empty");
  CellEvaluator eval_cell(joint);
  const Rule rule = make_rule(opts.order);
  const double tol = std::min(p1.rel_tol, p2.rel_tol);
  if (p1.domain.empty() || p2.domain.empty())
    return {0.0, 0.0, 1, QuadMethod::adaptive_panel};

  const auto parts1 = oscillation_panels(p1, opts.min_panels);
  const auto parts2 = oscillation_panels(p2, opts.min_panels);
  const auto too_big = [&](std::size_t n1, std::size_t n2) {
    return static_cast<int>(n1) > opts.max_panels || static_cast<int>(n2) > opts.max_panels ||
           static_cast<long long>(n1) * static_cast<long long>(n2) > opts.max_cells;
  };
  if (too_big(parts1.size(), parts2.size()))
    throw QuadratureError("osc_integrate_2d: oscillation constraint needs " +
                              std::to_string(parts1.size()) + "x" + std::to_string(parts2.size()) +
                              " panels, beyond the cap",
                          0.0, std::numeric_limits<double>::infinity());

  std::vector<AxisPanel> ax1 = build_axis(rule, p1, parts1);
  std::vector<AxisPanel> ax2 = build_axis(rule, p2, parts2);
  std::vector<Cell> cells(ax1.size() * ax2.size());
  for (std::size_t a = 0; a < ax1.size(); ++a)
    for (std::size_t b = 0; b < ax2.size(); ++b)
      cells[a * ax2.size() + b] = eval_cell(ax1[a], ax2[b]);

  cplx total = 0.0;
  double err = 0.0;
  for (int round = 0;; ++round) {
    const std::size_t n1 = ax1.size(), n2 = ax2.size();
    std::vector<double> e1(n1, 0.0), e2(n2, 0.0);
    total = 0.0;
    err = 0.0;
    for (const Cell &c : cells) {
      total += c.fine;
      err += c.err();
    }
    const double allowed = std::max(tol * std::abs(total), opts.abs_floor);
    if (err <= allowed)
      return {total, err, static_cast<int>(n1 * n2), QuadMethod::adaptive_panel};
    if (round >= opts.max_rounds)
      break;

    // Cells above `minor` split their error between the axes in proportion to
    // the one-axis refinement errors; the rest charge both axes in full, which
    // cannot push a panel over the threshold on its own.
    const double threshold = allowed / static_cast<double>(n1 + n2);
    const double minor = threshold / static_cast<double>(n1 + n2);
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = 0; b < n2; ++b) {
        Cell &c = cells[a * n2 + b];
        const double e = c.err();
        if (e < minor) {
          e1[a] += e;
          e2[b] += e;
          continue;
        }
        eval_cell.directional(ax1[a], ax2[b], c);
        const double d = c.dir1 + c.dir2;
        const double s1 = d > 0.0 ? c.dir1 / d : 0.5;
        e1[a] += e * s1;
        e2[b] += e * (1.0 - s1);
      }
    std::vector<int> origin1, origin2;
    bool changed1 = false, changed2 = false;
    auto next1 = split_axis(rule, p1, ax1, e1, threshold, origin1, changed1);
    auto next2 = split_axis(rule, p2, ax2, e2, threshold, origin2, changed2);
    if (!changed1 && !changed2)
      break;
    if (too_big(next1.size(), next2.size())) {
      ax1 = std::move(next1);
      ax2 = std::move(next2);
      break;
    }
    std::vector<Cell> next_cells(next1.size() * next2.size());
    for (std::size_t a = 0; a < next1.size(); ++a)
      for (std::size_t b = 0; b < next2.size(); ++b) {
        Cell &dst = next_cells[a * next2.size() + b];
        if (origin1[a] >= 0 && origin2[b] >= 0)
          dst = cells[static_cast<std::size_t>(origin1[a]) * n2 + static_cast<std::size_t>(origin2[b])];
        else
          dst = eval_cell(next1[a], next2[b]);
      }
    ax1 = std::move(next1);
    ax2 = std::move(next2);
    cells = std::move(next_cells);
  }
  throw QuadratureError("osc_integrate_2d: tolerance unreachable (error " + std::to_string(err) +
                            " with " + std::to_string(ax1.size()) + "x" +
                            std::to_string(ax2.size()) + " panels)",
                        total, err);
}

} // namespace wgcorr
