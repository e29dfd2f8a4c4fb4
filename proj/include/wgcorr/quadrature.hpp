#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "wgcorr/dispersion.hpp"
#include "wgcorr/interval.hpp"

namespace wgcorr {

using Envelope1D = std::function<std::complex<double>(double)>;
using JointEnvelope = std::function<std::complex<double>(double, double)>;

/// Fills out[i * k2.size() + j] = f(k1[i], k2[j]).
using JointBlock = std::function<void(std::span<const double> k1, std::span<const double> k2,
                                      std::span<std::complex<double>> out)>;
/// Upper bound of |f| over the rectangle k1-range x k2-range.
using JointCellBound = std::function<double(Interval, Interval)>;

/// Joint envelope of the 2-D rule. Only `value` is required; `block` is a
/// vectorized evaluator and cells whose `cell_bound` does not exceed
/// `negligible` contribute exactly zero.
struct JointIntegrand {
  JointEnvelope value;
  JointBlock block;
  JointCellBound cell_bound;
  double negligible = 0.0;
};

/// One factor of the momentum integral
///   int_domain envelope(k) exp(i (k z - omega(k) t)) dk.
/// With z = t = 0 the problem degenerates to a plain integral of the envelope.
struct OscIntegralProblem {
  Envelope1D envelope;
  double z = 0.0;
  double t = 0.0;
  DispersionRelation dispersion{1.0};
  Interval domain;
  double rel_tol = 1e-10;
};

enum class QuadMethod { adaptive_panel, asymptotic_spa };

const char *to_string(QuadMethod m);

struct QuadResult {
  std::complex<double> value;
  double error_estimate = 0.0;
  int panels_used = 1;
  QuadMethod method = QuadMethod::adaptive_panel;
};

struct QuadOptions {
  int order = 6;                    // Gauss-Legendre points per panel
  int min_panels = 8;               // initial uniform split of the domain
  int max_panels = 200000;          // per axis
  long long max_cells = 4000000;    // panel pairs in the 2-D rule
  double abs_floor = 1e-15;         // absolute error accepted when the value is ~0
  int max_rounds = 60;
};

/// Phase rate |z - omega'(k) t| maximized over [a, b]; omega' is monotone so
/// the maximum sits at an endpoint.
double max_phase_rate(const OscIntegralProblem &p, double a, double b);

/// Initial partition: `min_panels` equal pieces, each further cut so that the
/// phase advances by at most pi/2 (a quarter oscillation) across a panel.
std::vector<Interval> oscillation_panels(const OscIntegralProblem &p, int min_panels);

/// Adaptive panel quadrature. Each panel is integrated with an n-point
/// Gauss-Legendre rule on the whole panel and on its two halves; the
/// difference is the panel error. Panels are bisected until the summed error
/// is below max(rel_tol |value|, abs_floor, roundoff), where roundoff is
/// 10 eps (1 + max |k z - omega t|) int |envelope|. Throws QuadratureError
/// (carrying the best value) when the panel cap is hit.
QuadResult osc_integrate_1d(const OscIntegralProblem &p, const QuadOptions &opts = {});

/// Tensor-product version for
///   int int p1.envelope(k1) p2.envelope(k2) joint(k1, k2)
///           exp(i phase1(k1)) exp(i phase2(k2)) dk1 dk2.
/// Per-axis panels obey the same quarter-oscillation constraint; the error
/// estimate compares every panel pair at two refinement levels and panels are
/// bisected along the axis that carries the error. Uses min(p1.rel_tol, p2.rel_tol).
QuadResult osc_integrate_2d(const OscIntegralProblem &p1, const OscIntegralProblem &p2,
                            const JointIntegrand &joint, const QuadOptions &opts = {});
QuadResult osc_integrate_2d(const OscIntegralProblem &p1, const OscIntegralProblem &p2,
                            const JointEnvelope &joint, const QuadOptions &opts = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights);

} // namespace wgcorr
