#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgcorr/correlators.hpp"

namespace wgcorr {

/// Probabilities below this count as bound-satisfying but carry no slope
/// information (|A| ~ 1e-13 is the oscillatory cancellation limit).
inline constexpr double kProbabilityFloor = 1e-26;

enum class BoundKind { two_photon_universal, outside_lightcone };
enum class Verdict { pass, fail, inconclusive };

const char *to_string(BoundKind k);
const char *to_string(Verdict v);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width95 = 0.0; // Student-t 95% half-width of the slope
  int used = 0;
  int excluded = 0;          // samples with nonpositive P or x
};

/// Least squares of log P against log x. Throws std::invalid_argument when
/// fewer than 5 samples remain after dropping nonpositive ones.
SlopeFit decay_slope_fit(std::span<const double> x, std::span<const double> p);

/// Scan grid for the universal bound: both detectors share `t_values`;
/// detector i sits at z_i = v_i t_i.
struct BiphotonGrid {
  std::vector<double> t_values;
  std::vector<double> v1_values;
  std::vector<double> v2_values;

  /// Twice the density along every axis: midpoints are inserted, arithmetic
  /// in v and geometric in t, so the original points stay on the grid.
  BiphotonGrid refined() const;
  std::size_t size() const;
  std::string describe() const;
};

struct T0Sample {
  double t0 = 0.0;
  double C = 0.0;
};

struct BoundSample {
  SpacetimePoint p1;
  SpacetimePoint p2;
  double probability = 0.0;
};

struct BoundFit {
  BoundKind kind = BoundKind::two_photon_universal;
  int order1 = 0;
  int order2 = 0;
  double C = 0.0;
  double t0 = 0.0;                  // universal bound only
  std::vector<T0Sample> t0_profile; // C(t0) over the search grid
  double asymptotic_C = 0.0;        // sup of the stationary-phase t1 t2 P
  std::string grid_descriptor;
  double max_violation = 0.0;       // max over grid of P * denominator - C
  double refinement_drift = 0.0;    // |C_refined - C| / C_refined
  double refined_C = 0.0;
  BoundSample argsup;
  std::size_t points_evaluated = 0;
  std::size_t points_excluded = 0;  // quadrature failures
  std::size_t points_asymptotic = 0;
  double overlap_discrepancy = 0.0; // max relative quadrature vs asymptotic gap
  double fitted_slope = 0.0;        // light-cone: steepest-fit slope over rays (max)
  double onset_radius = 0.0;        // light-cone: largest onset over rays
  Verdict verdict = Verdict::pass;
};

struct UniversalBoundOptions {
  double rel_tol = 1e-6;
  int threads = 1;
  bool refine = true;
  double t0_min = 1e-2; // search window in units of 1/m
  double t0_max = 1e2;
  int t0_points = 50;
  bool asymptotic_beyond_guard = true;
  double quadrature_t_max = 1000.0; // quadrature is used up to here
  /// Absolute quadrature floor on |A| for grid points; amplitudes below it
  /// give P < 1e-20 and cannot move C.
  double amplitude_floor = 1e-10;
  QuadOptions quad;
};

/// C(t0) = max over samples of P (t0 + |t1|)(t0 + |t2|).
double universal_constant(std::span<const BoundSample> samples, double t0);

/// max over samples of P (t0 + |t1|)(t0 + |t2|) - C.
double universal_violation(std::span<const BoundSample> samples, double C, double t0);

/// t0 search (log grid, then golden section around the best grid point) on
/// precomputed samples.
BoundFit fit_universal_constant(std::span<const BoundSample> samples, double mass,
                                const UniversalBoundOptions &opts = {});

/// Evaluates P over the grid (quadrature, or the stationary-phase envelope
/// beyond quadrature_t_max when the guard holds) and fits C and t0. With
/// opts.refine the refined grid is evaluated too and its C sets refinement_drift.
BoundFit fit_universal_bound(const BiphotonSpec &f, const DispersionRelation &d,
                             const BiphotonGrid &grid, const UniversalBoundOptions &opts = {});

/// Detector positions z at a fixed time t, all with |z| >= |t|.
struct Ray {
  double t = 0.0;
  std::vector<double> z;
};

struct RaySample {
  double z = 0.0;
  double t = 0.0;
  double probability = 0.0;
  bool below_floor = false;
  bool failed = false;
};

struct RayReport {
  double t = 0.0;
  std::vector<RaySample> samples;
  std::optional<SlopeFit> fit;     // over above-floor samples, x = 1 + |z|
  std::vector<double> local_slopes;
  std::string diagnostics;
};

struct LightconeReport {
  std::vector<RayReport> rays;
  std::vector<BoundFit> orders; // n1 = 0..max_order
};

struct LightconeOptions {
  double rel_tol = 1e-10;
  int threads = 1;
  QuadOptions quad;
};

/// Decay of the single-photon P outside the light cone.
LightconeReport check_lightcone_decay(const WavePacketSpec &g, const DispersionRelation &d,
                                      std::span<const Ray> rays, int max_order = 6,
                                      const LightconeOptions &opts = {});

/// Same for the biphoton P with detector 2 frozen at `other`; constants carry
/// the factor (1 + |z2|)^order2.
LightconeReport check_lightcone_decay(const BiphotonSpec &f, const DispersionRelation &d,
                                      std::span<const Ray> rays, SpacetimePoint other,
                                      int max_order = 6, int order2 = 0,
                                      const LightconeOptions &opts = {});

} // namespace wgcorr
