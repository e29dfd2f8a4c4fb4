#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "wgcorr/dispersion.hpp"
#include "wgcorr/quadrature.hpp"
#include "wgcorr/wavepackets.hpp"

namespace wgcorr {

/// Detector position z along the waveguide at time t (c = 1).
struct SpacetimePoint {
  double z = 0.0;
  double t = 0.0;
};

/// Stationary-phase results carry t * omega''(k0) * sigma_eff^2 and whether it
/// clears this threshold.
inline constexpr double kAsymptoticGuard = 10.0;

struct AmplitudeResult {
  std::complex<double> amplitude;
  double error_estimate = 0.0;
  int panels_used = 0;
  QuadMethod method = QuadMethod::adaptive_panel;

  double probability() const { return std::norm(amplitude); }
};

/// A(z, t) = int dk g(k) exp(-i omega t + i k z) / (2 sqrt(2 pi omega)).
AmplitudeResult amplitude_single(const WavePacketSpec &g, const DispersionRelation &d,
                                 SpacetimePoint pt, double tol = 1e-10,
                                 const QuadOptions &opts = {});

/// |A(z, t)|^2.
double probability_single(const WavePacketSpec &g, const DispersionRelation &d, SpacetimePoint pt,
                          double tol = 1e-10, const QuadOptions &opts = {});

/// int |A(z, t)|^2 dz over the region the packet can reach, by adaptive
/// Gauss-Kronrod in z.
double spatial_norm_single(const WavePacketSpec &g, const DispersionRelation &d, double t,
                           double tol = 1e-10);

/// int |g|^2 / (4 omega) dk, the z-integral of |A|^2 in momentum space.
double momentum_norm_single(const WavePacketSpec &g, const DispersionRelation &d);

/// A_tt - A_zz + m^2 A from central differences with step h in z and t.
std::complex<double> klein_gordon_residual(const WavePacketSpec &g, const DispersionRelation &d,
                                           SpacetimePoint pt, double h, double tol = 1e-13);

struct AsymptoticSingle {
  double probability = 0.0;         // |g(k0)|^2 / (4 t omega(k0) omega''(k0))
  std::complex<double> amplitude;   // leading term, including exp(-i pi/4)
  double k0 = 0.0;
  double guard_parameter = 0.0;
  bool guard_ok = false;
};

/// Leading stationary-phase term in the frame z = v t. Throws DomainError for
/// |v| >= 1 and std::invalid_argument for t <= 0.
AsymptoticSingle asymptotic_single(const WavePacketSpec &g, const DispersionRelation &d, double v,
                                   double t);

/// Two-photon amplitude. For symmetric f both exchange terms coincide, so the
/// integral is evaluated once and doubled.
AmplitudeResult amplitude_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                   SpacetimePoint pt1, SpacetimePoint pt2, double tol = 1e-10,
                                   const QuadOptions &opts = {});

double probability_biphoton(const BiphotonSpec &f, const DispersionRelation &d, SpacetimePoint pt1,
                            SpacetimePoint pt2, double tol = 1e-10, const QuadOptions &opts = {});

struct AsymptoticBiphoton {
  /// |A|^2 of the two-term form with swapped phase assignments in the
  /// exchange term; oscillates with the interference phase.
  double probability = 0.0;
  std::complex<double> amplitude;
  /// Interference maximum (|f(k10,k20)| + |f(k20,k10)|)^2 times the prefactor;
  /// for symmetric f this is the stationary-phase value of the full integral.
  double envelope = 0.0;
  double k10 = 0.0;
  double k20 = 0.0;
  double guard_parameter = 0.0;
  bool guard_ok = false;
};

AsymptoticBiphoton asymptotic_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                       double v1, double v2, double t1, double t2);

struct ProfilePoint {
  double v1 = 0.0;
  double v2 = 0.0;
  double k10 = 0.0;
  double k20 = 0.0;
  double value = 0.0; // |f(k10, k20)|^2
  bool valid = false; // false on or outside the light cone
};

struct SpacetimeProfile {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<ProfilePoint> points; // row-major over (v1, v2)

  const ProfilePoint &at(std::size_t i, std::size_t j) const { return points[i * n2 + j]; }
};

/// |f(m v1 / sqrt(1 - v1^2), m v2 / sqrt(1 - v2^2))|^2 over a velocity grid.
SpacetimeProfile entangled_spacetime_profile(const JointEnvelope &f, const DispersionRelation &d,
                                             std::span<const double> v1s,
                                             std::span<const double> v2s);
SpacetimeProfile entangled_spacetime_profile(const BiphotonSpec &f, const DispersionRelation &d,
                                             std::span<const double> v1s,
                                             std::span<const double> v2s);

/// Evaluated probabilities over a list of points (single photon) or point
/// pairs (biphoton). Failed quadratures keep their best value and are flagged.
struct CorrelationResult {
  std::vector<SpacetimePoint> points1;
  std::vector<SpacetimePoint> points2; // empty for single-photon scans
  std::vector<std::complex<double>> amplitudes;
  std::vector<double> probabilities;
  std::vector<double> error_estimates;
  std::vector<QuadMethod> methods;
  std::vector<char> failed;
};

CorrelationResult scan_single(const WavePacketSpec &g, const DispersionRelation &d,
                              std::span<const SpacetimePoint> points, double tol = 1e-10,
                              int threads = 1, const QuadOptions &opts = {});

CorrelationResult scan_biphoton(const BiphotonSpec &f, const DispersionRelation &d,
                                std::span<const std::pair<SpacetimePoint, SpacetimePoint>> pairs,
                                double tol = 1e-10, int threads = 1, const QuadOptions &opts = {});

} // namespace wgcorr
