#pragma once

namespace wgcorr {

/// Relativistic dispersion omega(k) = sqrt(k^2 + m^2) of a single waveguide
/// mode with cutoff mass m (natural units, c = 1).
class DispersionRelation {
public:
  explicit DispersionRelation(double mass);

  double mass() const { return mass_; }

  double omega(double k) const;
  /// Group velocity k / omega(k).
  double omega_d(double k) const;
  /// m^2 / omega(k)^3, strictly positive.
  double omega_dd(double k) const;

  /// Momentum k0 with omega_d(k0) = v, i.e. m v / sqrt(1 - v^2).
  /// Throws DomainError for |v| >= 1.
  double stationary_point(double v) const;

private:
  double mass_;
};

} // namespace wgcorr
