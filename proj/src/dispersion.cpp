#include "wgcorr/dispersion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "wgcorr/errors.hpp"

namespace wgcorr {

DispersionRelation::DispersionRelation(double mass) : mass_(mass) {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("DispersionRelation: mass must be positive and finite, got " +
                                std::to_string(mass));
}

double DispersionRelation::omega(double k) const { return std::hypot(k, mass_); }

double DispersionRelation::omega_d(double k) const { return k / omega(k); }

double DispersionRelation::omega_dd(double k) const {
  const double w = omega(k);
  return mass_ * mass_ / (w * w * w);
}

double DispersionRelation::stationary_point(double v) const {
  if (!(std::abs(v) < 1.0))
    throw DomainError("stationary_point: frame velocity |v| = " + std::to_string(std::abs(v)) +
                      " is not subluminal");
  // 1 - v^2 as (1-v)(1+v) keeps precision near |v| -> 1.
  return mass_ * v / std::sqrt((1.0 - v) * (1.0 + v));
}

} // namespace wgcorr
