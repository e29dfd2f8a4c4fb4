#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace wgcorr {

/// Argument outside the mathematical domain of an operation (e.g. |v| >= 1).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Adaptive quadrature could not reach its tolerance within the panel cap.
class QuadratureError : public std::runtime_error {
public:
  QuadratureError(const std::string &what, std::complex<double> best_value,
                  double achieved_error)
      : std::runtime_error(what), best_value_(best_value),
        achieved_error_(achieved_error) {}

  std::complex<double> best_value() const { return best_value_; }
  double achieved_error() const { return achieved_error_; }

private:
  std::complex<double> best_value_;
  double achieved_error_;
};

/// Iterative eigensolver hit its iteration cap.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string &what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

} // namespace wgcorr
