#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wgcorr/interval.hpp"
#include "wgcorr/quadrature.hpp"

namespace wgcorr {

/// Envelopes are truncated where they fall below this fraction of their peak.
inline constexpr double kEnvelopeCutoff = 1e-12;

/// amplitude * exp(-(k - center)^2 / (2 width^2))
struct GaussianPacket {
  double center = 0.0;
  double width = 1.0;
  std::complex<double> amplitude{1.0, 0.0};
};

/// Linear interpolation of complex samples on a strictly increasing k-grid;
/// zero outside the grid.
struct TablePacket {
  std::vector<double> k;
  std::vector<std::complex<double>> values;
};

/// Single-photon momentum amplitude g(k).
class WavePacketSpec {
public:
  using Family = std::variant<GaussianPacket, TablePacket>;

  static WavePacketSpec gaussian(double center, double width,
                                 std::complex<double> amplitude = 1.0,
                                 std::optional<Interval> support = std::nullopt);
  static WavePacketSpec table(std::vector<double> k, std::vector<std::complex<double>> values,
                              std::optional<Interval> support = std::nullopt);

  std::complex<double> operator()(double k) const;

  /// Momentum interval outside which |g| < kEnvelopeCutoff * peak (clipped to
  /// the declared support).
  Interval domain() const;

  const Family &family() const { return family_; }
  const std::optional<Interval> &support() const { return support_; }
  std::complex<double> scale() const { return scale_; }

  WavePacketSpec scaled(std::complex<double> factor) const;

  /// 1 / sqrt(-d^2 ln|g| / dk^2) at k; +inf where ln|g| is not concave, 0 where g vanishes.
  double effective_width(double k) const;

  /// Upper bound of |g| on the interval.
  double max_abs(Interval iv) const;

private:
  WavePacketSpec(Family f, std::optional<Interval> support)
      : family_(std::move(f)), support_(support) {}

  Family family_;
  std::optional<Interval> support_;
  std::complex<double> scale_{1.0, 0.0};
};

std::complex<double> eval_g(const WavePacketSpec &w, double k);

/// int |g|^2 dk over `domain` (defaults to w.domain()).
double norm_squared(const WavePacketSpec &w, std::optional<Interval> domain = std::nullopt);

/// Rescaled copy with unit L2 norm; throws std::invalid_argument on zero norm.
WavePacketSpec normalize(const WavePacketSpec &w, std::optional<Interval> domain = std::nullopt);

/// Rows `k,re,im`; a non-numeric first row is taken as a header.
WavePacketSpec read_packet_table(std::istream &in, std::optional<Interval> support = std::nullopt);
WavePacketSpec load_packet_table_csv(const std::string &path,
                                     std::optional<Interval> support = std::nullopt);

/// (g1(k1) g2(k2) + g1(k2) g2(k1)) / 2
struct SeparableSymmetrized {
  WavePacketSpec g1;
  WavePacketSpec g2;
};

/// exp(-(k1 + k2 - pump_center)^2 / (2 pump_width^2)) exp(-(k1 - k2)^2 / (2 relative_width^2))
struct GaussianCorrelated {
  double pump_center = 0.0;
  double pump_width = 1.0;
  double relative_width = 1.0;
};

/// (i / pump_scale^2) f_P(k1 + k2) sqrt(6 k1 k2 (k1 + k2)) on k1, k2 > 0, zero
/// elsewhere; f_P is a Gaussian pump spectrum.
struct YlsBiphoton {
  GaussianPacket pump;
  double pump_scale = 1.0;
};

/// Exchange-symmetric two-photon momentum amplitude f(k1, k2).
class BiphotonSpec {
public:
  using Family = std::variant<SeparableSymmetrized, GaussianCorrelated, YlsBiphoton>;

  static BiphotonSpec separable_symmetrized(WavePacketSpec g1, WavePacketSpec g2);
  static BiphotonSpec gaussian_correlated(double pump_center, double pump_width,
                                          double relative_width);
  static BiphotonSpec yls(GaussianPacket pump, double pump_scale);

  /// Bitwise identical under k1 <-> k2 for every family.
  std::complex<double> operator()(double k1, double k2) const;

  /// Per-axis truncated momentum interval (identical on both axes).
  Interval domain() const;

  const Family &family() const { return family_; }
  std::complex<double> scale() const { return scale_; }
  BiphotonSpec scaled(std::complex<double> factor) const;

  /// Conditional widths 1/sqrt(-d^2 ln|f|/dk_i^2) at (k1, k2) along each axis.
  std::pair<double, double> effective_widths(double k1, double k2) const;

  /// max |f| sampled over domain x domain.
  double peak() const { return peak_; }

  /// f as a 2-D quadrature integrand: block evaluation with the same
  /// arithmetic as operator(), and a cell bound that drops cells below
  /// kEnvelopeCutoff of the peak.
  JointIntegrand integrand() const;

private:
  explicit BiphotonSpec(Family f);

  Family family_;
  std::complex<double> scale_{1.0, 0.0};
  double peak_ = 0.0;
};

std::complex<double> eval_f(const BiphotonSpec &b, double k1, double k2);

/// int int |f|^2 dk1 dk2 over domain x domain.
double norm_squared(const BiphotonSpec &b, std::optional<Interval> domain = std::nullopt,
                    double rel_tol = 1e-12);

/// Rescaled copy with unit L2 norm on domain x domain; throws
/// std::invalid_argument on zero norm.
BiphotonSpec normalize(const BiphotonSpec &b, std::optional<Interval> domain = std::nullopt);

} // namespace wgcorr
