#include "wgcorr/wavepackets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wgcorr/quadrature.hpp"

namespace wgcorr {

namespace {

using cplx = std::complex<double>;

// Half-width, in units of the Gaussian width, where the envelope hits kEnvelopeCutoff.
double gaussian_reach() { return std::sqrt(2.0 * std::log(1.0 / kEnvelopeCutoff)); }

cplx eval_gaussian(const GaussianPacket &g, double k) {
  const double d = (k - g.center) / g.width;
  return g.amplitude * std::exp(-0.5 * d * d);
}

cplx eval_table(const TablePacket &t, double k) {
  if (t.k.empty() || k < t.k.front() || k > t.k.back())
    return 0.0;
  const auto it = std::upper_bound(t.k.begin(), t.k.end(), k);
  if (it == t.k.end())
    return t.values.back();
  const std::size_t hi = static_cast<std::size_t>(it - t.k.begin());
  const std::size_t lo = hi - 1;
  const double s = (k - t.k[lo]) / (t.k[hi] - t.k[lo]);
  return (1.0 - s) * t.values[lo] + s * t.values[hi];
}

void check_gaussian(const GaussianPacket &g, const char *who) {
  if (!(g.width > 0.0) || !std::isfinite(g.width) || !std::isfinite(g.center))
    throw std::invalid_argument(std::string(who) + ": width must be positive and finite");
}

// 1/sqrt(-curvature of ln|h|) by central differences.
template <class F> double curvature_width(F &&h, double k, double step) {
  const double a = std::abs(h(k - step)), b = std::abs(h(k)), c = std::abs(h(k + step));
  if (a == 0.0 || b == 0.0 || c == 0.0)
    return 0.0;
  const double curv = (std::log(a) - 2.0 * std::log(b) + std::log(c)) / (step * step);
  if (!(curv < 0.0))
    return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(-curv);
}

} // namespace

WavePacketSpec WavePacketSpec::gaussian(double center, double width, std::complex<double> amplitude,
                                        std::optional<Interval> support) {
  GaussianPacket g{center, width, amplitude};
  check_gaussian(g, "gaussian packet");
  if (support && support->hi < support->lo)
    throw std::invalid_argument("gaussian packet: support interval is reversed");
  return WavePacketSpec(g, support);
}

WavePacketSpec WavePacketSpec::table(std::vector<double> k, std::vector<std::complex<double>> values,
                                     std::optional<Interval> support) {
  if (k.size() < 2 || k.size() != values.size())
    throw std::invalid_argument("table packet: need at least two (k, value) samples");
  for (std::size_t i = 1; i < k.size(); ++i)
    if (!(k[i] > k[i - 1]))
      throw std::invalid_argument("table packet: k-grid must be strictly increasing");
  return WavePacketSpec(TablePacket{std::move(k), std::move(values)}, support);
}

std::complex<double> WavePacketSpec::operator()(double k) const {
  if (support_ && !support_->contains(k))
    return 0.0;
  const cplx raw = std::visit(
      [k](const auto &f) -> cplx {
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GaussianPacket>)
          return eval_gaussian(f, k);
        else
          return eval_table(f, k);
      },
      family_);
  return scale_ * raw;
}

Interval WavePacketSpec::domain() const {
  Interval d = std::visit(
      [](const auto &f) -> Interval {
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GaussianPacket>) {
          const double r = gaussian_reach() * f.width;
          return {f.center - r, f.center + r};
        } else {
          double peak = 0.0;
          for (const auto &v : f.values)
            peak = std::max(peak, std::abs(v));
          std::size_t first = f.k.size(), last = 0;
          for (std::size_t i = 0; i < f.k.size(); ++i)
            if (std::abs(f.values[i]) > kEnvelopeCutoff * peak) {
              first = std::min(first, i);
              last = i;
            }
          if (first == f.k.size())
            return {f.k.front(), f.k.back()};
          return {f.k[first == 0 ? 0 : first - 1], f.k[std::min(last + 1, f.k.size() - 1)]};
        }
      },
      family_);
  if (support_)
    d = d.intersect(*support_);
  return d;
}

WavePacketSpec WavePacketSpec::scaled(std::complex<double> factor) const {
  WavePacketSpec out = *this;
  out.scale_ *= factor;
  return out;
}

double WavePacketSpec::effective_width(double k) const {
  const double step = 1e-4 * std::max(domain().width(), 1e-8);
  return curvature_width([this](double x) { return (*this)(x); }, k, step);
}

double WavePacketSpec::max_abs(Interval iv) const {
  if (support_) {
    iv = iv.intersect(*support_);
    if (iv.hi < iv.lo || (iv.hi == iv.lo && !support_->contains(iv.lo)))
      return 0.0;
  }
  const double raw = std::visit(
      [&iv](const auto &f) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(f)>, GaussianPacket>) {
          const double dist = f.center < iv.lo ? iv.lo - f.center : (f.center > iv.hi ? f.center - iv.hi : 0.0);
          const double d = dist / f.width;
          return std::abs(f.amplitude) * std::exp(-0.5 * d * d);
        } else {
          double m = std::max(std::abs(eval_table(f, iv.lo)), std::abs(eval_table(f, iv.hi)));
          for (std::size_t i = 0; i < f.k.size(); ++i)
            if (iv.contains(f.k[i]))
              m = std::max(m, std::abs(f.values[i]));
          return m;
        }
      },
      family_);
  return std::abs(scale_) * raw;
}

std::complex<double> eval_g(const WavePacketSpec &w, double k) { return w(k); }

double norm_squared(const WavePacketSpec &w, std::optional<Interval> domain) {
  OscIntegralProblem p;
  p.envelope = [&w](double k) { return cplx(std::norm(w(k)), 0.0); };
  p.domain = domain.value_or(w.domain());
  p.rel_tol = 1e-13;
  return osc_integrate_1d(p).value.real();
}

WavePacketSpec normalize(const WavePacketSpec &w, std::optional<Interval> domain) {
  const double n2 = norm_squared(w, domain);
  if (!(n2 > 0.0))
    throw std::invalid_argument("normalize: wave packet has zero norm");
  return w.scaled(1.0 / std::sqrt(n2));
}

WavePacketSpec read_packet_table(std::istream &in, std::optional<Interval> support) {
  std::vector<double> ks;
  std::vector<cplx> vs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#')
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double k = 0.0, re = 0.0, im = 0.0;
    if (!(ls >> k >> re >> im)) {
      if (ks.empty() && lineno == 1)
        continue; // header
      throw std::invalid_argument("packet table line " + std::to_string(lineno) +
                                  ": expected 'k,re,im'");
    }
    ks.push_back(k);
    vs.emplace_back(re, im);
  }
  return WavePacketSpec::table(std::move(ks), std::move(vs), support);
}

WavePacketSpec load_packet_table_csv(const std::string &path, std::optional<Interval> support) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("packet table: cannot open " + path);
  return read_packet_table(in, support);
}

BiphotonSpec::BiphotonSpec(Family f) : family_(std::move(f)) {
  constexpr int samples = 257;
  const Interval dom = domain();
  const double step = dom.width() / (samples - 1);
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j <= i; ++j)
      peak_ = std::max(peak_, std::abs((*this)(dom.lo + i * step, dom.lo + j * step)));
}

BiphotonSpec BiphotonSpec::separable_symmetrized(WavePacketSpec g1, WavePacketSpec g2) {
  return BiphotonSpec(SeparableSymmetrized{std::move(g1), std::move(g2)});
}

BiphotonSpec BiphotonSpec::gaussian_correlated(double pump_center, double pump_width,
                                               double relative_width) {
  if (!(pump_width > 0.0) || !(relative_width > 0.0) || !std::isfinite(pump_center))
    throw std::invalid_argument("gaussian_correlated: widths must be positive");
  return BiphotonSpec(GaussianCorrelated{pump_center, pump_width, relative_width});
}

BiphotonSpec BiphotonSpec::yls(GaussianPacket pump, double pump_scale) {
  check_gaussian(pump, "yls pump");
  if (!(pump_scale > 0.0) || !std::isfinite(pump_scale))
    throw std::invalid_argument("yls: pump scale must be positive");
  return BiphotonSpec(YlsBiphoton{pump, pump_scale});
}

std::complex<double> BiphotonSpec::operator()(double k1, double k2) const {
  const cplx raw = std::visit(
      [k1, k2](const auto &f) -> cplx {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SeparableSymmetrized>) {
          return 0.5 * (f.g1(k1) * f.g2(k2) + f.g1(k2) * f.g2(k1));
        } else if constexpr (std::is_same_v<T, GaussianCorrelated>) {
          const double s = (k1 + k2 - f.pump_center) / f.pump_width;
          const double d = (k1 - k2) / f.relative_width;
          return std::exp(-0.5 * (s * s + d * d));
        } else {
          if (!(k1 > 0.0) || !(k2 > 0.0))
            return 0.0;
          const double sum = k1 + k2;
          const cplx pref(0.0, 1.0 / (f.pump_scale * f.pump_scale));
          return pref * eval_gaussian(f.pump, sum) * std::sqrt(6.0 * (k1 * k2) * sum);
        }
      },
      family_);
  return scale_ * raw;
}

Interval BiphotonSpec::domain() const {
  return std::visit(
      [](const auto &f) -> Interval {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SeparableSymmetrized>) {
          return f.g1.domain().hull(f.g2.domain());
        } else if constexpr (std::is_same_v<T, GaussianCorrelated>) {
          // max over k2 of the envelope at fixed k1 is a Gaussian in 2 k1 - center
          // of variance pump_width^2 + relative_width^2.
          const double s = std::sqrt(f.pump_width * f.pump_width + f.relative_width * f.relative_width);
          const double r = 0.5 * gaussian_reach() * s;
          return {0.5 * f.pump_center - r, 0.5 * f.pump_center + r};
        } else {
          const double top = f.pump.center + gaussian_reach() * f.pump.width;
          return {0.0, std::max(0.0, top)};
        }
      },
      family_);
}

BiphotonSpec BiphotonSpec::scaled(std::complex<double> factor) const {
  BiphotonSpec out = *this;
  out.scale_ *= factor;
  out.peak_ *= std::abs(factor);
  return out;
}

namespace {

// Distance from x to the interval (0 inside).
double gap(double x, double lo, double hi) { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); }

} // namespace

JointIntegrand BiphotonSpec::integrand() const {
  JointIntegrand j;
  j.value = [self = *this](double k1, double k2) { return self(k1, k2); };
  j.negligible = kEnvelopeCutoff * peak_;
  const cplx scale = scale_;
  std::visit(
      [&](const auto &f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SeparableSymmetrized>) {
          j.block = [f, scale](std::span<const double> k1, std::span<const double> k2, std::span<cplx> out) {
            std::vector<cplx> a1(k1.size()), a2(k1.size()), b1(k2.size()), b2(k2.size());
            for (std::size_t i = 0; i < k1.size(); ++i) {
              a1[i] = f.g1(k1[i]);
              a2[i] = f.g2(k1[i]);
            }
            for (std::size_t q = 0; q < k2.size(); ++q) {
              b1[q] = f.g1(k2[q]);
              b2[q] = f.g2(k2[q]);
            }
            for (std::size_t i = 0; i < k1.size(); ++i)
              for (std::size_t q = 0; q < k2.size(); ++q)
                out[i * k2.size() + q] = scale * (0.5 * (a1[i] * b2[q] + b1[q] * a2[i]));
          };
          j.cell_bound = [f, scale](Interval i1, Interval i2) {
            return std::abs(scale) * 0.5 * (f.g1.max_abs(i1) * f.g2.max_abs(i2) + f.g1.max_abs(i2) * f.g2.max_abs(i1));
          };
        } else if constexpr (std::is_same_v<T, GaussianCorrelated>) {
          j.block = [f, scale](std::span<const double> k1, std::span<const double> k2, std::span<cplx> out) {
            for (std::size_t i = 0; i < k1.size(); ++i)
              for (std::size_t q = 0; q < k2.size(); ++q) {
                const double s = (k1[i] + k2[q] - f.pump_center) / f.pump_width;
                const double d = (k1[i] - k2[q]) / f.relative_width;
                out[i * k2.size() + q] = scale * cplx(std::exp(-0.5 * (s * s + d * d)));
              }
          };
          j.cell_bound = [f, scale](Interval i1, Interval i2) {
            const double s = gap(f.pump_center, i1.lo + i2.lo, i1.hi + i2.hi) / f.pump_width;
            const double d = gap(0.0, i1.lo - i2.hi, i1.hi - i2.lo) / f.relative_width;
            return std::abs(scale) * std::exp(-0.5 * (s * s + d * d));
          };
        } else {
          j.block = [f, scale](std::span<const double> k1, std::span<const double> k2, std::span<cplx> out) {
            const cplx c = scale * cplx(0.0, 1.0 / (f.pump_scale * f.pump_scale)) * f.pump.amplitude;
            for (std::size_t i = 0; i < k1.size(); ++i)
              for (std::size_t q = 0; q < k2.size(); ++q) {
                const double a = k1[i], b = k2[q];
                double v = 0.0;
                if (a > 0.0 && b > 0.0) {
                  const double sum = a + b;
                  const double d = (sum - f.pump.center) / f.pump.width;
                  v = std::exp(-0.5 * d * d) * std::sqrt(6.0 * (a * b) * sum);
                }
                out[i * k2.size() + q] = c * v;
              }
          };
          j.cell_bound = [f, scale](Interval i1, Interval i2) {
            if (!(i1.hi > 0.0) || !(i2.hi > 0.0))
              return 0.0;
            const double lo = std::max(i1.lo, 0.0) + std::max(i2.lo, 0.0), hi = i1.hi + i2.hi;
            const double d = gap(f.pump.center, lo, hi) / f.pump.width;
            return std::abs(scale) * std::abs(f.pump.amplitude) * std::exp(-0.5 * d * d) *
                   std::sqrt(6.0 * i1.hi * i2.hi * hi) / (f.pump_scale * f.pump_scale);
          };
        }
      },
      family_);
  return j;
}

std::pair<double, double> BiphotonSpec::effective_widths(double k1, double k2) const {
  const double step = 1e-4 * std::max(domain().width(), 1e-8);
  return {curvature_width([&](double x) { return (*this)(x, k2); }, k1, step),
          curvature_width([&](double x) { return (*this)(k1, x); }, k2, step)};
}

std::complex<double> eval_f(const BiphotonSpec &b, double k1, double k2) { return b(k1, k2); }

double norm_squared(const BiphotonSpec &b, std::optional<Interval> domain, double rel_tol) {
  OscIntegralProblem p;
  p.envelope = [](double) { return cplx(1.0, 0.0); };
  p.domain = domain.value_or(b.domain());
  p.rel_tol = rel_tol;
  const auto r = osc_integrate_2d(p, p, [&b](double k1, double k2) { return cplx(std::norm(b(k1, k2)), 0.0); });
  return r.value.real();
}

BiphotonSpec normalize(const BiphotonSpec &b, std::optional<Interval> domain) {
  const double n2 = norm_squared(b, domain);
  if (!(n2 > 0.0))
    throw std::invalid_argument("normalize: biphoton amplitude has zero norm");
  return b.scaled(1.0 / std::sqrt(n2));
}

} // namespace wgcorr
