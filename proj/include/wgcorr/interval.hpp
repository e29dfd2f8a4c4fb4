#pragma once

#include <algorithm>

namespace wgcorr {

/// Closed interval [lo, hi] of momenta.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool empty() const { return !(hi > lo); }

  Interval intersect(const Interval &o) const {
    return {std::max(lo, o.lo), std::max(std::max(lo, o.lo), std::min(hi, o.hi))};
  }
  Interval hull(const Interval &o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
};

} // namespace wgcorr
