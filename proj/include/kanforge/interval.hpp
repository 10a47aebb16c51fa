#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kanforge {

/// Closed interval [lo, hi] with lo <= hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw std::invalid_argument("interval requires lo <= hi");
  }

  double width() const { return hi - lo; }
  /// sup |t| over the interval.
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  bool degenerate() const { return !(lo < hi); }
  bool contains(double t) const { return lo <= t && t <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline const Interval kUnitInterval{0.0, 1.0};

}  // namespace kanforge
