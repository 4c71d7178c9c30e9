#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace sacon {

/**
 * @brief Closed interval of doubles with outward rounding.
 *
 * Every arithmetic result is widened by one ulp on each side, which encloses
 * the exact result under IEEE round-to-nearest. Empty intervals are not
 * represented; intersect() reports emptiness through its return flag.
 */
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static Interval hull(double a, double b) { return {std::min(a, b), std::max(a, b)}; }
  static Interval entire() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  double mid() const { return 0.5 * lo + 0.5 * hi; }
  double width() const { return hi - lo; }
  double rad() const { return 0.5 * (hi - lo); }
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  double mig() const {
    if (lo <= 0.0 && hi >= 0.0) return 0.0;
    return std::min(std::fabs(lo), std::fabs(hi));
  }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && hi >= 0.0; }
  bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
  bool interior_of(const Interval& o) const { return o.lo < lo && hi < o.hi; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

namespace detail {
inline double down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
inline double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
  return {detail::down(a.lo + b.lo), detail::up(a.hi + b.hi)};
}
inline Interval operator-(const Interval& a, const Interval& b) {
  return {detail::down(a.lo - b.hi), detail::up(a.hi - b.lo)};
}
inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator*(const Interval& a, const Interval& b) {
  if (a.lo == a.hi && b.lo == b.hi) {
    const double p = a.lo * b.lo;
    return {detail::down(p), detail::up(p)};
  }
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  double lo = std::min({p1, p2, p3, p4});
  double hi = std::max({p1, p2, p3, p4});
  // 0 * inf yields NaN; treat it as 0 which is the correct limit for closed bounds
  if (std::isnan(lo) || std::isnan(hi)) return Interval::entire();
  return {detail::down(lo), detail::up(hi)};
}

/// Division; the divisor must exclude zero, otherwise the entire line is returned.
inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) return Interval::entire();
  const double q1 = a.lo / b.lo, q2 = a.lo / b.hi, q3 = a.hi / b.lo, q4 = a.hi / b.hi;
  return {detail::down(std::min({q1, q2, q3, q4})), detail::up(std::max({q1, q2, q3, q4}))};
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

inline Interval sqr(const Interval& a) {
  const double l = a.mig(), h = a.mag();
  return {std::max(0.0, detail::down(l * l)), detail::up(h * h)};
}

namespace detail {
// |v|^k rounded in the requested direction; v >= 0.
inline double pow_dir(double v, int k, bool upward) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = upward ? up(r * v) : std::max(0.0, down(r * v));
  return r;
}
}  // namespace detail

/// Tight enclosure of x^k for k >= 0, exact in the monotone pieces.
inline Interval pow(const Interval& a, int k) {
  if (k == 0) return {1.0, 1.0};
  if (k == 1) return a;
  if (a.lo >= 0.0) return {detail::pow_dir(a.lo, k, false), detail::pow_dir(a.hi, k, true)};
  if (a.hi <= 0.0) {
    if (k % 2 == 0) return {detail::pow_dir(-a.hi, k, false), detail::pow_dir(-a.lo, k, true)};
    return {-detail::pow_dir(-a.lo, k, true), -detail::pow_dir(-a.hi, k, false)};
  }
  if (k % 2 == 0) return {0.0, detail::pow_dir(a.mag(), k, true)};
  return {-detail::pow_dir(-a.lo, k, true), detail::pow_dir(a.hi, k, true)};
}

inline bool intersect(const Interval& a, const Interval& b, Interval& out) {
  const double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
  if (lo > hi) return false;
  out = {lo, hi};
  return true;
}

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo << ", " << x.hi << ']';
}

/// Axis-aligned box; one interval per coordinate.
using Box = std::vector<Interval>;

inline std::vector<double> midpoint(std::span<const Interval> b) {
  std::vector<double> m(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) m[i] = b[i].mid();
  return m;
}

inline double max_width(std::span<const Interval> b) {
  double w = 0.0;
  for (const auto& x : b) w = std::max(w, x.width());
  return w;
}

inline bool box_subset(std::span<const Interval> a, std::span<const Interval> b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].subset_of(b[i])) return false;
  return true;
}

inline bool box_contains(std::span<const Interval> b, std::span<const double> x) {
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!b[i].contains(x[i])) return false;
  return true;
}

inline Box box_around(std::span<const double> center, double radius) {
  Box b(center.size());
  for (std::size_t i = 0; i < center.size(); ++i)
    b[i] = {detail::down(center[i] - radius), detail::up(center[i] + radius)};
  return b;
}

}  // namespace sacon
