#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sacon/eigen.hpp"
#include "sacon/routing.hpp"
#include "sacon/solve.hpp"

namespace sacon {

struct TracerConfig {
  /// Start offset from a routing point, as a fraction of its isolation box radius.
  double initial_offset_fraction = 1e-6;
  /// Lower bound on the predicted relative rise of g over the start offset.
  double min_relative_rise = 1e-9;
  /// A trajectory within this many start offsets of a non-maximum routing point may be captured by it.
  double capture_factor = 10.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  std::size_t max_steps = 100'000;
  /// Trajectories leaving the cube [-guard_radius, guard_radius]^n are abandoned.
  double guard_radius = std::numeric_limits<double>::infinity();
};

enum class TraceStatus { captured, max_steps, left_region, ambiguous_capture };

inline const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::captured: return "captured";
    case TraceStatus::max_steps: return "max_steps";
    case TraceStatus::left_region: return "left_region";
    case TraceStatus::ambiguous_capture: return "ambiguous_capture";
  }
  return "?";
}

struct TraceSample {
  std::vector<double> point;
  double g = 0.0;
  double grad_norm = 0.0;
};

struct PathTrace {
  std::vector<double> start;
  std::vector<double> init_dir;
  std::vector<TraceSample> samples;
  std::size_t terminal_id = 0;
  TraceStatus status = TraceStatus::max_steps;
  std::size_t rejected_steps = 0;
  /// Steps proposed with an acceptable error estimate but no increase of g.
  std::size_t monotone_rejections = 0;
  std::string detail;
};

class TraceFailure : public std::runtime_error {
 public:
  TraceFailure(const std::string& what, PathTrace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const PathTrace& trace() const { return trace_; }

 private:
  PathTrace trace_;
};

/**
 * Trap around a local maximum: a box where g is strictly concave and on
 * whose boundary g stays below `level`. An ascent path at a point of the
 * box with g above level can never cross the boundary, so it converges to
 * the maximum.
 */
struct CaptureZone {
  std::size_t id = 0;
  Box box;
  double level = 0.0;
};

namespace detail {

/**
 * Lower bound sigma > 0 with U^(gamma+2) Hess g <= -sigma I on B, or 0.
 * Gershgorin is applied to V^T H V with V the approximate eigenvectors of
 * the midpoint matrix, so anisotropic Hessians are not lost to coupling
 * terms. For y = V z: y^T H y <= -s |z|^2 and |y|^2 <= |V|_2^2 |z|^2, with
 * |V|_2^2 <= 1 + |V^T V - I|_F.
 */
inline double concavity_margin(const RoutingFunction& rf, const Box& B) {
  const std::size_t n = rf.n();
  const auto H = scaled_hessian_enclosure(rf, B);
  Eigen::MatrixXd Hm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!H[i * n + j].finite()) return 0.0;
      Hm(i, j) = H[i * n + j].mid();
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hm + Hm.transpose()));
  if (es.info() != Eigen::Success) return 0.0;
  const Eigen::MatrixXd V = es.eigenvectors();

  std::vector<Interval> HV(n * n, Interval(0.0)), C(n * n, Interval(0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) HV[i * n + j] += H[i * n + k] * Interval(V(k, j));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) C[i * n + j] += Interval(V(k, i)) * HV[k * n + j];

  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Interval row = C[i * n + i];
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row += Interval(std::max(C[i * n + j].mag(), C[j * n + i].mag()));
    s = std::min(s, -row.hi);
  }
  if (!(s > 0.0)) return 0.0;

  Interval dev(0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Interval e(i == j ? -1.0 : 0.0);
      for (std::size_t k = 0; k < n; ++k) e += Interval(V(k, i)) * Interval(V(k, j));
      dev += sqr(e);
    }
  const double vnorm2 = detail::up(1.0 + detail::up(std::sqrt(dev.hi)));
  const double sigma = (Interval(s) / Interval(vnorm2)).lo;
  return sigma > 0.0 ? sigma : 0.0;
}

// Enclosures of g and |grad g| at a point, rigorous against rounding.
inline void g_and_slope(const RoutingFunction& rf, std::span<const double> x, Interval& g, double& slope) {
  const std::size_t n = x.size();
  Box b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = Interval(x[i]);
  PowerTable<Interval> pw(std::span<const Interval>(b), rf.max_degree());
  Interval f;
  if (!intersect(rf.xf().eval(x), rf.cf()(pw), f)) f = rf.xf().eval(x);
  const Interval U = rf.cU()(pw);
  g = sqr(f) / pow(U, rf.gamma());
  const Interval P = f / pow(U, rf.gamma() + 1);
  Interval s(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Interval q;
    if (!intersect(rf.xF(i).eval(x), rf.cF(i)(pw), q)) q = rf.xF(i).eval(x);
    s += sqr(P * q);
  }
  slope = detail::up(std::sqrt(s.hi));
}

}  // namespace detail

/**
 * Builds the trap for one maximum. On a cube B = x + [-r, r]^n where g is
 * certified strictly concave with curvature at least mu,
 *   g(y) <= g(x) + |grad g(x)| |y - x| - mu |y - x|^2 / 2,
 * and |y - x| >= r on the boundary. Radii are tried from large to small.
 */
inline std::optional<CaptureZone> capture_zone(const RoutingFunction& rf, const RoutingPoint& rp) {
  const auto& x = rp.location;
  const std::size_t n = x.size();
  const double scale = 1.0 + detail::norm2(x);
  Interval g0;
  double slope = 0.0;
  detail::g_and_slope(rf, x, g0, slope);
  for (double r = 0.5 * scale; r > 1e-12 * scale; r *= 0.5) {
    const Box B = box_around(x, r);
    const double sigma = detail::concavity_margin(rf, B);
    if (sigma <= 0.0) continue;
    const Interval U = rf.cU().eval(std::span<const Interval>(B));
    const double mu = (Interval(sigma) / pow(U, rf.gamma() + 2)).lo;
    const double dmax = detail::up(std::sqrt(static_cast<double>(n)) * r);
    // the bound is concave in |y - x|; its maximum over [r, dmax] is at an end or the vertex
    auto bound = [&](double d) { return (g0 + Interval(slope) * Interval(d) - Interval(0.5 * mu) * sqr(Interval(d))).hi; };
    double level = std::max(bound(r), bound(dmax));
    const double vertex = mu > 0.0 ? slope / mu : 0.0;
    if (vertex > r && vertex < dmax) level = std::max(level, bound(vertex));
    if (level < g0.lo) return CaptureZone{rp.id, B, level};
  }
  return std::nullopt;
}

inline std::vector<CaptureZone> capture_zones(const RoutingFunction& rf, const std::vector<RoutingPoint>& R) {
  std::vector<CaptureZone> zones;
  for (const auto& rp : R)
    if (rp.morse_index == static_cast<int>(rf.n()))
      if (auto z = capture_zone(rf, rp)) zones.push_back(std::move(*z));
  return zones;
}

namespace detail {

// Unit ascent direction sign(f) F / |F|; same orbits as grad g without its scale.
inline bool ascent_direction(const RoutingFunction& rf, std::span<const double> x, std::vector<double>& d,
                             double* g = nullptr, double* grad_norm = nullptr) {
  const auto parts = parts_at(rf, x);
  const double nq = norm2(parts.q);
  d.resize(rf.n());
  if (g) *g = parts.f * parts.f * std::pow(parts.U, -rf.gamma());
  if (grad_norm) *grad_norm = std::fabs(parts.f) * std::pow(parts.U, -(rf.gamma() + 1)) * nq;
  if (!(nq > 0.0) || !std::isfinite(nq)) return false;
  const double s = (parts.f >= 0 ? 1.0 : -1.0) / nq;
  for (std::size_t i = 0; i < rf.n(); ++i) d[i] = s * parts.q[i];
  return true;
}

// Index of the routing point whose uniqueness box Newton reaches from x.
inline std::optional<std::size_t> newton_target(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                                                std::span<const double> x, bool& converged) {
  converged = false;
  auto z = newton(rf, std::vector<double>(x.begin(), x.end()));
  if (!z) return std::nullopt;
  converged = true;
  for (const auto& rp : R)
    if (box_contains(rp.unique_box, *z)) return rp.id;
  return std::nullopt;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 6> dp_c{1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double dp_a[6][6] = {
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr std::array<double, 7> dp_b{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> dp_e{71.0 / 57600,     0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                     22.0 / 525,       -1.0 / 40};

}  // namespace detail

/**
 * Offset from a routing point along v: a fraction of its isolation box
 * radius, raised when needed so that the quadratic model predicts a
 * relative rise of g of at least min_relative_rise, which keeps the first
 * steps above rounding noise.
 */
inline double start_offset(const RoutingPoint& rp, std::span<const double> v, const TracerConfig& cfg) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& iv : rp.unique_box) w = std::min(w, iv.rad());
  if (!std::isfinite(w) || w <= 0.0) w = rp.radius;
  double eps = std::max(cfg.initial_offset_fraction * w, 1e-9 * (1.0 + detail::norm2(rp.location)));
  double curv = 0.0;  // v^T Hess g v
  for (const auto& p : rp.eigenpairs) {
    double c = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) c += p.vector[i] * v[i];
    curv += p.value * c * c;
  }
  if (curv > 0.0) eps = std::max(eps, std::sqrt(2.0 * cfg.min_relative_rise * rp.g_value / curv));
  return eps;
}

/**
 * Follows the ascent path of g from p. When p is a routing point the path
 * starts at p + eps v; otherwise at p itself. The path is integrated in arc
 * length with an embedded Dormand-Prince pair; a step is accepted only when
 * its error estimate passes and g increases. Capture happens in a maximum's
 * trap, or near another routing point that Newton on F confirms.
 */
inline PathTrace trace(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                       const std::vector<CaptureZone>& zones, std::span<const double> p, std::span<const double> v,
                       const TracerConfig& cfg = {}, std::optional<std::size_t> from_id = std::nullopt) {
  const std::size_t n = rf.n();
  PathTrace out;
  out.start.assign(p.begin(), p.end());
  out.init_dir.assign(v.begin(), v.end());
  std::vector<double> x(p.begin(), p.end());
  if (from_id) {
    const double eps = start_offset(R.at(*from_id), v, cfg);
    for (std::size_t i = 0; i < n; ++i) x[i] += eps * v[i];
  }

  std::vector<double> k[7], d, xs(n), xn(n);
  double g = 0.0, gn = 0.0;
  if (!detail::ascent_direction(rf, x, k[0], &g, &gn)) {
    out.status = TraceStatus::ambiguous_capture;
    out.detail = "gradient vanishes at the start point";
    return out;
  }
  out.samples.push_back({x, g, gn});

  std::vector<double> stall_radius(R.size());
  for (const auto& rp : R) {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& iv : rp.unique_box) w = std::min(w, iv.rad());
    stall_radius[rp.id] = cfg.capture_factor * std::max(cfg.initial_offset_fraction * w, 1e-9 * (1.0 + detail::norm2(rp.location)));
  }

  const double scale0 = 1.0 + detail::norm2(x);
  double h = 1e-4 * scale0;

  auto captured_at = [&](std::span<const double> y, double gy) -> std::optional<std::size_t> {
    for (const auto& z : zones)
      if (gy > z.level && box_contains(z.box, y)) return z.id;
    for (const auto& rp : R) {
      // an ascent path never returns to its start
      if (rp.morse_index == static_cast<int>(n) || gy >= rp.g_value || (from_id && rp.id == *from_id)) continue;
      if (detail::distance(y, rp.location) > stall_radius[rp.id]) continue;
      bool conv = false;
      if (auto t = detail::newton_target(rf, R, y, conv); t && *t == rp.id) return rp.id;
    }
    return std::nullopt;
  };

  if (auto id = captured_at(x, g)) {
    out.status = TraceStatus::captured;
    out.terminal_id = *id;
    return out;
  }

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    const double xscale = 1.0 + detail::norm2(x);
    if (h < 1e-15 * xscale) {
      bool conv = false;
      const auto t = detail::newton_target(rf, R, x, conv);
      if (t && t != from_id && detail::distance(x, R[*t].location) <= 1e-6 * (1.0 + detail::norm2(R[*t].location))) {
        out.status = TraceStatus::captured;
        out.terminal_id = *t;
        out.detail = "stalled at routing point";
      } else {
        out.status = TraceStatus::ambiguous_capture;
        out.detail = conv ? "stalled at a critical point outside the routing set" : "step size collapsed";
      }
      return out;
    }
    bool ok = true;
    for (std::size_t s = 1; s < 7 && ok; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < s; ++j) acc += detail::dp_a[s - 1][j] * k[j][i];
        xs[i] = x[i] + h * acc;
      }
      ok = detail::ascent_direction(rf, xs, k[s]);
    }
    if (!ok) {
      h *= 0.25;
      ++out.rejected_steps;
      continue;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0, e = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        acc += detail::dp_b[j] * k[j][i];
        e += detail::dp_e[j] * k[j][i];
      }
      xn[i] = x[i] + h * acc;
      const double tol = cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(x[i]), std::fabs(xn[i]));
      err = std::max(err, std::fabs(h * e) / tol);
    }
    if (!(err <= 1.0)) {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      ++out.rejected_steps;
      continue;
    }
    double g_new = 0.0, gn_new = 0.0;
    std::vector<double> dir;
    const bool dir_ok = detail::ascent_direction(rf, xn, dir, &g_new, &gn_new);
    if (!(g_new > g) || !dir_ok) {
      h *= 0.5;
      ++out.monotone_rejections;
      continue;
    }
    x = xn;
    g = g_new;
    k[0] = std::move(dir);
    out.samples.push_back({x, g, gn_new});
    h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h = std::min(h, 0.1 * xscale);

    for (std::size_t i = 0; i < n; ++i)
      if (std::fabs(x[i]) > cfg.guard_radius) {
        out.status = TraceStatus::left_region;
        out.detail = "trajectory left the guard region";
        return out;
      }
    if (auto id = captured_at(x, g)) {
      out.status = TraceStatus::captured;
      out.terminal_id = *id;
      return out;
    }
  }
  out.status = TraceStatus::max_steps;
  out.detail = "step limit reached";
  return out;
}

/// Terminal routing point of a captured trace; other outcomes throw TraceFailure.
inline std::size_t destination_index(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                                     const std::vector<CaptureZone>& zones, std::span<const double> p,
                                     std::span<const double> v, const TracerConfig& cfg = {},
                                     std::optional<std::size_t> from_id = std::nullopt) {
  PathTrace t = trace(rf, R, zones, p, v, cfg, from_id);
  if (t.status != TraceStatus::captured)
    throw TraceFailure(std::string("trace not captured: ") + to_string(t.status) + " (" + t.detail + ")",
                       std::move(t));
  return t.terminal_id;
}

}  // namespace sacon
