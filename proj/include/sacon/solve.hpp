#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "sacon/compiled.hpp"
#include "sacon/interval.hpp"
#include "sacon/poly.hpp"
#include "sacon/routing.hpp"

namespace sacon {

struct SolverConfig {
  /// Total boxes the subdivision may process before giving up.
  std::size_t box_budget = 2'000'000;
  /// Undecided boxes allowed in the queue at once; exceeding it signals a solution curve.
  std::size_t live_box_cap = 100'000;
  /// Stalled volume above this fraction of the region volume is read as positive-dimensional.
  double undecided_volume_fraction = 1e-9;
  /// Boxes narrower than this fraction of the region width stop splitting.
  double min_width_fraction = 1e-10;
  /// Boxes narrower than this fraction get a Newton + inflation attempt.
  double inflate_width_fraction = 1e-4;
  /// Undecided boxes narrower than this where f and grad f may both vanish are set aside as singular.
  double suspect_width_fraction = 1e-6;
  /// A cluster of such boxes wider than this fraction is not accepted as one singular point.
  double singular_cluster_fraction = 1e-2;
  int max_region_doublings = 20;
  /// Boxes processed per exclusion attempt at infinity.
  std::size_t exclusion_budget = 500'000;
  /// Directions with zeros at infinity are checked out to this multiple of rho.
  double far_radius_factor = 1e3;
  /// |f| at a root below this fraction of f's term scale is a candidate singular point.
  double singular_f_fraction = 1e-3;
};

struct SearchRegion {
  std::vector<double> center;
  std::vector<double> half_widths;
  int doublings = 0;
  /// No root lies in rho <= |x|_inf < certified_radius; infinite unless the
  /// system has real zeros at infinity and the check had to stop short.
  double certified_radius = std::numeric_limits<double>::infinity();

  Box box() const {
    Box b(center.size());
    for (std::size_t i = 0; i < center.size(); ++i)
      b[i] = {center[i] - half_widths[i], center[i] + half_widths[i]};
    return b;
  }
};

struct IsolatedRoot {
  /// Newton-refined location.
  std::vector<double> center;
  /// Half-width of the smallest certified box around center.
  double radius = 0.0;
  /// Euclidean norm of F at center.
  double q_residual = 0.0;
  bool is_singular_of_f = false;
  /// False only for singular-of-f clusters accepted without a contraction certificate.
  bool certified = true;
  /// Small box with a certified unique root.
  Box box;
  /// Largest box known to contain exactly this root.
  Box unique_box;
};

enum class SystemVerdict { nondegenerate, degenerate };
enum class DegeneracyCause { none, positive_dimensional, singular_hessian, unresolved_cluster };

inline const char* to_string(DegeneracyCause c) {
  switch (c) {
    case DegeneracyCause::none: return "none";
    case DegeneracyCause::positive_dimensional: return "positive_dimensional";
    case DegeneracyCause::singular_hessian: return "singular_hessian";
    case DegeneracyCause::unresolved_cluster: return "unresolved_cluster";
  }
  return "?";
}

struct DegeneracyReport {
  SystemVerdict verdict = SystemVerdict::nondegenerate;
  DegeneracyCause cause = DegeneracyCause::none;
  std::optional<Box> witness;
  std::string detail;

  bool ok() const { return verdict == SystemVerdict::nondegenerate; }

  static DegeneracyReport degenerate(DegeneracyCause c, std::string why, std::optional<Box> w = std::nullopt) {
    return {SystemVerdict::degenerate, c, std::move(w), std::move(why)};
  }
};

struct RegionResult {
  std::optional<SearchRegion> region;
  DegeneracyReport report;
};

struct SubdivisionStats {
  std::size_t processed = 0;
  std::size_t max_live = 0;
  double region_volume = 0.0;
  double excluded_volume = 0.0;   // interval or Krawczyk exclusion
  double certified_volume = 0.0;  // inside a certified uniqueness box
  double stalled_volume = 0.0;
};

struct IsolationResult {
  std::vector<IsolatedRoot> roots;
  DegeneracyReport report;
  SubdivisionStats stats;
};

namespace detail {

inline double box_volume(std::span<const Interval> b) {
  double v = 1.0;
  for (const auto& x : b) v *= x.width();
  return v;
}

/**
 * One Krawczyk step K(B) = m - Y F(m) + (I - Y J(B)) (B - m) with Y the
 * inverse of the midpoint Jacobian. Every root of F in B lies in K(B); if
 * K(B) sits in the interior of B it holds exactly one root.
 */
struct KrawczykStep {
  enum class Kind { excluded, unique, inconclusive } kind = Kind::inconclusive;
  Box contracted;
};

/// Fm encloses F at the midpoint of B.
inline KrawczykStep krawczyk(const RoutingFunction& rf, const Box& B, const std::vector<Interval>& JB,
                             const std::vector<Interval>& Fm) {
  const std::size_t n = rf.n();
  KrawczykStep out;
  out.contracted = B;
  const std::vector<double> m = midpoint(B);
  const Eigen::MatrixXd Jm = rf.jacobian_at(std::span<const double>(m));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Jm);
  if (!lu.isInvertible()) return out;
  const Eigen::MatrixXd Y = lu.inverse();
  if (!Y.allFinite()) return out;

  Box K(n);
  bool unique = true;
  for (std::size_t i = 0; i < n; ++i) {
    Interval yf(0.0);
    for (std::size_t k = 0; k < n; ++k) yf += Interval(Y(i, k)) * Fm[k];
    Interval acc = Interval(m[i]) - yf;
    for (std::size_t j = 0; j < n; ++j) {
      Interval mij = Interval(i == j ? 1.0 : 0.0);
      for (std::size_t k = 0; k < n; ++k) mij -= Interval(Y(i, k)) * JB[k * n + j];
      acc += mij * (B[j] - Interval(m[j]));
    }
    if (!acc.finite()) return out;
    K[i] = acc;
    Interval cut;
    if (!intersect(acc, B[i], cut)) {
      out.kind = KrawczykStep::Kind::excluded;
      return out;
    }
    out.contracted[i] = cut;
    if (!acc.interior_of(B[i])) unique = false;
  }
  if (unique) out.kind = KrawczykStep::Kind::unique;
  return out;
}

inline KrawczykStep krawczyk(const RoutingFunction& rf, const Box& B, const std::vector<Interval>& JB) {
  const std::vector<double> m = midpoint(B);
  Box mb(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) mb[i] = Interval(m[i]);
  return krawczyk(rf, B, JB, rf.family_at(std::span<const Interval>(mb)));
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct Enclosure {
  std::vector<Interval> F;   // F over the box
  std::vector<Interval> J;   // JF over the box, row-major
  std::vector<Interval> Fm;  // F at the midpoint
};

/**
 * Encloses F and JF over B. Natural interval evaluation is intersected with
 * second-order Taylor forms around m, whose overestimation shrinks with the
 * square of the box width instead of suffering from cancellation between
 * large terms. With `exact_center` the values at m are computed exactly,
 * which removes the rounding floor near high-order zeros.
 */
inline Enclosure enclose(const RoutingFunction& rf, const Box& B, std::span<const double> m, bool exact_center) {
  const std::size_t n = rf.n();
  Enclosure e;
  PowerTable<Interval> pw(std::span<const Interval>(B), rf.max_degree());
  Box mb(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    mb[i] = Interval(m[i]);
    d[i] = B[i] - mb[i];
  }
  PowerTable<Interval> pwm(std::span<const Interval>(mb), rf.max_degree());
  std::vector<Interval> H(n * n * n);
  for (std::size_t t = 0; t < H.size(); ++t) H[t] = rf.cH(t / (n * n), (t / n) % n, t % n)(pw);
  e.F.resize(n);
  e.J.resize(n * n);
  e.Fm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.Fm[i] = exact_center ? rf.xF(i).eval(m) : rf.cF(i)(pwm);
    Interval taylor = e.Fm[i];
    for (std::size_t j = 0; j < n; ++j) {
      const Interval Jm = exact_center ? rf.xJ(i, j).eval(m) : rf.cJ(i, j)(pwm);
      Interval jt = Jm;
      Interval quad(0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const Interval& h = H[(i * n + j) * n + k];
        jt += h * d[k];
        quad += (k == j ? Interval(0.5) * h * sqr(d[j]) : (k > j ? h * d[j] * d[k] : Interval(0.0)));
      }
      taylor += Jm * d[j] + quad;
      const Interval natural = rf.cJ(i, j)(pw);
      if (!intersect(natural, jt, e.J[i * n + j])) e.J[i * n + j] = natural;
    }
    const Interval natural = rf.cF(i)(pw);
    if (!intersect(natural, taylor, e.F[i])) e.F[i] = natural;
  }
  return e;
}

/// Plain Newton on F; returns the refined point when it converged.
inline std::optional<std::vector<double>> newton(const RoutingFunction& rf, std::vector<double> x, int max_iter = 40,
                                                 double* last_step = nullptr) {
  const std::size_t n = rf.n();
  std::vector<double> q;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    rf.family_at(x, q);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = q[i];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(rf.jacobian_at(std::span<const double>(x)));
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd d = lu.solve(rhs);
    if (!d.allFinite()) return std::nullopt;
    double xn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] -= d(i);
      xn = std::max(xn, std::fabs(x[i]));
    }
    const double step = d.cwiseAbs().maxCoeff();
    if (last_step) *last_step = step;
    if (step <= 4e-16 * (1.0 + xn)) return x;
    // stagnation at rounding level counts as converged
    if (step <= 1e-10 * (1.0 + xn) && step >= 0.5 * prev) return x;
    prev = step;
  }
  return std::nullopt;
}

/// True when neither f nor grad f can be shown nonzero on B, so B may hold a singular point of f.
inline bool singular_suspect(const RoutingFunction& rf, const Box& B) {
  const std::size_t n = rf.n();
  const std::vector<double> m = midpoint(B);
  PowerTable<Interval> pw(std::span<const Interval>(B), rf.max_degree());
  Box mb(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    mb[i] = Interval(m[i]);
    d[i] = B[i] - mb[i];
  }
  Interval ft = rf.xf().eval(m);
  for (std::size_t i = 0; i < n; ++i) {
    const Interval gm = rf.xgradf(i).eval(m);
    Interval gt = gm;
    ft += gm * d[i];
    for (std::size_t j = 0; j < n; ++j) {
      const Interval h = rf.cHf(i, j)(pw);
      gt += h * d[j];
      ft += (j == i ? Interval(0.5) * h * sqr(d[i]) : (j > i ? h * d[i] * d[j] : Interval(0.0)));
    }
    Interval g;
    if (!intersect(gt, rf.cgradf(i)(pw), g) || !g.contains_zero()) return false;
  }
  Interval fv;
  return intersect(ft, rf.cf()(pw), fv) && fv.contains_zero();
}

/**
 * Gauss-Newton on the overdetermined system {f, grad f} from x. Returns the
 * limit when it stays within `reach` of x and settles. Convergence is only
 * linear at degenerate singular points, hence the generous iteration count.
 */
inline std::optional<std::vector<double>> singular_point_near(const RoutingFunction& rf, std::vector<double> x,
                                                              double reach, int max_iter = 300) {
  const std::size_t n = rf.n();
  const std::vector<double> start = x;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd A(n + 1, n);
    Eigen::VectorXd r(n + 1);
    r(0) = rf.cf().eval(x);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      r(jj + 1) = rf.cgradf(j).eval(x);
      A(0, jj) = r(jj + 1);
      for (std::size_t i = 0; i < n; ++i) A(static_cast<Eigen::Index>(i) + 1, jj) = rf.cHf(i, j).eval(x);
    }
    const Eigen::VectorXd d = A.completeOrthogonalDecomposition().solve(r);
    if (!d.allFinite()) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) x[i] -= d(static_cast<Eigen::Index>(i));
    if (d.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + norm2(x))) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || std::fabs(x[i] - start[i]) > reach) return std::nullopt;
  return x;
}

/// Smallest box around x (radius growing by 8x) on which Krawczyk certifies a unique root.
inline std::optional<Box> certify_around(const RoutingFunction& rf, std::span<const double> x, double start_radius,
                                         double max_radius) {
  double scale = 1.0;
  for (double v : x) scale = std::max(scale, std::fabs(v));
  double r = std::max(start_radius, 1e-15 * scale);
  for (; r <= max_radius; r *= 8.0) {
    Box B = box_around(x, r);
    const auto JB = rf.jacobian_at(std::span<const Interval>(B));
    const auto k = krawczyk(rf, B, JB);
    if (k.kind == KrawczykStep::Kind::unique) return B;
  }
  return std::nullopt;
}

/**
 * Critical system on one chart of the complement of the cube [-rho, rho]^n.
 * The chart fixes a face x_face = sign / s and a set of coordinates kept
 * finite (|x_j| <= rho, used directly); the rest are x_j = theta_j / s with
 * |theta_j| <= 1. Free variables are ordered by original index with s last.
 * H_i is F_i times the least power of s that clears denominators. The first
 * n polynomials form a square system with Jacobian `J`; the last is the
 * radial combination sum x_i F_i, which vanishes at every common zero.
 */
struct FaceSystem {
  std::size_t face = 0;
  double sign = 1.0;
  std::vector<bool> finite;  // per free variable except s: kept in [-rho, rho]
  std::vector<std::size_t> original;  // original index of each free variable except s
  std::vector<CompiledPoly> H;
  std::vector<CompiledPoly> J;  // n x n, row-major
  int degree = 0;
};

inline std::vector<FaceSystem> homogenize_at_infinity(const RoutingFunction& rf) {
  const std::size_t n = rf.n();
  std::vector<MultiPoly> polys = rf.family();
  MultiPoly radial(n);
  for (std::size_t i = 0; i < n; ++i) radial += MultiPoly::variable(n, i) * rf.family()[i];
  polys.push_back(radial);
  std::vector<FaceSystem> out;
  for (std::size_t face = 0; face < n; ++face) {
    for (int sign : {-1, 1}) {
      for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        FaceSystem fs;
        fs.face = face;
        fs.sign = sign;
        std::vector<bool> keep(n, false);
        for (std::size_t i = 0, bit = 0; i < n; ++i) {
          if (i == face) continue;
          keep[i] = (mask >> bit++) & 1u;
          fs.finite.push_back(keep[i]);
          fs.original.push_back(i);
        }
        std::vector<MultiPoly> hs;
        for (const auto& p : polys) {
          int D = 0;
          for (const auto& [e, c] : p.terms()) {
            int k = 0;
            for (std::size_t i = 0; i < n; ++i)
              if (!keep[i]) k += e[i];
            D = std::max(D, k);
          }
          MultiPoly h(n);
          for (const auto& [e, c] : p.terms()) {
            Exponent he;
            int k = 0;
            for (std::size_t i = 0; i < n; ++i) {
              if (!keep[i]) k += e[i];
              if (i != face) he.push_back(e[i]);
            }
            he.push_back(D - k);
            h.add_term(he, (sign < 0 && e[face] % 2) ? Rational(-c) : c);
          }
          fs.degree = std::max(fs.degree, h.total_degree());
          hs.push_back(h);
        }
        for (const auto& h : hs) fs.H.emplace_back(h);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) fs.J.emplace_back(hs[i].partial(j));
        out.push_back(std::move(fs));
      }
    }
  }
  return out;
}

/// Krawczyk test on a generic square system; true when B provably holds no root.
inline bool krawczyk_excludes(std::span<const CompiledPoly> G, std::span<const CompiledPoly> JG, const Box& B,
                              const std::vector<Interval>& JB, int degree) {
  const std::size_t n = B.size();
  const std::vector<double> m = midpoint(B);
  PowerTable<double> pwd(std::span<const double>(m), degree);
  Eigen::MatrixXd Jm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Jm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = JG[i * n + j](pwd);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Jm);
  if (!lu.isInvertible()) return false;
  const Eigen::MatrixXd Y = lu.inverse();
  if (!Y.allFinite()) return false;
  Box mb(n);
  for (std::size_t i = 0; i < n; ++i) mb[i] = Interval(m[i]);
  PowerTable<Interval> pwm(std::span<const Interval>(mb), degree);
  std::vector<Interval> Gm(n);
  for (std::size_t i = 0; i < n; ++i) Gm[i] = G[i](pwm);
  for (std::size_t i = 0; i < n; ++i) {
    Interval acc = Interval(m[i]);
    for (std::size_t k = 0; k < n; ++k) acc -= Interval(Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) * Gm[k];
    for (std::size_t j = 0; j < n; ++j) {
      Interval mij = Interval(i == j ? 1.0 : 0.0);
      for (std::size_t k = 0; k < n; ++k)
        mij -= Interval(Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) * JB[k * n + j];
      acc += mij * (B[j] - mb[j]);
    }
    Interval cut;
    if (acc.finite() && !intersect(acc, B[i], cut)) return true;
  }
  return false;
}

struct ExclusionOutcome {
  bool ok = false;
  /// Boxes at directions where the top-degree system vanishes were given up
  /// beyond |x|_inf = rho / s_floor; ok then only covers rho <= |x|_inf < that.
  bool capped = false;
  std::size_t boxes = 0;
};

/**
 * Checks that no common zero of F has |x|_inf >= rho, chart by chart. A box
 * whose theta_j stays within rho * s is left to the chart that keeps x_j
 * finite. Boxes touching s = 0 at a common zero of the leading parts can
 * never be excluded; once such a box is narrow its s-range is shrunk, and
 * boxes below s_floor are dropped with the outcome marked capped.
 */
inline ExclusionOutcome exclude_outside(const std::vector<FaceSystem>& charts, std::size_t n, double rho,
                                        std::size_t budget, double s_floor_factor) {
  ExclusionOutcome out;
  std::size_t used = 0;
  const double smax = detail::up(1.0 / rho);
  const double s_floor = smax * s_floor_factor;
  constexpr double drop_width = 2e-3;
  const std::size_t sv = n - 1;  // index of s among the free variables
  for (const auto& fs : charts) {
    std::vector<Box> stack;
    Box root(n);
    for (std::size_t i = 0; i < sv; ++i) root[i] = fs.finite[i] ? Interval(-rho, rho) : Interval(-1.0, 1.0);
    root[sv] = Interval(0.0, smax);
    stack.push_back(root);
    while (!stack.empty()) {
      Box b = std::move(stack.back());
      stack.pop_back();
      out.boxes = ++used;
      if (used > budget) return out;
      bool elsewhere = false;
      for (std::size_t i = 0; i < sv && !elsewhere; ++i) {
        const double lim = detail::down(rho * b[sv].lo);
        if (!fs.finite[i] && b[sv].lo > 0.0 && b[i].lo >= -lim && b[i].hi <= lim) elsewhere = true;
      }
      if (elsewhere) continue;
      PowerTable<Interval> pw(std::span<const Interval>(b), fs.degree);
      const std::vector<double> m = midpoint(b);
      Box mb(n);
      for (std::size_t i = 0; i < n; ++i) mb[i] = Interval(m[i]);
      PowerTable<Interval> pwm(std::span<const Interval>(mb), fs.degree);
      std::vector<Interval> JB(n * n);
      for (std::size_t k = 0; k < n * n; ++k) JB[k] = fs.J[k](pw);
      bool excluded = false;
      for (std::size_t i = 0; i <= n && !excluded; ++i) {
        if (!fs.H[i](pw).contains_zero()) excluded = true;
        if (i < n && !excluded) {
          Interval mv = fs.H[i](pwm);
          for (std::size_t j = 0; j < n; ++j) mv += JB[i * n + j] * (b[j] - mb[j]);
          if (!mv.contains_zero()) excluded = true;
        }
      }
      if (!excluded && b[sv].lo > 0.0)
        excluded = krawczyk_excludes(std::span<const CompiledPoly>(fs.H.data(), n), fs.J, b, JB, fs.degree);
      if (excluded) continue;
      if (b[sv].hi <= s_floor) {
        out.capped = true;
        continue;
      }
      // split by smear: the variable whose width moves the H_i most
      double bw = 0.0;
      for (std::size_t i = 0; i < sv; ++i) bw = std::max(bw, b[i].width() / (fs.finite[i] ? 2.0 * rho : 2.0));
      std::size_t best = 0;
      double best_smear = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += JB[i * n + j].mag() * b[j].width();
        if (!(row > 0.0) || !std::isfinite(row)) continue;
        for (std::size_t j = 0; j < n; ++j) {
          const double sm = JB[i * n + j].mag() * b[j].width() / row;
          if (sm > best_smear) {
            best_smear = sm;
            best = j;
          }
        }
      }
      if (best_smear < 0.0) {
        for (std::size_t i = 0; i < n; ++i)
          if (b[i].width() > b[best].width()) best = i;
      }
      Box l = b, r = b;
      if (b[sv].lo == 0.0) {
        if (bw <= drop_width) {
          l[sv].hi = r[sv].lo = b[sv].hi / 16.0;
          stack.push_back(std::move(l));
          stack.push_back(std::move(r));
          continue;
        }
        {
          // at s = 0 split the widest of the other variables
          best = 0;
          for (std::size_t i = 1; i < sv; ++i)
            if (b[i].width() / (fs.finite[i] ? 2.0 * rho : 2.0) > b[best].width() / (fs.finite[best] ? 2.0 * rho : 2.0))
              best = i;
        }
      }
      if (best == sv) {
        l[sv].hi = r[sv].lo = b[sv].hi / b[sv].lo > 4.0 ? std::sqrt(b[sv].lo * b[sv].hi) : b[sv].mid();
      } else {
        if (b[best].width() < 1e-12 * std::max(1.0, b[best].mag())) return out;
        l[best].hi = r[best].lo = b[best].lo + 0.5 * b[best].width();
      }
      stack.push_back(std::move(l));
      stack.push_back(std::move(r));
    }
  }
  out.ok = true;
  return out;
}

}  // namespace detail

/**
 * Cube [-rho, rho]^n guaranteed to contain every real root of F. Starts from
 * rho = 1 + |c| + a coefficient bound of f and doubles rho until interval
 * evaluation of the homogenized system certifies that no root lies outside.
 */
inline RegionResult search_region(const RoutingFunction& rf, const SolverConfig& cfg = {}) {
  const std::size_t n = rf.n();
  double cnorm = 0.0;
  for (auto c : rf.center()) cnorm = std::max(cnorm, std::fabs(static_cast<double>(c)));
  // Fujiwara-style bound from the homogeneous parts of f
  const int d = rf.f().total_degree();
  auto l1 = [](const MultiPoly& p) {
    double s = 0.0;
    for (const auto& [e, c] : p.terms()) s += std::fabs(c.get_d());
    return s;
  };
  const double top = l1(rf.f().homogeneous_part(d));
  double coef_bound = 0.0;
  for (int k = 0; k < d; ++k) {
    const double lk = l1(rf.f().homogeneous_part(k));
    if (lk > 0.0 && top > 0.0) coef_bound = std::max(coef_bound, std::pow(lk / top, 1.0 / (d - k)));
  }
  double rho = 1.0 + cnorm + std::min(coef_bound, 1e6);
  const auto H = detail::homogenize_at_infinity(rf);
  for (int k = 0; k <= cfg.max_region_doublings; ++k) {
    const auto ex = detail::exclude_outside(H, n, rho, cfg.exclusion_budget, 1.0 / cfg.far_radius_factor);
    if (ex.ok) {
      SearchRegion r;
      r.center.assign(n, 0.0);
      r.half_widths.assign(n, rho);
      r.doublings = k;
      if (ex.capped) r.certified_radius = rho * cfg.far_radius_factor;
      return {r, {}};
    }
    rho *= 2.0;
  }
  return {std::nullopt, DegeneracyReport::degenerate(DegeneracyCause::unresolved_cluster,
                                                     "no exclusion certificate at infinity after " +
                                                         std::to_string(cfg.max_region_doublings) + " doublings")};
}

/**
 * Branch-and-prune isolation of the real roots of F inside a region.
 * Boxes are processed largest first; each is discarded when interval
 * evaluation (natural and mean-value forms) excludes zero, contracted or
 * certified by a Krawczyk step, and otherwise bisected. Small boxes get a
 * Newton + epsilon-inflation attempt so roots on split planes are found.
 */
inline IsolationResult isolate_real_roots(const RoutingFunction& rf, const Box& region, const SolverConfig& cfg = {}) {
  const std::size_t n = rf.n();
  IsolationResult res;
  res.stats.region_volume = detail::box_volume(region);
  const double region_width = max_width(region);
  const double w_min = cfg.min_width_fraction * region_width;
  const double w_inflate = cfg.inflate_width_fraction * region_width;
  const double w_suspect = cfg.suspect_width_fraction * region_width;

  struct Item {
    Box box;
    double width;
    std::uint64_t seq;
    bool inflate_tried;
  };
  auto cmp = [](const Item& a, const Item& b) {
    if (a.width != b.width) return a.width < b.width;
    return a.seq > b.seq;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> queue(cmp);
  std::uint64_t seq = 0;
  queue.push({region, region_width, seq++, false});
  std::vector<Box> stalled;
  std::vector<Box> suspects;

  auto add_root = [&](const std::vector<double>& x, const Box& unique_box) -> bool {
    for (const auto& r : res.roots) {
      if (box_contains(r.unique_box, x) || box_contains(unique_box, r.center)) return false;
    }
    IsolatedRoot root;
    root.center = x;
    std::vector<double> q;
    rf.family_at(x, q);
    root.q_residual = detail::norm2(q);
    double last = 0.0;
    detail::newton(rf, x, 3, &last);
    const auto tiny = detail::certify_around(rf, x, 4.0 * last, 0.5 * max_width(unique_box));
    root.box = tiny ? *tiny : unique_box;
    root.radius = 0.5 * max_width(root.box);
    root.unique_box = unique_box;
    res.roots.push_back(std::move(root));
    return true;
  };

  while (!queue.empty()) {
    Item it = queue.top();
    queue.pop();
    Box& B = it.box;
    const double vol = detail::box_volume(B);
    if (++res.stats.processed > cfg.box_budget) {
      res.report = DegeneracyReport::degenerate(DegeneracyCause::positive_dimensional,
                                                "subdivision budget exhausted", B);
      return res;
    }

    bool covered = false;
    for (const auto& r : res.roots) {
      if (box_subset(B, r.unique_box)) {
        covered = true;
        break;
      }
    }
    if (covered) {
      res.stats.certified_volume += vol;
      continue;
    }

    const std::vector<double> m = midpoint(B);
    auto enc = detail::enclose(rf, B, m, false);
    auto decides = [&](const detail::Enclosure& e) {
      for (std::size_t i = 0; i < n; ++i)
        if (!e.F[i].contains_zero()) return true;
      return false;
    };
    bool excluded = decides(enc);
    if (!excluded && it.width < w_inflate) {
      enc = detail::enclose(rf, B, m, true);
      excluded = decides(enc);
    }
    const std::vector<Interval>& JB = enc.J;
    if (excluded) {
      res.stats.excluded_volume += vol;
      continue;
    }

    const auto k = detail::krawczyk(rf, B, JB, enc.Fm);
    if (k.kind == detail::KrawczykStep::Kind::excluded) {
      res.stats.excluded_volume += vol;
      continue;
    }
    if (k.kind == detail::KrawczykStep::Kind::unique) {
      auto x = detail::newton(rf, m);
      if (x && box_contains(B, *x)) {
        add_root(*x, B);
        res.stats.certified_volume += vol;
        continue;
      }
    }

    Box C = k.contracted;
    const double wc = max_width(C);
    res.stats.excluded_volume += vol - detail::box_volume(C);
    if (wc < 0.7 * it.width && wc > 0.0) {
      queue.push({std::move(C), wc, seq++, it.inflate_tried});
      continue;
    }
    B = std::move(C);
    const double w = max_width(B);

    if (w < w_inflate && !it.inflate_tried) {
      it.inflate_tried = true;
      double last = 0.0;
      if (auto x = detail::newton(rf, midpoint(B), 40, &last)) {
        bool near = true;
        for (std::size_t i = 0; i < n; ++i)
          if (std::fabs((*x)[i] - B[i].mid()) > 2.0 * w) near = false;
        if (near) {
          if (auto U = detail::certify_around(rf, *x, std::max(4.0 * last, 1e-3 * w), 16.0 * w)) add_root(*x, *U);
        }
      }
    }
    // a singular point of f that is a multiple root of F never contracts; set such boxes aside
    if (w < w_suspect && detail::singular_suspect(rf, B)) {
      suspects.push_back(std::move(B));
      continue;
    }
    if (w < w_min) {
      res.stats.stalled_volume += detail::box_volume(B);
      stalled.push_back(std::move(B));
      continue;
    }

    std::size_t split = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (B[i].width() > B[split].width()) split = i;
    // off-center split keeps symmetric roots off the cut plane
    const double cut = B[split].lo + 0.4951 * B[split].width();
    Box L = B, R = B;
    L[split].hi = cut;
    R[split].lo = cut;
    queue.push({std::move(L), max_width(L), seq++, it.inflate_tried});
    queue.push({std::move(R), max_width(R), seq++, it.inflate_tried});
    res.stats.max_live = std::max(res.stats.max_live, queue.size());
    if (queue.size() > cfg.live_box_cap) {
      res.report = DegeneracyReport::degenerate(DegeneracyCause::positive_dimensional,
                                                "undecided boxes keep multiplying (" + std::to_string(queue.size()) +
                                                    " live); the critical set looks positive-dimensional",
                                                queue.top().box);
      return res;
    }
  }

  // Suspect boxes around singular points of f. Near a tacnode they trail off
  // along thin bands, so nearby boxes are merged with a gap tolerance.
  {
    const double gap = 0.1 * cfg.singular_cluster_fraction * region_width;
    std::vector<bool> used(suspects.size(), false);
    for (std::size_t s = 0; s < suspects.size(); ++s) {
      if (used[s]) continue;
      Box hullb = suspects[s];
      std::vector<std::size_t> members{s};
      used[s] = true;
      for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t t = 0; t < suspects.size(); ++t) {
          if (used[t]) continue;
          bool near = true;
          for (std::size_t i = 0; i < n; ++i)
            if (suspects[t][i].lo > hullb[i].hi + gap || suspects[t][i].hi < hullb[i].lo - gap) near = false;
          if (near) {
            for (std::size_t i = 0; i < n; ++i) hullb[i] = hull(hullb[i], suspects[t][i]);
            members.push_back(t);
            used[t] = grew = true;
          }
        }
      }
      if (max_width(hullb) > cfg.singular_cluster_fraction * region_width) {
        res.report = DegeneracyReport::degenerate(DegeneracyCause::positive_dimensional,
                                                  "singular set of f spreads over a region", hullb);
        return res;
      }
      bool known = false;
      for (const auto& r : res.roots)
        if (box_subset(hullb, r.unique_box)) known = true;
      if (known) continue;
      // representative: the member where grad f is smallest, refined when Gauss-Newton settles
      std::vector<double> best;
      double best_g = std::numeric_limits<double>::infinity();
      for (std::size_t t : members) {
        const std::vector<double> m = midpoint(suspects[t]);
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) g += std::fabs(rf.cgradf(i).eval(m));
        if (g < best_g) {
          best_g = g;
          best = m;
        }
      }
      IsolatedRoot root;
      root.center = best;
      if (auto sp = detail::singular_point_near(rf, best, max_width(hullb)); sp && box_contains(hullb, *sp))
        root.center = *sp;
      root.box = root.unique_box = hullb;
      root.radius = 0.5 * max_width(hullb);
      std::vector<double> q;
      rf.family_at(root.center, q);
      root.q_residual = detail::norm2(q);
      root.is_singular_of_f = true;
      root.certified = false;
      res.roots.push_back(std::move(root));
    }
  }
  if (!stalled.empty()) {
    if (res.stats.stalled_volume > cfg.undecided_volume_fraction * res.stats.region_volume) {
      res.report = DegeneracyReport::degenerate(DegeneracyCause::positive_dimensional,
                                                "undecided volume did not shrink below threshold", stalled.front());
      return res;
    }
    // Stalled clusters: accept singular points of f (g = 0 there), otherwise report.
    std::vector<bool> used(stalled.size(), false);
    for (std::size_t s = 0; s < stalled.size(); ++s) {
      if (used[s]) continue;
      Box hullb = stalled[s];
      used[s] = true;
      for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t t = 0; t < stalled.size(); ++t) {
          if (used[t]) continue;
          bool touch = true;
          for (std::size_t i = 0; i < n; ++i)
            if (stalled[t][i].lo > hullb[i].hi || stalled[t][i].hi < hullb[i].lo) touch = false;
          if (touch) {
            for (std::size_t i = 0; i < n; ++i) hullb[i] = hull(hullb[i], stalled[t][i]);
            used[t] = grew = true;
          }
        }
      }
      bool known = false;
      for (const auto& r : res.roots)
        if (box_subset(hullb, r.unique_box) || box_contains(hullb, r.center)) known = true;
      if (known) continue;
      const std::vector<double> m = midpoint(hullb);
      const Interval fval = rf.cf().eval(std::span<const Interval>(hullb));
      if (fval.contains_zero()) {
        IsolatedRoot root;
        root.center = m;
        root.box = hullb;
        root.unique_box = hullb;
        root.radius = 0.5 * max_width(hullb);
        std::vector<double> q;
        rf.family_at(m, q);
        root.q_residual = detail::norm2(q);
        root.is_singular_of_f = true;
        root.certified = false;
        res.roots.push_back(std::move(root));
        continue;
      }
      const Eigen::MatrixXd J = rf.jacobian_at(std::span<const double>(m));
      const double jscale = J.cwiseAbs().maxCoeff();
      const bool singular = std::fabs(J.determinant()) <= 1e-8 * std::pow(std::max(jscale, 1e-300), double(n));
      res.report = DegeneracyReport::degenerate(
          singular ? DegeneracyCause::singular_hessian : DegeneracyCause::unresolved_cluster,
          singular ? "root cluster with singular Jacobian" : "root cluster without contraction", hullb);
      return res;
    }
  }
  std::sort(res.roots.begin(), res.roots.end(),
            [](const IsolatedRoot& a, const IsolatedRoot& b) { return a.center < b.center; });
  return res;
}

struct ClassifiedRoots {
  std::vector<IsolatedRoot> routing;
  std::vector<IsolatedRoot> singular_of_f;
  DegeneracyReport report;
};

namespace detail {

// Best rational approximation with denominator <= max_den by continued fractions.
inline Rational rational_near(double x, long max_den) {
  if (!std::isfinite(x)) return Rational(0);
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 40; ++it) {
    const double a = std::floor(v);
    if (std::fabs(a) > 1e15) break;
    const long ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = v - a;
    if (frac < 1e-12) break;
    v = 1.0 / frac;
  }
  if (q1 == 0) return Rational(static_cast<long>(std::llround(x)));
  Rational r(p1, q1);
  r.canonicalize();
  return r;
}

inline double grad_f_norm(const RoutingFunction& rf, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < rf.n(); ++i) {
    const double g = rf.cgradf(i).eval(x);
    s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace detail

/**
 * Splits certified roots into routing points (f != 0) and singular points
 * of f. A root is decided exactly when it snaps to a rational point that
 * satisfies F = 0 exactly; otherwise by interval evaluation of f over
 * shrinking certified boxes, with a Gauss-Newton check on {F, f} for roots
 * where f does not separate from zero.
 */
inline ClassifiedRoots classify_roots(const RoutingFunction& rf, const std::vector<IsolatedRoot>& roots,
                                      const SolverConfig& cfg = {}) {
  ClassifiedRoots out;
  const std::size_t n = rf.n();
  for (IsolatedRoot root : roots) {
    if (root.is_singular_of_f) {
      out.singular_of_f.push_back(std::move(root));
      continue;
    }
    // exact path: a small-denominator rational point inside the uniqueness box that zeroes F
    RationalPoint r(n);
    std::vector<double> rd(n);
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = detail::rational_near(root.center[i], 10000);
      rd[i] = r[i].get_d();
      if (!root.unique_box[i].contains(rd[i]) || std::fabs(rd[i] - root.center[i]) > 1e-9 * (1 + std::fabs(rd[i])))
        inside = false;
    }
    if (inside) {
      bool zero = true;
      for (const auto& Fi : rf.family())
        if (Fi.eval(r) != 0) {
          zero = false;
          break;
        }
      if (zero) {
        root.center = rd;
        root.is_singular_of_f = rf.f().eval(r) == 0;
        (root.is_singular_of_f ? out.singular_of_f : out.routing).push_back(std::move(root));
        continue;
      }
    }

    // interval path: f over shrinking certified boxes around the refined center
    bool decided = false;
    Box b = root.box;
    for (int k = 0; k < 6 && !decided; ++k) {
      const Interval fi = rf.cf().eval(std::span<const Interval>(b));
      if (!fi.contains_zero()) {
        out.routing.push_back(root);
        decided = true;
        break;
      }
      auto tighter = detail::certify_around(rf, root.center, 1e-16, 0.25 * max_width(b));
      if (!tighter || max_width(*tighter) >= max_width(b)) break;
      b = *tighter;
      root.box = b;
      root.radius = 0.5 * max_width(b);
    }
    if (decided) continue;

    // singular candidate: |f| tiny relative to its term scale and Gauss-Newton on {F, f} settles
    PowerTable<double> pw(std::span<const double>(root.center), rf.max_degree());
    const double fval = rf.cf()(pw);
    const double fscale = rf.cf().abs_sum(pw);
    std::vector<double> x = root.center;
    bool converged = false;
    for (int it = 0; it < 30; ++it) {
      Eigen::MatrixXd A(n + 1, n);
      Eigen::VectorXd rhs(n + 1);
      std::vector<double> q;
      rf.family_at(x, q);
      const Eigen::MatrixXd J = rf.jacobian_at(std::span<const double>(x));
      for (std::size_t i = 0; i < n; ++i) {
        rhs(i) = q[i];
        A.row(i) = J.row(i);
      }
      rhs(n) = rf.cf().eval(x);
      for (std::size_t j = 0; j < n; ++j) A(n, j) = rf.cgradf(j).eval(x);
      const Eigen::VectorXd d = A.colPivHouseholderQr().solve(rhs);
      if (!d.allFinite()) break;
      for (std::size_t i = 0; i < n; ++i) x[i] -= d(i);
      if (d.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + detail::norm2(x))) {
        converged = true;
        break;
      }
    }
    const bool in_box = box_contains(root.unique_box, x);
    if (converged && in_box && std::fabs(fval) <= cfg.singular_f_fraction * fscale &&
        std::fabs(rf.cf().eval(x)) <= 1e-10 * fscale) {
      root.is_singular_of_f = true;
      out.singular_of_f.push_back(std::move(root));
      continue;
    }
    out.report = DegeneracyReport::degenerate(DegeneracyCause::unresolved_cluster,
                                              "cannot separate root from f = 0", root.box);
    return out;
  }
  return out;
}

/// Interval determinant by cofactor expansion (n is small).
inline Interval interval_det(const std::vector<Interval>& M, std::size_t n) {
  if (n == 1) return M[0];
  if (n == 2) return M[0] * M[3] - M[1] * M[2];
  Interval det(0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<Interval> minor;
    minor.reserve((n - 1) * (n - 1));
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != c) minor.push_back(M[i * n + j]);
    const Interval term = M[c] * interval_det(minor, n - 1);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

/**
 * det Hess g = P^n det JF at a critical point with P != 0, so the Hessian is
 * nonsingular at a routing root iff the interval determinant of JF over its
 * certified box excludes zero.
 */
inline DegeneracyReport hessian_nondegeneracy(const RoutingFunction& rf, const std::vector<IsolatedRoot>& routing) {
  for (const auto& r : routing) {
    const auto J = rf.jacobian_at(std::span<const Interval>(r.box));
    if (interval_det(J, rf.n()).contains_zero())
      return DegeneracyReport::degenerate(DegeneracyCause::singular_hessian,
                                          "Hessian determinant interval contains zero at a routing point", r.box);
  }
  return {};
}

}  // namespace sacon
