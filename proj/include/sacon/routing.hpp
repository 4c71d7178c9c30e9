#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sacon/compiled.hpp"
#include "sacon/interval.hpp"
#include "sacon/poly.hpp"

namespace sacon {

using Center = std::vector<std::int64_t>;

/**
 * @brief The routing function g = f^2 / U^gamma together with its critical system.
 *
 * U = sum_i (x_i - c_i)^2 + 1 and gamma = deg f + 1. The critical family is
 * F_i = 2 (d_i f) U - gamma f (d_i U), so that grad g = f / U^(gamma+1) * F.
 * g itself is never expanded; every evaluation goes through f, U, F and the
 * exact Jacobian of F.
 */
class RoutingFunction {
 public:
  RoutingFunction(const MultiPoly& f, Center c) : f_(f), center_(std::move(c)) {
    n_ = f_.nvars();
    if (n_ < 2) throw std::invalid_argument("routing function needs n >= 2 variables");
    if (center_.size() != n_) throw DimensionMismatch("center dimension differs from nvars");
    const int d = f_.total_degree();
    if (d < 1) throw std::invalid_argument("polynomial must have degree >= 1");
    gamma_ = d + 1;

    U_ = MultiPoly::constant(n_, 1);
    for (std::size_t i = 0; i < n_; ++i) {
      MultiPoly xi = MultiPoly::variable(n_, i) - MultiPoly::constant(n_, Rational(center_[i]));
      U_ += xi * xi;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      grad_f_.push_back(f_.partial(i));
      family_.push_back(Rational(2) * grad_f_[i] * U_ - Rational(gamma_) * f_ * U_.partial(i));
    }
    jacobian_.resize(n_ * n_, MultiPoly(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) jacobian_[i * n_ + j] = family_[i].partial(j);

    cf_ = CompiledPoly(f_);
    cU_ = CompiledPoly(U_);
    for (std::size_t i = 0; i < n_; ++i) {
      cF_.emplace_back(family_[i]);
      cgradf_.emplace_back(grad_f_[i]);
    }
    for (const auto& p : jacobian_) cJ_.emplace_back(p);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k) cH_.emplace_back(jacobian_[i * n_ + j].partial(k));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) cHf_.emplace_back(grad_f_[i].partial(j));
    xf_ = DyadicPoly(f_);
    for (const auto& p : family_) xF_.emplace_back(p);
    for (const auto& p : grad_f_) xgradf_.emplace_back(p);
    for (const auto& p : jacobian_) xJ_.emplace_back(p);
    max_degree_ = std::max(d, 2) + 1;
  }

  std::size_t n() const { return n_; }
  int gamma() const { return gamma_; }
  const MultiPoly& f() const { return f_; }
  const Center& center() const { return center_; }
  const MultiPoly& U() const { return U_; }
  const std::vector<MultiPoly>& family() const { return family_; }
  const std::vector<MultiPoly>& grad_f() const { return grad_f_; }
  /// d F_i / d x_j, row-major.
  const MultiPoly& jacobian(std::size_t i, std::size_t j) const { return jacobian_[i * n_ + j]; }

  const CompiledPoly& cf() const { return cf_; }
  const CompiledPoly& cU() const { return cU_; }
  const CompiledPoly& cF(std::size_t i) const { return cF_[i]; }
  const CompiledPoly& cgradf(std::size_t i) const { return cgradf_[i]; }
  const CompiledPoly& cJ(std::size_t i, std::size_t j) const { return cJ_[i * n_ + j]; }
  /// d^2 F_i / dx_j dx_k.
  /// Exact evaluators at double points.
  const DyadicPoly& xf() const { return xf_; }
  const DyadicPoly& xF(std::size_t i) const { return xF_[i]; }
  const DyadicPoly& xgradf(std::size_t i) const { return xgradf_[i]; }
  const DyadicPoly& xJ(std::size_t i, std::size_t j) const { return xJ_[i * n_ + j]; }
  /// d^2 f / dx_i dx_j.
  const CompiledPoly& cHf(std::size_t i, std::size_t j) const { return cHf_[i * n_ + j]; }
  const CompiledPoly& cH(std::size_t i, std::size_t j, std::size_t k) const { return cH_[(i * n_ + j) * n_ + k]; }
  int max_degree() const { return max_degree_; }

  double f_at(std::span<const double> x) const { return cf_.eval(x); }

  /// F at x, plus a magnitude scale (sum of absolute term values) per component.
  void family_at(std::span<const double> x, std::vector<double>& q, std::vector<double>* scale = nullptr) const {
    PowerTable<double> pw(x, max_degree_);
    q.resize(n_);
    if (scale) scale->resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      q[i] = cF_[i](pw);
      if (scale) (*scale)[i] = cF_[i].abs_sum(pw);
    }
  }

  Eigen::MatrixXd jacobian_at(std::span<const double> x) const {
    PowerTable<double> pw(x, max_degree_);
    Eigen::MatrixXd J(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) J(i, j) = cJ_[i * n_ + j](pw);
    return J;
  }

  std::vector<Interval> family_at(std::span<const Interval> x) const {
    PowerTable<Interval> pw(x, max_degree_);
    std::vector<Interval> q(n_);
    for (std::size_t i = 0; i < n_; ++i) q[i] = cF_[i](pw);
    return q;
  }

  /// Interval Jacobian of F over a box, row-major.
  std::vector<Interval> jacobian_at(std::span<const Interval> x) const {
    PowerTable<Interval> pw(x, max_degree_);
    std::vector<Interval> J(n_ * n_);
    for (std::size_t k = 0; k < n_ * n_; ++k) J[k] = cJ_[k](pw);
    return J;
  }

 private:
  MultiPoly f_;
  Center center_;
  std::size_t n_ = 0;
  int gamma_ = 0;
  MultiPoly U_;
  std::vector<MultiPoly> grad_f_;
  std::vector<MultiPoly> family_;
  std::vector<MultiPoly> jacobian_;
  CompiledPoly cf_, cU_;
  std::vector<CompiledPoly> cF_, cgradf_, cJ_, cH_, cHf_;
  DyadicPoly xf_;
  std::vector<DyadicPoly> xF_, xgradf_, xJ_;
  int max_degree_ = 0;
};

/// Builds gamma, U, the critical family and its Jacobian for center c.
inline RoutingFunction build_routing(const MultiPoly& f, Center c) { return RoutingFunction(f, std::move(c)); }

/// Value, gradient and (optionally) Hessian of g at one point.
struct GradHessEval {
  std::vector<double> point;
  double g_val = 0.0;
  std::vector<double> grad;
  std::optional<Eigen::MatrixXd> hess;
};

namespace detail {
struct PointParts {
  double f = 0.0, U = 0.0;
  std::vector<double> q;
};

inline PointParts parts_at(const RoutingFunction& rf, std::span<const double> x) {
  PowerTable<double> pw(x, rf.max_degree());
  PointParts p;
  p.f = rf.cf()(pw);
  p.U = rf.cU()(pw);
  p.q.resize(rf.n());
  for (std::size_t i = 0; i < rf.n(); ++i) p.q[i] = rf.cF(i)(pw);
  return p;
}
}  // namespace detail

/// g(x) = f(x)^2 / U(x)^gamma; U >= 1 so there is no division hazard.
inline double eval_g(const RoutingFunction& rf, std::span<const double> x) {
  const double f = rf.cf().eval(x);
  const double U = rf.cU().eval(x);
  return f * f * std::pow(U, -rf.gamma());
}

/// grad g(x) = f / U^(gamma+1) * F(x); exactly zero where f or F vanish.
inline std::vector<double> eval_grad_g(const RoutingFunction& rf, std::span<const double> x) {
  const auto parts = detail::parts_at(rf, x);
  const double P = parts.f * std::pow(parts.U, -(rf.gamma() + 1));
  std::vector<double> g(rf.n());
  for (std::size_t i = 0; i < rf.n(); ++i) g[i] = P * parts.q[i];
  return g;
}

/// Value and gradient in one pass.
inline GradHessEval eval_g_and_grad(const RoutingFunction& rf, std::span<const double> x) {
  const auto parts = detail::parts_at(rf, x);
  GradHessEval r;
  r.point.assign(x.begin(), x.end());
  const double inv = std::pow(parts.U, -rf.gamma());
  r.g_val = parts.f * parts.f * inv;
  const double P = parts.f * inv / parts.U;
  r.grad.resize(rf.n());
  for (std::size_t i = 0; i < rf.n(); ++i) r.grad[i] = P * parts.q[i];
  return r;
}

class NotCritical : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CriticalHessian {
  Eigen::MatrixXd hess;
  /// max |M - M^T| / 2 of the unsymmetrized product, before averaging.
  double asymmetry = 0.0;
};

/**
 * Hessian of g at a critical point via Hess g = P * JF with P = f / U^(gamma+1),
 * the gradient-of-P term vanishing because F(x) = 0. The product is averaged
 * with its transpose. Throws NotCritical when |F(x)| exceeds rel_tol times
 * the largest cancellation scale of the components of F at x.
 */
inline CriticalHessian eval_hess_g_at_critical(const RoutingFunction& rf, std::span<const double> x,
                                               double rel_tol = 1e-8) {
  std::vector<double> q, scale;
  rf.family_at(x, q, &scale);
  const double s = std::max(*std::max_element(scale.begin(), scale.end()), 1e-300);
  for (std::size_t i = 0; i < rf.n(); ++i)
    if (std::fabs(q[i]) > rel_tol * s)
      throw NotCritical("point is not a critical point of the routing function");
  const double f = rf.cf().eval(x);
  const double U = rf.cU().eval(x);
  const double P = f * std::pow(U, -(rf.gamma() + 1));
  Eigen::MatrixXd M = P * rf.jacobian_at(x);
  CriticalHessian r;
  r.asymmetry = 0.5 * (M - M.transpose()).cwiseAbs().maxCoeff();
  r.hess = 0.5 * (M + M.transpose());
  return r;
}

/// Full quotient-rule Hessian: H_ij = F_i d_j P + P dF_i/dx_j, symmetrized.
inline Eigen::MatrixXd eval_hess_g_general(const RoutingFunction& rf, std::span<const double> x) {
  const std::size_t n = rf.n();
  PowerTable<double> pw(x, rf.max_degree());
  const double f = rf.cf()(pw);
  const double U = rf.cU()(pw);
  const double Ug1 = std::pow(U, -(rf.gamma() + 1));
  const double P = f * Ug1;
  Eigen::MatrixXd H(n, n);
  std::vector<double> q(n), dP(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = rf.cF(i)(pw);
    const double dU = 2.0 * (x[i] - static_cast<double>(rf.center()[i]));
    dP[i] = rf.cgradf(i)(pw) * Ug1 - (rf.gamma() + 1) * f * dU * Ug1 / U;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) H(i, j) = q[i] * dP[j] + P * rf.cJ(i, j)(pw);
  return 0.5 * (H + H.transpose());
}

/**
 * Interval enclosure of U^(gamma+2) * Hess g over a box. The positive factor
 * keeps definiteness, and the entries stay polynomial:
 *   F (U grad f - (gamma+1) f grad U)^T + f U JF.
 * Entry (i,j) is intersected with entry (j,i) since the exact matrix is symmetric.
 */
inline std::vector<Interval> scaled_hessian_enclosure(const RoutingFunction& rf, std::span<const Interval> box) {
  const std::size_t n = rf.n();
  PowerTable<Interval> pw(box, rf.max_degree());
  const Interval f = rf.cf()(pw);
  const Interval U = rf.cU()(pw);
  std::vector<Interval> q(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = rf.cF(i)(pw);
    const Interval dU = Interval(2.0) * (box[i] - Interval(static_cast<double>(rf.center()[i])));
    w[i] = U * rf.cgradf(i)(pw) - Interval(rf.gamma() + 1) * f * dU;
  }
  const Interval fU = f * U;
  std::vector<Interval> H(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) H[i * n + j] = q[i] * w[j] + fU * rf.cJ(i, j)(pw);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Interval t;
      if (!intersect(H[i * n + j], H[j * n + i], t)) t = hull(H[i * n + j], H[j * n + i]);
      H[i * n + j] = H[j * n + i] = t;
    }
  return H;
}

}  // namespace sacon
