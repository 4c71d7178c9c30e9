#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sacon/routing.hpp"
#include "sacon/solve.hpp"

namespace sacon {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

/**
 * @brief A certified critical point of g with g != 0 and its Morse data.
 *
 * morse_index counts negative eigenvalues, so index n is a local maximum.
 * outgoing holds the unit eigenvectors of positive eigenvalues, each signed
 * so that its first non-negligible coordinate is non-positive.
 */
struct RoutingPoint {
  std::size_t id = 0;
  std::vector<double> location;
  double radius = 0.0;
  Box box;
  double g_value = 0.0;
  int morse_index = 0;
  std::vector<EigenPair> eigenpairs;  // ascending
  std::vector<std::vector<double>> outgoing;
  /// Largest box known to contain no other critical point.
  Box unique_box;
};

class NearDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void sign_normalize(std::vector<double>& v) {
  for (double x : v) {
    if (std::fabs(x) > 1e-12) {
      if (x > 0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

/// Modified Gram-Schmidt on the columns [first, last) of V.
inline void orthonormalize(Eigen::MatrixXd& V, Eigen::Index first, Eigen::Index last) {
  for (Eigen::Index j = first; j < last; ++j) {
    for (Eigen::Index k = first; k < j; ++k) V.col(j) -= V.col(k).dot(V.col(j)) * V.col(k);
    V.col(j).normalize();
  }
}

}  // namespace detail

/**
 * Eigendecomposition of the symmetrized P * JF Hessian at a routing root.
 * Eigenpairs come out ascending; blocks of nearly equal eigenvalues are
 * re-orthonormalized. Throws NearDegenerate when the smallest |eigenvalue|
 * is below 1e-10 of the Hessian norm.
 */
inline RoutingPoint morse_data(const RoutingFunction& rf, const IsolatedRoot& root, std::size_t id) {
  const std::size_t n = rf.n();
  RoutingPoint rp;
  rp.id = id;
  rp.location = root.center;
  rp.radius = root.radius;
  rp.box = root.box;
  rp.unique_box = root.unique_box;
  rp.g_value = eval_g(rf, root.center);

  // the certificate was checked on the box; tolerate cancellation at the float center
  const Eigen::MatrixXd H = eval_hess_g_at_critical(rf, root.center, 1e-6).hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NearDegenerate("eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd V = es.eigenvectors();
  const double scale = lam.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || lam.cwiseAbs().minCoeff() < 1e-10 * scale)
    throw NearDegenerate("Hessian is numerically singular at routing point " + std::to_string(id));

  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(n);) {
    Eigen::Index b = a + 1;
    while (b < static_cast<Eigen::Index>(n) && std::fabs(lam(b) - lam(a)) < 1e-8 * scale) ++b;
    if (b - a > 1) detail::orthonormalize(V, a, b);
    a = b;
  }

  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
    EigenPair p;
    p.value = lam(k);
    p.vector.assign(V.col(k).data(), V.col(k).data() + n);
    detail::sign_normalize(p.vector);
    if (p.value < 0)
      ++rp.morse_index;
    else
      rp.outgoing.push_back(p.vector);
    rp.eigenpairs.push_back(std::move(p));
  }
  return rp;
}

/// Ids of the routing points of index n.
inline std::vector<std::size_t> local_maxima(const std::vector<RoutingPoint>& points) {
  std::vector<std::size_t> ids;
  for (const auto& p : points)
    if (p.morse_index == static_cast<int>(p.location.size())) ids.push_back(p.id);
  return ids;
}

}  // namespace sacon
