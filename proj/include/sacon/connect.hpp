#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sacon/destination.hpp"
#include "sacon/eigen.hpp"
#include "sacon/poly.hpp"
#include "sacon/routing.hpp"

namespace sacon {

/// Dense k x k boolean matrix.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  explicit BoolMatrix(std::size_t k) : k_(k), data_(k * k, 0) {}
  std::size_t size() const { return k_; }
  bool operator()(std::size_t i, std::size_t j) const { return data_[i * k_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { data_[i * k_ + j] = v ? 1 : 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1)); }
  bool operator==(const BoolMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint8_t> data_;
};

struct ConnectivityMatrix {
  std::size_t k = 0;
  BoolMatrix A;
  BoolMatrix M;
};

/// One adjacency-building path: from routing point `from` along sign * outgoing[dir].
struct SaddleTrace {
  std::size_t from = 0;
  std::size_t dir = 0;
  int sign = 1;
  PathTrace trace;
};

struct AdjacencyResult {
  ConnectivityMatrix matrix;
  std::vector<SaddleTrace> traces;
};

namespace detail {

/// Runs body(0..count-1) on a small worker pool; the first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto run = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < count;) {
      try {
        body(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/**
 * For every routing point and every outgoing vector v, traces the ascent
 * paths leaving along +v and -v and marks the destinations in row i of A.
 * Traces run in parallel; the result does not depend on scheduling.
 * Throws TraceFailure when a trace is not captured.
 */
inline AdjacencyResult build_adjacency(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                                       const std::vector<CaptureZone>& zones, const TracerConfig& cfg = {}) {
  AdjacencyResult out;
  out.matrix.k = R.size();
  out.matrix.A = BoolMatrix(R.size());
  for (const auto& rp : R)
    for (std::size_t d = 0; d < rp.outgoing.size(); ++d)
      for (int sign : {1, -1}) out.traces.push_back({rp.id, d, sign, {}});

  detail::parallel_for(out.traces.size(), [&](std::size_t t) {
    SaddleTrace& st = out.traces[t];
    const RoutingPoint& rp = R[st.from];
    std::vector<double> v = rp.outgoing[st.dir];
    for (double& x : v) x *= st.sign;
    st.trace = trace(rf, R, zones, rp.location, v, cfg, rp.id);
  });

  for (const auto& st : out.traces) {
    if (st.trace.status != TraceStatus::captured)
      throw TraceFailure("trace from routing point " + std::to_string(st.from) + " not captured: " +
                             to_string(st.trace.status) + " (" + st.trace.detail + ")",
                         st.trace);
    out.matrix.A.set(st.from, st.trace.terminal_id);
  }
  return out;
}

/// Reflexive, symmetric and transitive closure of A (Warshall).
inline BoolMatrix closure(const BoolMatrix& A) {
  const std::size_t k = A.size();
  BoolMatrix M(k);
  for (std::size_t i = 0; i < k; ++i) {
    M.set(i, i);
    for (std::size_t j = 0; j < k; ++j)
      if (A(i, j)) {
        M.set(i, j);
        M.set(j, i);
      }
  }
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t i = 0; i < k; ++i)
      if (M(i, m))
        for (std::size_t j = 0; j < k; ++j)
          if (M(m, j)) M.set(i, j);
  return M;
}

/// Equivalence classes of a closed relation, each sorted, ordered by smallest member.
inline std::vector<std::vector<std::size_t>> components(const BoolMatrix& M) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> seen(M.size(), false);
  for (std::size_t i = 0; i < M.size(); ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> cls;
    for (std::size_t j = i; j < M.size(); ++j)
      if (M(i, j)) {
        cls.push_back(j);
        seen[j] = true;
      }
    out.push_back(std::move(cls));
  }
  return out;
}

class PointOnHypersurface : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How a query point was attached to a routing point.
struct Resolution {
  std::size_t index = 0;
  /// Set when the point is itself a critical point of g.
  bool exact_routing_point = false;
  std::optional<PathTrace> trace;
};

struct Verdict {
  bool connected = false;
  Resolution p, q;
};

/**
 * Routing point reached from a rational point with f(p) != 0. Whether
 * grad g(p) vanishes is decided exactly from F(p); otherwise the ascent
 * path from p is traced.
 */
inline Resolution resolve_point(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                                const std::vector<CaptureZone>& zones, const RationalPoint& p,
                                const TracerConfig& cfg = {}) {
  if (p.size() != rf.n()) throw DimensionMismatch("query point dimension differs from nvars");
  if (rf.f().eval(p) == 0) throw PointOnHypersurface("point lies on f = 0");
  const std::vector<double> x = to_double(p);
  Resolution r;
  bool critical = true;
  for (const auto& Fi : rf.family())
    if (Fi.eval(p) != 0) {
      critical = false;
      break;
    }
  if (critical) {
    for (const auto& rp : R)
      if (box_contains(rp.unique_box, x)) {
        r.index = rp.id;
        r.exact_routing_point = true;
        return r;
      }
    throw std::logic_error("critical point of g missing from the routing set");
  }
  std::vector<double> v;
  detail::ascent_direction(rf, x, v);
  PathTrace t = trace(rf, R, zones, x, v, cfg);
  if (t.status != TraceStatus::captured)
    throw TraceFailure(std::string("query trace not captured: ") + to_string(t.status) + " (" + t.detail + ")",
                       std::move(t));
  r.index = t.terminal_id;
  r.trace = std::move(t);
  return r;
}

/// Whether p and q lie in the same connected component of {f != 0}.
inline Verdict query(const RoutingFunction& rf, const std::vector<RoutingPoint>& R,
                     const std::vector<CaptureZone>& zones, const BoolMatrix& M, const RationalPoint& p,
                     const RationalPoint& q, const TracerConfig& cfg = {}) {
  Verdict v;
  v.p = resolve_point(rf, R, zones, p, cfg);
  v.q = p == q ? v.p : resolve_point(rf, R, zones, q, cfg);
  v.connected = M(v.p.index, v.q.index);
  return v;
}

}  // namespace sacon
