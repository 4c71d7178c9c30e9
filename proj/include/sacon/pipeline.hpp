#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sacon/connect.hpp"
#include "sacon/destination.hpp"
#include "sacon/eigen.hpp"
#include "sacon/perturb.hpp"
#include "sacon/routing.hpp"
#include "sacon/solve.hpp"
#include "sacon/squarefree.hpp"

namespace sacon {

struct PipelineConfig {
  SolverConfig solver;
  TracerConfig tracer;
  std::size_t step_limit = 10'000;
  /// Run the exact squarefree test and reject inputs that fail it.
  bool check_squarefree = true;
};

/// Outcome of one center tried by the perturbation loop.
struct CenterAttempt {
  Center c;
  DegeneracyReport report;
  std::size_t roots = 0;
  double seconds = 0.0;
};

class NotSquarefree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything the query stage needs for one f: routing points, their traps and the matrices.
struct Roadmap {
  RoutingFunction rf;
  SearchRegion region;
  SquarefreeStatus squarefree = SquarefreeStatus::unverified;
  std::vector<IsolatedRoot> singular_of_f;
  std::vector<RoutingPoint> R;
  std::vector<CaptureZone> zones;
  ConnectivityMatrix matrix;
  std::vector<SaddleTrace> traces;
  std::vector<CenterAttempt> attempts;

  std::size_t k() const { return R.size(); }
};

namespace detail {

// Lexicographic on coordinates rounded to 1e-9, so rounding noise around zero does not reorder points.
inline bool location_order(const IsolatedRoot& a, const IsolatedRoot& b) {
  auto key = [](const IsolatedRoot& r) {
    std::vector<double> k;
    for (double v : r.center) k.push_back(std::round(v * 1e9));
    return k;
  };
  const auto ka = key(a), kb = key(b);
  return ka != kb ? ka < kb : a.center < b.center;
}

}  // namespace detail

/// Roots and Morse data for one center, or the reason the center is degenerate.
struct CenterResult {
  std::optional<SearchRegion> region;
  std::vector<IsolatedRoot> singular_of_f;
  std::vector<RoutingPoint> R;
  DegeneracyReport report;
  std::size_t roots = 0;
};

/// Solves the critical system for one center and builds the Morse data of its routing points.
inline CenterResult analyse_center(const RoutingFunction& rf, const SolverConfig& cfg = {}) {
  CenterResult out;
  auto reg = search_region(rf, cfg);
  if (!reg.region) {
    out.report = reg.report;
    return out;
  }
  out.region = reg.region;
  auto iso = isolate_real_roots(rf, reg.region->box(), cfg);
  out.roots = iso.roots.size();
  if (!iso.report.ok()) {
    out.report = iso.report;
    return out;
  }
  auto cl = classify_roots(rf, iso.roots, cfg);
  if (!cl.report.ok()) {
    out.report = cl.report;
    return out;
  }
  out.report = hessian_nondegeneracy(rf, cl.routing);
  if (!out.report.ok()) return out;
  std::sort(cl.routing.begin(), cl.routing.end(), detail::location_order);
  std::sort(cl.singular_of_f.begin(), cl.singular_of_f.end(), detail::location_order);
  try {
    for (std::size_t i = 0; i < cl.routing.size(); ++i) out.R.push_back(morse_data(rf, cl.routing[i], i));
  } catch (const NearDegenerate& e) {
    out.report = DegeneracyReport::degenerate(DegeneracyCause::singular_hessian, e.what());
    out.R.clear();
    return out;
  }
  out.singular_of_f = std::move(cl.singular_of_f);
  return out;
}

/// Tracer settings with the guard taken from the certified search region.
inline TracerConfig effective_tracer(const Roadmap& map, TracerConfig tc) {
  if (!std::isfinite(tc.guard_radius)) tc.guard_radius = map.region.certified_radius;
  return tc;
}

/**
 * Steps 1 to 6 for one f: walks centers in graded-lex order until the
 * critical system is nondegenerate, then computes Morse data, traces the
 * outgoing paths of every saddle and closes the adjacency relation.
 */
inline Roadmap build_roadmap(const MultiPoly& f, const PipelineConfig& cfg = {}) {
  if (f.nvars() < 2) throw std::invalid_argument("at least two variables are required");
  if (f.total_degree() < 1) throw std::invalid_argument("polynomial must have degree >= 1");
  SquarefreeStatus sq = SquarefreeStatus::unverified;
  if (cfg.check_squarefree) {
    sq = squarefree_check(f);
    if (sq == SquarefreeStatus::failed) throw NotSquarefree("polynomial has a repeated factor");
  }
  GridCursor cursor(f.nvars(), cfg.step_limit);
  std::vector<CenterAttempt> attempts;
  for (Center c = cursor.current();; c = cursor.next()) {
    const auto t0 = std::chrono::steady_clock::now();
    RoutingFunction rf(f, c);
    CenterResult res = analyse_center(rf, cfg.solver);
    attempts.push_back({c, res.report, res.roots,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    if (!res.report.ok()) continue;

    Roadmap map{std::move(rf), *res.region, sq, std::move(res.singular_of_f), std::move(res.R), {}, {}, {}, {}};
    map.zones = capture_zones(map.rf, map.R);
    auto adj = build_adjacency(map.rf, map.R, map.zones, effective_tracer(map, cfg.tracer));
    map.matrix = std::move(adj.matrix);
    map.matrix.M = closure(map.matrix.A);
    map.traces = std::move(adj.traces);
    map.attempts = std::move(attempts);
    return map;
  }
}

inline Verdict query(const Roadmap& map, const RationalPoint& p, const RationalPoint& q, const TracerConfig& tc = {}) {
  return query(map.rf, map.R, map.zones, map.matrix.M, p, q, effective_tracer(map, tc));
}

}  // namespace sacon
