// Runs the acceptance criteria end to end; one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/flood_oracle.hpp"

namespace {

using namespace sacon;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Case {
  std::string name;
  MultiPoly f;
  std::optional<Roadmap> map;
  double build_seconds = 0.0;
  std::string error;
};

struct QueryRecord {
  RationalPoint p, q;
  bool verdict = false;
  std::vector<PathTrace> traces;
};

struct OracleRun {
  std::size_t pairs = 0, agree = 0;
  bool refined_stable = true;
  double seconds = 0.0;
  std::vector<QueryRecord> records;
};

class Report {
 public:
  void line(int k, bool ok, const std::string& detail) {
    std::printf("criterion %d %s: %s\n", k, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    all_ &= ok;
  }
  bool all() const { return all_; }

 private:
  bool all_ = true;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Rational in [-L, L] with a 1e-5 grid.
Rational grid_rational(std::mt19937_64& rng, double L) {
  return testing::random_rational(rng, -L, L, 100000);
}

/**
 * Random pairs with |f| > 1e-3 at both points that the oracle labels at both
 * resolutions. Counts agreement of the roadmap verdict with the coarse
 * oracle and checks that the refined oracle gives the same answers.
 */
OracleRun oracle_check(const Roadmap& map, double L, std::size_t base, int depth, std::size_t npairs,
                       std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleRun run;
  testing::FloodOracle coarse(map.rf.f(), L, base, depth), fine(map.rf.f(), L, base, depth + 1);
  std::mt19937_64 rng(seed);
  const MultiPoly& f = map.rf.f();
  while (run.pairs < npairs) {
    RationalPoint p{grid_rational(rng, L), grid_rational(rng, L)};
    RationalPoint q{grid_rational(rng, L), grid_rational(rng, L)};
    const auto pd = to_double(p), qd = to_double(q);
    if (std::fabs(f.eval(p).get_d()) <= 1e-3 || std::fabs(f.eval(q).get_d()) <= 1e-3) continue;
    const long cp = coarse.label(pd[0], pd[1]), cq = coarse.label(qd[0], qd[1]);
    const long fp = fine.label(pd[0], pd[1]), fq = fine.label(qd[0], qd[1]);
    if (cp < 0 || cq < 0 || fp < 0 || fq < 0) continue;
    ++run.pairs;
    const Verdict v = query(map, p, q);
    QueryRecord rec{p, q, v.connected, {}};
    if (v.p.trace) rec.traces.push_back(*v.p.trace);
    if (v.q.trace) rec.traces.push_back(*v.q.trace);
    run.records.push_back(std::move(rec));
    run.agree += v.connected == (cp == cq);
    run.refined_stable &= (cp == cq) == (fp == fq);
  }
  run.seconds = seconds_since(t0);
  return run;
}

/// Gradient of g at x by a fourth-order difference of g evaluated exactly in rationals.
std::vector<double> exact_difference_gradient(const RoutingFunction& rf, const std::vector<double>& x, double h) {
  const std::size_t n = x.size();
  const MultiPoly& f = rf.f();
  const MultiPoly& U = rf.U();
  auto g = [&](const RationalPoint& y) {
    const Rational fv = f.eval(y), uv = U.eval(y);
    Rational den = 1;
    for (int k = 0; k < rf.gamma(); ++k) den *= uv;
    return Rational(fv * fv / den);
  };
  std::vector<double> out(n);
  const Rational hr(h);
  for (std::size_t i = 0; i < n; ++i) {
    RationalPoint y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = Rational(x[k]);
    auto at = [&](int m) {
      RationalPoint z = y;
      z[i] += Rational(m) * hr;
      return g(z);
    };
    const Rational d = (Rational(8) * (at(1) - at(-1)) - (at(2) - at(-2))) / (Rational(12) * hr);
    out[i] = d.get_d();
  }
  return out;
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::size_t monotone_violations(const PathTrace& t) {
  std::size_t bad = 0;
  for (std::size_t i = 1; i < t.samples.size(); ++i) bad += !(t.samples[i].g > t.samples[i - 1].g);
  return bad;
}

}  // namespace

int main() {
  Report report;
  std::vector<Case> cases;
  for (const char* name : {"toy", "example1", "example2", "example3", "example4"})
    cases.push_back({name, testing::load_poly(name), std::nullopt, 0.0, {}});

  for (auto& c : cases) {
    const auto t0 = Clock::now();
    try {
      c.map = build_roadmap(c.f);
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    c.build_seconds = seconds_since(t0);
    std::printf("built %s in %.1f s: %s\n", c.name.c_str(), c.build_seconds,
                c.map ? ("k = " + std::to_string(c.map->k())).c_str() : c.error.c_str());
    std::fflush(stdout);
  }
  const Case& toy = cases[0];

  // 1. toy pipeline
  {
    bool ok = toy.map.has_value();
    std::string why;
    if (ok) {
      const Roadmap& m = *toy.map;
      const auto& att = m.attempts;
      const bool centers = att.size() == 2 && att[0].c == Center{0, 0} && !att[0].report.ok() &&
                           att[1].c == Center{0, 1} && att[1].report.ok();
      const bool counts = m.rf.gamma() == 5 && att.back().roots == 5 && m.singular_of_f.size() == 1 && m.k() == 4;
      bool edges = m.matrix.A.count() == 2;
      std::vector<std::size_t> targets;
      for (std::size_t i = 0; i < m.k(); ++i)
        for (std::size_t j = 0; j < m.k(); ++j)
          if (m.matrix.A(i, j)) {
            edges &= m.R[i].morse_index == 1 && m.R[j].morse_index == 2;
            targets.push_back(j);
          }
      edges &= targets.size() == 2 && !m.matrix.M(targets[0], targets[1]);
      const auto classes = components(m.matrix.M);
      const bool classes_ok = classes.size() == 2 && classes[0].size() == 2 && classes[1].size() == 2;
      const bool fast = toy.build_seconds < 10.0;
      ok = centers && counts && edges && classes_ok && fast;
      why = "c=(0,0) rejected (" + std::string(to_string(att[0].report.cause)) + "), c=(0,1) accepted, gamma " +
            std::to_string(m.rf.gamma()) + ", roots " + std::to_string(att.back().roots) + ", singular " +
            std::to_string(m.singular_of_f.size()) + ", k " + std::to_string(m.k()) + ", A entries " +
            std::to_string(m.matrix.A.count()) + (edges ? " saddle->max in separate classes" : " (wrong pattern)") +
            ", classes " + std::to_string(classes.size()) + ", " + fmt(toy.build_seconds) + " s";
    } else {
      why = toy.error;
    }
    report.line(1, ok, why);
  }

  // 2. toy queries
  OracleRun toy_run;
  bool reference_query = false;
  if (toy.map) {
    const auto t0 = Clock::now();
    reference_query = query(*toy.map, testing::rpoint({"19/5", "-1/2"}), testing::rpoint({"-9/10", "-14/5"})).connected;
    toy_run = oracle_check(*toy.map, 6.0, 256, 2, 20, 101);
    const double secs = seconds_since(t0);
    report.line(2, reference_query && toy_run.agree == toy_run.pairs && secs < 30.0,
                std::string("reference pair ") + (reference_query ? "true" : "false") + ", oracle agreement " +
                    std::to_string(toy_run.agree) + "/" + std::to_string(toy_run.pairs) + ", " + fmt(secs) + " s");
  } else {
    report.line(2, false, "toy roadmap unavailable");
  }

  // 3. routing point counts
  {
    const std::size_t expect[] = {21, 47, 16, 20};
    bool ok = true;
    std::string why;
    for (int e = 0; e < 4; ++e) {
      const Case& c = cases[static_cast<std::size_t>(e) + 1];
      const std::size_t k = c.map ? c.map->k() : 0;
      ok &= k == expect[e];
      why += c.name + " k=" + std::to_string(k) + " (" + fmt(c.build_seconds) + " s)" + (e < 3 ? ", " : "");
    }
    report.line(3, ok, why);
  }

  // 4. oracle equivalence on the plane curves
  std::map<std::string, OracleRun> runs;
  {
    bool ok = cases[1].map && cases[2].map;
    std::string why;
    if (ok) {
      runs["example1"] = oracle_check(*cases[1].map, 1.5, 256, 4, 200, 201);
      runs["example2"] = oracle_check(*cases[2].map, 3.0, 256, 4, 200, 202);
      for (const auto& [name, r] : runs) {
        ok &= r.agree == r.pairs && r.pairs == 200 && r.refined_stable;
        why += name + " " + std::to_string(r.agree) + "/" + std::to_string(r.pairs) +
               (r.refined_stable ? " (refined oracle stable, " : " (refined oracle differs, ") + fmt(r.seconds) + " s) ";
      }
    } else {
      why = "roadmap unavailable";
    }
    report.line(4, ok, why);
  }

  // 5. derivative numerics
  {
    bool ok = true;
    double worst_grad = 0.0, worst_hess = 0.0;
    std::size_t checked = 0;
    std::mt19937_64 rng(301);
    for (const auto& c : cases) {
      if (!c.map) {
        ok = false;
        continue;
      }
      const RoutingFunction& rf = c.map->rf;
      std::size_t done = 0;
      for (int attempt = 0; attempt < 2000 && done < 100; ++attempt) {
        const auto x = testing::random_point(rng, rf.n(), -2.5, 2.5);
        const auto g = eval_grad_g(rf, x);
        const double gn = norm(g);
        if (!(gn > 1e-8)) continue;
        const auto d = exact_difference_gradient(rf, x, 1e-5);
        double diff = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) diff += (g[i] - d[i]) * (g[i] - d[i]);
        worst_grad = std::max(worst_grad, std::sqrt(diff) / gn);
        ++done;
      }
      ok &= done == 100;
      checked += done;
      for (const auto& rp : c.map->R) {
        const Eigen::MatrixXd Hc = eval_hess_g_at_critical(rf, rp.location, 1e-6).hess;
        const Eigen::MatrixXd Hg = eval_hess_g_general(rf, rp.location);
        worst_hess = std::max(worst_hess, (Hc - Hg).norm() / Hg.norm());
      }
    }
    ok &= worst_grad < 1e-6 && worst_hess < 1e-8;
    report.line(5, ok,
                std::to_string(checked) + " gradient samples, worst relative error " + fmt(worst_grad) +
                    "; worst Hessian discrepancy at routing points " + fmt(worst_hess));
  }

  // 6. monotone ascent on every accepted step
  {
    std::size_t traces = 0, steps = 0, bad = 0, rejected = 0;
    auto tally = [&](const PathTrace& t) {
      ++traces;
      steps += t.samples.size();
      bad += monotone_violations(t);
      rejected += t.monotone_rejections;
    };
    for (const auto& c : cases)
      if (c.map)
        for (const auto& st : c.map->traces) tally(st.trace);
    for (const auto* r : {&toy_run, &runs["example1"], &runs["example2"]})
      for (const auto& rec : r->records)
        for (const auto& t : rec.traces) tally(t);
    report.line(6, bad == 0,
                std::to_string(bad) + " violations over " + std::to_string(traces) + " traces and " +
                    std::to_string(steps) + " samples (" + std::to_string(rejected) + " proposals rejected)");
  }

  // 7. Morse structure
  {
    bool ok = true;
    std::string why;
    for (const auto& c : cases) {
      if (!c.map) {
        ok = false;
        continue;
      }
      const auto& m = *c.map;
      for (const auto& cls : components(m.matrix.M)) {
        bool has_max = false;
        for (auto i : cls) has_max |= m.R[i].morse_index == static_cast<int>(m.rf.n());
        ok &= has_max;
      }
    }
    double gmax = 0.0;
    std::size_t maxima = 0;
    if (toy.map) {
      for (auto id : local_maxima(toy.map->R)) gmax = std::max(gmax, toy.map->R[id].g_value);
      maxima = local_maxima(toy.map->R).size();
    }
    ok &= maxima == 2 && std::fabs(gmax - 2.185) <= 0.05 * 2.185;
    why = std::string(ok ? "every class holds a maximum" : "check failed") + "; toy maxima " +
          std::to_string(maxima) + ", largest g " + fmt(gmax, 5);
    report.line(7, ok, why);
  }

  // 8. robustness: half offset, half tolerances, oracle refined (checked in 4)
  {
    bool ok = true;
    std::size_t compared = 0, changed = 0;
    TracerConfig half;
    half.initial_offset_fraction *= 0.5;
    half.min_relative_rise *= 0.25;
    half.rel_tol *= 0.5;
    half.abs_tol *= 0.5;
    for (const auto& c : cases) {
      if (!c.map) {
        ok = false;
        continue;
      }
      try {
        const auto adj = build_adjacency(c.map->rf, c.map->R, c.map->zones, effective_tracer(*c.map, half));
        ++compared;
        if (!(adj.matrix.A == c.map->matrix.A)) {
          ++changed;
          std::printf("  %s: adjacency changed under halved settings\n", c.name.c_str());
        }
      } catch (const std::exception& e) {
        ok = false;
        std::printf("  %s: %s\n", c.name.c_str(), e.what());
      }
    }
    std::size_t queries = 0, flipped = 0;
    auto requery = [&](const Roadmap& m, const OracleRun& r) {
      for (const auto& rec : r.records) {
        ++queries;
        flipped += query(m, rec.p, rec.q, half).connected != rec.verdict;
      }
    };
    if (toy.map) requery(*toy.map, toy_run);
    if (cases[1].map) requery(*cases[1].map, runs["example1"]);
    if (cases[2].map) requery(*cases[2].map, runs["example2"]);
    bool oracle_stable = toy_run.refined_stable;
    for (const auto& [name, r] : runs) oracle_stable &= r.refined_stable;
    ok &= changed == 0 && flipped == 0 && oracle_stable;
    report.line(8, ok,
                std::to_string(compared) + " adjacency matrices recomputed, " + std::to_string(changed) +
                    " changed; " + std::to_string(queries) + " queries repeated, " + std::to_string(flipped) +
                    " flipped; refined oracles " + (oracle_stable ? "stable" : "unstable"));
  }

  std::printf("%s\n", report.all() ? "all criteria passed" : "some criteria failed");
  return report.all() ? 0 : 1;
}
