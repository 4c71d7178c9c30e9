#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sacon/pipeline.hpp"

namespace sacon {

inline constexpr int cache_schema_version = 1;
inline constexpr int trace_schema_version = 1;

class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

// JSON has no infinity; store it as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline json box_json(const Box& b) {
  json a = json::array();
  for (const auto& iv : b) a.push_back({iv.lo, iv.hi});
  return a;
}
inline Box box_from(const json& j) {
  Box b;
  for (const auto& iv : j) b.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  return b;
}

inline json matrix_json(const BoolMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) r.push_back(m(i, j) ? 1 : 0);
    rows.push_back(std::move(r));
  }
  return rows;
}
inline BoolMatrix matrix_from(const json& j) {
  BoolMatrix m(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j.size()) throw CacheError("matrix is not square");
    for (std::size_t k = 0; k < j.size(); ++k) m.set(i, k, j[i][k].get<int>() != 0);
  }
  return m;
}

}  // namespace detail

/// Settings that change the computed roadmap; a cache is reused only when these match.
inline nlohmann::json config_fingerprint(const PipelineConfig& c) {
  const auto& s = c.solver;
  const auto& t = c.tracer;
  return {
      {"solver",
       {{"box_budget", s.box_budget},
        {"live_box_cap", s.live_box_cap},
        {"undecided_volume_fraction", s.undecided_volume_fraction},
        {"min_width_fraction", s.min_width_fraction},
        {"inflate_width_fraction", s.inflate_width_fraction},
        {"suspect_width_fraction", s.suspect_width_fraction},
        {"singular_cluster_fraction", s.singular_cluster_fraction},
        {"max_region_doublings", s.max_region_doublings},
        {"exclusion_budget", s.exclusion_budget},
        {"far_radius_factor", s.far_radius_factor},
        {"singular_f_fraction", s.singular_f_fraction}}},
      {"tracer",
       {{"initial_offset_fraction", t.initial_offset_fraction},
        {"min_relative_rise", t.min_relative_rise},
        {"capture_factor", t.capture_factor},
        {"rel_tol", t.rel_tol},
        {"abs_tol", t.abs_tol},
        {"max_steps", t.max_steps},
        {"guard_radius", detail::number_or_null(t.guard_radius)}}},
      {"step_limit", c.step_limit},
      {"check_squarefree", c.check_squarefree}};
}

inline nlohmann::json to_json(const Roadmap& map, const PipelineConfig& cfg) {
  using detail::json;
  json j;
  j["schema"] = "sacon-routing-cache";
  j["schema_version"] = cache_schema_version;
  j["f"] = map.rf.f().to_string();
  j["nvars"] = map.rf.n();
  j["center"] = map.rf.center();
  j["gamma"] = map.rf.gamma();
  j["config"] = config_fingerprint(cfg);
  j["squarefree"] = to_string(map.squarefree);
  j["region"] = {{"half_widths", map.region.half_widths},
                 {"doublings", map.region.doublings},
                 {"certified_radius", detail::number_or_null(map.region.certified_radius)}};
  json rps = json::array();
  for (const auto& rp : map.R) {
    json e;
    e["id"] = rp.id;
    e["location"] = rp.location;
    e["radius"] = rp.radius;
    e["box"] = detail::box_json(rp.box);
    e["unique_box"] = detail::box_json(rp.unique_box);
    e["g"] = rp.g_value;
    e["morse_index"] = rp.morse_index;
    json pairs = json::array();
    for (const auto& p : rp.eigenpairs) pairs.push_back({{"value", p.value}, {"vector", p.vector}});
    e["eigenpairs"] = std::move(pairs);
    e["outgoing"] = rp.outgoing;
    e["capture"] = nullptr;
    for (const auto& z : map.zones)
      if (z.id == rp.id) e["capture"] = {{"box", detail::box_json(z.box)}, {"level", z.level}};
    rps.push_back(std::move(e));
  }
  j["routing_points"] = std::move(rps);
  json sing = json::array();
  for (const auto& s : map.singular_of_f)
    sing.push_back({{"location", s.center}, {"radius", s.radius}, {"certified", s.certified}});
  j["singular_points"] = std::move(sing);
  j["A"] = detail::matrix_json(map.matrix.A);
  j["M"] = detail::matrix_json(map.matrix.M);
  json att = json::array();
  for (const auto& a : map.attempts)
    att.push_back({{"center", a.c}, {"cause", to_string(a.report.cause)}, {"detail", a.report.detail}, {"roots", a.roots}});
  j["attempts"] = std::move(att);
  return j;
}

/**
 * Rebuilds a roadmap from its cache record. Throws CacheError on a schema
 * mismatch or when `f` or the configuration differ from the stored ones.
 */
inline Roadmap roadmap_from_json(const nlohmann::json& j, const MultiPoly* expect_f = nullptr,
                                 const PipelineConfig* expect_cfg = nullptr) {
  using detail::json;
  if (j.value("schema", "") != "sacon-routing-cache") throw CacheError("not a routing cache");
  if (j.value("schema_version", 0) != cache_schema_version) throw CacheError("unsupported cache schema version");
  const std::size_t n = j.at("nvars").get<std::size_t>();
  const MultiPoly f = parse_poly(j.at("f").get<std::string>(), n);
  if (expect_f && !(*expect_f == f)) throw CacheError("cache was built for a different polynomial");
  if (expect_cfg && config_fingerprint(*expect_cfg) != j.at("config")) throw CacheError("cache was built with different settings");
  Roadmap map{RoutingFunction(f, j.at("center").get<Center>()), {}, {}, {}, {}, {}, {}, {}, {}};
  if (map.rf.gamma() != j.at("gamma").get<int>()) throw CacheError("stored gamma does not match the polynomial");
  const std::string sq = j.value("squarefree", "unverified");
  map.squarefree = sq == "verified" ? SquarefreeStatus::verified
                   : sq == "failed" ? SquarefreeStatus::failed
                                    : SquarefreeStatus::unverified;
  const auto& reg = j.at("region");
  map.region.half_widths = reg.at("half_widths").get<std::vector<double>>();
  map.region.center.assign(n, 0.0);
  map.region.doublings = reg.at("doublings").get<int>();
  map.region.certified_radius = detail::number_or_inf(reg.at("certified_radius"));
  for (const auto& e : j.at("routing_points")) {
    RoutingPoint rp;
    rp.id = e.at("id").get<std::size_t>();
    if (rp.id != map.R.size()) throw CacheError("routing point ids are not consecutive");
    rp.location = e.at("location").get<std::vector<double>>();
    rp.radius = e.at("radius").get<double>();
    rp.box = detail::box_from(e.at("box"));
    rp.unique_box = detail::box_from(e.at("unique_box"));
    rp.g_value = e.at("g").get<double>();
    rp.morse_index = e.at("morse_index").get<int>();
    for (const auto& p : e.at("eigenpairs"))
      rp.eigenpairs.push_back({p.at("value").get<double>(), p.at("vector").get<std::vector<double>>()});
    rp.outgoing = e.at("outgoing").get<std::vector<std::vector<double>>>();
    if (!e.at("capture").is_null())
      map.zones.push_back({rp.id, detail::box_from(e["capture"].at("box")), e["capture"].at("level").get<double>()});
    map.R.push_back(std::move(rp));
  }
  for (const auto& s : j.at("singular_points")) {
    IsolatedRoot r;
    r.center = s.at("location").get<std::vector<double>>();
    r.radius = s.at("radius").get<double>();
    r.certified = s.at("certified").get<bool>();
    r.is_singular_of_f = true;
    map.singular_of_f.push_back(std::move(r));
  }
  map.matrix.A = detail::matrix_from(j.at("A"));
  map.matrix.M = detail::matrix_from(j.at("M"));
  map.matrix.k = map.R.size();
  if (map.matrix.A.size() != map.R.size() || map.matrix.M.size() != map.R.size())
    throw CacheError("matrix size differs from the routing point count");
  for (const auto& a : j.value("attempts", json::array())) {
    CenterAttempt at;
    at.c = a.at("center").get<Center>();
    at.roots = a.value("roots", std::size_t{0});
    const std::string cause = a.value("cause", "none");
    if (cause != "none") {
      const DegeneracyCause dc = cause == "positive_dimensional" ? DegeneracyCause::positive_dimensional
                                 : cause == "singular_hessian"   ? DegeneracyCause::singular_hessian
                                                                 : DegeneracyCause::unresolved_cluster;
      at.report = DegeneracyReport::degenerate(dc, a.value("detail", ""));
    }
    map.attempts.push_back(std::move(at));
  }
  return map;
}

inline void save_cache(const std::string& path, const Roadmap& map, const PipelineConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw CacheError("cannot write cache file " + path);
  out << to_json(map, cfg).dump(2) << '\n';
  if (!out) throw CacheError("failed writing cache file " + path);
}

inline Roadmap load_cache(const std::string& path, const MultiPoly* expect_f = nullptr,
                          const PipelineConfig* expect_cfg = nullptr) {
  std::ifstream in(path);
  if (!in) throw CacheError("cannot read cache file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CacheError(std::string("malformed cache file: ") + e.what());
  }
  try {
    return roadmap_from_json(j, expect_f, expect_cfg);
  } catch (const nlohmann::json::exception& e) {
    throw CacheError(std::string("malformed cache file: ") + e.what());
  }
}

/// Structured record of traced paths: per path its start, direction, terminal and samples.
inline nlohmann::json traces_json(const Roadmap& map, const std::vector<SaddleTrace>& saddle,
                                  const std::vector<std::pair<std::string, PathTrace>>& extra = {}) {
  using detail::json;
  auto path_json = [](const PathTrace& t) {
    json samples = json::array();
    for (const auto& s : t.samples) samples.push_back({{"x", s.point}, {"g", s.g}, {"grad_norm", s.grad_norm}});
    return json{{"start", t.start},
                {"direction", t.init_dir},
                {"status", to_string(t.status)},
                {"terminal_id", t.terminal_id},
                {"samples", std::move(samples)}};
  };
  json j;
  j["schema"] = "sacon-trace-export";
  j["schema_version"] = trace_schema_version;
  j["f"] = map.rf.f().to_string();
  j["center"] = map.rf.center();
  json paths = json::array();
  for (const auto& st : saddle) {
    json p = path_json(st.trace);
    p["kind"] = "saddle";
    p["start_id"] = st.from;
    p["outgoing_index"] = st.dir;
    p["sign"] = st.sign;
    paths.push_back(std::move(p));
  }
  for (const auto& [label, t] : extra) {
    json p = path_json(t);
    p["kind"] = "query";
    p["label"] = label;
    paths.push_back(std::move(p));
  }
  j["paths"] = std::move(paths);
  return j;
}

}  // namespace sacon
