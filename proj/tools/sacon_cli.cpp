#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sacon.hpp"

namespace {

using nlohmann::json;
using namespace sacon;

// Process exit codes; see README.
enum Exit : int {
  exit_true = 0,
  exit_false = 1,
  exit_usage = 2,
  exit_input = 3,
  exit_not_squarefree = 4,
  exit_perturbation = 5,
  exit_trace = 6,
  exit_cache = 7,
  exit_internal = 8,
};

class CliError : public std::runtime_error {
 public:
  CliError(int code, std::string kind, const std::string& msg)
      : std::runtime_error(msg), code_(code), kind_(std::move(kind)) {}
  int code() const { return code_; }
  const std::string& kind() const { return kind_; }

 private:
  int code_;
  std::string kind_;
};

struct Options {
  std::string poly;
  std::string poly_file;
  std::size_t nvars = 0;
  std::string cache;
  std::string out;
  bool json_out = false;
  PipelineConfig cfg;
  std::vector<std::string> points;
};

void add_input_flags(CLI::App* app, Options& o) {
  auto* p = app->add_option("--poly", o.poly, "polynomial text, e.g. \"x1^2 + x2^2 - 1\"");
  auto* pf = app->add_option("--poly-file", o.poly_file, "file holding the polynomial text");
  p->excludes(pf);
  app->add_option("--nvars", o.nvars, "number of variables (default: inferred from the text, at least 2)");
}

void add_config_flags(CLI::App* app, Options& o) {
  auto& s = o.cfg.solver;
  auto& t = o.cfg.tracer;
  app->add_option("--max-steps", t.max_steps, "integrator step budget per trace")->capture_default_str();
  app->add_option("--step-limit", o.cfg.step_limit, "centers tried by the perturbation loop")->capture_default_str();
  app->add_option("--rel-tol", t.rel_tol, "relative local error tolerance of the integrator")->capture_default_str();
  app->add_option("--abs-tol", t.abs_tol, "absolute local error tolerance of the integrator")->capture_default_str();
  app->add_option("--offset-fraction", t.initial_offset_fraction,
                  "start offset from a routing point, relative to its isolation radius")
      ->capture_default_str();
  app->add_option("--min-rise", t.min_relative_rise, "minimum relative rise of g over the start offset")
      ->capture_default_str();
  app->add_option("--capture-factor", t.capture_factor, "stall capture radius in start offsets")->capture_default_str();
  app->add_option("--guard-radius", t.guard_radius, "abandon traces leaving [-G, G]^n (default: certified region)");
  app->add_option("--box-budget", s.box_budget, "subdivision boxes per solve")->capture_default_str();
  app->add_option("--live-box-cap", s.live_box_cap, "undecided boxes held at once")->capture_default_str();
  app->add_option("--volume-fraction", s.undecided_volume_fraction,
                  "stalled volume fraction read as positive-dimensional")
      ->capture_default_str();
  app->add_option("--max-doublings", s.max_region_doublings, "search region doublings")->capture_default_str();
  app->add_option("--singular-fraction", s.singular_f_fraction, "relative |f| threshold for singular candidates")
      ->capture_default_str();
  app->add_flag("!--no-squarefree-check", o.cfg.check_squarefree, "skip the exact squarefree test");
}

void add_output_flags(CLI::App* app, Options& o) { app->add_flag("--json", o.json_out, "machine-readable output"); }

std::optional<MultiPoly> read_poly(const Options& o) {
  std::string text = o.poly;
  if (!o.poly_file.empty()) {
    std::ifstream in(o.poly_file);
    if (!in) throw CliError(exit_input, "input", "cannot read polynomial file " + o.poly_file);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (text.empty()) return std::nullopt;
  const std::size_t n = o.nvars ? o.nvars : std::max<std::size_t>(2, infer_nvars(text));
  try {
    return parse_poly(text, n);
  } catch (const std::exception& e) {
    throw CliError(exit_usage, "parse", e.what());
  }
}

std::string roadmap_summary(const Roadmap& map) {
  std::ostringstream os;
  os << "center (";
  for (std::size_t i = 0; i < map.rf.center().size(); ++i) os << (i ? "," : "") << map.rf.center()[i];
  os << ")  gamma " << map.rf.gamma() << "  routing points " << map.k() << "  singular points "
     << map.singular_of_f.size() << "  components " << components(map.matrix.M).size();
  return os.str();
}

json summary_json(const Roadmap& map) {
  json classes = json::array();
  for (const auto& c : components(map.matrix.M)) classes.push_back(c);
  return {{"center", map.rf.center()},
          {"gamma", map.rf.gamma()},
          {"k", map.k()},
          {"singular_points", map.singular_of_f.size()},
          {"squarefree", to_string(map.squarefree)},
          {"classes", std::move(classes)}};
}

Roadmap build(const MultiPoly& f, const PipelineConfig& cfg) {
  try {
    return build_roadmap(f, cfg);
  } catch (const NotSquarefree& e) {
    throw CliError(exit_not_squarefree, "not_squarefree", e.what());
  } catch (const PerturbationExhausted& e) {
    throw CliError(exit_perturbation, "perturbation_exhausted", e.what());
  } catch (const TraceFailure& e) {
    throw CliError(exit_trace, "trace_failure", e.what());
  } catch (const std::invalid_argument& e) {
    throw CliError(exit_input, "input", e.what());
  }
}

// Loads the cache when it matches f and the settings; otherwise builds (and stores when a path is given).
Roadmap obtain(const Options& o, bool* rebuilt = nullptr) {
  const auto f = read_poly(o);
  if (rebuilt) *rebuilt = false;
  if (!o.cache.empty() && std::filesystem::exists(o.cache)) {
    try {
      return load_cache(o.cache, f ? &*f : nullptr, &o.cfg);
    } catch (const CacheError& e) {
      if (!f) throw CliError(exit_cache, "cache", e.what());
    }
  }
  if (!f) throw CliError(exit_usage, "usage", "need --poly, --poly-file or an existing --cache");
  Roadmap map = build(*f, o.cfg);
  if (rebuilt) *rebuilt = true;
  if (!o.cache.empty()) {
    try {
      save_cache(o.cache, map, o.cfg);
    } catch (const CacheError& e) {
      throw CliError(exit_cache, "cache", e.what());
    }
  }
  return map;
}

RationalPoint read_point(const std::string& s, std::size_t n) {
  RationalPoint p;
  try {
    p = parse_rational_point(s);
  } catch (const std::exception& e) {
    throw CliError(exit_usage, "parse", e.what());
  }
  if (p.size() != n)
    throw CliError(exit_input, "input", "point " + s + " has " + std::to_string(p.size()) + " coordinates, expected " +
                                            std::to_string(n));
  return p;
}

Resolution resolve(const Roadmap& map, const RationalPoint& p, const TracerConfig& tc) {
  try {
    return resolve_point(map.rf, map.R, map.zones, p, effective_tracer(map, tc));
  } catch (const PointOnHypersurface& e) {
    throw CliError(exit_input, "input", e.what());
  } catch (const TraceFailure& e) {
    throw CliError(exit_trace, "trace_failure", e.what());
  }
}

void write_text(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out);
  if (!out || !(out << text)) throw CliError(exit_input, "output", "cannot write " + o.out);
}

int cmd_solve(const Options& o) {
  Options opt = o;
  if (opt.cache.empty()) opt.cache = opt.out;
  if (opt.cache.empty()) throw CliError(exit_usage, "usage", "solve needs --cache or --out");
  if (!read_poly(opt)) throw CliError(exit_usage, "usage", "solve needs --poly or --poly-file");
  bool rebuilt = false;
  const Roadmap map = obtain(opt, &rebuilt);
  if (o.json_out) {
    json j = summary_json(map);
    j["cache"] = opt.cache;
    j["reused"] = !rebuilt;
    std::cout << j.dump() << '\n';
  } else {
    std::cout << roadmap_summary(map) << '\n' << (rebuilt ? "wrote " : "reused ") << opt.cache << '\n';
  }
  return exit_true;
}

int cmd_query(const Options& o) {
  const Roadmap map = obtain(o);
  const RationalPoint p = read_point(o.points.at(0), map.rf.n());
  const RationalPoint q = read_point(o.points.at(1), map.rf.n());
  const Resolution rp = resolve(map, p, o.cfg.tracer);
  const Resolution rq = p == q ? rp : resolve(map, q, o.cfg.tracer);
  const bool connected = map.matrix.M(rp.index, rq.index);
  if (o.json_out)
    std::cout << json{{"connected", connected}, {"p_index", rp.index}, {"q_index", rq.index}}.dump() << '\n';
  else
    std::cout << (connected ? "true" : "false") << '\n';
  return connected ? exit_true : exit_false;
}

int cmd_trace(const Options& o) {
  const Roadmap map = obtain(o);
  AdjacencyResult adj;
  try {
    adj = build_adjacency(map.rf, map.R, map.zones, effective_tracer(map, o.cfg.tracer));
  } catch (const TraceFailure& e) {
    throw CliError(exit_trace, "trace_failure", e.what());
  }
  std::vector<std::pair<std::string, PathTrace>> extra;
  for (const auto& s : o.points) {
    Resolution r = resolve(map, read_point(s, map.rf.n()), o.cfg.tracer);
    if (r.trace) extra.emplace_back(s, std::move(*r.trace));
  }
  write_text(o, traces_json(map, adj.traces, extra).dump(1) + "\n");
  return exit_true;
}

std::string matrix_text(const BoolMatrix& m) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << "  ";
    for (std::size_t j = 0; j < m.size(); ++j) os << (m(i, j) ? '1' : '0') << (j + 1 < m.size() ? " " : "");
    os << '\n';
  }
  return os.str();
}

int cmd_info(const Options& o) {
  if (o.cache.empty()) throw CliError(exit_usage, "usage", "info needs --cache");
  if (!std::filesystem::exists(o.cache)) throw CliError(exit_cache, "cache", "no cache at " + o.cache);
  const Roadmap map = [&] {
    try {
      return load_cache(o.cache);
    } catch (const CacheError& e) {
      throw CliError(exit_cache, "cache", e.what());
    }
  }();
  if (o.json_out) {
    json j = to_json(map, o.cfg);
    j.erase("config");
    j["classes"] = summary_json(map)["classes"];
    write_text(o, j.dump(1) + "\n");
    return exit_true;
  }
  std::ostringstream os;
  os << "f = " << map.rf.f().to_string() << '\n' << roadmap_summary(map) << '\n';
  os << "squarefree: " << to_string(map.squarefree) << '\n';
  os << "routing points:\n" << std::setprecision(10);
  for (const auto& rp : map.R) {
    os << "  r" << rp.id << "  (";
    for (std::size_t i = 0; i < rp.location.size(); ++i) os << (i ? ", " : "") << rp.location[i];
    os << ")  g " << rp.g_value << "  index " << rp.morse_index
       << (rp.morse_index == static_cast<int>(map.rf.n()) ? " (max)" : "") << "  eigenvalues";
    for (const auto& e : rp.eigenpairs) os << ' ' << e.value;
    os << '\n';
  }
  if (!map.singular_of_f.empty()) {
    os << "singular points of f:\n";
    for (const auto& s : map.singular_of_f) {
      os << "  (";
      for (std::size_t i = 0; i < s.center.size(); ++i) os << (i ? ", " : "") << s.center[i];
      os << ")\n";
    }
  }
  os << "A:\n" << matrix_text(map.matrix.A) << "M:\n" << matrix_text(map.matrix.M) << "classes:\n";
  for (const auto& c : components(map.matrix.M)) {
    os << "  {";
    for (std::size_t i = 0; i < c.size(); ++i) os << (i ? ", " : "") << 'r' << c[i];
    os << "}\n";
  }
  write_text(o, os.str());
  return exit_true;
}

int report(const Options& o, int code, const std::string& kind, const std::string& msg) {
  if (o.json_out)
    std::cout << json{{"error", {{"code", code}, {"kind", kind}, {"message", msg}}}}.dump() << '\n';
  else
    std::cerr << "error: " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectivity queries for the complement of a real hypersurface"};
  app.require_subcommand(1);
  Options o;

  auto* solve = app.add_subcommand("solve", "build the routing cache for a polynomial");
  add_input_flags(solve, o);
  add_config_flags(solve, o);
  add_output_flags(solve, o);
  solve->add_option("--cache", o.cache, "cache file to write or reuse");
  solve->add_option("--out", o.out, "alias of --cache");

  auto* query = app.add_subcommand("query", "decide whether two rational points are connected");
  add_input_flags(query, o);
  add_config_flags(query, o);
  add_output_flags(query, o);
  query->add_option("--cache", o.cache, "routing cache (built and stored when absent or stale)");
  query->add_option("points", o.points, "two points such as 19/5,-1/2 (use -- before points starting with '-')")
      ->expected(2)
      ->required();

  auto* tr = app.add_subcommand("trace", "export adjacency and query ascent paths as JSON");
  add_input_flags(tr, o);
  add_config_flags(tr, o);
  tr->add_option("--cache", o.cache, "routing cache");
  tr->add_option("--out", o.out, "output file (default stdout)");
  tr->add_option("--point", o.points, "also trace from this point (repeatable)");
  tr->add_flag("--json", o.json_out, "machine-readable errors");

  auto* info = app.add_subcommand("info", "describe a routing cache");
  info->add_option("--cache", o.cache, "routing cache")->required();
  info->add_option("--out", o.out, "output file (default stdout)");
  add_output_flags(info, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(o, exit_usage, "usage", e.what());
  }

  try {
    if (*solve) return cmd_solve(o);
    if (*query) return cmd_query(o);
    if (*tr) return cmd_trace(o);
    return cmd_info(o);
  } catch (const CliError& e) {
    return report(o, e.code(), e.kind(), e.what());
  } catch (const std::exception& e) {
    return report(o, exit_internal, "internal", e.what());
  }
}
