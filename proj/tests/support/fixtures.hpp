#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "sacon.hpp"

#ifndef SACON_DATA_DIR
#error "SACON_DATA_DIR must point at the polynomial data directory"
#endif

namespace sacon::testing {

inline std::string read_text(const std::string& name) {
  std::ifstream in(std::string(SACON_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing data file " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Polynomial from data/<name>.poly, with nvars inferred from the text.
inline MultiPoly load_poly(const std::string& name) {
  const std::string text = read_text(name + ".poly");
  return parse_poly(text, std::max<std::size_t>(2, infer_nvars(text)));
}

inline const MultiPoly& toy_poly() {
  static const MultiPoly f = load_poly("toy");
  return f;
}

/// The toy roadmap, built once per test binary.
inline const Roadmap& toy_roadmap() {
  static const Roadmap map = build_roadmap(toy_poly());
  return map;
}

inline RationalPoint rpoint(std::initializer_list<const char*> coords) {
  RationalPoint p;
  for (const char* c : coords) p.push_back(parse_rational(c));
  return p;
}

/// Uniform rational in [lo, hi] with the given denominator.
inline Rational random_rational(std::mt19937_64& rng, double lo, double hi, long den) {
  std::uniform_int_distribution<long> d(static_cast<long>(std::ceil(lo * den)), static_cast<long>(std::floor(hi * den)));
  Rational r(d(rng), den);
  r.canonicalize();
  return r;
}

inline std::vector<double> random_point(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace sacon::testing
