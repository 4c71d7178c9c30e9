#pragma once

#include <vector>

#include "sacon/poly.hpp"

namespace sacon {

enum class SquarefreeStatus { verified, unverified, failed };

inline const char* to_string(SquarefreeStatus s) {
  switch (s) {
    case SquarefreeStatus::verified: return "verified";
    case SquarefreeStatus::unverified: return "unverified";
    case SquarefreeStatus::failed: return "failed";
  }
  return "?";
}

namespace detail {

// Dense univariate polynomial over Q, index = degree, no trailing zeros.
using UPoly = std::vector<Rational>;
// Polynomial in x1 with coefficients in Q[x2], index = degree in x1.
using BPoly = std::vector<UPoly>;

inline void trim(UPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}
inline void trim(BPoly& a) {
  while (!a.empty() && a.back().empty()) a.pop_back();
}

inline UPoly umul(const UPoly& a, const UPoly& b) {
  if (a.empty() || b.empty()) return {};
  UPoly r(a.size() + b.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  trim(r);
  return r;
}

inline UPoly usub(UPoly a, const UPoly& b) {
  if (a.size() < b.size()) a.resize(b.size(), Rational(0));
  for (std::size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  trim(a);
  return a;
}

// Quotient and remainder over Q.
inline void udivmod(UPoly a, const UPoly& b, UPoly& q, UPoly& r) {
  q.assign(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Rational(0));
  while (!a.empty() && a.size() >= b.size()) {
    const std::size_t shift = a.size() - b.size();
    const Rational c = a.back() / b.back();
    q[shift] = c;
    for (std::size_t i = 0; i < b.size(); ++i) a[i + shift] -= c * b[i];
    trim(a);
  }
  trim(q);
  r = std::move(a);
}

inline UPoly ugcd(UPoly a, UPoly b) {
  while (!b.empty()) {
    UPoly q, r;
    udivmod(a, b, q, r);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    const Rational lc = a.back();
    for (auto& c : a) c /= lc;
  }
  return a;
}

inline UPoly uexact_div(const UPoly& a, const UPoly& b) {
  UPoly q, r;
  udivmod(a, b, q, r);
  return q;
}

inline BPoly to_bpoly(const MultiPoly& p) {
  BPoly r(static_cast<std::size_t>(std::max(0, p.degree_in(0)) + 1));
  for (const auto& [e, c] : p.terms()) {
    UPoly& u = r[static_cast<std::size_t>(e[0])];
    if (u.size() <= static_cast<std::size_t>(e[1])) u.resize(static_cast<std::size_t>(e[1]) + 1, Rational(0));
    u[static_cast<std::size_t>(e[1])] += c;
  }
  for (auto& u : r) trim(u);
  trim(r);
  return r;
}

inline UPoly content(const BPoly& a) {
  UPoly g;
  for (const auto& c : a) g = ugcd(g, c);
  return g;
}

inline BPoly primitive(const BPoly& a) {
  const UPoly c = content(a);
  BPoly r;
  for (const auto& u : a) r.push_back(uexact_div(u, c));
  trim(r);
  return r;
}

// Pseudo-remainder of a by b in x1 over Q[x2].
inline BPoly prem(BPoly a, const BPoly& b) {
  const UPoly& lb = b.back();
  while (!a.empty() && a.size() >= b.size()) {
    const std::size_t shift = a.size() - b.size();
    const UPoly la = a.back();
    for (auto& u : a) u = umul(u, lb);
    for (std::size_t i = 0; i < b.size(); ++i) a[i + shift] = usub(a[i + shift], umul(la, b[i]));
    trim(a);
  }
  return a;
}

// gcd in Q[x1, x2], up to a rational unit.
inline BPoly bgcd(const BPoly& a, const BPoly& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const UPoly cg = ugcd(content(a), content(b));
  BPoly p = primitive(a), q = primitive(b);
  if (p.size() < q.size()) std::swap(p, q);
  while (!q.empty() && q.size() > 1) {
    BPoly r = prem(p, q);
    p = std::move(q);
    q = r.empty() ? BPoly{} : primitive(r);
  }
  BPoly g;
  if (q.empty()) {
    g = p;
  } else {
    // q has degree 0 in x1 and is primitive, so the x1-part of the gcd is trivial
    g = BPoly{UPoly{Rational(1)}};
  }
  for (auto& u : g) u = umul(u, cg);
  trim(g);
  return g;
}

inline bool is_constant(const BPoly& a) { return a.size() <= 1 && (a.empty() || a[0].size() <= 1); }

}  // namespace detail

/**
 * Squarefreeness test via gcd(p, dp/dx1, ..., dp/dxn), which is constant iff
 * p has no repeated factor. Implemented exactly for n <= 2; for n >= 3 the
 * multivariate gcd is not attempted and the result is `unverified`.
 */
inline SquarefreeStatus squarefree_check(const MultiPoly& p) {
  if (p.is_zero()) return SquarefreeStatus::failed;
  if (p.nvars() > 2) return SquarefreeStatus::unverified;
  MultiPoly q = p;
  if (p.nvars() == 1) {
    // embed into two variables with a dummy second one
    MultiPoly e(2);
    for (const auto& [ex, c] : p.terms()) e.add_term({ex[0], 0}, c);
    q = e;
  }
  detail::BPoly g = detail::to_bpoly(q);
  for (std::size_t i = 0; i < q.nvars(); ++i) {
    g = detail::bgcd(g, detail::to_bpoly(q.partial(i)));
    if (detail::is_constant(g)) return SquarefreeStatus::verified;
  }
  return detail::is_constant(g) ? SquarefreeStatus::verified : SquarefreeStatus::failed;
}

}  // namespace sacon
