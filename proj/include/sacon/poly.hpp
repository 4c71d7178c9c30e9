#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sacon {

using Rational = mpq_class;
using Exponent = std::vector<int>;
/// Exact point in Q^n.
using RationalPoint = std::vector<Rational>;

/// Graded lexicographic order, larger monomials first; x1 > x2 > ... .
struct GlexGreater {
  bool operator()(const Exponent& a, const Exponent& b) const {
    const int da = std::accumulate(a.begin(), a.end(), 0);
    const int db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da > db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * @brief Sparse multivariate polynomial with exact rational coefficients.
 *
 * Terms are kept in a map keyed by dense exponent vectors; zero coefficients
 * are never stored, so the zero polynomial is the empty map. Variables are
 * indexed from 0 in the API and printed as x1..xn.
 */
class MultiPoly {
 public:
  using TermMap = std::map<Exponent, Rational, GlexGreater>;

  explicit MultiPoly(std::size_t nvars = 0) : nvars_(nvars) {}

  static MultiPoly constant(std::size_t nvars, const Rational& c) {
    MultiPoly p(nvars);
    p.add_term(Exponent(nvars, 0), c);
    return p;
  }

  static MultiPoly variable(std::size_t nvars, std::size_t i) {
    if (i >= nvars) throw std::out_of_range("variable index out of range");
    MultiPoly p(nvars);
    Exponent e(nvars, 0);
    e[i] = 1;
    p.add_term(e, 1);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Coefficient of a monomial, zero when absent.
  Rational coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add_term(const Exponent& e, Rational c) {
    if (e.size() != nvars_) throw DimensionMismatch("exponent length differs from nvars");
    c.canonicalize();
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  /// Maximum total degree; -1 for the zero polynomial.
  int total_degree() const {
    if (terms_.empty()) return -1;
    return std::accumulate(terms_.begin()->first.begin(), terms_.begin()->first.end(), 0);
  }

  int degree_in(std::size_t i) const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[i]);
    return d;
  }

  /// Sum of the terms of total degree exactly k.
  MultiPoly homogeneous_part(int k) const {
    MultiPoly r(nvars_);
    for (const auto& [e, c] : terms_)
      if (std::accumulate(e.begin(), e.end(), 0) == k) r.terms_.emplace(e, c);
    return r;
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  MultiPoly& operator-=(const MultiPoly& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  MultiPoly& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator-(MultiPoly a) { return a *= Rational(-1); }
  friend MultiPoly operator*(MultiPoly a, const Rational& s) { return a *= s; }
  friend MultiPoly operator*(const Rational& s, MultiPoly a) { return a *= s; }

  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    a.check_same(b);
    MultiPoly r(a.nvars_);
    Exponent e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    }
    return r;
  }
  MultiPoly& operator*=(const MultiPoly& o) { return *this = *this * o; }

  MultiPoly pow(int k) const {
    if (k < 0) throw std::invalid_argument("negative exponent");
    MultiPoly r = constant(nvars_, 1), base = *this;
    while (k > 0) {
      if (k & 1) r *= base;
      k >>= 1;
      if (k > 0) base *= base;
    }
    return r;
  }

  /// Formal partial derivative with respect to variable i (0-based).
  MultiPoly partial(std::size_t i) const {
    if (i >= nvars_) throw std::out_of_range("variable index out of range");
    MultiPoly r(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponent d = e;
      d[i] -= 1;
      r.add_term(d, c * e[i]);
    }
    return r;
  }

  Rational eval(std::span<const Rational> x) const {
    if (x.size() != nvars_) throw DimensionMismatch("point dimension differs from nvars");
    Rational s = 0;
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (std::size_t i = 0; i < nvars_; ++i)
        for (int k = 0; k < e[i]; ++k) t *= x[i];
      s += t;
    }
    return s;
  }

  double eval(std::span<const double> x) const {
    if (x.size() != nvars_) throw DimensionMismatch("point dimension differs from nvars");
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = c.get_d();
      for (std::size_t i = 0; i < nvars_; ++i)
        for (int k = 0; k < e[i]; ++k) t *= x[i];
      s += t;
    }
    return s;
  }

  std::string to_string() const;

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

 private:
  void check_same(const MultiPoly& o) const {
    if (o.nvars_ != nvars_) throw DimensionMismatch("polynomials have different nvars");
  }

  std::size_t nvars_;
  TermMap terms_;
};

inline std::string MultiPoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    const bool neg = c < 0;
    const Rational a = neg ? Rational(-c) : c;
    if (first) {
      if (neg) os << '-';
    } else {
      os << (neg ? " - " : " + ");
    }
    first = false;
    const bool monomial_is_one = std::all_of(e.begin(), e.end(), [](int k) { return k == 0; });
    bool wrote = false;
    if (a != 1 || monomial_is_one) {
      os << a.get_str();
      wrote = true;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (wrote) os << '*';
      os << 'x' << (i + 1);
      if (e[i] > 1) os << '^' << e[i];
      wrote = true;
    }
  }
  return os.str();
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " at position " + std::to_string(pos)), position_(pos) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary)*
// unary  := ('+'|'-') unary | power
// power  := atom ('^' integer)?
// atom   := integer | variable | '(' expr ')'
// Division is only allowed by a nonzero constant. Variables are x1..xn;
// x, y, z are accepted as aliases of x1, x2, x3.
class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t nvars) : s_(text), n_(nvars) {}

  MultiPoly parse() {
    MultiPoly p = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  MultiPoly expr() {
    MultiPoly r = term();
    for (;;) {
      if (accept('+')) r += term();
      else if (accept('-')) r -= term();
      else return r;
    }
  }

  MultiPoly term() {
    MultiPoly r = unary();
    for (;;) {
      if (accept('*')) {
        r *= unary();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        MultiPoly d = unary();
        if (d.total_degree() != 0) throw ParseError("syntax error: division by a non-constant", at);
        r *= Rational(1) / d.terms().begin()->second;
      } else {
        return r;
      }
    }
  }

  MultiPoly unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  MultiPoly power() {
    MultiPoly base = atom();
    if (accept('^')) {
      skip_ws();
      const std::size_t at = pos_;
      std::string digits = read_digits();
      if (digits.empty()) throw ParseError("syntax error: expected integer exponent", at);
      if (digits.size() > 4) throw ParseError("syntax error: exponent too large", at);
      return base.pow(std::stoi(digits));
    }
    return base;
  }

  std::string read_digits() {
    std::string d;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) d += s_[pos_++];
    return d;
  }

  MultiPoly atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      MultiPoly r = expr();
      if (!accept(')')) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string d = read_digits();
      if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
        fail("decimal numbers are not accepted; use integers or a/b");
      return MultiPoly::constant(n_, Rational(mpz_class(d)));
    }
    if (c == 'x' || c == 'y' || c == 'z') {
      const std::size_t at = pos_;
      ++pos_;
      std::size_t index = 0;
      if (c == 'x' && pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        std::string d = read_digits();
        if (d.size() > 6) throw ParseError("variable index out of range", at);
        index = std::stoul(d);
        if (index == 0) throw ParseError("variable index out of range: x0", at);
        index -= 1;
      } else {
        index = c == 'x' ? 0 : (c == 'y' ? 1 : 2);
      }
      if (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_])))
        fail("unknown identifier");
      if (index >= n_)
        throw ParseError("variable index out of range: x" + std::to_string(index + 1) + " with nvars=" +
                             std::to_string(n_),
                         at);
      return MultiPoly::variable(n_, index);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses and expands a polynomial in x1..xn into canonical sparse form.
inline MultiPoly parse_poly(std::string_view text, std::size_t nvars) {
  if (nvars == 0) throw std::invalid_argument("nvars must be positive");
  return detail::PolyParser(text, nvars).parse();
}

/// Largest variable index referenced by the text (1-based); aliases x,y,z count as 1,2,3.
inline std::size_t infer_nvars(std::string_view text) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    if (!boundary) continue;
    if (c == 'x') {
      std::size_t j = i + 1, v = 0;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])) && j - i < 7)
        v = v * 10 + static_cast<std::size_t>(text[j++] - '0');
      best = std::max(best, j == i + 1 ? std::size_t{1} : v);
    } else if (c == 'y') {
      best = std::max<std::size_t>(best, 2);
    } else if (c == 'z') {
      best = std::max<std::size_t>(best, 3);
    }
  }
  return best;
}

/// Parses a single exact rational "a" or "a/b"; decimals are rejected.
inline Rational parse_rational(std::string_view text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw ParseError("empty rational", 0);
  std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
  bool slash = false, digit = false;
  for (std::size_t k = i; k < t.size(); ++k) {
    if (std::isdigit(static_cast<unsigned char>(t[k]))) {
      digit = true;
    } else if (t[k] == '/' && !slash && digit && k + 1 < t.size()) {
      slash = true;
      digit = false;
    } else {
      throw ParseError("invalid rational '" + t + "' (decimals are not accepted)", k);
    }
  }
  if (!digit) throw ParseError("invalid rational '" + t + "'", t.size());
  if (t[0] == '+') t.erase(0, 1);
  Rational r(t);
  if (r.get_den() == 0) throw ParseError("zero denominator in '" + t + "'", 0);
  r.canonicalize();
  return r;
}

/// Parses "a/b,c/d,..." into an exact point.
inline RationalPoint parse_rational_point(std::string_view text) {
  RationalPoint p;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    p.push_back(parse_rational(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return p;
}

inline std::vector<double> to_double(std::span<const Rational> x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].get_d();
  return r;
}

}  // namespace sacon
