#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include "sacon/interval.hpp"
#include "sacon/poly.hpp"

namespace sacon {

/// Powers x_i^k for k up to a fixed maximum; shared by all polynomials evaluated at one point.
template <typename T>
class PowerTable {
 public:
  PowerTable(std::span<const T> x, int max_degree)
      : stride_(static_cast<std::size_t>(max_degree) + 1), data_(x.size() * stride_) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      T* row = &data_[i * stride_];
      row[0] = T(1.0);
      for (std::size_t k = 1; k < stride_; ++k) {
        if constexpr (std::is_same_v<T, Interval>) {
          row[k] = sacon::pow(x[i], static_cast<int>(k));
        } else {
          row[k] = row[k - 1] * x[i];
        }
      }
    }
  }
  const T& operator()(std::size_t var, int k) const { return data_[var * stride_ + static_cast<std::size_t>(k)]; }

 private:
  std::size_t stride_;
  std::vector<T> data_;
};

/**
 * Floating and interval evaluator for a fixed MultiPoly. Coefficients are
 * stored both as nearest doubles and as enclosing intervals, so interval
 * evaluation encloses the exact polynomial, not its rounded copy.
 */
class CompiledPoly {
 public:
  CompiledPoly() = default;
  explicit CompiledPoly(const MultiPoly& p) : n_(p.nvars()), degree_(std::max(0, p.total_degree())) {
    for (const auto& [e, c] : p.terms()) {
      const double d = c.get_d();
      coef_.push_back(d);
      // mpq get_d truncates toward zero; one ulp either side encloses the exact value
      coef_iv_.push_back(Interval(detail::down(d), detail::up(d)));
      for (int k : e) exps_.push_back(k);
    }
  }

  std::size_t nvars() const { return n_; }
  int degree() const { return degree_; }

  double operator()(const PowerTable<double>& pw) const {
    double s = 0.0;
    const int* e = exps_.data();
    for (std::size_t t = 0; t < coef_.size(); ++t, e += n_) {
      double m = coef_[t];
      for (std::size_t i = 0; i < n_; ++i)
        if (e[i]) m *= pw(i, e[i]);
      s += m;
    }
    return s;
  }

  Interval operator()(const PowerTable<Interval>& pw) const {
    Interval s(0.0);
    const int* e = exps_.data();
    for (std::size_t t = 0; t < coef_.size(); ++t, e += n_) {
      Interval m = coef_iv_[t];
      for (std::size_t i = 0; i < n_; ++i)
        if (e[i]) m *= pw(i, e[i]);
      s += m;
    }
    return s;
  }

  double eval(std::span<const double> x) const { return (*this)(PowerTable<double>(x, degree_)); }
  Interval eval(std::span<const Interval> x) const { return (*this)(PowerTable<Interval>(x, degree_)); }

  /// Sum of |coefficient| * |monomial|, a scale for judging cancellation.
  double abs_sum(const PowerTable<double>& pw) const {
    double s = 0.0;
    const int* e = exps_.data();
    for (std::size_t t = 0; t < coef_.size(); ++t, e += n_) {
      double m = std::fabs(coef_[t]);
      for (std::size_t i = 0; i < n_; ++i)
        if (e[i]) m *= std::fabs(pw(i, e[i]));
      s += m;
    }
    return s;
  }

 private:
  std::size_t n_ = 0;
  int degree_ = 0;
  std::vector<double> coef_;
  std::vector<Interval> coef_iv_;
  std::vector<int> exps_;
};

/**
 * Exact evaluation at points with double coordinates. Every double is a
 * dyadic rational, so the value is computed in integer arithmetic and only
 * the final quotient is rounded, outward. Used where floating evaluation
 * loses everything to cancellation.
 */
class DyadicPoly {
 public:
  DyadicPoly() = default;
  explicit DyadicPoly(const MultiPoly& p) : n_(p.nvars()), degree_(std::max(0, p.total_degree())) {
    mpz_class den = 1;
    for (const auto& [e, c] : p.terms()) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den_mpz_t());
    den_ = den;
    for (const auto& [e, c] : p.terms()) {
      mpz_class v = c.get_num() * (den / c.get_den());
      num_.push_back(v);
      int deg = 0;
      for (int k : e) {
        exps_.push_back(k);
        deg += k;
      }
      term_degree_.push_back(deg);
    }
  }

  Interval eval(std::span<const double> x) const {
    // x_i = m_i * 2^-k with integer m_i and one shared k >= 0
    long k = 0;
    std::vector<int> ex(n_);
    std::vector<double> mant(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (x[i] == 0.0) continue;
      mant[i] = std::frexp(x[i], &ex[i]);
      k = std::max<long>(k, 53 - ex[i]);
    }
    std::vector<std::vector<mpz_class>> pw(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      mpz_class m = 0;
      if (x[i] != 0.0) {
        m = mpz_class(std::ldexp(mant[i], 53));  // exact: 53-bit integer
        m <<= static_cast<mp_bitcnt_t>(ex[i] - 53 + k);
      }
      pw[i].resize(static_cast<std::size_t>(degree_) + 1);
      pw[i][0] = 1;
      for (int d = 1; d <= degree_; ++d) pw[i][static_cast<std::size_t>(d)] = pw[i][static_cast<std::size_t>(d - 1)] * m;
    }
    mpz_class sum = 0, t;
    const int* e = exps_.data();
    for (std::size_t j = 0; j < num_.size(); ++j, e += n_) {
      t = num_[j];
      for (std::size_t i = 0; i < n_; ++i)
        if (e[i]) t *= pw[i][static_cast<std::size_t>(e[i])];
      t <<= static_cast<mp_bitcnt_t>(k * (degree_ - term_degree_[j]));
      sum += t;
    }
    // value = sum / (den * 2^(k * degree))
    long ea = 0, eb = 0;
    const Interval a = mantissa(sum, ea), b = mantissa(den_, eb);
    const long shift = -k * degree_ + ea - eb;
    const Interval q = a / b;
    return Interval(detail::down(std::ldexp(q.lo, static_cast<int>(shift))),
                    detail::up(std::ldexp(q.hi, static_cast<int>(shift))));
  }

 private:
  // z = m * 2^e with m enclosed by the returned interval
  static Interval mantissa(const mpz_class& z, long& e) {
    const double m = mpz_get_d_2exp(&e, z.get_mpz_t());
    if (m == 0.0) return Interval(0.0);
    return Interval(detail::down(m), detail::up(m));
  }

  std::size_t n_ = 0;
  int degree_ = 0;
  mpz_class den_ = 1;
  std::vector<mpz_class> num_;
  std::vector<int> exps_;
  std::vector<int> term_degree_;
};

}  // namespace sacon
