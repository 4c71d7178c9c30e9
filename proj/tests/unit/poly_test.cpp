#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"

namespace sacon {
namespace {

using testing::rpoint;

MultiPoly random_poly(std::mt19937_64& rng, std::size_t n, int max_deg, int terms) {
  std::uniform_int_distribution<int> coef(-9, 9), deg(0, max_deg);
  MultiPoly p(n);
  for (int t = 0; t < terms; ++t) {
    Exponent e(n);
    for (auto& k : e) k = deg(rng);
    p.add_term(e, Rational(coef(rng), 1 + std::abs(coef(rng))));
  }
  return p;
}

TEST(Poly, ParsesAndExpands) {
  const MultiPoly p = parse_poly("x1^2 - 1", 2);
  EXPECT_EQ(p.terms().size(), 2u);
  EXPECT_EQ(p.coeff({2, 0}), 1);
  EXPECT_EQ(p.coeff({0, 0}), -1);
}

TEST(Poly, ToyPolynomialHasFiveTerms) {
  const MultiPoly f = parse_poly("-2*x1^2 + x1^4 - 2*x2^2 + 2*x1^2*x2^2 + x2^4", 2);
  EXPECT_EQ(f.terms().size(), 5u);
  EXPECT_EQ(f, testing::toy_poly());
  EXPECT_EQ(f.coeff({2, 2}), 2);
}

TEST(Poly, CancellationGivesZero) {
  const MultiPoly p = parse_poly("(x1+1)^2 - (x1^2+2*x1+1)", 2);
  EXPECT_TRUE(p.terms().empty());
  EXPECT_EQ(p.total_degree(), -1);
}

TEST(Poly, PrintParseRoundTrip) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 30; ++k) {
    const MultiPoly p = random_poly(rng, 3, 4, 6);
    const MultiPoly q = parse_poly(p.to_string(), 3);
    EXPECT_EQ(p, q);
    EXPECT_EQ(q.to_string(), p.to_string());
  }
}

TEST(Poly, AliasesAndRationalCoefficients) {
  EXPECT_EQ(parse_poly("x^2 + y - z/2", 3), parse_poly("x1^2 + x2 - 1/2*x3", 3));
  EXPECT_EQ(infer_nvars("x^2 + y"), 2u);
  EXPECT_EQ(infer_nvars("x1*x4 - 1"), 4u);
}

TEST(Poly, ParseErrorsCarryPosition) {
  try {
    parse_poly("x1 + * x2", 2);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(parse_poly("x3 + 1", 2), ParseError);
  EXPECT_THROW(parse_poly("x1 / x2", 2), ParseError);
}

TEST(Poly, ArithmeticBasics) {
  const MultiPoly x1 = MultiPoly::variable(2, 0);
  EXPECT_EQ(x1 * x1, parse_poly("x1^2", 2));
  const MultiPoly& f = testing::toy_poly();
  EXPECT_EQ(f + MultiPoly(2), f);
  EXPECT_EQ((f * f).eval(rpoint({"1", "1"})), 0);
  EXPECT_THROW(f + MultiPoly::variable(3, 0), DimensionMismatch);
}

TEST(Poly, PartialDerivatives) {
  EXPECT_EQ(parse_poly("x1^2 + x2^2", 2).partial(0), parse_poly("2*x1", 2));
  EXPECT_EQ(testing::toy_poly().partial(0), parse_poly("4*x1^3 - 4*x1 + 4*x1*x2^2", 2));
  EXPECT_TRUE(MultiPoly::constant(2, 7).partial(1).terms().empty());
  EXPECT_THROW(testing::toy_poly().partial(2), std::out_of_range);
}

TEST(Poly, ExactEvaluation) {
  const MultiPoly& f = testing::toy_poly();
  EXPECT_EQ(f.eval(rpoint({"0", "0"})), 0);
  EXPECT_EQ(f.eval(rpoint({"19/5", "-1/2"})), Rational(1864161, 10000));
  EXPECT_EQ(MultiPoly::constant(2, Rational(-3, 7)).eval(rpoint({"5", "2"})), Rational(-3, 7));
}

TEST(Poly, FloatEvaluationMatchesExact) {
  const MultiPoly& f = testing::toy_poly();
  for (const auto& p : {rpoint({"0", "0"}), rpoint({"19/5", "-1/2"}), rpoint({"1/3", "-7/4"})}) {
    const double exact = f.eval(p).get_d();
    const double fl = f.eval(std::span<const double>(to_double(p)));
    EXPECT_NEAR(fl, exact, 1e-12 * std::max(1.0, std::fabs(exact)));
  }
}

TEST(Poly, TotalDegree) {
  EXPECT_EQ(testing::toy_poly().total_degree(), 4);
  EXPECT_EQ(MultiPoly::constant(2, 5).total_degree(), 0);
  EXPECT_EQ(parse_poly("x1^3*x2^2", 2).total_degree(), 5);
}

TEST(Poly, SquarefreeCheck) {
  EXPECT_EQ(squarefree_check(testing::toy_poly()), SquarefreeStatus::verified);
  EXPECT_EQ(squarefree_check(parse_poly("(x1-1)^2", 2)), SquarefreeStatus::failed);
  EXPECT_EQ(squarefree_check(parse_poly("x1^2 + x2^2 + 1", 2)), SquarefreeStatus::verified);
  EXPECT_EQ(squarefree_check(parse_poly("(x1^2 + x2 - 3)^2*(x1 + 1)", 2)), SquarefreeStatus::failed);
  EXPECT_EQ(squarefree_check(parse_poly("x1^2 + x2^2 + x3^2 - 1", 3)), SquarefreeStatus::unverified);
}

TEST(PolyProperty, RingAxioms) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 40; ++k) {
    const MultiPoly a = random_poly(rng, 2, 3, 4), b = random_poly(rng, 2, 3, 4), c = random_poly(rng, 2, 3, 4);
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ(a * (b + c), a * b + a * c);
    EXPECT_EQ(a * b, b * a);
    EXPECT_TRUE((a - a).terms().empty());
  }
}

TEST(PolyProperty, PartialsCommute) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const MultiPoly p = random_poly(rng, 3, 4, 8);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.partial(i).partial(j), p.partial(j).partial(i));
  }
}

TEST(PolyProperty, EvaluationIsRingHomomorphism) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 40; ++k) {
    const MultiPoly a = random_poly(rng, 2, 3, 5), b = random_poly(rng, 2, 3, 5);
    const RationalPoint x{testing::random_rational(rng, -3, 3, 97), testing::random_rational(rng, -3, 3, 89)};
    EXPECT_EQ((a * b).eval(x), a.eval(x) * b.eval(x));
    EXPECT_EQ((a + b).eval(x), a.eval(x) + b.eval(x));
  }
}

TEST(PolyProperty, PipelinePolynomialsEvaluateConsistently) {
  std::mt19937_64 rng(8);
  for (const char* name : {"toy", "example1", "example2", "example3", "example4"}) {
    const MultiPoly f = testing::load_poly(name);
    const RoutingFunction rf(f, Center(f.nvars(), 0));
    std::vector<MultiPoly> polys{f, rf.U()};
    for (const auto& q : rf.family()) polys.push_back(q);
    for (const auto& p : polys)
      for (int k = 0; k < 100; ++k) {
        RationalPoint x(f.nvars());
        for (auto& c : x) c = testing::random_rational(rng, -10, 10, 64);
        const double exact = p.eval(x).get_d();
        // Relative to the term scale: cancellation makes the plain relative error meaningless.
        double scale = 0.0;
        const auto xd = to_double(x);
        for (const auto& [e, c] : p.terms()) {
          double t = std::fabs(c.get_d());
          for (std::size_t i = 0; i < e.size(); ++i) t *= std::pow(std::fabs(xd[i]), e[i]);
          scale += t;
        }
        EXPECT_LE(std::fabs(p.eval(std::span<const double>(xd)) - exact), 1e-10 * std::max(scale, 1.0)) << name;
      }
  }
}

TEST(Poly, RationalPointsRejectDecimals) {
  EXPECT_EQ(parse_rational_point("19/5,-1/2"), rpoint({"19/5", "-1/2"}));
  EXPECT_EQ(parse_rational("-6/4"), Rational(-3, 2));
  EXPECT_THROW(parse_rational("0.5"), ParseError);
  EXPECT_THROW(parse_rational("1e3"), ParseError);
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational_point("1,,2"), ParseError);
}

}  // namespace
}  // namespace sacon
