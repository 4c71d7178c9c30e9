#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/flood_oracle.hpp"

namespace sacon {
namespace {

using testing::FloodOracle;

TEST(FloodOracle, SeparatesToyComponents) {
  FloodOracle o(testing::toy_poly(), 4.0, 64, 6);
  const long inner = o.label(0.3, 0.2), outer = o.label(3.0, 3.0);
  ASSERT_GE(inner, 0);
  ASSERT_GE(outer, 0);
  EXPECT_NE(inner, outer);
  EXPECT_EQ(inner, o.label(-0.7, -0.5));
  EXPECT_EQ(outer, o.label(-3.5, -0.1));
  EXPECT_EQ(outer, o.label(0.1, -3.9));
  EXPECT_EQ(o.label(5.0, 0.0), -1);
}

// Two parabolas tangent at the origin: regions meet only at a point of the curve.
TEST(FloodOracle, DoesNotLeakThroughTacnode) {
  const MultiPoly f = parse_poly("(x2 - x1^2)*(x2 - 2*x1^2)", 2);
  FloodOracle o(f, 1.0, 64, 8);
  const long above = o.label(0.01, 0.5), below = o.label(0.01, -0.5);
  const long left = o.label(-0.5, 0.37), right = o.label(0.5, 0.37);
  for (long l : {above, below, left, right}) ASSERT_GE(l, 0);
  EXPECT_NE(above, below);
  EXPECT_NE(left, right);
  EXPECT_NE(left, above);
}

TEST(FloodOracle, RefinementKeepsLabelsConsistent) {
  FloodOracle coarse(testing::toy_poly(), 4.0, 64, 4), fine(testing::toy_poly(), 4.0, 64, 5);
  EXPECT_GT(fine.leaf_count(), coarse.leaf_count());
  const double pts[][2] = {{0.3, 0.2}, {-0.7, -0.5}, {3, 3}, {-3.5, -0.1}, {0.1, 1.2}};
  for (const auto& a : pts)
    for (const auto& b : pts)
      EXPECT_EQ(coarse.label(a[0], a[1]) == coarse.label(b[0], b[1]), fine.label(a[0], a[1]) == fine.label(b[0], b[1]));
}

}  // namespace
}  // namespace sacon
