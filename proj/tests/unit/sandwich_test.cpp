#include <gtest/gtest.h>

#include <cmath>

#include "cselect/sandwich.hpp"

using namespace cselect;
using S = Semicontinuity;

namespace {

const Domain kLine = Domain::interval(-1, 1);

Region where(std::string label, std::function<bool(const Point&)> test) { return {std::move(label), std::move(test)}; }

Stratification off_zero_then_zero() {
  return Stratification({where("off zero", [](const Point& x) { return x[0] != 0.0; }),
                         where("zero", [](const Point& x) { return x[0] == 0.0; })});
}

ScalarField spike() {
  return ScalarField(kLine, [](const Point& x) { return x[0] == 0.0 ? 1.0 : 0.0; }, S::upper);
}

void expect_postconditions(const ScalarField& f, const ScalarField& g, const Grid& grid,
                           const std::vector<double>& h) {
  const auto rep = sandwich_postcondition_audit(f, g, grid, h);
  EXPECT_TRUE(rep.passed()) << (rep.passed() ? "" : rep.violations.front().what + " at " +
                                                        to_string(rep.violations.front().x));
}

}  // namespace

TEST(ReduceToBounded, Examples) {
  const auto p = reduce_to_bounded(ScalarField::constant(kLine, 0.0), ScalarField::constant(kLine, kInf));
  EXPECT_TRUE(p.compressed);
  EXPECT_EQ(p.f(Point{0.2}), 0.0);
  EXPECT_EQ(p.g(Point{0.2}), 1.0);
  const auto q = reduce_to_bounded(ScalarField(kLine, [](const Point& x) { return x[0]; }, S::upper),
                                   ScalarField::constant(kLine, kInf));
  EXPECT_DOUBLE_EQ(q.f(Point{1.0}), 0.7071067811865475);
  EXPECT_EQ(q.f.tag(), S::upper);
}

TEST(BaseMidpoint, Examples) {
  EXPECT_EQ(base_midpoint(1.0, 3.0), 2.0);
  EXPECT_EQ(base_midpoint(5.0, 5.0), 5.0);
  EXPECT_EQ(base_midpoint(-1.0, 1.0), 0.0);
  EXPECT_THROW(base_midpoint(-kInf, 1.0), PreconditionError);
}

TEST(EqualizerGlue, EmptyUIsZero) {
  const std::vector<double> f = {-1.0, -0.5, 0.0}, g = {1.0, 0.5, 0.0};
  const std::vector<char> u = {0, 0, 0};
  const auto glue = equalizer_glue(f, g, u);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(glue.h2[i], 0.0);
    EXPECT_FALSE(glue.in_x[i]);
  }
}

TEST(EqualizerGlue, EmptyXIsZeroOffU) {
  const std::vector<double> f = {-1.0, 0.2, -0.5}, g = {1.0, 0.9, 0.5};
  const std::vector<char> u = {0, 1, 0};
  const auto glue = equalizer_glue(f, g, u);
  EXPECT_EQ(glue.h2[0], 0.0);
  EXPECT_TRUE(std::isnan(glue.h2[1]));
  EXPECT_EQ(glue.h2[2], 0.0);
}

TEST(EqualizerGlue, TiesTakeF) {
  const std::vector<double> f = {3.0, -1.0}, g = {3.0, 1.0};
  const std::vector<char> u = {1, 0};
  const auto glue = equalizer_glue(f, g, u);
  EXPECT_TRUE(glue.in_x[0]);
  EXPECT_EQ(glue.h2[0], 3.0);
}

TEST(EqualizerGlue, PairNotStraddlingOffUThrows) {
  const std::vector<double> f = {0.5}, g = {1.0};
  const std::vector<char> u = {0};
  EXPECT_THROW(equalizer_glue(f, g, u), PreconditionError);
}

TEST(InteriorAdjust, Examples) {
  EXPECT_EQ(interior_adjust(0.3, 0.9, false, true, false, 1.0, 1.0), 0.0);
  EXPECT_EQ(interior_adjust(0.0, 4.0, true, true, false, 1.0, kInf), 1.0);
  EXPECT_EQ(interior_adjust(-4.0, 0.0, true, false, true, kInf, 3.0), -2.0);
  EXPECT_THROW(interior_adjust(-1.0, 1.0, true, false, false, 1.0, 1.0), PreconditionError);
}

TEST(DampToSafe, Examples) {
  EXPECT_EQ(damp_to_safe(0.7, 1.0, false), 0.7);
  EXPECT_EQ(damp_to_safe(0.7, 0.0, false), 0.0);
  EXPECT_EQ(damp_to_safe(2.0, 0.5, false), 1.0);
  EXPECT_EQ(damp_to_safe(2.0, 0.5, true), 2.0);
}

TEST(SandwichSelect, EqualEnvelopesForceH) {
  const auto f = ScalarField(kLine, [](const Point& x) { return x[0]; }, S::continuous);
  const Grid grid = Grid::build(kLine, 65);
  const auto res = sandwich_select(f, f, Stratification::single(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.values[i], grid.point(i)[0], 1e-12);
}

TEST(SandwichSelect, InfiniteEnvelopesGiveZero) {
  const auto f = ScalarField::constant(kLine, -kInf).with_tag(S::upper);
  const auto g = ScalarField::constant(kLine, kInf).with_tag(S::lower);
  const Grid grid = Grid::build(kLine, 33);
  const auto res = sandwich_select(f, g, Stratification::single(), grid);
  for (double v : res.values) EXPECT_EQ(v, 0.0);
  expect_postconditions(f, g, grid, res.values);
}

TEST(SandwichSelect, SpikeUnderConstant) {
  const auto f = spike();
  const auto g = ScalarField::constant(kLine, 2.0).with_tag(S::lower);
  const Grid grid = Grid::build(kLine, 129);
  const auto res = sandwich_select(f, g, off_zero_then_zero(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i)[0], h = res.values[i];
    if (x == 0.0) {
      EXPECT_GT(h, 1.0);
      EXPECT_LT(h, 2.0);
    } else {
      EXPECT_GT(h, 0.0);
      EXPECT_LT(h, 2.0);
    }
  }
  expect_postconditions(f, g, grid, res.values);
  EXPECT_TRUE(sandwich_trace_audit(res.trace, grid).passed());
}

TEST(SandwichSelect, ClosureMatchesGridValues) {
  const auto f = spike();
  const auto g = ScalarField(kLine, [](const Point& x) { return 2.0 + x[0] * x[0]; }, S::lower);
  const Grid grid = Grid::build(kLine, 65);
  const auto res = sandwich_select(f, g, off_zero_then_zero(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.h(grid.point(i)), res.values[i], 1e-12);
}

TEST(SandwichSelect, SingleStratumIsDecompressedMidpoint) {
  const auto f = ScalarField(kLine, [](const Point& x) { return -1.0 - x[0] * x[0]; }, S::continuous);
  const auto g = ScalarField(kLine, [](const Point& x) { return 3.0 + x[0]; }, S::continuous);
  const Grid grid = Grid::build(kLine, 33);
  const auto res = sandwich_select(f, g, Stratification::single(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& x = grid.point(i);
    const double want = decompress(0.5 * (compress(f(x)).value() + compress(g(x)).value()));
    EXPECT_NEAR(res.values[i], want, 1e-12);
  }
}

TEST(SandwichSelect, TwoStratumQuadraticBand) {
  const auto f = ScalarField(kLine, [](const Point& x) { return -x[0] * x[0]; }, S::continuous);
  const auto g = ScalarField(kLine, [](const Point& x) { return 2 * x[0] * x[0]; }, S::continuous);
  const Stratification strat({where("left", [](const Point& x) { return x[0] < 0.5; }),
                              where("right", [](const Point& x) { return x[0] >= 0.5; })});
  const Grid grid = Grid::build(kLine, 129);
  const auto res = sandwich_select(f, g, strat, grid);
  expect_postconditions(f, g, grid, res.values);
  EXPECT_TRUE(sandwich_trace_audit(res.trace, grid).passed());
  const auto study = sandwich_modulus_study(f, g, strat, grid, 2);
  EXPECT_TRUE(study.passed(0.75));
}

TEST(SandwichSelect, MonotoneCouplingInG) {
  // h computed for (f, g) stays valid for any g' >= g
  const auto f = spike();
  const auto g = ScalarField(kLine, [](const Point& x) { return 2.0 + x[0]; }, S::lower);
  const Grid grid = Grid::build(kLine, 65);
  const auto res = sandwich_select(f, g, off_zero_then_zero(), grid);
  for (double bump : {0.0, 1e-6, 0.5, 10.0}) {
    const auto g2 = ScalarField(kLine, [bump](const Point& x) { return 2.0 + x[0] + bump * (1 + x[0] * x[0]); },
                                S::lower);
    expect_postconditions(f, g2, grid, res.values);
  }
  expect_postconditions(f, ScalarField::constant(kLine, kInf).with_tag(S::lower), grid, res.values);
}

TEST(SandwichSelect, Rejections) {
  const auto up = ScalarField(kLine, [](const Point&) { return 0.0; }, S::upper);
  const auto low = ScalarField(kLine, [](const Point&) { return 1.0; }, S::lower);
  const Grid grid = Grid::build(kLine, 17);
  EXPECT_THROW(sandwich_select(low, up.with_tag(S::lower), Stratification::single(), grid), PreconditionError);
  EXPECT_THROW(sandwich_select(up, low.with_tag(S::upper), Stratification::single(), grid), PreconditionError);
  const auto too_big = ScalarField(kLine, [](const Point&) { return 2.0; }, S::upper);
  EXPECT_THROW(sandwich_select(too_big, low, Stratification::single(), grid), PreconditionError);
  const Stratification closed_first({where("zero", [](const Point& x) { return x[0] == 0.0; }),
                                     where("off zero", [](const Point& x) { return x[0] != 0.0; })});
  EXPECT_THROW(sandwich_select(up, low, closed_first, grid), PreconditionError);
}

TEST(SandwichTrace, TamperedRegionIsReported) {
  const auto f = spike();
  const auto g = ScalarField::constant(kLine, 2.0).with_tag(S::lower);
  const Grid grid = Grid::build(kLine, 33);
  auto res = sandwich_select(f, g, off_zero_then_zero(), grid);
  auto& L = res.trace.levels.front();
  ASSERT_FALSE(L.base);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (L.V[i]) {
      L.W[i] = !L.W[i];
      break;
    }
  EXPECT_FALSE(sandwich_trace_audit(res.trace, grid).passed());
}
