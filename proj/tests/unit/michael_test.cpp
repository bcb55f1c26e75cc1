#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cselect/michael.hpp"
#include "cselect/random.hpp"

using namespace cselect;

namespace {

const Domain kLine = Domain::interval(-1, 1);

Region where(std::string label, std::function<bool(const Point&)> test) { return {std::move(label), std::move(test)}; }

Stratification off_zero_then_zero() {
  return Stratification({where("off zero", [](const Point& x) { return x[0] != 0.0; }),
                         where("zero", [](const Point& x) { return x[0] == 0.0; })});
}

// ({x != 0} -> [0,2], {0} -> [1,2])
SetValuedMap two_stratum_map() {
  return SetValuedMap(kLine, 1,
                      {Piece{where("zero", [](const Point& x) { return x[0] == 0.0; }),
                             [](const Point&) { return ConvexBody::interval(1, 2); }},
                       Piece{Region::everywhere(), [](const Point&) { return ConvexBody::interval(0, 2); }}},
                      true, false);
}

SetValuedMap clamp_map(Domain d) {
  return SetValuedMap::from_rule(std::move(d), 1,
                                 [](const Point& x) { return ConvexBody::interval(x[0] - 1, x[0] + 1); });
}

double clamp_lns(double x) { return x > 1 ? x - 1 : (x < -1 ? x + 1 : 0.0); }

}  // namespace

TEST(LnsField, ConstantInterval) {
  const auto lns = lns_field(SetValuedMap::from_rule(kLine, 1, [](const Point&) { return ConvexBody::interval(1, 2); }));
  for (double x : {-1.0, 0.0, 0.7}) EXPECT_EQ(lns(Point{x})[0], 1.0);
}

TEST(LnsField, ClampAgainstDenseSamples) {
  const auto lns = lns_field(clamp_map(Domain::interval(-3, 3)));
  for (double x = -3; x <= 3; x += 0.25) {
    // brute force over samples of [x-1, x+1]
    double best = std::numeric_limits<double>::infinity(), arg = 0;
    for (int i = 0; i <= 8000; ++i) {
      const double y = x - 1 + i / 4000.0;
      if (std::abs(y) < best) best = std::abs(y), arg = y;
    }
    EXPECT_NEAR(lns(Point{x})[0], arg, 1e-3);
    EXPECT_EQ(lns(Point{x})[0], clamp_lns(x));
  }
}

TEST(LnsField, BallAgainstSamples) {
  const auto map = SetValuedMap::from_rule(Domain::interval(-3, 3), 2,
                                           [](const Point& x) { return ConvexBody::ball(Point{x[0], 0.0}, 1.0); });
  const auto lns = lns_field(map);
  Rng rng(13);
  for (double x : {-2.5, -1.0, -0.3, 0.0, 0.8, 2.0}) {
    const Point p = lns(Point{x});
    const ConvexBody body = map(Point{x});
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20000; ++i) best = std::min(best, norm(sample_point(body, rng)));
    EXPECT_LE(norm(p), best + 1e-12);
    EXPECT_NEAR(norm(p), best, 2e-2);
    if (std::abs(x) <= 1) {
      EXPECT_EQ(norm(p), 0.0);
    } else {
      EXPECT_NEAR(p[0], x * (1 - 1 / std::abs(x)), 1e-12);
      EXPECT_EQ(p[1], 0.0);
    }
  }
}

TEST(MichaelSelect, SingleStratumEqualsLnsExactly) {
  const auto map = clamp_map(Domain::interval(-3, 3));
  const Grid grid = Grid::build(map.domain(), 97);
  const auto res = michael_select(map, Stratification::single(), grid);
  const auto lns = lns_field(map);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(res.values[i][0], lns(grid.point(i))[0]);
    EXPECT_EQ(res.values[i][0], clamp_lns(grid.point(i)[0]));
  }
  EXPECT_TRUE(membership_audit(map, grid, res.values).passed());
}

TEST(MichaelSelect, ConstantMap) {
  const auto map = SetValuedMap::from_rule(kLine, 1, [](const Point&) { return ConvexBody::interval(1, 2); });
  const Grid grid = Grid::build(kLine, 17);
  for (const auto& v : michael_select(map, Stratification::single(), grid).values) EXPECT_EQ(v[0], 1.0);
}

TEST(MichaelSelect, TwoStratumExample) {
  const auto map = two_stratum_map();
  const Grid grid = Grid::build(kLine, 129);
  EXPECT_TRUE(lsc_audit(map, grid).passed());
  const auto res = michael_select(map, off_zero_then_zero(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i)[0], h = res.values[i][0];
    EXPECT_GE(h, x == 0.0 ? 1.0 : 0.0);
    EXPECT_LE(h, 2.0);
  }
  EXPECT_TRUE(membership_audit(map, grid, res.values).passed());
  EXPECT_TRUE(boundary_decay_audit(res.trace, grid).passed());
  EXPECT_TRUE(michael_modulus_study(map, off_zero_then_zero(), grid, 2).passed(0.75));
}

TEST(MichaelSelect, ClosureMatchesGridValues) {
  const auto map = two_stratum_map();
  const Grid grid = Grid::build(kLine, 65);
  const auto res = michael_select(map, off_zero_then_zero(), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.h(grid.point(i))[0], res.values[i][0], 1e-12);
}

TEST(MichaelSelect, CompressedExtensionPath) {
  const auto map = two_stratum_map();
  const Grid grid = Grid::build(kLine, 65);
  MichaelOptions opt;
  opt.compress_extension = true;
  const auto res = michael_select(map, off_zero_then_zero(), grid, opt);
  EXPECT_TRUE(membership_audit(map, grid, res.values).passed());
  EXPECT_GE(res.values[grid.size() / 2][0], 1.0);
}

TEST(MichaelSelect, ShiftedBallTwoStrata) {
  const Domain d = Domain::interval(-2, 2);
  const auto map = SetValuedMap::from_rule(d, 2, [](const Point& x) { return ConvexBody::ball(Point{x[0], 0.5}, 1); });
  const Stratification strat({where("right", [](const Point& x) { return x[0] > 0; }),
                              where("left", [](const Point& x) { return x[0] <= 0; })});
  const Grid grid = Grid::build(d, 129);
  const auto res = michael_select(map, strat, grid);
  EXPECT_TRUE(membership_audit(map, grid, res.values).passed());
  EXPECT_TRUE(michael_modulus_study(map, strat, grid, 2).passed(0.75));
}

TEST(MichaelSelect, RejectsNonLscMap) {
  const SetValuedMap grows(kLine, 1,
                           {Piece{where("zero", [](const Point& x) { return x[0] == 0.0; }),
                                  [](const Point&) { return ConvexBody::interval(0, 1); }},
                            Piece{Region::everywhere(), [](const Point&) { return ConvexBody::interval(0, 0); }}},
                           true, false);
  EXPECT_THROW(michael_select(grows, off_zero_then_zero(), Grid::build(kLine, 33)), PreconditionError);
  const SetValuedMap undeclared(kLine, 1, {Piece{Region::everywhere(), [](const Point&) { return ConvexBody::interval(0, 1); }}},
                                false, false);
  EXPECT_THROW(michael_select(undeclared, Stratification::single(), Grid::build(kLine, 33)), PreconditionError);
}

TEST(MichaelSelect, RejectsClosedFirstStratum) {
  const Stratification closed_first({where("zero", [](const Point& x) { return x[0] == 0.0; }),
                                     where("off zero", [](const Point& x) { return x[0] != 0.0; })});
  EXPECT_THROW(michael_select(two_stratum_map(), closed_first, Grid::build(kLine, 33)), PreconditionError);
}

TEST(BoundaryDecay, ConstantAfterShiftPasses) {
  const auto map = SetValuedMap::from_rule(kLine, 1, [](const Point&) { return ConvexBody::interval(0, 1); });
  const Grid grid = Grid::build(kLine, 33);
  const auto res = michael_select(map, off_zero_then_zero(), grid);
  const auto rep = boundary_decay_audit(res.trace, grid);
  EXPECT_TRUE(rep.passed());
  EXPECT_GT(rep.checked, 0u);
}

TEST(BoundaryDecay, SingleStratumIsVacuous) {
  const auto map = clamp_map(kLine);
  const Grid grid = Grid::build(kLine, 33);
  const auto rep = boundary_decay_audit(michael_select(map, Stratification::single(), grid).trace, grid);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.checked, 0u);
}

TEST(BoundaryDecay, ShiftedSelectionVanishesNearZero) {
  const Grid grid = Grid::build(kLine, 65);
  const auto res = michael_select(two_stratum_map(), off_zero_then_zero(), grid);
  const auto& L = res.trace.levels.front();
  double prev = std::numeric_limits<double>::infinity();
  for (double t = 0.5; t > 1e-6; t *= 0.5) {
    const double s = norm(L.shifted_selection(Point{t}));
    EXPECT_LE(s, prev + 1e-12);
    prev = s;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(Equivariance, LeastNormIsNotTranslationEquivariant) {
  // lns([-1,1]) = 0 but lns([-1,1] - 0.5) + 0.5 = 0.5: the identity cannot hold
  // for every constant shift.
  const auto body = ConvexBody::interval(-1, 1);
  EXPECT_EQ(least_norm_point(body)[0], 0.0);
  EXPECT_EQ(least_norm_point(translate(body, Point{-0.5}))[0] + 0.5, 0.5);
}
