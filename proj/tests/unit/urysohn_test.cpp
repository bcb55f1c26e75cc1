#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cselect/grid.hpp"
#include "cselect/urysohn.hpp"

using namespace cselect;
using S = Semicontinuity;

namespace {

ClosedSet interval_and_point() { return ClosedSet(1, {AxisBox{Point{0.0}, Point{1.0}}}, {Point{3.0}}); }

// Brute-force extension on a 1-D set given by dense samples: rescale onto
// [1, 2], take the infimum of f~(a) + |x - a| / d(x, A) over the samples,
// subtract 1 and map back.
double oracle_1d(const std::vector<double>& as, const std::vector<double>& fs, double lo, double hi, double x) {
  double d = std::numeric_limits<double>::infinity();
  for (double a : as) d = std::min(d, std::abs(x - a));
  if (d == 0.0) {
    for (std::size_t i = 0; i < as.size(); ++i)
      if (as[i] == x) return fs[i];
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < as.size(); ++i)
    best = std::min(best, 1.0 + (fs[i] - lo) / (hi - lo) + std::abs(x - as[i]) / d);
  return lo + (best - 2.0) * (hi - lo);
}

}  // namespace

TEST(DistToSet, Examples) {
  const auto a = interval_and_point();
  EXPECT_EQ(dist_to_set(a, Point{0.5}), 0.0);
  EXPECT_EQ(dist_to_set(a, Point{2.0}), 1.0);
  EXPECT_NEAR(dist_to_set(a, Point{2.7}), 0.3, 1e-15);
}

TEST(DistToSet, OneLipschitzOnGrid) {
  const ClosedSet a(2, {AxisBox{Point{0.0, 0.0}, Point{1.0, 0.5}}}, {Point{2.0, -1.0}});
  const Grid grid = Grid::build(Domain::box(Point{-2.0, -2.0}, Point{3.0, 3.0}), 41);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (const auto& nb : grid.neighbors(i)) {
      const Point& x = grid.point(i);
      const Point& y = grid.point(nb.index);
      EXPECT_LE(std::abs(dist_to_set(a, x) - dist_to_set(a, y)), distance(x, y));
    }
}

TEST(DistToSet, EmptySetThrows) { EXPECT_THROW(dist_to_set(ClosedSet(1, {}, {}), Point{0.0}), Error); }

TEST(Separator, Examples) {
  const auto sep = separator(Domain::finite(1, {Point{0.0}}), Domain::finite(1, {Point{1.0}}), Domain::interval(-1, 2));
  EXPECT_EQ(sep(Point{0.0}), 0.0);
  EXPECT_EQ(sep(Point{1.0}), 1.0);
  EXPECT_EQ(sep(Point{0.5}), 0.5);
  EXPECT_NEAR(sep(Point{0.25}), 0.25, 1e-12);
}

TEST(Separator, RangeAndExactnessOnSets) {
  const ClosedSet a1(1, {AxisBox{Point{-1.0}, Point{0.0}}}, {});
  const ClosedSet a2(1, {AxisBox{Point{1.0}, Point{2.0}}}, {Point{4.0}});
  const auto sep = separator(a1, a2, Domain::interval(-2, 5));
  const Grid grid = Grid::build(Domain::interval(-2, 5), 701);
  for (const auto& x : grid.points()) {
    const double v = sep(x);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (a1.contains(x)) {
      EXPECT_EQ(v, 0.0);
    }
    if (a2.contains(x)) {
      EXPECT_EQ(v, 1.0);
    }
  }
}

TEST(Separator, Rejections) {
  const auto a = Domain::finite(1, {Point{0.0}});
  EXPECT_THROW(separator(a, a, Domain::interval(-1, 1)), PreconditionError);
  EXPECT_THROW(separator(a, ClosedSet(1, {}, {}), Domain::interval(-1, 1)), Error);
  EXPECT_THROW(separator(a, Domain::finite(2, {Point{1.0, 1.0}}), Domain::interval(-1, 1)), Error);
}

TEST(Tietze, ConstantExtendsToItself) {
  const auto a = interval_and_point();
  const auto f = ScalarField::constant(a, 0.3);
  const auto g = tietze_extend(f, a, Domain::interval(-2, 5), 0.3, 0.3);
  const Grid grid = Grid::build(Domain::interval(-2, 5), 71);
  for (const auto& x : grid.points()) EXPECT_EQ(g(x), 0.3);
}

TEST(Tietze, TwoPoints) {
  const auto a = Domain::finite(1, {Point{0.0}, Point{1.0}});
  const auto f = ScalarField(a, [](const Point& x) { return x[0]; }, S::continuous);
  const auto g = tietze_extend(f, a, Domain::interval(-1, 2), 0.0, 1.0);
  EXPECT_EQ(g(Point{0.0}), 0.0);
  EXPECT_EQ(g(Point{1.0}), 1.0);
  EXPECT_NEAR(g(Point{0.5}), 0.0, 1e-10);
  const Grid grid = Grid::build(Domain::interval(-1, 2), 301);
  for (const auto& x : grid.points()) {
    EXPECT_GE(g(x), 0.0);
    EXPECT_LE(g(x), 1.0);
  }
}

TEST(Tietze, MatchesBruteForceFormula) {
  const auto a = interval_and_point();
  const auto f = ScalarField(a, [](const Point& x) { return x[0] == 3.0 ? 0.5 : x[0] * x[0]; }, S::continuous);
  const auto g = tietze_extend(f, a, Domain::interval(-1, 4), 0.0, 1.0);
  std::vector<double> as, fs;
  for (int i = 0; i <= 20000; ++i) {
    as.push_back(i / 20000.0);
    fs.push_back(as.back() * as.back());
  }
  as.push_back(3.0);
  fs.push_back(0.5);
  for (double x : {-1.0, -0.4, 1.2, 1.5, 2.0, 2.4, 2.9, 3.6, 4.0}) {
    const double want = oracle_1d(as, fs, 0.0, 1.0, x);
    EXPECT_LE(g(Point{x}), want + 1e-12) << x;
    EXPECT_NEAR(g(Point{x}), want, 2e-3) << x;
  }
}

TEST(Tietze, AgreesOnAAndStaysInRangeIn2D) {
  const ClosedSet a(2, {AxisBox{Point{0.0, 0.0}, Point{1.0, 1.0}}}, {Point{2.0, 2.0}});
  const auto f = ScalarField(a, [](const Point& x) { return x[0] == 2.0 ? -1.0 : x[0] * x[1]; }, S::continuous);
  const auto g = tietze_extend(f, a, Domain::box(Point{-1.0, -1.0}, Point{3.0, 3.0}), -1.0, 1.0);
  const Grid grid = Grid::build(Domain::box(Point{-1.0, -1.0}, Point{3.0, 3.0}), 21);
  for (const auto& x : grid.points()) {
    const double v = g(x);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
    if (a.contains(x)) {
      EXPECT_EQ(v, f(x));
    }
  }
}

TEST(Tietze, ContinuityModulusShrinks) {
  const ClosedSet a(1, {AxisBox{Point{0.0}, Point{1.0}}, AxisBox{Point{2.0}, Point{3.0}}}, {});
  const auto f = ScalarField(a, [](const Point& x) { return x[0] <= 1.0 ? x[0] : 3.0 - x[0]; }, S::continuous);
  const auto g = tietze_extend(f, a, Domain::interval(-1, 4), 0.0, 1.0);
  Grid grid = Grid::build(Domain::interval(-1, 4), 129);
  ModulusStudy study;
  for (int r = 0; r < 3; ++r, grid = grid.refined()) {
    std::vector<double> v;
    for (const auto& x : grid.points()) v.push_back(g(x));
    study.push(grid.size(), continuity_modulus(grid, v));
  }
  EXPECT_TRUE(study.passed(0.75));
}

TEST(Tietze, FromSamplesUsesDataBounds) {
  const auto ext = TietzeExtension::from_samples(1, {Point{0.0}, Point{1.0}, Point{2.0}}, {-2.0, 5.0, 1.0});
  EXPECT_EQ(ext(Point{1.0}), 5.0);
  for (double x = -3; x <= 5; x += 0.125) {
    EXPECT_GE(ext(Point{x}), -2.0);
    EXPECT_LE(ext(Point{x}), 5.0);
  }
  EXPECT_THROW(TietzeExtension::from_samples(1, {Point{0.0}}, {std::nan("")}), Error);
}

TEST(Tietze, Rejections) {
  const auto a = interval_and_point();
  const auto lower = ScalarField(a, [](const Point&) { return 0.0; }, S::lower);
  EXPECT_THROW(tietze_extend(lower, a, Domain::interval(-1, 4), 0, 1), PreconditionError);
  const auto out_of_range = ScalarField(a, [](const Point&) { return 2.0; }, S::continuous);
  EXPECT_THROW(tietze_extend(out_of_range, a, Domain::interval(-1, 4), 0, 1)(Point{0.5}), Error);
}
