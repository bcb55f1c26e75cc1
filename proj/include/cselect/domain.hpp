#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cselect/error.hpp"
#include "cselect/geometry.hpp"
#include "cselect/point.hpp"

namespace cselect {

/// A finite union of closed axis-aligned boxes and isolated points in R^n.
/// Used both for domains E and for the closed sets fed to distance functions.
class Domain {
 public:
  Domain() = default;
  Domain(std::size_t dim, std::vector<AxisBox> boxes, std::vector<Point> points)
      : dim_(dim), boxes_(std::move(boxes)), points_(std::move(points)) {
    if (dim_ == 0) throw DimensionError("domain of dimension 0");
    for (const auto& b : boxes_) {
      if (b.lo.size() != dim_ || b.hi.size() != dim_) throw DimensionError("domain box has wrong dimension");
      if (!b.lo.is_finite() || !b.hi.is_finite()) throw PreconditionError("domain box must be finite");
      for (std::size_t d = 0; d < dim_; ++d)
        if (b.lo[d] > b.hi[d]) throw PreconditionError("domain box with lo > hi on axis " + std::to_string(d));
    }
    for (const auto& p : points_) {
      if (p.size() != dim_) throw DimensionError("domain point has wrong dimension");
      if (!p.is_finite()) throw PreconditionError("domain point must be finite");
    }
  }

  static Domain interval(double lo, double hi) { return Domain(1, {AxisBox{Point{lo}, Point{hi}}}, {}); }
  static Domain box(Point lo, Point hi) {
    const std::size_t n = lo.size();
    return Domain(n, {AxisBox{std::move(lo), std::move(hi)}}, {});
  }
  static Domain finite(std::size_t dim, std::vector<Point> points) { return Domain(dim, {}, std::move(points)); }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<AxisBox>& boxes() const noexcept { return boxes_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  bool empty() const noexcept { return boxes_.empty() && points_.empty(); }

  bool contains(const Point& x) const { return distance(x) == 0.0; }

  /// Exact Euclidean distance; +inf for the empty set.
  double distance(const Point& x) const {
    if (x.size() != dim_) throw DimensionError("domain distance: dimension mismatch");
    double best_sq = kInf;
    for (const auto& b : boxes_) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double e = x[d] < b.lo[d] ? b.lo[d] - x[d] : (x[d] > b.hi[d] ? x[d] - b.hi[d] : 0.0);
        s += e * e;
      }
      best_sq = std::min(best_sq, s);
    }
    for (const auto& p : points_) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        const double e = x[d] - p[d];
        s += e * e;
      }
      best_sq = std::min(best_sq, s);
    }
    return std::sqrt(best_sq);
  }

  /// True iff the two sets share a point (exact for boxes and points).
  bool intersects(const Domain& other) const {
    for (const auto& p : other.points_)
      if (contains(p)) return true;
    for (const auto& p : points_)
      if (other.contains(p)) return true;
    for (const auto& a : boxes_)
      for (const auto& b : other.boxes_) {
        bool overlap = true;
        for (std::size_t d = 0; d < dim_ && overlap; ++d)
          overlap = a.lo[d] <= b.hi[d] && b.lo[d] <= a.hi[d];
        if (overlap) return true;
      }
    return false;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<AxisBox> boxes_;
  std::vector<Point> points_;
};

}  // namespace cselect
