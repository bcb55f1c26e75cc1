#pragma once

// Distance-to-set functions, two-set separators and a bounded continuous
// extension operator (Hausdorff's metric formula).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "cselect/domain.hpp"
#include "cselect/error.hpp"
#include "cselect/fields.hpp"

namespace cselect {

/// A closed subset of R^n: finite union of closed boxes and points.
using ClosedSet = Domain;

inline double dist_to_set(const ClosedSet& a, const Point& x) {
  if (a.empty()) throw PreconditionError("dist_to_set: empty set");
  return a.distance(x);
}

/// d1 / (d1 + d2) with d_i the distance to A_i: exactly 0 on A1, exactly 1 on
/// A2, strictly between elsewhere.
inline ScalarField separator(ClosedSet a1, ClosedSet a2, Domain x) {
  if (a1.empty() || a2.empty()) throw PreconditionError("separator: both sets must be nonempty");
  if (a1.dim() != a2.dim()) throw DimensionError("separator: sets of different dimension");
  if (a1.intersects(a2)) throw PreconditionError("separator: the two closed sets overlap");
  auto s1 = std::make_shared<const ClosedSet>(std::move(a1));
  auto s2 = std::make_shared<const ClosedSet>(std::move(a2));
  return ScalarField(
      std::move(x),
      [s1, s2](const Point& p) {
        const double d1 = s1->distance(p);
        const double d2 = s2->distance(p);
        if (d1 + d2 == 0.0) throw PreconditionError("separator: point lies in both sets");
        return d1 / (d1 + d2);
      },
      Semicontinuity::continuous, "separator");
}

struct ExtensionSearch {
  std::size_t samples = 16;  // uniform samples per axis before golden refinement
  double tol = 1e-10;        // golden-section stopping width
};

/// Bounded continuous extension of f from a closed set A to all of R^n.
///
/// With f rescaled affinely onto [1, 2] as f~, a point x outside A gets
///   F(x) = inf_{a in A} [ f~(a) + |x - a| / d(x, A) ] - 1,
/// and F = f~ on A; the result is mapped back onto [lo, hi]. Any minimizer
/// lies within 2 d(x, A) of x, so the infimum over a box only searches the
/// box clipped to that cube.
class TietzeExtension {
 public:
  using Rule = std::function<double(const Point&)>;

  TietzeExtension(ClosedSet a, Rule f, double lo, double hi, ExtensionSearch search = {})
      : a_(std::move(a)), f_(std::move(f)), lo_(lo), hi_(hi), search_(search) {
    if (a_.empty()) throw PreconditionError("tietze_extend: empty set");
    if (!std::isfinite(lo_) || !std::isfinite(hi_))
      throw PreconditionError("tietze_extend: unbounded data (compress first)");
    if (lo_ > hi_) throw PreconditionError("tietze_extend: lo > hi");
    std::vector<double> values;
    values.reserve(a_.points().size());
    for (const auto& p : a_.points()) values.push_back(checked(f_(p)));
    index_points(a_.points(), std::move(values));
  }

  /// Extension of finitely many samples; bounds are the sample extremes.
  static TietzeExtension from_samples(std::size_t dim, std::vector<Point> points, std::vector<double> values) {
    if (points.size() != values.size()) throw PreconditionError("from_samples: size mismatch");
    if (points.empty()) throw PreconditionError("tietze_extend: empty set");
    double lo = kInf, hi = -kInf;
    for (double v : values) {
      if (!std::isfinite(v)) throw PreconditionError("tietze_extend: unbounded data (compress first)");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return TietzeExtension(dim, std::move(points), std::move(values), lo, hi);
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  const ClosedSet& set() const noexcept { return a_; }

  double operator()(const Point& x) const {
    if (x.size() != a_.dim()) throw DimensionError("tietze_extend: dimension mismatch");
    if (lo_ == hi_) return lo_;
    double d = point_distance(x);
    for (const auto& box : a_.boxes()) d = std::min(d, box_distance(box, x));
    if (d == 0.0) return value_on_set(x);

    const double reach = 2.0 * d * (1.0 + 1e-12);
    double best = kInf;
    auto first = std::lower_bound(pts_.begin(), pts_.end(), x[0] - reach,
                                  [](const Point& p, double key) { return p[0] < key; });
    for (auto it = first; it != pts_.end() && (*it)[0] <= x[0] + reach; ++it) {
      const double r = distance(x, *it);
      if (r > reach) continue;
      best = std::min(best, rescale(vals_[static_cast<std::size_t>(it - pts_.begin())]) + r / d);
    }
    for (const auto& box : a_.boxes()) best = std::min(best, box_infimum(box, x, d, reach));

    const double unit = std::clamp(best - 1.0, 1.0, 2.0) - 1.0;
    return std::clamp(lo_ + unit * (hi_ - lo_), lo_, hi_);
  }

 private:
  TietzeExtension(std::size_t dim, std::vector<Point> points, std::vector<double> values, double lo, double hi)
      : a_(Domain::finite(dim, points)), lo_(lo), hi_(hi) {
    index_points(points, std::move(values));
  }

  // Points sorted by first coordinate, so nearest-point and window queries
  // only touch a slab around x.
  void index_points(const std::vector<Point>& points, std::vector<double> values) {
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    pts_.reserve(points.size());
    vals_.reserve(points.size());
    for (std::size_t i : order) {
      pts_.push_back(points[i]);
      vals_.push_back(values[i]);
    }
  }

  double point_distance(const Point& x) const {
    if (pts_.empty()) return kInf;
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(pts_.begin(), pts_.end(), x[0], [](const Point& p, double key) { return p[0] < key; }) -
        pts_.begin());
    double best_sq = kInf;
    auto visit = [&](std::size_t i) {
      const double dx = pts_[i][0] - x[0];
      if (dx * dx > best_sq) return false;
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = pts_[i][k] - x[k];
        s += e * e;
      }
      best_sq = std::min(best_sq, s);
      return true;
    };
    for (std::size_t i = pos; i < pts_.size() && visit(i); ++i) {
    }
    for (std::size_t i = pos; i-- > 0 && visit(i);) {
    }
    return std::sqrt(best_sq);
  }

  static double box_distance(const AxisBox& b, const Point& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double e = x[k] < b.lo[k] ? b.lo[k] - x[k] : (x[k] > b.hi[k] ? x[k] - b.hi[k] : 0.0);
      s += e * e;
    }
    return std::sqrt(s);
  }

  double checked(double v) const {
    const double slack = 1e-12 * std::max(1.0, std::max(std::abs(lo_), std::abs(hi_)));
    if (!(v >= lo_ - slack && v <= hi_ + slack))
      throw PreconditionError("tietze_extend: value " + std::to_string(v) + " outside the declared bounds");
    return std::clamp(v, lo_, hi_);
  }

  double rescale(double v) const { return 1.0 + (v - lo_) / (hi_ - lo_); }

  double value_on_set(const Point& x) const {
    auto [first, last] = std::equal_range(pts_.begin(), pts_.end(), x);
    if (first != last) return vals_[static_cast<std::size_t>(first - pts_.begin())];
    if (!f_) {
      // distance rounded to zero next to a sample
      std::size_t best = 0;
      for (std::size_t i = 1; i < pts_.size(); ++i)
        if (distance(x, pts_[i]) < distance(x, pts_[best])) best = i;
      return vals_[best];
    }
    return checked(f_(x));
  }

  double box_infimum(const AxisBox& box, const Point& x, double d, double reach) const {
    const std::size_t n = x.size();
    Point lo(n), hi(n);
    for (std::size_t k = 0; k < n; ++k) {
      lo[k] = std::max(box.lo[k], x[k] - reach);
      hi[k] = std::min(box.hi[k], x[k] + reach);
      if (lo[k] > hi[k]) return kInf;
    }
    Point a(n);
    return nested_min(0, a, lo, hi, x, d);
  }

  // Minimizes over coordinate `axis` with the remaining coordinates minimized
  // recursively: uniform sampling, then golden section around the best sample.
  double nested_min(std::size_t axis, Point& a, const Point& lo, const Point& hi, const Point& x, double d) const {
    if (axis == a.size()) return rescale(checked(f_(a))) + distance(x, a) / d;
    auto g = [&](double t) {
      a[axis] = t;
      return nested_min(axis + 1, a, lo, hi, x, d);
    };
    if (lo[axis] == hi[axis]) return g(lo[axis]);

    const std::size_t k = std::max<std::size_t>(search_.samples, 2);
    const double step = (hi[axis] - lo[axis]) / static_cast<double>(k);
    // the nearest point of the box is always a candidate
    double best_t = std::clamp(x[axis], lo[axis], hi[axis]);
    double best = g(best_t);
    for (std::size_t i = 0; i <= k; ++i) {
      const double t = i == k ? hi[axis] : lo[axis] + step * static_cast<double>(i);
      const double v = g(t);
      if (v < best) {
        best = v;
        best_t = t;
      }
    }
    double left = std::max(lo[axis], best_t - step);
    double right = std::min(hi[axis], best_t + step);
    constexpr double inv_phi = 0.6180339887498949;
    double c = right - inv_phi * (right - left);
    double e = left + inv_phi * (right - left);
    double gc = g(c), ge = g(e);
    while (right - left > search_.tol) {
      if (gc < ge) {
        right = e;
        e = c;
        ge = gc;
        c = right - inv_phi * (right - left);
        gc = g(c);
      } else {
        left = c;
        c = e;
        gc = ge;
        e = left + inv_phi * (right - left);
        ge = g(e);
      }
    }
    return std::min({best, gc, ge});
  }

  ClosedSet a_;
  Rule f_;
  double lo_;
  double hi_;
  ExtensionSearch search_;
  std::vector<Point> pts_;
  std::vector<double> vals_;
};

/// Continuous extension of f from A to X with values in [lo, hi]; equals f on A.
inline ScalarField tietze_extend(const ScalarField& f, const ClosedSet& a, Domain x, double lo, double hi,
                                 ExtensionSearch search = {}) {
  if (f.tag() != Semicontinuity::continuous) throw PreconditionError("tietze_extend: f must be tagged continuous");
  auto rule = f.rule();
  auto ext = std::make_shared<const TietzeExtension>(
      a, [rule](const Point& p) { return rule(p); }, lo, hi, search);
  return ScalarField(std::move(x), [ext](const Point& p) { return (*ext)(p); }, Semicontinuity::continuous,
                     "extension");
}

}  // namespace cselect
