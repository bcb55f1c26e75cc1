#pragma once

// Tensor grids over a Domain, with axis-adjacency and the continuity modulus.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "cselect/domain.hpp"
#include "cselect/point.hpp"

namespace cselect {

struct GridNeighbor {
  std::size_t index;
  std::size_t axis;
  int direction;  // +1 or -1 along `axis`
  double spacing;
};

/// Lattice points of every domain box (axis-adjacent within a box) plus the
/// domain's isolated points. A domain point lying inside a box is inserted into
/// that box's axis coordinates, so it becomes an ordinary lattice point.
/// Points are sorted lexicographically, which fixes the output order.
class Grid {
 public:
  static Grid build(const Domain& domain, std::size_t per_axis) {
    if (per_axis < 2) throw PreconditionError("grid needs at least 2 points per axis");
    std::vector<std::vector<std::vector<double>>> axes;
    for (const auto& box : domain.boxes()) {
      std::vector<std::vector<double>> box_axes(domain.dim());
      for (std::size_t d = 0; d < domain.dim(); ++d) {
        auto& c = box_axes[d];
        if (box.lo[d] == box.hi[d]) {
          c.push_back(box.lo[d]);
        } else {
          for (std::size_t i = 0; i < per_axis; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(per_axis - 1);
            c.push_back(i + 1 == per_axis ? box.hi[d] : box.lo[d] + t * (box.hi[d] - box.lo[d]));
          }
        }
      }
      for (const auto& p : domain.points()) {
        bool inside = true;
        for (std::size_t d = 0; d < domain.dim() && inside; ++d)
          inside = box.lo[d] <= p[d] && p[d] <= box.hi[d];
        if (!inside) continue;
        for (std::size_t d = 0; d < domain.dim(); ++d) box_axes[d].push_back(p[d]);
      }
      for (auto& c : box_axes) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
      }
      axes.push_back(std::move(box_axes));
    }
    return Grid(domain, per_axis, std::move(axes));
  }

  /// Isolated points without adjacency, e.g. for graph sampling.
  static Grid from_points(std::size_t dim, std::vector<Point> points) {
    Grid g;
    g.dim_ = dim;
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    g.points_ = std::move(points);
    g.neighbors_.resize(g.points_.size());
    return g;
  }

  /// Every spacing halved; the coarse points are kept.
  Grid refined() const {
    auto axes = axes_;
    for (auto& box_axes : axes)
      for (auto& c : box_axes) {
        std::vector<double> finer;
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (i > 0) finer.push_back(0.5 * (c[i - 1] + c[i]));
          finer.push_back(c[i]);
        }
        c = std::move(finer);
      }
    return Grid(domain_, 2 * (per_axis_ - 1) + 1, std::move(axes));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t per_axis() const noexcept { return per_axis_; }
  const Domain& domain() const noexcept { return domain_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const noexcept { return points_; }
  std::span<const GridNeighbor> neighbors(std::size_t i) const { return neighbors_[i]; }

  double min_spacing() const {
    double s = kInf;
    for (const auto& ns : neighbors_)
      for (const auto& n : ns) s = std::min(s, n.spacing);
    return s;
  }
  double max_spacing() const {
    double s = 0.0;
    for (const auto& ns : neighbors_)
      for (const auto& n : ns) s = std::max(s, n.spacing);
    return s;
  }

  /// Off-grid probes at `fraction` of the way to each neighbor.
  std::vector<Point> probes(std::size_t i, double fraction) const {
    std::vector<Point> out;
    out.reserve(neighbors_[i].size());
    for (const auto& n : neighbors_[i]) {
      Point p = points_[i];
      p[n.axis] += fraction * (points_[n.index][n.axis] - p[n.axis]);
      out.push_back(std::move(p));
    }
    return out;
  }

 private:
  Grid() = default;

  Grid(const Domain& domain, std::size_t per_axis, std::vector<std::vector<std::vector<double>>> axes)
      : dim_(domain.dim()), per_axis_(per_axis), domain_(domain), axes_(std::move(axes)) {
    std::map<Point, std::size_t> index;
    std::vector<std::vector<GridNeighbor>> raw;
    auto intern = [&](const Point& p) {
      auto [it, fresh] = index.try_emplace(p, points_.size());
      if (fresh) {
        points_.push_back(p);
        raw.emplace_back();
      }
      return it->second;
    };
    auto link = [&](std::size_t a, std::size_t b, std::size_t axis, double spacing) {
      auto add = [&](std::size_t from, std::size_t to, int dir) {
        for (const auto& n : raw[from])
          if (n.index == to) return;
        raw[from].push_back({to, axis, dir, spacing});
      };
      add(a, b, +1);
      add(b, a, -1);
    };

    for (const auto& box_axes : axes_) {
      std::vector<std::size_t> shape(dim_);
      std::size_t total = 1;
      for (std::size_t d = 0; d < dim_; ++d) {
        shape[d] = box_axes[d].size();
        total *= shape[d];
      }
      std::vector<std::size_t> ids(total);
      std::vector<std::size_t> multi(dim_, 0);
      for (std::size_t flat = 0; flat < total; ++flat) {
        Point p(dim_);
        for (std::size_t d = 0; d < dim_; ++d) p[d] = box_axes[d][multi[d]];
        ids[flat] = intern(p);
        for (std::size_t d = dim_; d-- > 0;) {
          if (++multi[d] < shape[d]) break;
          multi[d] = 0;
        }
      }
      // row-major strides, last axis fastest
      std::vector<std::size_t> stride(dim_, 1);
      for (std::size_t d = dim_; d-- > 1;) stride[d - 1] = stride[d] * shape[d];
      for (std::size_t flat = 0; flat < total; ++flat)
        for (std::size_t d = 0; d < dim_; ++d) {
          const std::size_t coord = (flat / stride[d]) % shape[d];
          if (coord + 1 < shape[d]) {
            const double h = box_axes[d][coord + 1] - box_axes[d][coord];
            link(ids[flat], ids[flat + stride[d]], d, h);
          }
        }
    }
    for (const auto& p : domain_.points()) intern(p);

    // sort lexicographically and remap
    std::vector<std::size_t> order(points_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    std::vector<Point> sorted(points_.size());
    neighbors_.assign(points_.size(), {});
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted[i] = points_[order[i]];
      for (auto n : raw[order[i]]) {
        n.index = rank[n.index];
        neighbors_[i].push_back(n);
      }
    }
    points_ = std::move(sorted);
  }

  std::size_t dim_ = 0;
  std::size_t per_axis_ = 0;
  Domain domain_;
  std::vector<std::vector<std::vector<double>>> axes_;
  std::vector<Point> points_;
  std::vector<std::vector<GridNeighbor>> neighbors_;
};

/// Largest jump between axis-adjacent grid values.
inline double continuity_modulus(const Grid& grid, std::span<const double> values) {
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (const auto& n : grid.neighbors(i))
      if (n.index > i) m = std::max(m, std::abs(values[i] - values[n.index]));
  return m;
}

inline double continuity_modulus(const Grid& grid, std::span<const Point> values) {
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (const auto& n : grid.neighbors(i))
      if (n.index > i) m = std::max(m, distance(values[i], values[n.index]));
  return m;
}

/// Moduli on successively halved grids and their successive ratios.
struct ModulusStudy {
  std::vector<std::size_t> grid_sizes;
  std::vector<double> moduli;
  std::vector<double> ratios;

  /// A coarse modulus below `flat` counts as ratio 0 (the function is flat there).
  static constexpr double flat = 1e-12;

  void push(std::size_t size, double modulus) {
    if (!moduli.empty()) {
      const double prev = moduli.back();
      ratios.push_back(prev <= flat ? 0.0 : modulus / prev);
    }
    grid_sizes.push_back(size);
    moduli.push_back(modulus);
  }

  bool passed(double limit = 0.75) const {
    return std::all_of(ratios.begin(), ratios.end(), [&](double r) { return r <= limit; });
  }
};

}  // namespace cselect
