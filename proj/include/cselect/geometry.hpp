#pragma once

// Nonempty closed convex bodies in R^m: intervals, balls and H-polytopes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cselect/error.hpp"
#include "cselect/point.hpp"
#include "cselect/random.hpp"

namespace cselect {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo;
  double hi;
};

struct Ball {
  Point center;
  double radius;
};

/// The half-space {y : <normal, y> <= offset}.
struct HalfSpace {
  Point normal;
  double offset;
};

struct AxisBox {
  Point lo;
  Point hi;
};

struct ProjectionOptions {
  std::size_t max_cycles = 10000;
  double step_tol = 1e-10;
  double feasibility_tol = 1e-8;
};

namespace detail {

inline double row_violation(const HalfSpace& h, double norm_sq, const Point& y) {
  if (norm_sq == 0.0) return -h.offset;
  return (dot(h.normal, y) - h.offset) / std::sqrt(norm_sq);
}

// Solves the square system M u = r in place (Gaussian elimination with
// partial pivoting). Returns false when M is numerically singular.
inline bool solve_small(std::vector<std::vector<double>>& mat, std::vector<double>& rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(mat[i][col]) > std::abs(mat[piv][col])) piv = i;
    if (std::abs(mat[piv][col]) < 1e-14) return false;
    std::swap(mat[piv], mat[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = mat[i][col] / mat[col][col];
      for (std::size_t j = col; j < n; ++j) mat[i][j] -= f * mat[col][j];
      rhs[i] -= f * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) rhs[i] -= mat[i][j] * rhs[j];
    rhs[i] /= mat[i][i];
  }
  return true;
}

// Primal active-set refinement of a (near-)feasible point x towards the
// projection of z: minimizes |y - z|^2 subject to the rows, starting from the
// rows active at x. Returns nullopt if it runs into a degenerate working set.
inline std::optional<Point> active_set_refine(std::span<const HalfSpace> rows, const Point& z, Point x,
                                              double tol) {
  const std::size_t k = rows.size();
  const std::size_t m = z.size();
  std::vector<std::size_t> work;
  auto slack = [&](std::size_t i, const Point& p) { return rows[i].offset - dot(rows[i].normal, p); };
  // Gram solve for the working set: multipliers lam with G lam = A (x - z)
  auto gram_solve = [&](const Point& v, std::vector<double>& lam) {
    const std::size_t w = work.size();
    std::vector<std::vector<double>> g(w, std::vector<double>(w));
    lam.assign(w, 0.0);
    for (std::size_t r = 0; r < w; ++r) {
      for (std::size_t c = 0; c < w; ++c) g[r][c] = dot(rows[work[r]].normal, rows[work[c]].normal);
      lam[r] = dot(rows[work[r]].normal, v);
    }
    return solve_small(g, lam);
  };
  for (std::size_t i = 0; i < k; ++i) {
    if (work.size() == m) break;
    const double n = norm(rows[i].normal);
    if (n == 0.0 || std::abs(slack(i, x)) > tol * std::max(1.0, n)) continue;
    work.push_back(i);
    std::vector<double> lam;
    if (!gram_solve(Point(m, 0.0), lam)) work.pop_back();
  }
  for (std::size_t iter = 0; iter < 4 * (k + m) + 20; ++iter) {
    // step to the minimizer on the working set's affine hull
    std::vector<double> lam;
    if (!gram_solve(x - z, lam)) return std::nullopt;
    Point p = z - x;
    for (std::size_t r = 0; r < work.size(); ++r) p += lam[r] * rows[work[r]].normal;
    // p = -(x - z) + A^T lam, the component of z - x along the null space of A
    if (norm(p) <= 1e-15 * std::max(1.0, norm(x))) {
      // stationary: lam here are the multipliers of x - z = -A^T mu, mu = -lam
      std::size_t drop = work.size();
      double most = 0.0;
      for (std::size_t r = 0; r < work.size(); ++r)
        if (-lam[r] < most) {
          most = -lam[r];
          drop = r;
        }
      if (drop == work.size()) return x;
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }
    double alpha = 1.0;
    std::size_t block = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (std::find(work.begin(), work.end(), i) != work.end()) continue;
      const double rate = dot(rows[i].normal, p);
      if (rate <= 0.0) continue;
      const double a = std::max(0.0, slack(i, x)) / rate;
      if (a < alpha) {
        alpha = a;
        block = i;
      }
    }
    x += alpha * p;
    if (block < k) {
      if (work.size() == m) return std::nullopt;
      work.push_back(block);
    }
  }
  return std::nullopt;
}

// Dykstra's alternating projections onto the half-spaces, started at z.
// Converges to the Euclidean projection of z onto their intersection.
inline Point dykstra_project(std::span<const HalfSpace> rows, const Point& z,
                             const ProjectionOptions& opt) {
  const std::size_t k = rows.size();
  std::vector<double> norm_sq(k);
  for (std::size_t i = 0; i < k; ++i) norm_sq[i] = dot(rows[i].normal, rows[i].normal);

  Point x = z;
  std::vector<Point> corr(k, Point(z.size(), 0.0));
  Point y(z.size());
  Point prev(z.size());

  auto max_violation = [&](const Point& p) {
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) v = std::max(v, row_violation(rows[i], norm_sq[i], p));
    return v;
  };
  // Dykstra can creep along a facet in steps below step_tol while still far
  // from the optimum; an exact active-set pass finishes from its output and is
  // kept only if it is feasible and no farther from z.
  auto polish = [&](const Point& p) {
    auto q = active_set_refine(rows, z, p, 1e-7);
    if (q && max_violation(*q) <= std::max(max_violation(p), 1e-12) && distance(*q, z) <= distance(p, z)) return *q;
    return p;
  };

  for (std::size_t cycle = 0; cycle < opt.max_cycles; ++cycle) {
    prev = x;
    for (std::size_t i = 0; i < k; ++i) {
      if (norm_sq[i] == 0.0) continue;
      for (std::size_t d = 0; d < y.size(); ++d) y[d] = x[d] + corr[i][d];
      const double excess = dot(rows[i].normal, y) - rows[i].offset;
      x = y;
      if (excess > 0.0) {
        const double t = excess / norm_sq[i];
        for (std::size_t d = 0; d < x.size(); ++d) x[d] -= t * rows[i].normal[d];
      }
      for (std::size_t d = 0; d < y.size(); ++d) corr[i][d] = y[d] - x[d];
    }
    if (distance(x, prev) < opt.step_tol && max_violation(x) <= 0.1 * opt.feasibility_tol)
      return polish(x);
  }
  if (max_violation(x) <= opt.feasibility_tol) return polish(x);
  throw ConvergenceError("projection onto polytope did not converge within " +
                         std::to_string(opt.max_cycles) + " cycles");
}

struct LinearOptimum {
  bool unbounded = false;
  double value = 0.0;
  Point argmax;
};

// Maximizes <c, y> over {A y <= b} by the tableau simplex method with Bland's
// rule. Needs a feasible starting point; y = start + u - v with u, v >= 0 keeps
// the slack basis feasible, so no phase one is required.
inline LinearOptimum maximize_linear(std::span<const HalfSpace> rows, const Point& start,
                                     const Point& c) {
  const std::size_t m = start.size();
  const std::size_t k = rows.size();
  const std::size_t nvar = 2 * m + k;
  const std::size_t width = nvar + 1;
  constexpr double eps = 1e-12;

  std::vector<double> tab((k + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t col) -> double& { return tab[r * width + col]; };
  std::vector<std::size_t> basis(k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      at(r, j) = rows[r].normal[j];
      at(r, m + j) = -rows[r].normal[j];
    }
    at(r, 2 * m + r) = 1.0;
    at(r, nvar) = std::max(0.0, rows[r].offset - dot(rows[r].normal, start));
    basis[r] = 2 * m + r;
  }
  for (std::size_t j = 0; j < m; ++j) {
    at(k, j) = -c[j];
    at(k, m + j) = c[j];
  }

  for (std::size_t iter = 0; iter < 100000; ++iter) {
    std::size_t enter = nvar;
    for (std::size_t j = 0; j < nvar; ++j)
      if (at(k, j) < -eps) {
        enter = j;
        break;
      }
    if (enter == nvar) break;

    std::size_t leave = k;
    double best = kInf;
    for (std::size_t r = 0; r < k; ++r) {
      const double a = at(r, enter);
      if (a <= eps) continue;
      const double ratio = at(r, nvar) / a;
      if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < k && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == k) return {true, kInf, {}};

    const double piv = at(leave, enter);
    for (std::size_t j = 0; j < width; ++j) at(leave, j) /= piv;
    for (std::size_t r = 0; r <= k; ++r) {
      if (r == leave) continue;
      const double factor = at(r, enter);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) at(r, j) -= factor * at(leave, j);
    }
    basis[leave] = enter;
  }

  Point y = start;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t b = basis[r];
    if (b < m) y[b] += at(r, nvar);
    else if (b < 2 * m) y[b - m] -= at(r, nvar);
  }
  return {false, dot(c, y), std::move(y)};
}

}  // namespace detail

/// Intersection of finitely many half-spaces, verified nonempty at construction.
class HPolytope {
 public:
  /// `bounded` declares the polytope bounded; `sampling_box` is required for
  /// sampling-based oracles when it is not.
  HPolytope(std::size_t dim, std::vector<HalfSpace> rows, bool bounded,
            std::optional<AxisBox> sampling_box = std::nullopt,
            const ProjectionOptions& opt = {})
      : dim_(dim), rows_(std::move(rows)), bounded_(bounded), box_(std::move(sampling_box)), opt_(opt) {
    if (dim_ == 0) throw DimensionError("polytope of dimension 0");
    for (const auto& r : rows_) {
      if (r.normal.size() != dim_) throw DimensionError("polytope row normal has wrong dimension");
      if (!r.normal.is_finite() || !std::isfinite(r.offset))
        throw InfeasibleError("polytope row with non-finite data");
      if (dot(r.normal, r.normal) == 0.0 && r.offset < 0.0)
        throw InfeasibleError("polytope row 0 <= " + std::to_string(r.offset) + " is empty");
    }
    if (box_ && (box_->lo.size() != dim_ || box_->hi.size() != dim_))
      throw DimensionError("sampling box has wrong dimension");
    try {
      anchor_ = detail::dykstra_project(rows_, Point(dim_, 0.0), opt_);
    } catch (const ConvergenceError&) {
      throw InfeasibleError("polytope is empty (or too ill-conditioned to certify a point)");
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<HalfSpace>& rows() const noexcept { return rows_; }
  bool declared_bounded() const noexcept { return bounded_; }
  const std::optional<AxisBox>& sampling_box() const noexcept { return box_; }
  const ProjectionOptions& options() const noexcept { return opt_; }

  /// The point of least Euclidean norm, computed once at construction.
  const Point& least_norm_point() const noexcept { return anchor_; }

  HPolytope translated(const Point& v) const {
    HPolytope out = *this;
    for (auto& r : out.rows_) r.offset += dot(r.normal, v);
    if (out.box_) {
      out.box_->lo += v;
      out.box_->hi += v;
    }
    out.anchor_ = detail::dykstra_project(out.rows_, Point(dim_, 0.0), opt_);
    return out;
  }

  double max_violation(const Point& y) const {
    double v = -kInf;
    for (const auto& r : rows_) v = std::max(v, detail::row_violation(r, dot(r.normal, r.normal), y));
    return v;
  }

  detail::LinearOptimum maximize(const Point& c) const {
    return detail::maximize_linear(rows_, anchor_, c);
  }

 private:
  std::size_t dim_;
  std::vector<HalfSpace> rows_;
  bool bounded_;
  std::optional<AxisBox> box_;
  ProjectionOptions opt_;
  Point anchor_;
};

/// A nonempty closed convex subset of R^m; immutable once built.
class ConvexBody {
 public:
  using Variant = std::variant<Interval, Ball, HPolytope>;

  static ConvexBody interval(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi)) throw InfeasibleError("interval with NaN endpoint");
    if (lo > hi) throw InfeasibleError("interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty");
    if (lo == kInf || hi == -kInf) throw InfeasibleError("interval has no real point");
    return ConvexBody(Interval{lo, hi}, 1);
  }

  static ConvexBody ball(Point center, double radius) {
    if (center.size() == 0) throw DimensionError("ball of dimension 0");
    if (!center.is_finite() || !std::isfinite(radius)) throw InfeasibleError("ball with non-finite data");
    if (radius < 0.0) throw InfeasibleError("ball with negative radius");
    const std::size_t dim = center.size();
    return ConvexBody(Ball{std::move(center), radius}, dim);
  }

  static ConvexBody polytope(HPolytope p) {
    const std::size_t dim = p.dim();
    return ConvexBody(std::move(p), dim);
  }

  static ConvexBody polytope(std::size_t dim, std::vector<HalfSpace> rows, bool bounded,
                             std::optional<AxisBox> box = std::nullopt) {
    return polytope(HPolytope(dim, std::move(rows), bounded, std::move(box)));
  }

  static ConvexBody point(Point p) { return ball(std::move(p), 0.0); }

  std::size_t dim() const noexcept { return dim_; }
  const Variant& variant() const noexcept { return body_; }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&body_);
  }

 private:
  ConvexBody(Variant v, std::size_t dim) : body_(std::move(v)), dim_(dim) {}

  Variant body_;
  std::size_t dim_;
};

namespace detail {
inline void check_dim(const ConvexBody& body, const Point& y, const char* where) {
  if (y.size() != body.dim())
    throw DimensionError(std::string(where) + ": point has dimension " + std::to_string(y.size()) +
                         ", body has " + std::to_string(body.dim()));
}
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

/// The body translated by v.
inline ConvexBody translate(const ConvexBody& body, const Point& v) {
  detail::check_dim(body, v, "translate");
  return std::visit(detail::overloaded{
                        [&](const Interval& i) { return ConvexBody::interval(i.lo + v[0], i.hi + v[0]); },
                        [&](const Ball& b) { return ConvexBody::ball(b.center + v, b.radius); },
                        [&](const HPolytope& p) { return ConvexBody::polytope(p.translated(v)); },
                    },
                    body.variant());
}

/// The unique point of the body with smallest Euclidean norm.
inline Point least_norm_point(const ConvexBody& body) {
  return std::visit(detail::overloaded{
                        [](const Interval& i) { return Point{std::clamp(0.0, i.lo, i.hi)}; },
                        [](const Ball& b) {
                          const double n = norm(b.center);
                          if (n <= b.radius) return Point(b.center.size(), 0.0);
                          return (1.0 - b.radius / n) * b.center;
                        },
                        [](const HPolytope& p) { return p.least_norm_point(); },
                    },
                    body.variant());
}

/// Euclidean projection of y onto the body.
inline Point project(const ConvexBody& body, const Point& y) {
  detail::check_dim(body, y, "project");
  return std::visit(detail::overloaded{
                        [&](const Interval& i) { return Point{std::clamp(y[0], i.lo, i.hi)}; },
                        [&](const Ball& b) {
                          const double d = distance(y, b.center);
                          if (d <= b.radius) return y;
                          return b.center + (b.radius / d) * (y - b.center);
                        },
                        [&](const HPolytope& p) {
                          // least-norm point of the body translated by -y, shifted back
                          return least_norm_point(ConvexBody::polytope(p.translated(-y))) + y;
                        },
                    },
                    body.variant());
}

inline double distance(const ConvexBody& body, const Point& y) {
  detail::check_dim(body, y, "distance");
  return std::visit(detail::overloaded{
                        [&](const Interval& i) {
                          if (y[0] < i.lo) return i.lo - y[0];
                          if (y[0] > i.hi) return y[0] - i.hi;
                          return 0.0;
                        },
                        [&](const Ball& b) { return std::max(0.0, distance(y, b.center) - b.radius); },
                        [&](const HPolytope& p) {
                          if (p.max_violation(y) <= 0.0) return 0.0;
                          return distance(project(body, y), y);
                        },
                    },
                    body.variant());
}

inline bool contains(const ConvexBody& body, const Point& y, double tol = 0.0) {
  return distance(body, y) <= tol;
}

/// (inf, sup) of coordinate `axis` over the body; infinite when unbounded.
inline std::pair<double, double> coord_bounds(const ConvexBody& body, std::size_t axis) {
  if (axis >= body.dim()) throw DimensionError("coord_bounds: axis out of range");
  return std::visit(detail::overloaded{
                        [](const Interval& i) { return std::pair{i.lo, i.hi}; },
                        [&](const Ball& b) {
                          return std::pair{b.center[axis] - b.radius, b.center[axis] + b.radius};
                        },
                        [&](const HPolytope& p) {
                          Point e(p.dim(), 0.0);
                          e[axis] = 1.0;
                          const auto hi = p.maximize(e);
                          e[axis] = -1.0;
                          const auto lo = p.maximize(e);
                          return std::pair{lo.unbounded ? -kInf : -lo.value, hi.unbounded ? kInf : hi.value};
                        },
                    },
                    body.variant());
}

/// A point of the body attaining the coordinate extreme (sign > 0: sup), if finite.
inline std::optional<Point> extreme_point(const ConvexBody& body, std::size_t axis, int sign) {
  if (axis >= body.dim()) throw DimensionError("extreme_point: axis out of range");
  const double s = sign > 0 ? 1.0 : -1.0;
  return std::visit(detail::overloaded{
                        [&](const Interval& i) -> std::optional<Point> {
                          const double v = s > 0 ? i.hi : i.lo;
                          if (!std::isfinite(v)) return std::nullopt;
                          return Point{v};
                        },
                        [&](const Ball& b) -> std::optional<Point> {
                          Point p = b.center;
                          p[axis] += s * b.radius;
                          return p;
                        },
                        [&](const HPolytope& p) -> std::optional<Point> {
                          Point e(p.dim(), 0.0);
                          e[axis] = s;
                          auto r = p.maximize(e);
                          if (r.unbounded) return std::nullopt;
                          return r.argmax;
                        },
                    },
                    body.variant());
}

/// Signed distance to the boundary: positive inside, negative outside.
inline double interior_margin(const ConvexBody& body, const Point& y) {
  detail::check_dim(body, y, "interior_margin");
  return std::visit(detail::overloaded{
                        [&](const Interval& i) { return std::min(y[0] - i.lo, i.hi - y[0]); },
                        [&](const Ball& b) { return b.radius - distance(y, b.center); },
                        [&](const HPolytope& p) {
                          if (p.max_violation(y) > 0.0) return -distance(body, y);
                          double m = kInf;
                          for (const auto& r : p.rows()) {
                            const double n = norm(r.normal);
                            if (n == 0.0) continue;
                            m = std::min(m, (r.offset - dot(r.normal, y)) / n);
                          }
                          return m;
                        },
                    },
                    body.variant());
}

/// Box containing the body for rejection sampling, if one is known.
inline std::optional<AxisBox> sampling_box(const ConvexBody& body) {
  return std::visit(detail::overloaded{
                        [](const Interval& i) -> std::optional<AxisBox> {
                          if (!std::isfinite(i.lo) || !std::isfinite(i.hi)) return std::nullopt;
                          return AxisBox{Point{i.lo}, Point{i.hi}};
                        },
                        [](const Ball& b) -> std::optional<AxisBox> {
                          AxisBox box{b.center, b.center};
                          for (std::size_t d = 0; d < b.center.size(); ++d) {
                            box.lo[d] -= b.radius;
                            box.hi[d] += b.radius;
                          }
                          return box;
                        },
                        [&](const HPolytope& p) -> std::optional<AxisBox> {
                          if (p.sampling_box()) return p.sampling_box();
                          if (!p.declared_bounded()) return std::nullopt;
                          AxisBox box{Point(p.dim()), Point(p.dim())};
                          for (std::size_t d = 0; d < p.dim(); ++d) {
                            auto [lo, hi] = coord_bounds(body, d);
                            if (!std::isfinite(lo) || !std::isfinite(hi))
                              throw PreconditionError("polytope declared bounded is unbounded");
                            box.lo[d] = lo;
                            box.hi[d] = hi;
                          }
                          return box;
                        },
                    },
                    body.variant());
}

/// A pseudo-random point of the body. Uniform for intervals, balls and polytopes
/// with a sampling box; otherwise a projected Gaussian perturbation of the
/// least-norm point.
inline Point sample_point(const ConvexBody& body, Rng& rng) {
  if (const auto* i = body.get_if<Interval>()) {
    if (std::isfinite(i->lo) && std::isfinite(i->hi)) return Point{rng.uniform(i->lo, i->hi)};
    if (std::isfinite(i->lo)) return Point{i->lo + rng.exponential()};
    if (std::isfinite(i->hi)) return Point{i->hi - rng.exponential()};
    return Point{rng.normal()};
  }
  if (const auto* b = body.get_if<Ball>()) {
    const std::size_t m = b->center.size();
    Point dir(m);
    double n = 0.0;
    while (n == 0.0) {
      for (std::size_t d = 0; d < m; ++d) dir[d] = rng.normal();
      n = norm(dir);
    }
    const double r = b->radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(m));
    return b->center + (r / n) * dir;
  }
  const auto& p = *body.get_if<HPolytope>();
  if (auto box = sampling_box(body)) {
    Point y(p.dim());
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (std::size_t d = 0; d < p.dim(); ++d) y[d] = rng.uniform(box->lo[d], box->hi[d]);
      if (p.max_violation(y) <= 0.0) return y;
    }
  }
  Point y = p.least_norm_point();
  for (std::size_t d = 0; d < p.dim(); ++d) y[d] += rng.normal();
  return project(body, y);
}

}  // namespace cselect
