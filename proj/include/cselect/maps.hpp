#pragma once

// Set-valued maps T : E => R^m with closed convex values, their stratifications
// and the grid audits for lower semicontinuity and stratum continuity.

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cselect/audit.hpp"
#include "cselect/domain.hpp"
#include "cselect/fields.hpp"
#include "cselect/geometry.hpp"
#include "cselect/grid.hpp"
#include "cselect/random.hpp"

namespace cselect {

/// A subset of R^n given by a membership predicate.
struct Region {
  std::string label;
  std::function<bool(const Point&)> test;

  bool contains(const Point& x) const { return test(x); }

  static Region everywhere() {
    return {"everywhere", [](const Point&) { return true; }};
  }
};

/// A single-valued map E -> R^m.
class VectorField {
 public:
  using Rule = std::function<Point(const Point&)>;

  VectorField(Domain domain, std::size_t out_dim, Rule rule, bool continuous = true)
      : domain_(std::move(domain)), out_dim_(out_dim), rule_(std::move(rule)), continuous_(continuous) {}

  static VectorField constant(Domain domain, Point c) {
    const std::size_t m = c.size();
    return VectorField(std::move(domain), m, [c = std::move(c)](const Point&) { return c; }, true);
  }

  Point operator()(const Point& x) const {
    Point y = rule_(x);
    if (y.size() != out_dim_) throw DimensionError("vector field returned a point of the wrong dimension");
    return y;
  }

  const Domain& domain() const noexcept { return domain_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  bool continuous() const noexcept { return continuous_; }

 private:
  Domain domain_;
  std::size_t out_dim_;
  Rule rule_;
  bool continuous_;
};

struct Piece {
  Region region;
  std::function<ConvexBody(const Point&)> body;
};

/// T given piecewise; the first piece whose region contains x decides T(x).
class SetValuedMap {
 public:
  SetValuedMap(Domain domain, std::size_t output_dim, std::vector<Piece> pieces, bool declared_lsc,
               bool declared_continuous)
      : domain_(std::move(domain)),
        output_dim_(output_dim),
        pieces_(std::move(pieces)),
        declared_lsc_(declared_lsc || declared_continuous),
        declared_continuous_(declared_continuous) {
    if (output_dim_ == 0) throw DimensionError("set-valued map with output dimension 0");
  }

  /// A single-piece map.
  static SetValuedMap from_rule(Domain domain, std::size_t output_dim, std::function<ConvexBody(const Point&)> rule,
                                bool declared_lsc = true, bool declared_continuous = true) {
    return SetValuedMap(std::move(domain), output_dim, {Piece{Region::everywhere(), std::move(rule)}}, declared_lsc,
                        declared_continuous);
  }

  ConvexBody evaluate(const Point& x) const {
    for (const auto& piece : pieces_)
      if (piece.region.contains(x)) {
        ConvexBody b = piece.body(x);
        if (b.dim() != output_dim_)
          throw DimensionError("piece '" + piece.region.label + "' produced a body of dimension " +
                               std::to_string(b.dim()));
        return b;
      }
    throw CoverageError("no piece covers " + to_string(x), x.coords());
  }

  ConvexBody operator()(const Point& x) const { return evaluate(x); }

  const Domain& domain() const noexcept { return domain_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  bool declared_lsc() const noexcept { return declared_lsc_; }
  bool declared_continuous() const noexcept { return declared_continuous_; }

 private:
  Domain domain_;
  std::size_t output_dim_;
  std::vector<Piece> pieces_;
  bool declared_lsc_;
  bool declared_continuous_;
};

/// (T - f)(x) = T(x) - f(x). Lower semicontinuity and continuity carry over
/// when f is continuous.
inline SetValuedMap shift(const SetValuedMap& map, const VectorField& f) {
  if (!f.continuous()) throw PreconditionError("shift: the translating field must be continuous");
  if (f.out_dim() != map.output_dim())
    throw DimensionError("shift: field dimension " + std::to_string(f.out_dim()) + " vs map dimension " +
                         std::to_string(map.output_dim()));
  std::vector<Piece> pieces;
  for (const auto& p : map.pieces())
    pieces.push_back({p.region, [body = p.body, f](const Point& x) { return translate(body(x), -f(x)); }});
  return SetValuedMap(map.domain(), map.output_dim(), std::move(pieces), map.declared_lsc(),
                      map.declared_continuous());
}

/// f(x) = inf T(x), g(x) = sup T(x) for a map into R. For a lower
/// semicontinuous T, f is upper and g is lower semicontinuous.
inline std::pair<ScalarField, ScalarField> envelopes(const SetValuedMap& map) {
  if (map.output_dim() != 1) throw DimensionError("envelopes: map must be real-valued (m = 1)");
  const auto lower_tag = map.declared_lsc() ? Semicontinuity::upper : Semicontinuity::unknown;
  const auto upper_tag = map.declared_lsc() ? Semicontinuity::lower : Semicontinuity::unknown;
  ScalarField f(map.domain(), [map](const Point& x) { return coord_bounds(map.evaluate(x), 0).first; }, lower_tag,
                "inf T");
  ScalarField g(map.domain(), [map](const Point& x) { return coord_bounds(map.evaluate(x), 0).second; }, upper_tag,
                "sup T");
  return {std::move(f), std::move(g)};
}

namespace detail {

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t i) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1));
}

inline void push_unique(std::vector<Point>& out, Point p) {
  if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
}

}  // namespace detail

/// Deterministic probe points of a body: the least-norm point, the finite
/// coordinate extremes, then `random` seeded samples.
inline std::vector<Point> probe_points(const ConvexBody& body, std::size_t random, Rng& rng) {
  std::vector<Point> out;
  detail::push_unique(out, least_norm_point(body));
  for (std::size_t axis = 0; axis < body.dim(); ++axis)
    for (int sign : {-1, 1})
      if (auto p = extreme_point(body, axis, sign)) detail::push_unique(out, std::move(*p));
  for (std::size_t i = 0; i < random; ++i) out.push_back(sample_point(body, rng));
  return out;
}

/// For each grid point x, `per_point` points of T(x): least-norm point and
/// coordinate extremes first, then seeded pseudo-random samples.
inline std::vector<std::pair<Point, Point>> graph_sample(const SetValuedMap& map, const Grid& grid,
                                                         std::size_t per_point, std::uint64_t seed = kDefaultSeed) {
  if (per_point < 1) throw PreconditionError("graph_sample: per_point must be >= 1");
  std::vector<std::pair<Point, Point>> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& x = grid.point(i);
    const ConvexBody body = map.evaluate(x);
    Rng rng(detail::point_seed(seed, i));
    auto ys = probe_points(body, 0, rng);
    if (ys.size() > per_point) ys.resize(per_point);
    while (ys.size() < per_point) ys.push_back(sample_point(body, rng));
    for (auto& y : ys) out.emplace_back(x, std::move(y));
  }
  return out;
}

namespace detail {

using ProbeFilter = std::function<bool(std::size_t grid_index, const Point& probe)>;

}  // namespace detail

/// Lower semicontinuity at grid resolution: every probe y0 of T(x0) must be
/// within eps + slope * |x - x0| of T(x) for nearby x. A (x0, y0) pair is
/// reported only when every probe scale shows the gap.
inline AuditReport lsc_audit(const SetValuedMap& map, const Grid& grid, const AuditOptions& opt = {},
                             const detail::ProbeFilter& keep = {}) {
  if (!(opt.eps > 0.0)) throw PreconditionError("lsc_audit: eps must be positive");
  AuditReport rep;
  rep.name = "lsc";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.neighbors(i).empty()) continue;
    const Point& x0 = grid.point(i);
    if (keep && !keep(i, x0)) continue;
    ++rep.checked;
    Rng rng(detail::point_seed(opt.seed, i));
    const std::vector<Point> ys = probe_points(map.evaluate(x0), 3, rng);
    std::vector<char> persistent(ys.size(), 1);
    std::vector<double> worst(ys.size(), 0.0);
    std::vector<Point> witness(ys.size());
    double frac = 1.0;
    for (int s = 0; s < opt.scales; ++s, frac *= 0.5) {
      std::vector<double> scale_worst(ys.size(), 0.0);
      std::vector<Point> scale_witness(ys.size());
      for (const auto& p : grid.probes(i, frac)) {
        if (keep && !keep(i, p)) continue;
        const ConvexBody body = map.evaluate(p);
        const double allowance = opt.eps + opt.slope * distance(p, x0);
        for (std::size_t k = 0; k < ys.size(); ++k) {
          if (!persistent[k]) continue;
          const double e = distance(body, ys[k]) - allowance;
          if (e > scale_worst[k]) {
            scale_worst[k] = e;
            scale_witness[k] = p;
          }
        }
      }
      bool any = false;
      for (std::size_t k = 0; k < ys.size(); ++k) {
        if (!persistent[k]) continue;
        persistent[k] = scale_worst[k] > 0.0;
        worst[k] = scale_worst[k];
        witness[k] = std::move(scale_witness[k]);
        any = any || persistent[k];
      }
      if (!any) break;
    }
    for (std::size_t k = 0; k < ys.size(); ++k) {
      if (!persistent[k]) continue;
      if (rep.violations.size() < opt.max_reported)
        rep.violations.push_back({x0, ys[k], witness[k], worst[k], "value of T(x0) not approached from nearby"});
      else
        rep.notes.push_back("further violations truncated");
      break;
    }
  }
  return rep;
}

/// Closed-graph check at grid resolution: probes of T(x) for nearby x must be
/// within eps + slope * |x - x0| of T(x0).
inline AuditReport closed_graph_audit(const SetValuedMap& map, const Grid& grid, const AuditOptions& opt = {},
                                      const detail::ProbeFilter& keep = {}) {
  AuditReport rep;
  rep.name = "closed-graph";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.neighbors(i).empty()) continue;
    const Point& x0 = grid.point(i);
    if (keep && !keep(i, x0)) continue;
    ++rep.checked;
    const ConvexBody at_x0 = map.evaluate(x0);
    bool persistent = true;
    double worst = 0.0;
    Point witness;
    std::optional<Point> witness_y;
    double frac = 1.0;
    for (int s = 0; s < opt.scales && persistent; ++s, frac *= 0.5) {
      double scale_worst = 0.0;
      Point scale_witness;
      std::optional<Point> scale_y;
      bool any_probe = false;
      std::size_t k = 0;
      for (const auto& p : grid.probes(i, frac)) {
        ++k;
        if (keep && !keep(i, p)) continue;
        any_probe = true;
        const double t = distance(p, x0);
        Rng rng(detail::point_seed(opt.seed, i * 131 + k));
        for (const auto& y : probe_points(map.evaluate(p), 3, rng)) {
          const double e = distance(at_x0, y) - (opt.eps + opt.slope * t);
          if (e > scale_worst) {
            scale_worst = e;
            scale_witness = p;
            scale_y = y;
          }
        }
      }
      persistent = any_probe && scale_worst > 0.0;
      worst = scale_worst;
      witness = std::move(scale_witness);
      witness_y = std::move(scale_y);
    }
    if (persistent && rep.violations.size() < opt.max_reported)
      rep.violations.push_back({x0, witness_y, witness, worst, "nearby values escape T(x0)"});
  }
  return rep;
}

/// Ordered strata C_1, ..., C_k partitioning E. Each C_j should be open in
/// C_j u ... u C_k, and T should be continuous on each stratum.
class Stratification {
 public:
  Stratification() = default;
  explicit Stratification(std::vector<Region> strata) : strata_(std::move(strata)) {
    if (strata_.empty()) throw PreconditionError("stratification needs at least one stratum");
  }

  static Stratification single() { return Stratification({Region::everywhere()}); }

  std::size_t size() const noexcept { return strata_.size(); }
  const Region& operator[](std::size_t j) const { return strata_[j]; }
  const std::vector<Region>& strata() const noexcept { return strata_; }

  /// Index of the first stratum containing x, or size() if none does.
  std::size_t index_of(const Point& x) const {
    for (std::size_t j = 0; j < strata_.size(); ++j)
      if (strata_[j].contains(x)) return j;
    return strata_.size();
  }

  std::size_t match_count(const Point& x) const {
    return static_cast<std::size_t>(
        std::count_if(strata_.begin(), strata_.end(), [&](const Region& r) { return r.contains(x); }));
  }

  /// Stratum index of every grid point (size() where uncovered).
  std::vector<std::size_t> label(const Grid& grid) const {
    std::vector<std::size_t> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = index_of(grid.point(i));
    return out;
  }

 private:
  std::vector<Region> strata_;
};

/// Partition check (every grid point in exactly one stratum) plus relative
/// openness: probes around a point of C_j must not land in a later stratum,
/// at every probe scale.
inline AuditReport stratification_audit(const Stratification& strat, const Grid& grid, const AuditOptions& opt = {}) {
  AuditReport rep;
  rep.name = "stratification";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ++rep.checked;
    const Point& x0 = grid.point(i);
    const std::size_t matches = strat.match_count(x0);
    if (matches != 1) {
      if (rep.violations.size() < opt.max_reported)
        rep.violations.push_back({x0, std::nullopt, x0, static_cast<double>(matches),
                                  matches == 0 ? "point lies in no stratum" : "point lies in several strata"});
      continue;
    }
    const std::size_t j = strat.index_of(x0);
    bool persistent = !grid.neighbors(i).empty();
    Point witness;
    double frac = 1.0;
    for (int s = 0; s < opt.scales && persistent; ++s, frac *= 0.5) {
      bool hit = false;
      for (const auto& p : grid.probes(i, frac)) {
        const std::size_t jp = strat.index_of(p);
        if (jp > j && jp < strat.size()) {
          hit = true;
          witness = p;
          break;
        }
      }
      persistent = hit;
    }
    if (persistent && rep.violations.size() < opt.max_reported)
      rep.violations.push_back({x0, std::nullopt, witness, 1.0,
                                "stratum " + std::to_string(j + 1) + " is not open in the union of later strata"});
  }
  return rep;
}

/// Restriction of T to each stratum audited for continuity (lsc plus closed
/// graph), using only probes inside the same stratum.
inline AuditReport stratum_continuity_audit(const SetValuedMap& map, const Stratification& strat, const Grid& grid,
                                            const AuditOptions& opt = {}) {
  const auto labels = strat.label(grid);
  detail::ProbeFilter same = [&](std::size_t i, const Point& p) { return strat.index_of(p) == labels[i]; };
  AuditReport lsc = lsc_audit(map, grid, opt, same);
  AuditReport closed = closed_graph_audit(map, grid, opt, same);
  AuditReport rep;
  rep.name = "stratum-continuity";
  rep.checked = lsc.checked;
  for (auto& v : lsc.violations) {
    v.what = "restricted lsc: " + v.what;
    rep.violations.push_back(std::move(v));
  }
  for (auto& v : closed.violations) {
    v.what = "restricted closed graph: " + v.what;
    rep.violations.push_back(std::move(v));
  }
  return rep;
}

}  // namespace cselect
