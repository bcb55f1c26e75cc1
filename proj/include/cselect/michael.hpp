#pragma once

// Continuous selections h(x) in T(x) for lower-semicontinuous closed convex
// valued maps, built stratum by stratum from least-norm selections.
//
// The last stratum takes lns_T. Every earlier stratum C_j with later strata D:
// the partial selection f1 on D is extended coordinatewise to f3, the map is
// shifted to T - f3, its least-norm selection is taken on C_j and 0 on D, and
// the shift is undone: h = lns(T - f3) + f3 on C_j, h = f3 on D.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cselect/audit.hpp"
#include "cselect/fields.hpp"
#include "cselect/geometry.hpp"
#include "cselect/grid.hpp"
#include "cselect/maps.hpp"
#include "cselect/urysohn.hpp"

namespace cselect {

/// x -> least-norm point of T(x). Continuous when T is.
inline VectorField lns_field(const SetValuedMap& map) {
  return VectorField(
      map.domain(), map.output_dim(), [map](const Point& x) { return least_norm_point(map.evaluate(x)); },
      map.declared_continuous());
}

struct MichaelOptions {
  AuditOptions audit;
  bool audit_map = true;              // lsc, stratification and per-stratum continuity before selecting
  bool compress_extension = false;    // extend each coordinate through compress / decompress
  double margin = 1e-9;               // decompression clamp when compress_extension is set
  bool domain_closed = true;          // declared closedness of E; only reported
};

/// Coordinatewise bounded extension of vector samples.
class VectorExtension {
 public:
  VectorExtension(std::size_t dim, std::size_t out_dim, const std::vector<Point>& pts, const std::vector<Point>& vals,
                  bool compress_values, double margin)
      : out_dim_(out_dim), compress_(compress_values), margin_(margin) {
    if (pts.empty()) throw PreconditionError("VectorExtension: no samples");
    for (std::size_t c = 0; c < out_dim; ++c) {
      std::vector<double> coord(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i)
        coord[i] = compress_ ? compress(vals[i][c]).value() : vals[i][c];
      coords_.push_back(std::make_shared<const TietzeExtension>(TietzeExtension::from_samples(dim, pts, coord)));
    }
  }

  Point operator()(const Point& x) const {
    Point y(out_dim_);
    for (std::size_t c = 0; c < out_dim_; ++c) {
      const double v = (*coords_[c])(x);
      y[c] = compress_ ? decompress(std::clamp(v, -1.0 + margin_, 1.0 - margin_)) : v;
    }
    return y;
  }

 private:
  std::size_t out_dim_;
  bool compress_;
  double margin_;
  std::vector<std::shared_ptr<const TietzeExtension>> coords_;
};

/// One level of the recursion. Vectors are indexed by grid point; entries
/// outside the level are empty points.
struct MichaelLevel {
  std::size_t stratum = 0;
  bool base = false;
  std::vector<char> E, C, D;
  std::vector<Point> f1;           // partial selection on D
  std::vector<Point> f3;           // its extension, on the level
  std::vector<Point> shifted_lns;  // lns(T - f3) on C
  std::vector<Point> glued;        // shifted_lns on C, 0 on D
  std::vector<Point> out;          // glued + f3
  // off-grid evaluation of the level's pieces, for the boundary audit
  std::function<Point(const Point&)> extension;
  std::function<Point(const Point&)> shifted_selection;
  std::function<bool(const Point&)> in_stratum;
};

struct MichaelTrace {
  std::size_t strata = 0;
  std::vector<MichaelLevel> levels;  // levels[j] handles stratum j
  std::vector<AuditReport> audits;   // precondition audits that were run
  std::vector<std::string> notes;
};

struct MichaelResult {
  VectorField h;
  std::vector<Point> values;  // h on the grid points
  MichaelTrace trace;
};

namespace detail {

inline void require_passed(const AuditReport& rep) {
  if (rep.passed()) return;
  const auto& v = rep.violations.front();
  throw PreconditionError(rep.name + " audit failed at " + to_string(v.x) +
                          (v.y ? " (y = " + to_string(*v.y) + ")" : std::string{}) + ": " + v.what);
}

}  // namespace detail

inline MichaelResult michael_select(const SetValuedMap& map, const Stratification& strat, const Grid& grid,
                                    const MichaelOptions& opt = {}) {
  if (!map.declared_lsc()) throw PreconditionError("michael_select: map is not declared lower semicontinuous");
  if (grid.size() == 0) throw PreconditionError("michael_select: empty grid");
  if (grid.dim() != map.domain().dim()) throw DimensionError("michael_select: grid and map dimensions differ");

  MichaelTrace trace;
  trace.strata = strat.size();
  if (!opt.domain_closed) trace.notes.push_back("domain declared not closed: selection computed anyway");
  if (opt.audit_map) {
    if (strat.size() > 1) {
      trace.audits.push_back(stratification_audit(strat, grid, opt.audit));
      detail::require_passed(trace.audits.back());
    }
    trace.audits.push_back(lsc_audit(map, grid, opt.audit));
    detail::require_passed(trace.audits.back());
    trace.audits.push_back(stratum_continuity_audit(map, strat, grid, opt.audit));
    detail::require_passed(trace.audits.back());
  }
  const auto labels = strat.label(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (labels[i] == strat.size())
      throw PreconditionError("michael_select: no stratum contains " + to_string(grid.point(i)));

  const std::size_t n = grid.size();
  const std::size_t k = strat.size();
  const std::size_t m = map.output_dim();
  trace.levels.resize(k);
  std::vector<Point> child;
  std::function<Point(const Point&)> top;

  for (std::size_t jj = k; jj-- > 0;) {
    MichaelLevel& L = trace.levels[jj];
    L.stratum = jj;
    L.E.assign(n, 0);
    L.C.assign(n, 0);
    L.D.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      L.E[i] = labels[i] >= jj;
      L.C[i] = labels[i] == jj;
      L.D[i] = labels[i] > jj;
    }
    L.out.assign(n, Point());
    const Region region = strat[jj];
    L.in_stratum = [region](const Point& x) { return region.contains(x); };

    if (jj + 1 == k) {
      L.base = true;
      for (std::size_t i = 0; i < n; ++i)
        if (L.E[i]) L.out[i] = least_norm_point(map.evaluate(grid.point(i)));
      if (jj == 0) top = [map](const Point& x) { return least_norm_point(map.evaluate(x)); };
      child = L.out;
      continue;
    }

    L.f1.assign(n, Point());
    std::vector<Point> pts, vals;
    for (std::size_t i = 0; i < n; ++i)
      if (L.D[i]) {
        L.f1[i] = child[i];
        pts.push_back(grid.point(i));
        vals.push_back(child[i]);
      }
    std::function<Point(const Point&)> ext;
    if (pts.empty()) {
      ext = [m](const Point&) { return Point(m, 0.0); };
    } else {
      auto e = std::make_shared<const VectorExtension>(grid.dim(), m, pts, vals, opt.compress_extension, opt.margin);
      ext = [e](const Point& x) { return (*e)(x); };
    }
    L.extension = ext;
    L.shifted_selection = [map, ext](const Point& x) { return least_norm_point(translate(map.evaluate(x), -ext(x))); };

    L.f3.assign(n, Point());
    L.shifted_lns.assign(n, Point());
    L.glued.assign(n, Point());
    for (std::size_t i = 0; i < n; ++i) {
      if (!L.E[i]) continue;
      const Point& x = grid.point(i);
      L.f3[i] = L.D[i] ? L.f1[i] : ext(x);
      if (L.C[i]) {
        L.shifted_lns[i] = L.shifted_selection(x);
        L.glued[i] = L.shifted_lns[i];
      } else {
        L.glued[i] = Point(m, 0.0);
      }
      L.out[i] = L.glued[i] + L.f3[i];
    }
    if (jj == 0) {
      top = [ext, sel = L.shifted_selection, region, m](const Point& x) {
        const Point base = ext(x);
        return region.contains(x) ? sel(x) + base : base;
      };
    }
    child = L.out;
  }

  MichaelResult res{VectorField(map.domain(), m, top, true), std::move(child), std::move(trace)};
  return res;
}

/// dist(T(x), h(x)) <= tol at every grid point.
inline AuditReport membership_audit(const SetValuedMap& map, const Grid& grid, std::span<const Point> h,
                                    double tol = 1e-7, std::size_t max_reported = 50) {
  AuditReport rep;
  rep.name = "membership";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ++rep.checked;
    const double d = h[i].is_finite() ? distance(map.evaluate(grid.point(i)), h[i]) : kInf;
    if (d > tol && rep.violations.size() < max_reported)
      rep.violations.push_back({grid.point(i), h[i], grid.point(i), d, "selection outside T(x)"});
  }
  return rep;
}

/// Near each boundary between a stratum and the later strata, the shifted
/// least-norm selection must fade out: walking from a later-stratum grid point
/// b towards a neighbor in the stratum at distances t = spacing * 2^-r,
/// r = 0..5, its norm at the closest probe must be within eps + slope * t,
/// and no larger than at the farthest probe (plus eps).
inline AuditReport boundary_decay_audit(const MichaelTrace& trace, const Grid& grid, const AuditOptions& opt = {},
                                        int steps = 6) {
  AuditReport rep;
  rep.name = "boundary-decay";
  for (const auto& L : trace.levels) {
    if (L.base) continue;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!L.D[i]) continue;
      const Point& b = grid.point(i);
      for (const auto& nb : grid.neighbors(i)) {
        if (!L.C[nb.index]) continue;
        ++rep.checked;
        const Point dir = grid.point(nb.index) - b;
        double s0 = std::numeric_limits<double>::quiet_NaN();
        double s_last = 0.0, t_last = 0.0;
        Point last;
        double t = 1.0;
        for (int r = 0; r < steps; ++r, t *= 0.5) {
          const Point x = b + t * dir;
          if (!L.in_stratum(x)) continue;
          const double s = norm(L.shifted_selection(x));
          if (std::isnan(s0)) s0 = s;
          s_last = s;
          t_last = t * nb.spacing;
          last = x;
        }
        if (std::isnan(s0)) continue;
        const double excess = std::max(s_last - (opt.eps + opt.slope * t_last), s_last - (s0 + opt.eps));
        if (excess > 0.0 && rep.violations.size() < opt.max_reported)
          rep.violations.push_back({b, Point{s_last}, last, excess, "shifted selection does not vanish at the boundary"});
      }
    }
  }
  if (rep.checked == 0) rep.notes.push_back("no stratum boundary on this grid: nothing to audit");
  return rep;
}

/// Continuity modulus of the selection on the grid and `refinements`
/// successive halvings, recomputing the selection on each grid.
inline ModulusStudy michael_modulus_study(const SetValuedMap& map, const Stratification& strat, Grid grid,
                                          int refinements, MichaelOptions opt = {}) {
  ModulusStudy study;
  for (int r = 0; r <= refinements; ++r) {
    if (r > 0) {
      grid = grid.refined();
      opt.audit_map = false;  // audited once on the coarsest grid
    }
    const auto res = michael_select(map, strat, grid, opt);
    study.push(grid.size(), continuity_modulus(grid, res.values));
  }
  return study;
}

}  // namespace cselect
