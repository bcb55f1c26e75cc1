#pragma once

// Continuous h between an upper-semicontinuous f and a lower-semicontinuous g
// (f <= h <= g, strict wherever f < g), computed stratum by stratum on a grid.
//
// Values are compressed into [-1, 1] first. The last stratum takes the
// midpoint; every earlier stratum U = C_j with the later strata D below it:
//
//   h1 = extension of the partial answer on D;  f1 = f - h1, g1 = g - h1
//   X  = {x in U : f1 = g1};  h2 = 0 on D, f1 on X;  h3 = extension of h2
//   f2 = f1 - h3, g2 = g1 - h3;  V = U \ X
//   Z1 = {f2 >= 0}, Z2 = {g2 <= 0}, Y = {f2 < 0 < g2}
//   eta_i = distance to (boundary of V) n Z_i
//   S  = Z1 u Z2 u (E \ V);  h4 = 0 on E \ V,
//        min(f2 + eta1, mid) on Z1 n V,  max(g2 - eta2, mid) on Z2 n V
//   h5 = extension of h4;  W = {x in V : h5 <= f2 or h5 >= g2}
//   delta = separator(W, V n (Z1 u Z2));  h = h5 on S, delta h5 on V \ S
//   level answer = h + h3 + h1

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cselect/audit.hpp"
#include "cselect/fields.hpp"
#include "cselect/grid.hpp"
#include "cselect/maps.hpp"
#include "cselect/urysohn.hpp"

namespace cselect {

struct SandwichOptions {
  double tie_tol = 1e-12;  // |f - g| at or below this counts as f = g
  double margin = 1e-9;    // compressed answers are kept in [-1 + margin, 1 - margin]
  AuditOptions audit;
  bool audit_strata = true;
};

struct BoundedPair {
  ScalarField f;
  ScalarField g;
  bool compressed;
};

/// Both envelopes pushed through compress; tags are preserved.
inline BoundedPair reduce_to_bounded(const ScalarField& f, const ScalarField& g) {
  return {compressed(f), compressed(g), true};
}

inline double base_midpoint(double f, double g) {
  if (!std::isfinite(f) || !std::isfinite(g)) throw PreconditionError("base_midpoint: infinite input (compress first)");
  return 0.5 * (f + g);
}

inline ScalarField base_midpoint(const ScalarField& f, const ScalarField& g) {
  auto rf = f.rule();
  auto rg = g.rule();
  return ScalarField(f.domain(), [rf, rg](const Point& x) { return base_midpoint(rf(x), rg(x)); },
                     Semicontinuity::continuous, "midpoint");
}

struct EqualizerGlue {
  std::vector<char> in_x;  // X = {x in U : f = g}
  std::vector<double> h2;  // 0 off U, f on X, NaN on U \ X
};

/// The glue on (E \ U) u X over a list of points. Off U the shifted pair must
/// already straddle zero: f <= 0 <= g up to `tol`, and f < 0 < g wherever
/// g - f exceeds `strict_gap`.
inline EqualizerGlue equalizer_glue(std::span<const double> f, std::span<const double> g,
                                    std::span<const char> in_u, double tie_tol = 1e-12, double tol = 1e-12,
                                    double strict_gap = 1e-9) {
  if (f.size() != g.size() || f.size() != in_u.size()) throw DimensionError("equalizer_glue: size mismatch");
  EqualizerGlue out{std::vector<char>(f.size(), 0), std::vector<double>(f.size(), std::numeric_limits<double>::quiet_NaN())};
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!in_u[i]) {
      const bool straddles = f[i] <= tol && g[i] >= -tol;
      const bool strict = g[i] - f[i] <= strict_gap || (f[i] < 0.0 && g[i] > 0.0);
      if (!straddles || !strict)
        throw PreconditionError("equalizer_glue: outside U the pair must straddle zero (f=" + std::to_string(f[i]) +
                                ", g=" + std::to_string(g[i]) + ")");
      out.h2[i] = 0.0;
    } else if (std::abs(f[i] - g[i]) <= tie_tol) {
      out.in_x[i] = 1;
      out.h2[i] = f[i];
    }
  }
  return out;
}

/// h4 at one point. eta values may be +inf (empty zero set).
inline double interior_adjust(double f, double g, bool in_v, bool in_z1, bool in_z2, double eta1, double eta2) {
  if (!in_v) return 0.0;
  const double mid = 0.5 * (f + g);
  if (in_z1) return std::min(f + eta1, mid);
  if (in_z2) return std::max(g - eta2, mid);
  throw PreconditionError("interior_adjust: point of V outside Z1 u Z2 is not in S");
}

inline double damp_to_safe(double h5, double delta, bool in_s) { return in_s ? h5 : delta * h5; }

/// Everything one level of the recursion computed, per grid point. Masks are
/// 0/1 over the whole grid; values outside the level's points are NaN.
struct SandwichLevel {
  std::size_t stratum = 0;
  bool base = false;
  std::vector<char> E, U, D, X, V, Z1, Z2, Y, S, W, boundary;
  std::vector<double> h0, f1, g1, h1, h2, h3, f2, g2, eta1, eta2, h4, h5, delta, h, out;
};

struct SandwichTrace {
  bool compressed = true;
  std::size_t strata = 0;
  std::vector<double> f, g;  // compressed envelopes on the grid
  std::vector<SandwichLevel> levels;  // levels[j] handles stratum j
  double tie_tol = 1e-12;
};

struct SandwichResult {
  ScalarField h;
  std::vector<double> values;  // h on the grid points
  SandwichTrace trace;
};

namespace detail {

using ExtensionPtr = std::shared_ptr<const TietzeExtension>;

inline ExtensionPtr extend_on(const Grid& grid, const std::vector<char>& mask, const std::vector<double>& values) {
  std::vector<Point> pts;
  std::vector<double> vals;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) {
      pts.push_back(grid.point(i));
      vals.push_back(values[i]);
    }
  if (pts.empty()) return nullptr;
  return std::make_shared<const TietzeExtension>(TietzeExtension::from_samples(grid.dim(), std::move(pts), std::move(vals)));
}

inline double eval(const ExtensionPtr& e, const Point& x) { return e ? (*e)(x) : 0.0; }

inline Domain mask_set(const Grid& grid, const std::vector<char>& mask) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) pts.push_back(grid.point(i));
  return Domain::finite(grid.dim(), std::move(pts));
}

// The level formula as a closure: no reference to the finer levels remains,
// only their recorded values through h1.
struct SandwichClosure {
  ExtensionPtr h1, h3, h5;
  std::shared_ptr<const std::set<Point>> s;
  std::shared_ptr<const Domain> w, vz;  // separator sets; null when empty

  double delta(const Point& x) const {
    if (!w) return 1.0;
    if (!vz) return 0.0;
    const double d1 = w->distance(x);
    const double d2 = vz->distance(x);
    return d1 / (d1 + d2);
  }

  double operator()(const Point& x) const {
    const bool in_s = s->contains(x);
    return damp_to_safe(eval(h5, x), in_s ? 1.0 : delta(x), in_s) + eval(h3, x) + eval(h1, x);
  }
};

inline std::vector<char> mask_and(const std::vector<char>& a, const std::vector<char>& b) {
  std::vector<char> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

}  // namespace detail

/// Rejects f > g at a grid point.
inline void check_ordered(const ScalarField& f, const ScalarField& g, const Grid& grid) {
  for (const auto& x : grid.points()) {
    const double a = f(x), b = g(x);
    if (std::isnan(a) || std::isnan(b)) throw PreconditionError("sandwich: NaN envelope value at " + to_string(x));
    if (a > b) throw PreconditionError("sandwich: f > g at " + to_string(x));
  }
}

inline SandwichResult sandwich_select(const ScalarField& f, const ScalarField& g, const Stratification& strat,
                                      const Grid& grid, const SandwichOptions& opt = {}) {
  using S = Semicontinuity;
  if (f.tag() != S::upper && f.tag() != S::continuous)
    throw PreconditionError(std::string("sandwich: f must be upper semicontinuous, tagged ") + to_string(f.tag()));
  if (g.tag() != S::lower && g.tag() != S::continuous)
    throw PreconditionError(std::string("sandwich: g must be lower semicontinuous, tagged ") + to_string(g.tag()));
  if (grid.size() == 0) throw PreconditionError("sandwich: empty grid");
  check_ordered(f, g, grid);
  if (opt.audit_strata && strat.size() > 1) {
    const auto rep = stratification_audit(strat, grid, opt.audit);
    if (!rep.passed())
      throw PreconditionError("sandwich: stratification audit failed at " + to_string(rep.violations.front().x) +
                              ": " + rep.violations.front().what);
  }
  const auto labels = strat.label(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (labels[i] == strat.size()) throw PreconditionError("sandwich: no stratum contains " + to_string(grid.point(i)));

  const auto bounded = reduce_to_bounded(f, g);
  const std::size_t n = grid.size();
  const std::size_t k = strat.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  SandwichTrace trace;
  trace.strata = k;
  trace.compressed = bounded.compressed;
  trace.tie_tol = opt.tie_tol;
  trace.f.resize(n);
  trace.g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace.f[i] = bounded.f(grid.point(i));
    trace.g[i] = bounded.g(grid.point(i));
  }
  const auto& ft = trace.f;
  const auto& gt = trace.g;
  trace.levels.resize(k);

  std::optional<detail::SandwichClosure> top;
  std::vector<double> child;  // answer of level j + 1 on its points

  for (std::size_t jj = k; jj-- > 0;) {
    SandwichLevel& L = trace.levels[jj];
    L.stratum = jj;
    auto mask = [&](auto pred) {
      std::vector<char> m(n);
      for (std::size_t i = 0; i < n; ++i) m[i] = pred(i) ? 1 : 0;
      return m;
    };
    L.E = mask([&](std::size_t i) { return labels[i] >= jj; });
    L.U = mask([&](std::size_t i) { return labels[i] == jj; });
    L.D = mask([&](std::size_t i) { return labels[i] > jj; });
    L.out.assign(n, nan);

    if (jj + 1 == k) {
      L.base = true;
      for (std::size_t i = 0; i < n; ++i)
        if (L.E[i]) L.out[i] = base_midpoint(ft[i], gt[i]);
      child = L.out;
      continue;
    }

    L.h0.assign(n, nan);
    for (std::size_t i = 0; i < n; ++i)
      if (L.D[i]) L.h0[i] = child[i];
    const auto ext1 = detail::extend_on(grid, L.D, L.h0);

    L.h1.assign(n, nan);
    L.f1.assign(n, nan);
    L.g1.assign(n, nan);
    for (std::size_t i = 0; i < n; ++i)
      if (L.E[i]) {
        L.h1[i] = L.D[i] ? L.h0[i] : detail::eval(ext1, grid.point(i));
        L.f1[i] = ft[i] - L.h1[i];
        L.g1[i] = gt[i] - L.h1[i];
      }

    // f1 and g1 restricted to the level, for the glue's own precondition check
    std::vector<double> f1e, g1e;
    std::vector<char> ue;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i)
      if (L.E[i]) {
        ids.push_back(i);
        f1e.push_back(L.f1[i]);
        g1e.push_back(L.g1[i]);
        ue.push_back(L.U[i]);
      }
    const auto glue = equalizer_glue(f1e, g1e, ue, opt.tie_tol, 1e-12);
    L.X.assign(n, 0);
    L.h2.assign(n, nan);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      L.X[ids[t]] = glue.in_x[t];
      L.h2[ids[t]] = glue.h2[t];
    }
    std::vector<char> rest(n);
    for (std::size_t i = 0; i < n; ++i) rest[i] = L.D[i] || L.X[i];
    const auto ext3 = detail::extend_on(grid, rest, L.h2);

    L.h3.assign(n, nan);
    L.f2.assign(n, nan);
    L.g2.assign(n, nan);
    L.V.assign(n, 0);
    L.Z1.assign(n, 0);
    L.Z2.assign(n, 0);
    L.Y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (L.E[i]) {
        L.h3[i] = rest[i] ? L.h2[i] : detail::eval(ext3, grid.point(i));
        L.f2[i] = L.f1[i] - L.h3[i];
        L.g2[i] = L.g1[i] - L.h3[i];
        L.V[i] = L.U[i] && !L.X[i];
        L.Z1[i] = L.f2[i] >= 0.0;
        L.Z2[i] = L.g2[i] <= 0.0;
        L.Y[i] = L.f2[i] < 0.0 && 0.0 < L.g2[i];
      }

    // boundary of V relative to the level: level points outside V next to V
    L.boundary.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!L.E[i] || L.V[i]) continue;
      for (const auto& nb : grid.neighbors(i))
        if (L.V[nb.index]) {
          L.boundary[i] = 1;
          break;
        }
    }
    const Domain b1 = detail::mask_set(grid, detail::mask_and(L.boundary, L.Z1));
    const Domain b2 = detail::mask_set(grid, detail::mask_and(L.boundary, L.Z2));

    L.eta1.assign(n, nan);
    L.eta2.assign(n, nan);
    L.h4.assign(n, nan);
    L.S.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!L.E[i]) continue;
      L.eta1[i] = b1.distance(grid.point(i));
      L.eta2[i] = b2.distance(grid.point(i));
      L.S[i] = L.Z1[i] || L.Z2[i] || !L.V[i];
      if (L.S[i])
        L.h4[i] = interior_adjust(L.f2[i], L.g2[i], L.V[i], L.Z1[i], L.Z2[i], L.eta1[i], L.eta2[i]);
    }
    const auto ext5 = detail::extend_on(grid, L.S, L.h4);

    L.h5.assign(n, nan);
    L.W.assign(n, 0);
    std::vector<char> vz(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!L.E[i]) continue;
      L.h5[i] = L.S[i] ? L.h4[i] : detail::eval(ext5, grid.point(i));
      L.W[i] = L.V[i] && (L.h5[i] <= L.f2[i] || L.h5[i] >= L.g2[i]);
      vz[i] = L.V[i] && (L.Z1[i] || L.Z2[i]);
      if (L.W[i] && vz[i])
        throw PreconditionError("sandwich: W meets V n (Z1 u Z2) at " + to_string(grid.point(i)));
    }

    detail::SandwichClosure closure;
    closure.h1 = ext1;
    closure.h3 = ext3;
    closure.h5 = ext5;
    auto s_pts = std::make_shared<std::set<Point>>();
    for (std::size_t i = 0; i < n; ++i)
      if (L.S[i]) s_pts->insert(grid.point(i));
    closure.s = s_pts;
    const bool any_w = std::any_of(L.W.begin(), L.W.end(), [](char c) { return c != 0; });
    const bool any_vz = std::any_of(vz.begin(), vz.end(), [](char c) { return c != 0; });
    if (any_w) closure.w = std::make_shared<const Domain>(detail::mask_set(grid, L.W));
    if (any_w && any_vz) closure.vz = std::make_shared<const Domain>(detail::mask_set(grid, vz));

    L.delta.assign(n, nan);
    L.h.assign(n, nan);
    for (std::size_t i = 0; i < n; ++i) {
      if (!L.E[i]) continue;
      L.delta[i] = closure.delta(grid.point(i));
      L.h[i] = damp_to_safe(L.h5[i], L.delta[i], L.S[i]);
      L.out[i] = L.h[i] + L.h3[i] + L.h1[i];
    }
    child = L.out;
    if (jj == 0) top = std::move(closure);
  }

  const double lo = -1.0 + opt.margin, hi = 1.0 - opt.margin;
  SandwichResult res{ScalarField::constant(f.domain(), 0.0), std::vector<double>(n), std::move(trace)};
  for (std::size_t i = 0; i < n; ++i) res.values[i] = decompress(std::clamp(child[i], lo, hi));

  ScalarField::Rule compressed_rule;
  if (top) {
    compressed_rule = [c = *top](const Point& x) { return c(x); };
  } else {
    auto rf = bounded.f.rule();
    auto rg = bounded.g.rule();
    compressed_rule = [rf, rg](const Point& x) { return base_midpoint(rf(x), rg(x)); };
  }
  res.h = ScalarField(
      f.domain(), [compressed_rule, lo, hi](const Point& x) { return decompress(std::clamp(compressed_rule(x), lo, hi)); },
      Semicontinuity::continuous, "sandwich");
  return res;
}

/// f - tol <= h <= g + tol at every grid point, and f < h < g wherever
/// g - f > strict_gap; h must be finite.
inline AuditReport sandwich_postcondition_audit(const ScalarField& f, const ScalarField& g, const Grid& grid,
                                                std::span<const double> h, double tol = 1e-9, double strict_gap = 1e-3,
                                                std::size_t max_reported = 50) {
  AuditReport rep;
  rep.name = "sandwich-postconditions";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ++rep.checked;
    const Point& x = grid.point(i);
    const double a = f(x), b = g(x), v = h[i];
    std::string what;
    double deficit = 0.0;
    if (!std::isfinite(v)) {
      what = "h is not finite";
      deficit = kInf;
    } else if (v < a - tol) {
      what = "h < f";
      deficit = a - v;
    } else if (v > b + tol) {
      what = "h > g";
      deficit = v - b;
    } else if (b - a > strict_gap && !(a < v && v < b)) {
      what = "h not strictly between f and g";
      deficit = std::min(v - a, b - v);
    }
    if (!what.empty() && rep.violations.size() < max_reported)
      rep.violations.push_back({x, Point{v}, x, deficit, what});
  }
  return rep;
}

/// Re-derives every recorded region from its defining formula and the recorded
/// values, and checks the per-level guarantees the construction relies on.
inline AuditReport sandwich_trace_audit(const SandwichTrace& trace, const Grid& grid, std::size_t max_reported = 50) {
  AuditReport rep;
  rep.name = "sandwich-trace";
  auto flag = [&](std::size_t i, std::size_t level, const std::string& what) {
    if (rep.violations.size() < max_reported)
      rep.violations.push_back({grid.point(i), std::nullopt, grid.point(i), 1.0,
                                "level " + std::to_string(level + 1) + ": " + what});
  };
  for (const auto& L : trace.levels) {
    if (L.base) continue;
    const std::size_t j = L.stratum;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!L.E[i]) continue;
      ++rep.checked;
      const bool x = L.U[i] && std::abs(L.f1[i] - L.g1[i]) <= trace.tie_tol;
      const bool v = L.U[i] && !x;
      const bool z1 = L.f2[i] >= 0.0;
      const bool z2 = L.g2[i] <= 0.0;
      const bool y = L.f2[i] < 0.0 && 0.0 < L.g2[i];
      const bool s = z1 || z2 || !v;
      const bool w = v && (L.h5[i] <= L.f2[i] || L.h5[i] >= L.g2[i]);
      if (x != bool(L.X[i])) flag(i, j, "X disagrees with f1 = g1 on U");
      if (v != bool(L.V[i])) flag(i, j, "V disagrees with U \\ X");
      if (z1 != bool(L.Z1[i]) || z2 != bool(L.Z2[i]) || y != bool(L.Y[i])) flag(i, j, "Z1/Z2/Y disagree with f2, g2");
      if (s != bool(L.S[i])) flag(i, j, "S disagrees with Z1 u Z2 u (E \\ V)");
      if (w != bool(L.W[i])) flag(i, j, "W disagrees with its defining inequalities");
      if (L.D[i] && !(L.f1[i] <= 1e-12 && L.g1[i] >= -1e-12)) flag(i, j, "f1 <= 0 <= g1 fails on D");
      if (v && !(L.f2[i] < L.g2[i])) flag(i, j, "f2 < g2 fails on V");
      if (L.boundary[i] && L.Z1[i] && L.eta1[i] != 0.0) flag(i, j, "eta1 nonzero on its zero set");
      if (L.boundary[i] && L.Z2[i] && L.eta2[i] != 0.0) flag(i, j, "eta2 nonzero on its zero set");
      if (v && !(L.eta1[i] > 0.0 && L.eta2[i] > 0.0)) flag(i, j, "eta vanishes inside V");
      if (v && (z1 || z2) && !(L.f2[i] < L.h4[i] && L.h4[i] < L.g2[i])) flag(i, j, "h4 not strictly inside on V n Z");
      if (v && z1 && !(L.h4[i] > 0.0)) flag(i, j, "h4 <= 0 on Z1 n V");
      if (v && z2 && !(L.h4[i] < 0.0)) flag(i, j, "h4 >= 0 on Z2 n V");
      if (s && L.h5[i] != L.h4[i]) flag(i, j, "h5 differs from h4 on S");
      if (v && !(L.f2[i] <= L.h[i] && L.h[i] <= L.g2[i])) flag(i, j, "h outside [f2, g2] on V");
    }
  }
  return rep;
}

/// Continuity modulus of the sandwich answer on the grid and `refinements`
/// successive halvings; the whole pipeline is recomputed on each grid.
inline ModulusStudy sandwich_modulus_study(const ScalarField& f, const ScalarField& g, const Stratification& strat,
                                           Grid grid, int refinements, SandwichOptions opt = {}) {
  ModulusStudy study;
  for (int r = 0; r <= refinements; ++r) {
    if (r > 0) {
      grid = grid.refined();
      opt.audit_strata = false;  // audited once on the coarsest grid
    }
    const auto res = sandwich_select(f, g, strat, grid, opt);
    study.push(grid.size(), continuity_modulus(grid, res.values));
  }
  return study;
}

}  // namespace cselect
