#pragma once

// JSON map/field specifications, CSV output and JSON audit reports.
//
// {
//   "ambient_dim": 1, "output_dim": 1,
//   "domain": {"boxes": [{"lo": [-1], "hi": [1]}], "points": [[3]]},
//   "strata": [{"name": "off zero", "region": ["0 < abs(x1)"]}, {"region": []}],
//   "pieces": [{"region": ["x1 <= 0"], "body": {"interval": {"lo": "x1 - 1", "hi": "inf"}}},
//              {"region": [], "body": {"ball": {"center": ["x1"], "radius": 1}}}],
//   "tags": {"lsc": true, "continuous": false, "closed_domain": true},
//   "fields": {"f": {"tag": "upper", "pieces": [{"region": [], "value": "-inf"}]}, "g": {...}}
// }
//
// Regions are conjunctions of "<expr> op <expr>" atoms with op one of
// <=, <, >=, >, ==; an empty list is everywhere. Pieces are tried in order.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cselect/audit.hpp"
#include "cselect/domain.hpp"
#include "cselect/error.hpp"
#include "cselect/expr.hpp"
#include "cselect/fields.hpp"
#include "cselect/geometry.hpp"
#include "cselect/grid.hpp"
#include "cselect/maps.hpp"

namespace cselect {

/// Schema or validation failure; `path` names the offending field.
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& what, std::optional<Point> witness = std::nullopt)
      : Error(path + ": " + what + (witness ? " (at x = " + to_string(*witness) + ")" : std::string{})),
        path_(std::move(path)),
        witness_(std::move(witness)) {}
  const std::string& path() const noexcept { return path_; }
  const std::optional<Point>& witness() const noexcept { return witness_; }

 private:
  std::string path_;
  std::optional<Point> witness_;
};

struct SpecTags {
  bool lsc = true;
  bool continuous = false;
  bool closed_domain = true;
};

struct LoadedSpec {
  std::size_t ambient_dim = 0;
  std::size_t output_dim = 0;
  Domain domain;
  Stratification strata;
  std::optional<SetValuedMap> map;
  std::optional<ScalarField> f;
  std::optional<ScalarField> g;
  SpecTags tags;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SpecError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SpecError(path + "." + key, "missing");
  return *it;
}

inline std::size_t require_dim(const json& j, const std::string& key) {
  const json& v = require(j, key, "$");
  if (!v.is_number_integer() || v.get<long long>() < 1) throw SpecError(key, "must be a positive integer");
  return v.get<std::size_t>();
}

inline Point point_from(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_array() || j.size() != dim) throw SpecError(path, "expected an array of " + std::to_string(dim) + " numbers");
  Point p(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!j[i].is_number()) throw SpecError(path + "[" + std::to_string(i) + "]", "expected a number");
    p[i] = j[i].get<double>();
  }
  return p;
}

inline bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw SpecError(path + "." + key, "expected true or false");
  return it->get<bool>();
}

/// A scalar parameter: a JSON number, an expression string, or (when
/// `allow_inf`) one of "inf" / "-inf".
class Scalar {
 public:
  Scalar(const json& j, std::size_t dims, const std::string& path, bool allow_inf) : path_(path) {
    if (j.is_number()) {
      constant_ = j.get<double>();
    } else if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s == "inf" || s == "+inf" || s == "-inf") {
        if (!allow_inf) throw SpecError(path, "infinite values are only allowed for interval bounds and field values");
        constant_ = s == "-inf" ? -kInf : kInf;
      } else {
        try {
          expr_ = std::make_shared<const CompiledExpr>(parse_expr(s, dims));
        } catch (const ParseError& e) {
          throw SpecError(path, e.what());
        }
      }
    } else {
      throw SpecError(path, "expected a number or an expression string");
    }
  }

  double operator()(const Point& x) const {
    if (!expr_) return constant_;
    try {
      return (*expr_)(x.span());
    } catch (const EvalError& e) {
      throw SpecError(path_, e.what(), x);
    }
  }

 private:
  std::string path_;
  double constant_ = 0.0;
  std::shared_ptr<const CompiledExpr> expr_;
};

struct Atom {
  Scalar lhs, rhs;
  std::string op;
};

inline Atom parse_atom(const std::string& text, std::size_t dims, const std::string& path) {
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth != 0 || (c != '<' && c != '>' && c != '=')) continue;
    std::string op(1, c);
    if (i + 1 < text.size() && text[i + 1] == '=') op += '=';
    if (op == "=") throw SpecError(path, "use '==' for equality");
    const std::string rest = text.substr(i + op.size());
    if (rest.find_first_of("<>=") != std::string::npos) throw SpecError(path, "one comparison per atom");
    Scalar lhs(json(text.substr(0, i)), dims, path + ".lhs", false);
    Scalar rhs(json(rest), dims, path + ".rhs", false);
    return Atom{std::move(lhs), std::move(rhs), op};
  }
  throw SpecError(path, "expected a comparison (<=, <, >=, >, ==)");
}

inline Region parse_region(const json& j, std::size_t dims, const std::string& path, std::string label) {
  if (!j.is_array()) throw SpecError(path, "expected an array of comparison strings");
  auto atoms = std::make_shared<std::vector<Atom>>();
  std::string text;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_string()) throw SpecError(p, "expected a comparison string");
    atoms->push_back(parse_atom(j[i].get<std::string>(), dims, p));
    text += (i ? " and " : "") + j[i].get<std::string>();
  }
  if (label.empty()) label = text.empty() ? "everywhere" : text;
  return Region{std::move(label), [atoms](const Point& x) {
                  for (const auto& a : *atoms) {
                    const double l = a.lhs(x), r = a.rhs(x);
                    const bool ok = a.op == "<=" ? l <= r
                                    : a.op == "<" ? l < r
                                    : a.op == ">=" ? l >= r
                                    : a.op == ">" ? l > r
                                                  : l == r;
                    if (!ok) return false;
                  }
                  return true;
                }};
}

inline std::vector<Scalar> scalars(const json& j, std::size_t count, std::size_t dims, const std::string& path) {
  if (!j.is_array() || j.size() != count)
    throw SpecError(path, "expected an array of " + std::to_string(count) + " values");
  std::vector<Scalar> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(j[i], dims, path + "[" + std::to_string(i) + "]", false);
  return out;
}

inline std::function<ConvexBody(const Point&)> parse_body(const json& j, std::size_t dims, std::size_t m,
                                                         const std::string& path) {
  if (!j.is_object() || j.size() != 1) throw SpecError(path, "expected exactly one of interval, ball, hpolytope");
  const std::string kind = j.begin().key();
  const json& b = j.begin().value();
  const std::string bp = path + "." + kind;
  auto wrap = [bp](auto make) {
    return [bp, make](const Point& x) -> ConvexBody {
      try {
        return make(x);
      } catch (const SpecError&) {
        throw;
      } catch (const Error& e) {
        throw SpecError(bp, e.what(), x);
      }
    };
  };
  if (kind == "interval") {
    if (m != 1) throw SpecError(bp, "interval bodies need output_dim 1");
    Scalar lo(require(b, "lo", bp), dims, bp + ".lo", true);
    Scalar hi(require(b, "hi", bp), dims, bp + ".hi", true);
    return wrap([lo, hi](const Point& x) { return ConvexBody::interval(lo(x), hi(x)); });
  }
  if (kind == "ball") {
    auto center = scalars(require(b, "center", bp), m, dims, bp + ".center");
    Scalar radius(require(b, "radius", bp), dims, bp + ".radius", false);
    return wrap([center, radius](const Point& x) {
      Point c(center.size());
      for (std::size_t i = 0; i < center.size(); ++i) c[i] = center[i](x);
      return ConvexBody::ball(std::move(c), radius(x));
    });
  }
  if (kind == "hpolytope") {
    const json& rows = require(b, "rows", bp);
    if (!rows.is_array() || rows.empty()) throw SpecError(bp + ".rows", "expected a nonempty array");
    std::vector<std::pair<std::vector<Scalar>, Scalar>> parsed;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string rp = bp + ".rows[" + std::to_string(r) + "]";
      parsed.emplace_back(scalars(require(rows[r], "normal", rp), m, dims, rp + ".normal"),
                          Scalar(require(rows[r], "offset", rp), dims, rp + ".offset", false));
    }
    const bool bounded = bool_or(b, "bounded", true, bp);
    std::optional<AxisBox> box;
    if (auto it = b.find("bounding_box"); it != b.end())
      box = AxisBox{point_from(require(*it, "lo", bp + ".bounding_box"), m, bp + ".bounding_box.lo"),
                    point_from(require(*it, "hi", bp + ".bounding_box"), m, bp + ".bounding_box.hi")};
    return wrap([parsed, bounded, box, m](const Point& x) {
      std::vector<HalfSpace> hs;
      for (const auto& [normal, offset] : parsed) {
        Point a(m);
        for (std::size_t i = 0; i < m; ++i) a[i] = normal[i](x);
        hs.push_back({std::move(a), offset(x)});
      }
      return ConvexBody::polytope(m, std::move(hs), bounded, box);
    });
  }
  throw SpecError(path, "unknown body kind '" + kind + "'");
}

inline Semicontinuity parse_tag(const json& j, const std::string& path) {
  if (!j.is_string()) throw SpecError(path, "expected a tag string");
  const std::string s = j.get<std::string>();
  if (s == "upper") return Semicontinuity::upper;
  if (s == "lower") return Semicontinuity::lower;
  if (s == "continuous") return Semicontinuity::continuous;
  if (s == "unknown") return Semicontinuity::unknown;
  throw SpecError(path, "tag must be upper, lower, continuous or unknown");
}

inline ScalarField parse_field(const json& j, const Domain& domain, std::size_t dims, const std::string& path,
                               const std::string& name) {
  const Semicontinuity tag = parse_tag(require(j, "tag", path), path + ".tag");
  const json& pieces = require(j, "pieces", path);
  if (!pieces.is_array() || pieces.empty()) throw SpecError(path + ".pieces", "expected a nonempty array");
  auto parsed = std::make_shared<std::vector<std::pair<Region, Scalar>>>();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const std::string pp = path + ".pieces[" + std::to_string(i) + "]";
    parsed->emplace_back(parse_region(require(pieces[i], "region", pp), dims, pp + ".region", {}),
                         Scalar(require(pieces[i], "value", pp), dims, pp + ".value", true));
  }
  return ScalarField(
      domain,
      [parsed, path](const Point& x) {
        for (const auto& [region, value] : *parsed)
          if (region.contains(x)) {
            const double v = value(x);
            if (std::isnan(v)) throw SpecError(path, "value is NaN", x);
            return v;
          }
        throw SpecError(path + ".pieces", "no piece covers the point", x);
      },
      tag, name);
}

}  // namespace detail

/// Parses and validates a spec. Validation runs on a grid with
/// `validation_per_axis` points per box axis: every point must lie in exactly
/// one stratum, be covered by a piece whose body can be built, and (for
/// fields) be covered by a field piece.
inline LoadedSpec parse_spec(const nlohmann::json& j, std::size_t validation_per_axis = 33) {
  using detail::require;
  if (!j.is_object()) throw SpecError("$", "expected a JSON object");
  LoadedSpec spec;
  spec.ambient_dim = detail::require_dim(j, "ambient_dim");
  spec.output_dim = detail::require_dim(j, "output_dim");
  const std::size_t n = spec.ambient_dim;

  const auto& dom = require(j, "domain", "$");
  std::vector<AxisBox> boxes;
  std::vector<Point> points;
  if (auto it = dom.find("boxes"); it != dom.end()) {
    if (!it->is_array()) throw SpecError("domain.boxes", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "domain.boxes[" + std::to_string(i) + "]";
      Point lo = detail::point_from(require((*it)[i], "lo", p), n, p + ".lo");
      Point hi = detail::point_from(require((*it)[i], "hi", p), n, p + ".hi");
      boxes.push_back({std::move(lo), std::move(hi)});
    }
  }
  if (auto it = dom.find("points"); it != dom.end()) {
    if (!it->is_array()) throw SpecError("domain.points", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      points.push_back(detail::point_from((*it)[i], n, "domain.points[" + std::to_string(i) + "]"));
  }
  try {
    spec.domain = Domain(n, std::move(boxes), std::move(points));
  } catch (const Error& e) {
    throw SpecError("domain", e.what());
  }
  if (spec.domain.empty()) throw SpecError("domain", "domain is empty");

  if (auto it = j.find("tags"); it != j.end()) {
    spec.tags.lsc = detail::bool_or(*it, "lsc", true, "tags");
    spec.tags.continuous = detail::bool_or(*it, "continuous", false, "tags");
    spec.tags.closed_domain = detail::bool_or(*it, "closed_domain", true, "tags");
  }

  if (auto it = j.find("strata"); it != j.end() && !it->empty()) {
    if (!it->is_array()) throw SpecError("strata", "expected an array");
    std::vector<Region> regions;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "strata[" + std::to_string(i) + "]";
      std::string name;
      if (auto nm = (*it)[i].find("name"); nm != (*it)[i].end()) {
        if (!nm->is_string()) throw SpecError(p + ".name", "expected a string");
        name = nm->get<std::string>();
      }
      regions.push_back(detail::parse_region(require((*it)[i], "region", p), n, p + ".region", name));
    }
    spec.strata = Stratification(std::move(regions));
  } else {
    spec.strata = Stratification::single();
  }

  if (auto it = j.find("pieces"); it != j.end()) {
    if (!it->is_array() || it->empty()) throw SpecError("pieces", "expected a nonempty array");
    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "pieces[" + std::to_string(i) + "]";
      Region region = detail::parse_region(require((*it)[i], "region", p), n, p + ".region", {});
      auto body = detail::parse_body(require((*it)[i], "body", p), n, spec.output_dim, p + ".body");
      pieces.push_back({std::move(region), std::move(body)});
    }
    spec.map.emplace(spec.domain, spec.output_dim, std::move(pieces), spec.tags.lsc, spec.tags.continuous);
  }
  if (auto it = j.find("fields"); it != j.end()) {
    if (spec.output_dim != 1) throw SpecError("fields", "fields need output_dim 1");
    spec.f = detail::parse_field(require(*it, "f", "fields"), spec.domain, n, "fields.f", "f");
    spec.g = detail::parse_field(require(*it, "g", "fields"), spec.domain, n, "fields.g", "g");
  }
  if (!spec.map && !spec.f) throw SpecError("$", "spec needs pieces or fields");

  const Grid grid = Grid::build(spec.domain, validation_per_axis);
  for (const auto& x : grid.points()) {
    const std::size_t matches = spec.strata.match_count(x);
    if (matches != 1)
      throw SpecError("strata", matches == 0 ? "point lies in no stratum" : "point lies in several strata", x);
    try {
      if (spec.map) spec.map->evaluate(x);
    } catch (const CoverageError&) {
      throw SpecError("pieces", "no piece covers the point", x);
    } catch (const SpecError&) {
      throw;
    } catch (const Error& e) {
      throw SpecError("pieces", e.what(), x);
    }
    if (spec.f) {
      (*spec.f)(x);
      (*spec.g)(x);
    }
  }
  return spec;
}

inline LoadedSpec load_spec(const std::string& path, std::size_t validation_per_axis = 33) {
  std::ifstream in(path);
  if (!in) throw SpecError(path, "cannot open spec file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path, std::string("invalid JSON: ") + e.what());
  }
  return parse_spec(j, validation_per_axis);
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Header x1..xn,h1..hm, then one row per grid point.
inline void write_csv(std::ostream& out, std::span<const Point> xs, std::span<const Point> hs) {
  if (xs.size() != hs.size()) throw DimensionError("write_csv: row count mismatch");
  if (xs.empty()) return;
  const std::size_t n = xs.front().size(), m = hs.front().size();
  std::string line;
  for (std::size_t i = 0; i < n; ++i) line += (i ? ",x" : "x") + std::to_string(i + 1);
  for (std::size_t i = 0; i < m; ++i) line += ",h" + std::to_string(i + 1);
  out << line << '\n';
  for (std::size_t r = 0; r < xs.size(); ++r) {
    line.clear();
    for (std::size_t i = 0; i < n; ++i) line += (i ? "," : "") + format_number(xs[r][i]);
    for (std::size_t i = 0; i < m; ++i) line += "," + format_number(hs[r][i]);
    out << line << '\n';
  }
}

/// JSON numbers cannot hold infinities; those become "inf" / "-inf".
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json json_point(const Point& p) {
  nlohmann::json a = nlohmann::json::array();
  for (double v : p) a.push_back(json_number(v));
  return a;
}

inline nlohmann::json to_json(const AuditReport& rep, std::size_t max_witnesses = 20) {
  nlohmann::json out{{"name", rep.name}, {"passed", rep.passed()}, {"checked", rep.checked},
                     {"violation_count", rep.violations.size()}};
  nlohmann::json vs = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.violations.size() && i < max_witnesses; ++i) {
    const auto& v = rep.violations[i];
    nlohmann::json w{{"x", json_point(v.x)}, {"neighbor", json_point(v.neighbor)},
                     {"deficit", json_number(v.deficit)}, {"what", v.what}};
    if (v.y) w["y"] = json_point(*v.y);
    vs.push_back(std::move(w));
  }
  out["violations"] = std::move(vs);
  out["notes"] = rep.notes;
  return out;
}

inline nlohmann::json to_json(const ModulusStudy& study, double limit = 0.75) {
  nlohmann::json moduli = nlohmann::json::array(), ratios = nlohmann::json::array();
  for (double v : study.moduli) moduli.push_back(json_number(v));
  for (double v : study.ratios) ratios.push_back(json_number(v));
  return {{"grid_sizes", study.grid_sizes}, {"moduli", moduli}, {"ratios", ratios}, {"limit", limit},
          {"passed", study.passed(limit)}};
}

}  // namespace cselect
