#pragma once

// Scalar fields E -> R u {+-inf} with semicontinuity tags, and the bounded
// compression t -> t / sqrt(1 + t^2) used to reduce unbounded envelopes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "cselect/audit.hpp"
#include "cselect/domain.hpp"
#include "cselect/error.hpp"
#include "cselect/grid.hpp"

namespace cselect {

/// IEEE infinities stand for the symbolic +-inf; NaN is never a valid value.
using ExtendedReal = double;

inline bool is_infinite(ExtendedReal v) noexcept { return std::isinf(v); }

/// A value of [-1, 1] carried together with its distance to the nearer
/// endpoint. Near +-1 the plain double loses almost all information about the
/// preimage; the gap keeps full relative precision, so the round trip through
/// decompress stays accurate for large inputs. The gap is held as
/// mantissa * 2^exponent since it drops below the double range for |x| > 1e154.
class Compressed {
 public:
  Compressed(double value, double gap) noexcept : value_(value) {
    int e = 0;
    mant_ = std::frexp(gap, &e);
    exp_ = e;
  }
  Compressed(double value, double gap_mantissa, int gap_exponent) noexcept : value_(value) {
    int e = 0;
    mant_ = std::frexp(gap_mantissa, &e);
    exp_ = e + gap_exponent;
  }

  double value() const noexcept { return value_; }
  double gap() const noexcept { return std::ldexp(mant_, exp_); }
  double gap_mantissa() const noexcept { return mant_; }
  int gap_exponent() const noexcept { return exp_; }
  bool at_endpoint() const noexcept { return mant_ == 0.0; }

 private:
  double value_;
  double mant_;
  int exp_;
};

/// t / sqrt(1 + t^2), with +inf -> 1 and -inf -> -1. Finite inputs never map
/// onto +-1 exactly.
inline Compressed compress(ExtendedReal v) {
  if (std::isnan(v)) throw PreconditionError("compress: NaN");
  if (v == kInf) return {1.0, 0.0};
  if (v == -kInf) return {-1.0, 0.0};
  const double a = std::abs(v);
  if (a <= 1.0) {
    const double w = a / std::hypot(1.0, a);
    return {std::copysign(w, v), 1.0 - w};
  }
  // 1 - a/s == 1 / (s (s + a)) without cancellation, with a = as * 2^k
  const int k = std::ilogb(a);
  const double as = std::ldexp(a, -k);
  const double ss = std::hypot(std::ldexp(1.0, -k), as);
  const double w = std::min(as / ss, std::nextafter(1.0, 0.0));
  return {std::copysign(w, v), 1.0 / (ss * (ss + as)), -2 * k};
}

/// Inverse of compress on (-1, 1).
inline double decompress(double w) {
  if (!(std::abs(w) < 1.0)) throw PreconditionError("decompress: |w| >= 1 stands for an infinite value");
  return w / std::sqrt((1.0 - w) * (1.0 + w));
}

inline double decompress(Compressed c) {
  if (c.at_endpoint()) throw PreconditionError("decompress: endpoint stands for an infinite value");
  const double g = c.gap();
  if (g > 1e-300) return std::copysign((1.0 - g) / std::sqrt(g * (2.0 - g)), c.value());
  // g = m 2^e with g tiny: a = 1 / sqrt(g (2 - g)) to full precision, split the
  // exponent evenly so nothing overflows
  double m = c.gap_mantissa();
  int e = c.gap_exponent();
  if (e % 2 != 0) {
    m *= 2.0;
    --e;
  }
  const double a = std::ldexp(1.0 / std::sqrt(2.0 * m), -e / 2);
  // rounding can push the preimage of DBL_MAX one ulp past the range
  return std::copysign(std::min(a, std::numeric_limits<double>::max()), c.value());
}

enum class Semicontinuity { upper, lower, continuous, unknown };

inline const char* to_string(Semicontinuity s) {
  switch (s) {
    case Semicontinuity::upper: return "upper";
    case Semicontinuity::lower: return "lower";
    case Semicontinuity::continuous: return "continuous";
    case Semicontinuity::unknown: return "unknown";
  }
  return "unknown";
}

/// A function on a domain with a declared (not proven) semicontinuity tag.
class ScalarField {
 public:
  using Rule = std::function<ExtendedReal(const Point&)>;

  ScalarField(Domain domain, Rule rule, Semicontinuity tag, std::string name = {})
      : domain_(std::move(domain)), rule_(std::move(rule)), tag_(tag), name_(std::move(name)) {}

  static ScalarField constant(Domain domain, ExtendedReal value, std::string name = {}) {
    return ScalarField(std::move(domain), [value](const Point&) { return value; }, Semicontinuity::continuous,
                       std::move(name));
  }

  ExtendedReal operator()(const Point& x) const { return rule_(x); }

  const Domain& domain() const noexcept { return domain_; }
  Semicontinuity tag() const noexcept { return tag_; }
  const std::string& name() const noexcept { return name_; }
  const Rule& rule() const noexcept { return rule_; }

  ScalarField with_tag(Semicontinuity tag) const { return ScalarField(domain_, rule_, tag, name_); }

 private:
  Domain domain_;
  Rule rule_;
  Semicontinuity tag_;
  std::string name_;
};

/// Tag of a pointwise sum: lower+lower stays lower, upper+upper stays upper,
/// a continuous summand keeps the other tag. Mixed lower+upper is unknown.
inline Semicontinuity sum_tag(Semicontinuity a, Semicontinuity b) {
  using S = Semicontinuity;
  if (a == S::continuous) return b;
  if (b == S::continuous) return a;
  if (a == b) return a;
  return S::unknown;
}

inline Semicontinuity negated_tag(Semicontinuity a) {
  using S = Semicontinuity;
  if (a == S::lower) return S::upper;
  if (a == S::upper) return S::lower;
  return a;
}

/// Pointwise sum. Evaluating at a point where inf - inf would arise throws.
inline ScalarField add(const ScalarField& a, const ScalarField& b) {
  if (a.domain().dim() != b.domain().dim()) throw DimensionError("add: fields on different ambient dimensions");
  auto ra = a.rule();
  auto rb = b.rule();
  return ScalarField(
      a.domain(),
      [ra, rb](const Point& x) {
        const double u = ra(x);
        const double v = rb(x);
        if (std::isinf(u) && std::isinf(v) && (u > 0) != (v > 0))
          throw PreconditionError("add: indeterminate inf - inf at " + to_string(x));
        return u + v;
      },
      sum_tag(a.tag(), b.tag()));
}

inline ScalarField negate(const ScalarField& a) {
  auto ra = a.rule();
  return ScalarField(a.domain(), [ra](const Point& x) { return -ra(x); }, negated_tag(a.tag()));
}

/// The compressed field compress(f(x)).value(); semicontinuity is preserved
/// because compression is increasing.
inline ScalarField compressed(const ScalarField& f) {
  auto rf = f.rule();
  return ScalarField(f.domain(), [rf](const Point& x) { return compress(rf(x)).value(); }, f.tag(),
                     f.name().empty() ? std::string{} : "compressed " + f.name());
}

/// Resolution-proportional tolerance: ten spacings times a unit slope bound.
inline double default_audit_eps(const Grid& grid) { return 10.0 * grid.max_spacing(); }

/// Checks the declared tag at every grid point. For a lower-semicontinuous
/// claim a point x0 is flagged when, at every probe scale, some nearby value
/// falls below f(x0) - eps; symmetrically for upper. Continuous checks both.
inline AuditReport semicontinuity_audit(const ScalarField& f, const Grid& grid, double eps, int scales = 4) {
  if (!(eps > 0.0)) throw PreconditionError("semicontinuity_audit: eps must be positive");
  AuditReport rep;
  rep.name = std::string("semicontinuity(") + to_string(f.tag()) + ")";
  if (f.tag() == Semicontinuity::unknown) {
    rep.notes.push_back("tag unknown: nothing to audit");
    return rep;
  }
  const bool check_lower = f.tag() == Semicontinuity::lower || f.tag() == Semicontinuity::continuous;
  const bool check_upper = f.tag() == Semicontinuity::upper || f.tag() == Semicontinuity::continuous;

  auto excess = [](double bound, double v) {  // > 0 when v breaks the bound
    if (std::isinf(bound) && std::isinf(v) && (bound > 0) == (v > 0)) return 0.0;
    return bound - v;
  };

  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.neighbors(i).empty()) continue;
    ++rep.checked;
    const Point& x0 = grid.point(i);
    const double v0 = f(x0);
    for (int side = 0; side < 2; ++side) {
      const bool lower = side == 0;
      if (lower ? !check_lower : !check_upper) continue;
      bool persistent = true;
      double worst = 0.0;
      Point witness;
      double frac = 1.0;
      for (int s = 0; s < scales && persistent; ++s, frac *= 0.5) {
        double scale_worst = 0.0;
        Point scale_witness;
        for (const auto& p : grid.probes(i, frac)) {
          const double v = f(p);
          const double e = lower ? excess(v0 - eps, v) : excess(v, v0 + eps);
          if (e > scale_worst) {
            scale_worst = e;
            scale_witness = p;
          }
        }
        persistent = scale_worst > 0.0;
        worst = scale_worst;
        witness = std::move(scale_witness);
      }
      if (persistent && rep.violations.size() < 1000)
        rep.violations.push_back({x0, std::nullopt, witness, worst,
                                  lower ? "value drops below f(x0) - eps nearby" : "value rises above f(x0) + eps nearby"});
    }
  }
  return rep;
}

}  // namespace cselect
