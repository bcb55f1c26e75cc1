#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cselect/point.hpp"

namespace cselect {

struct Violation {
  Point x;                 // grid point where the check failed
  std::optional<Point> y;  // probe value in the target space, when there is one
  Point neighbor;          // worst probe near x
  double deficit = 0.0;    // how far beyond tolerance
  std::string what;
};

/// Outcome of a grid audit. Passing means "no violation at this resolution".
struct AuditReport {
  std::string name;
  std::size_t checked = 0;
  std::vector<Violation> violations;
  std::vector<std::string> notes;

  bool passed() const noexcept { return violations.empty(); }
};

/// Knobs shared by the multi-scale audits. A probe at distance t from a grid
/// point is allowed `eps + slope * t` of slack. A violation is only recorded
/// when it persists at every probe scale (full spacing, 1/2, 1/4, ...), which
/// separates genuine discontinuities from features narrower than the grid.
struct AuditOptions {
  double eps = 1e-6;
  double slope = 10.0;
  int scales = 4;
  std::uint64_t seed = 0x5e1ec7;
  std::size_t max_reported = 50;
};

}  // namespace cselect
