#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cselect/error.hpp"

namespace cselect {

/// A point of R^m stored by value.
class Point {
 public:
  Point() = default;
  explicit Point(std::size_t dim, double fill = 0.0) : coords_(dim, fill) {}
  Point(std::initializer_list<double> coords) : coords_(coords) {}
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::size_t size() const noexcept { return coords_.size(); }
  double& operator[](std::size_t i) { return coords_[i]; }
  double operator[](std::size_t i) const { return coords_[i]; }

  auto begin() noexcept { return coords_.begin(); }
  auto end() noexcept { return coords_.end(); }
  auto begin() const noexcept { return coords_.begin(); }
  auto end() const noexcept { return coords_.end(); }

  const std::vector<double>& coords() const noexcept { return coords_; }
  std::span<const double> span() const noexcept { return coords_; }

  bool is_finite() const noexcept {
    for (double c : coords_)
      if (!std::isfinite(c)) return false;
    return true;
  }

  Point& operator+=(const Point& o) {
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += o.coords_[i];
    return *this;
  }
  Point& operator-=(const Point& o) {
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= o.coords_[i];
    return *this;
  }
  Point& operator*=(double s) {
    for (double& c : coords_) c *= s;
    return *this;
  }

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

inline Point operator+(Point a, const Point& b) { return a += b; }
inline Point operator-(Point a, const Point& b) { return a -= b; }
inline Point operator*(double s, Point a) { return a *= s; }
inline Point operator-(Point a) { return a *= -1.0; }

inline void require_same_dim(const Point& a, const Point& b, const char* where) {
  if (a.size() != b.size())
    throw DimensionError(std::string(where) + ": dimension " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) {
  double s = 0.0;
  for (double c : a) s += c * c;
  return std::sqrt(s);
}

inline double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::string to_string(const Point& p) {
  std::string out = "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ", ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", p[i]);
    out += buf;
  }
  return out + ")";
}

}  // namespace cselect
