#pragma once

#include <array>
#include <cmath>

namespace skp {

/// Location in R^q, q <= 3. Unused trailing axes stay 0 so distances need no dimension argument.
using Coord = std::array<double, 3>;

inline constexpr int kMaxDim = 3;

inline double squared_distance(const Coord& a, const Coord& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Coord& a, const Coord& b) noexcept { return std::sqrt(squared_distance(a, b)); }

inline double dot(const Coord& a, const Coord& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Coord operator-(const Coord& a, const Coord& b) noexcept { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

}  // namespace skp
