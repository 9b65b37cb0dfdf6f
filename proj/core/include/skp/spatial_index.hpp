#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "skp/geometry.hpp"

namespace skp {

/// Uniform-grid bucket index over a fixed location set.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  /// `cell_edge` is usually the query radius that will be used most often.
  SpatialIndex(std::span<const Coord> locations, double cell_edge);

  std::size_t size() const noexcept { return points_.size(); }
  double cell_edge() const noexcept { return edge_; }

  /// Sorted indices of all locations with distance < radius (strict) from `center`.
  std::vector<std::size_t> neighbors(const Coord& center, double radius) const;

  /// Same as neighbors() but appends to `out` (cleared first) to reuse storage in hot loops.
  void neighbors_into(const Coord& center, double radius, std::vector<std::size_t>& out) const;

 private:
  using CellKey = std::uint64_t;
  CellKey key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const noexcept;
  std::int64_t cell_of(double v, int axis) const noexcept;

  std::vector<Coord> points_;
  Coord origin_{};
  Coord extent_cells_{};  // number of cells per axis (as double for clamping)
  double edge_ = 1.0;
  std::unordered_map<CellKey, std::vector<std::size_t>> buckets_;
};

}  // namespace skp
