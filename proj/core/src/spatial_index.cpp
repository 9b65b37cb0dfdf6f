#include "skp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skp/error.hpp"

namespace skp {

namespace {
// Keeps cell coordinates inside 21 bits per axis so a key packs into 64 bits.
constexpr double kMaxCellsPerAxis = double(1 << 20);
}  // namespace

SpatialIndex::SpatialIndex(std::span<const Coord> locations, double cell_edge)
    : points_(locations.begin(), locations.end()) {
  if (!(cell_edge > 0.0) || !std::isfinite(cell_edge)) throw InvalidArgument("cell edge must be finite and > 0");
  if (points_.empty()) {
    edge_ = cell_edge;
    return;
  }
  Coord hi = points_.front();
  origin_ = points_.front();
  for (const Coord& p : points_) {
    for (int a = 0; a < kMaxDim; ++a) {
      if (!std::isfinite(p[a])) throw InvalidArgument("location coordinates must be finite");
      origin_[a] = std::min(origin_[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  double widest = 0.0;
  for (int a = 0; a < kMaxDim; ++a) widest = std::max(widest, hi[a] - origin_[a]);
  edge_ = std::max(cell_edge, widest / (kMaxCellsPerAxis - 2.0));
  for (int a = 0; a < kMaxDim; ++a) extent_cells_[a] = std::floor((hi[a] - origin_[a]) / edge_);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Coord& p = points_[i];
    buckets_[key(cell_of(p[0], 0), cell_of(p[1], 1), cell_of(p[2], 2))].push_back(i);
  }
}

std::int64_t SpatialIndex::cell_of(double v, int axis) const noexcept {
  const double c = std::floor((v - origin_[axis]) / edge_);
  return static_cast<std::int64_t>(std::clamp(c, 0.0, extent_cells_[axis]));
}

SpatialIndex::CellKey SpatialIndex::key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const noexcept {
  return (static_cast<CellKey>(ix) << 42) | (static_cast<CellKey>(iy) << 21) | static_cast<CellKey>(iz);
}

void SpatialIndex::neighbors_into(const Coord& center, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (points_.empty() || !(radius > 0.0)) return;
  const double r2 = radius * radius;
  std::int64_t lo[kMaxDim], hi[kMaxDim];
  double cells = 1.0;
  for (int a = 0; a < kMaxDim; ++a) {
    lo[a] = cell_of(center[a] - radius, a);
    hi[a] = cell_of(center[a] + radius, a);
    cells *= double(hi[a] - lo[a] + 1);
  }
  if (cells >= double(points_.size())) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (squared_distance(points_[i], center) < r2) out.push_back(i);
    }
    return;
  }
  for (std::int64_t ix = lo[0]; ix <= hi[0]; ++ix) {
    for (std::int64_t iy = lo[1]; iy <= hi[1]; ++iy) {
      for (std::int64_t iz = lo[2]; iz <= hi[2]; ++iz) {
        const auto it = buckets_.find(key(ix, iy, iz));
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          if (squared_distance(points_[i], center) < r2) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> SpatialIndex::neighbors(const Coord& center, double radius) const {
  std::vector<std::size_t> out;
  neighbors_into(center, radius, out);
  return out;
}

}  // namespace skp
