#include "gpk/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

namespace gpk {

namespace {

std::int64_t cell_coord(double v, double cell) {
  return static_cast<std::int64_t>(std::floor(v / cell));
}

}  // namespace

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw Error("spatial grid: cell size must be positive");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    cells_[key_of(cell_coord(p.x(), cell_), cell_coord(p.y(), cell_),
                  cell_coord(p.z(), cell_))]
        .push_back(static_cast<int>(i));
  }
}

std::uint64_t SpatialGrid::key_of(std::int64_t cx, std::int64_t cy,
                                  std::int64_t cz) const {
  // 21 bits per axis, offset to keep coordinates non-negative.
  const std::uint64_t bias = 1ULL << 20;
  const std::uint64_t ux = static_cast<std::uint64_t>(cx + static_cast<std::int64_t>(bias)) & 0x1fffff;
  const std::uint64_t uy = static_cast<std::uint64_t>(cy + static_cast<std::int64_t>(bias)) & 0x1fffff;
  const std::uint64_t uz = static_cast<std::uint64_t>(cz + static_cast<std::int64_t>(bias)) & 0x1fffff;
  return (ux << 42) | (uy << 21) | uz;
}

void SpatialGrid::query_radius(const Vec3& center, double radius,
                               std::vector<int>& out) const {
  const double r2 = radius * radius;
  const std::int64_t span = static_cast<std::int64_t>(std::ceil(radius / cell_));
  const std::int64_t cx = cell_coord(center.x(), cell_);
  const std::int64_t cy = cell_coord(center.y(), cell_);
  const std::int64_t cz = cell_coord(center.z(), cell_);
  const std::size_t start = out.size();
  for (std::int64_t dx = -span; dx <= span; ++dx) {
    for (std::int64_t dy = -span; dy <= span; ++dy) {
      for (std::int64_t dz = -span; dz <= span; ++dz) {
        const auto it = cells_.find(key_of(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (int idx : it->second) {
          if ((points_[idx] - center).squaredNorm() <= r2) {
            out.push_back(idx);
          }
        }
      }
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
}

}  // namespace gpk
