#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "gpk/common.hpp"

namespace gpk {

// Uniform hash grid over a fixed point set for radius queries. Immutable
// after construction and safe to share across threads.
class SpatialGrid {
 public:
  SpatialGrid(std::span<const Vec3> points, double cell_size);

  // Appends indices of all points with ||p - center|| <= radius to `out`,
  // in ascending index order.
  void query_radius(const Vec3& center, double radius,
                    std::vector<int>& out) const;

  std::vector<int> query_radius(const Vec3& center, double radius) const {
    std::vector<int> out;
    query_radius(center, radius, out);
    return out;
  }

  double cell_size() const { return cell_; }

 private:
  std::uint64_t key_of(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;

  std::span<const Vec3> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace gpk
