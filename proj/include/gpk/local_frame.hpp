#pragma once

#include <optional>

#include "gpk/cloud.hpp"
#include "gpk/spatial_grid.hpp"

namespace gpk {

// Local surface frame at a cloud point: outward normal, the direction of
// minimum absolute normal curvature (a cylinder's axis direction), and
// their cross product. Columns (normal, curvature_axis, binormal) form a
// right-handed orthonormal basis.
struct LocalFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 curvature_axis = Vec3::UnitY();
  Vec3 binormal = Vec3::UnitX();
  int neighborhood_count = 0;
};

enum class FrameStatus {
  ok,
  too_few_neighbors,
  degenerate_neighborhood,
};

struct FrameConfig {
  double radius = 0.01;    // neighborhood radius, meters
  int min_neighbors = 20;  // below this the caller should resample
};

// Estimates the frame at cloud.points[point_index] from the neighborhood
// within config.radius. The normal is the smallest-eigenvalue direction
// of the neighborhood scatter, oriented toward the point's first
// associated viewpoint. The curvature axis comes from a quadric fit of
// the height function over the tangent plane; its sign is canonicalized
// so the first nonzero world component is positive.
// Returns nullopt and sets *status on failure.
std::optional<LocalFrame> estimate_frame(const CloudWithViewpoints& cloud,
                                         const SpatialGrid& grid,
                                         int point_index,
                                         const FrameConfig& config,
                                         FrameStatus* status = nullptr);

// Per-point outward surface normals for the whole cloud. Points whose
// neighborhood has fewer than min_neighbors members (or is degenerate)
// fall back to the unit direction toward their first viewpoint.
std::vector<Vec3> compute_cloud_normals(const CloudWithViewpoints& cloud,
                                        double radius, int min_neighbors,
                                        int threads);

}  // namespace gpk
