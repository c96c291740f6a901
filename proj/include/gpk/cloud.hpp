#pragma once

#include <vector>

#include "gpk/common.hpp"

namespace gpk {

// A camera location in the fixed world frame (meters, +z up).
struct Viewpoint {
  Vec3 position = Vec3::Zero();
  int id = 0;
};

// Point cloud where every point carries the set of viewpoints it was
// observed from. Immutable by convention once built; all operations
// return new clouds.
struct CloudWithViewpoints {
  std::vector<Vec3> points;
  std::vector<std::vector<int>> view_of;  // per point, sorted unique viewpoint ids
  std::vector<Viewpoint> viewpoints;

  std::size_t size() const { return points.size(); }

  // Throws Error if any invariant is violated: finite coordinates,
  // >=1 viewpoint per point, all referenced ids present.
  void validate() const;

  const Viewpoint& viewpoint_by_id(int id) const;

  Eigen::AlignedBox3d bounding_box() const;
};

// A subset of point indices of a parent cloud. Indices are kept sorted
// and unique so that downstream sampling is independent of insertion
// order.
struct RegionOfInterest {
  std::vector<int> indices;

  static RegionOfInterest all(std::size_t cloud_size);
  static RegionOfInterest from_indices(std::vector<int> idx);

  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
  void validate_against(const CloudWithViewpoints& cloud) const;
};

// Union of two clouds in the same world frame. Viewpoints are re-indexed
// sequentially (a's first, then b's) so ids never collide; per-point
// associations are preserved through the remapping. Duplicate points are
// retained.
CloudWithViewpoints merge_clouds(const CloudWithViewpoints& a,
                                 const CloudWithViewpoints& b);

// Voxel-grid downsampling: at most one point per occupied leaf
// (floor(coordinate/leaf) binning), the centroid of the members, with
// the union of the member view sets. Output is ordered by leaf key.
CloudWithViewpoints voxel_downsample(const CloudWithViewpoints& cloud,
                                     double leaf);

// Rigidly transform points and viewpoint positions together.
CloudWithViewpoints transform_cloud(const CloudWithViewpoints& cloud,
                                    const Isometry& transform);

}  // namespace gpk
