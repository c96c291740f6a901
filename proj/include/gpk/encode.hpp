#pragma once

#include <string>
#include <vector>

#include "gpk/candidates.hpp"
#include "gpk/cloud.hpp"
#include "gpk/hand.hpp"

namespace gpk {

inline constexpr int kGridSize = 60;
inline constexpr int kImagePixels = kGridSize * kGridSize;

enum class Variant {
  FIFTEEN,
  TWELVE,
  THREE_CURVATURE,
  THREE_APPROACH_KAPPLER,
};

int variant_channels(Variant variant);
std::string variant_name(Variant variant);
Variant variant_from_name(const std::string& name);

// Channel indices into the 15-channel stack for variants that are pure
// subsets of it. THREE_APPROACH_KAPPLER is not a subset (its free-space
// channel is not among the 15) and raises ConfigError.
std::vector<int> variant_channel_subset(Variant variant);

// Occupancy of the whole cloud on a world-axis-aligned leaf grid, shared
// by every candidate's occlusion test. Storage is a dense bitset when the
// cloud's bounding box fits a budget, a hash set otherwise.
class GlobalOccupancy {
 public:
  GlobalOccupancy(const std::vector<Vec3>& points, double leaf);

  double leaf() const { return leaf_; }
  bool occupied(std::int64_t ix, std::int64_t iy, std::int64_t iz) const;

  // True when an occupied leaf lies on the open segment from `from`
  // toward `to`, ignoring the leaf containing `from`.
  bool segment_blocked(const Vec3& from, const Vec3& to) const;

 private:
  double leaf_ = 0.0;
  std::int64_t lo_[3] = {0, 0, 0};
  std::int64_t dims_[3] = {0, 0, 0};
  bool dense_ = false;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> sparse_;  // sorted packed keys
};

// Voxelization of a candidate's closing region: occupancy V, unobserved
// U (hidden from every viewpoint), and per-cell mean surface normals.
// Cell (x, y, z) flattens to (x * N + y) * N + z.
struct CandidateGrid {
  std::vector<std::uint8_t> occupied;    // V, N^3
  std::vector<std::uint8_t> unobserved;  // U, N^3
  std::vector<Eigen::Vector3f> normal;   // unit where V=1, zero elsewhere
  Eigen::Affine3d world_to_unit = Eigen::Affine3d::Identity();

  static int flat(int x, int y, int z) {
    return (x * kGridSize + y) * kGridSize + z;
  }
};

enum class ProjectionAxis { approach_x = 0, curvature_y = 1, binormal_z = 2 };

// 60x60xC image, channel-major: value(c, row, col) at
// data[c * kImagePixels + row * kGridSize + col].
struct GraspImage {
  std::vector<float> data;
  Variant variant = Variant::FIFTEEN;

  float at(int channel, int row, int col) const {
    return data[channel * kImagePixels + row * kGridSize + col];
  }
};

CandidateGrid build_grid(const CloudWithViewpoints& cloud,
                         const std::vector<Vec3>& normals,
                         const GraspCandidate& candidate,
                         const HandGeometry& hand,
                         const GlobalOccupancy& occupancy);

// Convenience: builds normals and the global occupancy internally.
CandidateGrid build_grid(const CloudWithViewpoints& cloud,
                         const GraspCandidate& candidate,
                         const HandGeometry& hand);

// Leaf edge for the shared occupancy grid: mean closing-region cell edge.
double occupancy_leaf(const HandGeometry& hand, double aperture);

// Projection along one grid axis: channels [I_o, I_u, I_n.x, I_n.y, I_n.z].
// Heights are 1-based cell indices along the projected axis divided by the
// grid size; columns with no occupied (resp. unobserved) cells give 0.
std::vector<float> project(const CandidateGrid& grid, ProjectionAxis axis);

GraspImage encode(const CandidateGrid& grid, Variant variant);

// Batch: frames, grids, and images for many candidates; results ordered
// by candidate index regardless of thread count.
std::vector<GraspImage> encode_candidates(
    const CloudWithViewpoints& cloud,
    const std::vector<GraspCandidate>& candidates, const HandGeometry& hand,
    Variant variant, int threads = 0);

}  // namespace gpk
