#pragma once

#include "gpk/cloud.hpp"
#include "gpk/mesh.hpp"

namespace gpk {

struct PinholeIntrinsics {
  int width = 320;
  int height = 240;
  double fov_h_deg = 57.0;  // horizontal field of view
};

// Simulated depth scan: one ray per pixel through a pinhole camera at
// viewpoint.position, optical axis toward `target`, image up chosen from
// world +z (or +x when the axis is near-vertical). Nearest hits only;
// every returned point is tagged with the (single) viewpoint.
// Throws when no ray hits the mesh.
CloudWithViewpoints render_view(const TriangleMesh& mesh,
                                const Viewpoint& viewpoint,
                                const Vec3& target,
                                const PinholeIntrinsics& intrinsics);

// Convenience: target = mesh surface centroid.
CloudWithViewpoints render_view(const TriangleMesh& mesh,
                                const Viewpoint& viewpoint,
                                const PinholeIntrinsics& intrinsics);

struct StereoConfig {
  double baseline_angle_deg = 53.0;  // separation about the vertical axis
  double distance = 0.6;             // camera distance from the centroid
  double elevation_deg = 30.0;       // above the centroid's horizontal plane
  double azimuth_deg = 0.0;          // pair midline heading
  PinholeIntrinsics intrinsics;
};

// Two-view scan: cameras at +/- half the baseline angle around the
// vertical axis through the mesh centroid, merged into one cloud with
// viewpoint ids 0 and 1.
CloudWithViewpoints stereo_render(const TriangleMesh& mesh,
                                  const StereoConfig& config);

}  // namespace gpk
