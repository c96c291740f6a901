#include "gpk/render.hpp"

#include <cmath>

namespace gpk {

CloudWithViewpoints render_view(const TriangleMesh& mesh,
                                const Viewpoint& viewpoint,
                                const Vec3& target,
                                const PinholeIntrinsics& intrinsics) {
  if (mesh.empty()) throw Error("cannot render empty mesh");
  if (intrinsics.width <= 0 || intrinsics.height <= 0 ||
      !(intrinsics.fov_h_deg > 0.0) || !(intrinsics.fov_h_deg < 180.0))
    throw ConfigError("bad pinhole intrinsics");

  Vec3 forward = target - viewpoint.position;
  const double dist = forward.norm();
  if (dist < 1e-9) throw ConfigError("viewpoint coincides with target");
  forward /= dist;

  Vec3 up = Vec3::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Vec3::UnitX();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);  // image rows grow downward

  const double fx = (intrinsics.width / 2.0) /
                    std::tan(deg2rad(intrinsics.fov_h_deg) / 2.0);
  const double fy = fx;  // square pixels
  const double cx = (intrinsics.width - 1) / 2.0;
  const double cy = (intrinsics.height - 1) / 2.0;

  MeshRaycaster caster(mesh);

  CloudWithViewpoints cloud;
  cloud.viewpoints.push_back({viewpoint.position, viewpoint.id});
  for (int py = 0; py < intrinsics.height; ++py) {
    for (int px = 0; px < intrinsics.width; ++px) {
      const Vec3 dir = (forward + (px - cx) / fx * right +
                        (py - cy) / fy * down)
                           .normalized();
      const auto hit = caster.nearest(viewpoint.position, dir);
      if (!hit) continue;
      cloud.points.push_back(viewpoint.position + hit->t * dir);
      cloud.view_of.push_back({viewpoint.id});
    }
  }
  if (cloud.points.empty()) throw Error("empty render: no rays hit the mesh");
  return cloud;
}

CloudWithViewpoints render_view(const TriangleMesh& mesh,
                                const Viewpoint& viewpoint,
                                const PinholeIntrinsics& intrinsics) {
  return render_view(mesh, viewpoint, mesh.centroid(), intrinsics);
}

CloudWithViewpoints stereo_render(const TriangleMesh& mesh,
                                  const StereoConfig& config) {
  if (!(config.distance > 0.0))
    throw ConfigError("stereo distance must be positive");
  const Vec3 target = mesh.centroid();
  const double elev = deg2rad(config.elevation_deg);

  CloudWithViewpoints merged;
  for (int side = 0; side < 2; ++side) {
    const double azim = deg2rad(config.azimuth_deg +
                                (side == 0 ? -0.5 : 0.5) *
                                    config.baseline_angle_deg);
    const Vec3 offset(config.distance * std::cos(elev) * std::cos(azim),
                      config.distance * std::cos(elev) * std::sin(azim),
                      config.distance * std::sin(elev));
    const Viewpoint vp{target + offset, side};
    CloudWithViewpoints view =
        render_view(mesh, vp, target, config.intrinsics);
    merged = side == 0 ? std::move(view) : merge_clouds(merged, view);
  }
  return merged;
}

}  // namespace gpk
