#pragma once

#include <array>

#include "gpk/common.hpp"

namespace gpk {

// Parallel-jaw gripper dimensions, meters.
//   finger_width: thickness of one finger along the closing axis
//   finger_depth: finger length along the approach axis
//   hand_height: extent along the axis orthogonal to approach and closing
//   aperture_min / aperture_max: inner distance between finger faces
struct HandGeometry {
  double finger_width = 0.01;
  double finger_depth = 0.06;
  double hand_height = 0.02;
  double aperture_min = 0.03;
  double aperture_max = 0.07;

  void validate() const {
    if (!(finger_width > 0.0) || !(finger_depth > 0.0) ||
        !(hand_height > 0.0) || !(aperture_min > 0.0) ||
        !(aperture_max > 0.0))
      throw ConfigError("hand geometry fields must be positive");
    if (!(aperture_min < aperture_max))
      throw ConfigError("aperture_min must be less than aperture_max");
  }
};

// Axis-aligned-in-its-own-frame cuboid: center, orthonormal axes
// (columns of axes), and half extents along those axes.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  Vec3 half_extents = Vec3::Zero();

  bool contains(const Vec3& p) const {
    const Vec3 local = axes.transpose() * (p - center);
    return std::abs(local(0)) <= half_extents(0) &&
           std::abs(local(1)) <= half_extents(1) &&
           std::abs(local(2)) <= half_extents(2);
  }

  bool contains_strict(const Vec3& p) const {
    const Vec3 local = axes.transpose() * (p - center);
    return std::abs(local(0)) < half_extents(0) &&
           std::abs(local(1)) < half_extents(1) &&
           std::abs(local(2)) < half_extents(2);
  }
};

// Hand frame convention used everywhere in this library:
//   x = approach direction (hand moves along +x toward the object)
//   y = curvature axis of the frame the candidate was spawned from
//   z = closing axis (fingers translate along z when the hand closes)
// The pose origin sits at the center of the closing region.

// Closing region R for a hand at the given pose with the given aperture:
// the volume swept between the open fingers.
inline OrientedBox closing_region(const Isometry& pose,
                                  const HandGeometry& hand,
                                  double aperture) {
  OrientedBox box;
  box.center = pose.translation();
  box.axes = pose.rotation();
  box.half_extents =
      Vec3(hand.finger_depth / 2.0, hand.hand_height / 2.0, aperture / 2.0);
  return box;
}

// The two finger bodies flanking the closing region at z = +/-
// (aperture/2 + finger_width/2), optionally inflated on every side.
inline std::array<OrientedBox, 2> finger_boxes(const Isometry& pose,
                                               const HandGeometry& hand,
                                               double aperture,
                                               double inflation = 0.0) {
  std::array<OrientedBox, 2> out;
  const Mat3 rot = pose.rotation();
  const Vec3 z = rot.col(2);
  const double zc = aperture / 2.0 + hand.finger_width / 2.0;
  const Vec3 he(hand.finger_depth / 2.0 + inflation,
                hand.hand_height / 2.0 + inflation,
                hand.finger_width / 2.0 + inflation);
  for (int s = 0; s < 2; ++s) {
    out[s].center = pose.translation() + (s == 0 ? zc : -zc) * z;
    out[s].axes = rot;
    out[s].half_extents = he;
  }
  return out;
}

}  // namespace gpk
