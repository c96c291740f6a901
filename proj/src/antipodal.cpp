#include "gpk/antipodal.hpp"

#include <cmath>
#include <limits>

namespace gpk {

LabelDetail label_candidate_detail(const std::vector<SurfaceSample>& samples,
                                   const GraspCandidate& candidate,
                                   const HandGeometry& hand,
                                   const AntipodalParams& params) {
  params.validate();
  hand.validate();

  const Mat3 rot = candidate.pose.rotation();
  const Vec3 origin = candidate.pose.translation();
  const double fd2 = hand.finger_depth / 2.0;
  const double hh2 = hand.hand_height / 2.0;
  const double a2 = candidate.aperture / 2.0;
  const double fw = hand.finger_width;
  const double eps = params.vertex_perturbation;

  LabelDetail detail;

  // Hand-frame samples inside the finger footprint (approach/height
  // cross-section), split by role.
  struct LocalSample {
    Vec3 q;  // position, hand frame
    Vec3 n;  // face normal, hand frame
  };
  std::vector<LocalSample> between;
  double z1 = -std::numeric_limits<double>::infinity();
  double z2 = std::numeric_limits<double>::infinity();
  for (const SurfaceSample& s : samples) {
    const Vec3 q = rot.transpose() * (s.position - origin);
    if (std::abs(q(0)) > fd2 || std::abs(q(1)) > hh2) continue;
    const double az = std::abs(q(2));
    if (az > a2 && az < a2 + fw) {
      detail.open_pose_penetration = true;
      return detail;  // NEGATIVE: fingers collide with the mesh when open
    }
    if (az <= a2) {
      between.push_back({q, rot.transpose() * s.normal});
      z1 = std::max(z1, q(2));
      z2 = std::min(z2, q(2));
    }
  }

  if (between.empty()) return detail;  // nothing to close on
  const double gap = z1 - z2;
  detail.contact_found = true;
  detail.contact_gap = gap;
  if (gap < hand.aperture_min || gap > hand.aperture_max) return detail;

  const double cos_cone = std::cos(deg2rad(params.normal_cone_tolerance_deg));
  const double cos_line = std::cos(deg2rad(params.contact_line_tolerance_deg));

  // Contact regions with qualifying normals. Finger 1 closes from +z, so
  // its contacts face +z; finger 2 faces -z.
  std::vector<const LocalSample*> r1, r2;
  for (const LocalSample& s : between) {
    if (std::abs(s.q(2) - z1) <= eps && s.n(2) >= cos_cone)
      r1.push_back(&s);
    if (std::abs(s.q(2) - z2) <= eps && -s.n(2) >= cos_cone)
      r2.push_back(&s);
  }

  for (const LocalSample* p1 : r1) {
    for (const LocalSample* p2 : r2) {
      const Vec3 d = p1->q - p2->q;
      const double len = d.norm();
      if (len < 1e-12) continue;
      if (std::abs(d(2)) / len >= cos_line) {
        detail.label = GraspLabel::POSITIVE;
        return detail;
      }
    }
  }
  return detail;
}

LabelDetail label_candidate_detail(const TriangleMesh& mesh,
                                   const GraspCandidate& candidate,
                                   const HandGeometry& hand,
                                   const AntipodalParams& params) {
  return label_candidate_detail(sample_surface(mesh, params.samples_per_m2),
                                candidate, hand, params);
}

GraspLabel label_candidate(const TriangleMesh& mesh,
                           const GraspCandidate& candidate,
                           const HandGeometry& hand,
                           const AntipodalParams& params) {
  return label_candidate_detail(mesh, candidate, hand, params).label;
}

}  // namespace gpk
