#pragma once

#include "gpk/candidates.hpp"
#include "gpk/hand.hpp"
#include "gpk/mesh.hpp"

namespace gpk {

struct AntipodalParams {
  double vertex_perturbation = 0.001;      // contact slab thickness, m
  double normal_cone_tolerance_deg = 10.0;
  double contact_line_tolerance_deg = 10.0;
  double samples_per_m2 = 2.0e6;           // mesh surface sampling density

  void validate() const {
    if (vertex_perturbation < 0.0 || normal_cone_tolerance_deg < 0.0 ||
        contact_line_tolerance_deg < 0.0)
      throw ConfigError("antipodal tolerances must be non-negative");
    if (!(samples_per_m2 > 0.0))
      throw ConfigError("sampling density must be positive");
  }
};

enum class GraspLabel { NEGATIVE = 0, POSITIVE = 1 };

struct LabelDetail {
  GraspLabel label = GraspLabel::NEGATIVE;
  bool open_pose_penetration = false;  // fingers intersected the surface
  bool contact_found = false;          // both fingers reached the surface
  double contact_gap = 0.0;            // finger separation at contact, m
};

// Closes the hand on the mesh in simulation and reports whether a
// frictionless antipodal grasp forms: each finger sweeps inward along the
// closing axis to its first surface contact, a slab of surface samples
// behind each contact plane forms that finger's contact region, and the
// grasp is POSITIVE when some cross-region pair has surface normals
// anti-parallel to the closing directions (within the normal cone
// tolerance) and a connecting segment aligned with the closing axis
// (within the line tolerance).
LabelDetail label_candidate_detail(const std::vector<SurfaceSample>& samples,
                                   const GraspCandidate& candidate,
                                   const HandGeometry& hand,
                                   const AntipodalParams& params);

LabelDetail label_candidate_detail(const TriangleMesh& mesh,
                                   const GraspCandidate& candidate,
                                   const HandGeometry& hand,
                                   const AntipodalParams& params);

GraspLabel label_candidate(const TriangleMesh& mesh,
                           const GraspCandidate& candidate,
                           const HandGeometry& hand,
                           const AntipodalParams& params);

}  // namespace gpk
