#pragma once

#include <string>
#include <vector>

#include "gpk/cloud.hpp"
#include "gpk/hand.hpp"
#include "gpk/local_frame.hpp"

namespace gpk {

struct GraspCandidate {
  Isometry pose = Isometry::Identity();  // hand frame -> world
  LocalFrame frame;                      // frame it was spawned from
  double aperture = 0.0;
  int sample_index = -1;  // cloud point index the sample was drawn at

  OrientedBox closing_region(const HandGeometry& hand) const {
    return gpk::closing_region(pose, hand, aperture);
  }
};

struct CandidateConfig {
  int n_samples = 100;
  int n_orientations = 8;  // evenly spaced in [-90, +90) deg
  double push_step = 0.002;
  double contact_inflation = 0.001;
  FrameConfig frame;
};

// Samples grasp candidates: draw points uniformly from the roi, estimate
// a local frame at each, rotate the hand about the curvature axis, and
// push it along the approach direction until a finger or the hand base
// first meets the cloud. Emitted candidates have both finger bodies free
// of cloud points and at least one point strictly inside the closing
// region. Deterministic for a fixed seed, independent of thread count.
std::vector<GraspCandidate> sample_candidates(const CloudWithViewpoints& cloud,
                                              const RegionOfInterest& roi,
                                              const HandGeometry& hand,
                                              const CandidateConfig& config,
                                              uint64_t seed,
                                              int threads = 0);

// Width of the span of contained points along the closing axis; the
// aperture the fingers would need to straddle what the region holds.
double required_width(const GraspCandidate& candidate,
                      const CloudWithViewpoints& cloud,
                      const HandGeometry& hand);

// JSON-lines round trip: one candidate per line with the rotation
// (row-major 3x3), translation, aperture, and source sample index.
void save_candidates(const std::vector<GraspCandidate>& candidates,
                     const std::string& path);
std::vector<GraspCandidate> load_candidates(const std::string& path);

}  // namespace gpk
