#pragma once

#include <vector>

#include "gpk/candidates.hpp"
#include "gpk/cnn.hpp"
#include "gpk/encode.hpp"
#include "gpk/metrics.hpp"

namespace gpk {

struct ScoredGrasp {
  GraspCandidate candidate;
  double score = 0.0;
  // Finger gap needed to enclose the points in the closing region. Filled
  // by detect so selection can prune on width without the cloud in hand.
  double required_width = 0.0;
};

struct SelectionConfig {
  double width_min = 0.03;
  double width_max = 0.07;
  double cluster_position_radius = 0.02;
  double cluster_angle_tolerance_deg = 15.0;
  double w_height = 1.0;
  double w_width = 1.0;
  double w_vertical_angle = 1.0;
  double w_distance = 0.0;
  Vec3 nominal_point = Vec3::Zero();

  void validate() const {
    if (!(width_min >= 0.0 && width_max > width_min))
      throw ConfigError("selection width limits must satisfy 0 <= min < max");
    if (!(cluster_position_radius > 0.0))
      throw ConfigError("cluster_position_radius must be positive");
    if (!(cluster_angle_tolerance_deg > 0.0))
      throw ConfigError("cluster_angle_tolerance_deg must be positive");
    for (double w : {w_height, w_width, w_vertical_angle, w_distance})
      if (!std::isfinite(w)) throw ConfigError("utility weights must be finite");
  }
};

// Samples candidates on the region of interest, encodes them, scores them
// with the classifier, and keeps those with score >= threshold. Output is
// sorted by descending score; equal scores keep candidate order.
std::vector<ScoredGrasp> detect(const CloudWithViewpoints& cloud,
                                const RegionOfInterest& roi,
                                const HandGeometry& hand,
                                const CnnModel& model, Variant variant,
                                double threshold,
                                const CandidateConfig& config = {},
                                std::uint64_t seed = 0, int threads = 0);

// Width-prunes, replaces every position with the mean over its cluster
// (one pass, original positions), then maximizes the configured utility.
// Ties go to the higher classifier score, then the earlier grasp.
ScoredGrasp select_grasp(const std::vector<ScoredGrasp>& grasps,
                         const SelectionConfig& config);

// JSON-lines round trip, one grasp per line: the candidate fields plus
// score and required_width.
void save_scored_grasps(const std::vector<ScoredGrasp>& grasps,
                        const std::string& path);
std::vector<ScoredGrasp> load_scored_grasps(const std::string& path);

}  // namespace gpk
