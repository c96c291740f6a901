#include "gpk/detect.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace gpk {

std::vector<ScoredGrasp> detect(const CloudWithViewpoints& cloud,
                                const RegionOfInterest& roi,
                                const HandGeometry& hand,
                                const CnnModel& model, Variant variant,
                                double threshold,
                                const CandidateConfig& config,
                                std::uint64_t seed, int threads) {
  if (variant_channels(variant) != model.arch.input_channels)
    throw ConfigError("model channel count does not match encoding variant");

  const std::vector<GraspCandidate> candidates =
      sample_candidates(cloud, roi, hand, config, seed, threads);
  if (candidates.empty()) return {};
  const std::vector<GraspImage> images =
      encode_candidates(cloud, candidates, hand, variant, threads);
  const std::vector<double> scores = predict_scores(model, images);

  std::vector<ScoredGrasp> kept;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (scores[i] < threshold) continue;
    ScoredGrasp g;
    g.candidate = candidates[i];
    g.score = scores[i];
    g.required_width = required_width(candidates[i], cloud, hand);
    kept.push_back(std::move(g));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const ScoredGrasp& a, const ScoredGrasp& b) {
                     return a.score > b.score;
                   });
  return kept;
}

ScoredGrasp select_grasp(const std::vector<ScoredGrasp>& grasps,
                         const SelectionConfig& config) {
  config.validate();

  std::vector<ScoredGrasp> pool;
  for (const ScoredGrasp& g : grasps)
    if (g.required_width >= config.width_min &&
        g.required_width <= config.width_max)
      pool.push_back(g);
  if (pool.empty()) throw Error("no grasp within the width limits");

  const double cos_tol = std::cos(deg2rad(config.cluster_angle_tolerance_deg));
  std::vector<Vec3> averaged(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    const Vec3 pi = pool[i].candidate.pose.translation();
    const Vec3 ai = pool[i].candidate.pose.linear().col(0);
    Vec3 sum = Vec3::Zero();
    int count = 0;
    for (const ScoredGrasp& other : pool) {
      const Vec3 pj = other.candidate.pose.translation();
      const Vec3 aj = other.candidate.pose.linear().col(0);
      if ((pj - pi).norm() > config.cluster_position_radius) continue;
      if (ai.dot(aj) < cos_tol) continue;
      sum += pj;
      ++count;
    }
    averaged[i] = sum / count;
  }
  for (size_t i = 0; i < pool.size(); ++i)
    pool[i].candidate.pose.translation() = averaged[i];

  const double width_span = config.width_max - config.width_min;
  auto utility = [&](const ScoredGrasp& g) {
    const Vec3 p = g.candidate.pose.translation();
    const Vec3 approach = g.candidate.pose.linear().col(0);
    const double norm_width = (g.required_width - config.width_min) / width_span;
    const double vertical = approach.dot(-Vec3::UnitZ());
    return config.w_height * p.z() + config.w_width * (1.0 - norm_width) +
           config.w_vertical_angle * vertical -
           config.w_distance * (p - config.nominal_point).norm();
  };

  size_t best = 0;
  double best_u = utility(pool[0]);
  for (size_t i = 1; i < pool.size(); ++i) {
    const double u = utility(pool[i]);
    if (u > best_u || (u == best_u && pool[i].score > pool[best].score)) {
      best = i;
      best_u = u;
    }
  }
  return pool[best];
}

void save_scored_grasps(const std::vector<ScoredGrasp>& grasps,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const ScoredGrasp& g : grasps) {
    nlohmann::ordered_json j;
    const Mat3 rot = g.candidate.pose.rotation();
    j["rotation"] = {
        {rot(0, 0), rot(0, 1), rot(0, 2)},
        {rot(1, 0), rot(1, 1), rot(1, 2)},
        {rot(2, 0), rot(2, 1), rot(2, 2)},
    };
    const Vec3 t = g.candidate.pose.translation();
    j["translation"] = {t(0), t(1), t(2)};
    j["aperture"] = g.candidate.aperture;
    j["sample_index"] = g.candidate.sample_index;
    j["score"] = g.score;
    j["required_width"] = g.required_width;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ScoredGrasp> load_scored_grasps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<ScoredGrasp> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw IoError("bad grasp line " + std::to_string(line_no) + " in " +
                    path + ": " + e.what());
    }
    ScoredGrasp g;
    Mat3 rot;
    const auto& jr = j.at("rotation");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot(r, c) = jr.at(r).at(c).get<double>();
    const auto& jt = j.at("translation");
    Isometry pose = Isometry::Identity();
    pose.linear() = rot;
    pose.translation() = Vec3(jt.at(0).get<double>(), jt.at(1).get<double>(),
                              jt.at(2).get<double>());
    g.candidate.pose = pose;
    g.candidate.aperture = j.at("aperture").get<double>();
    g.candidate.sample_index = j.at("sample_index").get<int>();
    g.candidate.frame.origin = pose.translation();
    g.candidate.frame.normal = -rot.col(0);
    g.candidate.frame.curvature_axis = rot.col(1);
    g.candidate.frame.binormal =
        g.candidate.frame.normal.cross(g.candidate.frame.curvature_axis);
    g.score = j.at("score").get<double>();
    g.required_width = j.at("required_width").get<double>();
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace gpk
