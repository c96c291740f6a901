#include "gpk/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace gpk {

namespace {

// Base hand orientation at a local frame: x = approach = -normal,
// y = curvature axis, z = x cross y so the basis is right-handed.
Mat3 base_orientation(const LocalFrame& frame) {
  Mat3 rot;
  rot.col(0) = -frame.normal;
  rot.col(1) = frame.curvature_axis;
  rot.col(2) = rot.col(0).cross(rot.col(1));
  return rot;
}

struct PushResult {
  bool contact = false;
  double offset = 0.0;  // hand center offset along approach from the sample
};

// Closed-form push to first contact. The hand starts with its fingers
// fully behind the cloud along the approach axis and advances in fixed
// steps; the returned offset is the last step before a point enters an
// inflated finger or crosses the hand base plane.
PushResult push_to_contact(const std::vector<Vec3>& local_points,
                           const HandGeometry& hand, double aperture,
                           double step, double inflation) {
  const double fd2 = hand.finger_depth / 2.0;
  const double hh2 = hand.hand_height / 2.0;
  const double fw = hand.finger_width;
  const double a2 = aperture / 2.0;

  double stop = std::numeric_limits<double>::infinity();
  double min_x = std::numeric_limits<double>::infinity();
  for (const Vec3& q : local_points) {
    min_x = std::min(min_x, q(0));
    const double ay = std::abs(q(1));
    const double az = std::abs(q(2));
    if (ay > hh2 + inflation) continue;
    if (az > a2 + fw + inflation) continue;
    // Inside the hand cross-section. Points in the finger z-band stop the
    // advance when a finger's leading face reaches them; every point in
    // the cross-section stops it at the base plane.
    if (az >= a2 - inflation)
      stop = std::min(stop, q(0) - fd2 - inflation);
    stop = std::min(stop, q(0) + fd2 - inflation);
  }

  PushResult result;
  if (!std::isfinite(stop)) return result;

  const double start = min_x - fd2 - inflation - 2.0 * step;
  const int last_free =
      static_cast<int>(std::ceil((stop - start) / step)) - 1;
  if (last_free < 0) return result;
  result.contact = true;
  result.offset = start + last_free * step;
  return result;
}

}  // namespace

std::vector<GraspCandidate> sample_candidates(const CloudWithViewpoints& cloud,
                                              const RegionOfInterest& roi,
                                              const HandGeometry& hand,
                                              const CandidateConfig& config,
                                              uint64_t seed,
                                              int threads) {
  hand.validate();
  roi.validate_against(cloud);
  if (config.n_samples <= 0 || config.n_orientations <= 0)
    throw ConfigError("sample and orientation counts must be positive");
  if (roi.empty()) return {};

  std::vector<int> pool = roi.indices;
  std::sort(pool.begin(), pool.end());

  SpatialGrid grid(
      std::span<const Vec3>(cloud.points.data(), cloud.points.size()),
      config.frame.radius);

  const double aperture = hand.aperture_max;
  std::vector<std::vector<GraspCandidate>> per_sample(config.n_samples);

  parallel_for(config.n_samples, threads, [&](int s) {
    Rng rng = Rng::substream(seed, static_cast<uint64_t>(s));
    const int point_index = pool[rng.uniform_int(pool.size())];

    auto frame = estimate_frame(cloud, grid, point_index, config.frame);
    if (!frame) return;

    const Vec3 p = frame->origin;
    const Mat3 rot0 = base_orientation(*frame);

    for (int k = 0; k < config.n_orientations; ++k) {
      const double angle =
          -M_PI / 2.0 + k * (M_PI / config.n_orientations);
      const Mat3 rot =
          Eigen::AngleAxisd(angle, frame->curvature_axis).toRotationMatrix() *
          rot0;

      std::vector<Vec3> local(cloud.points.size());
      for (size_t i = 0; i < cloud.points.size(); ++i)
        local[i] = rot.transpose() * (cloud.points[i] - p);

      const PushResult push =
          push_to_contact(local, hand, aperture, config.push_step,
                          config.contact_inflation);
      if (!push.contact) continue;

      Isometry pose = Isometry::Identity();
      pose.linear() = rot;
      pose.translation() = p + push.offset * rot.col(0);

      const auto fingers = finger_boxes(pose, hand, aperture, 0.0);
      const OrientedBox region = closing_region(pose, hand, aperture);
      bool finger_hit = false;
      bool contained = false;
      for (const Vec3& q : cloud.points) {
        if (fingers[0].contains(q) || fingers[1].contains(q)) {
          finger_hit = true;
          break;
        }
        if (!contained && region.contains_strict(q)) contained = true;
      }
      if (finger_hit || !contained) continue;

      GraspCandidate cand;
      cand.pose = pose;
      cand.frame = *frame;
      cand.aperture = aperture;
      cand.sample_index = point_index;
      per_sample[s].push_back(std::move(cand));
    }
  });

  std::vector<GraspCandidate> out;
  for (auto& chunk : per_sample)
    for (auto& cand : chunk) out.push_back(std::move(cand));
  return out;
}

double required_width(const GraspCandidate& candidate,
                      const CloudWithViewpoints& cloud,
                      const HandGeometry& hand) {
  const OrientedBox region = candidate.closing_region(hand);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Vec3& q : cloud.points) {
    if (!region.contains(q)) continue;
    const double z = region.axes.col(2).dot(q - region.center);
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  if (!(hi >= lo)) return 0.0;
  return hi - lo;
}

void save_candidates(const std::vector<GraspCandidate>& candidates,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& cand : candidates) {
    nlohmann::ordered_json j;
    const Mat3 rot = cand.pose.rotation();
    j["rotation"] = {
        {rot(0, 0), rot(0, 1), rot(0, 2)},
        {rot(1, 0), rot(1, 1), rot(1, 2)},
        {rot(2, 0), rot(2, 1), rot(2, 2)},
    };
    const Vec3 t = cand.pose.translation();
    j["translation"] = {t(0), t(1), t(2)};
    j["aperture"] = cand.aperture;
    j["sample_index"] = cand.sample_index;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<GraspCandidate> load_candidates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<GraspCandidate> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw IoError("bad candidate line " + std::to_string(line_no) + " in " +
                    path + ": " + e.what());
    }
    GraspCandidate cand;
    Mat3 rot;
    const auto& jr = j.at("rotation");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot(r, c) = jr.at(r).at(c).get<double>();
    const auto& jt = j.at("translation");
    Isometry pose = Isometry::Identity();
    pose.linear() = rot;
    pose.translation() =
        Vec3(jt.at(0).get<double>(), jt.at(1).get<double>(),
             jt.at(2).get<double>());
    cand.pose = pose;
    cand.aperture = j.at("aperture").get<double>();
    cand.sample_index = j.at("sample_index").get<int>();
    cand.frame.origin = pose.translation();
    cand.frame.normal = -rot.col(0);
    cand.frame.curvature_axis = rot.col(1);
    cand.frame.binormal = cand.frame.normal.cross(cand.frame.curvature_axis);
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace gpk
