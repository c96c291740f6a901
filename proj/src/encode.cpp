#include "gpk/encode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpk/local_frame.hpp"

namespace gpk {

int variant_channels(Variant variant) {
  switch (variant) {
    case Variant::FIFTEEN:
      return 15;
    case Variant::TWELVE:
      return 12;
    case Variant::THREE_CURVATURE:
    case Variant::THREE_APPROACH_KAPPLER:
      return 3;
  }
  throw ConfigError("unknown variant");
}

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::FIFTEEN:
      return "fifteen";
    case Variant::TWELVE:
      return "twelve";
    case Variant::THREE_CURVATURE:
      return "three_curvature";
    case Variant::THREE_APPROACH_KAPPLER:
      return "three_approach_kappler";
  }
  throw ConfigError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "fifteen") return Variant::FIFTEEN;
  if (name == "twelve") return Variant::TWELVE;
  if (name == "three_curvature") return Variant::THREE_CURVATURE;
  if (name == "three_approach_kappler") return Variant::THREE_APPROACH_KAPPLER;
  throw ConfigError("unknown variant name: " + name);
}

std::vector<int> variant_channel_subset(Variant variant) {
  switch (variant) {
    case Variant::FIFTEEN:
      return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    case Variant::TWELVE:
      // The full stack minus the three unobserved-height channels.
      return {0, 2, 3, 4, 5, 7, 8, 9, 10, 12, 13, 14};
    case Variant::THREE_CURVATURE:
      return {7, 8, 9};
    case Variant::THREE_APPROACH_KAPPLER:
      throw ConfigError(
          "three_approach_kappler is not a channel subset of the "
          "fifteen-channel stack");
  }
  throw ConfigError("unknown variant");
}

namespace {

constexpr std::int64_t kDenseBudget = 64ll << 20;  // cells

std::uint64_t pack_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  const std::uint64_t bias = 1ull << 20;
  return ((static_cast<std::uint64_t>(ix) + bias) << 42) |
         ((static_cast<std::uint64_t>(iy) + bias) << 21) |
         (static_cast<std::uint64_t>(iz) + bias);
}

std::int64_t leaf_index(double v, double leaf) {
  return static_cast<std::int64_t>(std::floor(v / leaf));
}

}  // namespace

GlobalOccupancy::GlobalOccupancy(const std::vector<Vec3>& points,
                                 double leaf)
    : leaf_(leaf) {
  if (!(leaf > 0.0)) throw ConfigError("occupancy leaf must be positive");
  if (points.empty()) return;

  std::int64_t hi[3];
  for (int a = 0; a < 3; ++a) {
    lo_[a] = std::numeric_limits<std::int64_t>::max();
    hi[a] = std::numeric_limits<std::int64_t>::min();
  }
  std::vector<std::array<std::int64_t, 3>> cells(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const std::int64_t c = leaf_index(points[i](a), leaf_);
      cells[i][a] = c;
      lo_[a] = std::min(lo_[a], c);
      hi[a] = std::max(hi[a], c);
    }
  }
  std::int64_t total = 1;
  for (int a = 0; a < 3; ++a) {
    dims_[a] = hi[a] - lo_[a] + 1;
    total *= dims_[a];
    if (total > kDenseBudget * 8) break;
  }
  dense_ = total > 0 && total <= kDenseBudget;
  if (dense_) {
    bits_.assign(static_cast<size_t>((total + 63) / 64), 0);
    for (const auto& c : cells) {
      const std::int64_t idx = ((c[0] - lo_[0]) * dims_[1] + (c[1] - lo_[1])) *
                                   dims_[2] +
                               (c[2] - lo_[2]);
      bits_[static_cast<size_t>(idx >> 6)] |= 1ull << (idx & 63);
    }
  } else {
    sparse_.reserve(cells.size());
    for (const auto& c : cells) sparse_.push_back(pack_key(c[0], c[1], c[2]));
    std::sort(sparse_.begin(), sparse_.end());
    sparse_.erase(std::unique(sparse_.begin(), sparse_.end()), sparse_.end());
  }
}

bool GlobalOccupancy::occupied(std::int64_t ix, std::int64_t iy,
                               std::int64_t iz) const {
  if (dense_) {
    if (ix < lo_[0] || iy < lo_[1] || iz < lo_[2] || ix >= lo_[0] + dims_[0] ||
        iy >= lo_[1] + dims_[1] || iz >= lo_[2] + dims_[2])
      return false;
    const std::int64_t idx =
        ((ix - lo_[0]) * dims_[1] + (iy - lo_[1])) * dims_[2] + (iz - lo_[2]);
    return (bits_[static_cast<size_t>(idx >> 6)] >> (idx & 63)) & 1ull;
  }
  if (sparse_.empty()) return false;
  return std::binary_search(sparse_.begin(), sparse_.end(),
                            pack_key(ix, iy, iz));
}

bool GlobalOccupancy::segment_blocked(const Vec3& from, const Vec3& to) const {
  if (bits_.empty() && sparse_.empty()) return false;

  // Restrict the march to the part of the segment inside the occupied
  // bounding box (sparse mode keeps no box; march the whole segment).
  const Vec3 d = to - from;
  const double len = d.norm();
  if (len < 1e-12) return false;

  double t0 = 0.0, t1 = 1.0;
  if (dense_) {
    for (int a = 0; a < 3; ++a) {
      const double box_lo = static_cast<double>(lo_[a]) * leaf_;
      const double box_hi = static_cast<double>(lo_[a] + dims_[a]) * leaf_;
      if (std::abs(d(a)) < 1e-15) {
        if (from(a) < box_lo || from(a) > box_hi) return false;
        continue;
      }
      double ta = (box_lo - from(a)) / d(a);
      double tb = (box_hi - from(a)) / d(a);
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (t0 > t1) return false;
  }

  const std::int64_t own[3] = {leaf_index(from(0), leaf_),
                               leaf_index(from(1), leaf_),
                               leaf_index(from(2), leaf_)};

  // Amanatides-Woo traversal from the clamp entry point toward `to`.
  const Vec3 entry = from + t0 * d;
  std::int64_t cell[3] = {leaf_index(entry(0), leaf_),
                          leaf_index(entry(1), leaf_),
                          leaf_index(entry(2), leaf_)};
  std::int64_t step[3];
  double t_max[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (d(a) > 1e-15) {
      step[a] = 1;
      const double bound = static_cast<double>(cell[a] + 1) * leaf_;
      t_max[a] = (bound - from(a)) / d(a);
      t_delta[a] = leaf_ / d(a);
    } else if (d(a) < -1e-15) {
      step[a] = -1;
      const double bound = static_cast<double>(cell[a]) * leaf_;
      t_max[a] = (bound - from(a)) / d(a);
      t_delta[a] = -leaf_ / d(a);
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  double t = t0;
  while (t <= t1) {
    const bool is_own =
        cell[0] == own[0] && cell[1] == own[1] && cell[2] == own[2];
    if (!is_own && occupied(cell[0], cell[1], cell[2])) return true;
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    t = t_max[axis];
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
  }
  return false;
}

double occupancy_leaf(const HandGeometry& hand, double aperture) {
  return (hand.finger_depth + hand.hand_height + aperture) / 3.0 / kGridSize;
}

CandidateGrid build_grid(const CloudWithViewpoints& cloud,
                         const std::vector<Vec3>& normals,
                         const GraspCandidate& candidate,
                         const HandGeometry& hand,
                         const GlobalOccupancy& occupancy) {
  const OrientedBox region = candidate.closing_region(hand);
  for (int a = 0; a < 3; ++a)
    if (!(region.half_extents(a) > 0.0))
      throw ConfigError("degenerate closing region");

  const int n = kGridSize;
  CandidateGrid grid;
  grid.occupied.assign(static_cast<size_t>(n) * n * n, 0);
  grid.unobserved.assign(static_cast<size_t>(n) * n * n, 0);
  grid.normal.assign(static_cast<size_t>(n) * n * n,
                     Eigen::Vector3f::Zero());

  // World -> unit cube: hand-frame coordinates of the region, shifted to
  // the min corner and divided by the per-axis extent.
  Eigen::Affine3d to_unit = Eigen::Affine3d::Identity();
  to_unit.linear() =
      (2.0 * region.half_extents).cwiseInverse().asDiagonal() *
      region.axes.transpose();
  to_unit.translation() =
      -to_unit.linear() * (region.center - region.axes * region.half_extents);
  grid.world_to_unit = to_unit;

  // Occupancy and summed normals.
  std::vector<Vec3> normal_sum(static_cast<size_t>(n) * n * n, Vec3::Zero());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3 u = to_unit * cloud.points[i];
    if (u(0) < 0.0 || u(0) > 1.0 || u(1) < 0.0 || u(1) > 1.0 || u(2) < 0.0 ||
        u(2) > 1.0)
      continue;
    const int ix = std::min(n - 1, static_cast<int>(u(0) * n));
    const int iy = std::min(n - 1, static_cast<int>(u(1) * n));
    const int iz = std::min(n - 1, static_cast<int>(u(2) * n));
    const int f = CandidateGrid::flat(ix, iy, iz);
    grid.occupied[f] = 1;
    normal_sum[f] += normals[i];
  }
  for (size_t f = 0; f < normal_sum.size(); ++f) {
    if (!grid.occupied[f]) continue;
    Vec3 m = normal_sum[f];
    const double norm = m.norm();
    if (norm < 1e-12) m = Vec3::UnitZ();  // cancelled; arbitrary unit
    else m /= norm;
    grid.normal[f] = m.cast<float>();
  }

  // Unobserved: hidden from every viewpoint behind observed surface.
  const Mat3 axes = region.axes;
  const Vec3 corner = region.center - axes * region.half_extents;
  const Vec3 cell_step = 2.0 * region.half_extents / n;
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      for (int iz = 0; iz < n; ++iz) {
        const int f = CandidateGrid::flat(ix, iy, iz);
        if (grid.occupied[f]) continue;
        const Vec3 center =
            corner + axes * Vec3((ix + 0.5) * cell_step(0),
                                 (iy + 0.5) * cell_step(1),
                                 (iz + 0.5) * cell_step(2));
        bool hidden_from_all = true;
        for (const Viewpoint& vp : cloud.viewpoints) {
          if (!occupancy.segment_blocked(center, vp.position)) {
            hidden_from_all = false;
            break;
          }
        }
        if (hidden_from_all) grid.unobserved[f] = 1;
      }
    }
  }
  return grid;
}

CandidateGrid build_grid(const CloudWithViewpoints& cloud,
                         const GraspCandidate& candidate,
                         const HandGeometry& hand) {
  const std::vector<Vec3> normals =
      compute_cloud_normals(cloud, 0.01, 6, 0);
  const GlobalOccupancy occupancy(
      cloud.points, occupancy_leaf(hand, candidate.aperture));
  return build_grid(cloud, normals, candidate, hand, occupancy);
}

std::vector<float> project(const CandidateGrid& grid, ProjectionAxis axis) {
  const int n = kGridSize;
  const int ax = static_cast<int>(axis);

  std::vector<double> sum_v(kImagePixels, 0.0), sum_hv(kImagePixels, 0.0);
  std::vector<double> sum_u(kImagePixels, 0.0), sum_hu(kImagePixels, 0.0);
  std::vector<Vec3> sum_n(kImagePixels, Vec3::Zero());

  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      for (int z = 0; z < n; ++z) {
        const int f = CandidateGrid::flat(x, y, z);
        const bool v = grid.occupied[f];
        const bool u = grid.unobserved[f];
        if (!v && !u) continue;
        int idx[3] = {x, y, z};
        const int h = idx[ax] + 1;  // 1-based height along the axis
        int row, col;
        switch (ax) {
          case 0:
            row = y;
            col = z;
            break;
          case 1:
            row = x;
            col = z;
            break;
          default:
            row = x;
            col = y;
            break;
        }
        const int p = row * n + col;
        if (v) {
          sum_v[p] += 1.0;
          sum_hv[p] += h;
          sum_n[p] += grid.normal[f].cast<double>();
        }
        if (u) {
          sum_u[p] += 1.0;
          sum_hu[p] += h;
        }
      }
    }
  }

  std::vector<float> out(5 * kImagePixels, 0.0f);
  for (int p = 0; p < kImagePixels; ++p) {
    if (sum_v[p] > 0.0) {
      out[p] = static_cast<float>(sum_hv[p] / sum_v[p] / n);
      const Vec3 mean_abs = (sum_n[p] / sum_v[p]).cwiseAbs();
      out[2 * kImagePixels + p] = static_cast<float>(mean_abs(0));
      out[3 * kImagePixels + p] = static_cast<float>(mean_abs(1));
      out[4 * kImagePixels + p] = static_cast<float>(mean_abs(2));
    }
    if (sum_u[p] > 0.0)
      out[kImagePixels + p] = static_cast<float>(sum_hu[p] / sum_u[p] / n);
  }
  return out;
}

namespace {

// Free-cell heightmap for the Kappler-style baseline: like the
// unobserved channel but over cells that are neither occupied nor
// unobserved, projected along the approach axis.
std::vector<float> free_heightmap_x(const CandidateGrid& grid) {
  const int n = kGridSize;
  std::vector<double> sum_f(kImagePixels, 0.0), sum_hf(kImagePixels, 0.0);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      for (int z = 0; z < n; ++z) {
        const int f = CandidateGrid::flat(x, y, z);
        if (grid.occupied[f] || grid.unobserved[f]) continue;
        const int p = y * n + z;
        sum_f[p] += 1.0;
        sum_hf[p] += x + 1;
      }
    }
  }
  std::vector<float> out(kImagePixels, 0.0f);
  for (int p = 0; p < kImagePixels; ++p)
    if (sum_f[p] > 0.0)
      out[p] = static_cast<float>(sum_hf[p] / sum_f[p] / n);
  return out;
}

}  // namespace

GraspImage encode(const CandidateGrid& grid, Variant variant) {
  GraspImage image;
  image.variant = variant;

  if (variant == Variant::THREE_APPROACH_KAPPLER) {
    const std::vector<float> px = project(grid, ProjectionAxis::approach_x);
    const std::vector<float> free = free_heightmap_x(grid);
    image.data.resize(3 * kImagePixels);
    std::copy_n(px.data(), 2 * kImagePixels, image.data.data());
    std::copy_n(free.data(), kImagePixels,
                image.data.data() + 2 * kImagePixels);
    return image;
  }

  std::vector<float> stack(15 * kImagePixels);
  for (int a = 0; a < 3; ++a) {
    const std::vector<float> block =
        project(grid, static_cast<ProjectionAxis>(a));
    std::copy_n(block.data(), 5 * kImagePixels,
                stack.data() + a * 5 * kImagePixels);
  }

  const std::vector<int> keep = variant_channel_subset(variant);
  image.data.resize(keep.size() * kImagePixels);
  for (size_t c = 0; c < keep.size(); ++c)
    std::copy_n(stack.data() + keep[c] * kImagePixels, kImagePixels,
                image.data.data() + c * kImagePixels);
  return image;
}

std::vector<GraspImage> encode_candidates(
    const CloudWithViewpoints& cloud,
    const std::vector<GraspCandidate>& candidates, const HandGeometry& hand,
    Variant variant, int threads) {
  std::vector<GraspImage> out(candidates.size());
  if (candidates.empty()) return out;
  const std::vector<Vec3> normals =
      compute_cloud_normals(cloud, 0.01, 6, threads);
  const GlobalOccupancy occupancy(
      cloud.points, occupancy_leaf(hand, hand.aperture_max));
  parallel_for(candidates.size(), threads, [&](size_t i) {
    const CandidateGrid grid =
        build_grid(cloud, normals, candidates[i], hand, occupancy);
    out[i] = encode(grid, variant);
  });
  return out;
}

}  // namespace gpk
