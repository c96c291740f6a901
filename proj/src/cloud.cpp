#include "gpk/cloud.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace gpk {

void CloudWithViewpoints::validate() const {
  if (view_of.size() != points.size()) {
    throw Error("cloud: view_of size does not match point count");
  }
  std::vector<int> ids;
  ids.reserve(viewpoints.size());
  for (const Viewpoint& vp : viewpoints) {
    if (!vp.position.allFinite()) {
      throw Error("cloud: non-finite viewpoint position");
    }
    ids.push_back(vp.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error("cloud: duplicate viewpoint id");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error("cloud: non-finite point coordinate");
    }
    if (view_of[i].empty()) {
      throw Error("cloud: point without an associated viewpoint");
    }
    for (int id : view_of[i]) {
      if (!std::binary_search(ids.begin(), ids.end(), id)) {
        throw Error("cloud: point references unknown viewpoint id");
      }
    }
  }
}

const Viewpoint& CloudWithViewpoints::viewpoint_by_id(int id) const {
  for (const Viewpoint& vp : viewpoints) {
    if (vp.id == id) return vp;
  }
  throw Error("cloud: unknown viewpoint id " + std::to_string(id));
}

Eigen::AlignedBox3d CloudWithViewpoints::bounding_box() const {
  Eigen::AlignedBox3d box;
  for (const Vec3& p : points) box.extend(p);
  return box;
}

RegionOfInterest RegionOfInterest::all(std::size_t cloud_size) {
  RegionOfInterest roi;
  roi.indices.resize(cloud_size);
  for (std::size_t i = 0; i < cloud_size; ++i) {
    roi.indices[i] = static_cast<int>(i);
  }
  return roi;
}

RegionOfInterest RegionOfInterest::from_indices(std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  RegionOfInterest roi;
  roi.indices = std::move(idx);
  return roi;
}

void RegionOfInterest::validate_against(const CloudWithViewpoints& cloud) const {
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= cloud.size()) {
      throw Error("roi: index out of range");
    }
  }
}

CloudWithViewpoints merge_clouds(const CloudWithViewpoints& a,
                                 const CloudWithViewpoints& b) {
  CloudWithViewpoints out;
  out.points.reserve(a.size() + b.size());
  out.view_of.reserve(a.size() + b.size());
  out.viewpoints.reserve(a.viewpoints.size() + b.viewpoints.size());

  std::unordered_map<int, int> remap_a, remap_b;
  int next_id = 0;
  for (const Viewpoint& vp : a.viewpoints) {
    remap_a[vp.id] = next_id;
    out.viewpoints.push_back({vp.position, next_id});
    ++next_id;
  }
  for (const Viewpoint& vp : b.viewpoints) {
    remap_b[vp.id] = next_id;
    out.viewpoints.push_back({vp.position, next_id});
    ++next_id;
  }

  auto append = [&out](const CloudWithViewpoints& src,
                       const std::unordered_map<int, int>& remap) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      out.points.push_back(src.points[i]);
      std::vector<int> ids;
      ids.reserve(src.view_of[i].size());
      for (int id : src.view_of[i]) ids.push_back(remap.at(id));
      std::sort(ids.begin(), ids.end());
      out.view_of.push_back(std::move(ids));
    }
  };
  append(a, remap_a);
  append(b, remap_b);
  return out;
}

namespace {

struct LeafKey {
  std::int64_t x, y, z;
  bool operator<(const LeafKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

}  // namespace

CloudWithViewpoints voxel_downsample(const CloudWithViewpoints& cloud,
                                     double leaf) {
  if (!(leaf > 0.0)) throw Error("voxel_downsample: leaf must be positive");

  struct Accum {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    std::vector<int> ids;
  };
  std::map<LeafKey, Accum> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const LeafKey key{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                      static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                      static_cast<std::int64_t>(std::floor(p.z() / leaf))};
    Accum& acc = cells[key];
    acc.sum += p;
    acc.count += 1;
    acc.ids.insert(acc.ids.end(), cloud.view_of[i].begin(),
                   cloud.view_of[i].end());
  }

  CloudWithViewpoints out;
  out.viewpoints = cloud.viewpoints;
  out.points.reserve(cells.size());
  out.view_of.reserve(cells.size());
  for (auto& [key, acc] : cells) {
    out.points.push_back(acc.sum / static_cast<double>(acc.count));
    std::sort(acc.ids.begin(), acc.ids.end());
    acc.ids.erase(std::unique(acc.ids.begin(), acc.ids.end()), acc.ids.end());
    out.view_of.push_back(std::move(acc.ids));
  }
  return out;
}

CloudWithViewpoints transform_cloud(const CloudWithViewpoints& cloud,
                                    const Isometry& transform) {
  CloudWithViewpoints out = cloud;
  for (Vec3& p : out.points) p = transform * p;
  for (Viewpoint& vp : out.viewpoints) vp.position = transform * vp.position;
  return out;
}

}  // namespace gpk
