#pragma once

#include <string>
#include <vector>

#include "gpk/antipodal.hpp"
#include "gpk/candidates.hpp"
#include "gpk/dataset.hpp"
#include "gpk/render.hpp"

namespace gpk {

struct MeshEntry {
  std::string name;
  TriangleMesh mesh;
};

struct DatasetBuildConfig {
  HandGeometry hand;
  AntipodalParams antipodal;
  CandidateConfig candidates;  // n_samples applies per view pair
  StereoConfig stereo;         // azimuth is varied per view pair
  Variant variant = Variant::FIFTEEN;
  int n_view_pairs = 4;        // stereo pairs per mesh, spread in azimuth
  bool balance = true;         // subsample majority class per object
  int threads = 0;
};

struct MeshDiagnostics {
  std::string object;
  int candidates = 0;
  int positives = 0;
  int negatives = 0;
  int kept = 0;
};

struct DatasetBuildResult {
  Dataset dataset;
  std::vector<MeshDiagnostics> diagnostics;
  int skipped_meshes = 0;
};

// Full exemplar pipeline per mesh: stereo scans at n_view_pairs azimuths,
// candidate sampling on each merged cloud, closing-region encoding, and
// antipodal labeling against the source mesh. Record order is
// (mesh, view pair, candidate) regardless of thread count; meshes that
// yield no candidates are skipped and counted.
DatasetBuildResult build_dataset(const std::vector<MeshEntry>& meshes,
                                 const DatasetBuildConfig& config,
                                 std::uint64_t seed);

// One JSON line per mesh with candidate/positive/negative/kept counts.
void save_diagnostics(const DatasetBuildResult& result,
                      const std::string& path);

}  // namespace gpk
