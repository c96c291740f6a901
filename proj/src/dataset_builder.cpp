#include "gpk/dataset_builder.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

#include "gpk/local_frame.hpp"

namespace gpk {

namespace {

struct PendingPair {
  int pair = 0;
  CloudWithViewpoints cloud;
  std::vector<GraspCandidate> candidates;
  std::vector<int> labels;
};

}  // namespace

DatasetBuildResult build_dataset(const std::vector<MeshEntry>& meshes,
                                 const DatasetBuildConfig& config,
                                 std::uint64_t seed) {
  config.hand.validate();
  config.antipodal.validate();
  if (config.n_view_pairs <= 0)
    throw ConfigError("n_view_pairs must be positive");

  DatasetBuildResult result;
  result.dataset.variant = config.variant;
  result.dataset.channels = variant_channels(config.variant);

  for (size_t m = 0; m < meshes.size(); ++m) {
    const MeshEntry& entry = meshes[m];
    const std::vector<SurfaceSample> surface =
        sample_surface(entry.mesh, config.antipodal.samples_per_m2);

    MeshDiagnostics diag;
    diag.object = entry.name;
    std::vector<PendingPair> pending;

    for (int pair = 0; pair < config.n_view_pairs; ++pair) {
      StereoConfig stereo = config.stereo;
      stereo.azimuth_deg += 360.0 * pair / config.n_view_pairs;
      CloudWithViewpoints cloud;
      try {
        cloud = stereo_render(entry.mesh, stereo);
      } catch (const Error&) {
        continue;  // a view pair that sees nothing contributes nothing
      }

      const std::uint64_t pair_seed =
          splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(m) << 20) |
                                       static_cast<std::uint64_t>(pair)));
      PendingPair p;
      p.pair = pair;
      p.cloud = std::move(cloud);
      p.candidates = sample_candidates(
          p.cloud, RegionOfInterest::all(p.cloud.size()), config.hand,
          config.candidates, pair_seed, config.threads);
      if (p.candidates.empty()) continue;
      diag.candidates += static_cast<int>(p.candidates.size());

      p.labels.resize(p.candidates.size());
      parallel_for(p.candidates.size(), config.threads, [&](size_t i) {
        p.labels[i] = label_candidate_detail(surface, p.candidates[i],
                                             config.hand, config.antipodal)
                                  .label == GraspLabel::POSITIVE
                          ? 1
                          : 0;
      });
      for (int l : p.labels) (l ? diag.positives : diag.negatives) += 1;
      pending.push_back(std::move(p));
    }

    size_t total = 0;
    for (const PendingPair& p : pending) total += p.candidates.size();
    if (total == 0) {
      ++result.skipped_meshes;
      result.diagnostics.push_back(diag);
      continue;
    }

    // Balance before encoding: images are only built for kept records.
    // Flat index i enumerates (pair, candidate) in emission order.
    std::vector<char> keep(total, 1);
    if (config.balance) {
      std::vector<int> pos, neg;
      size_t base = 0;
      for (const PendingPair& p : pending) {
        for (size_t i = 0; i < p.labels.size(); ++i)
          (p.labels[i] ? pos : neg).push_back(static_cast<int>(base + i));
        base += p.labels.size();
      }
      const size_t parity = std::min(pos.size(), neg.size());
      Rng rng = Rng::substream(seed, 0xba1a9ce0ull + m);
      rng.shuffle(pos);
      rng.shuffle(neg);
      pos.resize(parity);
      neg.resize(parity);
      std::fill(keep.begin(), keep.end(), 0);
      for (int i : pos) keep[i] = 1;
      for (int i : neg) keep[i] = 1;
    }

    size_t base = 0;
    for (const PendingPair& p : pending) {
      std::vector<GraspCandidate> kept_cands;
      std::vector<int> kept_labels;
      for (size_t i = 0; i < p.candidates.size(); ++i) {
        if (!keep[base + i]) continue;
        kept_cands.push_back(p.candidates[i]);
        kept_labels.push_back(p.labels[i]);
      }
      base += p.candidates.size();
      if (kept_cands.empty()) continue;

      std::vector<GraspImage> images = encode_candidates(
          p.cloud, kept_cands, config.hand, config.variant, config.threads);
      const std::vector<int> view_ids = {2 * p.pair, 2 * p.pair + 1};
      for (size_t i = 0; i < kept_cands.size(); ++i) {
        DatasetRecord rec;
        rec.object = entry.name;
        rec.view_ids = view_ids;
        rec.label = kept_labels[i];
        result.dataset.records.push_back(std::move(rec));
        result.dataset.data.insert(result.dataset.data.end(),
                                   images[i].data.begin(),
                                   images[i].data.end());
        ++diag.kept;
      }
    }
    result.diagnostics.push_back(diag);
  }

  result.dataset.validate();
  return result;
}

void save_diagnostics(const DatasetBuildResult& result,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const MeshDiagnostics& d : result.diagnostics) {
    nlohmann::ordered_json j;
    j["object"] = d.object;
    j["candidates"] = d.candidates;
    j["positives"] = d.positives;
    j["negatives"] = d.negatives;
    j["kept"] = d.kept;
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json tail;
  tail["skipped_meshes"] = result.skipped_meshes;
  out << tail.dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gpk
