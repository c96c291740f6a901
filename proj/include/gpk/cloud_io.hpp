#pragma once

#include <filesystem>

#include "gpk/cloud.hpp"

namespace gpk {

enum class PlyFormat { ascii, binary_little_endian };

// Loads a .ply (ASCII or binary little-endian, float32 x/y/z) or .pcd
// (ASCII, FIELDS including x y z) file and tags every point with the
// given viewpoint. Records with non-finite coordinates are dropped.
// Throws IoError on unreadable files, unsupported formats, or when no
// valid point remains.
CloudWithViewpoints load_cloud(const std::filesystem::path& path,
                               const Viewpoint& viewpoint);

// Loads a cloud file plus its "<file>.views.json" sidecar carrying the
// full viewpoint set and per-point associations.
CloudWithViewpoints load_cloud_with_sidecar(const std::filesystem::path& path);

// Writes the points as PLY (x/y/z float32) and the viewpoint provenance
// sidecar "<file>.views.json" next to it.
void save_cloud(const CloudWithViewpoints& cloud,
                const std::filesystem::path& path,
                PlyFormat format = PlyFormat::binary_little_endian);

std::filesystem::path sidecar_path(const std::filesystem::path& cloud_path);

}  // namespace gpk
