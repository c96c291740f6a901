#pragma once

#include <string>
#include <vector>

#include "gpk/encode.hpp"

namespace gpk {

struct DatasetRecord {
  std::string object;
  std::vector<int> view_ids;
  int label = 0;  // 1 = graspable
};

// Image tensor corpus: a manifest describing the records plus a flat
// float32 little-endian blob, record-major and channel-major per record.
struct Dataset {
  int channels = 0;
  int width = kGridSize;
  int height = kGridSize;
  Variant variant = Variant::FIFTEEN;
  std::vector<DatasetRecord> records;
  std::vector<float> data;

  int count() const { return static_cast<int>(records.size()); }
  int record_floats() const { return channels * width * height; }
  const float* record_data(int i) const {
    return data.data() + static_cast<size_t>(i) * record_floats();
  }
  float* record_data(int i) {
    return data.data() + static_cast<size_t>(i) * record_floats();
  }
  void validate() const;
};

void save_dataset(const Dataset& dataset, const std::string& manifest_path,
                  const std::string& blob_path);
Dataset load_dataset(const std::string& manifest_path,
                     const std::string& blob_path);

// Base-path convenience: <base>.json and <base>.bin.
void save_dataset(const Dataset& dataset, const std::string& base_path);
Dataset load_dataset(const std::string& base_path);

// Re-encode a full-stack dataset into a channel-subset variant without
// touching the source records.
Dataset slice_dataset(const Dataset& dataset, Variant to);

// Subset by record indices, preserving order.
Dataset subset_dataset(const Dataset& dataset, const std::vector<int>& keep);

}  // namespace gpk
