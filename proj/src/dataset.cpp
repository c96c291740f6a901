#include "gpk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gpk {

void Dataset::validate() const {
  if (channels <= 0) throw ConfigError("dataset channels must be positive");
  if (width != kGridSize || height != kGridSize)
    throw ConfigError("dataset image size must be " +
                      std::to_string(kGridSize));
  if (channels != variant_channels(variant))
    throw ConfigError("dataset channel count does not match variant");
  if (data.size() !=
      static_cast<size_t>(count()) * static_cast<size_t>(record_floats()))
    throw ConfigError("dataset blob size does not match manifest");
  for (const auto& rec : records)
    if (rec.label != 0 && rec.label != 1)
      throw ConfigError("dataset labels must be 0 or 1");
  for (float v : data)
    if (!std::isfinite(v)) throw ConfigError("dataset contains non-finite");
}

void save_dataset(const Dataset& dataset, const std::string& manifest_path,
                  const std::string& blob_path) {
  dataset.validate();
  nlohmann::ordered_json j;
  j["count"] = dataset.count();
  j["channels"] = dataset.channels;
  j["width"] = dataset.width;
  j["height"] = dataset.height;
  j["variant"] = variant_name(dataset.variant);
  j["records"] = nlohmann::ordered_json::array();
  for (const auto& rec : dataset.records) {
    nlohmann::ordered_json r;
    r["object"] = rec.object;
    r["view_ids"] = rec.view_ids;
    r["label"] = rec.label;
    j["records"].push_back(std::move(r));
  }
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + manifest_path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + manifest_path);
  }
  {
    std::ofstream out(blob_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + blob_path);
    out.write(reinterpret_cast<const char*>(dataset.data.data()),
              static_cast<std::streamsize>(dataset.data.size() *
                                           sizeof(float)));
    if (!out) throw IoError("write failed: " + blob_path);
  }
}

Dataset load_dataset(const std::string& manifest_path,
                     const std::string& blob_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("bad dataset manifest " + manifest_path + ": " + e.what());
  }

  Dataset ds;
  ds.channels = j.at("channels").get<int>();
  ds.width = j.at("width").get<int>();
  ds.height = j.at("height").get<int>();
  ds.variant = variant_from_name(j.at("variant").get<std::string>());
  const int count = j.at("count").get<int>();
  for (const auto& r : j.at("records")) {
    DatasetRecord rec;
    rec.object = r.at("object").get<std::string>();
    rec.view_ids = r.at("view_ids").get<std::vector<int>>();
    rec.label = r.at("label").get<int>();
    ds.records.push_back(std::move(rec));
  }
  if (ds.count() != count)
    throw IoError("dataset manifest count mismatch in " + manifest_path);

  std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
  if (!blob) throw IoError("cannot open: " + blob_path);
  const std::streamsize bytes = blob.tellg();
  const size_t expect = static_cast<size_t>(ds.count()) *
                        static_cast<size_t>(ds.record_floats()) *
                        sizeof(float);
  if (static_cast<size_t>(bytes) != expect)
    throw IoError("dataset blob size mismatch: " + blob_path);
  blob.seekg(0);
  ds.data.resize(expect / sizeof(float));
  blob.read(reinterpret_cast<char*>(ds.data.data()), bytes);
  if (!blob) throw IoError("read failed: " + blob_path);
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& base_path) {
  save_dataset(dataset, base_path + ".json", base_path + ".bin");
}

Dataset load_dataset(const std::string& base_path) {
  return load_dataset(base_path + ".json", base_path + ".bin");
}

Dataset slice_dataset(const Dataset& dataset, Variant to) {
  if (dataset.variant != Variant::FIFTEEN)
    throw ConfigError("channel slicing requires the full fifteen-channel "
                      "dataset as source");
  const std::vector<int> keep = variant_channel_subset(to);
  Dataset out;
  out.channels = static_cast<int>(keep.size());
  out.variant = to;
  out.records = dataset.records;
  out.data.resize(static_cast<size_t>(out.count()) * out.record_floats());
  for (int i = 0; i < dataset.count(); ++i) {
    const float* src = dataset.record_data(i);
    float* dst = out.record_data(i);
    for (size_t c = 0; c < keep.size(); ++c)
      std::copy_n(src + keep[c] * kImagePixels, kImagePixels,
                  dst + c * kImagePixels);
  }
  return out;
}

Dataset subset_dataset(const Dataset& dataset, const std::vector<int>& keep) {
  Dataset out;
  out.channels = dataset.channels;
  out.variant = dataset.variant;
  out.data.resize(static_cast<size_t>(keep.size()) * dataset.record_floats());
  float* dst = out.data.data();
  for (int i : keep) {
    out.records.push_back(dataset.records[i]);
    std::copy_n(dataset.record_data(i), dataset.record_floats(), dst);
    dst += dataset.record_floats();
  }
  return out;
}

}  // namespace gpk
