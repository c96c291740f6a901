#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpk/antipodal.hpp"
#include "gpk/candidates.hpp"
#include "gpk/cnn.hpp"
#include "gpk/detect.hpp"
#include "gpk/encode.hpp"
#include "gpk/render.hpp"

namespace gpk {

struct ConfigValue {
  enum class Kind { STRING, NUMBER, BOOLEAN, NUMBER_ARRAY };
  Kind kind = Kind::STRING;
  std::string str;
  double num = 0.0;
  long long integer = 0;
  bool is_integer = false;
  bool boolean = false;
  std::vector<double> array;
};

// Flat "section.key" -> value map.
using ConfigMap = std::map<std::string, ConfigValue>;

// Minimal TOML-style parser: [section] headers, key = value lines,
// # comments. Values are quoted strings, numbers, true/false, or
// [n, n, ...] number arrays. Duplicate or unsectioned keys are errors.
ConfigMap parse_config(const std::string& text);
ConfigMap load_config_file(const std::string& path);

// Every knob of the pipeline with its default. apply() overlays a parsed
// file and rejects keys it does not know; to_toml() prints the resolved
// state in a form parse_config accepts back.
struct RunConfig {
  HandGeometry hand;
  CandidateConfig candidates;
  AntipodalParams antipodal;
  StereoConfig stereo;
  Variant variant = Variant::FIFTEEN;
  int n_view_pairs = 4;
  bool balance = true;
  SolverConfig solver;
  double test_fraction = 0.25;
  double min_precision = 0.99;
  SelectionConfig selection;
  double detect_threshold = 0.5;
  std::uint64_t seed = 0;
  int threads = 0;

  void apply(const ConfigMap& values);
  std::string to_toml() const;
  void validate() const;
};

}  // namespace gpk
