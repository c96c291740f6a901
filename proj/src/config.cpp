#include "gpk/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace gpk {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

// Drops a trailing # comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (in_string) {
      if (s[i] == '\\') ++i;
      else if (s[i] == '"') in_string = false;
    } else if (s[i] == '"') {
      in_string = true;
    } else if (s[i] == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

std::string parse_string_token(const std::string& token, int line_no) {
  std::string out;
  size_t i = 1;
  for (; i < token.size(); ++i) {
    char c = token[i];
    if (c == '"') break;
    if (c == '\\') {
      if (++i == token.size())
        throw ConfigError("line " + std::to_string(line_no) +
                          ": dangling escape");
      switch (token[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default:
          throw ConfigError("line " + std::to_string(line_no) +
                            ": unsupported escape");
      }
    } else {
      out += c;
    }
  }
  if (i >= token.size() || token[i] != '"' ||
      !trim(token.substr(i + 1)).empty())
    throw ConfigError("line " + std::to_string(line_no) +
                      ": malformed string value");
  return out;
}

double parse_number_token(const std::string& token, int line_no) {
  const std::string t = trim(token);
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + t.size() || t.empty())
    throw ConfigError("line " + std::to_string(line_no) +
                      ": expected a number, got '" + t + "'");
  return v;
}

ConfigValue parse_value(const std::string& raw, int line_no) {
  ConfigValue v;
  const std::string token = trim(raw);
  if (token.empty())
    throw ConfigError("line " + std::to_string(line_no) + ": missing value");
  if (token[0] == '"') {
    v.kind = ConfigValue::Kind::STRING;
    v.str = parse_string_token(token, line_no);
    return v;
  }
  if (token[0] == '[') {
    if (token.back() != ']')
      throw ConfigError("line " + std::to_string(line_no) +
                        ": unterminated array");
    v.kind = ConfigValue::Kind::NUMBER_ARRAY;
    std::string body = token.substr(1, token.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ','))
      v.array.push_back(parse_number_token(item, line_no));
    return v;
  }
  if (token == "true" || token == "false") {
    v.kind = ConfigValue::Kind::BOOLEAN;
    v.boolean = token == "true";
    return v;
  }
  v.kind = ConfigValue::Kind::NUMBER;
  v.num = parse_number_token(token, line_no);
  if (token.find_first_of(".eE") == std::string::npos) {
    errno = 0;
    char* end = nullptr;
    const long long i = std::strtoll(token.c_str(), &end, 10);
    if (errno == 0 && end == token.c_str() + token.size()) {
      v.integer = i;
      v.is_integer = true;
    }
  }
  return v;
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section))
        throw ConfigError("line " + std::to_string(line_no) +
                          ": bad section name '" + section + "'");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key))
      throw ConfigError("line " + std::to_string(line_no) + ": bad key '" +
                        key + "'");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' outside any [section]");
    const std::string full = section + "." + key;
    if (out.count(full))
      throw ConfigError("line " + std::to_string(line_no) +
                        ": duplicate key '" + full + "'");
    out[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace {

double as_number(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::NUMBER)
    throw ConfigError("config key " + key + " expects a number");
  return v.num;
}

long long as_integer(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::NUMBER || !v.is_integer)
    throw ConfigError("config key " + key + " expects an integer");
  return v.integer;
}

bool as_bool(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::BOOLEAN)
    throw ConfigError("config key " + key + " expects true or false");
  return v.boolean;
}

std::string as_string(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::STRING)
    throw ConfigError("config key " + key + " expects a quoted string");
  return v.str;
}

Vec3 as_vec3(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::NUMBER_ARRAY || v.array.size() != 3)
    throw ConfigError("config key " + key + " expects [x, y, z]");
  return Vec3(v.array[0], v.array[1], v.array[2]);
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt(int v) { return std::to_string(v); }

}  // namespace

void RunConfig::apply(const ConfigMap& values) {
  using Handler = std::function<void(const std::string&, const ConfigValue&)>;
  std::map<std::string, Handler> handlers;

  auto num = [&](const std::string& key, double* slot) {
    handlers[key] = [slot](const std::string& k, const ConfigValue& v) {
      *slot = as_number(k, v);
    };
  };
  auto integer = [&](const std::string& key, int* slot) {
    handlers[key] = [slot](const std::string& k, const ConfigValue& v) {
      *slot = static_cast<int>(as_integer(k, v));
    };
  };
  auto boolean = [&](const std::string& key, bool* slot) {
    handlers[key] = [slot](const std::string& k, const ConfigValue& v) {
      *slot = as_bool(k, v);
    };
  };

  num("hand.finger_width", &hand.finger_width);
  num("hand.finger_depth", &hand.finger_depth);
  num("hand.hand_height", &hand.hand_height);
  num("hand.aperture_min", &hand.aperture_min);
  num("hand.aperture_max", &hand.aperture_max);

  num("frame.radius", &candidates.frame.radius);
  integer("frame.min_neighbors", &candidates.frame.min_neighbors);

  integer("candidates.n_samples", &candidates.n_samples);
  integer("candidates.n_orientations", &candidates.n_orientations);
  num("candidates.push_step", &candidates.push_step);
  num("candidates.contact_inflation", &candidates.contact_inflation);

  num("antipodal.vertex_perturbation", &antipodal.vertex_perturbation);
  num("antipodal.normal_cone_tolerance_deg",
      &antipodal.normal_cone_tolerance_deg);
  num("antipodal.contact_line_tolerance_deg",
      &antipodal.contact_line_tolerance_deg);
  num("antipodal.samples_per_m2", &antipodal.samples_per_m2);

  num("stereo.baseline_angle_deg", &stereo.baseline_angle_deg);
  num("stereo.distance", &stereo.distance);
  num("stereo.elevation_deg", &stereo.elevation_deg);
  num("stereo.azimuth_deg", &stereo.azimuth_deg);
  integer("stereo.image_width", &stereo.intrinsics.width);
  integer("stereo.image_height", &stereo.intrinsics.height);
  num("stereo.fov_h_deg", &stereo.intrinsics.fov_h_deg);

  handlers["dataset.variant"] = [this](const std::string& k,
                                       const ConfigValue& v) {
    variant = variant_from_name(as_string(k, v));
  };
  integer("dataset.n_view_pairs", &n_view_pairs);
  boolean("dataset.balance", &balance);

  num("solver.learning_rate", &solver.learning_rate);
  num("solver.momentum", &solver.momentum);
  num("solver.weight_decay", &solver.weight_decay);
  integer("solver.batch_size", &solver.batch_size);
  integer("solver.max_iterations", &solver.max_iterations);
  num("solver.lr_gamma", &solver.lr_gamma);
  num("solver.lr_power", &solver.lr_power);
  integer("solver.eval_every", &solver.eval_every);

  num("eval.test_fraction", &test_fraction);
  num("eval.min_precision", &min_precision);

  num("selection.width_min", &selection.width_min);
  num("selection.width_max", &selection.width_max);
  num("selection.cluster_position_radius",
      &selection.cluster_position_radius);
  num("selection.cluster_angle_tolerance_deg",
      &selection.cluster_angle_tolerance_deg);
  num("selection.w_height", &selection.w_height);
  num("selection.w_width", &selection.w_width);
  num("selection.w_vertical_angle", &selection.w_vertical_angle);
  num("selection.w_distance", &selection.w_distance);
  handlers["selection.nominal_point"] = [this](const std::string& k,
                                               const ConfigValue& v) {
    selection.nominal_point = as_vec3(k, v);
  };

  num("detect.threshold", &detect_threshold);

  handlers["run.seed"] = [this](const std::string& k, const ConfigValue& v) {
    const long long s = as_integer(k, v);
    if (s < 0) throw ConfigError("config key " + k + " must be >= 0");
    seed = static_cast<std::uint64_t>(s);
  };
  integer("run.threads", &threads);

  for (const auto& [key, value] : values) {
    auto it = handlers.find(key);
    if (it == handlers.end())
      throw ConfigError("unknown config key: " + key);
    it->second(key, value);
  }
}

std::string RunConfig::to_toml() const {
  std::ostringstream out;
  out << "[hand]\n";
  out << "finger_width = " << fmt(hand.finger_width) << "\n";
  out << "finger_depth = " << fmt(hand.finger_depth) << "\n";
  out << "hand_height = " << fmt(hand.hand_height) << "\n";
  out << "aperture_min = " << fmt(hand.aperture_min) << "\n";
  out << "aperture_max = " << fmt(hand.aperture_max) << "\n";
  out << "\n[frame]\n";
  out << "radius = " << fmt(candidates.frame.radius) << "\n";
  out << "min_neighbors = " << fmt(candidates.frame.min_neighbors) << "\n";
  out << "\n[candidates]\n";
  out << "n_samples = " << fmt(candidates.n_samples) << "\n";
  out << "n_orientations = " << fmt(candidates.n_orientations) << "\n";
  out << "push_step = " << fmt(candidates.push_step) << "\n";
  out << "contact_inflation = " << fmt(candidates.contact_inflation) << "\n";
  out << "\n[antipodal]\n";
  out << "vertex_perturbation = " << fmt(antipodal.vertex_perturbation)
      << "\n";
  out << "normal_cone_tolerance_deg = "
      << fmt(antipodal.normal_cone_tolerance_deg) << "\n";
  out << "contact_line_tolerance_deg = "
      << fmt(antipodal.contact_line_tolerance_deg) << "\n";
  out << "samples_per_m2 = " << fmt(antipodal.samples_per_m2) << "\n";
  out << "\n[stereo]\n";
  out << "baseline_angle_deg = " << fmt(stereo.baseline_angle_deg) << "\n";
  out << "distance = " << fmt(stereo.distance) << "\n";
  out << "elevation_deg = " << fmt(stereo.elevation_deg) << "\n";
  out << "azimuth_deg = " << fmt(stereo.azimuth_deg) << "\n";
  out << "image_width = " << fmt(stereo.intrinsics.width) << "\n";
  out << "image_height = " << fmt(stereo.intrinsics.height) << "\n";
  out << "fov_h_deg = " << fmt(stereo.intrinsics.fov_h_deg) << "\n";
  out << "\n[dataset]\n";
  out << "variant = \"" << variant_name(variant) << "\"\n";
  out << "n_view_pairs = " << fmt(n_view_pairs) << "\n";
  out << "balance = " << (balance ? "true" : "false") << "\n";
  out << "\n[solver]\n";
  out << "learning_rate = " << fmt(solver.learning_rate) << "\n";
  out << "momentum = " << fmt(solver.momentum) << "\n";
  out << "weight_decay = " << fmt(solver.weight_decay) << "\n";
  out << "batch_size = " << fmt(solver.batch_size) << "\n";
  out << "max_iterations = " << fmt(solver.max_iterations) << "\n";
  out << "lr_gamma = " << fmt(solver.lr_gamma) << "\n";
  out << "lr_power = " << fmt(solver.lr_power) << "\n";
  out << "eval_every = " << fmt(solver.eval_every) << "\n";
  out << "\n[eval]\n";
  out << "test_fraction = " << fmt(test_fraction) << "\n";
  out << "min_precision = " << fmt(min_precision) << "\n";
  out << "\n[selection]\n";
  out << "width_min = " << fmt(selection.width_min) << "\n";
  out << "width_max = " << fmt(selection.width_max) << "\n";
  out << "cluster_position_radius = "
      << fmt(selection.cluster_position_radius) << "\n";
  out << "cluster_angle_tolerance_deg = "
      << fmt(selection.cluster_angle_tolerance_deg) << "\n";
  out << "w_height = " << fmt(selection.w_height) << "\n";
  out << "w_width = " << fmt(selection.w_width) << "\n";
  out << "w_vertical_angle = " << fmt(selection.w_vertical_angle) << "\n";
  out << "w_distance = " << fmt(selection.w_distance) << "\n";
  out << "nominal_point = [" << fmt(selection.nominal_point.x()) << ", "
      << fmt(selection.nominal_point.y()) << ", "
      << fmt(selection.nominal_point.z()) << "]\n";
  out << "\n[detect]\n";
  out << "threshold = " << fmt(detect_threshold) << "\n";
  out << "\n[run]\n";
  out << "seed = " << std::to_string(seed) << "\n";
  out << "threads = " << fmt(threads) << "\n";
  return out.str();
}

void RunConfig::validate() const {
  hand.validate();
  antipodal.validate();
  solver.validate();
  selection.validate();
  if (candidates.n_samples < 1 || candidates.n_orientations < 1)
    throw ConfigError("candidate counts must be >= 1");
  if (!(candidates.push_step > 0.0))
    throw ConfigError("push_step must be positive");
  if (candidates.contact_inflation < 0.0)
    throw ConfigError("contact_inflation must be >= 0");
  if (!(candidates.frame.radius > 0.0))
    throw ConfigError("frame radius must be positive");
  if (candidates.frame.min_neighbors < 3)
    throw ConfigError("frame min_neighbors must be >= 3");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  if (!(min_precision > 0.0 && min_precision <= 1.0))
    throw ConfigError("min_precision must lie in (0, 1]");
  if (!(detect_threshold >= 0.0) || !std::isfinite(detect_threshold))
    throw ConfigError("detect threshold must be finite and >= 0");
  if (n_view_pairs < 1) throw ConfigError("n_view_pairs must be >= 1");
  if (stereo.intrinsics.width < 2 || stereo.intrinsics.height < 2)
    throw ConfigError("render resolution too small");
  if (!(stereo.distance > 0.0))
    throw ConfigError("stereo distance must be positive");
}

}  // namespace gpk
