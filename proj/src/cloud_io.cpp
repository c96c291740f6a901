#include "gpk/cloud_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace gpk {

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("ply: unsupported property type '" + type + "'");
}

double read_scalar(std::istream& in, const std::string& type) {
  unsigned char buf[8];
  const std::size_t n = scalar_size(type);
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (!in) throw IoError("ply: truncated binary payload");
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  if (type == "double" || type == "float64") {
    double d;
    std::memcpy(&d, buf, 8);
    return d;
  }
  // Integral scalars only get skipped, value itself is unused.
  return 0.0;
}

CloudWithViewpoints load_ply(const std::filesystem::path& path,
                             const Viewpoint& viewpoint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IoError("ply: empty file");
  if (line.back() == '\r') line.pop_back();
  if (line != "ply") throw IoError("ply: missing magic line");

  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> vertex_props;
  bool in_vertex_element = false;
  bool seen_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw IoError("ply: unsupported format '" + fmt + "'");
      }
      seen_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      std::string type, name;
      ls >> type >> name;
      if (type == "list") {
        throw IoError("ply: list property on vertex element is unsupported");
      }
      vertex_props.push_back({type, name});
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!seen_format) throw IoError("ply: missing format line");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    if (vertex_props[i].name == "x") ix = static_cast<int>(i);
    if (vertex_props[i].name == "y") iy = static_cast<int>(i);
    if (vertex_props[i].name == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw IoError("ply: vertex element lacks x/y/z properties");
  }

  CloudWithViewpoints cloud;
  cloud.viewpoints = {viewpoint};
  std::vector<double> row(vertex_props.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (binary) {
      for (std::size_t p = 0; p < vertex_props.size(); ++p) {
        row[p] = read_scalar(in, vertex_props[p].type);
      }
    } else {
      for (std::size_t p = 0; p < vertex_props.size(); ++p) {
        std::string tok;
        if (!(in >> tok)) throw IoError("ply: truncated ascii payload");
        try {
          row[p] = std::stod(tok);
        } catch (const std::exception&) {
          row[p] = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    const Vec3 point(row[ix], row[iy], row[iz]);
    if (!point.allFinite()) continue;
    cloud.points.push_back(point);
    cloud.view_of.push_back({viewpoint.id});
  }
  if (cloud.points.empty()) throw IoError("zero valid points in " + path.string());
  return cloud;
}

CloudWithViewpoints load_pcd(const std::filesystem::path& path,
                             const Viewpoint& viewpoint) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());

  std::string line;
  std::vector<std::string> fields;
  std::size_t count = 0;
  bool data_ascii = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "#" || tok.empty()) continue;
    if (tok == "FIELDS") {
      std::string f;
      while (ls >> f) fields.push_back(f);
    } else if (tok == "POINTS") {
      ls >> count;
    } else if (tok == "DATA") {
      std::string mode;
      ls >> mode;
      if (mode != "ascii") throw IoError("pcd: only ascii DATA is supported");
      data_ascii = true;
      break;
    }
  }
  if (!data_ascii) throw IoError("pcd: missing DATA ascii section");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == "x") ix = static_cast<int>(i);
    if (fields[i] == "y") iy = static_cast<int>(i);
    if (fields[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("pcd: FIELDS lack x y z");

  CloudWithViewpoints cloud;
  cloud.viewpoints = {viewpoint};
  std::vector<double> row(fields.size());
  for (std::size_t v = 0; v < count && in; ++v) {
    bool ok = true;
    for (std::size_t p = 0; p < fields.size(); ++p) {
      std::string tok;
      if (!(in >> tok)) {
        ok = false;
        break;
      }
      try {
        row[p] = std::stod(tok);
      } catch (const std::exception&) {
        row[p] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (!ok) break;
    const Vec3 point(row[ix], row[iy], row[iz]);
    if (!point.allFinite()) continue;
    cloud.points.push_back(point);
    cloud.view_of.push_back({viewpoint.id});
  }
  if (cloud.points.empty()) throw IoError("zero valid points in " + path.string());
  return cloud;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& cloud_path) {
  return std::filesystem::path(cloud_path.string() + ".views.json");
}

CloudWithViewpoints load_cloud(const std::filesystem::path& path,
                               const Viewpoint& viewpoint) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file does not exist: " + path.string());
  }
  const std::string ext = path.extension().string();
  if (ext == ".ply") return load_ply(path, viewpoint);
  if (ext == ".pcd") return load_pcd(path, viewpoint);
  throw IoError("unsupported cloud format: " + path.string());
}

CloudWithViewpoints load_cloud_with_sidecar(const std::filesystem::path& path) {
  CloudWithViewpoints cloud = load_cloud(path, Viewpoint{Vec3::Zero(), 0});

  const std::filesystem::path side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw IoError("cannot open sidecar: " + side.string());
  nlohmann::json j;
  in >> j;

  cloud.viewpoints.clear();
  for (const auto& vp : j.at("viewpoints")) {
    Viewpoint v;
    v.id = vp.at("id").get<int>();
    const auto& pos = vp.at("position");
    v.position = Vec3(pos.at(0).get<double>(), pos.at(1).get<double>(),
                      pos.at(2).get<double>());
    cloud.viewpoints.push_back(v);
  }
  const auto& view_of = j.at("view_of");
  if (view_of.size() != cloud.size()) {
    throw IoError("sidecar view_of count does not match cloud points");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.view_of[i] = view_of.at(i).get<std::vector<int>>();
    std::sort(cloud.view_of[i].begin(), cloud.view_of[i].end());
  }
  cloud.validate();
  return cloud;
}

void save_cloud(const CloudWithViewpoints& cloud,
                const std::filesystem::path& path, PlyFormat format) {
  cloud.validate();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << "ply\n";
    out << (format == PlyFormat::ascii ? "format ascii 1.0\n"
                                       : "format binary_little_endian 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "end_header\n";
    if (format == PlyFormat::ascii) {
      out.precision(9);
      for (const Vec3& p : cloud.points) {
        out << static_cast<float>(p.x()) << " " << static_cast<float>(p.y())
            << " " << static_cast<float>(p.z()) << "\n";
      }
    } else {
      for (const Vec3& p : cloud.points) {
        const float xyz[3] = {static_cast<float>(p.x()),
                              static_cast<float>(p.y()),
                              static_cast<float>(p.z())};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      }
    }
  }

  nlohmann::ordered_json j;
  j["viewpoints"] = nlohmann::ordered_json::array();
  for (const Viewpoint& vp : cloud.viewpoints) {
    nlohmann::ordered_json v;
    v["id"] = vp.id;
    v["position"] = {vp.position.x(), vp.position.y(), vp.position.z()};
    j["viewpoints"].push_back(v);
  }
  j["view_of"] = cloud.view_of;
  std::ofstream side(sidecar_path(path));
  if (!side) throw IoError("cannot write sidecar: " + sidecar_path(path).string());
  side << j.dump(2) << "\n";
}

}  // namespace gpk
