#include "gpk/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace gpk {

Vec3 TriangleMesh::face_normal(int t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]])
                     .cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 1e-18 ? Vec3(n / len) : Vec3::UnitZ();
}

double TriangleMesh::face_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]])
                   .cross(vertices[tri[2]] - vertices[tri[0]])
                   .norm();
}

double TriangleMesh::surface_area() const {
  double area = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
    area += face_area(t);
  return area;
}

Vec3 TriangleMesh::centroid() const {
  Vec3 sum = Vec3::Zero();
  double area = 0.0;
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
    const auto& tri = triangles[t];
    const double a = face_area(t);
    sum += a / 3.0 * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
    area += a;
  }
  return area > 0.0 ? Vec3(sum / area) : Vec3::Zero();
}

void TriangleMesh::compute_vertex_normals() {
  vertex_normals.assign(vertices.size(), Vec3::Zero());
  for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
    const auto& tri = triangles[t];
    // Cross product length is twice the area, so summing the raw cross
    // products is area weighting.
    const Vec3 n = (vertices[tri[1]] - vertices[tri[0]])
                       .cross(vertices[tri[2]] - vertices[tri[0]]);
    for (int k = 0; k < 3; ++k) vertex_normals[tri[k]] += n;
  }
  for (auto& n : vertex_normals) {
    const double len = n.norm();
    n = len > 1e-18 ? Vec3(n / len) : Vec3::UnitZ();
  }
}

void TriangleMesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  for (const Vec3& v : vertices)
    if (!v.allFinite()) throw Error("mesh has non-finite vertex");
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv)
        throw Error("mesh triangle index out of range");
  if (!vertex_normals.empty()) {
    if (vertex_normals.size() != vertices.size())
      throw Error("mesh normal count does not match vertex count");
    for (const Vec3& n : vertex_normals)
      if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6)
        throw Error("mesh vertex normal is not unit length");
  }
}

namespace {

TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  TriangleMesh mesh;
  std::vector<Vec3> file_normals;
  std::vector<int> vertex_normal_of;  // per mesh vertex, file normal index
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw IoError("bad vertex at " + path + ":" + std::to_string(line_no));
      mesh.vertices.emplace_back(x, y, z);
      vertex_normal_of.push_back(-1);
    } else if (tag == "vn") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw IoError("bad normal at " + path + ":" + std::to_string(line_no));
      file_normals.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string corner;
      while (ss >> corner) {
        // v, v/vt, v//vn, v/vt/vn
        const size_t s1 = corner.find('/');
        const int v = std::stoi(corner.substr(0, s1));
        if (v <= 0)
          throw IoError("unsupported face index at " + path + ":" +
                        std::to_string(line_no));
        face.push_back(v - 1);
        if (s1 != std::string::npos) {
          const size_t s2 = corner.find('/', s1 + 1);
          if (s2 != std::string::npos && s2 + 1 < corner.size()) {
            const int vn = std::stoi(corner.substr(s2 + 1));
            if (vn > 0 && v - 1 < static_cast<int>(vertex_normal_of.size()))
              vertex_normal_of[v - 1] = vn - 1;
          }
        }
      }
      if (face.size() < 3)
        throw IoError("face with fewer than 3 corners at " + path + ":" +
                      std::to_string(line_no));
      for (size_t k = 2; k < face.size(); ++k)
        mesh.triangles.push_back({face[0], face[static_cast<int>(k) - 1],
                                  face[static_cast<int>(k)]});
    }
    // vt, mtllib, usemtl, o, g, s, # are skipped
  }
  if (!file_normals.empty()) {
    bool complete = !mesh.vertices.empty();
    for (size_t i = 0; i < mesh.vertices.size() && complete; ++i)
      complete = vertex_normal_of[i] >= 0 &&
                 vertex_normal_of[i] < static_cast<int>(file_normals.size());
    if (complete) {
      mesh.vertex_normals.resize(mesh.vertices.size());
      for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        Vec3 n = file_normals[vertex_normal_of[i]];
        const double len = n.norm();
        mesh.vertex_normals[i] = len > 1e-18 ? Vec3(n / len) : Vec3::UnitZ();
      }
    }
  }
  return mesh;
}

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string count_type;
};

size_t scalar_bytes(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" ||
      type == "uint32" || type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64")
    return 8;
  throw IoError("unknown ply scalar type: " + type);
}

double read_binary_scalar(std::istream& in, const std::string& type) {
  unsigned char buf[8];
  const size_t n = scalar_bytes(type);
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (!in) throw IoError("unexpected end of ply data");
  if (type == "char" || type == "int8") return static_cast<signed char>(buf[0]);
  if (type == "uchar" || type == "uint8") return buf[0];
  if (type == "short" || type == "int16") {
    std::int16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "ushort" || type == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, buf, 2);
    return v;
  }
  if (type == "int" || type == "int32") {
    std::int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  double v;
  std::memcpy(&v, buf, 8);
  return v;
}

double read_ascii_scalar(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw IoError("unexpected end of ply data");
  try {
    return std::stod(tok);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

TriangleMesh load_ply_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw IoError("not a ply file: " + path);

  bool binary = false;
  struct Element {
    std::string name;
    long count = 0;
    std::vector<PlyProperty> props;
  };
  std::vector<Element> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "comment" || tag == "obj_info") continue;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw IoError("unsupported ply format in " + path);
    } else if (tag == "element") {
      Element e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw IoError("property before element in " + path);
      PlyProperty p;
      std::string first;
      ss >> first;
      if (first == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = first;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  std::vector<Vec3> normals;
  bool has_normals = false;
  for (const Element& elem : elements) {
    if (elem.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
      for (size_t k = 0; k < elem.props.size(); ++k) {
        const std::string& nm = elem.props[k].name;
        if (nm == "x") ix = static_cast<int>(k);
        if (nm == "y") iy = static_cast<int>(k);
        if (nm == "z") iz = static_cast<int>(k);
        if (nm == "nx") inx = static_cast<int>(k);
        if (nm == "ny") iny = static_cast<int>(k);
        if (nm == "nz") inz = static_cast<int>(k);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw IoError("ply vertex element lacks x/y/z in " + path);
      has_normals = inx >= 0 && iny >= 0 && inz >= 0;
      std::vector<double> row(elem.props.size());
      for (long i = 0; i < elem.count; ++i) {
        for (size_t k = 0; k < elem.props.size(); ++k) {
          if (elem.props[k].is_list)
            throw IoError("list property on ply vertex in " + path);
          row[k] = binary ? read_binary_scalar(in, elem.props[k].type)
                          : read_ascii_scalar(in);
        }
        mesh.vertices.emplace_back(row[ix], row[iy], row[iz]);
        if (has_normals) normals.emplace_back(row[inx], row[iny], row[inz]);
      }
    } else if (elem.name == "face") {
      for (long i = 0; i < elem.count; ++i) {
        for (const PlyProperty& p : elem.props) {
          if (p.is_list &&
              (p.name == "vertex_indices" || p.name == "vertex_index")) {
            const long n = static_cast<long>(
                binary ? read_binary_scalar(in, p.count_type)
                       : read_ascii_scalar(in));
            std::vector<int> face;
            for (long k = 0; k < n; ++k)
              face.push_back(static_cast<int>(
                  binary ? read_binary_scalar(in, p.type)
                         : read_ascii_scalar(in)));
            if (face.size() >= 3)
              for (size_t k = 2; k < face.size(); ++k)
                mesh.triangles.push_back(
                    {face[0], face[k - 1], face[k]});
          } else if (p.is_list) {
            const long n = static_cast<long>(
                binary ? read_binary_scalar(in, p.count_type)
                       : read_ascii_scalar(in));
            for (long k = 0; k < n; ++k) {
              if (binary)
                read_binary_scalar(in, p.type);
              else
                read_ascii_scalar(in);
            }
          } else {
            if (binary)
              read_binary_scalar(in, p.type);
            else
              read_ascii_scalar(in);
          }
        }
      }
    } else {
      // Skip unknown elements.
      for (long i = 0; i < elem.count; ++i) {
        for (const PlyProperty& p : elem.props) {
          if (p.is_list) {
            const long n = static_cast<long>(
                binary ? read_binary_scalar(in, p.count_type)
                       : read_ascii_scalar(in));
            for (long k = 0; k < n; ++k) {
              if (binary)
                read_binary_scalar(in, p.type);
              else
                read_ascii_scalar(in);
            }
          } else {
            if (binary)
              read_binary_scalar(in, p.type);
            else
              read_ascii_scalar(in);
          }
        }
      }
    }
  }
  if (has_normals && normals.size() == mesh.vertices.size()) {
    mesh.vertex_normals.resize(normals.size());
    for (size_t i = 0; i < normals.size(); ++i) {
      const double len = normals[i].norm();
      mesh.vertex_normals[i] =
          len > 1e-18 ? Vec3(normals[i] / len) : Vec3::UnitZ();
    }
  }
  return mesh;
}

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
  {
    std::ifstream probe(path);
    if (!probe) throw IoError("file does not exist: " + path);
  }
  TriangleMesh mesh;
  const size_t dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".obj")
    mesh = load_obj(path);
  else if (ext == ".ply")
    mesh = load_ply_mesh(path);
  else
    throw IoError("unsupported mesh format: " + path);
  if (mesh.empty()) throw IoError("mesh has no triangles: " + path);
  if (mesh.vertex_normals.empty()) mesh.compute_vertex_normals();
  mesh.validate();
  return mesh;
}

TriangleMesh make_box(const Vec3& size) {
  const Vec3 h = size / 2.0;
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i)
    mesh.vertices.emplace_back((i & 1) ? h(0) : -h(0),
                               (i & 2) ? h(1) : -h(1),
                               (i & 4) ? h(2) : -h(2));
  // Each face as two triangles, outward winding.
  const int faces[6][4] = {
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  };
  for (const auto& f : faces) {
    mesh.triangles.push_back({f[0], f[1], f[2]});
    mesh.triangles.push_back({f[0], f[2], f[3]});
  }
  mesh.compute_vertex_normals();
  return mesh;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  TriangleMesh mesh;
  const double h = height / 2.0;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
  }
  const int bottom_center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, -h);
  const int top_center = bottom_center + 1;
  mesh.vertices.emplace_back(0.0, 0.0, h);

  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    mesh.triangles.push_back({b0, b1, t1});
    mesh.triangles.push_back({b0, t1, t0});
    mesh.triangles.push_back({bottom_center, b1, b0});
    mesh.triangles.push_back({top_center, t0, t1});
  }
  mesh.compute_vertex_normals();
  return mesh;
}

TriangleMesh make_sphere(double radius, int rings, int segments) {
  TriangleMesh mesh;
  // rings latitudinal bands between the poles.
  mesh.vertices.emplace_back(0.0, 0.0, radius);   // north pole: 0
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * M_PI * s / segments;
      mesh.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                                 radius * std::sin(phi) * std::sin(theta),
                                 radius * std::cos(phi));
    }
  }
  const int south = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0, -radius);

  auto ring_vertex = [&](int r, int s) {
    return 1 + (r - 1) * segments + (s % segments);
  };
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back(
        {south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  mesh.compute_vertex_normals();
  return mesh;
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Isometry& t) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t * v;
  const Mat3 rot = t.rotation();
  for (auto& n : out.vertex_normals) n = rot * n;
  return out;
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir,
                                   const Vec3& a, const Vec3& b,
                                   const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= 1e-9) return std::nullopt;
  return t;
}

MeshRaycaster::MeshRaycaster(const TriangleMesh& mesh) : mesh_(mesh) {
  const int n = static_cast<int>(mesh.triangles.size());
  std::vector<int> tris(n);
  std::vector<Vec3> centers(n);
  for (int t = 0; t < n; ++t) {
    tris[t] = t;
    const auto& tri = mesh.triangles[t];
    centers[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] +
                  mesh.vertices[tri[2]]) /
                 3.0;
  }
  order_.reserve(n);
  if (n > 0) build(tris, 0, n, centers);
}

int MeshRaycaster::build(std::vector<int>& tris, int begin, int end,
                         std::vector<Vec3>& centers) {
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    const auto& tri = mesh_.triangles[tris[i]];
    for (int k = 0; k < 3; ++k) {
      node.lo = node.lo.cwiseMin(mesh_.vertices[tri[k]]);
      node.hi = node.hi.cwiseMax(mesh_.vertices[tri[k]]);
    }
  }
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  const int count = end - begin;
  if (count <= 4) {
    nodes_[index].begin = static_cast<int>(order_.size());
    nodes_[index].count = count;
    for (int i = begin; i < end; ++i) order_.push_back(tris[i]);
    return index;
  }

  int axis = 0;
  const Vec3 extent = node.hi - node.lo;
  if (extent(1) > extent(axis)) axis = 1;
  if (extent(2) > extent(axis)) axis = 2;
  const int mid = begin + count / 2;
  std::nth_element(tris.begin() + begin, tris.begin() + mid,
                   tris.begin() + end, [&](int l, int r) {
                     return centers[l](axis) < centers[r](axis);
                   });
  const int left = build(tris, begin, mid, centers);
  const int right = build(tris, mid, end, centers);
  (void)right;  // right == left + subtree size; stored explicitly below
  nodes_[index].left = left;
  nodes_[index].count = 0;
  nodes_[index].begin = right;
  return index;
}

std::optional<RayHit> MeshRaycaster::nearest(const Vec3& origin,
                                             const Vec3& dir) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv = dir.cwiseInverse();
  double best_t = std::numeric_limits<double>::infinity();
  int best_tri = -1;

  std::vector<int> stack;
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();

    double t0 = 0.0, t1 = best_t;
    bool hit_box = true;
    for (int a = 0; a < 3 && hit_box; ++a) {
      if (std::isinf(inv(a))) {
        if (origin(a) < node.lo(a) || origin(a) > node.hi(a)) hit_box = false;
        continue;
      }
      double ta = (node.lo(a) - origin(a)) * inv(a);
      double tb = (node.hi(a) - origin(a)) * inv(a);
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) hit_box = false;
    }
    if (!hit_box) continue;

    if (node.count > 0 || node.left < 0) {
      for (int i = node.begin; i < node.begin + node.count; ++i) {
        const int t = order_[i];
        const auto& tri = mesh_.triangles[t];
        const auto hit = ray_triangle(origin, dir, mesh_.vertices[tri[0]],
                                      mesh_.vertices[tri[1]],
                                      mesh_.vertices[tri[2]]);
        if (hit && *hit < best_t) {
          best_t = *hit;
          best_tri = t;
        }
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.begin);  // right child index
    }
  }
  if (best_tri < 0) return std::nullopt;
  return RayHit{best_t, best_tri};
}

namespace {

double radical_inverse_base2(std::uint32_t bits) {
  bits = (bits << 16) | (bits >> 16);
  bits = ((bits & 0x55555555u) << 1) | ((bits & 0xAAAAAAAAu) >> 1);
  bits = ((bits & 0x33333333u) << 2) | ((bits & 0xCCCCCCCCu) >> 2);
  bits = ((bits & 0x0F0F0F0Fu) << 4) | ((bits & 0xF0F0F0F0u) >> 4);
  bits = ((bits & 0x00FF00FFu) << 8) | ((bits & 0xFF00FF00u) >> 8);
  return static_cast<double>(bits) * 2.3283064365386963e-10;  // / 2^32
}

}  // namespace

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh,
                                          double samples_per_m2) {
  std::vector<SurfaceSample> out;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const double area = mesh.face_area(t);
    if (area <= 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(area *
                                                         samples_per_m2)));
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 normal = mesh.face_normal(t);
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) / n;
      const double v = radical_inverse_base2(static_cast<std::uint32_t>(i));
      // Square -> triangle mapping, uniform in area.
      const double su = std::sqrt(u);
      const double b0 = 1.0 - su;
      const double b1 = su * (1.0 - v);
      const double b2 = su * v;
      out.push_back({b0 * a + b1 * b + b2 * c, normal, t});
    }
  }
  return out;
}

}  // namespace gpk
