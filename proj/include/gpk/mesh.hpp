#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gpk/common.hpp"

namespace gpk {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> vertex_normals;  // unit; may be empty until computed

  bool empty() const { return triangles.empty(); }
  Vec3 face_normal(int t) const;
  double face_area(int t) const;
  double surface_area() const;
  Vec3 centroid() const;  // area-weighted surface centroid
  void compute_vertex_normals();
  void validate() const;
};

// OBJ or PLY (ascii / binary little-endian) by extension. Vertex normals
// are computed by area-weighted face averaging when the file has none.
TriangleMesh load_mesh(const std::string& path);

// Parametric test shapes, centered at the origin. The cylinder's axis is
// world z; height spans [-height/2, +height/2].
TriangleMesh make_box(const Vec3& size);
TriangleMesh make_cylinder(double radius, double height, int segments = 96);
TriangleMesh make_sphere(double radius, int rings = 24, int segments = 48);

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Isometry& t);

struct RayHit {
  double t = 0.0;
  int triangle = -1;
};

// Nearest-hit ray queries over a median-split bounding volume hierarchy.
// The mesh must outlive the raycaster.
class MeshRaycaster {
 public:
  explicit MeshRaycaster(const TriangleMesh& mesh);

  std::optional<RayHit> nearest(const Vec3& origin, const Vec3& dir) const;

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1;   // internal: child pair (left, left+1)
    int begin = 0;   // leaf: triangle id range in order_
    int count = 0;
  };
  const TriangleMesh& mesh_;
  std::vector<Node> nodes_;
  std::vector<int> order_;

  int build(std::vector<int>& tris, int begin, int end,
            std::vector<Vec3>& centers);
};

// Watertight-enough intersection test used by both the raycaster and the
// brute-force oracles in tests.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir,
                                   const Vec3& a, const Vec3& b,
                                   const Vec3& c);

struct SurfaceSample {
  Vec3 position;
  Vec3 normal;  // face normal of the source triangle
  int triangle = -1;
};

// Deterministic dense surface sampling: per triangle, a Hammersley point
// set sized to meet samples_per_m2, mapped to barycentric coordinates.
std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh,
                                          double samples_per_m2);

}  // namespace gpk
