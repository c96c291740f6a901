#include "gpk/local_frame.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace gpk {

std::optional<LocalFrame> estimate_frame(const CloudWithViewpoints& cloud,
                                         const SpatialGrid& grid,
                                         int point_index,
                                         const FrameConfig& config,
                                         FrameStatus* status) {
  auto fail = [&](FrameStatus s) -> std::optional<LocalFrame> {
    if (status) *status = s;
    return std::nullopt;
  };

  const Vec3 p = cloud.points[point_index];
  std::vector<int> nbrs;
  grid.query_radius(p, config.radius, nbrs);
  if (static_cast<int>(nbrs.size()) < config.min_neighbors)
    return fail(FrameStatus::too_few_neighbors);

  Vec3 mean = Vec3::Zero();
  for (int j : nbrs) mean += cloud.points[j];
  mean /= static_cast<double>(nbrs.size());

  Mat3 scatter = Mat3::Zero();
  for (int j : nbrs) {
    const Vec3 d = cloud.points[j] - mean;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  if (eig.info() != Eigen::Success)
    return fail(FrameStatus::degenerate_neighborhood);
  const Vec3 evals = eig.eigenvalues();
  if (!(evals(1) > 0.0) || evals(1) <= 1e-6 * evals(2))
    return fail(FrameStatus::degenerate_neighborhood);

  Vec3 normal = eig.eigenvectors().col(0);

  // Orient outward: toward the first viewpoint associated with the point.
  const Viewpoint& vp = cloud.viewpoint_by_id(cloud.view_of[point_index][0]);
  if (normal.dot(vp.position - p) < 0.0) normal = -normal;

  // Tangent basis for the quadric height fit. Use the remaining
  // eigenvectors; they are orthonormal to the normal by construction.
  Vec3 e_u = eig.eigenvectors().col(2);
  Vec3 e_v = eig.eigenvectors().col(1);

  // Fit w = a u^2 + b u v + c v^2 + d u + e v + f by least squares
  // over the neighborhood expressed in the tangent frame at p.
  Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
  for (int j : nbrs) {
    const Vec3 d = cloud.points[j] - p;
    const double u = d.dot(e_u);
    const double v = d.dot(e_v);
    const double w = d.dot(normal);
    Eigen::Matrix<double, 6, 1> row;
    row << u * u, u * v, v * v, u, v, 1.0;
    ata += row * row.transpose();
    atb += row * w;
  }
  Eigen::Matrix<double, 6, 1> coef =
      ata.ldlt().solve(atb);
  const double a = coef(0), b = coef(1), c = coef(2);

  // Principal curvature directions of the fitted quadric: eigenvectors of
  // the Hessian [[2a, b], [b, 2c]]. The axis of minimum |curvature| is the
  // eigenvector with the smaller-magnitude eigenvalue.
  const double tr = 2.0 * a + 2.0 * c;
  const double det = 4.0 * a * c - b * b;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double k1 = tr / 2.0 + disc;
  const double k2 = tr / 2.0 - disc;
  const double kmin = (std::abs(k1) <= std::abs(k2)) ? k1 : k2;

  // Eigenvector of [[2a, b], [b, 2c]] for eigenvalue kmin.
  Eigen::Vector2d dir;
  const double r1 = 2.0 * a - kmin;
  const double r2 = 2.0 * c - kmin;
  if (std::abs(b) > 1e-15) {
    if (std::abs(r1) >= std::abs(r2))
      dir << -b, r1;
    else
      dir << r2, -b;
  } else {
    // Diagonal Hessian: axes are the tangent basis directions.
    dir = (std::abs(2.0 * a - kmin) <= std::abs(2.0 * c - kmin))
              ? Eigen::Vector2d(1.0, 0.0)
              : Eigen::Vector2d(0.0, 1.0);
  }
  if (dir.norm() < 1e-15) dir << 1.0, 0.0;
  dir.normalize();

  Vec3 axis = dir(0) * e_u + dir(1) * e_v;
  // Project out any drift from the normal and renormalize.
  axis -= axis.dot(normal) * normal;
  if (axis.norm() < 1e-12)
    return fail(FrameStatus::degenerate_neighborhood);
  axis.normalize();

  // Canonical sign: first component above threshold made positive.
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis(i)) > 1e-12) {
      if (axis(i) < 0.0) axis = -axis;
      break;
    }
  }

  LocalFrame frame;
  frame.origin = p;
  frame.normal = normal;
  frame.curvature_axis = axis;
  frame.binormal = normal.cross(axis);
  frame.neighborhood_count = static_cast<int>(nbrs.size());
  if (status) *status = FrameStatus::ok;
  return frame;
}

std::vector<Vec3> compute_cloud_normals(const CloudWithViewpoints& cloud,
                                        double radius, int min_neighbors,
                                        int threads) {
  const int n = static_cast<int>(cloud.size());
  std::vector<Vec3> normals(n);
  if (n == 0) return normals;
  SpatialGrid grid(std::span<const Vec3>(cloud.points.data(),
                                         cloud.points.size()),
                   radius);
  parallel_for(n, threads, [&](int i) {
    const Vec3 p = cloud.points[i];
    const Viewpoint& vp = cloud.viewpoint_by_id(cloud.view_of[i][0]);
    auto toward_view = [&]() -> Vec3 {
      const Vec3 d = vp.position - p;
      const double len = d.norm();
      return (len > 1e-12) ? Vec3(d / len) : Vec3::UnitZ();
    };

    std::vector<int> nbrs;
    grid.query_radius(p, radius, nbrs);
    if (static_cast<int>(nbrs.size()) < min_neighbors) {
      normals[i] = toward_view();
      return;
    }
    Vec3 mean = Vec3::Zero();
    for (int j : nbrs) mean += cloud.points[j];
    mean /= static_cast<double>(nbrs.size());
    Mat3 scatter = Mat3::Zero();
    for (int j : nbrs) {
      const Vec3 d = cloud.points[j] - mean;
      scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    if (eig.info() != Eigen::Success ||
        !(eig.eigenvalues()(1) > 0.0) ||
        eig.eigenvalues()(1) <= 1e-6 * eig.eigenvalues()(2)) {
      normals[i] = toward_view();
      return;
    }
    Vec3 nrm = eig.eigenvectors().col(0);
    if (nrm.dot(vp.position - p) < 0.0) nrm = -nrm;
    normals[i] = nrm;
  });
  return normals;
}

}  // namespace gpk
