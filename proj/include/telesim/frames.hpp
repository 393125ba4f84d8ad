#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <array>
#include <utility>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/types.hpp"

namespace telesim {

// Rigid map between two metric frames (rotation + translation, mm).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  // R^T R = I and det(R) = +1 within tol.
  bool is_valid(double tol = 1e-9) const {
    const Eigen::Matrix3d err =
        rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol &&
           is_finite(translation);
  }
};

inline Vec3 transform_point(const RigidTransform& t, const Vec3& p) {
  return t.apply(p);
}

// Fixed rig geometry and the metric <-> render-unit scale.
struct WorkspaceCalibration {
  double needle_length_mm = 35.0;
  std::array<double, 2> table_extent_mm = {600.0, 400.0};
  double units_per_mm = 0.01;  // 10 mm -> 0.1 render units
  RigidTransform hand_to_workspace;
};

inline double mm_to_render_units(double x_mm, double units_per_mm = 0.01) {
  return x_mm * units_per_mm;
}

inline double render_units_to_mm(double x_units, double units_per_mm = 0.01) {
  return x_units / units_per_mm;
}

struct RegistrationResult {
  RigidTransform transform;
  double rms_mm = 0.0;
};

namespace detail {

// Second-largest eigenvalue of the centered scatter tells collinearity.
inline bool points_span_plane(const std::vector<Vec3>& pts) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  double scale = 0.0;
  for (const auto& p : pts) {
    const Vec3 q = p - centroid;
    scatter += q * q.transpose();
    scale = std::max(scale, q.squaredNorm());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  // eigenvalues ascending; need at least two nonzero directions
  return es.eigenvalues()(1) > 1e-9 * std::max(scale, 1.0);
}

}  // namespace detail

// Least-squares rigid transform mapping the first point of each pair onto the
// second (orthogonal Procrustes via SVD, reflection-guarded).
inline RegistrationResult register_rig(
    const std::vector<std::pair<Vec3, Vec3>>& corresponding_points) {
  const std::size_t n = corresponding_points.size();
  if (n < 3) throw DegenerateFiducials("need at least 3 fiducial pairs");

  std::vector<Vec3> src, dst;
  src.reserve(n);
  dst.reserve(n);
  for (const auto& [a, b] : corresponding_points) {
    if (!is_finite(a) || !is_finite(b))
      throw DegenerateFiducials("non-finite fiducial");
    src.push_back(a);
    dst.push_back(b);
  }
  if (!detail::points_span_plane(src) || !detail::points_span_plane(dst))
    throw DegenerateFiducials("fiducials are collinear");

  Vec3 src_centroid = Vec3::Zero(), dst_centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    src_centroid += src[i];
    dst_centroid += dst[i];
  }
  src_centroid /= static_cast<double>(n);
  dst_centroid /= static_cast<double>(n);

  Eigen::Matrix3d cross_cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i)
    cross_cov += (src[i] - src_centroid) * (dst[i] - dst_centroid).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross_cov,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d rot = v * u.transpose();
  if (rot.determinant() < 0.0) {
    // physical rigs never reflect: flip the smallest-singular-value axis
    v.col(2) *= -1.0;
    rot = v * u.transpose();
  }

  RegistrationResult result;
  result.transform.rotation = rot;
  result.transform.translation = dst_centroid - rot * src_centroid;

  double sq_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sq_sum += (result.transform.apply(src[i]) - dst[i]).squaredNorm();
  result.rms_mm = std::sqrt(sq_sum / static_cast<double>(n));
  return result;
}

}  // namespace telesim
