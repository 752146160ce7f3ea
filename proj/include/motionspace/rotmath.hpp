#pragma once

#include <Eigen/Core>

namespace motionspace::rot {

/// Continuous 6D rotation: the first two columns (a1, a2) of a rotation
/// matrix, stored column-major as [a1x a1y a1z a2x a2y a2z].
using Rot6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kDegenerateEps = 1e-8;
inline constexpr double kTrainingFloor = 1e-6;

/// [1,0,0,0,1,0]
Rot6 identity6();

/// Gram-Schmidt projection onto SO(3). Throws DegenerateInput when |a1| or the
/// part of a2 orthogonal to a1 is below kDegenerateEps.
Mat3 project(const Rot6& r);

/// Same construction, but never throws: a collapsed a1 is replaced by the x axis
/// and a collapsed orthogonal part by an arbitrary perpendicular direction. Used
/// on the training path where raw network output can momentarily collapse.
Mat3 project_clamped(const Rot6& r, double floor = kTrainingFloor);

/// Vector-Jacobian product of project (or project_clamped when clamped=true):
/// returns d<upstream, project(r)>/dr.
Rot6 project_vjp(const Rot6& r, const Mat3& upstream, bool clamped = false,
                 double floor = kTrainingFloor);

Rot6 extract(const Mat3& rotation);

Rot6 center(const Rot6& r);
Rot6 uncenter(const Rot6& r);

/// Componentwise (1-t) a + t b. The result is not projected.
Rot6 lerp(const Rot6& a, const Rot6& b, double t);

/// Rodrigues formula; the only axis-angle entry point, used for ingestion and
/// synthetic data.
Mat3 axis_angle_to_matrix(const Vec3& axis_angle);

} // namespace motionspace::rot
