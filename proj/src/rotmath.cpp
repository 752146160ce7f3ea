#include "motionspace/rotmath.hpp"

#include "motionspace/error.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace motionspace::rot {

namespace {

struct Frame
{
    Vec3 b1, b2, b3;
    Vec3 u;
    double n1 = 0.0, n2 = 0.0;
    bool a1_collapsed = false;
    bool u_collapsed = false;
};

Vec3 any_perpendicular(const Vec3& v)
{
    const Vec3 axis = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return (axis - v * v.dot(axis)).normalized();
}

Frame build_frame(const Rot6& r, bool clamped, double floor)
{
    Frame f;
    const Vec3 a1 = r.head<3>();
    const Vec3 a2 = r.tail<3>();
    f.n1 = a1.norm();
    const double limit = clamped ? floor : kDegenerateEps;
    if (!(f.n1 > limit)) {
        if (!clamped)
            throw Error(ErrorCode::DegenerateInput, "6D rotation has a collapsed first column");
        f.a1_collapsed = true;
        f.b1 = Vec3::UnitX();
    } else {
        f.b1 = a1 / f.n1;
    }
    f.u = a2 - f.b1.dot(a2) * f.b1;
    f.n2 = f.u.norm();
    if (!(f.n2 > limit)) {
        if (!clamped)
            throw Error(ErrorCode::DegenerateInput,
                        "6D rotation has collinear columns");
        f.u_collapsed = true;
        f.b2 = any_perpendicular(f.b1);
    } else {
        f.b2 = f.u / f.n2;
    }
    f.b3 = f.b1.cross(f.b2);
    return f;
}

Mat3 to_matrix(const Frame& f)
{
    Mat3 R;
    R.col(0) = f.b1;
    R.col(1) = f.b2;
    R.col(2) = f.b3;
    return R;
}

} // namespace

Rot6 identity6()
{
    Rot6 r;
    r << 1, 0, 0, 0, 1, 0;
    return r;
}

Mat3 project(const Rot6& r)
{
    return to_matrix(build_frame(r, false, kDegenerateEps));
}

Mat3 project_clamped(const Rot6& r, double floor)
{
    return to_matrix(build_frame(r, true, floor));
}

Rot6 project_vjp(const Rot6& r, const Mat3& upstream, bool clamped, double floor)
{
    const Frame f = build_frame(r, clamped, floor);
    const Vec3 a2 = r.tail<3>();

    Vec3 g1 = upstream.col(0);
    Vec3 g2 = upstream.col(1);
    const Vec3 g3 = upstream.col(2);

    // b3 = b1 x b2
    g1 += f.b2.cross(g3);
    g2 += g3.cross(f.b1);

    Rot6 out = Rot6::Zero();
    if (!f.u_collapsed) {
        // b2 = u / |u|
        const Vec3 gu = (g2 - f.b2 * f.b2.dot(g2)) / f.n2;
        // u = a2 - (b1.a2) b1
        const double b1a2 = f.b1.dot(a2);
        out.tail<3>() = gu - f.b1 * f.b1.dot(gu);
        g1 -= b1a2 * gu + a2 * f.b1.dot(gu);
    }
    if (!f.a1_collapsed)
        out.head<3>() = (g1 - f.b1 * f.b1.dot(g1)) / f.n1;
    return out;
}

Rot6 extract(const Mat3& rotation)
{
    Rot6 r;
    r.head<3>() = rotation.col(0);
    r.tail<3>() = rotation.col(1);
    return r;
}

Rot6 center(const Rot6& r)
{
    return r - identity6();
}

Rot6 uncenter(const Rot6& r)
{
    return r + identity6();
}

Rot6 lerp(const Rot6& a, const Rot6& b, double t)
{
    return (1.0 - t) * a + t * b;
}

Mat3 axis_angle_to_matrix(const Vec3& axis_angle)
{
    const double angle = axis_angle.norm();
    if (angle < 1e-15)
        return Mat3::Identity();
    return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

} // namespace motionspace::rot
