#include "motionspace/body.hpp"

#include "motionspace/error.hpp"

#include <cmath>
#include <string>

namespace motionspace::body {

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using RowMat12 = Eigen::Matrix<double, Eigen::Dynamic, 12, Eigen::RowMajor>;

void check_theta(const BodyModel& body, std::span<const Rot6> theta)
{
    if (static_cast<int>(theta.size()) != body.num_joints())
        throw Error(ErrorCode::ShapeMismatch, "theta has " + std::to_string(theta.size()) +
                                                  " joints, body has " +
                                                  std::to_string(body.num_joints()));
}

void check_beta(const BodyModel& body, const Eigen::VectorXd& beta)
{
    if (beta.size() != body.num_betas())
        throw Error(ErrorCode::ShapeMismatch, "beta has " + std::to_string(beta.size()) +
                                                  " entries, body expects " +
                                                  std::to_string(body.num_betas()));
}

Mat3 project_mode(const Rot6& r, Projection mode)
{
    return mode == Projection::Strict ? rot::project(r) : rot::project_clamped(r);
}

// Global rotation and translation of each joint, plus the local rotations
// needed by the backward pass.
struct Kinematics
{
    std::vector<Mat3> local;
    std::vector<Mat3> rotation;
    std::vector<Vec3> translation;
};

Kinematics run_kinematics(const BodyModel& body, const VertexMatrix& joints,
                          std::span<const Rot6> theta, Projection mode)
{
    const int J = body.num_joints();
    Kinematics k;
    k.local.resize(J);
    k.rotation.resize(J);
    k.translation.resize(J);
    for (int j = 0; j < J; ++j) {
        const Mat3 R = project_mode(theta[j], mode);
        const Vec3 pivot = joints.row(j).transpose();
        const Vec3 c = pivot - R * pivot;
        k.local[j] = R;
        const int p = body.parents[j];
        if (p < 0) {
            k.rotation[j] = R;
            k.translation[j] = c;
        } else {
            k.rotation[j] = k.rotation[p] * R;
            k.translation[j] = k.rotation[p] * c + k.translation[p];
        }
    }
    return k;
}

RowMat12 pack_transforms(const Kinematics& k)
{
    const int J = static_cast<int>(k.rotation.size());
    RowMat12 packed(J, 12);
    for (int j = 0; j < J; ++j) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                packed(j, 3 * r + c) = k.rotation[j](r, c);
        packed.block<1, 3>(j, 9) = k.translation[j].transpose();
    }
    return packed;
}

} // namespace

void BodyModel::validate() const
{
    const int V = num_vertices();
    const int J = num_joints();
    const int B = num_betas();
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidInput, what); };
    if (J < 1 || V < 1 || B < 1)
        fail("body must have at least one joint, vertex and shape coefficient");
    if (shape_dirs.rows() != 3 * V)
        fail("shape_dirs must have 3V rows");
    if (joint_shape_dirs.rows() != 3 * J || joint_shape_dirs.cols() != B)
        fail("joint_shape_dirs must be 3J x B");
    if (skin_weights.rows() != V || skin_weights.cols() != J)
        fail("skin_weights must be V x J");
    if (static_cast<int>(parents.size()) != J)
        fail("parents must have J entries");
    if (parents[0] != -1)
        fail("parents[0] must be -1");
    for (int j = 1; j < J; ++j)
        if (parents[j] < 0 || parents[j] >= j)
            fail("parents[" + std::to_string(j) + "] must be in [0, " + std::to_string(j) + ")");
    for (int i = 0; i < V; ++i) {
        if ((skin_weights.row(i).array() < 0.0).any())
            fail("skin_weights row " + std::to_string(i) + " has a negative entry");
        if (std::abs(skin_weights.row(i).sum() - 1.0) > 1e-6)
            fail("skin_weights row " + std::to_string(i) + " does not sum to 1");
    }
    for (const auto& f : faces)
        for (int idx : f)
            if (idx < 0 || idx >= V)
                fail("face index out of range");
    if (!template_vertices.allFinite() || !shape_dirs.allFinite() || !joint_shape_dirs.allFinite() ||
        !rest_joints.allFinite() || !skin_weights.allFinite())
        fail("body tensors contain non-finite values");
}

ShapedBody shape(const BodyModel& body, const Eigen::VectorXd& beta)
{
    check_beta(body, beta);
    ShapedBody out;
    const int V = body.num_vertices();
    const int J = body.num_joints();
    const Eigen::VectorXd dv = body.shape_dirs * beta;
    const Eigen::VectorXd dj = body.joint_shape_dirs * beta;
    out.vertices = body.template_vertices + Eigen::Map<const VertexMatrix>(dv.data(), V, 3);
    out.joints = body.rest_joints + Eigen::Map<const VertexMatrix>(dj.data(), J, 3);
    return out;
}

std::vector<Eigen::Isometry3d> forward_kinematics(const BodyModel& body, const VertexMatrix& joints,
                                                  std::span<const Rot6> theta, Projection mode)
{
    check_theta(body, theta);
    const Kinematics k = run_kinematics(body, joints, theta, mode);
    std::vector<Eigen::Isometry3d> out(k.rotation.size(), Eigen::Isometry3d::Identity());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j].linear() = k.rotation[j];
        out[j].translation() = k.translation[j];
    }
    return out;
}

VertexMatrix pose_mesh(const BodyModel& body, const Eigen::VectorXd& beta, std::span<const Rot6> theta,
                       const Eigen::Vector3d& gamma, Projection mode)
{
    return pose_mesh(body, shape(body, beta), theta, gamma, mode);
}

VertexMatrix pose_mesh(const BodyModel& body, const ShapedBody& shaped, std::span<const Rot6> theta,
                       const Eigen::Vector3d& gamma, Projection mode)
{
    check_theta(body, theta);
    const Kinematics k = run_kinematics(body, shaped.joints, theta, mode);
    // Blend the per-joint affine maps once per vertex, then apply.
    const RowMat12 blended = body.skin_weights * pack_transforms(k);
    const int V = body.num_vertices();
    VertexMatrix out(V, 3);
    for (int i = 0; i < V; ++i) {
        const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> M(blended.row(i).data());
        const Vec3 v = shaped.vertices.row(i).transpose();
        out.row(i) = (M * v + blended.block<1, 3>(i, 9).transpose() + gamma).transpose();
    }
    return out;
}

PoseGradient pose_mesh_vjp(const BodyModel& body, const Eigen::VectorXd& beta,
                           std::span<const Rot6> theta, const Eigen::Vector3d& gamma,
                           const VertexMatrix& upstream, Projection mode)
{
    (void)gamma;
    check_theta(body, theta);
    const int V = body.num_vertices();
    const int J = body.num_joints();
    if (upstream.rows() != V)
        throw Error(ErrorCode::ShapeMismatch, "upstream gradient must be V x 3");

    const ShapedBody shaped = shape(body, beta);
    const Kinematics k = run_kinematics(body, shaped.joints, theta, mode);
    const RowMat12 blended = body.skin_weights * pack_transforms(k);

    PoseGradient grad;
    grad.gamma = upstream.colwise().sum().transpose();

    // Through the per-vertex blend.
    RowMat12 g_blended(V, 12);
    VertexMatrix g_vertices(V, 3);
    for (int i = 0; i < V; ++i) {
        const Vec3 g = upstream.row(i).transpose();
        const Vec3 v = shaped.vertices.row(i).transpose();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                g_blended(i, 3 * r + c) = g(r) * v(c);
        g_blended.block<1, 3>(i, 9) = g.transpose();
        const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> M(blended.row(i).data());
        g_vertices.row(i) = (M.transpose() * g).transpose();
    }
    const RowMat12 g_packed = body.skin_weights.transpose() * g_blended;

    std::vector<Mat3> g_rot(J);
    std::vector<Vec3> g_trans(J);
    for (int j = 0; j < J; ++j) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                g_rot[j](r, c) = g_packed(j, 3 * r + c);
        g_trans[j] = g_packed.block<1, 3>(j, 9).transpose();
    }

    // Reverse sweep over the tree; parents[j] < j so children finish first.
    VertexMatrix g_joints = VertexMatrix::Zero(J, 3);
    grad.theta.resize(J, 6);
    for (int j = J - 1; j >= 0; --j) {
        const Mat3& R = k.local[j];
        const Vec3 pivot = shaped.joints.row(j).transpose();
        const Vec3 c = pivot - R * pivot;
        const int p = body.parents[j];
        Mat3 g_local;
        Vec3 g_c;
        if (p < 0) {
            g_local = g_rot[j];
            g_c = g_trans[j];
        } else {
            const Mat3& Rp = k.rotation[p];
            g_rot[p] += g_rot[j] * R.transpose() + g_trans[j] * c.transpose();
            g_trans[p] += g_trans[j];
            g_local = Rp.transpose() * g_rot[j];
            g_c = Rp.transpose() * g_trans[j];
        }
        // c = pivot - R pivot
        g_local -= g_c * pivot.transpose();
        g_joints.row(j) += (g_c - R.transpose() * g_c).transpose();
        grad.theta.row(j) =
            rot::project_vjp(theta[j], g_local, mode == Projection::Clamped).transpose();
    }

    grad.beta = body.shape_dirs.transpose() *
                    Eigen::Map<const Eigen::VectorXd>(g_vertices.data(), 3 * V) +
                body.joint_shape_dirs.transpose() *
                    Eigen::Map<const Eigen::VectorXd>(g_joints.data(), 3 * J);
    return grad;
}

} // namespace motionspace::body
