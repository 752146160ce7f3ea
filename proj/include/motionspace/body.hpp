#pragma once

#include "motionspace/rotmath.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace motionspace::body {

using rot::Rot6;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using ThetaGrad = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

/// Indices of the two hip joints in every body built by make_synthetic_body.
inline constexpr int kLeftHip = 1;
inline constexpr int kRightHip = 2;
inline constexpr int kMarkerCount = 16;

/**
 * Skinned parametric body. Vertices are posed with linear blend skinning on a
 * kinematic tree whose rest joint locations depend linearly on the shape
 * coefficients beta.
 *
 * Tensor layouts (row-major, matching the JSON asset):
 *  - shape_dirs is (3V x B), row 3*i + c holds vertex i, coordinate c.
 *  - joint_shape_dirs is (3J x B) with the same convention.
 */
struct BodyModel
{
    VertexMatrix template_vertices;
    Eigen::MatrixXd shape_dirs;
    Eigen::MatrixXd joint_shape_dirs;
    Eigen::MatrixXd skin_weights; // V x J
    VertexMatrix rest_joints;
    std::vector<int> parents;
    /// Optional triangle list for mesh export; not used by posing.
    std::vector<std::array<int, 3>> faces;

    int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
    int num_joints() const { return static_cast<int>(rest_joints.rows()); }
    int num_betas() const { return static_cast<int>(shape_dirs.cols()); }

    /// Throws InvalidInput describing the first violated invariant.
    void validate() const;
};

enum class Projection {
    Strict,  ///< collapsed 6D input throws DegenerateInput
    Clamped, ///< training path, see rot::project_clamped
};

struct ShapedBody
{
    VertexMatrix vertices;
    VertexMatrix joints;
};

ShapedBody shape(const BodyModel& body, const Eigen::VectorXd& beta);

/// Per-joint skinning transforms. The rest pose (all identity rotations) gives
/// identity transforms.
std::vector<Eigen::Isometry3d> forward_kinematics(const BodyModel& body, const VertexMatrix& joints,
                                                  std::span<const Rot6> theta,
                                                  Projection mode = Projection::Strict);

VertexMatrix pose_mesh(const BodyModel& body, const Eigen::VectorXd& beta,
                       std::span<const Rot6> theta, const Eigen::Vector3d& gamma,
                       Projection mode = Projection::Strict);

/// Posing with a precomputed shape; avoids re-applying blendshapes per frame.
VertexMatrix pose_mesh(const BodyModel& body, const ShapedBody& shaped, std::span<const Rot6> theta,
                       const Eigen::Vector3d& gamma, Projection mode = Projection::Strict);

struct PoseGradient
{
    Eigen::VectorXd beta;
    ThetaGrad theta; // J x 6
    Eigen::Vector3d gamma;
};

/// Vector-Jacobian product of pose_mesh with an upstream V x 3 vertex gradient.
PoseGradient pose_mesh_vjp(const BodyModel& body, const Eigen::VectorXd& beta,
                           std::span<const Rot6> theta, const Eigen::Vector3d& gamma,
                           const VertexMatrix& upstream, Projection mode = Projection::Strict);

/// Deterministic humanoid body: torso chain, two legs, two arms and a head (as
/// far as J allows), vertices on rings around the bones.
BodyModel make_synthetic_body(int num_joints, int num_vertices, int num_betas, std::uint64_t seed);

/// Sixteen vertices spread over the body, used as virtual mocap markers.
std::vector<int> default_marker_vertices(const BodyModel& body);

BodyModel load_body(const std::filesystem::path& path);
void save_body(const BodyModel& body, const std::filesystem::path& path);

std::vector<int> load_markers(const std::filesystem::path& path);
void save_markers(const std::vector<int>& vertex_ids, const std::filesystem::path& path);

} // namespace motionspace::body
