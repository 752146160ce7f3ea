#include "motionspace/body.hpp"

#include "motionspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace motionspace::body {

namespace {

using Vec3 = Eigen::Vector3d;

struct SkeletonEntry
{
    const char* name;
    int parent;
    double offset[3]; // from parent (absolute for the root)
    double radius;    // of the bone ending at this joint
    double cap[3];    // extension drawn past a leaf of the full skeleton
};

// Full humanoid, y up, facing +z. Any prefix is a valid tree (parents come
// first); joints beyond the requested count are still drawn as bones and get
// skinned to their nearest retained ancestor.
constexpr SkeletonEntry kSkeleton[] = {
    {"pelvis", -1, {0.0, 0.95, 0.0}, 0.0, {0, 0, 0}},
    {"l_hip", 0, {0.09, -0.07, 0.0}, 0.08, {0, 0, 0}},
    {"r_hip", 0, {-0.09, -0.07, 0.0}, 0.08, {0, 0, 0}},
    {"spine", 0, {0.0, 0.12, -0.01}, 0.13, {0, 0, 0}},
    {"l_knee", 1, {0.01, -0.40, 0.01}, 0.07, {0, 0, 0}},
    {"r_knee", 2, {-0.01, -0.40, 0.01}, 0.07, {0, 0, 0}},
    {"l_shoulder", 3, {0.17, 0.30, -0.01}, 0.07, {0, 0, 0}},
    {"r_shoulder", 3, {-0.17, 0.30, -0.01}, 0.07, {0, 0, 0}},
    {"neck", 3, {0.0, 0.36, 0.0}, 0.12, {0, 0, 0}},
    {"l_ankle", 4, {0.0, -0.40, -0.02}, 0.05, {0, 0, 0}},
    {"r_ankle", 5, {0.0, -0.40, -0.02}, 0.05, {0, 0, 0}},
    {"l_elbow", 6, {0.03, -0.27, 0.0}, 0.045, {0, 0, 0}},
    {"r_elbow", 7, {-0.03, -0.27, 0.0}, 0.045, {0, 0, 0}},
    {"head", 8, {0.0, 0.10, 0.02}, 0.05, {0.0, 0.18, 0.0}},
    {"l_wrist", 11, {0.0, -0.25, 0.02}, 0.04, {0, 0, 0}},
    {"r_wrist", 12, {0.0, -0.25, 0.02}, 0.04, {0, 0, 0}},
    {"l_foot", 9, {0.0, -0.05, 0.12}, 0.04, {0, 0, 0}},
    {"r_foot", 10, {0.0, -0.05, 0.12}, 0.04, {0, 0, 0}},
    {"l_hand", 14, {0.0, -0.08, 0.0}, 0.035, {0.0, -0.06, 0.0}},
    {"r_hand", 15, {0.0, -0.08, 0.0}, 0.035, {0.0, -0.06, 0.0}},
    {"l_toe", 16, {0.0, 0.0, 0.06}, 0.03, {0.0, 0.0, 0.04}},
    {"r_toe", 17, {0.0, 0.0, 0.06}, 0.03, {0.0, 0.0, 0.04}},
};
constexpr int kFullJoints = static_cast<int>(std::size(kSkeleton));

struct Bone
{
    int from_full; // full-skeleton joint at the start
    int to_full;   // full-skeleton joint at the end, -1 for a cap
    Vec3 a, b;
    double radius;
    int owner; // retained joint that moves this bone
};

Vec3 offset_of(int j)
{
    return Vec3(kSkeleton[j].offset[0], kSkeleton[j].offset[1], kSkeleton[j].offset[2]);
}

std::pair<Vec3, Vec3> perpendicular_basis(const Vec3& axis)
{
    const Vec3 ref = std::abs(axis.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
    const Vec3 e1 = axis.cross(ref).normalized();
    return {e1, axis.cross(e1).normalized()};
}

double segment_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).squaredNorm();
}

} // namespace

BodyModel make_synthetic_body(int num_joints, int num_vertices, int num_betas, std::uint64_t seed)
{
    if (num_joints < 4 || num_joints > kFullJoints)
        throw Error(ErrorCode::InvalidConfig,
                    "joint count must be in [4, " + std::to_string(kFullJoints) + "]");
    if (num_vertices < num_joints)
        throw Error(ErrorCode::InvalidConfig, "vertex count must be at least the joint count");
    if (num_betas < 1)
        throw Error(ErrorCode::InvalidConfig, "shape dimension must be at least 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const int J = num_joints;
    const int V = num_vertices;
    const int B = num_betas;

    // Rest positions of the full skeleton, and the retained joint owning each.
    std::vector<Vec3> full_pos(kFullJoints);
    std::vector<int> owner(kFullJoints);
    for (int j = 0; j < kFullJoints; ++j) {
        const int p = kSkeleton[j].parent;
        full_pos[j] = p < 0 ? offset_of(j) : full_pos[p] + offset_of(j);
        owner[j] = j < J ? j : owner[p];
    }

    std::vector<Bone> bones;
    for (int j = 1; j < kFullJoints; ++j) {
        const int p = kSkeleton[j].parent;
        bones.push_back({p, j, full_pos[p], full_pos[j], kSkeleton[j].radius, owner[p]});
    }
    for (int j = 0; j < kFullJoints; ++j) {
        const Vec3 cap(kSkeleton[j].cap[0], kSkeleton[j].cap[1], kSkeleton[j].cap[2]);
        if (cap.squaredNorm() > 0.0) {
            const double r = j == 13 ? 0.09 : kSkeleton[j].radius;
            bones.push_back({j, -1, full_pos[j], full_pos[j] + cap, r, owner[j]});
        }
    }
    const int num_bones = static_cast<int>(bones.size());

    // Rings of `ring` vertices, distributed over bones by length (largest
    // remainder); vertices that do not fill a ring sit at joint centres.
    const int ring = std::clamp(V / (2 * num_bones), 3, 8);
    const int num_rings = V / ring;
    std::vector<double> lengths(num_bones);
    double total_length = 0.0;
    for (int b = 0; b < num_bones; ++b) {
        lengths[b] = (bones[b].b - bones[b].a).norm();
        total_length += lengths[b];
    }
    std::vector<int> rings_per_bone(num_bones, 0);
    {
        std::vector<std::pair<double, int>> remainders;
        int assigned = 0;
        for (int b = 0; b < num_bones; ++b) {
            const double share = num_rings * lengths[b] / total_length;
            rings_per_bone[b] = static_cast<int>(std::floor(share));
            assigned += rings_per_bone[b];
            remainders.emplace_back(share - rings_per_bone[b], b);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        for (int i = 0; assigned < num_rings; ++i, ++assigned)
            rings_per_bone[remainders[i % num_bones].second] += 1;
    }

    BodyModel body;
    body.template_vertices.resize(V, 3);
    body.rest_joints.resize(J, 3);
    body.parents.resize(J);
    for (int j = 0; j < J; ++j) {
        body.rest_joints.row(j) = full_pos[j].transpose();
        body.parents[j] = kSkeleton[j].parent;
    }

    // Per-vertex placement record used again for the shape directions.
    struct Placement
    {
        int bone;      // -1 for a joint-centre vertex
        int joint;     // full-skeleton joint for centre vertices
        double along;  // fraction along the bone
        Vec3 radial;   // unit radial direction
        double radius;
    };
    std::vector<Placement> placement;
    placement.reserve(V);

    int v = 0;
    for (int b = 0; b < num_bones; ++b) {
        const Bone& bone = bones[b];
        const Vec3 axis = (bone.b - bone.a).normalized();
        const auto [e1, e2] = perpendicular_basis(axis);
        const int first_ring = v;
        for (int r = 0; r < rings_per_bone[b]; ++r) {
            const double along = (r + 0.5) / rings_per_bone[b];
            const double twist = 0.3 * unit(rng);
            const double radius = bone.radius * (1.0 + 0.1 * unit(rng));
            const Vec3 centre = bone.a + along * (bone.b - bone.a);
            for (int k = 0; k < ring; ++k) {
                const double angle = 2.0 * std::numbers::pi * k / ring + twist;
                const Vec3 radial = std::cos(angle) * e1 + std::sin(angle) * e2;
                body.template_vertices.row(v) = (centre + radius * radial).transpose();
                placement.push_back({b, -1, along, radial, radius});
                ++v;
            }
        }
        for (int r = 0; r + 1 < rings_per_bone[b]; ++r) {
            const int base0 = first_ring + r * ring;
            const int base1 = base0 + ring;
            for (int k = 0; k < ring; ++k) {
                const int k1 = (k + 1) % ring;
                body.faces.push_back({base0 + k, base0 + k1, base1 + k});
                body.faces.push_back({base0 + k1, base1 + k1, base1 + k});
            }
        }
    }
    for (int j = 0; v < V; ++v, j = (j + 1) % kFullJoints) {
        const Vec3 jitter(0.01 * unit(rng), 0.01 * unit(rng), 0.01 * unit(rng));
        body.template_vertices.row(v) = (full_pos[j] + jitter).transpose();
        placement.push_back({-1, j, 0.0, Vec3::Zero(), 0.0});
    }

    // Skinning: softmax over retained joints of negative squared distance to the
    // bones each joint moves.
    constexpr double kSigma = 0.05;
    body.skin_weights.setZero(V, J);
    for (int i = 0; i < V; ++i) {
        const Vec3 p = body.template_vertices.row(i).transpose();
        Eigen::VectorXd d2 = Eigen::VectorXd::Constant(J, std::numeric_limits<double>::infinity());
        for (const Bone& bone : bones)
            d2(bone.owner) = std::min(d2(bone.owner), segment_distance_sq(p, bone.a, bone.b));
        const double best = d2.minCoeff();
        Eigen::VectorXd w(J);
        for (int j = 0; j < J; ++j)
            w(j) = std::isfinite(d2(j)) ? std::exp(-(d2(j) - best) / (2.0 * kSigma * kSigma)) : 0.0;
        body.skin_weights.row(i) = (w / w.sum()).transpose();
    }

    // Shape directions: per-component random bone-length and girth changes,
    // propagated down the full skeleton so vertices follow their joints.
    body.shape_dirs.setZero(3 * V, B);
    body.joint_shape_dirs.setZero(3 * J, B);
    for (int c = 0; c < B; ++c) {
        std::vector<Vec3> disp(kFullJoints, Vec3::Zero());
        std::vector<double> girth(num_bones);
        const double global = c == 0 ? 0.08 : 0.0; // first component acts like stature
        for (int j = 1; j < kFullJoints; ++j) {
            const double s = global + 0.06 * unit(rng);
            disp[j] = disp[kSkeleton[j].parent] + s * offset_of(j);
        }
        for (int b = 0; b < num_bones; ++b)
            girth[b] = 0.25 * unit(rng);

        for (int i = 0; i < V; ++i) {
            const Placement& pl = placement[i];
            Vec3 d;
            if (pl.bone < 0) {
                d = disp[pl.joint];
            } else {
                const Bone& bone = bones[pl.bone];
                const Vec3 da = disp[bone.from_full];
                const Vec3 db = bone.to_full >= 0 ? disp[bone.to_full] : da;
                d = (1.0 - pl.along) * da + pl.along * db + girth[pl.bone] * pl.radius * pl.radial;
            }
            body.shape_dirs.block<3, 1>(3 * i, c) = d;
        }
        for (int j = 0; j < J; ++j)
            body.joint_shape_dirs.block<3, 1>(3 * j, c) = disp[j];

        double max_norm = 0.0;
        for (int i = 0; i < V; ++i)
            max_norm = std::max(max_norm, body.shape_dirs.block<3, 1>(3 * i, c).norm());
        if (max_norm > 0.05) {
            const double scale = 0.05 / max_norm;
            body.shape_dirs.col(c) *= scale;
            body.joint_shape_dirs.col(c) *= scale;
        }
    }

    body.validate();
    return body;
}

std::vector<int> default_marker_vertices(const BodyModel& body)
{
    // Farthest point sampling from the vertex nearest the root.
    const int V = body.num_vertices();
    const Eigen::Vector3d root = body.rest_joints.row(0).transpose();
    std::vector<int> ids;
    Eigen::VectorXd dist(V);
    int start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < V; ++i) {
        const double d = (body.template_vertices.row(i).transpose() - root).squaredNorm();
        if (d < best) {
            best = d;
            start = i;
        }
    }
    dist.setConstant(std::numeric_limits<double>::infinity());
    int next = start;
    for (int m = 0; m < kMarkerCount; ++m) {
        ids.push_back(next);
        const Eigen::Vector3d p = body.template_vertices.row(next).transpose();
        for (int i = 0; i < V; ++i)
            dist(i) = std::min(dist(i), (body.template_vertices.row(i).transpose() - p).squaredNorm());
        Eigen::Index arg = 0;
        dist.maxCoeff(&arg);
        next = static_cast<int>(arg);
    }
    return ids;
}

} // namespace motionspace::body
