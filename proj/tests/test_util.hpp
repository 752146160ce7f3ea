#pragma once

#include "motionspace/body.hpp"
#include "motionspace/error.hpp"
#include "motionspace/motiondata.hpp"
#include "motionspace/rotmath.hpp"

#include <Eigen/Geometry>

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testutil {

using namespace motionspace;

// Uniform random rotation from a normalized Gaussian quaternion.
inline rot::Mat3 random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

// A non-degenerate raw 6D vector: a rotation plus noise and random column scales.
inline rot::Rot6 random_rot6(std::mt19937_64& rng, double noise = 0.2)
{
    std::normal_distribution<double> n(0.0, noise);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    rot::Rot6 r = rot::extract(random_rotation(rng));
    for (int i = 0; i < 6; ++i)
        r(i) += n(rng);
    r.head<3>() *= scale(rng);
    r.tail<3>() *= scale(rng);
    return r;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double sigma = 1.0)
{
    std::normal_distribution<double> d(0.0, sigma);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = d(rng);
    return v;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Relative error with the same floor convention as grad::finite_diff_check.
inline double rel_error(double a, double b, double floor = 1e-6)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <class F>
ErrorCode error_code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a motionspace::Error");
    return ErrorCode::InvalidInput;
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("motionspace_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Identity-pose sequence with uniform frame spacing.
inline motion::MotionSequence rest_sequence(int joints, int frames, double dt, int betas)
{
    motion::MotionSequence s;
    s.beta = Eigen::VectorXd::Zero(betas);
    for (int k = 0; k < frames; ++k) {
        motion::PoseFrame f;
        f.theta.assign(joints, rot::identity6());
        f.time = k * dt;
        s.frames.push_back(f);
    }
    return s;
}

} // namespace testutil
