#include "motionspace/error.hpp"
#include "motionspace/motiondata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace motionspace::motion {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Joint indices of the synthetic skeleton (see make_synthetic_body).
enum Joint {
    kPelvis = 0,
    kLHip = 1,
    kRHip = 2,
    kSpine = 3,
    kLKnee = 4,
    kRKnee = 5,
    kLShoulder = 6,
    kRShoulder = 7,
    kNeck = 8,
    kLAnkle = 9,
    kRAnkle = 10,
    kLElbow = 11,
    kRElbow = 12,
};

rot::Mat3 rx(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
rot::Mat3 ry(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
rot::Mat3 rz(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

double s(double u) { return std::sin(kTwoPi * u); }
double c(double u) { return std::cos(kTwoPi * u); }
// Smooth bump in [0, 1], peaking at u = 0.5.
double bump(double u) { return 0.5 - 0.5 * c(u); }
// Monotone reparameterization of the cycle for |a| < 1: a > 0 shortens the
// first half (stance) and lengthens the second (swing).
double warp(double u, double a) { return u - a / kTwoPi * std::sin(kTwoPi * u); }

struct StyleShape
{
    double hip_amp;
    double knee_rest;
    double knee_amp;
    double elbow_rest;
    double lean;
    double bob;
    double yaw_offset; // facing relative to the travel direction
    double time_sign;  // -1 plays the leg pattern backwards
    double duty_warp;  // stance/swing asymmetry of the leg pattern
    bool lateral;      // legs abduct instead of flexing
};

StyleShape style_shape(const GaitParams& p, double stature)
{
    const double stride = p.stride > 0.0 ? p.stride : p.speed / p.cadence;
    StyleShape sh{};
    sh.hip_amp = std::clamp(0.32 * stride / stature, 0.08, 0.85);
    sh.knee_rest = 0.05;
    sh.knee_amp = 0.5 + 0.3 * sh.hip_amp;
    sh.elbow_rest = 0.25;
    sh.lean = 0.02;
    sh.bob = 0.02;
    sh.yaw_offset = 0.0;
    sh.time_sign = 1.0;
    // Stance takes a larger share of the cycle at low speed.
    sh.duty_warp = std::clamp(0.35 * (p.speed - 2.0), -0.45, 0.6);
    sh.lateral = false;
    switch (p.style) {
    case GaitStyle::Walk:
    case GaitStyle::Turn:
        break;
    case GaitStyle::Run:
        sh.knee_rest = 0.25;
        sh.knee_amp = 1.1 + 0.4 * sh.hip_amp;
        sh.elbow_rest = 1.3;
        sh.lean = 0.15;
        sh.bob = 0.05;
        break;
    case GaitStyle::Backward:
        sh.yaw_offset = std::numbers::pi;
        sh.time_sign = -1.0;
        sh.lean = -0.03;
        break;
    case GaitStyle::Sidestep:
        sh.yaw_offset = -0.5 * std::numbers::pi;
        sh.hip_amp = std::clamp(0.25 * stride / stature, 0.05, 0.5);
        sh.knee_amp = 0.2;
        sh.lateral = true;
        break;
    }
    return sh;
}

Eigen::VectorXd draw_beta(int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd beta(count);
    for (int i = 0; i < count; ++i)
        beta(i) = std::clamp(normal(rng), -2.5, 2.5);
    return beta;
}

struct GaitEvaluator
{
    GaitParams p;
    StyleShape sh;
    double duration;
    int joints;

    // Ground-plane position after t seconds of travel along a heading that
    // turns at a constant rate.
    Eigen::Vector3d travel(double t) const
    {
        const double h0 = p.heading_deg * std::numbers::pi / 180.0;
        const double rate = p.turn_deg * std::numbers::pi / 180.0 / duration;
        double x, z;
        if (std::abs(rate) < 1e-9) {
            x = p.speed * t * std::sin(h0);
            z = p.speed * t * std::cos(h0);
        } else {
            x = p.speed / rate * (std::cos(h0) - std::cos(h0 + rate * t));
            z = p.speed / rate * (std::sin(h0 + rate * t) - std::sin(h0));
        }
        return {x, 0.0, z};
    }

    PoseFrame frame(double t) const
    {
        const double cycle = t / duration;
        const double u = sh.time_sign * cycle + p.phase;
        const double heading =
            (p.heading_deg + p.turn_deg * cycle) * std::numbers::pi / 180.0;

        std::vector<rot::Mat3> R(joints, rot::Mat3::Identity());
        auto set = [&](int j, const rot::Mat3& m) {
            if (j < joints)
                R[j] = m;
        };

        const double yaw = heading + sh.yaw_offset;
        set(kPelvis, ry(yaw) * rz(0.04 * s(u)) * rx(sh.lean * 0.5));
        const double ul = warp(u, sh.duty_warp);
        const double ur = warp(u + 0.5, sh.duty_warp);
        if (sh.lateral) {
            set(kLHip, rz(sh.hip_amp * bump(ul)) * rx(-0.05 * s(ul)));
            set(kRHip, rz(-sh.hip_amp * bump(ur - 0.65)) * rx(-0.05 * s(ur)));
            set(kLKnee, rx(sh.knee_rest + sh.knee_amp * bump(ul + 0.25)));
            set(kRKnee, rx(sh.knee_rest + sh.knee_amp * bump(ur - 0.75)));
        } else {
            set(kLHip, rx(-sh.hip_amp * s(ul)));
            set(kRHip, rx(-sh.hip_amp * s(ur)));
            set(kLKnee, rx(sh.knee_rest + sh.knee_amp * bump(ul + 0.1) * bump(ul + 0.1)));
            set(kRKnee, rx(sh.knee_rest + sh.knee_amp * bump(ur + 0.1) * bump(ur + 0.1)));
        }
        set(kSpine, rx(sh.lean) * ry(0.25 * sh.hip_amp * s(u)));
        set(kNeck, ry(-0.15 * sh.hip_amp * s(u)));
        const double swing = sh.lateral ? 0.3 * p.arm_swing : p.arm_swing;
        set(kLShoulder, rz(0.12) * rx(swing * s(u)));
        set(kRShoulder, rz(-0.12) * rx(swing * s(u + 0.5)));
        set(kLElbow, rx(-(sh.elbow_rest + 0.15 * bump(u))));
        set(kRElbow, rx(-(sh.elbow_rest + 0.15 * bump(u + 0.5))));
        set(kLAnkle, rx(0.2 * s(ul + 0.2)));
        set(kRAnkle, rx(0.2 * s(ur + 0.2)));

        PoseFrame f;
        f.theta.resize(joints);
        for (int j = 0; j < joints; ++j)
            f.theta[j] = rot::extract(R[j]);
        const Eigen::Vector3d side(std::cos(heading), 0.0, -std::sin(heading));
        f.gamma = travel(t) + Eigen::Vector3d(0.0, sh.bob * c(2.0 * u), 0.0) + 0.015 * s(u) * side;
        f.time = t;
        return f;
    }
};

GaitEvaluator make_evaluator(const GaitParams& params, const body::BodyModel& body, std::uint64_t seed,
                             Eigen::VectorXd& beta)
{
    params.validate();
    beta = params.beta.size() > 0 ? params.beta : draw_beta(body.num_betas(), seed);
    if (beta.size() != body.num_betas())
        throw Error(ErrorCode::InvalidConfig, "gait beta length does not match the body");
    const double stature = 1.0 + 0.04 * beta(0);
    return {params, style_shape(params, stature), gait_cycle_duration(params), body.num_joints()};
}

} // namespace

const char* to_string(GaitStyle style)
{
    switch (style) {
    case GaitStyle::Walk: return "walk";
    case GaitStyle::Run: return "run";
    case GaitStyle::Backward: return "backward";
    case GaitStyle::Sidestep: return "sidestep";
    case GaitStyle::Turn: return "turn";
    }
    return "walk";
}

GaitStyle parse_gait_style(const std::string& name)
{
    for (GaitStyle s : {GaitStyle::Walk, GaitStyle::Run, GaitStyle::Backward, GaitStyle::Sidestep,
                        GaitStyle::Turn})
        if (name == to_string(s))
            return s;
    throw Error(ErrorCode::InvalidConfig, "unknown gait style '" + name + "'");
}

void GaitParams::validate() const
{
    const bool finite = std::isfinite(speed) && std::isfinite(cadence) && std::isfinite(stride) &&
                        std::isfinite(heading_deg) && std::isfinite(arm_swing) &&
                        std::isfinite(turn_deg) && std::isfinite(phase);
    if (!finite || !(speed > 0.0) || !(cadence > 0.0) || stride < 0.0)
        throw Error(ErrorCode::InvalidConfig, "gait needs finite, positive speed and cadence");
}

double gait_cycle_duration(const GaitParams& params)
{
    return std::clamp(1.0 / params.cadence, kMinCycleSeconds, kMaxCycleSeconds);
}

GaitParams sample_gait_params(GaitStyle style, std::mt19937_64& rng)
{
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    GaitParams p;
    p.style = style;
    switch (style) {
    case GaitStyle::Walk:
        p.speed = uniform(0.9, 1.6);
        p.cadence = uniform(0.8, 1.1);
        break;
    case GaitStyle::Run:
        p.speed = uniform(2.2, 3.8);
        p.cadence = uniform(1.2, 1.6);
        break;
    case GaitStyle::Backward:
        p.speed = uniform(0.5, 1.0);
        p.cadence = uniform(0.7, 1.0);
        break;
    case GaitStyle::Sidestep:
        p.speed = uniform(0.4, 0.9);
        p.cadence = uniform(0.7, 1.0);
        break;
    case GaitStyle::Turn:
        p.speed = uniform(0.8, 1.4);
        p.cadence = uniform(0.8, 1.05);
        break;
    }
    p.heading_deg = uniform(0.0, 360.0);
    p.arm_swing = style == GaitStyle::Run ? uniform(0.3, 0.6) : uniform(0.2, 0.5);
    if (style == GaitStyle::Turn) {
        const double magnitude = uniform(30.0, 100.0);
        p.turn_deg = uniform(0.0, 1.0) < 0.5 ? -magnitude : magnitude;
    }
    p.phase = (uniform(0.0, 1.0) < 0.5 ? 0.0 : 0.5) + uniform(-0.02, 0.02);
    return p;
}

MotionSequence synth_gait(const GaitParams& params, const body::BodyModel& body, int frames,
                          std::uint64_t seed)
{
    if (frames < 2)
        throw Error(ErrorCode::InvalidConfig, "a gait cycle needs at least two frames");
    MotionSequence seq;
    const GaitEvaluator eval = make_evaluator(params, body, seed, seq.beta);
    seq.frames.reserve(frames);
    for (int k = 0; k < frames; ++k) {
        const double t = k == frames - 1 ? eval.duration : eval.duration * k / (frames - 1);
        seq.frames.push_back(eval.frame(t));
    }
    seq.frame_rate_hint = (frames - 1) / eval.duration;
    return seq;
}

MotionSequence synth_gait_cycles(const GaitParams& params, const body::BodyModel& body, int cycles,
                                 double fps, std::uint64_t seed)
{
    if (cycles < 1 || !(fps > 0.0))
        throw Error(ErrorCode::InvalidConfig, "need at least one cycle and a positive frame rate");
    MotionSequence seq;
    const GaitEvaluator eval = make_evaluator(params, body, seed, seq.beta);
    const int per_cycle = std::max(2, static_cast<int>(std::lround(eval.duration * fps)));
    const int total = cycles * per_cycle;
    seq.frames.reserve(total + 1);
    for (int k = 0; k <= total; ++k)
        seq.frames.push_back(eval.frame(eval.duration * k / per_cycle));
    seq.frame_rate_hint = per_cycle / eval.duration;
    return seq;
}

std::vector<MotionSequence> synth_dataset(const body::BodyModel& body, int count, int frames,
                                          std::uint64_t seed, int subjects, std::vector<GaitParams>* params)
{
    if (count < 0 || subjects < 0)
        throw Error(ErrorCode::InvalidConfig, "dataset and subject counts must be non-negative");
    std::mt19937_64 rng(seed);
    std::vector<Eigen::VectorXd> pool;
    for (int i = 0; i < subjects; ++i)
        pool.push_back(draw_beta(body.num_betas(), rng()));
    std::discrete_distribution<int> style({0.35, 0.2, 0.15, 0.15, 0.15});
    std::vector<MotionSequence> out;
    out.reserve(count);
    if (params)
        params->clear();
    for (int i = 0; i < count; ++i) {
        GaitParams p = sample_gait_params(static_cast<GaitStyle>(style(rng)), rng);
        if (!pool.empty())
            p.beta = pool[std::uniform_int_distribution<int>(0, subjects - 1)(rng)];
        out.push_back(align(synth_gait(p, body, frames, rng())));
        if (params)
            params->push_back(p);
    }
    return out;
}

} // namespace motionspace::motion
