#include "motionspace/motiondata.hpp"

#include "motionspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace motionspace::motion {

namespace {

void check_uniform_joints(const MotionSequence& seq)
{
    const int J = seq.num_joints();
    for (const auto& f : seq.frames)
        if (static_cast<int>(f.theta.size()) != J)
            throw Error(ErrorCode::ShapeMismatch, "frames of a sequence must share the joint count");
}

} // namespace

void NormalizationSpec::validate() const
{
    if (!(translation_bound.array() > 0.0).all() || !(max_frame_delta > 0.0) ||
        !translation_bound.allFinite() || !std::isfinite(max_frame_delta))
        throw Error(ErrorCode::InvalidConfig, "normalization bounds must be finite and positive");
}

NormalizationSpec fit_normalization(std::span<const MotionSequence> sequences, int frames)
{
    if (frames < 2)
        throw Error(ErrorCode::InvalidConfig, "frame count must be at least 2");
    NormalizationSpec spec;
    Eigen::Vector3d max_abs = Eigen::Vector3d::Zero();
    for (const auto& seq : sequences)
        for (const auto& f : seq.frames)
            max_abs = max_abs.cwiseMax(f.gamma.cwiseAbs());
    spec.translation_bound = (kTranslationMargin * max_abs).cwiseMax(Eigen::Vector3d::Constant(1e-3));
    spec.max_frame_delta = kMaxCycleSeconds / (frames - 1);
    return spec;
}

ChiVector normalize(const MotionSequence& seq, const NormalizationSpec& spec)
{
    spec.validate();
    check_uniform_joints(seq);
    const ChiLayout layout{seq.num_frames(), seq.num_joints()};
    if (layout.frames < 1)
        throw Error(ErrorCode::EmptyInput, "cannot normalize an empty sequence");

    ChiVector chi(layout.size());
    for (int k = 0; k < layout.frames; ++k) {
        const PoseFrame& f = seq.frames[k];
        for (int j = 0; j < layout.joints; ++j)
            chi.segment<6>(layout.theta_offset(k, j)) = rot::center(f.theta[j]);
        for (int c = 0; c < 3; ++c) {
            if (std::abs(f.gamma(c)) > spec.translation_bound(c) * (1.0 + 1e-12))
                throw Error(ErrorCode::OutOfBounds,
                            "frame " + std::to_string(k) + " translation exceeds the normalization bound");
            chi(layout.gamma_offset(k) + c) = f.gamma(c) / spec.translation_bound(c);
        }
        const double delta = k == 0 ? 0.0 : f.time - seq.frames[k - 1].time;
        if (delta < 0.0 || delta > spec.max_frame_delta * (1.0 + 1e-9))
            throw Error(ErrorCode::OutOfBounds,
                        "frame " + std::to_string(k) + " interval lies outside [0, max_frame_delta]");
        chi(layout.phi_offset(k)) = delta / spec.max_frame_delta;
    }
    return chi;
}

MotionSequence denormalize(const ChiVector& chi, const ChiLayout& layout, const NormalizationSpec& spec,
                           const Eigen::VectorXd& beta)
{
    if (chi.size() != layout.size())
        throw Error(ErrorCode::ShapeMismatch, "motion vector length does not match its layout");
    MotionSequence seq;
    seq.beta = beta;
    seq.frames.resize(layout.frames);
    double time = 0.0;
    for (int k = 0; k < layout.frames; ++k) {
        PoseFrame& f = seq.frames[k];
        f.theta.resize(layout.joints);
        for (int j = 0; j < layout.joints; ++j)
            f.theta[j] = rot::uncenter(chi.segment<6>(layout.theta_offset(k, j)));
        f.gamma = chi.segment<3>(layout.gamma_offset(k)).cwiseProduct(spec.translation_bound);
        if (k > 0)
            time += std::max(0.0, chi(layout.phi_offset(k))) * spec.max_frame_delta;
        f.time = time;
    }
    seq.frame_rate_hint = time > 0.0 ? (layout.frames - 1) / time : 0.0;
    return seq;
}

double decoded_duration(const ChiVector& chi, const ChiLayout& layout, const NormalizationSpec& spec)
{
    double total = 0.0;
    for (int k = 1; k < layout.frames; ++k)
        total += std::max(0.0, chi(layout.phi_offset(k)));
    return total * spec.max_frame_delta;
}

MotionSequence align(const MotionSequence& seq)
{
    if (seq.frames.empty())
        throw Error(ErrorCode::EmptyInput, "cannot align an empty sequence");
    check_uniform_joints(seq);
    const rot::Mat3 correction = rot::project(seq.frames.front().theta.front()).transpose();
    const Eigen::Vector3d origin = seq.frames.front().gamma;
    const double t0 = seq.frames.front().time;

    MotionSequence out = seq;
    for (auto& f : out.frames) {
        f.theta.front() = rot::extract(correction * rot::project(f.theta.front()));
        f.gamma = correction * (f.gamma - origin);
        f.time -= t0;
    }
    // Exact zeros for the anchor frame.
    out.frames.front().theta.front() = rot::identity6();
    out.frames.front().gamma.setZero();
    return out;
}

MotionSequence resample(const MotionSequence& seq, int frames)
{
    if (seq.num_frames() < 2)
        throw Error(ErrorCode::TooShort, "resampling needs at least two frames");
    if (frames < 2)
        throw Error(ErrorCode::InvalidConfig, "target frame count must be at least 2");
    check_uniform_joints(seq);
    for (int k = 1; k < seq.num_frames(); ++k)
        if (!(seq.frames[k].time > seq.frames[k - 1].time))
            throw Error(ErrorCode::InvalidInput, "timestamps must be strictly increasing");

    const double t0 = seq.frames.front().time;
    const double t1 = seq.frames.back().time;
    const int J = seq.num_joints();

    MotionSequence out;
    out.beta = seq.beta;
    out.frames.resize(frames);
    int seg = 0;
    for (int k = 0; k < frames; ++k) {
        const double t = k == frames - 1 ? t1 : t0 + (t1 - t0) * k / (frames - 1);
        while (seg + 2 < seq.num_frames() && seq.frames[seg + 1].time < t)
            ++seg;
        const PoseFrame& a = seq.frames[seg];
        const PoseFrame& b = seq.frames[seg + 1];
        const double alpha = std::clamp((t - a.time) / (b.time - a.time), 0.0, 1.0);
        PoseFrame& f = out.frames[k];
        f.theta.resize(J);
        for (int j = 0; j < J; ++j)
            f.theta[j] = rot::lerp(a.theta[j], b.theta[j], alpha);
        f.gamma = (1.0 - alpha) * a.gamma + alpha * b.gamma;
        f.time = t;
    }
    out.frame_rate_hint = (frames - 1) / (t1 - t0);
    return out;
}

Eigen::MatrixXd joint_channels(const MotionSequence& seq, std::span<const int> joints)
{
    Eigen::MatrixXd out(seq.num_frames(), 6 * static_cast<Eigen::Index>(joints.size()));
    for (int k = 0; k < seq.num_frames(); ++k)
        for (std::size_t i = 0; i < joints.size(); ++i)
            out.row(k).segment<6>(6 * i) = seq.frames[k].theta.at(joints[i]).transpose();
    return out;
}

} // namespace motionspace::motion
