#pragma once

#include "motionspace/body.hpp"
#include "motionspace/rotmath.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace motionspace::motion {

using rot::Rot6;

/// One frame of body-model parameters. Joint 0 of theta is the root
/// orientation; time is the absolute timestamp in seconds.
struct PoseFrame
{
    std::vector<Rot6> theta;
    Eigen::Vector3d gamma = Eigen::Vector3d::Zero();
    double time = 0.0;
};

struct MotionSequence
{
    Eigen::VectorXd beta;
    std::vector<PoseFrame> frames;
    double frame_rate_hint = 0.0;

    int num_frames() const { return static_cast<int>(frames.size()); }
    int num_joints() const { return frames.empty() ? 0 : static_cast<int>(frames.front().theta.size()); }
    double duration() const { return frames.empty() ? 0.0 : frames.back().time - frames.front().time; }
};

/// Offsets into the flattened motion vector: per frame [theta (6J), gamma (3), phi (1)].
struct ChiLayout
{
    int frames = 0;
    int joints = 0;

    int frame_width() const { return 6 * joints + 4; }
    int size() const { return frames * frame_width(); }
    int theta_offset(int frame, int joint) const { return frame * frame_width() + 6 * joint; }
    int gamma_offset(int frame) const { return frame * frame_width() + 6 * joints; }
    int phi_offset(int frame) const { return frame * frame_width() + 6 * joints + 3; }
};

/// Flattened, normalized motion vector (see ChiLayout).
using ChiVector = Eigen::VectorXd;

struct NormalizationSpec
{
    Eigen::Vector3d translation_bound = Eigen::Vector3d::Ones();
    double max_frame_delta = 1.0;

    void validate() const;
};

/// Bounds from a training set: translation_bound is kTranslationMargin times the
/// largest |gamma| per axis, max_frame_delta = 3 s / (N - 1).
NormalizationSpec fit_normalization(std::span<const MotionSequence> sequences, int frames);

inline constexpr double kTranslationMargin = 1.25;
inline constexpr double kMaxCycleSeconds = 3.0;
inline constexpr double kMinCycleSeconds = 0.3;

/// Throws OutOfBounds when a translation or frame interval exceeds the spec.
ChiVector normalize(const MotionSequence& seq, const NormalizationSpec& spec);

/// Inverse of normalize. Negative phi entries are clamped to zero; the first
/// frame's phi is ignored and time starts at 0.
MotionSequence denormalize(const ChiVector& chi, const ChiLayout& layout,
                           const NormalizationSpec& spec, const Eigen::VectorXd& beta);

/// Sum of the (clamped) decoded frame intervals, in seconds.
double decoded_duration(const ChiVector& chi, const ChiLayout& layout, const NormalizationSpec& spec);

/// Moves frame 0 to the origin with identity root orientation, applying the
/// same rigid correction to every frame. Time is shifted to start at 0.
MotionSequence align(const MotionSequence& seq);

/// Uniform resampling in time to `frames` frames.
MotionSequence resample(const MotionSequence& seq, int frames);

/// Classic DTW over rows (frames) of a and b with steps (1,0), (0,1), (1,1) and
/// Euclidean frame cost.
double dtw_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Stacks the 6D channels of the given joints, one row per frame.
Eigen::MatrixXd joint_channels(const MotionSequence& seq, std::span<const int> joints);

struct SegmentOptions
{
    std::vector<int> hip_joints{body::kLeftHip, body::kRightHip};
    int start_stride = 5;
    int window_lengths = 8;
    double min_seconds = kMinCycleSeconds;
    double max_seconds = kMaxCycleSeconds;
    /// Overlap tolerated between coarse candidates before refinement, as a
    /// fraction of the shorter window.
    double coarse_overlap = 0.3;
    int refine_rounds = 3;
};

struct Segment
{
    int first_frame = 0;
    int last_frame = 0; // inclusive
    double distance = 0.0;
    MotionSequence sequence;
};

/// Finds single gait cycles in a long sequence. The distance of a window is
/// the DTW cost between its hip channels (resampled to the reference length)
/// and the reference, divided by the reference frame count.
std::vector<Segment> segment_cycles(const MotionSequence& long_seq, std::span<const MotionSequence> refs,
                                    double threshold, const SegmentOptions& options = {});

double window_distance(const MotionSequence& long_seq, int first, int last, const MotionSequence& ref,
                       std::span<const int> hip_joints);

enum class GaitStyle { Walk, Run, Backward, Sidestep, Turn };

const char* to_string(GaitStyle style);
GaitStyle parse_gait_style(const std::string& name);

struct GaitParams
{
    double speed = 1.3;      // m/s
    double cadence = 1.0;    // gait cycles per second
    double stride = 0.0;     // m per cycle; 0 derives speed / cadence
    double heading_deg = 0.0;
    double arm_swing = 0.35; // rad
    GaitStyle style = GaitStyle::Walk;
    double turn_deg = 0.0;   // heading change over one cycle
    double phase = 0.0;      // starting phase in cycles (0.5 = opposite foot)
    Eigen::VectorXd beta;    // empty: drawn from the seed

    void validate() const;
};

/// Plausible random parameters for a style, as used by the synthetic dataset.
GaitParams sample_gait_params(GaitStyle style, std::mt19937_64& rng);

/// One gait cycle sampled at `frames` uniform time steps over [0, duration],
/// duration = 1 / cadence clamped to [0.3, 3] s.
MotionSequence synth_gait(const GaitParams& params, const body::BodyModel& body, int frames,
                          std::uint64_t seed);

/// `cycles` consecutive cycles sampled at a fixed frame rate; the last frame of
/// cycle k coincides with the first frame of cycle k + 1.
MotionSequence synth_gait_cycles(const GaitParams& params, const body::BodyModel& body, int cycles,
                                 double fps, std::uint64_t seed);

double gait_cycle_duration(const GaitParams& params);

/// Aligned single cycles with `frames` frames each, styles mixed at random.
/// Shapes come from a pool of `subjects` random morphologies (0: one per
/// sequence). When `params` is given it receives the parameters of every
/// sequence.
std::vector<MotionSequence> synth_dataset(const body::BodyModel& body, int count, int frames,
                                          std::uint64_t seed, int subjects = 0,
                                          std::vector<GaitParams>* params = nullptr);

std::vector<MotionSequence> read_sequences(const std::filesystem::path& path);
void write_sequences(const std::filesystem::path& path, std::span<const MotionSequence> sequences);

} // namespace motionspace::motion
