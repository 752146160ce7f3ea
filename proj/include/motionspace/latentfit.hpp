#pragma once

#include "motionspace/body.hpp"
#include "motionspace/motiondata.hpp"
#include "motionspace/motionvae.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace motionspace::fit {

using PointSet = body::VertexMatrix;

struct ObservedFrame
{
    double time = 0.0;
    PointSet points;                // M x 3, unordered, may be empty
    std::optional<PointSet> markers; // kMarkerCount x 3
};

struct SparseObservation
{
    std::vector<ObservedFrame> frames;
    std::vector<int> marker_vertex_ids;

    /// Strictly increasing times, marker blocks of the right size.
    void validate() const;
};

SparseObservation read_observation(const std::filesystem::path& path);
void write_observation(const SparseObservation& obs, const std::filesystem::path& path);

/// Linear blend of both z and beta.
vae::LatentCode interpolate_code(const vae::LatentCode& a, const vae::LatentCode& b, double t);

/// Decodes the blended code and denormalizes it.
motion::MotionSequence interpolate(const vae::MotionVae& model, const vae::LatentCode& a,
                                   const vae::LatentCode& b, double t);

motion::MotionSequence decode_sequence(const vae::MotionVae& model, const vae::LatentCode& code);

struct NearestResult
{
    std::vector<int> index;
    Eigen::VectorXd dist2;
};

/// Nearest target for every query; ties go to the lowest target index. With
/// use_grid the search runs on a uniform grid and returns the same answer.
NearestResult nearest_neighbors(const PointSet& queries, const PointSet& targets, bool use_grid);

inline constexpr int kGridThreshold = 500;

/// mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2. With grad_a the gradient with
/// respect to A's points is written (same shape as A).
double chamfer(const PointSet& A, const PointSet& B, PointSet* grad_a = nullptr);

struct FitOptions
{
    int iterations = 500;
    double lr = 0.05;
    int patience = 20;
    double min_rel_improvement = 1e-6;
    int weight_update_every = 10;
    double weight_lr = 0.025;
    bool use_dense = true;
    bool use_markers = true;
    std::optional<vae::LatentCode> init; // default: the prior mean (0, 0)
    /// Additional descents from z ~ N(0, restart_sigma^2 I) with the initial
    /// beta; the lowest loss over all descents is returned.
    int restarts = 0;
    double restart_sigma = 1.0;
    std::uint64_t seed = 0;
    /// Weights w of the penalty w * |z|^2 / dim_z that predict() and
    /// complete() add to their objectives.
    double prediction_prior = 7e-4;
    double completion_prior = 0.0;
};

struct FitResult
{
    vae::LatentCode code;
    vae::ChiVector chi;
    motion::MotionSequence sequence;
    /// Best value of the unweighted sum of the active task losses plus the
    /// prior penalty.
    double loss = 0.0;
    int iterations = 0; // summed over all descents
    /// From the winning descent: false when its iteration budget ran out
    /// before the improvement stalled (the best iterate is still returned).
    bool converged = false;
    /// Best-so-far loss after every iteration of every descent, in order.
    std::vector<double> history;
};

/// Fits (z, beta) so that the first decoded frames reproduce the prefix meshes
/// and frame intervals. Decoder weights stay fixed.
FitResult predict(const motion::MotionSequence& prefix, const body::BodyModel& body,
                  const vae::MotionVae& model, const FitOptions& options = {});

/// Fits (z, beta) to unordered points (Chamfer), marker tracks and timestamps.
/// An observation at time t is compared with the decoded mesh at t, blended
/// linearly between the two neighbouring decoded frames. Throws
/// EmptyObservation when no frame carries points or markers.
FitResult complete(const SparseObservation& obs, const body::BodyModel& body, const vae::MotionVae& model,
                   const FitOptions& options = {});

/// Unweighted sum of the active task losses at a code and its gradient with
/// respect to [z; beta].
struct ObjectiveValue
{
    double loss = 0.0;
    Eigen::VectorXd grad;
};

ObjectiveValue prediction_loss(const motion::MotionSequence& prefix, const body::BodyModel& body,
                               const vae::MotionVae& model, const vae::LatentCode& code);
ObjectiveValue completion_loss(const SparseObservation& obs, const body::BodyModel& body,
                               const vae::MotionVae& model, const vae::LatentCode& code,
                               const FitOptions& options = {});

/// Decoded frame index for each observed time: nearest cumulative decoded time.
std::vector<int> associate_times(const vae::ChiVector& chi, const vae::ChiLayout& layout,
                                 const motion::NormalizationSpec& spec, const std::vector<double>& times);

} // namespace motionspace::fit
