#pragma once

#include "motionspace/body.hpp"
#include "motionspace/latentfit.hpp"
#include "motionspace/motiondata.hpp"
#include "motionspace/motionvae.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace motionspace::pipeline {

/// Synthetic body, training and test gait cycles and the normalization fitted
/// on the training cycles. Every test cycle lies inside the normalization
/// bounds.
struct Corpus
{
    body::BodyModel body;
    std::vector<motion::MotionSequence> train;
    std::vector<motion::MotionSequence> test;
    motion::NormalizationSpec spec;
};

struct CorpusOptions
{
    int vertices = 200;
    int train_count = 512;
    int test_count = 64;
};

Corpus make_corpus(const vae::Architecture& arch, const CorpusOptions& options, std::uint64_t seed);

/// Seeds of the individual generators derived from one global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// `cycles` repetitions of one random walk or run starting on the left foot,
/// with the frame index of every cycle boundary (including 0 and the last
/// frame).
struct LongSequence
{
    motion::MotionSequence sequence;
    std::vector<int> boundaries;
};

LongSequence make_long_sequence(const body::BodyModel& body, int cycles, double fps, std::uint64_t seed);

/// Reference cycles for segmentation: a walk and a run starting on the left foot.
std::vector<motion::MotionSequence> make_reference_cycles(const body::BodyModel& body, double fps,
                                                          std::uint64_t seed);

/// A slow walk and a fast run of the same subject with `frames` frames each.
struct GaitPair
{
    motion::MotionSequence slow;
    motion::MotionSequence fast;
};

GaitPair make_slow_fast_pair(const body::BodyModel& body, int frames, std::uint64_t seed);

struct ObservationOptions
{
    std::vector<int> frames;   // observed frame indices; empty: all
    int points_per_frame = 0;  // vertices drawn without replacement; 0: all, -1: none
    bool markers = false;
};

/// Points sampled from the posed meshes of `seq`, timestamps taken from its frames.
fit::SparseObservation make_observation(const motion::MotionSequence& seq, const body::BodyModel& body,
                                        const ObservationOptions& options, std::uint64_t seed);

/// First `count` frames of a sequence.
motion::MotionSequence prefix(const motion::MotionSequence& seq, int count);

/// Mean over frames of the symmetric Chamfer distance between the meshes of
/// two sequences with equal frame counts.
double mean_chamfer(const motion::MotionSequence& a, const motion::MotionSequence& b,
                    const body::BodyModel& body);

/// Posterior-mean code of a sequence under the model, with its own beta.
vae::LatentCode encode_sequence(const vae::MotionVae& model, const motion::MotionSequence& seq);

} // namespace motionspace::pipeline
