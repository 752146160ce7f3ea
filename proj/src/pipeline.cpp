#include "motionspace/pipeline.hpp"

#include "motionspace/error.hpp"

#include <algorithm>
#include <numeric>

namespace motionspace::pipeline {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer over the combined value
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Corpus make_corpus(const vae::Architecture& arch, const CorpusOptions& options, std::uint64_t seed)
{
    arch.validate();
    if (options.train_count < 1 || options.test_count < 0)
        throw Error(ErrorCode::InvalidConfig, "corpus needs at least one training sequence");
    Corpus c;
    c.body = body::make_synthetic_body(arch.joints, options.vertices, arch.betas, derive_seed(seed, 0));
    c.train = motion::synth_dataset(c.body, options.train_count, arch.frames, derive_seed(seed, 1));
    c.spec = motion::fit_normalization(c.train, arch.frames);

    const auto candidates =
        motion::synth_dataset(c.body, 2 * options.test_count, arch.frames, derive_seed(seed, 2));
    for (const auto& s : candidates) {
        if (static_cast<int>(c.test.size()) == options.test_count)
            break;
        try {
            motion::normalize(s, c.spec);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OutOfBounds)
                throw;
            continue;
        }
        c.test.push_back(s);
    }
    if (static_cast<int>(c.test.size()) < options.test_count)
        throw Error(ErrorCode::OutOfBounds, "too few test cycles inside the training bounds");
    return c;
}

LongSequence make_long_sequence(const body::BodyModel& body, int cycles, double fps, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto style = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? motion::GaitStyle::Walk
                                                                           : motion::GaitStyle::Run;
    motion::GaitParams p = motion::sample_gait_params(style, rng);
    // Cycles start on the left foot, the event the reference cycles start on.
    p.phase = std::uniform_real_distribution<double>(-0.02, 0.02)(rng);
    LongSequence out;
    out.sequence = motion::synth_gait_cycles(p, body, cycles, fps, rng());
    const int per_cycle = (out.sequence.num_frames() - 1) / cycles;
    for (int k = 0; k <= cycles; ++k)
        out.boundaries.push_back(k * per_cycle);
    return out;
}

std::vector<motion::MotionSequence> make_reference_cycles(const body::BodyModel& body, double fps,
                                                          std::uint64_t seed)
{
    std::vector<motion::MotionSequence> refs;
    std::mt19937_64 rng(seed);
    for (auto style : {motion::GaitStyle::Walk, motion::GaitStyle::Run}) {
        motion::GaitParams p;
        p.style = style;
        p.speed = style == motion::GaitStyle::Walk ? 1.25 : 3.0;
        p.cadence = style == motion::GaitStyle::Walk ? 0.95 : 1.4;
        p.arm_swing = style == motion::GaitStyle::Walk ? 0.35 : 0.45;
        refs.push_back(motion::synth_gait_cycles(p, body, 1, fps, rng()));
    }
    return refs;
}

GaitPair make_slow_fast_pair(const body::BodyModel& body, int frames, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    motion::GaitParams slow;
    slow.style = motion::GaitStyle::Walk;
    slow.speed = 1.0;
    slow.cadence = 0.85;
    slow.arm_swing = 0.3;
    GaitPair pair;
    pair.slow = motion::align(motion::synth_gait(slow, body, frames, rng()));

    motion::GaitParams fast;
    fast.style = motion::GaitStyle::Run;
    fast.speed = 3.0;
    fast.cadence = 1.45;
    fast.arm_swing = 0.45;
    fast.beta = pair.slow.beta;
    pair.fast = motion::align(motion::synth_gait(fast, body, frames, rng()));
    return pair;
}

fit::SparseObservation make_observation(const motion::MotionSequence& seq, const body::BodyModel& body,
                                        const ObservationOptions& options, std::uint64_t seed)
{
    std::vector<int> frames = options.frames;
    if (frames.empty()) {
        frames.resize(seq.num_frames());
        std::iota(frames.begin(), frames.end(), 0);
    }
    const int V = body.num_vertices();
    if (options.points_per_frame > V)
        throw Error(ErrorCode::InvalidConfig, "more points per frame than mesh vertices");

    std::mt19937_64 rng(seed);
    const body::ShapedBody shaped = body::shape(body, seq.beta);
    fit::SparseObservation obs;
    if (options.markers)
        obs.marker_vertex_ids = body::default_marker_vertices(body);
    std::vector<int> all(V);
    std::iota(all.begin(), all.end(), 0);
    for (int k : frames) {
        if (k < 0 || k >= seq.num_frames())
            throw Error(ErrorCode::InvalidInput, "observed frame index out of range");
        const auto& f = seq.frames[k];
        const body::VertexMatrix mesh = body::pose_mesh(body, shaped, f.theta, f.gamma);
        fit::ObservedFrame o;
        o.time = f.time;
        if (options.points_per_frame == 0) {
            o.points = mesh;
        } else if (options.points_per_frame > 0) {
            std::vector<int> ids = all;
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(options.points_per_frame);
            std::sort(ids.begin(), ids.end());
            o.points.resize(options.points_per_frame, 3);
            for (int i = 0; i < options.points_per_frame; ++i)
                o.points.row(i) = mesh.row(ids[i]);
        }
        if (options.markers) {
            fit::PointSet m(body::kMarkerCount, 3);
            for (int i = 0; i < body::kMarkerCount; ++i)
                m.row(i) = mesh.row(obs.marker_vertex_ids[i]);
            o.markers = std::move(m);
        }
        obs.frames.push_back(std::move(o));
    }
    return obs;
}

motion::MotionSequence prefix(const motion::MotionSequence& seq, int count)
{
    if (count < 1 || count > seq.num_frames())
        throw Error(ErrorCode::InvalidInput, "prefix length out of range");
    motion::MotionSequence out = seq;
    out.frames.resize(count);
    return out;
}

double mean_chamfer(const motion::MotionSequence& a, const motion::MotionSequence& b,
                    const body::BodyModel& body)
{
    if (a.num_frames() != b.num_frames() || a.num_frames() == 0)
        throw Error(ErrorCode::ShapeMismatch, "sequences must have the same, non-zero frame count");
    const body::ShapedBody sa = body::shape(body, a.beta);
    const body::ShapedBody sb = body::shape(body, b.beta);
    double sum = 0.0;
    for (int k = 0; k < a.num_frames(); ++k) {
        const auto& fa = a.frames[k];
        const auto& fb = b.frames[k];
        sum += fit::chamfer(body::pose_mesh(body, sa, fa.theta, fa.gamma, body::Projection::Clamped),
                            body::pose_mesh(body, sb, fb.theta, fb.gamma, body::Projection::Clamped));
    }
    return sum / a.num_frames();
}

vae::LatentCode encode_sequence(const vae::MotionVae& model, const motion::MotionSequence& seq)
{
    const motion::MotionSequence s = seq.num_frames() == model.arch().frames
                                         ? seq
                                         : motion::resample(seq, model.arch().frames);
    return {model.encode(motion::normalize(s, model.normalization)).mu, seq.beta};
}

} // namespace motionspace::pipeline
