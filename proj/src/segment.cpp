#include "motionspace/error.hpp"
#include "motionspace/motiondata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace motionspace::motion {

namespace {

// Rows of `channels` between frames first..last (inclusive) linearly
// resampled in time to `count` rows.
Eigen::MatrixXd resample_rows(const Eigen::MatrixXd& channels, const std::vector<double>& times,
                              int first, int last, int count)
{
    Eigen::MatrixXd out(count, channels.cols());
    const double t0 = times[first];
    const double t1 = times[last];
    int seg = first;
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? t0 : (k == count - 1 ? t1 : t0 + (t1 - t0) * k / (count - 1));
        while (seg + 1 < last && times[seg + 1] < t)
            ++seg;
        const int next = std::min(seg + 1, last);
        const double span = times[next] - times[seg];
        const double alpha = span > 0.0 ? std::clamp((t - times[seg]) / span, 0.0, 1.0) : 0.0;
        out.row(k) = (1.0 - alpha) * channels.row(seg) + alpha * channels.row(next);
    }
    return out;
}

struct Scanner
{
    Eigen::MatrixXd channels;
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> refs;
    std::map<std::pair<int, int>, double> cache;

    double distance(int first, int last)
    {
        const auto key = std::make_pair(first, last);
        if (auto it = cache.find(key); it != cache.end())
            return it->second;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& ref : refs) {
            const int m = static_cast<int>(ref.rows());
            const Eigen::MatrixXd window = resample_rows(channels, times, first, last, m);
            best = std::min(best, dtw_distance(window, ref) / m);
        }
        cache.emplace(key, best);
        return best;
    }
};

struct Window
{
    int first;
    int last;
    double distance;
};

int overlap(const Window& a, const Window& b)
{
    return std::max(0, std::min(a.last, b.last) - std::max(a.first, b.first));
}

bool by_distance(const Window& a, const Window& b)
{
    if (a.distance != b.distance)
        return a.distance < b.distance;
    return a.first < b.first;
}

} // namespace

double window_distance(const MotionSequence& long_seq, int first, int last, const MotionSequence& ref,
                       std::span<const int> hip_joints)
{
    if (first < 0 || last >= long_seq.num_frames() || last <= first)
        throw Error(ErrorCode::InvalidInput, "window lies outside the sequence");
    std::vector<double> times;
    for (const auto& f : long_seq.frames)
        times.push_back(f.time);
    const Eigen::MatrixXd ref_channels = joint_channels(ref, hip_joints);
    const int m = static_cast<int>(ref_channels.rows());
    const Eigen::MatrixXd window =
        resample_rows(joint_channels(long_seq, hip_joints), times, first, last, m);
    return dtw_distance(window, ref_channels) / m;
}

std::vector<Segment> segment_cycles(const MotionSequence& long_seq, std::span<const MotionSequence> refs,
                                    double threshold, const SegmentOptions& options)
{
    if (!(threshold > 0.0))
        throw Error(ErrorCode::InvalidConfig, "segmentation threshold must be positive");
    if (refs.empty())
        throw Error(ErrorCode::InvalidInput, "segmentation needs at least one reference cycle");
    if (options.start_stride < 1 || options.window_lengths < 1)
        throw Error(ErrorCode::InvalidConfig, "segmentation stride and window count must be positive");
    const int n = long_seq.num_frames();
    if (n < 2 || !(long_seq.duration() > 0.0))
        return {};

    Scanner scan;
    scan.channels = joint_channels(long_seq, options.hip_joints);
    for (const auto& f : long_seq.frames)
        scan.times.push_back(f.time);
    for (const auto& ref : refs) {
        if (ref.num_frames() < 2)
            throw Error(ErrorCode::TooShort, "reference cycles need at least two frames");
        scan.refs.push_back(joint_channels(ref, options.hip_joints));
    }

    const double dt = long_seq.duration() / (n - 1);
    const int L = options.window_lengths;
    const double ratio =
        L > 1 ? std::pow(options.max_seconds / options.min_seconds, 1.0 / (L - 1)) : 1.0;

    // Coarse scan over strided starts and log-spaced lengths.
    std::vector<Window> coarse;
    for (int li = 0; li < L; ++li) {
        const double seconds = options.min_seconds * std::pow(ratio, li);
        const int span = std::max(1, static_cast<int>(std::lround(seconds / dt)));
        for (int first = 0; first + span < n; first += options.start_stride) {
            const double d = scan.distance(first, first + span);
            if (d < threshold)
                coarse.push_back({first, first + span, d});
        }
    }
    std::sort(coarse.begin(), coarse.end(), by_distance);
    std::vector<Window> seeds;
    for (const Window& w : coarse) {
        bool ok = true;
        for (const Window& s : seeds) {
            const int shorter = std::min(w.last - w.first, s.last - s.first);
            if (overlap(w, s) > options.coarse_overlap * shorter) {
                ok = false;
                break;
            }
        }
        if (ok)
            seeds.push_back(w);
    }

    // Local refinement at frame resolution: alternate start and end searches.
    std::vector<Window> refined;
    for (Window w : seeds) {
        const int span = w.last - w.first;
        const int end_radius = std::max(options.start_stride,
                                        static_cast<int>(std::ceil(span * (ratio - 1.0) / 2.0)));
        for (int round = 0; round < options.refine_rounds; ++round) {
            const Window before = w;
            for (int first = std::max(0, w.first - options.start_stride);
                 first <= std::min(w.last - 1, w.first + options.start_stride); ++first) {
                const double d = scan.distance(first, w.last);
                if (d < w.distance)
                    w = {first, w.last, d};
            }
            for (int last = std::max(w.first + 1, w.last - end_radius);
                 last <= std::min(n - 1, w.last + end_radius); ++last) {
                const double d = scan.distance(w.first, last);
                if (d < w.distance)
                    w = {w.first, last, d};
            }
            const Window pinned = w;
            for (int shift = -options.start_stride; shift <= options.start_stride; ++shift) {
                const int first = pinned.first + shift, last = pinned.last + shift;
                if (shift == 0 || first < 0 || last > n - 1)
                    continue;
                const double d = scan.distance(first, last);
                if (d < w.distance)
                    w = {first, last, d};
            }
            if (w.first == before.first && w.last == before.last)
                break;
        }
        refined.push_back(w);
    }

    // Greedy non-overlapping selection (shared endpoints allowed), then pruning.
    std::sort(refined.begin(), refined.end(), by_distance);
    std::vector<Window> chosen;
    for (const Window& w : refined) {
        if (!(w.distance < threshold))
            continue;
        const bool clash = std::any_of(chosen.begin(), chosen.end(),
                                       [&](const Window& c) { return overlap(w, c) > 0; });
        if (!clash)
            chosen.push_back(w);
    }
    std::sort(chosen.begin(), chosen.end(),
              [](const Window& a, const Window& b) { return a.first < b.first; });

    std::vector<Segment> out;
    for (const Window& w : chosen) {
        const double seconds = scan.times[w.last] - scan.times[w.first];
        if (seconds < options.min_seconds || seconds > options.max_seconds)
            continue;
        Segment s;
        s.first_frame = w.first;
        s.last_frame = w.last;
        s.distance = w.distance;
        MotionSequence piece;
        piece.beta = long_seq.beta;
        piece.frame_rate_hint = long_seq.frame_rate_hint;
        piece.frames.assign(long_seq.frames.begin() + w.first, long_seq.frames.begin() + w.last + 1);
        s.sequence = align(piece);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace motionspace::motion
