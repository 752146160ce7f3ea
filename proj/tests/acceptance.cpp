#include "motionspace/evalkit.hpp"
#include "motionspace/gradcore.hpp"
#include "motionspace/latentfit.hpp"
#include "motionspace/pipeline.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace motionspace;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& run, double limit_seconds)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = run();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_seconds > 0.0 && secs >= limit_seconds) {
        o.pass = false;
        o.detail += "; runtime over " + std::to_string(limit_seconds) + " s";
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / v.size();
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, int n, double sigma = 1.0)
{
    std::normal_distribution<double> d(0.0, sigma);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = d(rng);
    return v;
}

rot::Mat3 random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

rot::Rot6 random_rot6(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    rot::Rot6 r = rot::extract(random_rotation(rng)) + gaussian(rng, 6, 0.2);
    r.head<3>() *= scale(rng);
    r.tail<3>() *= scale(rng);
    return r;
}

// ---------------------------------------------------------------- criterion 1

Outcome rotation_suite()
{
    std::mt19937_64 rng(101);
    double round_trip = 0.0, ortho = 0.0, det = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const rot::Mat3 R = random_rotation(rng);
        round_trip = std::max(round_trip, (rot::project(rot::extract(R)) - R).cwiseAbs().maxCoeff());
        const rot::Mat3 P = rot::project(random_rot6(rng));
        ortho = std::max(ortho, (P.transpose() * P - rot::Mat3::Identity()).cwiseAbs().maxCoeff());
        det = std::max(det, std::abs(P.determinant() - 1.0));
    }
    return {round_trip < 1e-6 && ortho < 1e-6 && det < 1e-6,
            fmt("max round-trip %.2e, max |RtR-I| %.2e, max |det-1| %.2e", round_trip, ortho, det)};
}

// ---------------------------------------------------------------- criterion 2

struct GradTally
{
    std::string name;
    int points = 0;
    double worst = 0.0;
    bool ok = true;

    void add(const grad::FdReport& r)
    {
        ++points;
        worst = std::max(worst, r.max_rel_error);
        ok = ok && r.passed;
    }
};

Outcome gradient_suite()
{
    constexpr int kPoints = 20;
    constexpr double kTol = 1e-4;
    std::mt19937_64 rng(202);
    std::vector<GradTally> tallies;

    {
        GradTally t{"mlp"};
        grad::ParamStore store;
        const grad::Mlp net = grad::make_mlp(store, "m", {6, 9, 7, 4}, rng);
        for (int i = 0; i < kPoints; ++i) {
            const Eigen::MatrixXd x = gaussian(rng, 6);
            const Eigen::MatrixXd u = gaussian(rng, 4);
            const Eigen::VectorXd p0 = store.values();
            store.zero_grad();
            const auto tape = grad::mlp_forward(store, net, x);
            const Eigen::MatrixXd gx = grad::mlp_backward(store, net, tape, u);
            Eigen::VectorXd analytic(p0.size() + 6);
            analytic << store.grads(), gx.reshaped();
            Eigen::VectorXd point(p0.size() + 6);
            point << p0, x.reshaped();
            auto f = [&](const Eigen::VectorXd& v) {
                store.set_values(v.head(p0.size()));
                const double out = (grad::mlp_forward(store, net, v.tail(6)).output.array() * u.array()).sum();
                store.set_values(p0);
                return out;
            };
            t.add(grad::finite_diff_check(f, point, analytic, 1e-5, kTol));
        }
        tallies.push_back(t);
    }

    const body::BodyModel body = body::make_synthetic_body(8, 60, 4, 3);
    const int J = body.num_joints(), B = body.num_betas();
    {
        GradTally t{"pose_mesh"};
        for (int i = 0; i < kPoints; ++i) {
            Eigen::VectorXd x(B + 6 * J + 3);
            x.head(B) = gaussian(rng, B);
            for (int j = 0; j < J; ++j)
                x.segment(B + 6 * j, 6) = random_rot6(rng);
            x.tail(3) = gaussian(rng, 3);
            const body::VertexMatrix U = gaussian(rng, 3 * body.num_vertices()).reshaped(body.num_vertices(), 3);
            auto theta_of = [&](const Eigen::VectorXd& v) {
                std::vector<rot::Rot6> th(J);
                for (int j = 0; j < J; ++j)
                    th[j] = v.segment(B + 6 * j, 6);
                return th;
            };
            auto f = [&](const Eigen::VectorXd& v) {
                const Eigen::Vector3d g = v.tail(3);
                return (U.array() * body::pose_mesh(body, v.head(B), theta_of(v), g).array()).sum();
            };
            const Eigen::Vector3d g = x.tail(3);
            const auto pg = body::pose_mesh_vjp(body, x.head(B), theta_of(x), g, U);
            Eigen::VectorXd analytic(x.size());
            analytic.head(B) = pg.beta;
            for (int j = 0; j < J; ++j)
                analytic.segment(B + 6 * j, 6) = pg.theta.row(j).transpose();
            analytic.tail(3) = pg.gamma;
            t.add(grad::finite_diff_check(f, x, analytic, 1e-5, kTol));
        }
        tallies.push_back(t);
    }
    {
        GradTally t{"project"};
        for (int i = 0; i < kPoints; ++i) {
            const rot::Rot6 r = random_rot6(rng);
            const rot::Mat3 U = gaussian(rng, 9).reshaped(3, 3);
            auto f = [&](const Eigen::VectorXd& v) {
                return (U.array() * rot::project(rot::Rot6(v)).array()).sum();
            };
            t.add(grad::finite_diff_check(f, r, rot::project_vjp(r, U), 1e-6, kTol));
        }
        tallies.push_back(t);
    }
    {
        GradTally t{"chamfer"};
        for (int i = 0; i < kPoints; ++i) {
            const fit::PointSet A = gaussian(rng, 3 * 15).reshaped(15, 3);
            const fit::PointSet Bset = gaussian(rng, 3 * 11).reshaped(11, 3);
            fit::PointSet g;
            fit::chamfer(A, Bset, &g);
            auto f = [&](const Eigen::VectorXd& v) {
                const fit::PointSet a = v.reshaped(15, 3);
                return fit::chamfer(a, Bset);
            };
            const Eigen::MatrixXd Am = A, gm = g;
            t.add(grad::finite_diff_check(f, Am.reshaped(), gm.reshaped(), 1e-6, kTol));
        }
        tallies.push_back(t);
    }
    {
        GradTally t{"loss_kl"};
        for (int i = 0; i < kPoints; ++i) {
            const int d = 5;
            const Eigen::VectorXd x = gaussian(rng, 2 * d);
            Eigen::VectorXd gm, gl;
            vae::loss_kl_grad(x.head(d), x.tail(d), gm, gl);
            Eigen::VectorXd analytic(2 * d);
            analytic << gm, gl;
            auto f = [&](const Eigen::VectorXd& v) { return vae::loss_kl(v.head(d), v.tail(d)); };
            t.add(grad::finite_diff_check(f, x, analytic, 1e-6, kTol));
        }
        tallies.push_back(t);
    }
    const motion::ChiLayout layout{4, J};
    {
        GradTally t{"loss_rec"};
        for (int i = 0; i < kPoints; ++i) {
            const vae::ChiVector chi = gaussian(rng, layout.size());
            const vae::ChiVector hat = gaussian(rng, layout.size());
            const Eigen::Vector3d w = gaussian(rng, 3).cwiseAbs();
            auto f = [&](const Eigen::VectorXd& v) {
                const auto l = vae::loss_rec(chi, v, layout);
                return w(0) * l.pose + w(1) * l.trans + w(2) * l.time;
            };
            // Quadratic in v, so central differences carry no truncation error at any step.
            t.add(grad::finite_diff_check(f, hat, vae::loss_rec_grad(chi, hat, layout, w(0), w(1), w(2)), 1e-4,
                                          kTol));
        }
        tallies.push_back(t);
    }
    {
        GradTally t{"loss_spatial"};
        const auto seqs = motion::synth_dataset(body, 8, 4, 5);
        const auto spec = motion::fit_normalization(seqs, 4);
        for (int i = 0; i < kPoints; ++i) {
            const auto& s = seqs[i % seqs.size()];
            const vae::ChiVector chi = motion::normalize(s, spec);
            const vae::ChiVector hat = chi + gaussian(rng, chi.size(), 0.05);
            vae::ChiVector g;
            vae::loss_spatial(body, s.beta, chi, hat, layout, spec, &g);
            auto f = [&](const Eigen::VectorXd& v) { return vae::loss_spatial(body, s.beta, chi, v, layout, spec); };
            t.add(grad::finite_diff_check(f, hat, g, 1e-6, kTol));
        }
        tallies.push_back(t);
    }

    bool ok = true;
    std::string detail;
    for (const auto& t : tallies) {
        ok = ok && t.ok && t.points >= kPoints;
        detail += fmt("%s%s %d pts max rel %.1e", detail.empty() ? "" : "; ", t.name.c_str(), t.points, t.worst);
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- criterion 3

double dtw_enumerate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const Eigen::Index n = a.rows(), m = b.rows();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::Index, Eigen::Index, double)> walk = [&](Eigen::Index i, Eigen::Index j, double acc) {
        acc = acc + (a.row(i) - b.row(j)).norm();
        if (i == n - 1 && j == m - 1) {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < n)
            walk(i + 1, j, acc);
        if (j + 1 < m)
            walk(i, j + 1, acc);
        if (i + 1 < n && j + 1 < m)
            walk(i + 1, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return best;
}

Outcome dtw_oracle()
{
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> len(1, 6), width(1, 6);
    int mismatches = 0, self_nonzero = 0;
    for (int i = 0; i < 200; ++i) {
        const int k = width(rng);
        const int na = len(rng), nb = len(rng);
        const Eigen::MatrixXd a = gaussian(rng, na * k).reshaped(na, k);
        const Eigen::MatrixXd b = gaussian(rng, nb * k).reshaped(nb, k);
        mismatches += motion::dtw_distance(a, b) != dtw_enumerate(a, b);
        self_nonzero += motion::dtw_distance(a, a) != 0.0;
    }
    return {mismatches == 0 && self_nonzero == 0,
            fmt("%d/200 mismatches against path enumeration, %d nonzero self distances", mismatches, self_nonzero)};
}

// ---------------------------------------------------------------- criterion 4

Outcome segmentation(const body::BodyModel& body)
{
    const auto refs = pipeline::make_reference_cycles(body, 30.0, pipeline::derive_seed(1, 3));
    int near = 0, total = 0, outside = 0, segments = 0;
    for (int i = 0; i < 50; ++i) {
        const auto ls = pipeline::make_long_sequence(body, 3, 30.0, pipeline::derive_seed(1, 1000 + i));
        const auto segs = motion::segment_cycles(ls.sequence, refs, 0.2);
        segments += static_cast<int>(segs.size());
        std::vector<int> found;
        for (const auto& s : segs) {
            const double secs = ls.sequence.frames[s.last_frame].time - ls.sequence.frames[s.first_frame].time;
            outside += secs < motion::kMinCycleSeconds || secs > motion::kMaxCycleSeconds;
            found.push_back(s.first_frame);
            found.push_back(s.last_frame);
        }
        std::sort(found.begin(), found.end());
        found.erase(std::unique(found.begin(), found.end()), found.end());
        for (int f : found) {
            bool hit = false;
            for (int b : ls.boundaries)
                hit = hit || std::abs(f - b) <= 2;
            near += hit;
            ++total;
        }
    }
    const double frac = total ? static_cast<double>(near) / total : 0.0;
    return {total > 0 && frac >= 0.9 && outside == 0,
            fmt("%d segments, %d/%d boundaries within 2 frames (%.1f%%), %d outside [0.3, 3.0] s", segments, near,
                total, 100.0 * frac, outside)};
}

// ---------------------------------------------------------------- criterion 5

Outcome kl_values()
{
    const double a = vae::loss_kl(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4));
    const double b = vae::loss_kl(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
    // sigma = e means log-variance 2.
    const double c = vae::loss_kl(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0));
    const double ec = 0.5 * (std::exp(2.0) - 3.0);
    return {std::abs(a) < 1e-9 && std::abs(b - 0.5) < 1e-9 && std::abs(c - ec) < 1e-9,
            fmt("KL(0,1) = %.3g, KL(1,1) = %.12f, KL(0,e) = %.12f (expected %.12f)", a, b, c, ec)};
}

// ------------------------------------------------------------- criteria 6-10

struct Trained
{
    pipeline::Corpus corpus;
    vae::TrainConfig config;
    vae::TrainResult result;
    vae::Dataset train;
    vae::Dataset test;
};

Outcome desk_training(Trained& t)
{
    const auto& curve = t.result.record.curve;
    const double first = curve.front().loss;
    const double end = curve[t.config.phase1.epochs - 1].loss;
    const double e1 = mean(eval::vae_reconstruction_error(t.result.phase1, t.test, t.corpus.body));
    const double e2 = mean(eval::vae_reconstruction_error(t.result.model, t.test, t.corpus.body));
    return {end < 0.2 * first && e2 <= e1,
            fmt("phase-1 loss %.4g -> %.4g (%.2f%% of epoch 1); held-out error phase 1 %.5f m, phase 2 %.5f m", first,
                end, 100.0 * end / first, e1, e2)};
}

Outcome baseline(const Trained& t)
{
    const int d = t.config.arch.dim_z + t.config.arch.betas;
    const auto pca = eval::pca_fit(eval::stack_rows(t.train), d);
    const double e_pca = mean(eval::pca_baseline_error(pca, t.test, t.corpus.body, t.corpus.spec, t.config.arch.layout()));
    const double e_vae = mean(eval::vae_reconstruction_error(t.result.model, t.test, t.corpus.body));
    return {e_vae <= e_pca, fmt("held-out mean vertex error VAE %.5f m, PCA(d=%d) %.5f m", e_vae, d, e_pca)};
}

bool same_sequence(const motion::MotionSequence& a, const motion::MotionSequence& b)
{
    if (a.num_frames() != b.num_frames() || a.beta != b.beta)
        return false;
    for (int k = 0; k < a.num_frames(); ++k) {
        if (a.frames[k].time != b.frames[k].time || a.frames[k].gamma != b.frames[k].gamma ||
            a.frames[k].theta != b.frames[k].theta)
            return false;
    }
    return true;
}

Outcome interpolation(const Trained& t)
{
    const auto& body = t.corpus.body;
    const auto& model = t.result.model;
    const auto pair = pipeline::make_slow_fast_pair(body, t.config.arch.frames, 5);
    const auto a = pipeline::encode_sequence(model, pair.slow);
    const auto b = pipeline::encode_sequence(model, pair.fast);
    std::vector<double> dur;
    std::string list;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        dur.push_back(fit::interpolate(model, a, b, s).duration());
        list += fmt(" %.4f", dur.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < dur.size(); ++i)
        monotone = monotone && dur[i] < dur[i - 1];
    const bool ends = same_sequence(fit::interpolate(model, a, b, 0.0), fit::decode_sequence(model, a)) &&
                      same_sequence(fit::interpolate(model, a, b, 1.0), fit::decode_sequence(model, b));
    return {monotone && ends, fmt("true durations %.3f/%.3f s, decoded:%s s; strictly monotone %s, endpoints exact %s",
                                  pair.slow.duration(), pair.fast.duration(), list.c_str(), monotone ? "yes" : "no",
                                  ends ? "yes" : "no")};
}

Outcome prediction(const Trained& t)
{
    const auto& body = t.corpus.body;
    const int observed = static_cast<int>(std::lround(0.25 * t.config.arch.frames));
    std::vector<double> ep, ea;
    for (int i = 0; i < 50; ++i) {
        const auto& s = t.corpus.test[i];
        ep.push_back(eval::mean_vertex_error(s, fit::predict(pipeline::prefix(s, observed), body, t.result.model).sequence, body));
        ea.push_back(eval::mean_vertex_error(s, fit::predict(s, body, t.result.model).sequence, body));
    }
    const double p = mean(ep), a = mean(ea);
    return {p <= 2.0 * a, fmt("50 sequences, %d/%d frames observed: %.5f m, all frames: %.5f m, ratio %.3f", observed,
                              t.config.arch.frames, p, a, p / a)};
}

Outcome completion(const Trained& t)
{
    const auto& body = t.corpus.body;
    const auto& model = t.result.model;
    const int n = t.config.arch.frames;
    std::vector<int> twenty;
    for (int k = 0; k < 20; ++k)
        twenty.push_back(k * (n - 1) / 19);
    std::vector<double> c_all, c_50, c_20, c_markers;
    fit::FitOptions markers_only;
    markers_only.use_dense = false;
    for (int i = 0; i < 10; ++i) {
        const auto& s = t.corpus.test[i];
        const std::uint64_t seed = pipeline::derive_seed(1, 500 + i);
        auto run = [&](const pipeline::ObservationOptions& o, const fit::FitOptions& f = {}) {
            return pipeline::mean_chamfer(s, fit::complete(pipeline::make_observation(s, body, o, seed), body, model, f).sequence, body);
        };
        c_all.push_back(run({}));
        c_50.push_back(run({{}, 50}));
        c_20.push_back(run({twenty, 0}));
        c_markers.push_back(run({{}, -1, true}, markers_only));
    }
    const double all = mean(c_all), m50 = mean(c_50), f20 = mean(c_20), mk = mean(c_markers);
    bool finite = std::isfinite(mk);
    return {m50 <= 2.0 * all && f20 <= 1.2 * all && finite,
            fmt("10 sequences, Chamfer all %.3e, 50 pts %.3e (%.2fx), 20 frames %.3e (%.2fx), markers only %.3e",
                all, m50, m50 / all, f20, f20 / all, mk)};
}

// --------------------------------------------------------------- criterion 11

Outcome reparameterization()
{
    Eigen::VectorXd mu(4), sigma(4);
    mu << 1.0, -2.0, 0.5, 3.0;
    sigma << 0.5, 1.0, 0.2, 1.5;
    std::mt19937_64 rng(1111);
    constexpr int kDraws = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(4), sq = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < kDraws; ++i) {
        const Eigen::VectorXd z = vae::sample_latent(mu, sigma, gaussian(rng, 4));
        sum += z;
        sq += z.cwiseProduct(z);
    }
    const Eigen::VectorXd m = sum / kDraws;
    const Eigen::VectorXd var = sq / kDraws - m.cwiseProduct(m);
    const double mean_err = ((m - mu).cwiseQuotient(mu)).cwiseAbs().maxCoeff();
    const double var_err = ((var - sigma.cwiseAbs2()).cwiseQuotient(sigma.cwiseAbs2())).cwiseAbs().maxCoeff();
    return {mean_err < 0.02 && var_err < 0.02,
            fmt("1e5 draws: max relative mean error %.3f%%, variance error %.3f%%", 100 * mean_err, 100 * var_err)};
}

// --------------------------------------------------------------- criterion 12

const char* kTinyConfig = R"(body.vertices = 60
data.train_count = 24
data.test_count = 4
data.long_count = 2
data.obs_frames = 4
data.obs_points = 20
train.arch.frames = 16
train.arch.betas = 4
train.arch.dim_z = 4
train.arch.encoder_hidden = 32
train.arch.decoder_hidden = 32
train.phase1.epochs = 4
train.phase1.batch = 8
train.phase2.epochs = 1
train.phase2.batch = 8
fit.iterations = 15
eval.latent_dims = 3
eval.omega_kl =
eval.predict_count = 2
)";

const std::vector<std::string> kCommands = {
    "gen-body --out body",
    "gen-data --out data",
    "segment --out seg --long data/long.mseq --refs data/refs.mseq",
    "train --out train --body data/body.json --train data/train.mseq",
    "encode --out enc --model train/model.ckpt --data data/test.mseq",
    "decode --out dec --model train/model.ckpt --latents enc/latents.csv",
    "interpolate --out interp --model train/model.ckpt --body data/body.json --a enc/latents.csv:0 "
    "--b enc/latents.csv:1 --steps 3",
    "predict --out pred --model train/model.ckpt --body data/body.json --data data/test.mseq --index 1",
    "complete --out comp --model train/model.ckpt --body data/body.json --obs data/test.sobs",
    "eval --out eval --model train/model.ckpt --body data/body.json --train data/train.mseq --test data/test.mseq",
    "export-obj --out obj --body data/body.json --data data/test.mseq --index 0",
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / "motionspace_acceptance_determinism";
    fs::remove_all(root);
    for (const char* run : {"run1", "run2"}) {
        fs::create_directories(root / run);
        std::ofstream(root / run / "tiny.cfg") << kTinyConfig;
        for (const auto& c : kCommands) {
            const std::string cmd = "cd '" + (root / run).string() + "' && '" + MOTIONSPACE_CLI + "' " + c +
                                    " --config tiny.cfg --seed 7 --threads 1 >/dev/null 2>cli.err";
            if (std::system(cmd.c_str()) != 0)
                return {false, "command failed: " + c + ": " + slurp(root / run / "cli.err")};
        }
    }
    int files = 0, differing = 0;
    std::string first_diff;
    for (const auto& e : fs::recursive_directory_iterator(root / "run1")) {
        if (!e.is_regular_file())
            continue;
        const fs::path rel = fs::relative(e.path(), root / "run1");
        ++files;
        const fs::path other = root / "run2" / rel;
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
            ++differing;
            if (first_diff.empty())
                first_diff = rel.string();
        }
    }
    return {files > 0 && differing == 0,
            fmt("%zu commands, %d files compared, %d differ%s%s", kCommands.size(), files, differing,
                first_diff.empty() ? "" : ", first: ", first_diff.c_str())};
}

} // namespace

int main()
{
    std::printf("acceptance: 12 criteria\n");
    report(1, rotation_suite, 5.0);
    report(2, gradient_suite, 120.0);
    report(3, dtw_oracle, 10.0);

    Trained t;
    t.config = vae::TrainConfig::desk();
    t.corpus = pipeline::make_corpus(t.config.arch, {}, 1);
    t.train = vae::make_dataset(t.corpus.train, t.corpus.spec, t.config.arch.frames);
    t.test = vae::make_dataset(t.corpus.test, t.corpus.spec, t.config.arch.frames);

    report(4, [&] { return segmentation(t.corpus.body); }, 60.0);
    report(5, kl_values, 0.0);
    report(6, [&] {
        t.result = vae::train(t.train, t.corpus.body, t.corpus.spec, t.config);
        return desk_training(t);
    }, 600.0);
    report(7, [&] { return baseline(t); }, 0.0);
    report(8, [&] { return interpolation(t); }, 0.0);
    report(9, [&] { return prediction(t); }, 300.0);
    report(10, [&] { return completion(t); }, 600.0);
    report(11, reparameterization, 0.0);
    report(12, determinism, 0.0);

    std::printf("acceptance: %d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
