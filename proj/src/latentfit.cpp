#include "motionspace/error.hpp"
#include "motionspace/latentfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace motionspace::fit {

using vae::ChiLayout;
using vae::ChiVector;

vae::LatentCode interpolate_code(const vae::LatentCode& a, const vae::LatentCode& b, double t)
{
    if (a.z.size() != b.z.size() || a.beta.size() != b.beta.size())
        throw Error(ErrorCode::ShapeMismatch, "latent codes have different dimensions");
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::InvalidInput, "interpolation parameter must lie in [0, 1]");
    if (t == 0.0)
        return a;
    if (t == 1.0)
        return b;
    return {(1.0 - t) * a.z + t * b.z, (1.0 - t) * a.beta + t * b.beta};
}

motion::MotionSequence decode_sequence(const vae::MotionVae& model, const vae::LatentCode& code)
{
    return motion::denormalize(model.decode(code), model.layout(), model.normalization, code.beta);
}

motion::MotionSequence interpolate(const vae::MotionVae& model, const vae::LatentCode& a,
                                   const vae::LatentCode& b, double t)
{
    return decode_sequence(model, interpolate_code(a, b, t));
}

std::vector<int> associate_times(const ChiVector& chi, const ChiLayout& layout,
                                 const motion::NormalizationSpec& spec, const std::vector<double>& times)
{
    std::vector<double> decoded(layout.frames, 0.0);
    for (int k = 1; k < layout.frames; ++k)
        decoded[k] = decoded[k - 1] + std::max(0.0, chi(layout.phi_offset(k))) * spec.max_frame_delta;
    std::vector<int> out;
    out.reserve(times.size());
    for (double t : times) {
        // First decoded time >= t, then the closer of it and its predecessor.
        const auto it = std::lower_bound(decoded.begin(), decoded.end(), t);
        int k = static_cast<int>(it - decoded.begin());
        if (k == layout.frames)
            k = layout.frames - 1;
        else if (k > 0 && t - decoded[k - 1] <= decoded[k] - t)
            k = k - 1;
        // Among equal decoded times (zero intervals) keep the earliest frame.
        while (k > 0 && decoded[k - 1] == decoded[k])
            --k;
        out.push_back(k);
    }
    return out;
}

namespace {

enum Task { kVertex, kDense, kMocap, kTime, kTaskCount };

struct Target
{
    double time = 0.0;
    int frame = -1; // fixed decoded frame; -1 associates by time
    std::optional<body::VertexMatrix> mesh; // with vertex correspondence
    PointSet points;
    std::optional<PointSet> markers;
};

struct Evaluation
{
    std::vector<double> loss;         // per active task
    std::vector<ChiVector> chi_grad;  // per active task, d loss / d chi_hat
    std::vector<Eigen::VectorXd> beta_grad; // per active task, direct d loss / d beta
};

class Objective
{
public:
    Objective(const body::BodyModel& body, const vae::MotionVae& model, std::vector<Target> targets,
              const std::vector<int>& marker_ids, std::vector<Task> tasks)
        : body_(body), model_(model), targets_(std::move(targets)), marker_ids_(marker_ids),
          tasks_(std::move(tasks))
    {
    }

    int task_count() const { return static_cast<int>(tasks_.size()); }

    Evaluation evaluate(const ChiVector& chi, const Eigen::VectorXd& beta) const
    {
        const ChiLayout layout = model_.layout();
        const auto& spec = model_.normalization;
        const int N = layout.frames;
        const double delta = spec.max_frame_delta;
        std::vector<double> decoded(N, 0.0);
        for (int k = 1; k < N; ++k)
            decoded[k] = decoded[k - 1] + std::max(0.0, chi(layout.phi_offset(k))) * delta;
        auto phi_active = [&](int m) { return chi(layout.phi_offset(m)) > 0.0; };

        Evaluation ev;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            ev.loss.push_back(0.0);
            ev.chi_grad.push_back(ChiVector::Zero(layout.size()));
            ev.beta_grad.push_back(Eigen::VectorXd::Zero(beta.size()));
        }
        auto slot = [&](Task t) {
            const auto it = std::find(tasks_.begin(), tasks_.end(), t);
            return it == tasks_.end() ? -1 : static_cast<int>(it - tasks_.begin());
        };
        const int s_vertex = slot(kVertex), s_dense = slot(kDense), s_mocap = slot(kMocap),
                  s_time = slot(kTime);

        // Frame counts for the per-task means.
        int n_mesh = 0, n_dense = 0, n_markers = 0;
        for (const auto& t : targets_) {
            n_mesh += t.mesh ? 1 : 0;
            n_dense += t.points.rows() > 0 ? 1 : 0;
            n_markers += t.markers ? 1 : 0;
        }
        const double V = body_.num_vertices();

        std::vector<std::vector<rot::Rot6>> theta(N);
        std::vector<Eigen::Vector3d> gamma(N);
        std::vector<std::optional<body::VertexMatrix>> meshes(N);
        auto mesh_at = [&](int k) -> const body::VertexMatrix& {
            if (!meshes[k]) {
                theta[k].resize(layout.joints);
                for (int j = 0; j < layout.joints; ++j)
                    theta[k][j] = rot::uncenter(chi.segment<6>(layout.theta_offset(k, j)));
                gamma[k] = chi.segment<3>(layout.gamma_offset(k)).cwiseProduct(spec.translation_bound);
                meshes[k] = body::pose_mesh(body_, beta, theta[k], gamma[k], body::Projection::Clamped);
            }
            return *meshes[k];
        };
        // Vertex gradients per task and decoded frame, pulled back once at the end.
        std::vector<std::vector<std::optional<body::VertexMatrix>>> upstream(
            tasks_.size(), std::vector<std::optional<body::VertexMatrix>>(N));
        auto add_upstream = [&](int s, int k, const body::VertexMatrix& g) {
            if (!upstream[s][k])
                upstream[s][k] = body::VertexMatrix::Zero(g.rows(), 3);
            *upstream[s][k] += g;
        };

        for (const Target& tg : targets_) {
            const bool want_mesh = s_vertex >= 0 && tg.mesh;
            const bool want_dense = s_dense >= 0 && tg.points.rows() > 0;
            const bool want_markers = s_mocap >= 0 && tg.markers;
            if (!want_mesh && !want_dense && !want_markers)
                continue;

            // The observation sits at decoded frame k, blended with k + 1 by w
            // when it falls between two decoded timestamps.
            int k = tg.frame;
            double w = 0.0, span = 0.0;
            if (k < 0) {
                if (tg.time >= decoded[N - 1]) {
                    k = N - 1;
                } else {
                    k = static_cast<int>(std::upper_bound(decoded.begin(), decoded.end(), tg.time) -
                                         decoded.begin()) - 1;
                    k = std::max(k, 0);
                    span = decoded[k + 1] - decoded[k];
                    w = std::clamp((tg.time - decoded[k]) / span, 0.0, 1.0);
                }
            }
            body::VertexMatrix mesh = mesh_at(k);
            if (w > 0.0)
                mesh = (1.0 - w) * mesh + w * mesh_at(k + 1);

            auto accumulate = [&](int s, const body::VertexMatrix& g) {
                add_upstream(s, k, (1.0 - w) * g);
                if (w <= 0.0)
                    return;
                add_upstream(s, k + 1, w * g);
                // d w / d phi_m is -delta / span for m <= k and -w delta / span for m = k + 1.
                const double dl_dw = (g.array() * (mesh_at(k + 1) - mesh_at(k)).array()).sum();
                for (int m = 1; m <= k; ++m)
                    if (phi_active(m))
                        ev.chi_grad[s](layout.phi_offset(m)) -= dl_dw * delta / span;
                if (phi_active(k + 1))
                    ev.chi_grad[s](layout.phi_offset(k + 1)) -= dl_dw * w * delta / span;
            };

            if (want_mesh) {
                const body::VertexMatrix diff = mesh - *tg.mesh;
                const double scale = 1.0 / (n_mesh * V);
                ev.loss[s_vertex] += scale * diff.squaredNorm();
                accumulate(s_vertex, (2.0 * scale) * diff);
            }
            if (want_dense) {
                PointSet g;
                ev.loss[s_dense] += chamfer(mesh, tg.points, &g) / n_dense;
                accumulate(s_dense, g / n_dense);
            }
            if (want_markers) {
                body::VertexMatrix g = body::VertexMatrix::Zero(mesh.rows(), 3);
                const double scale = 1.0 / (static_cast<double>(n_markers) * marker_ids_.size());
                for (std::size_t m = 0; m < marker_ids_.size(); ++m) {
                    const Eigen::RowVector3d d = mesh.row(marker_ids_[m]) - tg.markers->row(m);
                    ev.loss[s_mocap] += scale * d.squaredNorm();
                    g.row(marker_ids_[m]) += 2.0 * scale * d;
                }
                accumulate(s_mocap, g);
            }
        }

        for (std::size_t s = 0; s < tasks_.size(); ++s) {
            for (int k = 0; k < N; ++k) {
                if (!upstream[s][k])
                    continue;
                const body::PoseGradient g = body::pose_mesh_vjp(body_, beta, theta[k], gamma[k], *upstream[s][k],
                                                                 body::Projection::Clamped);
                for (int j = 0; j < layout.joints; ++j)
                    ev.chi_grad[s].segment<6>(layout.theta_offset(k, j)) += g.theta.row(j).transpose();
                ev.chi_grad[s].segment<3>(layout.gamma_offset(k)) += g.gamma.cwiseProduct(spec.translation_bound);
                ev.beta_grad[s] += g.beta;
            }
        }

        if (s_time >= 0) {
            // Fixed-frame targets: decoded gaps between consecutive observations
            // (plus the lead-in before the first one) against the observed
            // intervals. Time-associated targets: the decoded sequence must
            // reach every observed timestamp.
            const double count = static_cast<double>(targets_.size());
            int previous = -1;
            double previous_time = 0.0;
            for (const Target& tg : targets_) {
                if (tg.frame >= 0) {
                    const int from = previous < 0 ? 0 : previous;
                    const int to = std::max(tg.frame, from);
                    double gap = 0.0;
                    for (int m = from + 1; m <= to; ++m)
                        gap += chi(layout.phi_offset(m));
                    const double r = gap - (tg.time - previous_time) / delta;
                    ev.loss[s_time] += r * r / count;
                    for (int m = from + 1; m <= to; ++m)
                        ev.chi_grad[s_time](layout.phi_offset(m)) += 2.0 * r / count;
                    previous = to;
                    previous_time = tg.time;
                } else {
                    const double r = std::max(0.0, tg.time - decoded[N - 1]) / delta;
                    if (r <= 0.0)
                        continue;
                    ev.loss[s_time] += r * r / count;
                    for (int m = 1; m < N; ++m)
                        if (phi_active(m))
                            ev.chi_grad[s_time](layout.phi_offset(m)) -= 2.0 * r / count;
                }
            }
        }
        return ev;
    }

private:
    const body::BodyModel& body_;
    const vae::MotionVae& model_;
    std::vector<Target> targets_;
    std::vector<int> marker_ids_;
    std::vector<Task> tasks_;
};

struct Run
{
    Eigen::VectorXd x;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

// One Adam descent from x0 with best-so-far tracking.
Run descend(const Objective& objective, const vae::MotionVae& model, const FitOptions& options,
            double prior, const Eigen::VectorXd& x0)
{
    const int B = model.arch().betas;
    const int dz = model.arch().dim_z;
    grad::ParamStore store;
    const int latent = store.add("latent", x0);
    grad::OptState opt = grad::make_opt_state(store, options.lr);

    std::vector<double> weights(objective.task_count(), 1.0);
    std::vector<double> initial;

    double best_loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x0;
    std::vector<double> best_history;

    int it = 0;
    bool stalled = false;
    for (;; ++it) {
        const Eigen::VectorXd x = store.at(latent).value.col(0);
        const Eigen::VectorXd beta = x.tail(B);
        const grad::Tape tape = grad::mlp_forward(model.params(), model.decoder(), x);
        const ChiVector chi = tape.output.col(0);
        const Evaluation ev = objective.evaluate(chi, beta);

        const Eigen::VectorXd z = x.head(dz);
        double total = prior * z.squaredNorm() / dz;
        for (double l : ev.loss)
            total += l;
        if (!std::isfinite(total))
            throw Error(ErrorCode::NonFiniteGradient, "fit objective became non-finite");
        if (total < best_loss) {
            best_loss = total;
            best_x = x;
        }
        best_history.push_back(best_loss);

        // Stalled when the best value improved by less than the relative
        // threshold over the last `patience` iterations.
        if (it >= options.patience) {
            const double before = best_history[it - options.patience];
            if (before - best_loss <= options.min_rel_improvement * std::abs(before)) {
                stalled = true;
                break;
            }
        }
        if (it >= options.iterations)
            break;

        auto task_grad = [&](int t) {
            Eigen::VectorXd g = grad::mlp_input_grad(model.params(), model.decoder(), tape, ev.chi_grad[t]);
            g.tail(B) += ev.beta_grad[t];
            return g;
        };
        if (it % options.weight_update_every == 0 && objective.task_count() > 1) {
            std::vector<double> norms;
            for (int t = 0; t < objective.task_count(); ++t)
                norms.push_back(task_grad(t).norm());
            vae::update_adaptive_weights(weights, ev.loss, initial, norms, options.weight_lr);
        }
        ChiVector upstream = ChiVector::Zero(chi.size());
        Eigen::VectorXd direct = Eigen::VectorXd::Zero(B);
        for (int t = 0; t < objective.task_count(); ++t) {
            upstream += weights[t] * ev.chi_grad[t];
            direct += weights[t] * ev.beta_grad[t];
        }
        Eigen::VectorXd g = grad::mlp_input_grad(model.params(), model.decoder(), tape, upstream);
        g.tail(B) += direct;
        g.head(dz) += (2.0 * prior / dz) * z;
        store.at(latent).grad.col(0) = g;
        grad::adam_step(store, opt);
    }

    return {best_x, best_loss, it, stalled, std::move(best_history)};
}

FitResult run_fit(const Objective& objective, const vae::MotionVae& model, const FitOptions& options,
                  double prior)
{
    if (options.iterations < 0 || !(options.lr > 0.0) || options.patience < 1 ||
        options.weight_update_every < 1 || options.restarts < 0 || !(options.restart_sigma >= 0.0) ||
        !(prior >= 0.0))
        throw Error(ErrorCode::InvalidConfig, "fit options must be positive");
    const int dz = model.arch().dim_z;
    const int B = model.arch().betas;

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dz + B);
    if (options.init) {
        if (options.init->z.size() != dz || options.init->beta.size() != B)
            throw Error(ErrorCode::ShapeMismatch, "initial latent code does not match the model");
        x0 << options.init->z, options.init->beta;
    }

    // Extra starts draw z from the prior with beta at the first start's value;
    // the run with the lowest loss wins, earlier runs on ties.
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, options.restart_sigma);
    FitResult out;
    out.loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x0;
    for (int r = 0; r <= options.restarts; ++r) {
        Eigen::VectorXd start = x0;
        if (r > 0)
            for (int i = 0; i < dz; ++i)
                start(i) = normal(rng);
        Run run = descend(objective, model, options, prior, start);
        out.iterations += run.iterations;
        for (double h : run.history)
            out.history.push_back(std::min(h, out.loss));
        if (run.loss < out.loss) {
            out.loss = run.loss;
            out.converged = run.converged;
            best_x = run.x;
        }
    }
    out.code = {best_x.head(dz), best_x.tail(B)};
    out.chi = model.decode(out.code);
    out.sequence = motion::denormalize(out.chi, model.layout(), model.normalization, out.code.beta);
    return out;
}

} // namespace

namespace {

Objective prediction_objective(const motion::MotionSequence& prefix, const body::BodyModel& body,
                               const vae::MotionVae& model)
{
    if (prefix.num_frames() < 1)
        throw Error(ErrorCode::EmptyInput, "prediction needs at least one observed frame");
    if (prefix.num_frames() > model.arch().frames)
        throw Error(ErrorCode::InvalidInput, "prefix is longer than the decoded sequence");
    if (prefix.num_joints() != body.num_joints() || prefix.beta.size() != body.num_betas())
        throw Error(ErrorCode::ShapeMismatch, "prefix does not match the body");
    const body::ShapedBody shaped = body::shape(body, prefix.beta);
    std::vector<Target> targets;
    for (int k = 0; k < prefix.num_frames(); ++k) {
        const auto& f = prefix.frames[k];
        if (k > 0 && !(f.time > prefix.frames[k - 1].time))
            throw Error(ErrorCode::InvalidInput, "prefix timestamps must be strictly increasing");
        Target t;
        t.time = f.time - prefix.frames[0].time;
        t.frame = k;
        t.mesh = body::pose_mesh(body, shaped, f.theta, f.gamma);
        targets.push_back(std::move(t));
    }
    return Objective(body, model, std::move(targets), {}, {kVertex, kTime});
}

Objective completion_objective(const SparseObservation& obs, const body::BodyModel& body,
                               const vae::MotionVae& model, const FitOptions& options)
{
    obs.validate();
    bool any_points = false, any_markers = false;
    for (const auto& f : obs.frames) {
        any_points |= f.points.rows() > 0;
        any_markers |= f.markers.has_value();
    }
    const bool dense = any_points && options.use_dense;
    const bool mocap = any_markers && options.use_markers;
    if (!dense && !mocap)
        throw Error(ErrorCode::EmptyObservation, "observation has no usable points or markers");
    if (mocap) {
        if (static_cast<int>(obs.marker_vertex_ids.size()) != body::kMarkerCount)
            throw Error(ErrorCode::InvalidInput, "marker observations need 16 marker vertex ids");
        for (int id : obs.marker_vertex_ids)
            if (id < 0 || id >= body.num_vertices())
                throw Error(ErrorCode::InvalidInput, "marker vertex id out of range");
    }

    std::vector<Target> targets;
    for (const auto& f : obs.frames) {
        Target t;
        t.time = f.time;
        if (dense)
            t.points = f.points;
        if (mocap)
            t.markers = f.markers;
        targets.push_back(std::move(t));
    }
    std::vector<Task> tasks;
    if (dense)
        tasks.push_back(kDense);
    if (mocap)
        tasks.push_back(kMocap);
    tasks.push_back(kTime);
    return Objective(body, model, std::move(targets), obs.marker_vertex_ids, tasks);
}

ObjectiveValue evaluate_at(const Objective& objective, const vae::MotionVae& model, const vae::LatentCode& code)
{
    if (code.z.size() != model.arch().dim_z || code.beta.size() != model.arch().betas)
        throw Error(ErrorCode::ShapeMismatch, "latent code does not match the model");
    Eigen::VectorXd x(code.z.size() + code.beta.size());
    x << code.z, code.beta;
    const grad::Tape tape = grad::mlp_forward(model.params(), model.decoder(), x);
    const Evaluation ev = objective.evaluate(tape.output.col(0), code.beta);
    ObjectiveValue out;
    ChiVector upstream = ChiVector::Zero(tape.output.rows());
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(code.beta.size());
    for (int t = 0; t < objective.task_count(); ++t) {
        out.loss += ev.loss[t];
        upstream += ev.chi_grad[t];
        direct += ev.beta_grad[t];
    }
    out.grad = grad::mlp_input_grad(model.params(), model.decoder(), tape, upstream);
    out.grad.tail(code.beta.size()) += direct;
    return out;
}

} // namespace

FitResult predict(const motion::MotionSequence& prefix, const body::BodyModel& body, const vae::MotionVae& model,
                  const FitOptions& options)
{
    return run_fit(prediction_objective(prefix, body, model), model, options, options.prediction_prior);
}

FitResult complete(const SparseObservation& obs, const body::BodyModel& body, const vae::MotionVae& model,
                   const FitOptions& options)
{
    return run_fit(completion_objective(obs, body, model, options), model, options, options.completion_prior);
}

ObjectiveValue prediction_loss(const motion::MotionSequence& prefix, const body::BodyModel& body,
                               const vae::MotionVae& model, const vae::LatentCode& code)
{
    return evaluate_at(prediction_objective(prefix, body, model), model, code);
}

ObjectiveValue completion_loss(const SparseObservation& obs, const body::BodyModel& body,
                               const vae::MotionVae& model, const vae::LatentCode& code, const FitOptions& options)
{
    return evaluate_at(completion_objective(obs, body, model, options), model, code);
}

} // namespace motionspace::fit
