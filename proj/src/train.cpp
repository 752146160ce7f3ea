#include "motionspace/error.hpp"
#include "motionspace/motionvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace motionspace::vae {

namespace {

struct BatchStats
{
    double loss = 0.0;
    RecLoss rec;
    double spatial = 0.0;
    double kl = 0.0;
};

class Trainer
{
public:
    Trainer(MotionVae& model, const Dataset& data, const body::BodyModel& body, const TrainConfig& config)
        : model_(model), data_(data), body_(body), config_(config), rng_(config.seed ^ 0x5bd1e995ULL)
    {
    }

    void run_phase(int phase, const PhaseConfig& pc, TrainingRecord& record, const ProgressFn& progress)
    {
        grad::OptState opt = grad::make_opt_state(model_.params(), pc.lr);
        std::vector<double> weights(phase == 1 ? 3 : 2, 1.0);
        std::vector<double> initial;
        std::vector<int> order(data_.size());
        std::iota(order.begin(), order.end(), 0);

        for (int epoch = 1; epoch <= pc.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng_);
            BatchStats sum;
            int batches = 0;
            for (int start = 0; start < data_.size(); start += pc.batch) {
                const int count = std::min(pc.batch, data_.size() - start);
                const std::vector<int> idx(order.begin() + start, order.begin() + start + count);
                const bool balance = step_ % config_.weight_update_every == 0;
                const BatchStats s = step(phase, idx, weights, initial, balance);
                grad::adam_step(model_.params(), opt);
                ++step_;
                sum.loss += s.loss;
                sum.rec.pose += s.rec.pose;
                sum.rec.trans += s.rec.trans;
                sum.rec.time += s.rec.time;
                sum.spatial += s.spatial;
                sum.kl += s.kl;
                ++batches;
            }
            CurveRow row;
            row.phase = phase;
            row.epoch = epoch;
            row.step = step_;
            row.loss = sum.loss / batches;
            row.pose = sum.rec.pose / batches;
            row.trans = sum.rec.trans / batches;
            row.time = sum.rec.time / batches;
            row.spatial = sum.spatial / batches;
            row.kl = sum.kl / batches;
            if (phase == 1) {
                row.omega_pose = weights[0];
                row.omega_trans = weights[1];
                row.omega_time = weights[2];
            } else {
                row.omega_spatial = weights[0];
                row.omega_time = weights[1];
            }
            record.curve.push_back(row);
            if (progress)
                progress(row);
        }
    }

private:
    BatchStats step(int phase, const std::vector<int>& idx, std::vector<double>& weights,
                    std::vector<double>& initial, bool balance)
    {
        const Architecture& arch = model_.arch();
        const ChiLayout layout = arch.layout();
        const int b = static_cast<int>(idx.size());
        const int dz = arch.dim_z;

        Eigen::MatrixXd X(arch.chi_size(), b);
        Eigen::MatrixXd beta(arch.betas, b);
        for (int e = 0; e < b; ++e) {
            X.col(e) = data_.chi[idx[e]];
            beta.col(e) = data_.beta[idx[e]];
        }

        const grad::Tape enc = grad::mlp_forward(model_.params(), model_.encoder(), X);
        const Eigen::MatrixXd mu = enc.output.topRows(dz);
        const Eigen::MatrixXd logvar = enc.output.bottomRows(dz);
        const Eigen::MatrixXd sigma = (0.5 * logvar.array()).exp();
        Eigen::MatrixXd eps(dz, b);
        for (int e = 0; e < b; ++e)
            for (int i = 0; i < dz; ++i)
                eps(i, e) = normal_(rng_);
        Eigen::MatrixXd input(dz + arch.betas, b);
        input << mu + eps.cwiseProduct(sigma.cwiseMax(kSigmaFloor)), beta;
        const grad::Tape dec = grad::mlp_forward(model_.params(), model_.decoder(), input);
        const Eigen::MatrixXd& chi_hat = dec.output;

        // Per-task upstream gradients of the batch-mean losses, unweighted.
        const int tasks = phase == 1 ? 3 : 2;
        std::vector<Eigen::MatrixXd> task_grad(tasks, Eigen::MatrixXd(arch.chi_size(), b));
        std::vector<double> task_loss(tasks, 0.0);
        BatchStats stats;
        for (int e = 0; e < b; ++e) {
            const ChiVector& chi = data_.chi[idx[e]];
            const ChiVector pred = chi_hat.col(e);
            const RecLoss rec = loss_rec(chi, pred, layout);
            stats.rec.pose += rec.pose / b;
            stats.rec.trans += rec.trans / b;
            stats.rec.time += rec.time / b;
            if (phase == 1) {
                task_grad[0].col(e) = loss_rec_grad(chi, pred, layout, 1.0, 0.0, 0.0) / b;
                task_grad[1].col(e) = loss_rec_grad(chi, pred, layout, 0.0, 1.0, 0.0) / b;
                task_grad[2].col(e) = loss_rec_grad(chi, pred, layout, 0.0, 0.0, 1.0) / b;
            } else {
                ChiVector g;
                stats.spatial +=
                    loss_spatial(body_, data_.beta[idx[e]], chi, pred, layout, model_.normalization, &g) / b;
                task_grad[0].col(e) = g / b;
                task_grad[1].col(e) = loss_rec_grad(chi, pred, layout, 0.0, 0.0, 1.0) / b;
            }
        }
        if (phase == 1)
            task_loss = {stats.rec.pose, stats.rec.trans, stats.rec.time};
        else
            task_loss = {stats.spatial, stats.rec.time};

        if (balance) {
            const int shared = model_.decoder().layers() - 2;
            std::vector<double> norms(tasks);
            for (int t = 0; t < tasks; ++t)
                norms[t] = grad::layer_weight_grad(model_.params(), model_.decoder(), dec, task_grad[t],
                                                   std::max(shared, 0))
                               .norm();
            update_adaptive_weights(weights, task_loss, initial, norms, config_.weight_lr);
        }

        Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(arch.chi_size(), b);
        for (int t = 0; t < tasks; ++t) {
            upstream += weights[t] * task_grad[t];
            stats.loss += weights[t] * task_loss[t];
        }

        // KL term, batch mean.
        Eigen::MatrixXd g_mu(dz, b), g_logvar(dz, b);
        for (int e = 0; e < b; ++e) {
            const double kl = loss_kl(mu.col(e), logvar.col(e));
            Eigen::VectorXd gm, gl;
            loss_kl_grad(mu.col(e), logvar.col(e), gm, gl);
            const double factor = config_.squared_kl ? 2.0 * kl : 1.0;
            stats.kl += (config_.squared_kl ? kl * kl : kl) / b;
            g_mu.col(e) = config_.omega_kl * factor / b * gm;
            g_logvar.col(e) = config_.omega_kl * factor / b * gl;
        }
        stats.loss += config_.omega_kl * stats.kl;

        const Eigen::MatrixXd g_in = grad::mlp_backward(model_.params(), model_.decoder(), dec, upstream);
        const Eigen::MatrixXd g_z = g_in.topRows(dz);
        Eigen::MatrixXd g_enc(2 * dz, b);
        g_enc.topRows(dz) = g_mu + g_z;
        g_enc.bottomRows(dz) = g_logvar + 0.5 * g_z.cwiseProduct(eps).cwiseProduct(sigma);
        grad::mlp_backward(model_.params(), model_.encoder(), enc, g_enc);
        return stats;
    }

    MotionVae& model_;
    const Dataset& data_;
    const body::BodyModel& body_;
    const TrainConfig& config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    long step_ = 0;
};

} // namespace

TrainResult train(const Dataset& data, const body::BodyModel& body, const NormalizationSpec& spec,
                  const TrainConfig& config, const ProgressFn& progress)
{
    config.validate();
    spec.validate();
    const Architecture& arch = config.arch;
    if (data.size() == 0)
        throw Error(ErrorCode::EmptyInput, "training set is empty");
    if (body.num_joints() != arch.joints || body.num_betas() != arch.betas)
        throw Error(ErrorCode::ShapeMismatch, "body does not match the architecture's joint/beta counts");
    for (int i = 0; i < data.size(); ++i)
        if (data.chi[i].size() != arch.chi_size() || data.beta[i].size() != arch.betas)
            throw Error(ErrorCode::ShapeMismatch,
                        "training element " + std::to_string(i) + " does not match the architecture");

    TrainResult result;
    result.model = MotionVae(arch, config.seed);
    result.model.normalization = spec;
    Trainer trainer(result.model, data, body, config);
    trainer.run_phase(1, config.phase1, result.record, progress);
    result.phase1 = result.model;
    trainer.run_phase(2, config.phase2, result.record, progress);
    return result;
}

void write_curve_csv(const TrainingRecord& record, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.precision(10);
    out << "phase,epoch,step,loss,pose,trans,time,spatial,kl,omega_pose,omega_trans,omega_time,"
           "omega_spatial\n";
    for (const auto& r : record.curve)
        out << r.phase << ',' << r.epoch << ',' << r.step << ',' << r.loss << ',' << r.pose << ','
            << r.trans << ',' << r.time << ',' << r.spatial << ',' << r.kl << ',' << r.omega_pose << ','
            << r.omega_trans << ',' << r.omega_time << ',' << r.omega_spatial << '\n';
}

} // namespace motionspace::vae
