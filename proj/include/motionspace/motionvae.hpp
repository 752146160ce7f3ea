#pragma once

#include "motionspace/body.hpp"
#include "motionspace/gradcore.hpp"
#include "motionspace/motiondata.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace motionspace::vae {

using motion::ChiLayout;
using motion::ChiVector;
using motion::NormalizationSpec;

struct LatentCode
{
    Eigen::VectorXd z;
    Eigen::VectorXd beta;
};

struct PhaseConfig
{
    int epochs = 0;
    double lr = 0.0;
    int batch = 1;
};

struct Architecture
{
    int frames = 100;
    int joints = 20;
    int betas = 8;
    int dim_z = 64;
    std::vector<int> encoder_hidden{1024, 512, 256};
    std::vector<int> decoder_hidden{256, 512, 1024};

    ChiLayout layout() const { return {frames, joints}; }
    int chi_size() const { return layout().size(); }
    void validate() const;
    bool operator==(const Architecture&) const = default;
};

struct TrainConfig
{
    Architecture arch;
    double omega_kl = 0.01;
    bool squared_kl = false;
    PhaseConfig phase1{5000, 1e-3, 256};
    PhaseConfig phase2{200, 1e-4, 16};
    int weight_update_every = 10;
    double weight_lr = 0.025;
    std::uint64_t seed = 1;

    /// J=8, V=200 bodies, N=32, dim_z=16, 300 + 30 epochs.
    static TrainConfig desk();
    static TrainConfig paper();
    void validate() const;
};

/// Encoder (chi -> mu, log-variance) and decoder ([z; beta] -> chi) MLPs with
/// the normalization the model was trained with.
class MotionVae
{
public:
    MotionVae() = default;
    MotionVae(const Architecture& arch, std::uint64_t seed);

    const Architecture& arch() const { return arch_; }
    ChiLayout layout() const { return arch_.layout(); }

    grad::ParamStore& params() { return params_; }
    const grad::ParamStore& params() const { return params_; }
    const grad::Mlp& encoder() const { return encoder_; }
    const grad::Mlp& decoder() const { return decoder_; }

    NormalizationSpec normalization;

    struct Posterior
    {
        Eigen::VectorXd mu;
        Eigen::VectorXd sigma;
    };

    Posterior encode(const ChiVector& chi) const;
    ChiVector decode(const LatentCode& code) const;
    /// Batched forms; columns are sequences.
    Eigen::MatrixXd decode_batch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& beta) const;

private:
    Architecture arch_;
    grad::ParamStore params_;
    grad::Mlp encoder_;
    grad::Mlp decoder_;
};

inline constexpr double kSigmaFloor = 1e-12;

/// z = mu + eps * max(sigma, kSigmaFloor).
Eigen::VectorXd sample_latent(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                              const Eigen::VectorXd& eps);

struct RecLoss
{
    double pose = 0.0;
    double trans = 0.0;
    double time = 0.0;
};

/// Mean squared difference over each block of chi.
RecLoss loss_rec(const ChiVector& chi, const ChiVector& chi_hat, const ChiLayout& layout);

/// Gradient with respect to chi_hat of w_pose L_pose + w_trans L_trans + w_time L_time.
ChiVector loss_rec_grad(const ChiVector& chi, const ChiVector& chi_hat, const ChiLayout& layout,
                        double w_pose, double w_trans, double w_time);

/// 0.5 * sum(mu^2 + sigma^2 - 1 - 2 ln sigma) with sigma = exp(logvar / 2).
double loss_kl(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar);
/// Gradients of loss_kl with respect to mu and logvar.
void loss_kl_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar, Eigen::VectorXd& g_mu,
                  Eigen::VectorXd& g_logvar);

/// Mean over frames and vertices of the squared distance between the meshes of
/// chi and chi_hat posed with the same beta. chi_hat is posed with clamped
/// projection; when grad is given it receives d loss / d chi_hat.
double loss_spatial(const body::BodyModel& body, const Eigen::VectorXd& beta, const ChiVector& chi,
                    const ChiVector& chi_hat, const ChiLayout& layout, const NormalizationSpec& spec,
                    ChiVector* grad = nullptr);

/// Same, against meshes already posed from the target.
double loss_spatial(const body::BodyModel& body, const Eigen::VectorXd& beta,
                    const std::vector<body::VertexMatrix>& target, const ChiVector& chi_hat,
                    const ChiLayout& layout, const NormalizationSpec& spec, ChiVector* grad = nullptr);

/// Meshes of every frame of chi.
std::vector<body::VertexMatrix> pose_chi(const body::BodyModel& body, const Eigen::VectorXd& beta,
                                         const ChiVector& chi, const ChiLayout& layout,
                                         const NormalizationSpec& spec,
                                         body::Projection mode = body::Projection::Clamped);

inline constexpr double kWeightFloor = 1e-4;

/// Loss weights balanced by gradient norms (asymmetry 1). Phase 1 balances
/// pose/trans/time (sum 3); phase 2 balances spatial/time (sum 2).
struct AdaptiveWeights
{
    double omega_pose = 1.0;
    double omega_trans = 1.0;
    double omega_time = 1.0;
    double omega_spatial = 1.0;
    std::vector<double> initial_losses; // per active task, recorded at the first update
};

/// One balancing step on the active weights. grad_norms are the norms of the
/// unweighted task gradients at the shared layer; the targets are
/// mean(w_i * norm_i) * r_i with r_i the task's loss ratio relative to the
/// mean ratio. Weights move by lr times the gradient of sum |w_i norm_i - target_i|,
/// are floored at kWeightFloor and rescaled to sum to the task count.
void update_adaptive_weights(std::vector<double>& weights, const std::vector<double>& losses,
                             std::vector<double>& initial_losses, const std::vector<double>& grad_norms,
                             double lr);

struct CurveRow
{
    int phase = 1;
    int epoch = 0;
    long step = 0;
    double loss = 0.0;
    double pose = 0.0;
    double trans = 0.0;
    double time = 0.0;
    double spatial = 0.0;
    double kl = 0.0;
    double omega_pose = 1.0;
    double omega_trans = 1.0;
    double omega_time = 1.0;
    double omega_spatial = 1.0;
};

struct TrainingRecord
{
    std::vector<CurveRow> curve; // one row per epoch
};

struct Dataset
{
    std::vector<ChiVector> chi;
    std::vector<Eigen::VectorXd> beta;

    int size() const { return static_cast<int>(chi.size()); }
};

Dataset make_dataset(std::span<const motion::MotionSequence> sequences, const NormalizationSpec& spec,
                     int frames);

struct TrainResult
{
    MotionVae phase1;
    MotionVae model;
    TrainingRecord record;
};

using ProgressFn = std::function<void(const CurveRow&)>;

/// Two-phase training: reconstruction + KL, then spatial + time + KL.
TrainResult train(const Dataset& data, const body::BodyModel& body, const NormalizationSpec& spec,
                  const TrainConfig& config, const ProgressFn& progress = {});

void write_curve_csv(const TrainingRecord& record, const std::filesystem::path& path);

void save_checkpoint(const MotionVae& model, const TrainingRecord& record,
                     const std::filesystem::path& path);
struct Checkpoint
{
    MotionVae model;
    TrainingRecord record;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace motionspace::vae
