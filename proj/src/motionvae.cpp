#include "motionspace/motionvae.hpp"

#include "motionspace/error.hpp"

#include <algorithm>
#include <cmath>

namespace motionspace::vae {

void Architecture::validate() const
{
    auto positive = [](const std::vector<int>& w) {
        return std::all_of(w.begin(), w.end(), [](int x) { return x > 0; });
    };
    if (frames < 2 || joints < 1 || betas < 1 || dim_z < 1 || !positive(encoder_hidden) ||
        !positive(decoder_hidden))
        throw Error(ErrorCode::InvalidConfig, "architecture sizes must be positive (frames >= 2)");
}

TrainConfig TrainConfig::desk()
{
    TrainConfig c;
    c.arch.frames = 32;
    c.arch.joints = 8;
    c.arch.betas = 8;
    c.arch.dim_z = 16;
    c.arch.encoder_hidden = {256, 64};
    c.arch.decoder_hidden = {64, 256};
    c.omega_kl = 3e-5;
    c.phase1 = {300, 1e-3, 16};
    c.phase2 = {30, 1e-4, 16};
    return c;
}

TrainConfig TrainConfig::paper()
{
    return TrainConfig{};
}

void TrainConfig::validate() const
{
    arch.validate();
    if (!(omega_kl >= 0.0) || phase1.epochs < 0 || phase2.epochs < 0 || !(phase1.lr > 0.0) ||
        !(phase2.lr > 0.0) || phase1.batch < 1 || phase2.batch < 1 || weight_update_every < 1 ||
        !(weight_lr >= 0.0))
        throw Error(ErrorCode::InvalidConfig, "training hyperparameters must be positive");
}

MotionVae::MotionVae(const Architecture& arch, std::uint64_t seed) : arch_(arch)
{
    arch_.validate();
    std::mt19937_64 rng(seed);
    std::vector<int> enc{arch_.chi_size()};
    enc.insert(enc.end(), arch_.encoder_hidden.begin(), arch_.encoder_hidden.end());
    enc.push_back(2 * arch_.dim_z);
    std::vector<int> dec{arch_.dim_z + arch_.betas};
    dec.insert(dec.end(), arch_.decoder_hidden.begin(), arch_.decoder_hidden.end());
    dec.push_back(arch_.chi_size());
    encoder_ = grad::make_mlp(params_, "encoder", enc, rng);
    decoder_ = grad::make_mlp(params_, "decoder", dec, rng);
}

MotionVae::Posterior MotionVae::encode(const ChiVector& chi) const
{
    if (chi.size() != arch_.chi_size())
        throw Error(ErrorCode::ShapeMismatch, "motion vector length does not match the model");
    const grad::Tape tape = grad::mlp_forward(params_, encoder_, chi);
    const int dz = arch_.dim_z;
    return {tape.output.col(0).head(dz), (0.5 * tape.output.col(0).tail(dz).array()).exp()};
}

ChiVector MotionVae::decode(const LatentCode& code) const
{
    if (code.z.size() != arch_.dim_z || code.beta.size() != arch_.betas)
        throw Error(ErrorCode::ShapeMismatch, "latent code dimensions do not match the model");
    return decode_batch(code.z, code.beta).col(0);
}

Eigen::MatrixXd MotionVae::decode_batch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& beta) const
{
    if (z.rows() != arch_.dim_z || beta.rows() != arch_.betas || z.cols() != beta.cols())
        throw Error(ErrorCode::ShapeMismatch, "latent code dimensions do not match the model");
    Eigen::MatrixXd input(arch_.dim_z + arch_.betas, z.cols());
    input << z, beta;
    return grad::mlp_forward(params_, decoder_, input).output;
}

Eigen::VectorXd sample_latent(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                              const Eigen::VectorXd& eps)
{
    if (mu.size() != sigma.size() || mu.size() != eps.size())
        throw Error(ErrorCode::ShapeMismatch, "mu, sigma and eps must have the same length");
    return mu + eps.cwiseProduct(sigma.cwiseMax(kSigmaFloor));
}

Dataset make_dataset(std::span<const motion::MotionSequence> sequences, const NormalizationSpec& spec,
                     int frames)
{
    Dataset d;
    for (const auto& seq : sequences) {
        const motion::MotionSequence& uniform =
            seq.num_frames() == frames ? seq : motion::resample(seq, frames);
        d.chi.push_back(motion::normalize(uniform, spec));
        d.beta.push_back(seq.beta);
    }
    return d;
}

} // namespace motionspace::vae
