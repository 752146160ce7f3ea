#include "motionspace/error.hpp"
#include "motionspace/motionvae.hpp"

#include <cmath>
#include <numeric>

namespace motionspace::vae {

namespace {

void check_pair(const ChiVector& chi, const ChiVector& chi_hat, const ChiLayout& layout)
{
    if (chi.size() != layout.size() || chi_hat.size() != layout.size())
        throw Error(ErrorCode::ShapeMismatch, "motion vectors do not match the layout");
}

} // namespace

RecLoss loss_rec(const ChiVector& chi, const ChiVector& chi_hat, const ChiLayout& layout)
{
    check_pair(chi, chi_hat, layout);
    RecLoss out;
    const int pose_width = 6 * layout.joints;
    for (int k = 0; k < layout.frames; ++k) {
        const int base = k * layout.frame_width();
        out.pose += (chi.segment(base, pose_width) - chi_hat.segment(base, pose_width)).squaredNorm();
        out.trans += (chi.segment<3>(layout.gamma_offset(k)) - chi_hat.segment<3>(layout.gamma_offset(k)))
                         .squaredNorm();
        const double d = chi(layout.phi_offset(k)) - chi_hat(layout.phi_offset(k));
        out.time += d * d;
    }
    out.pose /= static_cast<double>(layout.frames) * pose_width;
    out.trans /= 3.0 * layout.frames;
    out.time /= layout.frames;
    return out;
}

ChiVector loss_rec_grad(const ChiVector& chi, const ChiVector& chi_hat, const ChiLayout& layout,
                        double w_pose, double w_trans, double w_time)
{
    check_pair(chi, chi_hat, layout);
    const int pose_width = 6 * layout.joints;
    const double s_pose = 2.0 * w_pose / (static_cast<double>(layout.frames) * pose_width);
    const double s_trans = 2.0 * w_trans / (3.0 * layout.frames);
    const double s_time = 2.0 * w_time / layout.frames;
    ChiVector g = chi_hat - chi;
    for (int k = 0; k < layout.frames; ++k) {
        g.segment(k * layout.frame_width(), pose_width) *= s_pose;
        g.segment<3>(layout.gamma_offset(k)) *= s_trans;
        g(layout.phi_offset(k)) *= s_time;
    }
    return g;
}

double loss_kl(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar)
{
    if (mu.size() != logvar.size())
        throw Error(ErrorCode::ShapeMismatch, "mu and logvar lengths differ");
    // 2 ln sigma = logvar
    return 0.5 * (mu.squaredNorm() + (logvar.array().exp() - 1.0 - logvar.array()).sum());
}

void loss_kl_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar, Eigen::VectorXd& g_mu,
                  Eigen::VectorXd& g_logvar)
{
    if (mu.size() != logvar.size())
        throw Error(ErrorCode::ShapeMismatch, "mu and logvar lengths differ");
    g_mu = mu;
    g_logvar = 0.5 * (logvar.array().exp() - 1.0);
}

std::vector<body::VertexMatrix> pose_chi(const body::BodyModel& body, const Eigen::VectorXd& beta,
                                         const ChiVector& chi, const ChiLayout& layout,
                                         const NormalizationSpec& spec, body::Projection mode)
{
    if (chi.size() != layout.size() || layout.joints != body.num_joints())
        throw Error(ErrorCode::ShapeMismatch, "motion vector does not match the body or layout");
    const body::ShapedBody shaped = body::shape(body, beta);
    std::vector<body::VertexMatrix> meshes;
    meshes.reserve(layout.frames);
    std::vector<rot::Rot6> theta(layout.joints);
    for (int k = 0; k < layout.frames; ++k) {
        for (int j = 0; j < layout.joints; ++j)
            theta[j] = rot::uncenter(chi.segment<6>(layout.theta_offset(k, j)));
        const Eigen::Vector3d gamma = chi.segment<3>(layout.gamma_offset(k)).cwiseProduct(spec.translation_bound);
        meshes.push_back(body::pose_mesh(body, shaped, theta, gamma, mode));
    }
    return meshes;
}

double loss_spatial(const body::BodyModel& body, const Eigen::VectorXd& beta,
                    const std::vector<body::VertexMatrix>& target, const ChiVector& chi_hat,
                    const ChiLayout& layout, const NormalizationSpec& spec, ChiVector* grad)
{
    if (static_cast<int>(target.size()) != layout.frames)
        throw Error(ErrorCode::ShapeMismatch, "target mesh count does not match the layout");
    const std::vector<body::VertexMatrix> posed =
        pose_chi(body, beta, chi_hat, layout, spec, body::Projection::Clamped);
    const double scale = 1.0 / (static_cast<double>(layout.frames) * body.num_vertices());
    if (grad)
        grad->setZero(layout.size());

    double loss = 0.0;
    std::vector<rot::Rot6> theta(layout.joints);
    for (int k = 0; k < layout.frames; ++k) {
        const body::VertexMatrix diff = posed[k] - target[k];
        loss += diff.squaredNorm();
        if (!grad)
            continue;
        for (int j = 0; j < layout.joints; ++j)
            theta[j] = rot::uncenter(chi_hat.segment<6>(layout.theta_offset(k, j)));
        const Eigen::Vector3d gamma =
            chi_hat.segment<3>(layout.gamma_offset(k)).cwiseProduct(spec.translation_bound);
        const body::VertexMatrix upstream = (2.0 * scale) * diff;
        const body::PoseGradient g =
            body::pose_mesh_vjp(body, beta, theta, gamma, upstream, body::Projection::Clamped);
        for (int j = 0; j < layout.joints; ++j)
            grad->segment<6>(layout.theta_offset(k, j)) = g.theta.row(j).transpose();
        grad->segment<3>(layout.gamma_offset(k)) = g.gamma.cwiseProduct(spec.translation_bound);
    }
    return loss * scale;
}

double loss_spatial(const body::BodyModel& body, const Eigen::VectorXd& beta, const ChiVector& chi,
                    const ChiVector& chi_hat, const ChiLayout& layout, const NormalizationSpec& spec,
                    ChiVector* grad)
{
    check_pair(chi, chi_hat, layout);
    return loss_spatial(body, beta, pose_chi(body, beta, chi, layout, spec, body::Projection::Clamped),
                        chi_hat, layout, spec, grad);
}

void update_adaptive_weights(std::vector<double>& weights, const std::vector<double>& losses,
                             std::vector<double>& initial_losses, const std::vector<double>& grad_norms,
                             double lr)
{
    const std::size_t n = weights.size();
    if (n == 0 || losses.size() != n || grad_norms.size() != n)
        throw Error(ErrorCode::ShapeMismatch, "adaptive weight inputs have inconsistent lengths");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grad_norms[i]) || !std::isfinite(losses[i]))
            throw Error(ErrorCode::NonFiniteGradient, "non-finite task loss or gradient norm");
    if (initial_losses.size() != n) {
        initial_losses.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            initial_losses[i] = std::max(losses[i], 1e-12);
    }

    std::vector<double> ratio(n), G(n);
    for (std::size_t i = 0; i < n; ++i) {
        ratio[i] = losses[i] / initial_losses[i];
        G[i] = weights[i] * grad_norms[i];
    }
    const double mean_ratio = std::accumulate(ratio.begin(), ratio.end(), 0.0) / n;
    const double mean_G = std::accumulate(G.begin(), G.end(), 0.0) / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = mean_ratio > 0.0 ? ratio[i] / mean_ratio : 1.0;
        const double dev = G[i] - mean_G * r;
        // Rounding noise in the means must not move a balanced weight.
        const double tie = 1e-12 * std::max(std::abs(G[i]), std::abs(mean_G * r));
        const double sign = dev > tie ? 1.0 : (dev < -tie ? -1.0 : 0.0);
        weights[i] = std::max(weights[i] - lr * sign * grad_norms[i], kWeightFloor);
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights)
        w *= static_cast<double>(n) / sum;
}

} // namespace motionspace::vae
