#include "motionspace/evalkit.hpp"

#include "motionspace/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace motionspace::eval {

PcaModel pca_fit(const Eigen::MatrixXd& X, int d)
{
    if (d < 1 || d > X.cols())
        throw Error(ErrorCode::InvalidConfig, "PCA dimension must be in [1, column count]");
    if (X.rows() <= d && d < X.cols())
        throw Error(ErrorCode::InvalidInput, "PCA needs more rows than components");
    PcaModel m;
    m.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::Index available = svd.matrixV().cols();
    m.directions = Eigen::MatrixXd::Zero(d, X.cols());
    m.explained_variance = Eigen::VectorXd::Zero(d);
    const Eigen::Index kept = std::min<Eigen::Index>(d, available);
    m.directions.topRows(kept) = svd.matrixV().leftCols(kept).transpose();
    const double denom = std::max<Eigen::Index>(X.rows() - 1, 1);
    for (Eigen::Index i = 0; i < kept; ++i)
        m.explained_variance(i) = svd.singularValues()(i) * svd.singularValues()(i) / denom;
    m.rank_deficient = m.explained_variance(d - 1) < 1e-12;
    return m;
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& X)
{
    if (X.cols() != model.mean.size())
        throw Error(ErrorCode::ShapeMismatch, "PCA input width does not match the model");
    const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd coeffs = centered * model.directions.transpose();
    return (coeffs * model.directions).rowwise() + model.mean.transpose();
}

Eigen::MatrixXd stack_rows(const vae::Dataset& data)
{
    if (data.size() == 0)
        return {};
    const Eigen::Index width = data.chi[0].size() + data.beta[0].size();
    Eigen::MatrixXd X(data.size(), width);
    for (int i = 0; i < data.size(); ++i)
        X.row(i) << data.chi[i].transpose(), data.beta[i].transpose();
    return X;
}

std::vector<double> pca_baseline_error(const PcaModel& model, const vae::Dataset& test,
                                       const body::BodyModel& body, const motion::NormalizationSpec& spec,
                                       const vae::ChiLayout& layout)
{
    const Eigen::MatrixXd X = stack_rows(test);
    if (test.size() == 0)
        return {};
    const Eigen::MatrixXd rec = pca_reconstruct(model, X);
    std::vector<double> out;
    for (int i = 0; i < test.size(); ++i) {
        const vae::ChiVector chi_hat = rec.row(i).head(layout.size()).transpose();
        out.push_back(mean_vertex_error(body, test.beta[i], test.chi[i], chi_hat, layout, spec));
    }
    return out;
}

std::vector<double> vae_reconstruction_error(const vae::MotionVae& model, const vae::Dataset& test,
                                             const body::BodyModel& body)
{
    std::vector<double> out;
    for (int i = 0; i < test.size(); ++i) {
        const auto post = model.encode(test.chi[i]);
        const vae::ChiVector chi_hat = model.decode({post.mu, test.beta[i]});
        out.push_back(
            mean_vertex_error(body, test.beta[i], test.chi[i], chi_hat, model.layout(), model.normalization));
    }
    return out;
}

std::vector<double> frame_errors(const motion::MotionSequence& seq, const motion::MotionSequence& seq_hat,
                                 const body::BodyModel& body)
{
    if (seq.num_frames() != seq_hat.num_frames())
        throw Error(ErrorCode::ShapeMismatch, "sequences have different frame counts");
    const body::ShapedBody a = body::shape(body, seq.beta);
    const body::ShapedBody b = body::shape(body, seq_hat.beta);
    std::vector<double> out;
    for (int k = 0; k < seq.num_frames(); ++k) {
        const auto& fa = seq.frames[k];
        const auto& fb = seq_hat.frames[k];
        const body::VertexMatrix va = body::pose_mesh(body, a, fa.theta, fa.gamma, body::Projection::Clamped);
        const body::VertexMatrix vb = body::pose_mesh(body, b, fb.theta, fb.gamma, body::Projection::Clamped);
        out.push_back((va - vb).rowwise().norm().mean());
    }
    return out;
}

double mean_vertex_error(const motion::MotionSequence& seq, const motion::MotionSequence& seq_hat,
                         const body::BodyModel& body)
{
    const std::vector<double> e = frame_errors(seq, seq_hat, body);
    if (e.empty())
        throw Error(ErrorCode::EmptyInput, "cannot compare empty sequences");
    double sum = 0.0;
    for (double x : e)
        sum += x;
    return sum / e.size();
}

double mean_vertex_error(const body::BodyModel& body, const Eigen::VectorXd& beta, const vae::ChiVector& chi,
                         const vae::ChiVector& chi_hat, const vae::ChiLayout& layout,
                         const motion::NormalizationSpec& spec)
{
    const auto a = vae::pose_chi(body, beta, chi, layout, spec);
    const auto b = vae::pose_chi(body, beta, chi_hat, layout, spec);
    double sum = 0.0;
    for (int k = 0; k < layout.frames; ++k)
        sum += (a[k] - b[k]).rowwise().norm().mean();
    return sum / layout.frames;
}

std::vector<double> error_curve(const std::vector<std::vector<double>>& per_frame)
{
    std::size_t longest = 0;
    for (const auto& s : per_frame)
        longest = std::max(longest, s.size());
    std::vector<double> curve(longest, 0.0);
    for (std::size_t t = 0; t < longest; ++t) {
        double sum = 0.0;
        int count = 0;
        for (const auto& s : per_frame)
            if (s.size() > t) {
                sum += s[t];
                ++count;
            }
        curve[t] = sum / count;
    }
    return curve;
}

double quantile_sorted(const std::vector<double>& sorted, double p)
{
    if (sorted.empty())
        throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    const double h = (sorted.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

BoxStats tukey(std::vector<double> samples)
{
    if (samples.empty())
        throw Error(ErrorCode::EmptyInput, "box statistics need at least one sample");
    std::sort(samples.begin(), samples.end());
    BoxStats s;
    s.median = quantile_sorted(samples, 0.5);
    s.q1 = quantile_sorted(samples, 0.25);
    s.q3 = quantile_sorted(samples, 0.75);
    const double iqr = s.q3 - s.q1;
    const double low_fence = s.q1 - 1.5 * iqr;
    const double high_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = s.q1;
    s.whisker_high = s.q3;
    for (double x : samples) {
        if (x < low_fence || x > high_fence) {
            ++s.outliers;
            continue;
        }
        s.whisker_low = std::min(s.whisker_low, x);
        s.whisker_high = std::max(s.whisker_high, x);
    }
    return s;
}

} // namespace motionspace::eval
