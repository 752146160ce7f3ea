#pragma once

#include "motionspace/body.hpp"
#include "motionspace/motiondata.hpp"
#include "motionspace/motionvae.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace motionspace::eval {

/// Top-d principal directions of the rows of a data matrix.
struct PcaModel
{
    Eigen::VectorXd mean;
    Eigen::MatrixXd directions;         // d x D, orthonormal rows
    Eigen::VectorXd explained_variance; // length d, non-increasing
    /// Set when the variance of the last kept component is below 1e-12.
    bool rank_deficient = false;

    int dim() const { return static_cast<int>(directions.rows()); }
};

/// SVD of the centered rows of X. Requires more rows than d.
PcaModel pca_fit(const Eigen::MatrixXd& X, int d);
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& X);

/// Rows [chi, beta] of a dataset.
Eigen::MatrixXd stack_rows(const vae::Dataset& data);

/// Projects every [chi, beta] row of the test set, discards the reconstructed
/// beta and poses the reconstructed motion with the true beta. Returns the
/// per-sequence mean vertex error in meters.
std::vector<double> pca_baseline_error(const PcaModel& model, const vae::Dataset& test,
                                       const body::BodyModel& body, const motion::NormalizationSpec& spec,
                                       const vae::ChiLayout& layout);

/// Per-sequence mean vertex error of the model's auto-encoding (posterior
/// mean, true beta).
std::vector<double> vae_reconstruction_error(const vae::MotionVae& model, const vae::Dataset& test,
                                             const body::BodyModel& body);

/// Mean Euclidean distance between corresponding vertices of every frame of
/// two sequences with equal frame counts, each posed with its own beta.
double mean_vertex_error(const motion::MotionSequence& seq, const motion::MotionSequence& seq_hat,
                         const body::BodyModel& body);
/// Same, one value per frame.
std::vector<double> frame_errors(const motion::MotionSequence& seq, const motion::MotionSequence& seq_hat,
                                 const body::BodyModel& body);
/// Same on normalized vectors, both posed with `beta`.
double mean_vertex_error(const body::BodyModel& body, const Eigen::VectorXd& beta, const vae::ChiVector& chi,
                         const vae::ChiVector& chi_hat, const vae::ChiLayout& layout,
                         const motion::NormalizationSpec& spec);

/// Entry t averages the frame-t errors of all sequences with more than t frames.
std::vector<double> error_curve(const std::vector<std::vector<double>>& per_frame);

struct BoxStats
{
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    int outliers = 0;
};

/// Quartiles by linear interpolation between order statistics; whiskers at
/// the most extreme data within 1.5 IQR of the quartiles.
BoxStats tukey(std::vector<double> samples);
double quantile_sorted(const std::vector<double>& sorted, double p);

struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);

void export_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

/// One OBJ file per frame (frame_0000.obj, ...) with the body's faces.
/// Returns the number of files written.
int export_obj(const motion::MotionSequence& seq, const body::BodyModel& body,
               const std::filesystem::path& dir);
body::VertexMatrix read_obj_vertices(const std::filesystem::path& path);

struct LabeledCode
{
    vae::LatentCode code;
    std::string label;
};

/// Columns z0..z{dz-1}, beta0..beta{B-1}, label.
void export_latents(const std::vector<LabeledCode>& codes, const std::filesystem::path& path);
std::vector<LabeledCode> read_latents(const std::filesystem::path& path);

} // namespace motionspace::eval
