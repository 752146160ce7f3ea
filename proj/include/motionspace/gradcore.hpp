#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace motionspace::grad {

/// Named dense parameters with paired gradient buffers. Every mutation of the
/// values bumps `version`, which invalidates outstanding tapes.
class ParamStore
{
public:
    struct Param
    {
        std::string name;
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
    };

    int add(const std::string& name, Eigen::MatrixXd value);

    Param& at(int index) { return params_.at(index); }
    const Param& at(int index) const { return params_.at(index); }
    int find(const std::string& name) const; // -1 when absent

    int size() const { return static_cast<int>(params_.size()); }
    Eigen::Index scalar_count() const;
    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

    void zero_grad();

    /// Values and gradients flattened in declaration order (column-major per parameter).
    Eigen::VectorXd values() const;
    Eigen::VectorXd grads() const;
    void set_values(const Eigen::VectorXd& flat);

    std::vector<Param>::const_iterator begin() const { return params_.begin(); }
    std::vector<Param>::const_iterator end() const { return params_.end(); }

private:
    std::vector<Param> params_;
    std::uint64_t version_ = 0;
};

/// Fully connected network: linear layers with ReLU between them and a linear
/// output layer. Parameters live in a ParamStore as "<prefix>.W<l>" / "<prefix>.b<l>".
struct Mlp
{
    std::vector<int> widths; // input, hidden..., output
    std::vector<int> weight;  // ParamStore indices
    std::vector<int> bias;

    int layers() const { return static_cast<int>(weight.size()); }
    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
};

/// Registers the layers of an MLP. Hidden layers use He-uniform initialisation,
/// the output layer U(+-1/sqrt(fan_in)); biases start at zero.
Mlp make_mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& widths,
             std::mt19937_64& rng);

/// Layer inputs of a forward pass; columns are batch elements.
struct Tape
{
    std::vector<Eigen::MatrixXd> inputs; // inputs[l] feeds layer l (after ReLU for l > 0)
    Eigen::MatrixXd output;
    std::uint64_t version = 0;
};

Tape mlp_forward(const ParamStore& store, const Mlp& net, const Eigen::MatrixXd& x);

/// Accumulates parameter gradients for d<upstream, output> and returns the
/// gradient with respect to the input. Throws StaleTape when parameters changed
/// after the forward pass.
Eigen::MatrixXd mlp_backward(ParamStore& store, const Mlp& net, const Tape& tape,
                             const Eigen::MatrixXd& upstream);

/// Input gradient only; the store is left untouched.
Eigen::MatrixXd mlp_input_grad(const ParamStore& store, const Mlp& net, const Tape& tape,
                               const Eigen::MatrixXd& upstream);

/// Gradient of d<upstream, output> with respect to the weight matrix of `layer`,
/// computed without touching the store's gradient buffers.
Eigen::MatrixXd layer_weight_grad(const ParamStore& store, const Mlp& net, const Tape& tape,
                                  const Eigen::MatrixXd& upstream, int layer);

struct OptState
{
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
};

OptState make_opt_state(const ParamStore& store, double lr);

/// Bias-corrected Adam update from the accumulated gradients, which are then
/// zeroed. A non-finite gradient throws NonFiniteGradient naming the parameter
/// and leaves the values untouched.
void adam_step(ParamStore& store, OptState& state);

struct FdReport
{
    double max_rel_error = 0.0;
    Eigen::Index worst_index = -1;
    Eigen::Index checked = 0;
    bool passed = true;
};

/// Central differences of f at x against an analytic gradient. With
/// max_coords > 0 only that many coordinates (chosen by `seed`) are probed.
/// Relative error is |a - n| / max(|a|, |n|, floor).
FdReport finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& analytic, double h = 1e-5,
                           double tol = 1e-4, Eigen::Index max_coords = 0, std::uint64_t seed = 0,
                           double floor = 1e-6);

} // namespace motionspace::grad
