#include "motionspace/gradcore.hpp"

#include "motionspace/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace motionspace::grad {

int ParamStore::add(const std::string& name, Eigen::MatrixXd value)
{
    if (find(name) >= 0)
        throw Error(ErrorCode::InvalidConfig, "duplicate parameter name " + name);
    Param p{name, std::move(value), {}};
    p.grad = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
    params_.push_back(std::move(p));
    ++version_;
    return size() - 1;
}

int ParamStore::find(const std::string& name) const
{
    for (int i = 0; i < size(); ++i)
        if (params_[i].name == name)
            return i;
    return -1;
}

Eigen::Index ParamStore::scalar_count() const
{
    Eigen::Index n = 0;
    for (const auto& p : params_)
        n += p.value.size();
    return n;
}

void ParamStore::zero_grad()
{
    for (auto& p : params_)
        p.grad.setZero();
}

Eigen::VectorXd ParamStore::values() const
{
    Eigen::VectorXd out(scalar_count());
    Eigen::Index at = 0;
    for (const auto& p : params_) {
        out.segment(at, p.value.size()) = p.value.reshaped();
        at += p.value.size();
    }
    return out;
}

Eigen::VectorXd ParamStore::grads() const
{
    Eigen::VectorXd out(scalar_count());
    Eigen::Index at = 0;
    for (const auto& p : params_) {
        out.segment(at, p.grad.size()) = p.grad.reshaped();
        at += p.grad.size();
    }
    return out;
}

void ParamStore::set_values(const Eigen::VectorXd& flat)
{
    if (flat.size() != scalar_count())
        throw Error(ErrorCode::ShapeMismatch, "flat parameter vector has the wrong length");
    Eigen::Index at = 0;
    for (auto& p : params_) {
        p.value.reshaped() = flat.segment(at, p.value.size());
        at += p.value.size();
    }
    ++version_;
}

Mlp make_mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& widths,
             std::mt19937_64& rng)
{
    if (widths.size() < 2 || std::any_of(widths.begin(), widths.end(), [](int w) { return w < 1; }))
        throw Error(ErrorCode::InvalidConfig, "an MLP needs at least two positive widths");
    Mlp net;
    net.widths = widths;
    const int L = static_cast<int>(widths.size()) - 1;
    for (int l = 0; l < L; ++l) {
        const int fan_in = widths[l];
        const double bound = l + 1 < L ? std::sqrt(6.0 / fan_in) : 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd W(widths[l + 1], fan_in);
        // Row-major fill so the draw order does not depend on storage order.
        for (int r = 0; r < W.rows(); ++r)
            for (int c = 0; c < W.cols(); ++c)
                W(r, c) = dist(rng);
        net.weight.push_back(store.add(prefix + ".W" + std::to_string(l), std::move(W)));
        net.bias.push_back(
            store.add(prefix + ".b" + std::to_string(l), Eigen::MatrixXd::Zero(widths[l + 1], 1)));
    }
    return net;
}

Tape mlp_forward(const ParamStore& store, const Mlp& net, const Eigen::MatrixXd& x)
{
    if (x.rows() != net.input_width())
        throw Error(ErrorCode::ShapeMismatch, "MLP input has " + std::to_string(x.rows()) +
                                                  " rows, expected " + std::to_string(net.input_width()));
    Tape tape;
    tape.version = store.version();
    tape.inputs.reserve(net.layers());
    tape.inputs.push_back(x);
    for (int l = 0; l < net.layers(); ++l) {
        const auto& W = store.at(net.weight[l]).value;
        const auto& b = store.at(net.bias[l]).value;
        Eigen::MatrixXd y = W * tape.inputs.back();
        y.colwise() += b.col(0);
        if (l + 1 < net.layers())
            tape.inputs.push_back(y.cwiseMax(0.0));
        else
            tape.output = std::move(y);
    }
    return tape;
}

namespace {

void check_tape(const ParamStore& store, const Mlp& net, const Tape& tape, const Eigen::MatrixXd& upstream)
{
    if (tape.version != store.version())
        throw Error(ErrorCode::StaleTape, "parameters changed since the forward pass");
    if (upstream.rows() != net.output_width() || upstream.cols() != tape.output.cols())
        throw Error(ErrorCode::ShapeMismatch, "upstream gradient does not match the MLP output");
}

// Backpropagates g through layer l's input ReLU mask and weights.
Eigen::MatrixXd through_layer(const ParamStore& store, const Mlp& net, const Tape& tape,
                              const Eigen::MatrixXd& g, int l)
{
    Eigen::MatrixXd prev = store.at(net.weight[l]).value.transpose() * g;
    if (l > 0)
        prev = (tape.inputs[l].array() > 0.0).select(prev, 0.0);
    return prev;
}

} // namespace

Eigen::MatrixXd mlp_backward(ParamStore& store, const Mlp& net, const Tape& tape,
                             const Eigen::MatrixXd& upstream)
{
    check_tape(store, net, tape, upstream);
    Eigen::MatrixXd g = upstream;
    for (int l = net.layers() - 1; l >= 0; --l) {
        store.at(net.weight[l]).grad.noalias() += g * tape.inputs[l].transpose();
        store.at(net.bias[l]).grad.col(0) += g.rowwise().sum();
        g = through_layer(store, net, tape, g, l);
    }
    return g;
}

Eigen::MatrixXd mlp_input_grad(const ParamStore& store, const Mlp& net, const Tape& tape,
                               const Eigen::MatrixXd& upstream)
{
    check_tape(store, net, tape, upstream);
    Eigen::MatrixXd g = upstream;
    for (int l = net.layers() - 1; l >= 0; --l)
        g = through_layer(store, net, tape, g, l);
    return g;
}

Eigen::MatrixXd layer_weight_grad(const ParamStore& store, const Mlp& net, const Tape& tape,
                                  const Eigen::MatrixXd& upstream, int layer)
{
    check_tape(store, net, tape, upstream);
    if (layer < 0 || layer >= net.layers())
        throw Error(ErrorCode::InvalidInput, "layer index out of range");
    Eigen::MatrixXd g = upstream;
    for (int l = net.layers() - 1; l > layer; --l)
        g = through_layer(store, net, tape, g, l);
    return g * tape.inputs[layer].transpose();
}

OptState make_opt_state(const ParamStore& store, double lr)
{
    OptState s;
    s.lr = lr;
    for (const auto& p : store) {
        s.m.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
        s.v.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
    return s;
}

void adam_step(ParamStore& store, OptState& state)
{
    if (static_cast<int>(state.m.size()) != store.size())
        throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the parameters");
    for (const auto& p : store)
        if (!p.grad.allFinite())
            throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient in parameter " + p.name);

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (int i = 0; i < store.size(); ++i) {
        auto& p = store.at(i);
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * p.grad;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= state.lr * (state.m[i].array() / c1) /
                           ((state.v[i].array() / c2).sqrt() + state.eps);
        if (!p.value.allFinite())
            throw Error(ErrorCode::NonFiniteGradient, "update made parameter " + p.name + " non-finite");
        p.grad.setZero();
    }
    store.bump_version();
}

FdReport finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& analytic, double h, double tol,
                           Eigen::Index max_coords, std::uint64_t seed, double floor)
{
    if (analytic.size() != x.size())
        throw Error(ErrorCode::ShapeMismatch, "analytic gradient length differs from the point");
    std::vector<Eigen::Index> coords(x.size());
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (max_coords > 0 && max_coords < x.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(max_coords);
        std::sort(coords.begin(), coords.end());
    }

    FdReport report;
    Eigen::VectorXd probe = x;
    for (Eigen::Index i : coords) {
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic(i);
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        if (rel > report.max_rel_error || report.worst_index < 0) {
            report.max_rel_error = std::max(report.max_rel_error, rel);
            report.worst_index = i;
        }
        ++report.checked;
    }
    report.passed = report.max_rel_error < tol;
    return report;
}

} // namespace motionspace::grad
