#include "test_util.hpp"

#include "motionspace/gradcore.hpp"

using namespace motionspace;
using testutil::max_abs;

namespace {

grad::Mlp fixed_net(grad::ParamStore& store, const std::vector<int>& widths)
{
    std::mt19937_64 rng(1);
    return grad::make_mlp(store, "net", widths, rng);
}

} // namespace

TEST_CASE("mlp_forward: identity layer, ReLU and a hand-evaluated two-layer net")
{
    grad::ParamStore store;
    const grad::Mlp one = fixed_net(store, {3, 3});
    store.at(one.weight[0]).value = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd x(3, 1);
    x << 1.5, -2.0, 0.25;
    CHECK(grad::mlp_forward(store, one, x).output == x);

    grad::ParamStore s2;
    const grad::Mlp two = fixed_net(s2, {2, 2, 2});
    s2.at(two.weight[0]).value << 1, -2, 3, 0.5;
    s2.at(two.bias[0]).value << 0.5, -4;
    s2.at(two.weight[1]).value << 2, 1, -1, 3;
    s2.at(two.bias[1]).value << 0.1, 0.2;
    Eigen::MatrixXd in(2, 1);
    in << 1, 1;
    // Hidden pre-activation (1 - 2 + 0.5, 3 + 0.5 - 4) = (-0.5, -0.5) -> ReLU (0, 0).
    CHECK(max_abs(grad::mlp_forward(s2, two, in).output - Eigen::Vector2d(0.1, 0.2)) < 1e-15);
    s2.at(two.bias[0]).value << 2.5, -4;
    // Hidden (1.5, -0.5) -> (1.5, 0); output (3 + 0.1, -1.5 + 0.2).
    CHECK(max_abs(grad::mlp_forward(s2, two, in).output - Eigen::Vector2d(3.1, -1.3)) < 1e-15);
    CHECK(testutil::error_code_of([&] { grad::mlp_forward(s2, two, Eigen::MatrixXd::Ones(3, 1)); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("mlp_backward: zero upstream and the outer-product identity")
{
    grad::ParamStore store;
    const grad::Mlp net = fixed_net(store, {4, 3});
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = testutil::random_vector(rng, 4);
    const auto tape = grad::mlp_forward(store, net, x);
    store.zero_grad();
    grad::mlp_backward(store, net, tape, Eigen::MatrixXd::Zero(3, 1));
    CHECK(max_abs(store.grads()) == 0.0);

    const Eigen::MatrixXd u = testutil::random_vector(rng, 3);
    const Eigen::MatrixXd gx = grad::mlp_backward(store, net, tape, u);
    CHECK(max_abs(store.at(net.weight[0]).grad - u * x.transpose()) < 1e-15);
    CHECK(max_abs(store.at(net.bias[0]).grad - u) < 1e-15);
    CHECK(max_abs(gx - store.at(net.weight[0]).value.transpose() * u) < 1e-15);
}

TEST_CASE("gradient: three-layer mlp against central differences at 20 points")
{
    grad::ParamStore store;
    std::mt19937_64 rng(3);
    const grad::Mlp net = grad::make_mlp(store, "m", {5, 7, 6, 3}, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd x = testutil::random_vector(rng, 5);
        const Eigen::MatrixXd u = testutil::random_vector(rng, 3);
        const Eigen::VectorXd p0 = store.values();

        store.zero_grad();
        const auto tape = grad::mlp_forward(store, net, x);
        const Eigen::MatrixXd gx = grad::mlp_backward(store, net, tape, u);
        const Eigen::VectorXd analytic = store.grads();
        CHECK(max_abs(grad::mlp_input_grad(store, net, tape, u) - gx) == 0.0);
        CHECK(max_abs(grad::layer_weight_grad(store, net, tape, u, 1) - store.at(net.weight[1]).grad) < 1e-12);

        auto f_params = [&](const Eigen::VectorXd& p) {
            store.set_values(p);
            const double v = (grad::mlp_forward(store, net, x).output.array() * u.array()).sum();
            store.set_values(p0);
            return v;
        };
        const auto rp = grad::finite_diff_check(f_params, p0, analytic, 1e-5, 1e-4);
        CHECK_MESSAGE(rp.passed, "params rel error " << rp.max_rel_error);

        auto f_input = [&](const Eigen::VectorXd& xi) {
            return (grad::mlp_forward(store, net, xi).output.array() * u.array()).sum();
        };
        const auto rx = grad::finite_diff_check(f_input, x, gx.reshaped(), 1e-5, 1e-4);
        CHECK_MESSAGE(rx.passed, "input rel error " << rx.max_rel_error);
    }
}

TEST_CASE("mlp_backward: stale tapes are rejected")
{
    grad::ParamStore store;
    const grad::Mlp net = fixed_net(store, {2, 2});
    const auto tape = grad::mlp_forward(store, net, Eigen::MatrixXd::Ones(2, 1));
    store.bump_version();
    CHECK(testutil::error_code_of([&] { grad::mlp_backward(store, net, tape, Eigen::MatrixXd::Ones(2, 1)); }) ==
          ErrorCode::StaleTape);
}

TEST_CASE("adam: zero gradient, first step and scalar convergence")
{
    grad::ParamStore store;
    store.add("w", Eigen::MatrixXd::Constant(1, 1, 0.0));
    grad::OptState st = grad::make_opt_state(store, 0.1);
    grad::adam_step(store, st);
    CHECK(store.at(0).value(0, 0) == 0.0);

    grad::ParamStore s1;
    s1.add("w", Eigen::MatrixXd::Constant(1, 1, 1.0));
    grad::OptState o1 = grad::make_opt_state(s1, 0.01);
    s1.at(0).grad(0, 0) = -4.0;
    grad::adam_step(s1, o1);
    // m_hat = g, v_hat = g^2 after bias correction: step = -lr * g / (|g| + eps).
    const double expected = 1.0 + 0.01 * 4.0 / (4.0 + 1e-8);
    CHECK(std::abs(s1.at(0).value(0, 0) - expected) < 1e-15);
    CHECK(s1.at(0).grad(0, 0) == 0.0);

    grad::ParamStore s2;
    s2.add("w", Eigen::MatrixXd::Constant(1, 1, 0.0));
    grad::OptState o2 = grad::make_opt_state(s2, 0.1);
    for (int i = 0; i < 200; ++i) {
        s2.at(0).grad(0, 0) = 2.0 * (s2.at(0).value(0, 0) - 3.0);
        grad::adam_step(s2, o2);
    }
    CHECK(std::abs(s2.at(0).value(0, 0) - 3.0) < 0.05);
}

TEST_CASE("adam: non-finite gradients abort the step and name the parameter")
{
    grad::ParamStore store;
    store.add("enc.W0", Eigen::MatrixXd::Ones(2, 2));
    grad::OptState st = grad::make_opt_state(store, 0.1);
    store.at(0).grad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        grad::adam_step(store, st);
        FAIL("expected NonFiniteGradient");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteGradient);
        CHECK(std::string(e.what()).find("enc.W0") != std::string::npos);
    }
    CHECK(store.at(0).value == Eigen::MatrixXd::Ones(2, 2));
}

TEST_CASE("finite_diff_check: quadratic and constant functions")
{
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd A = testutil::random_vector(rng, 16).reshaped(4, 4);
    const Eigen::MatrixXd Q = A.transpose() * A;
    const Eigen::VectorXd x = testutil::random_vector(rng, 4);
    auto quad = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(Q * v); };
    const auto r = grad::finite_diff_check(quad, x, Q * x, 1e-5, 1e-8);
    CHECK(r.passed);
    CHECK(r.checked == 4);

    auto constant = [](const Eigen::VectorXd&) { return 2.5; };
    const auto c = grad::finite_diff_check(constant, x, Eigen::VectorXd::Zero(4));
    CHECK(c.passed);
    CHECK(c.max_rel_error == 0.0);

    const auto wrong = grad::finite_diff_check(quad, x, 2.0 * Q * x + Eigen::VectorXd::Ones(4));
    CHECK_FALSE(wrong.passed);

    const auto sub = grad::finite_diff_check(quad, x, Q * x, 1e-5, 1e-8, 2, 9);
    CHECK(sub.checked == 2);
}

TEST_CASE("property: forward and backward are bit-reproducible")
{
    auto run = [] {
        grad::ParamStore store;
        std::mt19937_64 rng(5);
        const grad::Mlp net = grad::make_mlp(store, "m", {6, 8, 4}, rng);
        const Eigen::MatrixXd x = testutil::random_vector(rng, 6 * 3).reshaped(6, 3);
        const auto tape = grad::mlp_forward(store, net, x);
        grad::mlp_backward(store, net, tape, Eigen::MatrixXd::Ones(4, 3));
        Eigen::VectorXd out(store.scalar_count() * 2);
        out << store.values(), store.grads();
        return out;
    };
    CHECK(run() == run());
}
