#include "test_util.hpp"

#include "motionspace/gradcore.hpp"
#include "motionspace/motionvae.hpp"

#include <fstream>

using namespace motionspace;
using testutil::max_abs;

namespace {

vae::Architecture tiny_arch()
{
    vae::Architecture a;
    a.frames = 4;
    a.joints = 4;
    a.betas = 2;
    a.dim_z = 3;
    a.encoder_hidden = {16, 8};
    a.decoder_hidden = {8, 16};
    return a;
}

const body::BodyModel& tiny_body()
{
    static const body::BodyModel b = body::make_synthetic_body(4, 30, 2, 5);
    return b;
}

// Plausible normalized motion: small centered rotations, bounded translation and intervals.
motion::ChiVector random_chi(std::mt19937_64& rng, const motion::ChiLayout& layout)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    motion::ChiVector chi(layout.size());
    for (int k = 0; k < layout.frames; ++k) {
        for (int j = 0; j < layout.joints; ++j)
            chi.segment<6>(layout.theta_offset(k, j)) = rot::center(testutil::random_rot6(rng, 0.15));
        for (int c = 0; c < 3; ++c)
            chi(layout.gamma_offset(k) + c) = 0.8 * u(rng);
        chi(layout.phi_offset(k)) = k == 0 ? 0.0 : 0.5 + 0.4 * u(rng);
    }
    return chi;
}

vae::Dataset tiny_dataset(int count, int frames, std::uint64_t seed, motion::NormalizationSpec& spec)
{
    const auto seqs = motion::synth_dataset(tiny_body(), count, frames, seed);
    spec = motion::fit_normalization(seqs, frames);
    return vae::make_dataset(seqs, spec, frames);
}

} // namespace

TEST_CASE("encoder and decoder shapes; the encoder sees no beta")
{
    const auto a = tiny_arch();
    const vae::MotionVae m(a, 1);
    CHECK(m.encoder().input_width() == a.frames * (6 * a.joints + 4));
    CHECK(m.encoder().output_width() == 2 * a.dim_z);
    CHECK(m.decoder().input_width() == a.dim_z + a.betas);
    CHECK(m.decoder().output_width() == a.chi_size());
    CHECK(m.decode({Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)}).size() == a.chi_size());
    CHECK(testutil::error_code_of([&] { m.encode(Eigen::VectorXd::Zero(5)); }) == ErrorCode::ShapeMismatch);
    CHECK(testutil::error_code_of([&] { m.decode({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("encode: positive sigma and determinism")
{
    const auto a = tiny_arch();
    const vae::MotionVae m(a, 2);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto x = testutil::random_vector(rng, a.chi_size());
        const auto p = m.encode(x);
        CHECK((p.sigma.array() > 0.0).all());
        const auto q = m.encode(x);
        CHECK(p.mu == q.mu);
        CHECK(p.sigma == q.sigma);
    }
}

TEST_CASE("untrained seeded network: regression snapshot")
{
    const vae::MotionVae m(tiny_arch(), 42);
    Eigen::VectorXd x(m.arch().chi_size());
    for (int i = 0; i < x.size(); ++i)
        x(i) = std::sin(0.1 * i);
    const auto p = m.encode(x);
    CHECK(p.mu(0) == doctest::Approx(-0.37154695453000941).epsilon(1e-12));
    CHECK(p.mu(1) == doctest::Approx(0.15871238381218769).epsilon(1e-12));
    CHECK(p.mu(2) == doctest::Approx(0.33419873479119316).epsilon(1e-12));
    CHECK(p.sigma(0) == doctest::Approx(1.0983867183116038).epsilon(1e-12));
    CHECK(p.sigma(2) == doctest::Approx(0.74449608561692227).epsilon(1e-12));

    // Zero biases at initialization: the zero code decodes to the zero vector.
    CHECK(max_abs(m.decode({Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)})) == 0.0);
    const auto d = m.decode({Eigen::Vector3d(0.5, -1, 2), Eigen::Vector2d(1, -0.5)});
    CHECK(d(3) == doctest::Approx(0.47246439949802771).epsilon(1e-12));
    CHECK(d(64) == doctest::Approx(0.068105449265370543).epsilon(1e-12));
}

TEST_CASE("sample_latent: closed cases and Monte-Carlo moments")
{
    const Eigen::Vector3d mu(3, 3, 3), sigma(1, 1, 1);
    CHECK(vae::sample_latent(mu, sigma, Eigen::Vector3d::Zero()) == mu);
    const Eigen::Vector3d eps(0.5, -1, 2);
    CHECK(max_abs(vae::sample_latent(mu, Eigen::Vector3d::Zero(), eps) - mu) < 1e-11);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const int draws = 100000;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
    for (int i = 0; i < draws; ++i) {
        const Eigen::Vector3d z = vae::sample_latent(mu, sigma, Eigen::Vector3d(n(rng), n(rng), n(rng)));
        sum += z;
        sq += z.cwiseProduct(z);
    }
    const Eigen::Vector3d mean = sum / draws;
    const Eigen::Vector3d var = (sq - draws * mean.cwiseProduct(mean)) / (draws - 1);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(mean(i) - 3.0) / 3.0 < 0.02);
        CHECK(std::abs(var(i) - 1.0) < 0.02);
    }
}

TEST_CASE("loss_rec: closed cases and naive oracle")
{
    const motion::ChiLayout layout{5, 3};
    std::mt19937_64 rng(5);
    const motion::ChiVector chi = random_chi(rng, layout);
    const auto zero = vae::loss_rec(chi, chi, layout);
    CHECK(zero.pose == 0.0);
    CHECK(zero.trans == 0.0);
    CHECK(zero.time == 0.0);

    motion::ChiVector shifted = chi;
    for (int k = 0; k < layout.frames; ++k)
        shifted.segment(layout.theta_offset(k, 0), 6 * layout.joints).array() += 1.0;
    const auto ones = vae::loss_rec(chi, shifted, layout);
    CHECK(ones.pose == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ones.trans == 0.0);
    CHECK(ones.time == 0.0);

    const motion::ChiVector other = random_chi(rng, layout);
    double pose = 0.0, trans = 0.0, time = 0.0;
    for (int k = 0; k < layout.frames; ++k) {
        for (int i = 0; i < 6 * layout.joints; ++i) {
            const double d = chi(layout.theta_offset(k, 0) + i) - other(layout.theta_offset(k, 0) + i);
            pose += d * d;
        }
        for (int c = 0; c < 3; ++c) {
            const double d = chi(layout.gamma_offset(k) + c) - other(layout.gamma_offset(k) + c);
            trans += d * d;
        }
        const double d = chi(layout.phi_offset(k)) - other(layout.phi_offset(k));
        time += d * d;
    }
    const auto r = vae::loss_rec(chi, other, layout);
    CHECK(std::abs(r.pose - pose / (layout.frames * 6 * layout.joints)) < 1e-12);
    CHECK(std::abs(r.trans - trans / (layout.frames * 3)) < 1e-12);
    CHECK(std::abs(r.time - time / layout.frames) < 1e-12);
}

TEST_CASE("gradient: loss_rec against central differences at 20 points")
{
    const motion::ChiLayout layout{4, 3};
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const motion::ChiVector chi = random_chi(rng, layout), hat = random_chi(rng, layout);
        const double wp = 0.7, wt = 1.3, wtime = 0.4;
        auto f = [&](const Eigen::VectorXd& h) {
            const auto l = vae::loss_rec(chi, h, layout);
            return wp * l.pose + wt * l.trans + wtime * l.time;
        };
        const auto r = grad::finite_diff_check(f, hat, vae::loss_rec_grad(chi, hat, layout, wp, wt, wtime), 1e-5, 1e-4);
        CHECK_MESSAGE(r.passed, "rel error " << r.max_rel_error);
    }
}

TEST_CASE("loss_kl: closed forms, non-negativity and gradient")
{
    CHECK(vae::loss_kl(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)) == 0.0);
    CHECK(std::abs(vae::loss_kl(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)) - 0.5) < 1e-9);
    // sigma = e  <=>  logvar = 2
    const double e = std::exp(1.0);
    CHECK(std::abs(vae::loss_kl(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0)) - 0.5 * (e * e - 3.0)) <
          1e-9);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd mu = testutil::random_vector(rng, 5), lv = testutil::random_vector(rng, 5);
        CHECK(vae::loss_kl(mu, lv) >= 0.0);
        Eigen::VectorXd gm, gl;
        vae::loss_kl_grad(mu, lv, gm, gl);
        Eigen::VectorXd x(10), g(10);
        x << mu, lv;
        g << gm, gl;
        auto f = [](const Eigen::VectorXd& v) { return vae::loss_kl(v.head(5), v.tail(5)); };
        const auto r = grad::finite_diff_check(f, x, g, 1e-5, 1e-4);
        CHECK_MESSAGE(r.passed, "rel error " << r.max_rel_error);
    }
}

TEST_CASE("loss_spatial: identical inputs, global offset and gradient")
{
    const auto& b = tiny_body();
    const motion::ChiLayout layout{3, b.num_joints()};
    motion::NormalizationSpec spec;
    spec.translation_bound = Eigen::Vector3d(2.0, 0.5, 4.0);
    spec.max_frame_delta = 0.1;
    std::mt19937_64 rng(8);
    const Eigen::VectorXd beta = testutil::random_vector(rng, b.num_betas());
    const motion::ChiVector chi = random_chi(rng, layout);
    CHECK(vae::loss_spatial(b, beta, chi, chi, layout, spec) == 0.0);

    const Eigen::Vector3d d(0.03, -0.02, 0.05);
    motion::ChiVector offset = chi;
    for (int k = 0; k < layout.frames; ++k)
        offset.segment<3>(layout.gamma_offset(k)) += d.cwiseQuotient(spec.translation_bound);
    CHECK(std::abs(vae::loss_spatial(b, beta, chi, offset, layout, spec) - d.squaredNorm()) < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
        const motion::ChiVector target = random_chi(rng, layout), hat = random_chi(rng, layout);
        motion::ChiVector g;
        vae::loss_spatial(b, beta, target, hat, layout, spec, &g);
        auto f = [&](const Eigen::VectorXd& h) { return vae::loss_spatial(b, beta, target, h, layout, spec); };
        const auto r = grad::finite_diff_check(f, hat, g, 1e-5, 1e-4);
        CHECK_MESSAGE(r.passed, "rel error " << r.max_rel_error);
    }
}

TEST_CASE("adaptive weights: fixed point, direction and invariants")
{
    std::vector<double> w{1.0, 1.0, 1.0}, init;
    vae::update_adaptive_weights(w, {0.5, 0.5, 0.5}, init, {2.0, 2.0, 2.0}, 0.025);
    CHECK(init.size() == 3);
    for (double x : w)
        CHECK(x == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> v{1.0, 1.0, 1.0}, init2;
    vae::update_adaptive_weights(v, {0.5, 0.5, 0.5}, init2, {1.0, 1.0, 1.0}, 0.025);
    vae::update_adaptive_weights(v, {0.5, 0.5, 0.5}, init2, {10.0, 1.0, 1.0}, 0.025);
    CHECK(v[0] < 1.0);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(1e-3, 10.0);
    std::vector<double> q{1.0, 1.0}, init3;
    for (int i = 0; i < 1000; ++i) {
        vae::update_adaptive_weights(q, {u(rng), u(rng)}, init3, {u(rng), u(rng)}, 0.5);
        CHECK(q[0] > 0.0);
        CHECK(q[1] > 0.0);
        CHECK(q[0] + q[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
    std::vector<double> bad{1.0, 1.0};
    CHECK(testutil::error_code_of([&] {
              vae::update_adaptive_weights(bad, {1.0, 1.0}, init3, {std::nan(""), 1.0}, 0.1);
          }) == ErrorCode::NonFiniteGradient);
}

TEST_CASE("make_dataset: shapes and bounds")
{
    motion::NormalizationSpec spec;
    const vae::Dataset d = tiny_dataset(6, 5, 10, spec);
    CHECK(d.size() == 6);
    CHECK(d.chi[0].size() == 5 * (6 * 4 + 4));
    CHECK(d.beta[0].size() == 2);
    auto seqs = motion::synth_dataset(tiny_body(), 1, 5, 11);
    seqs[0].frames[2].gamma.x() = 10.0 * spec.translation_bound.x();
    CHECK(testutil::error_code_of([&] { vae::make_dataset(seqs, spec, 5); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("train: same seed gives identical checkpoints; checkpoint round trip")
{
    motion::NormalizationSpec spec;
    const vae::Dataset data = tiny_dataset(12, 4, 12, spec);
    vae::TrainConfig cfg;
    cfg.arch = tiny_arch();
    cfg.phase1 = {3, 1e-3, 4};
    cfg.phase2 = {2, 1e-4, 4};
    const auto a = vae::train(data, tiny_body(), spec, cfg);
    const auto b = vae::train(data, tiny_body(), spec, cfg);
    CHECK(a.model.params().values() == b.model.params().values());
    CHECK(a.phase1.params().values() == b.phase1.params().values());
    CHECK(a.record.curve.size() == 5);
    CHECK(a.record.curve.front().phase == 1);
    CHECK(a.record.curve.back().phase == 2);

    const auto dir = testutil::scratch_dir("ckpt");
    vae::save_checkpoint(a.model, a.record, dir / "m.ckpt");
    vae::save_checkpoint(b.model, b.record, dir / "m2.ckpt");
    std::ifstream f1(dir / "m.ckpt", std::ios::binary), f2(dir / "m2.ckpt", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string bytes2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(bytes == bytes2);

    const auto back = vae::load_checkpoint(dir / "m.ckpt");
    CHECK(back.model.arch() == a.model.arch());
    CHECK(back.model.params().values() == a.model.params().values());
    CHECK(back.model.normalization.translation_bound == spec.translation_bound);
    CHECK(back.model.normalization.max_frame_delta == spec.max_frame_delta);
    CHECK(back.record.curve.size() == a.record.curve.size());

    vae::write_curve_csv(a.record, dir / "curve.csv");
    CHECK(std::filesystem::file_size(dir / "curve.csv") > 0);

    auto write_bytes = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir / name, std::ios::binary) << content;
        return dir / name;
    };
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(testutil::error_code_of([&] { vae::load_checkpoint(write_bytes("magic.ckpt", bad_magic)); }) ==
          ErrorCode::ParseError);
    CHECK(testutil::error_code_of([&] { vae::load_checkpoint(write_bytes("cut.ckpt", bytes.substr(0, bytes.size() / 2))); }) ==
          ErrorCode::ParseError);
    CHECK(testutil::error_code_of([&] { vae::load_checkpoint(write_bytes("long.ckpt", bytes + "extra")); }) ==
          ErrorCode::ParseError);
    CHECK(testutil::error_code_of([&] { vae::load_checkpoint(dir / "absent.ckpt"); }) == ErrorCode::IoError);
}

TEST_CASE("property: one sequence is memorized without the KL term")
{
    motion::NormalizationSpec spec;
    const vae::Dataset data = tiny_dataset(1, 6, 13, spec);
    vae::TrainConfig cfg;
    cfg.arch = tiny_arch();
    cfg.arch.frames = 6;
    cfg.omega_kl = 0.0;
    cfg.phase1 = {2000, 1e-3, 1};
    cfg.phase2 = {0, 1e-4, 1};
    const auto res = vae::train(data, tiny_body(), spec, cfg);
    const auto& last = res.record.curve.back();
    CHECK(last.pose + last.trans + last.time < 1e-3);
}
