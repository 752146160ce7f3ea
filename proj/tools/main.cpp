#include "run_config.hpp"

#include "motionspace/body.hpp"
#include "motionspace/error.hpp"
#include "motionspace/evalkit.hpp"
#include "motionspace/latentfit.hpp"
#include "motionspace/motiondata.hpp"
#include "motionspace/motionvae.hpp"
#include "motionspace/pipeline.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

using namespace motionspace;
using cli::Manifest;
using cli::RunConfig;

namespace {

struct Common
{
    std::string config;
    std::string out;
    std::string preset;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::vector<std::string> overrides;
};

// Per-command flag that writes a config key when given.
struct KeyFlag
{
    std::string key;
    std::shared_ptr<std::string> value = std::make_shared<std::string>();
    CLI::Option* option = nullptr;
};

struct Command
{
    CLI::App* app = nullptr;
    std::vector<KeyFlag> keys;
    std::function<void(const RunConfig&, Manifest&)> run;

    void bind(const std::string& flag, const std::string& key, const std::string& help)
    {
        KeyFlag k;
        k.key = key;
        k.option = app->add_option(flag, *k.value, help + " (config key " + key + ")");
        keys.push_back(std::move(k));
    }
};

std::string preset_from_file(const std::string& path)
{
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto hash = s.find('#');
            if (hash != std::string::npos)
                s.resize(hash);
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        if (key == "preset")
            return value;
    }
    return {};
}

RunConfig build_config(const Common& common, const Command& cmd)
{
    std::string preset = common.preset;
    if (preset.empty() && !common.config.empty())
        preset = preset_from_file(common.config);
    RunConfig cfg = RunConfig::defaults(preset.empty() ? "desk" : preset);
    if (!common.config.empty())
        cfg.merge_file(common.config);
    if (!common.preset.empty())
        cfg.set("preset", common.preset);
    for (const auto& o : common.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + o + "'");
        cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    for (const auto& k : cmd.keys)
        if (k.option->count() > 0)
            cfg.set(k.key, *k.value);
    if (const char* env = std::getenv("MOTIONSPACE_SEED"))
        cfg.set("seed", env);
    if (common.seed)
        cfg.set("seed", std::to_string(*common.seed));
    cfg.seed();
    return cfg;
}

body::BodyModel load_body_input(const RunConfig& cfg, Manifest& m)
{
    const std::string path = cfg.str("body.path");
    m.input("body", path);
    return body::load_body(path);
}

vae::MotionVae load_model_input(const RunConfig& cfg, Manifest& m)
{
    const std::string path = cfg.str("model.path");
    m.input("model", path);
    return vae::load_checkpoint(path).model;
}

std::vector<motion::MotionSequence> load_sequences_input(const std::string& role, const std::string& path,
                                                         Manifest& m)
{
    m.input(role, path);
    return motion::read_sequences(path);
}

void check_compatible(const body::BodyModel& body, const vae::MotionVae& model)
{
    if (body.num_joints() != model.arch().joints || body.num_betas() != model.arch().betas)
        throw Error(ErrorCode::ShapeMismatch, "body asset joints/betas do not match the model");
}

std::vector<int> marker_ids_for(const RunConfig& cfg, const body::BodyModel& body, Manifest& m)
{
    const std::filesystem::path sidecar = std::filesystem::path(cfg.str("body.path")).parent_path() / "markers.json";
    if (std::filesystem::exists(sidecar)) {
        m.input("markers", sidecar);
        return body::load_markers(sidecar);
    }
    return body::default_marker_vertices(body);
}

// "file.csv" or "file.csv:row"
vae::LatentCode read_code(const std::string& spec, const std::string& role, Manifest& m)
{
    std::string path = spec;
    int row = 0;
    const auto colon = spec.rfind(':');
    if (colon != std::string::npos && colon + 1 < spec.size() &&
        spec.find_first_not_of("0123456789", colon + 1) == std::string::npos) {
        path = spec.substr(0, colon);
        row = std::stoi(spec.substr(colon + 1));
    }
    m.input(role, path);
    const auto codes = eval::read_latents(path);
    if (row >= static_cast<int>(codes.size()))
        throw Error(ErrorCode::InvalidInput, role + ": row " + std::to_string(row) + " not in " + path);
    return codes[row].code;
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / v.size();
}

nlohmann::ordered_json box_json(const eval::BoxStats& b)
{
    return {{"median", b.median}, {"q1", b.q1}, {"q3", b.q3}, {"whisker_low", b.whisker_low},
            {"whisker_high", b.whisker_high}, {"outliers", b.outliers}};
}

nlohmann::ordered_json fit_json(const fit::FitResult& r)
{
    return {{"loss", r.loss}, {"iterations", r.iterations}, {"converged", r.converged}};
}

vae::Dataset inside_bounds(std::span<const motion::MotionSequence> seqs, const vae::NormalizationSpec& spec,
                           int frames, int& skipped)
{
    vae::Dataset d;
    skipped = 0;
    for (const auto& s : seqs) {
        try {
            const auto part = vae::make_dataset(std::span(&s, 1), spec, frames);
            d.chi.push_back(part.chi[0]);
            d.beta.push_back(part.beta[0]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OutOfBounds)
                throw;
            ++skipped;
        }
    }
    return d;
}

vae::TrainResult train_quiet(const vae::Dataset& data, const body::BodyModel& body,
                             const vae::NormalizationSpec& spec, const vae::TrainConfig& config)
{
    const int total = config.phase1.epochs + config.phase2.epochs;
    int done = 0;
    return vae::train(data, body, spec, config, [&](const vae::CurveRow& row) {
        ++done;
        if (done == total || done % std::max(1, total / 10) == 0)
            std::cerr << "phase " << row.phase << " epoch " << row.epoch << " loss " << row.loss << '\n';
    });
}

// Commands

void cmd_gen_body(const RunConfig& cfg, Manifest& m)
{
    const vae::TrainConfig t = cfg.train_config();
    const body::BodyModel body = body::make_synthetic_body(t.arch.joints, cfg.integer("body.vertices"), t.arch.betas,
                                                           pipeline::derive_seed(cfg.seed(), 0));
    body::save_body(body, m.output("body.json"));
    body::save_markers(body::default_marker_vertices(body), m.output("markers.json"));
    m.metrics()["vertices"] = body.num_vertices();
    m.metrics()["joints"] = body.num_joints();
    m.metrics()["betas"] = body.num_betas();
}

void cmd_gen_data(const RunConfig& cfg, Manifest& m)
{
    const vae::TrainConfig t = cfg.train_config();
    pipeline::CorpusOptions opts;
    opts.vertices = cfg.integer("body.vertices");
    opts.train_count = cfg.integer("data.train_count");
    opts.test_count = cfg.integer("data.test_count");
    const std::uint64_t seed = cfg.seed();
    const pipeline::Corpus corpus = pipeline::make_corpus(t.arch, opts, seed);

    body::save_body(corpus.body, m.output("body.json"));
    body::save_markers(body::default_marker_vertices(corpus.body), m.output("markers.json"));
    motion::write_sequences(m.output("train.mseq"), corpus.train);
    motion::write_sequences(m.output("test.mseq"), corpus.test);

    const double fps = cfg.num("data.fps");
    const int cycles = cfg.integer("data.cycles");
    std::vector<motion::MotionSequence> longs;
    nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
    for (int i = 0; i < cfg.integer("data.long_count"); ++i) {
        auto ls = pipeline::make_long_sequence(corpus.body, cycles, fps, pipeline::derive_seed(seed, 100 + i));
        bounds.push_back(ls.boundaries);
        longs.push_back(std::move(ls.sequence));
    }
    motion::write_sequences(m.output("long.mseq"), longs);
    motion::write_sequences(m.output("refs.mseq"),
                            pipeline::make_reference_cycles(corpus.body, fps, pipeline::derive_seed(seed, 3)));

    if (!corpus.test.empty()) {
        const int n = corpus.test[0].num_frames();
        const int observed = std::min(cfg.integer("data.obs_frames"), n);
        pipeline::ObservationOptions o;
        for (int k = 0; k < observed; ++k)
            o.frames.push_back(observed == 1 ? 0 : static_cast<int>(std::lround(k * (n - 1.0) / (observed - 1))));
        o.points_per_frame = cfg.integer("data.obs_points");
        o.markers = true;
        fit::write_observation(pipeline::make_observation(corpus.test[0], corpus.body, o, pipeline::derive_seed(seed, 4)),
                               m.output("test.sobs"));
    }
    m.metrics()["train_sequences"] = corpus.train.size();
    m.metrics()["test_sequences"] = corpus.test.size();
    m.metrics()["long_boundaries"] = bounds;
    m.metrics()["translation_bound"] = {corpus.spec.translation_bound(0), corpus.spec.translation_bound(1),
                                        corpus.spec.translation_bound(2)};
    m.metrics()["max_frame_delta"] = corpus.spec.max_frame_delta;
}

void cmd_segment(const RunConfig& cfg, Manifest& m, const std::string& long_path)
{
    const auto longs = load_sequences_input("long", long_path, m);
    const auto refs = load_sequences_input("refs", cfg.str("segment.refs"), m);
    motion::SegmentOptions opts;
    opts.start_stride = cfg.integer("segment.start_stride");
    const double threshold = cfg.num("segment.threshold");

    eval::Table table;
    table.header = {"sequence", "first_frame", "last_frame", "seconds", "distance"};
    std::vector<motion::MotionSequence> cycles;
    nlohmann::ordered_json counts = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < longs.size(); ++i) {
        const auto segs = motion::segment_cycles(longs[i], refs, threshold, opts);
        counts.push_back(segs.size());
        for (const auto& s : segs) {
            const double secs = longs[i].frames[s.last_frame].time - longs[i].frames[s.first_frame].time;
            table.rows.push_back({std::to_string(i), std::to_string(s.first_frame), std::to_string(s.last_frame),
                                  eval::format_double(secs), eval::format_double(s.distance)});
            cycles.push_back(s.sequence);
        }
    }
    eval::export_csv(table, m.output("segments.csv"));
    motion::write_sequences(m.output("segments.mseq"), cycles);
    m.metrics()["segments_per_sequence"] = counts;
    m.metrics()["segments"] = cycles.size();
}

void cmd_train(const RunConfig& cfg, Manifest& m)
{
    const vae::TrainConfig t = cfg.train_config();
    const body::BodyModel body = load_body_input(cfg, m);
    if (body.num_joints() != t.arch.joints || body.num_betas() != t.arch.betas)
        throw Error(ErrorCode::ShapeMismatch, "body asset joints/betas do not match train.arch");
    const auto seqs = load_sequences_input("train", cfg.str("data.train"), m);
    if (seqs.empty())
        throw Error(ErrorCode::EmptyInput, "training file holds no sequences");
    const vae::NormalizationSpec spec = motion::fit_normalization(seqs, t.arch.frames);
    const vae::Dataset data = vae::make_dataset(seqs, spec, t.arch.frames);
    const vae::TrainResult res = train_quiet(data, body, spec, t);

    vae::save_checkpoint(res.phase1, res.record, m.output("phase1.ckpt"));
    vae::save_checkpoint(res.model, res.record, m.output("model.ckpt"));
    vae::write_curve_csv(res.record, m.output("curve.csv"));
    const auto& curve = res.record.curve;
    if (!curve.empty()) {
        m.metrics()["phase1_first_loss"] = curve.front().loss;
        if (t.phase1.epochs > 0)
            m.metrics()["phase1_last_loss"] = curve[t.phase1.epochs - 1].loss;
        m.metrics()["final_loss"] = curve.back().loss;
        m.metrics()["final_kl"] = curve.back().kl;
    }
    m.metrics()["train_sequences"] = data.size();
    m.metrics()["train_error_m"] = mean_of(eval::vae_reconstruction_error(res.model, data, body));
}

void cmd_encode(const RunConfig& cfg, Manifest& m, const std::string& data_path)
{
    const vae::MotionVae model = load_model_input(cfg, m);
    const auto seqs = load_sequences_input("data", data_path, m);
    std::vector<eval::LabeledCode> codes;
    const std::string stem = std::filesystem::path(data_path).stem().string();
    for (std::size_t i = 0; i < seqs.size(); ++i)
        codes.push_back({pipeline::encode_sequence(model, seqs[i]), stem + "_" + std::to_string(i)});
    eval::export_latents(codes, m.output("latents.csv"));
    m.metrics()["codes"] = codes.size();
}

void cmd_decode(const RunConfig& cfg, Manifest& m, const std::string& latents)
{
    const vae::MotionVae model = load_model_input(cfg, m);
    m.input("latents", latents);
    const auto codes = eval::read_latents(latents);
    std::vector<motion::MotionSequence> out;
    nlohmann::ordered_json durations = nlohmann::ordered_json::array();
    for (const auto& c : codes) {
        out.push_back(fit::decode_sequence(model, c.code));
        durations.push_back(out.back().duration());
    }
    motion::write_sequences(m.output("decoded.mseq"), out);
    m.metrics()["durations"] = durations;
}

void cmd_interpolate(const RunConfig& cfg, Manifest& m, const std::string& a_spec, const std::string& b_spec,
                     int steps)
{
    if (steps < 2)
        throw Error(ErrorCode::InvalidConfig, "--steps must be at least 2");
    const vae::MotionVae model = load_model_input(cfg, m);
    const body::BodyModel body = load_body_input(cfg, m);
    check_compatible(body, model);
    const vae::LatentCode a = read_code(a_spec, "a", m);
    const vae::LatentCode b = read_code(b_spec, "b", m);
    std::vector<motion::MotionSequence> seqs;
    nlohmann::ordered_json ts = nlohmann::ordered_json::array(), durations = nlohmann::ordered_json::array();
    for (int i = 0; i < steps; ++i) {
        const double t = i == steps - 1 ? 1.0 : static_cast<double>(i) / (steps - 1);
        seqs.push_back(fit::interpolate(model, a, b, t));
        char name[32];
        std::snprintf(name, sizeof name, "step_%02d", i);
        eval::export_obj(seqs.back(), body, m.output(name));
        ts.push_back(t);
        durations.push_back(seqs.back().duration());
    }
    motion::write_sequences(m.output("interpolation.mseq"), seqs);
    bool increasing = true, decreasing = true;
    for (int i = 1; i < steps; ++i) {
        increasing &= seqs[i].duration() > seqs[i - 1].duration();
        decreasing &= seqs[i].duration() < seqs[i - 1].duration();
    }
    m.metrics()["t"] = ts;
    m.metrics()["durations"] = durations;
    m.metrics()["strictly_monotone"] = increasing || decreasing;
}

void cmd_predict(const RunConfig& cfg, Manifest& m, const std::string& data_path, int index, int observed)
{
    const vae::MotionVae model = load_model_input(cfg, m);
    const body::BodyModel body = load_body_input(cfg, m);
    check_compatible(body, model);
    const auto seqs = load_sequences_input("data", data_path, m);
    if (index < 0 || index >= static_cast<int>(seqs.size()))
        throw Error(ErrorCode::InvalidInput, "--index out of range for " + data_path);
    const motion::MotionSequence& truth = seqs[index];
    const int n = model.arch().frames;
    if (observed <= 0)
        observed = std::max(1, static_cast<int>(std::lround(0.25 * n)));
    const fit::FitResult r = fit::predict(pipeline::prefix(truth, std::min(observed, truth.num_frames())), body,
                                          model, cfg.fit_options());
    motion::write_sequences(m.output("prediction.mseq"), std::span(&r.sequence, 1));
    m.metrics()["fit"] = fit_json(r);
    m.metrics()["observed_frames"] = observed;
    if (truth.num_frames() == n)
        m.metrics()["mean_vertex_error_m"] = eval::mean_vertex_error(truth, r.sequence, body);
}

void cmd_complete(const RunConfig& cfg, Manifest& m, const std::string& obs_path)
{
    const vae::MotionVae model = load_model_input(cfg, m);
    const body::BodyModel body = load_body_input(cfg, m);
    check_compatible(body, model);
    m.input("observation", obs_path);
    fit::SparseObservation obs = fit::read_observation(obs_path);
    bool markers = false;
    for (const auto& f : obs.frames)
        markers |= f.markers.has_value();
    if (markers)
        obs.marker_vertex_ids = marker_ids_for(cfg, body, m);
    const fit::FitResult r = fit::complete(obs, body, model, cfg.fit_options());
    motion::write_sequences(m.output("completion.mseq"), std::span(&r.sequence, 1));
    m.metrics()["fit"] = fit_json(r);
    m.metrics()["observed_frames"] = obs.frames.size();
}

void cmd_eval(const RunConfig& cfg, Manifest& m)
{
    const vae::MotionVae model = load_model_input(cfg, m);
    const body::BodyModel body = load_body_input(cfg, m);
    check_compatible(body, model);
    const auto train_seqs = load_sequences_input("train", cfg.str("data.train"), m);
    const auto test_seqs = load_sequences_input("test", cfg.str("data.test"), m);
    const vae::Architecture arch = model.arch();
    const vae::NormalizationSpec& spec = model.normalization;

    int skipped_train = 0, skipped_test = 0;
    const vae::Dataset train = inside_bounds(train_seqs, spec, arch.frames, skipped_train);
    const vae::Dataset test = inside_bounds(test_seqs, spec, arch.frames, skipped_test);
    if (test.size() == 0)
        throw Error(ErrorCode::EmptyInput, "no test sequence lies inside the model's normalization bounds");

    // Reconstruction: VAE against PCA at the same latent budget.
    const int d = arch.dim_z + arch.betas;
    const eval::PcaModel pca = eval::pca_fit(eval::stack_rows(train), d);
    const auto vae_err = eval::vae_reconstruction_error(model, test, body);
    const auto pca_err = eval::pca_baseline_error(pca, test, body, spec, arch.layout());

    eval::Table per_seq;
    per_seq.header = {"sequence", "vae_error_m", "pca_error_m"};
    for (int i = 0; i < test.size(); ++i)
        per_seq.rows.push_back({std::to_string(i), eval::format_double(vae_err[i]), eval::format_double(pca_err[i])});
    eval::export_csv(per_seq, m.output("metrics.csv"));

    eval::Table summary;
    summary.header = {"method", "count", "mean", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers"};
    auto add_summary = [&](const std::string& name, const std::vector<double>& e) {
        const eval::BoxStats b = eval::tukey(e);
        summary.rows.push_back({name, std::to_string(e.size()), eval::format_double(mean_of(e)),
                                eval::format_double(b.median), eval::format_double(b.q1), eval::format_double(b.q3),
                                eval::format_double(b.whisker_low), eval::format_double(b.whisker_high),
                                std::to_string(b.outliers)});
        m.metrics()[name] = box_json(b);
        m.metrics()[name]["mean"] = mean_of(e);
    };
    add_summary("vae", vae_err);
    add_summary("pca", pca_err);

    // Per-frame error curves: reconstruction and prediction from the first quarter.
    std::vector<std::vector<double>> vae_frames, pca_frames, pred_frames;
    const Eigen::MatrixXd pca_rec = eval::pca_reconstruct(pca, eval::stack_rows(test));
    for (int i = 0; i < test.size(); ++i) {
        const auto truth = motion::denormalize(test.chi[i], arch.layout(), spec, test.beta[i]);
        const auto post = model.encode(test.chi[i]);
        const auto vae_seq = motion::denormalize(model.decode({post.mu, test.beta[i]}), arch.layout(), spec, test.beta[i]);
        const auto pca_seq = motion::denormalize(pca_rec.row(i).head(arch.chi_size()).transpose(), arch.layout(), spec,
                                                 test.beta[i]);
        vae_frames.push_back(eval::frame_errors(truth, vae_seq, body));
        pca_frames.push_back(eval::frame_errors(truth, pca_seq, body));
    }
    const int predict_count = std::min(cfg.integer("eval.predict_count"), test.size());
    const int observed = std::max(1, static_cast<int>(std::lround(0.25 * arch.frames)));
    std::vector<double> pred_err;
    for (int i = 0; i < predict_count; ++i) {
        const auto truth = motion::denormalize(test.chi[i], arch.layout(), spec, test.beta[i]);
        const auto r = fit::predict(pipeline::prefix(truth, observed), body, model, cfg.fit_options());
        pred_frames.push_back(eval::frame_errors(truth, r.sequence, body));
        pred_err.push_back(eval::mean_vertex_error(truth, r.sequence, body));
    }
    if (!pred_err.empty())
        add_summary("predict", pred_err);
    eval::export_csv(summary, m.output("summary.csv"));

    const auto vae_curve = eval::error_curve(vae_frames);
    const auto pca_curve = eval::error_curve(pca_frames);
    const auto pred_curve = eval::error_curve(pred_frames);
    eval::Table curve;
    curve.header = {"frame", "vae_error_m", "pca_error_m", "predict_error_m"};
    for (std::size_t k = 0; k < vae_curve.size(); ++k)
        curve.rows.push_back({std::to_string(k), eval::format_double(vae_curve[k]), eval::format_double(pca_curve[k]),
                              k < pred_curve.size() ? eval::format_double(pred_curve[k]) : ""});
    eval::export_csv(curve, m.output("curve.csv"));

    // Sweeps retrain on the training file with one hyperparameter changed.
    const std::vector<int> dims = cfg.int_list("eval.latent_dims");
    const std::vector<double> omegas = cfg.num_list("eval.omega_kl");
    if (!dims.empty() || !omegas.empty()) {
        const vae::TrainConfig base = cfg.train_config();
        if (base.arch.frames != arch.frames || base.arch.joints != arch.joints || base.arch.betas != arch.betas)
            throw Error(ErrorCode::InvalidConfig, "train.arch does not match the evaluated model");
        const vae::NormalizationSpec train_spec = motion::fit_normalization(train_seqs, arch.frames);
        const vae::Dataset sweep_train = vae::make_dataset(train_seqs, train_spec, arch.frames);
        int skipped = 0;
        const vae::Dataset sweep_test = inside_bounds(test_seqs, train_spec, arch.frames, skipped);
        eval::Table sweep;
        sweep.header = {"parameter", "value", "vae_mean_m", "vae_median_m", "pca_mean_m"};
        auto run = [&](const std::string& name, const std::string& value, vae::TrainConfig tc) {
            std::cerr << "sweep " << name << " = " << value << '\n';
            const auto res = train_quiet(sweep_train, body, train_spec, tc);
            const auto e = eval::vae_reconstruction_error(res.model, sweep_test, body);
            const auto p = eval::pca_fit(eval::stack_rows(sweep_train), tc.arch.dim_z + tc.arch.betas);
            const auto pe = eval::pca_baseline_error(p, sweep_test, body, train_spec, tc.arch.layout());
            sweep.rows.push_back({name, value, eval::format_double(mean_of(e)),
                                  eval::format_double(eval::tukey(e).median), eval::format_double(mean_of(pe))});
        };
        for (int dz : dims) {
            vae::TrainConfig tc = base;
            tc.arch.dim_z = dz;
            run("dim_z", std::to_string(dz), tc);
        }
        for (double w : omegas) {
            vae::TrainConfig tc = base;
            tc.omega_kl = w;
            run("omega_kl", eval::format_double(w), tc);
        }
        eval::export_csv(sweep, m.output("sweep.csv"));
    }
    m.metrics()["test_sequences"] = test.size();
    m.metrics()["skipped_test_sequences"] = skipped_test;
    m.metrics()["pca_dim"] = d;
}

void cmd_export_obj(const RunConfig& cfg, Manifest& m, const std::string& data_path, int index)
{
    const body::BodyModel body = load_body_input(cfg, m);
    const auto seqs = load_sequences_input("data", data_path, m);
    if (index < 0 || index >= static_cast<int>(seqs.size()))
        throw Error(ErrorCode::InvalidInput, "--index out of range for " + data_path);
    m.metrics()["frames"] = eval::export_obj(seqs[index], body, m.output("obj"));
}

int exit_code(const Error& e)
{
    switch (e.error_class()) {
    case ErrorClass::Usage: return 1;
    case ErrorClass::Data: return 2;
    case ErrorClass::Numerical: return 3;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Motion space: a variational autoencoder over whole gait cycles"};
    app.require_subcommand(1);
    Common common;
    std::map<std::string, Command> commands;

    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        Command& c = commands[name];
        c.app = app.add_subcommand(name, help);
        c.app->add_option("--config", common.config, "key = value config file")->check(CLI::ExistingFile);
        c.app->add_option("--out", common.out, "output directory")->required();
        c.app->add_option("--seed", common.seed, "global seed (overrides MOTIONSPACE_SEED and the config)");
        c.app->add_option("--preset", common.preset, "desk or paper");
        c.app->add_option("--threads", common.threads, "worker cap; all pipelines run sequentially")
            ->check(CLI::PositiveNumber);
        c.app->add_option("--set", common.overrides, "config override key=value (repeatable)");
        return c;
    };

    std::string long_path, data_path, latents, a_spec, b_spec, obs_path;
    int steps = 5, index = 0, observed = 0;
    bool no_dense = false, no_markers = false;

    add("gen-body", "write a synthetic body asset and its marker sidecar").run = cmd_gen_body;
    add("gen-data", "write body, training/test cycles, long sequences, references and a test observation")
        .run = cmd_gen_data;

    {
        Command& c = add("segment", "cut single gait cycles out of long sequences");
        c.app->add_option("--long", long_path, "long sequences (.mseq)")->required();
        c.bind("--refs", "segment.refs", "reference cycles (.mseq)");
        c.bind("--threshold", "segment.threshold", "DTW acceptance threshold");
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_segment(cfg, m, long_path); };
    }
    {
        Command& c = add("train", "two-phase training; writes phase1.ckpt, model.ckpt and curve.csv");
        c.bind("--body", "body.path", "body asset (.json)");
        c.bind("--train", "data.train", "training cycles (.mseq)");
        c.run = cmd_train;
    }
    {
        Command& c = add("encode", "posterior means of sequences as a latent CSV");
        c.bind("--model", "model.path", "checkpoint");
        c.app->add_option("--data", data_path, "sequences (.mseq)")->required();
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_encode(cfg, m, data_path); };
    }
    {
        Command& c = add("decode", "decode every row of a latent CSV");
        c.bind("--model", "model.path", "checkpoint");
        c.app->add_option("--latents", latents, "latent CSV")->required();
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_decode(cfg, m, latents); };
    }
    {
        Command& c = add("interpolate", "decode linear blends of two codes as OBJ sequences");
        c.bind("--model", "model.path", "checkpoint");
        c.bind("--body", "body.path", "body asset (.json)");
        c.app->add_option("--a", a_spec, "first code: latents.csv[:row]")->required();
        c.app->add_option("--b", b_spec, "second code: latents.csv[:row]")->required();
        c.app->add_option("--steps", steps, "number of blends including both ends")->capture_default_str();
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_interpolate(cfg, m, a_spec, b_spec, steps); };
    }
    {
        Command& c = add("predict", "fit a code to the first frames of a sequence and decode the rest");
        c.bind("--model", "model.path", "checkpoint");
        c.bind("--body", "body.path", "body asset (.json)");
        c.app->add_option("--data", data_path, "sequences (.mseq)")->required();
        c.app->add_option("--index", index, "sequence index in --data")->capture_default_str();
        c.app->add_option("--observed", observed, "observed frames (default: a quarter of the model's frames)");
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_predict(cfg, m, data_path, index, observed); };
    }
    {
        Command& c = add("complete", "fit a code to a sparse observation (.sobs)");
        c.bind("--model", "model.path", "checkpoint");
        c.bind("--body", "body.path", "body asset (.json); markers.json is read from its directory");
        c.app->add_option("--obs", obs_path, "observation file")->required();
        c.app->add_flag("--no-dense", no_dense, "ignore the point clouds");
        c.app->add_flag("--no-markers", no_markers, "ignore the marker tracks");
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_complete(cfg, m, obs_path); };
    }
    {
        Command& c = add("eval", "VAE vs PCA errors, error curves, box statistics and sweeps");
        c.bind("--model", "model.path", "checkpoint");
        c.bind("--body", "body.path", "body asset (.json)");
        c.bind("--train", "data.train", "training cycles (.mseq)");
        c.bind("--test", "data.test", "test cycles (.mseq)");
        c.run = cmd_eval;
    }
    {
        Command& c = add("export-obj", "write one OBJ per frame of a sequence");
        c.bind("--body", "body.path", "body asset (.json)");
        c.app->add_option("--data", data_path, "sequences (.mseq)")->required();
        c.app->add_option("--index", index, "sequence index in --data")->capture_default_str();
        c.run = [&](const RunConfig& cfg, Manifest& m) { cmd_export_obj(cfg, m, data_path, index); };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (auto& [name, cmd] : commands) {
        if (!cmd.app->parsed())
            continue;
        try {
            RunConfig cfg = build_config(common, cmd);
            if (no_dense)
                cfg.set("fit.use_dense", "false");
            if (no_markers)
                cfg.set("fit.use_markers", "false");
            Eigen::setNbThreads(common.threads);
            Manifest manifest(name, cfg, common.out);
            cmd.run(cfg, manifest);
            manifest.write();
            return 0;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code(e);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }
    return 1;
}
