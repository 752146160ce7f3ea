#include "run_config.hpp"

#include "motionspace/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace motionspace::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string shortest(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += shortest(values[i]);
        else
            out += std::to_string(values[i]);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected)
{
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(trim(item));
    return out;
}

} // namespace

RunConfig RunConfig::defaults(const std::string& preset)
{
    vae::TrainConfig t;
    RunConfig c;
    auto& v = c.values_;
    if (preset == "desk") {
        t = vae::TrainConfig::desk();
        v["body.vertices"] = "200";
        v["data.train_count"] = "512";
    } else if (preset == "paper") {
        t = vae::TrainConfig::paper();
        v["body.vertices"] = "1000";
        v["data.train_count"] = "4096";
    } else {
        throw Error(ErrorCode::InvalidConfig, "preset must be 'desk' or 'paper', got '" + preset + "'");
    }
    v["preset"] = preset;
    v["seed"] = "1";
    v["body.path"] = "";
    v["model.path"] = "";
    v["data.train"] = "";
    v["data.test"] = "";
    v["data.test_count"] = "64";
    v["data.long_count"] = "5";
    v["data.cycles"] = "3";
    v["data.fps"] = "30";
    v["data.obs_points"] = "50";
    v["data.obs_frames"] = "20";

    v["train.arch.frames"] = std::to_string(t.arch.frames);
    v["train.arch.joints"] = std::to_string(t.arch.joints);
    v["train.arch.betas"] = std::to_string(t.arch.betas);
    v["train.arch.dim_z"] = std::to_string(t.arch.dim_z);
    v["train.arch.encoder_hidden"] = join(t.arch.encoder_hidden);
    v["train.arch.decoder_hidden"] = join(t.arch.decoder_hidden);
    v["train.omega_kl"] = shortest(t.omega_kl);
    v["train.squared_kl"] = t.squared_kl ? "true" : "false";
    v["train.phase1.epochs"] = std::to_string(t.phase1.epochs);
    v["train.phase1.lr"] = shortest(t.phase1.lr);
    v["train.phase1.batch"] = std::to_string(t.phase1.batch);
    v["train.phase2.epochs"] = std::to_string(t.phase2.epochs);
    v["train.phase2.lr"] = shortest(t.phase2.lr);
    v["train.phase2.batch"] = std::to_string(t.phase2.batch);
    v["train.weight_update_every"] = std::to_string(t.weight_update_every);
    v["train.weight_lr"] = shortest(t.weight_lr);

    v["segment.refs"] = "";
    v["segment.threshold"] = "0.2";
    v["segment.start_stride"] = "5";

    const fit::FitOptions f;
    v["fit.iterations"] = std::to_string(f.iterations);
    v["fit.lr"] = shortest(f.lr);
    v["fit.patience"] = std::to_string(f.patience);
    v["fit.min_rel_improvement"] = shortest(f.min_rel_improvement);
    v["fit.weight_update_every"] = std::to_string(f.weight_update_every);
    v["fit.weight_lr"] = shortest(f.weight_lr);
    v["fit.restarts"] = std::to_string(f.restarts);
    v["fit.restart_sigma"] = shortest(f.restart_sigma);
    v["fit.prediction_prior"] = shortest(f.prediction_prior);
    v["fit.completion_prior"] = shortest(f.completion_prior);
    v["fit.use_dense"] = "true";
    v["fit.use_markers"] = "true";

    v["eval.latent_dims"] = "8,16,32";
    v["eval.omega_kl"] = "0,3e-05,0.0001";
    v["eval.predict_count"] = "10";
    return c;
}

void RunConfig::merge_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open config file " + path.string());
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = path.string() + ":" + std::to_string(number);
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidConfig, where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (!has(key))
            throw Error(ErrorCode::InvalidConfig, where + ": unknown config key '" + key + "'");
        values_[key] = trim(line.substr(eq + 1));
    }
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    if (!has(key))
        throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    values_[key] = trim(value);
}

std::string RunConfig::str(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::num(const std::string& key) const
{
    const std::string s = str(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        bad_value(key, s, "a finite number");
    return v;
}

int RunConfig::integer(const std::string& key) const
{
    const std::string s = str(key);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        bad_value(key, s, "an integer");
    return v;
}

bool RunConfig::flag(const std::string& key) const
{
    const std::string s = str(key);
    if (s == "true" || s == "1")
        return true;
    if (s == "false" || s == "0")
        return false;
    bad_value(key, s, "true or false");
}

std::vector<double> RunConfig::num_list(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& item : split(str(key))) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            bad_value(key, str(key), "a comma-separated list of numbers");
        out.push_back(v);
    }
    return out;
}

std::vector<int> RunConfig::int_list(const std::string& key) const
{
    std::vector<int> out;
    for (const auto& item : split(str(key))) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            bad_value(key, str(key), "a comma-separated list of integers");
        out.push_back(v);
    }
    return out;
}

std::uint64_t RunConfig::seed() const
{
    const std::string s = str("seed");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        bad_value("seed", s, "a non-negative integer");
    return v;
}

vae::TrainConfig RunConfig::train_config() const
{
    vae::TrainConfig t;
    t.arch.frames = integer("train.arch.frames");
    t.arch.joints = integer("train.arch.joints");
    t.arch.betas = integer("train.arch.betas");
    t.arch.dim_z = integer("train.arch.dim_z");
    t.arch.encoder_hidden = int_list("train.arch.encoder_hidden");
    t.arch.decoder_hidden = int_list("train.arch.decoder_hidden");
    t.omega_kl = num("train.omega_kl");
    t.squared_kl = flag("train.squared_kl");
    t.phase1 = {integer("train.phase1.epochs"), num("train.phase1.lr"), integer("train.phase1.batch")};
    t.phase2 = {integer("train.phase2.epochs"), num("train.phase2.lr"), integer("train.phase2.batch")};
    t.weight_update_every = integer("train.weight_update_every");
    t.weight_lr = num("train.weight_lr");
    t.seed = seed();
    t.validate();
    return t;
}

fit::FitOptions RunConfig::fit_options() const
{
    fit::FitOptions f;
    f.iterations = integer("fit.iterations");
    f.lr = num("fit.lr");
    f.patience = integer("fit.patience");
    f.min_rel_improvement = num("fit.min_rel_improvement");
    f.weight_update_every = integer("fit.weight_update_every");
    f.weight_lr = num("fit.weight_lr");
    f.restarts = integer("fit.restarts");
    f.restart_sigma = num("fit.restart_sigma");
    f.prediction_prior = num("fit.prediction_prior");
    f.completion_prior = num("fit.completion_prior");
    f.seed = seed();
    f.use_dense = flag("fit.use_dense");
    f.use_markers = flag("fit.use_markers");
    if (f.iterations < 0 || !(f.lr > 0.0) || f.patience < 1 || f.weight_update_every < 1 || f.restarts < 0 ||
        !(f.restart_sigma >= 0.0) || !(f.prediction_prior >= 0.0) || !(f.completion_prior >= 0.0))
        throw Error(ErrorCode::InvalidConfig, "fit.iterations, fit.lr, fit.patience, fit.weight_update_every, "
                                              "fit.restarts, fit.restart_sigma and the fit priors must be positive");
    return f;
}

std::string RunConfig::canonical() const
{
    std::string out;
    for (const auto& [k, v] : values_)
        out += k + "=" + v + "\n";
    return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

nlohmann::ordered_json RunConfig::to_json() const
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : values_)
        j[k] = v;
    return j;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t file_hash(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    return h;
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Manifest::Manifest(std::string command, const RunConfig& config, std::filesystem::path out_dir)
    : command_(std::move(command)), config_(config.to_json()), config_hash_(config.hash()),
      seed_(config.seed()), dir_(std::move(out_dir))
{
    if (dir_.empty())
        throw Error(ErrorCode::InvalidConfig, "--out is required");
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot create output directory " + dir_.string());
}

std::filesystem::path Manifest::output(const std::string& name)
{
    outputs_.push_back(name);
    return dir_ / name;
}

void Manifest::input(const std::string& role, const std::filesystem::path& path)
{
    if (path.empty())
        throw Error(ErrorCode::InvalidConfig, "missing input path for " + role);
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::IoError, role + " file does not exist: " + path.string());
    inputs_[role] = {{"path", path.string()}, {"fnv1a", hex(file_hash(path))}};
}

void Manifest::write() const
{
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["seed"] = seed_;
    j["config_hash"] = hex(config_hash_);
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["metrics"] = metrics_;
    j["config"] = config_;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + (dir_ / "manifest.json").string());
    out << j.dump(2) << '\n';
}

} // namespace motionspace::cli
