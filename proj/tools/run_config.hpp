#pragma once

#include "motionspace/latentfit.hpp"
#include "motionspace/motionvae.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace motionspace::cli {

/// Effective key = value settings of one command. Values come from the preset,
/// then the config file, then command-line overrides.
class RunConfig
{
public:
    /// Preset defaults for every known key.
    static RunConfig defaults(const std::string& preset);

    /// Lines of `key = value`; '#' starts a comment. Unknown keys throw
    /// InvalidConfig naming the key and line.
    void merge_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    int integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> num_list(const std::string& key) const;
    std::vector<int> int_list(const std::string& key) const;

    std::uint64_t seed() const;
    vae::TrainConfig train_config() const;
    fit::FitOptions fit_options() const;

    /// Sorted `key=value` lines; the hash input.
    std::string canonical() const;
    std::uint64_t hash() const;
    nlohmann::ordered_json to_json() const;

private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t file_hash(const std::filesystem::path& path);
std::string hex(std::uint64_t v);

/// Output directory, manifest contents and the files written, in order.
class Manifest
{
public:
    Manifest(std::string command, const RunConfig& config, std::filesystem::path out_dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path output(const std::string& name);
    /// Records an input file with the hash of its bytes; throws IoError when it
    /// does not exist.
    void input(const std::string& role, const std::filesystem::path& path);
    nlohmann::ordered_json& metrics() { return metrics_; }

    void write() const;

private:
    std::string command_;
    nlohmann::ordered_json config_;
    std::uint64_t config_hash_;
    std::uint64_t seed_;
    std::filesystem::path dir_;
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::object();
    std::vector<std::string> outputs_;
    nlohmann::ordered_json metrics_ = nlohmann::ordered_json::object();
};

} // namespace motionspace::cli
