#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "volstab/model.hpp"

namespace volstab {

/// Flat key -> value settings; keys use '_' (a '-' in input is normalised to '_').
using Settings = std::map<std::string, std::string>;

[[nodiscard]] std::string normalize_key(std::string_view key);

/// `key = value` lines; '#' starts a comment. Throws ConfigError with the line number.
[[nodiscard]] Settings parse_settings(std::istream& in, std::string_view source);

/// A `.json` path is read as a run manifest (its "config" object); anything
/// else as key = value text.
[[nodiscard]] Settings load_settings(const std::filesystem::path& path);

/// Later entries win.
[[nodiscard]] Settings merge(Settings base, const Settings& overrides);

// Typed accessors. Missing keys yield the fallback; malformed values throw ConfigError.
[[nodiscard]] double get_double(const Settings& s, const std::string& key, double fallback);
[[nodiscard]] std::optional<double> get_optional_double(const Settings& s, const std::string& key);
[[nodiscard]] long long get_integer(const Settings& s, const std::string& key, long long fallback);
[[nodiscard]] std::uint64_t get_u64(const Settings& s, const std::string& key, std::uint64_t fallback);
[[nodiscard]] bool get_bool(const Settings& s, const std::string& key, bool fallback);
[[nodiscard]] std::string get_string(const Settings& s, const std::string& key,
                                     const std::string& fallback);

/// Model keys: m, n, a, b, c, v_start, x0, x_escape.
[[nodiscard]] ModelParams model_params_from(const Settings& s);
/// Simulation keys: day_length or dt, steps_per_day, days, n_series, seed.
[[nodiscard]] SimConfig sim_config_from(const Settings& s);

/// Writes every model and simulation key with its resolved value.
void store(Settings& s, const ModelParams& mp, const SimConfig& cfg);

[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::string subcommand;
    Settings config;
    std::vector<std::pair<std::string, std::string>> input_digests;  ///< path, sha256
    std::optional<std::uint64_t> seed;
    std::string tool_version = VOLSTAB_VERSION;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
};

[[nodiscard]] nlohmann::ordered_json to_json(const RunManifest& m);

}  // namespace volstab
