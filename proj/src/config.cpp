#include "volstab/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>

#include <openssl/evp.h>

#include "volstab/csv.hpp"
#include "volstab/errors.hpp"

namespace volstab {

std::string normalize_key(std::string_view key) {
    std::string k(csv::trim(key));
    while (!k.empty() && k.front() == '-') {
        k.erase(k.begin());
    }
    for (auto& ch : k) {
        if (ch == '-') ch = '_';
    }
    return k;
}

Settings parse_settings(std::istream& in, std::string_view source) {
    Settings out;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (const auto hash = text.find('#'); hash != std::string::npos) {
            text.erase(hash);
        }
        const auto body = csv::trim(text);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(source) + ": line " + std::to_string(line) +
                              ": expected 'key = value'");
        }
        const std::string key = normalize_key(body.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(std::string(source) + ": line " + std::to_string(line) +
                              ": empty key");
        }
        out[key] = std::string(csv::trim(body.substr(eq + 1)));
    }
    return out;
}

Settings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    if (path.extension() != ".json") {
        return parse_settings(in, path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
        throw ConfigError(path.string() + ": manifest has no 'config' object");
    }
    Settings out;
    for (const auto& [key, value] : j["config"].items()) {
        out[normalize_key(key)] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return out;
}

Settings merge(Settings base, const Settings& overrides) {
    for (const auto& [k, v] : overrides) {
        base[k] = v;
    }
    return base;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
    throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

}  // namespace

double get_double(const Settings& s, const std::string& key, double fallback) {
    return get_optional_double(s, key).value_or(fallback);
}

std::optional<double> get_optional_double(const Settings& s, const std::string& key) {
    const auto it = s.find(key);
    if (it == s.end() || it->second.empty()) {
        return std::nullopt;
    }
    const std::string& v = it->second;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        bad_value(key, v, "a finite number");
    }
    return out;
}

long long get_integer(const Settings& s, const std::string& key, long long fallback) {
    const auto it = s.find(key);
    if (it == s.end() || it->second.empty()) {
        return fallback;
    }
    const std::string& v = it->second;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        bad_value(key, v, "an integer");
    }
    return out;
}

std::uint64_t get_u64(const Settings& s, const std::string& key, std::uint64_t fallback) {
    const auto it = s.find(key);
    if (it == s.end() || it->second.empty()) {
        return fallback;
    }
    const std::string& v = it->second;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        bad_value(key, v, "an unsigned 64-bit integer");
    }
    return out;
}

bool get_bool(const Settings& s, const std::string& key, bool fallback) {
    const auto it = s.find(key);
    if (it == s.end() || it->second.empty()) {
        return fallback;
    }
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::string get_string(const Settings& s, const std::string& key, const std::string& fallback) {
    const auto it = s.find(key);
    return it == s.end() ? fallback : it->second;
}

ModelParams model_params_from(const Settings& s) {
    ModelParams mp;
    mp.potential.m = get_double(s, "m", mp.potential.m);
    mp.potential.n = get_double(s, "n", mp.potential.n);
    mp.cir.a = get_double(s, "a", mp.cir.a);
    mp.cir.b = get_double(s, "b", mp.cir.b);
    mp.cir.c = get_double(s, "c", mp.cir.c);
    mp.cir.v_start = get_double(s, "v_start", mp.cir.v_start);
    mp.x0 = get_double(s, "x0", mp.x0);
    mp.x_escape = get_optional_double(s, "x_escape");
    try {
        validate(mp);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return mp;
}

SimConfig sim_config_from(const Settings& s) {
    SimConfig cfg;
    const auto steps = get_integer(s, "steps_per_day", cfg.steps_per_day);
    const auto days = get_integer(s, "days", cfg.days);
    const auto n_series = get_integer(s, "n_series", cfg.n_series);
    if (steps < 1 || steps > 1'000'000) throw ConfigError("steps_per_day must be in [1, 1e6]");
    if (days < 0 || days > 100'000'000) throw ConfigError("days must be in [0, 1e8]");
    if (n_series < 1 || n_series > 10'000'000) throw ConfigError("n_series must be in [1, 1e7]");
    cfg.steps_per_day = static_cast<int>(steps);
    cfg.days = static_cast<int>(days);
    cfg.n_series = static_cast<int>(n_series);
    cfg.seed = get_u64(s, "seed", cfg.seed);

    const auto day_length = get_optional_double(s, "day_length");
    const auto dt = get_optional_double(s, "dt");
    if (day_length) {
        cfg.day_length = *day_length;
    }
    if (dt) {
        const double implied = *dt * cfg.steps_per_day;
        if (day_length && std::abs(implied - *day_length) > 1e-12 * *day_length) {
            throw ConfigError("dt * steps_per_day disagrees with day_length");
        }
        cfg.day_length = implied;
    }
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

void store(Settings& s, const ModelParams& mp, const SimConfig& cfg) {
    auto num = [](double v) { return csv::format_double(v); };
    s["m"] = num(mp.potential.m);
    s["n"] = num(mp.potential.n);
    s["a"] = num(mp.cir.a);
    s["b"] = num(mp.cir.b);
    s["c"] = num(mp.cir.c);
    s["v_start"] = num(mp.cir.v_start);
    s["x0"] = num(mp.x0);
    if (mp.x_escape) {
        s["x_escape"] = num(*mp.x_escape);
    }
    s["day_length"] = num(cfg.day_length);
    s.erase("dt");
    s["steps_per_day"] = std::to_string(cfg.steps_per_day);
    s["days"] = std::to_string(cfg.days);
    s["n_series"] = std::to_string(cfg.n_series);
    s["seed"] = std::to_string(cfg.seed);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest init failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["subcommand"] = m.subcommand;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nullptr;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.config) {
        cfg[k] = v;
    }
    j["config"] = std::move(cfg);
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : m.input_digests) {
        inputs.push_back({{"path", path}, {"sha256", digest}});
    }
    j["inputs"] = std::move(inputs);
    j["results"] = m.results;
    return j;
}

}  // namespace volstab
