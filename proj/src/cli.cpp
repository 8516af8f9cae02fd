#include "volstab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "volstab/compare.hpp"
#include "volstab/config.hpp"
#include "volstab/csv.hpp"
#include "volstab/errors.hpp"
#include "volstab/fht.hpp"
#include "volstab/model.hpp"
#include "volstab/returns.hpp"
#include "volstab/stats.hpp"

namespace volstab {
namespace {

class EmptyResult : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Keys that steer the invocation but never change its outputs.
const std::set<std::string> kNonReplayKeys = {"config", "out", "threads"};

/// Options of one subcommand, captured as text and turned into Settings after parsing.
struct Registry {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void option(const std::string& names, const std::string& help) {
        const std::string key = normalize_key(first_long_name(names));
        options.emplace_back(key, app->add_option(names, text[key], help));
    }

    void flag(const std::string& names, const std::string& help) {
        const std::string key = normalize_key(first_long_name(names));
        options.emplace_back(key, app->add_flag(names, flags[key], help));
    }

    [[nodiscard]] Settings given() const {
        Settings s;
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            const auto f = flags.find(key);
            s[key] = f != flags.end() ? (f->second ? "true" : "false") : text.at(key);
        }
        return s;
    }

    static std::string first_long_name(const std::string& names) {
        std::stringstream ss(names);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part.rfind("--", 0) == 0) return part;
        }
        return names;
    }
};

void add_shared(Registry& r) {
    r.option("--config", "key = value file, or a manifest.json to replay");
    r.option("--seed", "master seed");
    r.option("--out", "output directory (default runs/<timestamp>-<command>-seed<seed>)");
    r.option("--threads", "worker threads");
}

void add_model_options(Registry& r) {
    for (const char* key : {"m", "n", "a", "b", "c", "v_start", "x0", "x_escape", "dt",
                            "day_length", "steps_per_day", "days", "n_series"}) {
        std::string names = std::string("--") + key;
        if (std::string(key).find('_') != std::string::npos) {
            std::string dashed = key;
            std::replace(dashed.begin(), dashed.end(), '_', '-');
            names += ",--" + dashed;
        }
        r.option(names, std::string("model/simulation parameter ") + key);
    }
    r.flag("--skip-trajectories", "do not write trajectories.csv");
}

void add_input_options(Registry& r) {
    r.option("--returns", "returns CSV (ticker,day_index,return)");
    r.option("--prices", "price CSV file or directory");
    r.option("--layout", "price layout: per-stock|wide");
}

void add_window_options(Registry& r) {
    r.option("--window", "fig1a|fig1b|fig1c|fig2a|fig2b|fig2c|manual");
    r.option("--theta-i", "manual start multiplier");
    r.option("--theta-f", "manual final multiplier");
    r.option("--direction", "manual direction: crash|rally");
    r.option("--entry-rule", "crossing|level");
    r.option("--vol-span", "episode volatility span: both|no-entry|no-hit");
    r.option("--sigma-bar", "market volatility override");
}

void add_curve_options(Registry& r) {
    r.option("--bins", "number of volatility bins");
    r.option("--min-count", "minimum episodes per reported bin");
    r.option("--prominence", "edge ratio required for an interior maximum");
}

// ---------------------------------------------------------------------------

struct RunDir {
    std::filesystem::path path;

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
        const auto file = path / name;
        std::ofstream os(file, std::ios::binary);
        if (!os) {
            throw OutputError("cannot write " + file.string());
        }
        body(os);
        os.flush();
        if (!os) {
            throw OutputError("write failed for " + file.string());
        }
    }

    void write_json(const std::string& name, const nlohmann::ordered_json& j) const {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
};

RunDir make_run_dir(const Settings& s, const std::string& command, std::uint64_t seed) {
    std::filesystem::path dir = get_string(s, "out", "");
    if (dir.empty()) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
        dir = std::filesystem::path("runs") /
              (std::string(stamp) + "-" + command + "-seed" + std::to_string(seed));
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw OutputError("cannot create output directory " + dir.string());
    }
    return {dir};
}

Settings replayable(const Settings& s) {
    Settings out;
    for (const auto& [k, v] : s) {
        if (!kNonReplayKeys.contains(k)) out[k] = v;
    }
    return out;
}

unsigned threads_from(const Settings& s) {
    const auto t = get_integer(s, "threads", 1);
    if (t < 1 || t > 1024) throw ConfigError("threads must be in [1, 1024]");
    return static_cast<unsigned>(t);
}

struct Dataset {
    std::vector<ReturnSeries> series;
    std::vector<std::pair<std::string, std::string>> digests;
};

Dataset load_dataset(const Settings& s, std::ostream& err) {
    Dataset d;
    const auto returns = get_string(s, "returns", "");
    const auto prices = get_string(s, "prices", "");
    if (returns.empty() == prices.empty()) {
        throw ConfigError("give exactly one of --returns or --prices");
    }
    if (!returns.empty()) {
        d.series = read_returns_csv(returns);
        d.digests.emplace_back(returns, sha256_file(returns));
        return d;
    }
    const auto layout_name = get_string(s, "layout", "per-stock");
    PriceLayout layout;
    if (layout_name == "per-stock") {
        layout = PriceLayout::kPerStock;
    } else if (layout_name == "wide") {
        layout = PriceLayout::kWideMatrix;
    } else {
        throw ConfigError("layout must be per-stock or wide");
    }
    const auto load = load_prices(prices, layout);
    for (const auto& issue : load.issues) {
        err << "warning: " << issue.ticker << ": " << issue.dropped_rows
            << " row(s) with missing or non-positive price dropped"
            << (issue.skipped ? "; series skipped (fewer than 2 prices)" : "") << '\n';
    }
    if (load.series.empty()) {
        throw InputError(prices + ": no usable price series");
    }
    for (const auto& p : load.series) {
        d.series.push_back(to_returns(p));
    }
    if (std::filesystem::is_directory(prices)) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(prices)) {
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) d.digests.emplace_back(f.string(), sha256_file(f));
    } else {
        d.digests.emplace_back(prices, sha256_file(prices));
    }
    return d;
}

Binning curve_binning(const Settings& s) {
    Binning b = default_curve_binning();
    const auto bins = get_integer(s, "bins", 30);
    if (bins < 1 || bins > 100000) throw ConfigError("bins must be in [1, 100000]");
    b.bins = static_cast<std::size_t>(bins);
    return b;
}

std::size_t min_count_from(const Settings& s) {
    const auto m = get_integer(s, "min_count", 5);
    if (m < 1) throw ConfigError("min-count must be at least 1");
    return static_cast<std::size_t>(m);
}

template <typename F>
auto as_config_error(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------------------

int cmd_simulate(Settings s, std::ostream& out, std::ostream& err) {
    const ModelParams mp = model_params_from(s);
    const SimConfig cfg = sim_config_from(s);
    const unsigned threads = threads_from(s);
    const bool skip_traj = get_bool(s, "skip_trajectories", false);
    const RunDir dir = make_run_dir(s, "simulate", cfg.seed);

    err << "simulate: " << cfg.n_series << " series x " << cfg.days << " days, "
        << cfg.steps_per_day << " steps/day, seed " << cfg.seed << '\n';
    const auto trajectories = simulate_ensemble(mp, cfg, threads);

    std::vector<ReturnSeries> returns;
    std::size_t escapes = 0;
    returns.reserve(trajectories.size());
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        escapes += trajectories[i].escapes;
        if (trajectories[i].x.size() >= 2) {
            returns.push_back(daily_returns(trajectories[i], series_ticker(i)));
        }
    }

    if (!skip_traj) {
        dir.write("trajectories.csv", [&](std::ostream& os) {
            os << "series,day,x,v\n";
            for (std::size_t i = 0; i < trajectories.size(); ++i) {
                const auto& t = trajectories[i];
                for (std::size_t d = 0; d < t.x.size(); ++d) {
                    os << i << ',' << d << ',' << csv::format_double(t.x[d]) << ','
                       << csv::format_double(t.v[d]) << '\n';
                }
            }
        });
    }
    dir.write("returns.csv", [&](std::ostream& os) { write_returns_csv(os, returns); });

    RunManifest manifest;
    manifest.subcommand = "simulate";
    store(s, mp, cfg);
    s["skip_trajectories"] = skip_traj ? "true" : "false";
    manifest.config = replayable(s);
    manifest.seed = cfg.seed;
    manifest.results["feller_ratio"] = mp.cir.feller_ratio();
    manifest.results["escapes"] = escapes;

    if (!returns.empty()) {
        const auto stats = market_stats(returns);
        dir.write_json("stats.json", stats_to_json(stats));
        manifest.results["sigma_bar"] = stats.sigma_bar;
        out << "sigma_bar " << csv::format_double(stats.sigma_bar) << '\n';
    }
    dir.write_json("manifest.json", to_json(manifest));
    out << "wrote " << dir.path.string() << '\n';
    return kExitOk;
}

std::vector<ThresholdWindow> windows_from(const Settings& s, double sigma_bar) {
    const auto name = get_string(s, "window", "fig1a");
    if (name == "manual") {
        const auto ti = get_optional_double(s, "theta_i");
        const auto tf = get_optional_double(s, "theta_f");
        if (!ti || !tf) {
            throw ConfigError("manual window needs --theta-i and --theta-f");
        }
        const Direction d = as_config_error([&] {
            return parse_direction(get_string(s, "direction", *tf < *ti ? "crash" : "rally"));
        });
        ThresholdWindow w{window_id("manual", *ti, *tf), *ti, *tf, sigma_bar, d};
        as_config_error([&] {
            w.validate();
            return 0;
        });
        return {w};
    }
    if (!is_window_family(name)) {
        throw ConfigError("unknown window '" + name + "'");
    }
    return window_family(name, sigma_bar);
}

int cmd_analyze(Settings s, std::ostream& out, std::ostream& err) {
    const unsigned threads = threads_from(s);
    EpisodeOptions opts;
    as_config_error([&] {
        opts.entry_rule = parse_entry_rule(get_string(s, "entry_rule", "crossing"));
        opts.span = parse_volatility_span(get_string(s, "vol_span", "both"));
        return 0;
    });
    const Binning binning = curve_binning(s);
    const std::size_t min_count = min_count_from(s);
    const double prominence = get_double(s, "prominence", 1.5);

    const Dataset data = load_dataset(s, err);
    const MarketStats stats = market_stats(data.series);
    const double sigma_bar = get_double(s, "sigma_bar", stats.sigma_bar);
    if (!(sigma_bar > 0.0)) {
        throw InputError("sigma_bar is not positive; use --sigma-bar");
    }
    const auto windows = windows_from(s, sigma_bar);
    const RunDir dir = make_run_dir(s, "analyze", get_u64(s, "seed", 0));

    const auto swept = sweep_windows(data.series, windows, opts, threads);

    dir.write_json("stats.json", stats_to_json(stats));
    dir.write("episodes.csv", [&](std::ostream& os) {
        write_episodes_header(os);
        for (const auto& we : swept) write_episodes_csv(os, we);
    });
    dir.write("return_pdf.csv",
              [&](std::ostream& os) { write_histogram_csv(os, return_pdf(data.series)); });

    std::size_t total = 0;
    nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
    for (const auto& we : swept) {
        total += we.episodes.size();
        if (we.episodes.empty()) {
            Verdict v;
            v.window_id = we.window.id;
            auto j = to_json(v);
            j["episodes"] = 0;
            verdicts.push_back(j);
            MfhtCurve empty;
            empty.window_id = we.window.id;
            dir.write("curve_" + we.window.id + ".csv",
                      [&](std::ostream& os) { write_curve_csv(os, empty); });
            continue;
        }
        MfhtCurve curve = mfht_curve(we.episodes, binning, min_count);
        curve.window_id = we.window.id;
        curve.theta_i = we.window.theta_i;
        curve.theta_f = we.window.theta_f;
        const Verdict v = nonmonotonicity_verdict(curve, prominence);
        auto j = to_json(v);
        j["episodes"] = we.episodes.size();
        verdicts.push_back(j);
        dir.write("curve_" + we.window.id + ".csv",
                  [&](std::ostream& os) { write_curve_csv(os, curve); });
        if (swept.size() == 1) {
            dir.write_json("verdict.json", to_json(v));
            dir.write("fht_pdf.csv",
                      [&](std::ostream& os) { write_histogram_csv(os, fht_pdf(we.episodes)); });
            dir.write("vol_pdf.csv",
                      [&](std::ostream& os) { write_histogram_csv(os, vol_pdf(we.episodes)); });
        }
        out << we.window.id << ": " << we.episodes.size() << " episodes, "
            << v.populated_bins << " populated bins, interior_maximum "
            << (v.interior_maximum ? "true" : "false") << '\n';
    }
    dir.write_json("verdicts.json", verdicts);

    RunManifest manifest;
    manifest.subcommand = "analyze";
    s["window"] = get_string(s, "window", "fig1a");
    s["entry_rule"] = std::string(to_string(opts.entry_rule));
    s["vol_span"] = std::string(to_string(opts.span));
    s["bins"] = std::to_string(binning.bins);
    s["min_count"] = std::to_string(min_count);
    s["prominence"] = csv::format_double(prominence);
    manifest.config = replayable(s);
    manifest.input_digests = data.digests;
    manifest.results["sigma_bar"] = sigma_bar;
    manifest.results["episodes"] = total;
    dir.write_json("manifest.json", to_json(manifest));

    if (total == 0) {
        throw EmptyResult("no episodes found for the requested window(s)");
    }
    out << "wrote " << dir.path.string() << '\n';
    return kExitOk;
}

std::map<std::string, std::vector<FhtEpisode>> episodes_by_window(const Settings& s,
                                                                  RunManifest& manifest) {
    const auto path = get_string(s, "episodes", "");
    if (path.empty()) throw ConfigError("--episodes is required");
    const auto records = read_episodes_csv(path);
    manifest.input_digests.emplace_back(path, sha256_file(path));
    const auto only = get_string(s, "window_id", "");
    std::map<std::string, std::vector<FhtEpisode>> grouped;
    for (const auto& r : records) {
        if (only.empty() || r.window_id == only) grouped[r.window_id].push_back(r.episode);
    }
    if (grouped.empty()) throw EmptyResult("no episodes in " + path);
    return grouped;
}

int cmd_mfht(Settings s, std::ostream& out, std::ostream&) {
    const Binning binning = curve_binning(s);
    const std::size_t min_count = min_count_from(s);
    const double prominence = get_double(s, "prominence", 1.5);
    RunManifest manifest;
    manifest.subcommand = "mfht";
    const auto grouped = episodes_by_window(s, manifest);
    const RunDir dir = make_run_dir(s, "mfht", 0);

    nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
    for (const auto& [id, eps] : grouped) {
        MfhtCurve curve = mfht_curve(eps, binning, min_count);
        curve.window_id = id;
        const Verdict v = nonmonotonicity_verdict(curve, prominence);
        verdicts.push_back(to_json(v));
        dir.write("curve_" + id + ".csv", [&](std::ostream& os) { write_curve_csv(os, curve); });
        out << id << ": interior_maximum " << (v.interior_maximum ? "true" : "false") << '\n';
    }
    dir.write_json("verdicts.json", verdicts);
    s["bins"] = std::to_string(binning.bins);
    s["min_count"] = std::to_string(min_count);
    manifest.config = replayable(s);
    dir.write_json("manifest.json", to_json(manifest));
    return kExitOk;
}

int cmd_fht_pdf(Settings s, std::ostream& out, std::ostream&) {
    Binning binning = default_fht_binning();
    const auto bins = get_integer(s, "bins", 30);
    if (bins < 1) throw ConfigError("bins must be positive");
    binning.bins = static_cast<std::size_t>(bins);
    RunManifest manifest;
    manifest.subcommand = "fht-pdf";
    const auto grouped = episodes_by_window(s, manifest);
    const RunDir dir = make_run_dir(s, "fht-pdf", 0);
    for (const auto& [id, eps] : grouped) {
        const auto h = fht_pdf(eps, binning);
        dir.write("fht_pdf_" + id + ".csv", [&](std::ostream& os) { write_histogram_csv(os, h); });
        out << id << ": " << h.total << " episodes, modal bin " << h.modal_bin() << '\n';
    }
    manifest.config = replayable(s);
    dir.write_json("manifest.json", to_json(manifest));
    return kExitOk;
}

int cmd_acf(Settings s, std::ostream& out, std::ostream& err) {
    const auto max_lag = get_integer(s, "max_lag", 20);
    if (max_lag < 0) throw ConfigError("max-lag must be non-negative");
    const bool absolute = get_bool(s, "absolute", false);
    const auto ticker = get_string(s, "ticker", "");
    const Dataset data = load_dataset(s, err);
    const RunDir dir = make_run_dir(s, "acf", 0);

    AcfSeries a;
    try {
        if (ticker.empty()) {
            a = ensemble_acf(data.series, static_cast<std::size_t>(max_lag), absolute);
        } else {
            const auto it = std::find_if(data.series.begin(), data.series.end(),
                                         [&](const auto& r) { return r.ticker == ticker; });
            if (it == data.series.end()) throw InputError("ticker '" + ticker + "' not found");
            a = acf(*it, static_cast<std::size_t>(max_lag), absolute);
        }
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    dir.write("acf.csv", [&](std::ostream& os) { write_acf_csv(os, a); });

    RunManifest manifest;
    manifest.subcommand = "acf";
    s["max_lag"] = std::to_string(max_lag);
    s["absolute"] = absolute ? "true" : "false";
    manifest.config = replayable(s);
    manifest.input_digests = data.digests;
    dir.write_json("manifest.json", to_json(manifest));
    out << "wrote " << (dir.path / "acf.csv").string() << '\n';
    return kExitOk;
}

int cmd_compare(Settings s, std::ostream& out, std::ostream&) {
    const auto a_path = get_string(s, "empirical", "");
    const auto b_path = get_string(s, "model", "");
    if (a_path.empty() || b_path.empty()) {
        throw ConfigError("--empirical and --model curve files are required");
    }
    const double prominence = get_double(s, "prominence", 1.5);
    const auto a = read_curve_csv(a_path);
    const auto b = read_curve_csv(b_path);
    const auto cmp = compare_curves(a, b, prominence);
    const RunDir dir = make_run_dir(s, "compare", 0);
    dir.write_json("comparison.json", to_json(cmp));

    RunManifest manifest;
    manifest.subcommand = "compare";
    manifest.config = replayable(s);
    manifest.input_digests = {{a_path, sha256_file(a_path)}, {b_path, sha256_file(b_path)}};
    dir.write_json("manifest.json", to_json(manifest));
    out << "peak_offset_bins "
        << (cmp.peak_offset_bins ? std::to_string(*cmp.peak_offset_bins) : "none") << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Volatility/first-hitting-time toolkit: nonlinear Heston simulation and MFHT analysis",
                 "volstab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", VOLSTAB_VERSION);

    using Handler = int (*)(Settings, std::ostream&, std::ostream&);
    std::vector<std::unique_ptr<Registry>> registries;
    std::vector<Handler> handlers;
    auto sub = [&](const char* name, const char* help, Handler h) -> Registry& {
        auto r = std::make_unique<Registry>();
        r->app = app.add_subcommand(name, help);
        add_shared(*r);
        registries.push_back(std::move(r));
        handlers.push_back(h);
        return *registries.back();
    };

    auto& sim = sub("simulate", "generate a nonlinear Heston ensemble", cmd_simulate);
    add_model_options(sim);

    auto& analyze = sub("analyze", "episodes, MFHT curves and verdicts for a window or family",
                        cmd_analyze);
    add_input_options(analyze);
    add_window_options(analyze);
    add_curve_options(analyze);

    auto& mfht = sub("mfht", "MFHT curve from an episodes CSV", cmd_mfht);
    mfht.option("--episodes", "episodes CSV");
    mfht.option("--window-id", "restrict to one window");
    add_curve_options(mfht);

    auto& pdf = sub("fht-pdf", "FHT histogram from an episodes CSV", cmd_fht_pdf);
    pdf.option("--episodes", "episodes CSV");
    pdf.option("--window-id", "restrict to one window");
    pdf.option("--bins", "number of log bins before integer snapping");

    auto& acf_cmd = sub("acf", "return or absolute-return autocorrelation", cmd_acf);
    add_input_options(acf_cmd);
    acf_cmd.option("--max-lag", "largest lag (default 20)");
    acf_cmd.option("--ticker", "single series instead of the ensemble mean");
    acf_cmd.flag("--absolute", "use |r|");

    auto& cmp = sub("compare", "compare an empirical and a model MFHT curve", cmd_compare);
    cmp.option("--empirical", "curve CSV");
    cmp.option("--model", "curve CSV");
    cmp.option("--prominence", "edge ratio for the interior-maximum verdict");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    std::set<std::string> known;
    for (const auto& r : registries) {
        for (const auto& [key, opt] : r->options) known.insert(key);
    }

    for (std::size_t i = 0; i < registries.size(); ++i) {
        const auto& r = *registries[i];
        if (!r.app->parsed()) continue;
        try {
            const Settings given = r.given();
            Settings settings;
            if (const auto cfg = given.find("config"); cfg != given.end()) {
                settings = load_settings(cfg->second);
                for (const auto& [k, v] : settings) {
                    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
                }
            }
            settings = merge(std::move(settings), given);
            return handlers[i](std::move(settings), out, err);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kExitConfigError;
        } catch (const InputError& e) {
            err << "input error: " << e.what() << '\n';
            return kExitInputError;
        } catch (const EmptyResult& e) {
            err << "no data: " << e.what() << '\n';
            return kExitEmptyResult;
        } catch (const OutputError& e) {
            err << "output error: " << e.what() << '\n';
            return kExitOutputError;
        } catch (const std::invalid_argument& e) {
            err << "config error: " << e.what() << '\n';
            return kExitConfigError;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitUnexpected;
        }
    }
    return kExitUnexpected;
}

}  // namespace volstab
