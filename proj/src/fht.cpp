#include "volstab/fht.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <exception>
#include <thread>

#include "volstab/csv.hpp"
#include "volstab/errors.hpp"

namespace volstab {

void ThresholdWindow::validate() const {
    if (!std::isfinite(theta_i) || !std::isfinite(theta_f) || !std::isfinite(sigma_bar)) {
        throw std::invalid_argument("window '" + id + "': non-finite threshold");
    }
    if (sigma_bar <= 0.0) {
        throw std::invalid_argument("window '" + id + "': sigma_bar must be positive");
    }
    if (direction == Direction::kCrash && !(theta_f < theta_i)) {
        throw std::invalid_argument("window '" + id + "': crash needs theta_f < theta_i");
    }
    if (direction == Direction::kRally && !(theta_f > theta_i)) {
        throw std::invalid_argument("window '" + id + "': rally needs theta_f > theta_i");
    }
}

ThresholdWindow ThresholdWindow::mirrored() const {
    ThresholdWindow w = *this;
    w.theta_i = -theta_i;
    w.theta_f = -theta_f;
    w.direction = direction == Direction::kCrash ? Direction::kRally : Direction::kCrash;
    return w;
}

std::string_view to_string(Direction d) { return d == Direction::kCrash ? "crash" : "rally"; }

Direction parse_direction(std::string_view s) {
    if (s == "crash") return Direction::kCrash;
    if (s == "rally") return Direction::kRally;
    throw std::invalid_argument("unknown direction '" + std::string(s) + "' (crash|rally)");
}

EntryRule parse_entry_rule(std::string_view s) {
    if (s == "crossing") return EntryRule::kCrossing;
    if (s == "level") return EntryRule::kLevel;
    throw std::invalid_argument("unknown entry rule '" + std::string(s) + "' (crossing|level)");
}

std::string_view to_string(EntryRule r) { return r == EntryRule::kCrossing ? "crossing" : "level"; }

VolatilitySpan parse_volatility_span(std::string_view s) {
    if (s == "both") return VolatilitySpan::kBoth;
    if (s == "no-entry") return VolatilitySpan::kExcludeEntry;
    if (s == "no-hit") return VolatilitySpan::kExcludeHit;
    throw std::invalid_argument("unknown volatility span '" + std::string(s) +
                                "' (both|no-entry|no-hit)");
}

std::string_view to_string(VolatilitySpan s) {
    switch (s) {
        case VolatilitySpan::kBoth: return "both";
        case VolatilitySpan::kExcludeEntry: return "no-entry";
        case VolatilitySpan::kExcludeHit: return "no-hit";
    }
    return "both";
}

std::vector<FhtEpisode> extract_episodes(const ReturnSeries& rs, const ThresholdWindow& w,
                                         const EpisodeOptions& opts) {
    w.validate();
    // Work in crash orientation; a rally is a crash of the negated series.
    const double sign = w.direction == Direction::kCrash ? 1.0 : -1.0;
    const double entry = sign * w.entry_level();
    const double hit = sign * w.hit_level();
    const auto& r = rs.returns;
    const std::size_t n = r.size();

    std::vector<FhtEpisode> out;
    std::size_t t = 0;
    while (t < n) {
        const double cur = sign * r[t];
        const bool entered =
            cur <= entry && (opts.entry_rule == EntryRule::kLevel || t == 0 || sign * r[t - 1] > entry);
        if (!entered) {
            ++t;
            continue;
        }
        if (cur <= hit) {
            ++t;  // pass-through jump: no time spent inside the window
            continue;
        }
        std::size_t u = t + 1;
        while (u < n && sign * r[u] > hit) {
            ++u;
        }
        if (u == n) {
            break;  // censored
        }
        std::size_t first = t;
        std::size_t last = u;
        if (opts.span == VolatilitySpan::kExcludeEntry) ++first;
        if (opts.span == VolatilitySpan::kExcludeHit) --last;
        const std::span<const double> sub(r.data() + first, last - first + 1);
        out.push_back({rs.ticker, t, u - t, population_stddev(sub)});
        t = u + 1;
    }
    return out;
}

std::vector<WindowEpisodes> sweep_windows(std::span<const ReturnSeries> rs,
                                          std::span<const ThresholdWindow> windows,
                                          const EpisodeOptions& opts, unsigned threads) {
    for (const auto& w : windows) {
        w.validate();
    }
    std::vector<WindowEpisodes> out(windows.size());
    const std::size_t tasks = windows.size();
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tasks, 1))));

    auto run = [&](std::size_t k) {
        out[k].window = windows[k];
        for (const auto& s : rs) {
            auto eps = extract_episodes(s, windows[k], opts);
            out[k].episodes.insert(out[k].episodes.end(), std::make_move_iterator(eps.begin()),
                                   std::make_move_iterator(eps.end()));
        }
    };
    if (threads == 1) {
        for (std::size_t k = 0; k < tasks; ++k) run(k);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < tasks; k += threads) run(k);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::string window_id(std::string_view prefix, double theta_i, double theta_f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_ti%+.2f_tf%+.2f", theta_i, theta_f);
    return std::string(prefix) + buf;
}

namespace {

// Multipliers are built from integer tenths so every family member is the
// double nearest its decimal value.
ThresholdWindow make_window(std::string id, int ti_tenths, int tf_tenths, double sigma_bar,
                            Direction d) {
    return {std::move(id), ti_tenths / 10.0, tf_tenths / 10.0, sigma_bar, d};
}

}  // namespace

bool is_window_family(std::string_view name) {
    return name == "fig1a" || name == "fig1b" || name == "fig1c" || name == "fig2a" ||
           name == "fig2b" || name == "fig2c";
}

std::vector<ThresholdWindow> window_family(std::string_view name, double sigma_bar) {
    if (!is_window_family(name)) {
        throw std::invalid_argument("unknown window family '" + std::string(name) + "'");
    }
    const bool crash = name.substr(0, 4) == "fig1";
    const int s = crash ? 1 : -1;
    const Direction d = crash ? Direction::kCrash : Direction::kRally;
    const char kind = name.back();
    const std::string prefix(name);

    std::vector<ThresholdWindow> out;
    if (kind == 'a') {
        out.push_back(make_window(prefix, -1 * s, -15 * s, sigma_bar, d));
    } else if (kind == 'b') {
        // Fixed width 1.4, start threshold sliding from +0.9 down to -1.6 (crash).
        for (int ti = 9; ti >= -16; --ti) {
            const int tf = ti - 14;
            out.push_back(make_window(window_id(prefix, s * ti / 10.0, s * tf / 10.0), s * ti,
                                      s * tf, sigma_bar, d));
        }
    } else {
        // Fixed start -0.1, final threshold from -0.5 to -3.0 (crash).
        for (int tf = -5; tf >= -30; --tf) {
            out.push_back(make_window(window_id(prefix, -0.1 * s, s * tf / 10.0), -1 * s, s * tf,
                                      sigma_bar, d));
        }
    }
    return out;
}

void write_episodes_header(std::ostream& os) {
    os << "ticker,window_id,theta_i,theta_f,start_index,fht,volatility\n";
}

void write_episodes_csv(std::ostream& os, const WindowEpisodes& we) {
    const std::string ti = csv::format_double(we.window.theta_i);
    const std::string tf = csv::format_double(we.window.theta_f);
    for (const auto& e : we.episodes) {
        os << e.ticker << ',' << we.window.id << ',' << ti << ',' << tf << ',' << e.start_index
           << ',' << e.fht << ',' << csv::format_double(e.volatility) << '\n';
    }
}

std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path) {
    csv::Reader reader(path);
    reader.expect_header(
        {"ticker", "window_id", "theta_i", "theta_f", "start_index", "fht", "volatility"});
    std::vector<EpisodeRecord> out;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const auto line = reader.line();
        const auto& src = reader.source();
        if (row.size() != 7) {
            throw InputError(src + ": line " + std::to_string(line) + ": expected 7 fields");
        }
        EpisodeRecord rec;
        rec.window_id = row[1];
        rec.theta_i = csv::parse_double(row[2], line, 3, src);
        rec.theta_f = csv::parse_double(row[3], line, 4, src);
        const auto start = csv::parse_integer(row[4], line, 5, src);
        const auto fht = csv::parse_integer(row[5], line, 6, src);
        if (start < 0 || fht < 1) {
            throw InputError(src + ": line " + std::to_string(line) +
                             ": start_index must be >= 0 and fht >= 1");
        }
        rec.episode = {row[0], static_cast<std::size_t>(start), static_cast<std::size_t>(fht),
                       csv::parse_double(row[6], line, 7, src)};
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace volstab
