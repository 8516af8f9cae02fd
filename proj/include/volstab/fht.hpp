#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "volstab/returns.hpp"

namespace volstab {

enum class Direction { kCrash, kRally };

/**
 * Start/final thresholds expressed as multiples of the market volatility.
 *
 * Crash windows run downward (theta_f < theta_i), rally windows upward.
 * The absolute levels are theta * sigma_bar.
 */
struct ThresholdWindow {
    std::string id;
    double theta_i = -0.1;
    double theta_f = -1.5;
    double sigma_bar = 0.0;
    Direction direction = Direction::kCrash;

    [[nodiscard]] double entry_level() const noexcept { return theta_i * sigma_bar; }
    [[nodiscard]] double hit_level() const noexcept { return theta_f * sigma_bar; }

    /// Throws std::invalid_argument if the thresholds disagree with the direction.
    void validate() const;

    /// Same window for sign-flipped returns.
    [[nodiscard]] ThresholdWindow mirrored() const;
};

[[nodiscard]] std::string_view to_string(Direction d);
[[nodiscard]] Direction parse_direction(std::string_view s);

enum class EntryRule {
    kCrossing,  ///< entry needs the previous return on the far side of the start threshold
    kLevel,     ///< any return at or past the start threshold opens an episode
};

/// Which part of the episode subseries feeds the volatility estimate.
enum class VolatilitySpan { kBoth, kExcludeEntry, kExcludeHit };

[[nodiscard]] EntryRule parse_entry_rule(std::string_view s);
[[nodiscard]] std::string_view to_string(EntryRule r);
[[nodiscard]] VolatilitySpan parse_volatility_span(std::string_view s);
[[nodiscard]] std::string_view to_string(VolatilitySpan s);

struct EpisodeOptions {
    EntryRule entry_rule = EntryRule::kCrossing;
    VolatilitySpan span = VolatilitySpan::kBoth;
};

struct FhtEpisode {
    std::string ticker;
    std::size_t start_index = 0;
    std::size_t fht = 0;      ///< days from entry to first hit, >= 1
    double volatility = 0.0;  ///< population std of the episode subseries
};

/**
 * Splits a return series into non-overlapping first-hitting episodes.
 *
 * Scanning left to right (crash orientation): an episode opens at t0 when
 * r(t0) <= entry level and either t0 == 0 or r(t0-1) > entry level (with
 * the crossing rule). If r(t0) is already at or past the hit level the
 * entry is discarded. Otherwise the episode closes at the first t > t0
 * with r(t) <= hit level, fht = t - t0, and scanning continues from t+1.
 * An episode still open at the end of the series is dropped.
 */
[[nodiscard]] std::vector<FhtEpisode> extract_episodes(const ReturnSeries& rs,
                                                       const ThresholdWindow& w,
                                                       const EpisodeOptions& opts = {});

struct WindowEpisodes {
    ThresholdWindow window;
    std::vector<FhtEpisode> episodes;  ///< ordered by (series order, start_index)
};

[[nodiscard]] std::vector<WindowEpisodes> sweep_windows(std::span<const ReturnSeries> rs,
                                                        std::span<const ThresholdWindow> windows,
                                                        const EpisodeOptions& opts = {},
                                                        unsigned threads = 1);

/// Built-in window sets: fig1a, fig1b, fig1c (crash) and fig2a, fig2b, fig2c (rally).
/// Throws std::invalid_argument for unknown names.
[[nodiscard]] std::vector<ThresholdWindow> window_family(std::string_view name, double sigma_bar);

[[nodiscard]] bool is_window_family(std::string_view name);

/// Window id of the form `<prefix>_ti+0.90_tf-0.50`.
[[nodiscard]] std::string window_id(std::string_view prefix, double theta_i, double theta_f);

/// `ticker,window_id,theta_i,theta_f,start_index,fht,volatility`
void write_episodes_header(std::ostream& os);
void write_episodes_csv(std::ostream& os, const WindowEpisodes& we);

struct EpisodeRecord {
    std::string window_id;
    double theta_i = 0.0;
    double theta_f = 0.0;
    FhtEpisode episode;
};

[[nodiscard]] std::vector<EpisodeRecord> read_episodes_csv(const std::filesystem::path& path);

}  // namespace volstab
