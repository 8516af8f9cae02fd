#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace volstab {

struct PriceSeries {
    std::string ticker;
    std::vector<std::string> dates;  ///< ISO dates, strictly increasing
    std::vector<double> prices;      ///< strictly positive
};

struct ReturnSeries {
    std::string ticker;
    std::vector<double> returns;
    double sigma = 0.0;  ///< population standard deviation of returns
};

struct MarketStats {
    std::size_t n_series = 0;
    double sigma_bar = 0.0;
    std::vector<std::pair<std::string, double>> per_series_sigma;
};

enum class PriceLayout { kPerStock, kWideMatrix };

/// Per-ticker data-quality report from load_prices.
struct LoadIssue {
    std::string ticker;
    std::size_t dropped_rows = 0;  ///< missing or non-positive prices
    bool skipped = false;          ///< fewer than two valid prices remained
};

struct PriceLoad {
    std::vector<PriceSeries> series;
    std::vector<LoadIssue> issues;
};

[[nodiscard]] double mean(std::span<const double> values);

/// Population standard deviation (divides by the count). 0 for empty input.
[[nodiscard]] double population_stddev(std::span<const double> values);

[[nodiscard]] ReturnSeries make_return_series(std::string ticker, std::vector<double> returns);

/**
 * Loads closing prices.
 *
 * kPerStock: `path` is one `date,close` file (ticker = file stem) or a
 * directory of them (sorted by name). kWideMatrix: `path` is a single
 * `date,<ticker1>,<ticker2>,...` file.
 *
 * Empty or non-positive price cells are dropped and counted; a
 * non-numeric cell throws InputError naming line and column.
 */
[[nodiscard]] PriceLoad load_prices(const std::filesystem::path& path, PriceLayout layout);

/// r(t) = (p(t) - p(t-1)) / p(t-1). Throws std::invalid_argument below two prices.
[[nodiscard]] ReturnSeries to_returns(const PriceSeries& p);

/// Throws std::invalid_argument on an empty list.
[[nodiscard]] MarketStats market_stats(std::span<const ReturnSeries> rs);

/// `ticker,day_index,return`
void write_returns_csv(std::ostream& os, std::span<const ReturnSeries> rs);
[[nodiscard]] std::vector<ReturnSeries> read_returns_csv(const std::filesystem::path& path);

/// `{n_series, sigma_bar, per_series_sigma: {ticker: value}}`
[[nodiscard]] nlohmann::ordered_json stats_to_json(const MarketStats& stats);

}  // namespace volstab
