#include "volstab/returns.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "volstab/csv.hpp"
#include "volstab/errors.hpp"

namespace volstab {

double mean(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    const double mu = mean(values);
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mu) * (v - mu);
    }
    return std::sqrt(ss / static_cast<double>(values.size()));
}

ReturnSeries make_return_series(std::string ticker, std::vector<double> returns) {
    ReturnSeries rs{std::move(ticker), std::move(returns), 0.0};
    rs.sigma = population_stddev(rs.returns);
    return rs;
}

namespace {

struct Column {
    PriceSeries series;
    std::size_t dropped = 0;
};

// A missing or non-positive price is dropped; anything else non-numeric is an error.
void add_price(Column& col, const std::string& date, std::string_view cell, std::size_t line,
               std::size_t column, const std::string& source) {
    if (csv::trim(cell).empty()) {
        ++col.dropped;
        return;
    }
    const double p = csv::parse_double(cell, line, column, source);
    if (!std::isfinite(p) || p <= 0.0) {
        ++col.dropped;
        return;
    }
    if (!col.series.dates.empty() && !(col.series.dates.back() < date)) {
        throw InputError(source + ": line " + std::to_string(line) +
                         ": dates must be strictly increasing ('" + date + "' after '" +
                         col.series.dates.back() + "')");
    }
    col.series.dates.push_back(date);
    col.series.prices.push_back(p);
}

void finish(std::vector<Column>& cols, PriceLoad& out) {
    for (auto& col : cols) {
        const bool skip = col.series.prices.size() < 2;
        if (skip || col.dropped > 0) {
            out.issues.push_back({col.series.ticker, col.dropped, skip});
        }
        if (!skip) {
            out.series.push_back(std::move(col.series));
        }
    }
}

void load_per_stock_file(const std::filesystem::path& file, PriceLoad& out) {
    csv::Reader reader(file);
    std::vector<std::string> row;
    if (!reader.next(row)) {
        throw InputError(reader.source() + ": empty file");
    }
    if (row.size() != 2 || row[0] != "date" || row[1] != "close") {
        throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                         ": expected header 'date,close'");
    }
    std::vector<Column> cols(1);
    cols[0].series.ticker = file.stem().string();
    while (reader.next(row)) {
        if (row.size() != 2) {
            throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                             ": expected 2 fields, found " + std::to_string(row.size()));
        }
        add_price(cols[0], row[0], row[1], reader.line(), 2, reader.source());
    }
    finish(cols, out);
}

void load_wide(const std::filesystem::path& file, PriceLoad& out) {
    csv::Reader reader(file);
    std::vector<std::string> header;
    if (!reader.next(header)) {
        throw InputError(reader.source() + ": empty file");
    }
    if (header.size() < 2 || header[0] != "date") {
        throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                         ": expected header 'date,<ticker>,...'");
    }
    std::vector<Column> cols(header.size() - 1);
    for (std::size_t j = 1; j < header.size(); ++j) {
        cols[j - 1].series.ticker = header[j];
    }
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() != header.size()) {
            throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                             ": expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(row.size()));
        }
        for (std::size_t j = 1; j < row.size(); ++j) {
            add_price(cols[j - 1], row[0], row[j], reader.line(), j + 1, reader.source());
        }
    }
    finish(cols, out);
}

}  // namespace

PriceLoad load_prices(const std::filesystem::path& path, PriceLayout layout) {
    PriceLoad out;
    if (layout == PriceLayout::kWideMatrix) {
        load_wide(path, out);
        return out;
    }
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw InputError(path.string() + ": no .csv files");
        }
        for (const auto& f : files) {
            load_per_stock_file(f, out);
        }
        return out;
    }
    load_per_stock_file(path, out);
    return out;
}

ReturnSeries to_returns(const PriceSeries& p) {
    if (p.prices.size() < 2) {
        throw std::invalid_argument("to_returns: series '" + p.ticker +
                                    "' needs at least two prices");
    }
    std::vector<double> r(p.prices.size() - 1);
    for (std::size_t t = 1; t < p.prices.size(); ++t) {
        r[t - 1] = (p.prices[t] - p.prices[t - 1]) / p.prices[t - 1];
    }
    return make_return_series(p.ticker, std::move(r));
}

MarketStats market_stats(std::span<const ReturnSeries> rs) {
    if (rs.empty()) {
        throw std::invalid_argument("market_stats: no series");
    }
    MarketStats stats;
    stats.n_series = rs.size();
    std::vector<double> sigmas;
    sigmas.reserve(rs.size());
    for (const auto& s : rs) {
        stats.per_series_sigma.emplace_back(s.ticker, s.sigma);
        sigmas.push_back(s.sigma);
    }
    // Fixed summation order keeps the mean independent of list order.
    std::sort(sigmas.begin(), sigmas.end());
    stats.sigma_bar = mean(sigmas);
    return stats;
}

void write_returns_csv(std::ostream& os, std::span<const ReturnSeries> rs) {
    os << "ticker,day_index,return\n";
    for (const auto& s : rs) {
        for (std::size_t i = 0; i < s.returns.size(); ++i) {
            os << s.ticker << ',' << i << ',' << csv::format_double(s.returns[i]) << '\n';
        }
    }
}

std::vector<ReturnSeries> read_returns_csv(const std::filesystem::path& path) {
    csv::Reader reader(path);
    reader.expect_header({"ticker", "day_index", "return"});
    std::vector<ReturnSeries> out;
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() != 3) {
            throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                             ": expected 3 fields");
        }
        const auto index = csv::parse_integer(row[1], reader.line(), 2, reader.source());
        const double r = csv::parse_double(row[2], reader.line(), 3, reader.source());
        if (out.empty() || out.back().ticker != row[0]) {
            out.push_back({row[0], {}, 0.0});
        }
        auto& series = out.back().returns;
        if (index != static_cast<long long>(series.size())) {
            throw InputError(reader.source() + ": line " + std::to_string(reader.line()) +
                             ": day_index " + row[1] + " out of sequence for ticker " + row[0]);
        }
        series.push_back(r);
    }
    if (out.empty()) {
        throw InputError(reader.source() + ": no returns");
    }
    for (auto& s : out) {
        s.sigma = population_stddev(s.returns);
    }
    return out;
}

nlohmann::ordered_json stats_to_json(const MarketStats& stats) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [ticker, sigma] : stats.per_series_sigma) {
        per[ticker] = sigma;
    }
    nlohmann::ordered_json j;
    j["n_series"] = stats.n_series;
    j["sigma_bar"] = stats.sigma_bar;
    j["per_series_sigma"] = per;
    return j;
}

}  // namespace volstab
