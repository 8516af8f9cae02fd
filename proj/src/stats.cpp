#include "volstab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "volstab/csv.hpp"
#include "volstab/errors.hpp"

namespace volstab {

std::vector<double> bin_edges(const Binning& binning, std::span<const double> values) {
    if (binning.bins == 0) {
        throw std::invalid_argument("bin_edges: need at least one bin");
    }
    const bool log_scale = binning.scale == BinScale::kLog;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const double v : values) {
        if (!std::isfinite(v) || (log_scale && v <= 0.0)) {
            continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (binning.lo) lo = *binning.lo;
    if (binning.hi) hi = *binning.hi;
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        throw std::invalid_argument("bin_edges: no usable range");
    }
    if (log_scale && lo <= 0.0) {
        throw std::invalid_argument("bin_edges: log bins need a positive range");
    }

    if (binning.integer_edges) {
        lo = std::floor(lo);
        hi = binning.hi ? std::ceil(hi) : std::floor(hi) + 1.0;
        if (hi <= lo) hi = lo + 1.0;
        if (log_scale && lo < 1.0) lo = 1.0;
    } else if (lo == hi) {
        if (log_scale) {
            lo /= 1.01;
            hi *= 1.01;
        } else {
            const double pad = lo != 0.0 ? std::abs(lo) * 0.01 : 1.0;
            lo -= pad;
            hi += pad;
        }
    }

    const std::size_t n = binning.bins;
    std::vector<double> edges(n + 1);
    if (log_scale) {
        const double a = std::log(lo);
        const double step = (std::log(hi) - a) / static_cast<double>(n);
        for (std::size_t i = 0; i <= n; ++i) {
            edges[i] = std::exp(a + step * static_cast<double>(i));
        }
    } else {
        const double step = (hi - lo) / static_cast<double>(n);
        for (std::size_t i = 0; i <= n; ++i) {
            edges[i] = lo + step * static_cast<double>(i);
        }
    }
    edges.front() = lo;
    edges.back() = hi;

    if (binning.integer_edges) {
        for (auto& e : edges) {
            e = std::round(e);
        }
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    return edges;
}

std::optional<std::size_t> find_bin(std::span<const double> edges, double value) {
    if (edges.size() < 2 || !(value >= edges.front()) || !(value <= edges.back())) {
        return std::nullopt;
    }
    if (value == edges.back()) {
        return edges.size() - 2;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), value);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

double Histogram::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < bins(); ++i) {
        s += density[i] * width(i);
    }
    return s;
}

std::size_t Histogram::modal_bin() const {
    return static_cast<std::size_t>(std::max_element(density.begin(), density.end()) -
                                    density.begin());
}

Histogram make_histogram(std::span<const double> values, const Binning& binning) {
    if (values.empty()) {
        throw std::invalid_argument("make_histogram: empty sample");
    }
    Histogram h;
    h.edges = bin_edges(binning, values);
    h.counts.assign(h.edges.size() - 1, 0);
    for (const double v : values) {
        if (const auto b = find_bin(h.edges, v)) {
            ++h.counts[*b];
            ++h.total;
        }
    }
    h.density.assign(h.counts.size(), 0.0);
    if (h.total > 0) {
        for (std::size_t i = 0; i < h.bins(); ++i) {
            h.density[i] = static_cast<double>(h.counts[i]) /
                           (static_cast<double>(h.total) * h.width(i));
        }
    }
    return h;
}

Binning default_fht_binning() { return {BinScale::kLog, 30, {}, {}, true}; }

Binning default_curve_binning() { return {BinScale::kLog, 30, {}, {}, false}; }

Histogram fht_pdf(std::span<const FhtEpisode> episodes, const Binning& binning) {
    if (episodes.empty()) {
        throw std::invalid_argument("fht_pdf: no episodes");
    }
    std::vector<double> values;
    values.reserve(episodes.size());
    for (const auto& e : episodes) {
        values.push_back(static_cast<double>(e.fht));
    }
    return make_histogram(values, binning);
}

Histogram return_pdf(std::span<const ReturnSeries> rs, const Binning& binning) {
    std::vector<double> pooled;
    for (const auto& s : rs) {
        pooled.insert(pooled.end(), s.returns.begin(), s.returns.end());
    }
    if (pooled.empty()) {
        throw std::invalid_argument("return_pdf: no returns");
    }
    return make_histogram(pooled, binning);
}

Histogram vol_pdf(std::span<const FhtEpisode> episodes, const Binning& binning) {
    if (episodes.empty()) {
        throw std::invalid_argument("vol_pdf: no episodes");
    }
    std::vector<double> values;
    values.reserve(episodes.size());
    for (const auto& e : episodes) {
        values.push_back(e.volatility);
    }
    return make_histogram(values, binning);
}

Histogram vol_pdf(std::span<const Trajectory> trajectories, const Binning& binning) {
    std::vector<double> values;
    for (const auto& t : trajectories) {
        for (const double v : t.v) {
            if (v > 0.0) values.push_back(std::sqrt(v));
        }
    }
    if (values.empty()) {
        throw std::invalid_argument("vol_pdf: no positive variance samples");
    }
    return make_histogram(values, binning);
}

bool is_unimodal(const Histogram& h, double z) {
    if (h.total == 0) {
        return false;
    }
    const double total = static_cast<double>(h.total);
    auto sd2 = [&](std::size_t i) {
        const double w = h.width(i);
        return static_cast<double>(h.counts[i]) / (total * total * w * w);
    };
    const std::size_t mode = h.modal_bin();
    for (std::size_t i = 0; i + 1 < h.bins(); ++i) {
        // Left of the mode density should rise, right of it fall.
        const double rise = h.density[i + 1] - h.density[i];
        const double reversal = i < mode ? -rise : rise;
        if (reversal > z * std::sqrt(sd2(i) + sd2(i + 1))) {
            return false;
        }
    }
    return true;
}

std::size_t MfhtCurve::populated_bins() const {
    return static_cast<std::size_t>(
        std::count_if(mfht.begin(), mfht.end(), [](const auto& m) { return m.has_value(); }));
}

MfhtCurve mfht_curve(std::span<const FhtEpisode> episodes, const Binning& binning,
                     std::size_t min_count) {
    if (episodes.empty()) {
        throw std::invalid_argument("mfht_curve: no episodes");
    }
    std::vector<double> vols;
    vols.reserve(episodes.size());
    for (const auto& e : episodes) {
        vols.push_back(e.volatility);
    }
    MfhtCurve c;
    c.min_count = std::max<std::size_t>(min_count, 1);
    c.edges = bin_edges(binning, vols);
    const std::size_t n = c.edges.size() - 1;
    c.counts.assign(n, 0);
    // Integer sums keep the mean independent of episode order.
    std::vector<std::uint64_t> sums(n, 0);
    for (const auto& e : episodes) {
        if (const auto b = find_bin(c.edges, e.volatility)) {
            ++c.counts[*b];
            sums[*b] += e.fht;
        } else {
            ++c.filtered;
        }
    }
    c.mfht.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
        if (c.counts[i] >= c.min_count) {
            c.mfht[i] = static_cast<double>(sums[i]) / static_cast<double>(c.counts[i]);
        }
    }
    return c;
}

std::optional<CurveMaximum> locate_maximum(const MfhtCurve& c) {
    std::vector<std::size_t> populated;
    for (std::size_t i = 0; i < c.bins(); ++i) {
        if (c.mfht[i]) populated.push_back(i);
    }
    if (populated.size() < 3) {
        return std::nullopt;
    }
    const std::size_t first = populated.front();
    const std::size_t last = populated.back();
    std::optional<CurveMaximum> best;
    for (const std::size_t i : populated) {
        const CurveMaximum cand{i, *c.mfht[i], i != first && i != last};
        if (!best || cand.mfht > best->mfht ||
            (cand.mfht == best->mfht && cand.interior && !best->interior)) {
            best = cand;
        }
    }
    return best;
}

Verdict nonmonotonicity_verdict(const MfhtCurve& c, double prominence) {
    Verdict v;
    v.window_id = c.window_id;
    v.populated_bins = c.populated_bins();
    const auto max = locate_maximum(c);
    if (!max) {
        return v;
    }
    std::optional<double> first;
    double last = 0.0;
    for (std::size_t i = 0; i < c.bins(); ++i) {
        if (c.mfht[i]) {
            if (!first) first = c.mfht[i];
            last = *c.mfht[i];
        }
    }
    v.argmax_bin = max->bin;
    v.max_mfht = max->mfht;
    v.edge_ratio_low = max->mfht / *first;
    v.edge_ratio_high = max->mfht / last;
    v.interior_maximum =
        max->interior && v.edge_ratio_low >= prominence && v.edge_ratio_high >= prominence;
    return v;
}

nlohmann::ordered_json to_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["window_id"] = v.window_id;
    j["interior_maximum"] = v.interior_maximum;
    j["argmax_bin"] = v.argmax_bin ? nlohmann::ordered_json(*v.argmax_bin) : nullptr;
    j["max_mfht"] = v.max_mfht;
    j["edge_ratio_low"] = v.edge_ratio_low;
    j["edge_ratio_high"] = v.edge_ratio_high;
    j["populated_bins"] = v.populated_bins;
    return j;
}

AcfSeries acf(std::span<const double> r, std::size_t max_lag, bool absolute) {
    const std::size_t n = r.size();
    if (n <= max_lag + 1) {
        throw std::invalid_argument("acf: series length must exceed max_lag + 1");
    }
    std::vector<double> x(r.begin(), r.end());
    if (absolute) {
        for (auto& v : x) v = std::abs(v);
    }
    const double mu = mean(x);
    for (auto& v : x) v -= mu;
    double denom = 0.0;
    for (const double v : x) denom += v * v;
    if (!(denom > 0.0)) {
        throw std::invalid_argument("acf: zero-variance series");
    }
    AcfSeries out;
    out.values.resize(max_lag + 1);
    out.values[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) {
            num += x[t] * x[t + k];
        }
        out.values[k] = num / denom;
    }
    return out;
}

AcfSeries acf(const ReturnSeries& rs, std::size_t max_lag, bool absolute) {
    return acf(std::span<const double>(rs.returns), max_lag, absolute);
}

AcfSeries ensemble_acf(std::span<const ReturnSeries> rs, std::size_t max_lag, bool absolute) {
    if (rs.empty()) {
        throw std::invalid_argument("ensemble_acf: no series");
    }
    AcfSeries out;
    out.values.assign(max_lag + 1, 0.0);
    for (const auto& s : rs) {
        const auto a = acf(s, max_lag, absolute);
        for (std::size_t k = 0; k <= max_lag; ++k) {
            out.values[k] += a.values[k];
        }
    }
    for (auto& v : out.values) {
        v /= static_cast<double>(rs.size());
    }
    out.values[0] = 1.0;
    return out;
}

namespace {

double central_moment(std::span<const double> values, double mu, int order) {
    double s = 0.0;
    for (const double v : values) {
        s += std::pow(v - mu, order);
    }
    return s / static_cast<double>(values.size());
}

}  // namespace

double skewness(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("skewness: need at least two values");
    const double mu = mean(values);
    const double m2 = central_moment(values, mu, 2);
    if (!(m2 > 0.0)) throw std::invalid_argument("skewness: zero variance");
    return central_moment(values, mu, 3) / std::pow(m2, 1.5);
}

double excess_kurtosis(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("excess_kurtosis: need at least two values");
    const double mu = mean(values);
    const double m2 = central_moment(values, mu, 2);
    if (!(m2 > 0.0)) throw std::invalid_argument("excess_kurtosis: zero variance");
    return central_moment(values, mu, 4) / (m2 * m2) - 3.0;
}

void write_curve_csv(std::ostream& os, const MfhtCurve& c) {
    os << "bin_lo,bin_hi,mfht,count\n";
    for (std::size_t i = 0; i < c.bins(); ++i) {
        os << csv::format_double(c.edges[i]) << ',' << csv::format_double(c.edges[i + 1]) << ','
           << (c.mfht[i] ? csv::format_double(*c.mfht[i]) : std::string()) << ',' << c.counts[i]
           << '\n';
    }
}

MfhtCurve read_curve_csv(const std::filesystem::path& path) {
    csv::Reader reader(path);
    reader.expect_header({"bin_lo", "bin_hi", "mfht", "count"});
    MfhtCurve c;
    c.window_id = path.stem().string();
    c.min_count = 1;
    std::vector<std::string> row;
    while (reader.next(row)) {
        const auto line = reader.line();
        const auto& src = reader.source();
        if (row.size() != 4) {
            throw InputError(src + ": line " + std::to_string(line) + ": expected 4 fields");
        }
        const double lo = csv::parse_double(row[0], line, 1, src);
        const double hi = csv::parse_double(row[1], line, 2, src);
        const auto count = csv::parse_integer(row[3], line, 4, src);
        if (!(lo < hi) || count < 0) {
            throw InputError(src + ": line " + std::to_string(line) + ": invalid bin");
        }
        if (c.edges.empty()) {
            c.edges.push_back(lo);
        } else if (c.edges.back() != lo) {
            throw InputError(src + ": line " + std::to_string(line) +
                             ": bins must be contiguous");
        }
        c.edges.push_back(hi);
        c.counts.push_back(static_cast<std::size_t>(count));
        c.mfht.push_back(row[2].empty() ? std::nullopt
                                        : std::optional(csv::parse_double(row[2], line, 3, src)));
    }
    if (c.counts.empty()) {
        throw InputError(reader.source() + ": curve has no bins");
    }
    return c;
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
    os << "bin_lo,bin_hi,density,count\n";
    for (std::size_t i = 0; i < h.bins(); ++i) {
        os << csv::format_double(h.edges[i]) << ',' << csv::format_double(h.edges[i + 1]) << ','
           << csv::format_double(h.density[i]) << ',' << h.counts[i] << '\n';
    }
}

void write_acf_csv(std::ostream& os, const AcfSeries& a) {
    os << "lag,value\n";
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        os << k << ',' << csv::format_double(a.values[k]) << '\n';
    }
}

}  // namespace volstab
