#include "volstab/compare.hpp"

#include <algorithm>
#include <cmath>

#include "volstab/errors.hpp"

namespace volstab {

MfhtCurve rebin(const MfhtCurve& c, std::span<const double> edges, std::size_t min_count) {
    MfhtCurve out;
    out.window_id = c.window_id;
    out.theta_i = c.theta_i;
    out.theta_f = c.theta_f;
    out.min_count = std::max<std::size_t>(min_count, 1);
    out.edges.assign(edges.begin(), edges.end());
    const std::size_t n = edges.size() - 1;
    out.counts.assign(n, 0);
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < c.bins(); ++i) {
        if (!c.mfht[i]) {
            continue;
        }
        const double centre = std::sqrt(c.edges[i] * c.edges[i + 1]);
        if (const auto b = find_bin(edges, centre)) {
            out.counts[*b] += c.counts[i];
            sums[*b] += *c.mfht[i] * static_cast<double>(c.counts[i]);
        } else {
            out.filtered += c.counts[i];
        }
    }
    out.mfht.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
        if (out.counts[i] >= out.min_count) {
            out.mfht[i] = sums[i] / static_cast<double>(out.counts[i]);
        }
    }
    return out;
}

namespace {

// [lowest, highest] edge among populated bins.
std::pair<double, double> populated_range(const MfhtCurve& c) {
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < c.bins(); ++i) {
        if (c.mfht[i]) {
            if (!any) lo = c.edges[i];
            hi = c.edges[i + 1];
            any = true;
        }
    }
    if (!any) {
        throw InputError("curve '" + c.window_id + "' has no populated bins");
    }
    return {lo, hi};
}

}  // namespace

CurveComparison compare_curves(const MfhtCurve& empirical, const MfhtCurve& model,
                               double prominence) {
    const auto [lo1, hi1] = populated_range(empirical);
    const auto [lo2, hi2] = populated_range(model);

    CurveComparison out;
    MfhtCurve a = empirical;
    MfhtCurve b = model;
    if (empirical.edges != model.edges) {
        const double lo = std::max(lo1, lo2);
        const double hi = std::min(hi1, hi2);
        if (!(lo < hi)) {
            throw InputError("no overlap between the volatility ranges of '" +
                             empirical.window_id + "' and '" + model.window_id + "'");
        }
        const std::size_t bins = std::max(empirical.bins(), model.bins());
        Binning grid{BinScale::kLog, bins, lo, hi, false};
        out.edges = bin_edges(grid, {});
        a = rebin(empirical, out.edges);
        b = rebin(model, out.edges);
        out.rebinned = true;
    } else {
        out.edges = empirical.edges;
    }

    out.first = a.mfht;
    out.second = b.mfht;
    out.difference.assign(out.first.size(), std::nullopt);
    for (std::size_t i = 0; i < out.first.size(); ++i) {
        if (out.first[i] && out.second[i]) {
            out.difference[i] = *out.second[i] - *out.first[i];
        }
    }
    out.first_verdict = nonmonotonicity_verdict(a, prominence);
    out.second_verdict = nonmonotonicity_verdict(b, prominence);
    if (out.first_verdict.argmax_bin && out.second_verdict.argmax_bin) {
        out.peak_offset_bins = static_cast<long>(*out.second_verdict.argmax_bin) -
                               static_cast<long>(*out.first_verdict.argmax_bin);
    }
    return out;
}

nlohmann::ordered_json to_json(const CurveComparison& c) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.first.size(); ++i) {
        nlohmann::ordered_json row;
        row["bin_lo"] = c.edges[i];
        row["bin_hi"] = c.edges[i + 1];
        row["empirical"] = opt(c.first[i]);
        row["model"] = opt(c.second[i]);
        row["difference"] = opt(c.difference[i]);
        bins.push_back(std::move(row));
    }
    nlohmann::ordered_json j;
    j["rebinned"] = c.rebinned;
    j["peak_offset_bins"] =
        c.peak_offset_bins ? nlohmann::ordered_json(*c.peak_offset_bins) : nullptr;
    j["empirical_verdict"] = to_json(c.first_verdict);
    j["model_verdict"] = to_json(c.second_verdict);
    j["bins"] = std::move(bins);
    return j;
}

}  // namespace volstab
