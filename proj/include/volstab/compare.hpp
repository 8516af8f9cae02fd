#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "volstab/stats.hpp"

namespace volstab {

/**
 * Re-expresses a curve on new bin edges. Every populated source bin is
 * assigned, whole, to the target bin containing its geometric centre; merged
 * bins take the count-weighted mean. Source bins without an mfht are ignored.
 */
[[nodiscard]] MfhtCurve rebin(const MfhtCurve& c, std::span<const double> edges,
                              std::size_t min_count = 1);

struct CurveComparison {
    std::vector<double> edges;
    std::vector<std::optional<double>> first;   ///< empirical
    std::vector<std::optional<double>> second;  ///< model
    std::vector<std::optional<double>> difference;  ///< second - first where both exist
    Verdict first_verdict;
    Verdict second_verdict;
    std::optional<long> peak_offset_bins;  ///< argmax(second) - argmax(first)
    bool rebinned = false;
};

/// Throws InputError when either curve is empty or the volatility ranges do not overlap.
[[nodiscard]] CurveComparison compare_curves(const MfhtCurve& empirical, const MfhtCurve& model,
                                             double prominence = 1.5);

[[nodiscard]] nlohmann::ordered_json to_json(const CurveComparison& c);

}  // namespace volstab
