#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "volstab/fht.hpp"
#include "volstab/model.hpp"
#include "volstab/returns.hpp"

namespace volstab {

enum class BinScale { kLinear, kLog };

/**
 * Bin specification. Without an explicit range the edges span the observed
 * data ([min, max], or [min positive, max] for log bins). With
 * integer_edges the edges are rounded to integers and de-duplicated, which
 * suits integer data such as hitting times.
 */
struct Binning {
    BinScale scale = BinScale::kLog;
    std::size_t bins = 30;
    std::optional<double> lo;
    std::optional<double> hi;
    bool integer_edges = false;
};

/// Throws std::invalid_argument when no usable range exists.
[[nodiscard]] std::vector<double> bin_edges(const Binning& binning, std::span<const double> values);

/// Index of the bin [e_i, e_{i+1}) holding value; the last bin is closed.
[[nodiscard]] std::optional<std::size_t> find_bin(std::span<const double> edges, double value);

struct Histogram {
    std::vector<double> edges;
    std::vector<double> density;  ///< count / (total * width)
    std::vector<std::size_t> counts;
    std::size_t total = 0;  ///< values that landed in a bin

    [[nodiscard]] std::size_t bins() const noexcept { return counts.size(); }
    [[nodiscard]] double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    /// Sum of density * width; 1 for any non-empty histogram.
    [[nodiscard]] double integral() const;
    [[nodiscard]] std::size_t modal_bin() const;
};

/// Throws std::invalid_argument for an empty sample.
[[nodiscard]] Histogram make_histogram(std::span<const double> values, const Binning& binning);

/// Default FHT binning: 30 log-spaced bins snapped to integers.
[[nodiscard]] Binning default_fht_binning();

[[nodiscard]] Histogram fht_pdf(std::span<const FhtEpisode> episodes,
                                const Binning& binning = default_fht_binning());
/// Pooled returns; default 60 linear bins.
[[nodiscard]] Histogram return_pdf(std::span<const ReturnSeries> rs,
                                   const Binning& binning = {BinScale::kLinear, 60, {}, {}, false});
[[nodiscard]] Histogram vol_pdf(std::span<const FhtEpisode> episodes, const Binning& binning = {});
/// Daily sampled variance converted to volatility sqrt(v); zero samples are skipped.
[[nodiscard]] Histogram vol_pdf(std::span<const Trajectory> trajectories, const Binning& binning = {});

/**
 * A density histogram is called unimodal when no adjacent pair of bins on
 * either side of the modal bin reverses the expected slope by more than
 * z combined Poisson standard errors.
 */
[[nodiscard]] bool is_unimodal(const Histogram& h, double z = 3.0);

/// Mean FHT against episode volatility.
struct MfhtCurve {
    std::string window_id;
    double theta_i = 0.0;
    double theta_f = 0.0;
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    std::vector<std::optional<double>> mfht;  ///< empty where counts < min_count
    std::size_t min_count = 5;
    std::size_t filtered = 0;  ///< episodes outside every bin (e.g. zero volatility on log bins)

    [[nodiscard]] std::size_t bins() const noexcept { return counts.size(); }
    [[nodiscard]] std::size_t populated_bins() const;
};

/// Default curve binning: 30 log-spaced bins over the observed volatility range.
[[nodiscard]] Binning default_curve_binning();

/// Throws std::invalid_argument for an empty episode list.
[[nodiscard]] MfhtCurve mfht_curve(std::span<const FhtEpisode> episodes,
                                   const Binning& binning = default_curve_binning(),
                                   std::size_t min_count = 5);

struct CurveMaximum {
    std::size_t bin = 0;
    double mfht = 0.0;
    bool interior = false;  ///< neither the first nor the last populated bin
};

/// Largest populated bin; ties go to interior bins, then to lower volatility.
/// Empty with fewer than three populated bins.
[[nodiscard]] std::optional<CurveMaximum> locate_maximum(const MfhtCurve& c);

struct Verdict {
    std::string window_id;
    bool interior_maximum = false;
    std::optional<std::size_t> argmax_bin;
    double max_mfht = 0.0;
    double edge_ratio_low = 0.0;   ///< max / mfht of first populated bin
    double edge_ratio_high = 0.0;  ///< max / mfht of last populated bin
    std::size_t populated_bins = 0;
};

/// Interior maximum that is at least `prominence` times both edge bins.
[[nodiscard]] Verdict nonmonotonicity_verdict(const MfhtCurve& c, double prominence = 1.5);

[[nodiscard]] nlohmann::ordered_json to_json(const Verdict& v);

/// Autocorrelation at lags 0..max_lag; values[0] == 1.
struct AcfSeries {
    std::vector<double> values;
    [[nodiscard]] std::size_t max_lag() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

/**
 * Sample autocorrelation: sum_{t<n-k} (r_t - mean)(r_{t+k} - mean) / sum_t (r_t - mean)^2.
 * With absolute set the series |r| is used. Throws std::invalid_argument if
 * length <= max_lag + 1 or the series has zero variance.
 */
[[nodiscard]] AcfSeries acf(std::span<const double> r, std::size_t max_lag, bool absolute = false);
[[nodiscard]] AcfSeries acf(const ReturnSeries& rs, std::size_t max_lag, bool absolute = false);

/// Lag-wise mean of the per-series ACFs, summed in series order.
[[nodiscard]] AcfSeries ensemble_acf(std::span<const ReturnSeries> rs, std::size_t max_lag,
                                     bool absolute = false);

[[nodiscard]] double skewness(std::span<const double> values);
[[nodiscard]] double excess_kurtosis(std::span<const double> values);

/// `bin_lo,bin_hi,mfht,count`; unpopulated bins have an empty mfht field.
void write_curve_csv(std::ostream& os, const MfhtCurve& c);
[[nodiscard]] MfhtCurve read_curve_csv(const std::filesystem::path& path);
/// `bin_lo,bin_hi,density,count`
void write_histogram_csv(std::ostream& os, const Histogram& h);
/// `lag,value`
void write_acf_csv(std::ostream& os, const AcfSeries& a);

}  // namespace volstab
