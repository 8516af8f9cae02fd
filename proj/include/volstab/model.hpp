#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volstab/returns.hpp"

namespace volstab {

/// Cubic potential U(x) = m x^3 + n x^2. With m, n > 0 it has a metastable
/// well at x = 0 and a barrier at x = -2n/(3m).
struct PotentialParams {
    double m = 2.0;
    double n = 3.0;
};

/// Square-root (CIR) variance process dv = a(b - v)dt + c sqrt(v) dW.
struct CirParams {
    double a = 2.0;          ///< reversion rate
    double b = 0.01;         ///< long-run variance
    double c = 0.83;         ///< vol-of-vol
    double v_start = 8.62e-5;

    /// 2ab/c^2. Values below 1 mean the zero boundary is attainable.
    [[nodiscard]] double feller_ratio() const noexcept { return 2.0 * a * b / (c * c); }
};

struct ModelParams {
    PotentialParams potential;
    CirParams cir;
    double x0 = 0.0;
    /// Level below which x is considered escaped and re-injected at x0.
    /// Unset means twice the barrier coordinate (when a barrier exists).
    std::optional<double> x_escape;

    [[nodiscard]] std::optional<double> escape_level() const;
};

struct SimConfig {
    double day_length = 1.0 / 15.0;  ///< model time units per trading day
    int steps_per_day = 100;
    int days = 3000;
    int n_series = 1071;
    std::uint64_t seed = 1;

    /// Integration step in model time units.
    [[nodiscard]] double dt() const noexcept { return day_length / steps_per_day; }
};

/// Daily-sampled path. v holds the effective (non-negative) variance.
struct Trajectory {
    std::vector<double> x;
    std::vector<double> v;
    std::size_t escapes = 0;
};

[[nodiscard]] inline double potential(double x, const PotentialParams& p) noexcept {
    return p.m * x * x * x + p.n * x * x;
}

[[nodiscard]] inline double potential_gradient(double x, const PotentialParams& p) noexcept {
    return 3.0 * p.m * x * x + 2.0 * p.n * x;
}

/// Position of the potential maximum, -2n/(3m); empty when m or n is not positive.
[[nodiscard]] std::optional<double> barrier_position(const PotentialParams& p);

[[nodiscard]] inline double effective_variance(double v) noexcept { return std::max(v, 0.0); }

/**
 * Full-truncation Euler step of the CIR process.
 *
 * Drift and diffusion are evaluated at v+ = max(v, 0); the returned latent
 * state is not floored and may be slightly negative. Callers that need the
 * variance itself use effective_variance().
 */
[[nodiscard]] inline double cir_step(double v, const CirParams& p, double dt, double dw) noexcept {
    const double vp = effective_variance(v);
    return v + p.a * (p.b - vp) * dt + p.c * std::sqrt(vp) * dw;
}

/// Euler-Maruyama step of dx = -(U'(x) + v/2)dt + sqrt(v) dW1.
[[nodiscard]] inline double heston_step(double x, double v, const ModelParams& mp, double dt,
                                        double dw1) noexcept {
    const double vp = effective_variance(v);
    return x - (potential_gradient(x, mp.potential) + 0.5 * vp) * dt + std::sqrt(vp) * dw1;
}

/// Throws std::invalid_argument on non-finite or out-of-domain values.
void validate(const ModelParams& mp);
void validate(const SimConfig& cfg);

/**
 * Wiener increments for one trading day, written to dw1 and dw2 (each of
 * size steps_per_day, step dt).
 *
 * steps_per_day is split as odd * 2^k: the odd-count base increments are
 * drawn first and then refined k times by Brownian-bridge midpoints. The
 * draw order is level by level, so a run with twice the steps reproduces
 * the same path at the coarse grid points.
 */
void fill_day_increments(std::uint64_t key, int steps_per_day, double dt, std::span<double> dw1,
                         std::span<double> dw2);

/// Substream key for one (series, day).
[[nodiscard]] std::uint64_t day_stream_key(std::uint64_t seed, std::size_t series_index,
                                           std::size_t day);

/// Integrates one series. Pure function of (mp, cfg, series_index).
[[nodiscard]] Trajectory simulate_series(const ModelParams& mp, const SimConfig& cfg,
                                         std::size_t series_index);

/// All cfg.n_series trajectories; threads only affects wall time.
[[nodiscard]] std::vector<Trajectory> simulate_ensemble(const ModelParams& mp, const SimConfig& cfg,
                                                        unsigned threads = 1);

[[nodiscard]] std::string series_ticker(std::size_t series_index);

/// One-day increments of x. Throws std::invalid_argument for fewer than two samples.
[[nodiscard]] ReturnSeries daily_returns(const Trajectory& t, std::string ticker);

}  // namespace volstab
