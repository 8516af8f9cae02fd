#include "volstab/model.hpp"

#include <cstdio>
#include <random>
#include <stdexcept>
#include <exception>
#include <thread>

#include "volstab/rng.hpp"

namespace volstab {

std::optional<double> barrier_position(const PotentialParams& p) {
    if (p.m > 0.0 && p.n > 0.0) {
        return -2.0 * p.n / (3.0 * p.m);
    }
    return std::nullopt;
}

std::optional<double> ModelParams::escape_level() const {
    if (x_escape) {
        return x_escape;
    }
    if (const auto barrier = barrier_position(potential)) {
        return 2.0 * *barrier;
    }
    return std::nullopt;
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

}  // namespace

void validate(const ModelParams& mp) {
    const auto& p = mp.potential;
    const auto& c = mp.cir;
    require(std::isfinite(p.m) && std::isfinite(p.n), "potential coefficients must be finite");
    require(p.m >= 0.0 && p.n >= 0.0, "potential coefficients m, n must be non-negative");
    require(std::isfinite(c.a) && std::isfinite(c.b) && std::isfinite(c.c) &&
                std::isfinite(c.v_start),
            "CIR parameters must be finite");
    require(c.a > 0.0, "CIR reversion rate a must be positive");
    require(c.b > 0.0, "CIR long-run variance b must be positive");
    require(c.c >= 0.0, "CIR vol-of-vol c must be non-negative");
    require(c.v_start >= 0.0, "v_start must be non-negative");
    require(std::isfinite(mp.x0), "x0 must be finite");
    if (mp.x_escape) {
        require(std::isfinite(*mp.x_escape) && *mp.x_escape < mp.x0,
                "x_escape must be finite and below x0");
    }
}

void validate(const SimConfig& cfg) {
    require(std::isfinite(cfg.day_length) && cfg.day_length > 0.0,
            "day_length must be positive and finite");
    require(cfg.steps_per_day >= 1, "steps_per_day must be at least 1");
    require(cfg.days >= 0, "days must be non-negative");
    require(cfg.n_series >= 1, "n_series must be at least 1");
}

std::uint64_t day_stream_key(std::uint64_t seed, std::size_t series_index, std::size_t day) {
    return CounterRng::derive(CounterRng::derive(seed, series_index), day);
}

void fill_day_increments(std::uint64_t key, int steps_per_day, double dt, std::span<double> dw1,
                         std::span<double> dw2) {
    const auto steps = static_cast<std::size_t>(steps_per_day);
    if (steps_per_day < 1 || dw1.size() != steps || dw2.size() != steps) {
        throw std::invalid_argument("fill_day_increments: buffer size mismatch");
    }
    std::size_t odd = steps;
    int levels = 0;
    while (odd % 2 == 0) {
        odd /= 2;
        ++levels;
    }

    CounterRng rng(key);
    std::normal_distribution<double> normal;

    double span = dt * static_cast<double>(std::size_t{1} << levels);
    double scale = std::sqrt(span);
    for (std::size_t j = 0; j < odd; ++j) {
        dw1[j] = scale * normal(rng);
    }
    for (std::size_t j = 0; j < odd; ++j) {
        dw2[j] = scale * normal(rng);
    }

    // Each refinement splits an increment D over span h into
    // (D/2 + sqrt(h)/2 Z, D/2 - sqrt(h)/2 Z). Normals are drawn left to right;
    // the split is applied right to left so it can run in place.
    thread_local std::vector<double> z;
    std::size_t count = odd;
    for (int level = 0; level < levels; ++level) {
        const double half_sd = 0.5 * std::sqrt(span);
        for (auto* dw : {&dw1, &dw2}) {
            auto& w = *dw;
            z.resize(count);
            for (std::size_t j = 0; j < count; ++j) {
                z[j] = normal(rng);
            }
            for (std::size_t j = count; j-- > 0;) {
                const double whole = w[j];
                const double left = 0.5 * whole + half_sd * z[j];
                w[2 * j] = left;
                w[2 * j + 1] = whole - left;
            }
        }
        count *= 2;
        span *= 0.5;
    }
}

Trajectory simulate_series(const ModelParams& mp, const SimConfig& cfg, std::size_t series_index) {
    validate(mp);
    validate(cfg);
    if (series_index >= static_cast<std::size_t>(cfg.n_series)) {
        throw std::invalid_argument("series_index out of range");
    }

    const auto days = static_cast<std::size_t>(cfg.days);
    const auto steps = static_cast<std::size_t>(cfg.steps_per_day);
    const double dt = cfg.dt();
    const auto escape = mp.escape_level();

    Trajectory t;
    t.x.reserve(days + 1);
    t.v.reserve(days + 1);

    double x = mp.x0;
    double v = mp.cir.v_start;
    t.x.push_back(x);
    t.v.push_back(effective_variance(v));

    std::vector<double> dw1(steps);
    std::vector<double> dw2(steps);
    for (std::size_t day = 0; day < days; ++day) {
        fill_day_increments(day_stream_key(cfg.seed, series_index, day), cfg.steps_per_day, dt,
                            dw1, dw2);
        for (std::size_t k = 0; k < steps; ++k) {
            const double x_next = heston_step(x, v, mp, dt, dw1[k]);
            v = cir_step(v, mp.cir, dt, dw2[k]);
            x = x_next;
            if (escape && x < *escape) {
                x = mp.x0;
                ++t.escapes;
            }
        }
        if (!std::isfinite(x) || !std::isfinite(v)) {
            throw std::runtime_error("simulate_series: non-finite state in series " +
                                     std::to_string(series_index));
        }
        t.x.push_back(x);
        t.v.push_back(effective_variance(v));
    }
    return t;
}

std::vector<Trajectory> simulate_ensemble(const ModelParams& mp, const SimConfig& cfg,
                                          unsigned threads) {
    validate(mp);
    validate(cfg);
    const auto n = static_cast<std::size_t>(cfg.n_series);
    std::vector<Trajectory> out(n);
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n)));

    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = simulate_series(mp, cfg, i);
        }
        return out;
    }

    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += threads) {
                        out[i] = simulate_series(mp, cfg, i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

std::string series_ticker(std::size_t series_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim%04zu", series_index);
    return buf;
}

ReturnSeries daily_returns(const Trajectory& t, std::string ticker) {
    if (t.x.size() < 2) {
        throw std::invalid_argument("daily_returns: trajectory needs at least two samples");
    }
    std::vector<double> r(t.x.size() - 1);
    for (std::size_t i = 1; i < t.x.size(); ++i) {
        r[i - 1] = t.x[i] - t.x[i - 1];
    }
    return make_return_series(std::move(ticker), std::move(r));
}

}  // namespace volstab
