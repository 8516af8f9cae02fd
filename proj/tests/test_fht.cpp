#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "volstab/fht.hpp"

using namespace volstab;

namespace {

ThresholdWindow crash(double ti, double tf, double sigma_bar) {
    return {window_id("t", ti, tf), ti, tf, sigma_bar, Direction::kCrash};
}

std::vector<ReturnSeries> random_series(std::uint64_t seed, std::size_t count, double sigma_bar) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, 50);
    std::uniform_real_distribution<double> ret(-3 * sigma_bar, 3 * sigma_bar);
    std::vector<ReturnSeries> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> r(len(rng));
        for (auto& x : r) x = ret(rng);
        out.push_back(make_return_series("s" + std::to_string(i), std::move(r)));
    }
    return out;
}

}  // namespace

TEST_CASE("hand-traced crash episode") {
    const auto rs = make_return_series("x", {0.001, -0.003, -0.010, -0.035, 0.004});
    const auto eps = extract_episodes(rs, crash(-0.1, -1.5, 0.02));
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].start_index == 1);
    CHECK(eps[0].fht == 2);
    CHECK(eps[0].ticker == "x");
    CHECK(eps[0].volatility == doctest::Approx(oracle::stddev({-0.003, -0.010, -0.035}, 0, 2)));
}

TEST_CASE("all-zero returns never enter a crash window") {
    const auto rs = make_return_series("z", std::vector<double>(100, 0.0));
    CHECK(extract_episodes(rs, crash(-0.1, -1.5, 0.02)).empty());
}

TEST_CASE("rally mirror of the hand-traced example") {
    const auto rs = make_return_series("x", {-0.001, 0.003, 0.010, 0.035, -0.004});
    const auto w = crash(-0.1, -1.5, 0.02).mirrored();
    CHECK(w.direction == Direction::kRally);
    const auto eps = extract_episodes(rs, w);
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].start_index == 1);
    CHECK(eps[0].fht == 2);
}

TEST_CASE("window validation") {
    CHECK_THROWS_AS(crash(-1.5, -0.1, 0.02).validate(), std::invalid_argument);
    CHECK_THROWS_AS(crash(-0.1, -1.5, 0.0).validate(), std::invalid_argument);
    ThresholdWindow r{"r", 0.1, 1.5, 0.02, Direction::kRally};
    CHECK_NOTHROW(r.validate());
    r.theta_f = 0.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("pass-through jumps start no episode") {
    // Day 1 jumps straight past the final level.
    const auto rs = make_return_series("p", {0.0, -0.05, 0.0, -0.004, -0.04});
    const auto eps = extract_episodes(rs, crash(-0.1, -1.5, 0.02));
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].start_index == 3);
    CHECK(eps[0].fht == 1);
}

TEST_CASE("thresholds are closed") {
    const double sb = 0.5;  // exact binary levels: entry -0.5, hit -1.0
    const ThresholdWindow w{"b", -1.0, -2.0, sb, Direction::kCrash};
    const auto rs = make_return_series("e", {0.0, -0.5, 0.0, -1.0});
    const auto eps = extract_episodes(rs, w);
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].start_index == 1);
    CHECK(eps[0].fht == 2);

    const ThresholdWindow up = w.mirrored();
    const auto up_eps = extract_episodes(make_return_series("u", {0.0, 0.5, 0.0, 1.0}), up);
    REQUIRE(up_eps.size() == 1);
    CHECK(up_eps[0].fht == 2);
}

TEST_CASE("entry rule level restarts while still below the entry level") {
    // After the hit at day 2 the series stays below entry; only the level rule re-enters.
    const auto rs = make_return_series("l", {-0.004, -0.004, -0.05, -0.004, -0.05});
    const auto w = crash(-0.1, -1.5, 0.02);
    const auto crossing = extract_episodes(rs, w);
    REQUIRE(crossing.size() == 1);
    CHECK(crossing[0].start_index == 0);
    const auto level = extract_episodes(rs, w, {EntryRule::kLevel, VolatilitySpan::kBoth});
    REQUIRE(level.size() == 2);
    CHECK(level[1].start_index == 3);
    CHECK(level[1].fht == 1);
}

TEST_CASE("volatility span options") {
    const auto rs = make_return_series("x", {0.001, -0.003, -0.010, -0.035, 0.004});
    const auto w = crash(-0.1, -1.5, 0.02);
    const auto no_entry = extract_episodes(rs, w, {EntryRule::kCrossing, VolatilitySpan::kExcludeEntry});
    const auto no_hit = extract_episodes(rs, w, {EntryRule::kCrossing, VolatilitySpan::kExcludeHit});
    CHECK(no_entry[0].volatility == doctest::Approx(0.0125));
    CHECK(no_hit[0].volatility == doctest::Approx(0.0035));
}

TEST_CASE("agrees with the brute-force oracle on random series") {
    const double sb = 0.02;
    const std::vector<std::pair<double, double>> windows = {
        {-0.1, -1.5}, {0.5, -0.9}, {-0.1, -0.5}, {-0.1, -3.0}, {-1.0, -2.0}};
    const auto series = random_series(2024, 100, sb);
    std::size_t total = 0;
    for (const auto& [ti, tf] : windows) {
        for (const bool rally : {false, true}) {
            ThresholdWindow w = crash(ti, tf, sb);
            if (rally) w = w.mirrored();
            for (const auto& s : series) {
                const auto got = extract_episodes(s, w);
                const auto want =
                    oracle::brute_force_episodes(s.returns, w.entry_level(), w.hit_level(), rally);
                REQUIRE(got.size() == want.size());
                for (std::size_t k = 0; k < got.size(); ++k) {
                    CHECK(got[k].start_index == want[k].start);
                    CHECK(got[k].fht == want[k].fht);
                    CHECK(got[k].volatility == doctest::Approx(want[k].volatility).epsilon(1e-12));
                }
                total += got.size();
            }
        }
    }
    CHECK(total > 100);
}

TEST_CASE("episodes are ordered and do not overlap") {
    const auto series = random_series(7, 100, 0.02);
    for (const auto& s : series) {
        const auto eps = extract_episodes(s, crash(0.2, -1.0, 0.02));
        for (std::size_t k = 1; k < eps.size(); ++k) {
            CHECK(eps[k].start_index > eps[k - 1].start_index + eps[k - 1].fht);
        }
    }
}

TEST_CASE("crash episodes equal rally episodes of the negated series") {
    const auto series = random_series(8, 100, 0.02);
    const auto w = crash(-0.3, -1.2, 0.02);
    for (const auto& s : series) {
        auto neg = s.returns;
        for (auto& x : neg) x = -x;
        const auto a = extract_episodes(s, w);
        const auto b = extract_episodes(make_return_series("n", neg), w.mirrored());
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].start_index == b[k].start_index);
            CHECK(a[k].fht == b[k].fht);
        }
    }
}

TEST_CASE("appending returns that never hit leaves episodes unchanged") {
    const auto series = random_series(9, 100, 0.02);
    const auto w = crash(-0.1, -1.5, 0.02);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> tail(w.hit_level() * 0.99, 0.06);
    for (const auto& s : series) {
        const auto before = extract_episodes(s, w);
        auto longer = s.returns;
        for (int i = 0; i < 30; ++i) longer.push_back(tail(rng));
        const auto after = extract_episodes(make_return_series(s.ticker, longer), w);
        REQUIRE(after.size() == before.size());
        for (std::size_t k = 0; k < before.size(); ++k) {
            CHECK(after[k].start_index == before[k].start_index);
            CHECK(after[k].fht == before[k].fht);
            CHECK(after[k].volatility == before[k].volatility);
        }
    }
}

TEST_CASE("sweep of one window matches direct extraction") {
    const auto series = random_series(10, 20, 0.02);
    const std::vector<ThresholdWindow> ws = {crash(-0.1, -1.5, 0.02)};
    const auto swept = sweep_windows(series, ws);
    REQUIRE(swept.size() == 1);
    std::vector<FhtEpisode> direct;
    for (const auto& s : series) {
        const auto e = extract_episodes(s, ws[0]);
        direct.insert(direct.end(), e.begin(), e.end());
    }
    REQUIRE(swept[0].episodes.size() == direct.size());
    for (std::size_t k = 0; k < direct.size(); ++k) {
        CHECK(swept[0].episodes[k].ticker == direct[k].ticker);
        CHECK(swept[0].episodes[k].start_index == direct[k].start_index);
    }
}

TEST_CASE("sweep is independent of thread count") {
    const auto series = random_series(11, 100, 0.02);
    const auto ws = window_family("fig1c", 0.02);
    const auto one = sweep_windows(series, ws, {}, 1);
    const auto four = sweep_windows(series, ws, {}, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t k = 0; k < one.size(); ++k) {
        std::ostringstream a, b;
        write_episodes_csv(a, one[k]);
        write_episodes_csv(b, four[k]);
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("a deeper final threshold never yields more episodes") {
    const auto series = random_series(12, 100, 0.02);
    const auto fam = window_family("fig1c", 0.02);
    REQUIRE(fam.front().theta_f == doctest::Approx(-0.5));
    REQUIRE(fam.back().theta_f == doctest::Approx(-3.0));
    std::size_t shallow = 0, deep = 0;
    for (const auto& s : series) {
        const auto a = oracle::brute_force_episodes(s.returns, fam.front().entry_level(),
                                                    fam.front().hit_level(), false);
        const auto b = oracle::brute_force_episodes(s.returns, fam.back().entry_level(),
                                                    fam.back().hit_level(), false);
        CHECK(extract_episodes(s, fam.front()).size() == a.size());
        CHECK(extract_episodes(s, fam.back()).size() == b.size());
        shallow += a.size();
        deep += b.size();
    }
    CHECK(shallow >= deep);
}

TEST_CASE("empty window list gives an empty result") {
    const auto series = random_series(13, 5, 0.02);
    CHECK(sweep_windows(series, std::vector<ThresholdWindow>{}).empty());
}

TEST_CASE("window families") {
    const auto a = window_family("fig1a", 0.02);
    REQUIRE(a.size() == 1);
    CHECK(a[0].id == "fig1a");
    CHECK(a[0].theta_i == -0.1);
    CHECK(a[0].theta_f == -1.5);

    const auto b = window_family("fig1b", 0.02);
    REQUIRE(b.size() == 26);
    CHECK(b.front().theta_i == 0.9);
    CHECK(b.back().theta_i == -1.6);
    for (const auto& w : b) CHECK(w.theta_i - w.theta_f == doctest::Approx(1.4));
    CHECK(b.front().id == "fig1b_ti+0.90_tf-0.50");

    const auto r = window_family("fig2c", 0.02);
    REQUIRE(r.size() == 26);
    CHECK(r.front().direction == Direction::kRally);
    CHECK(r.front().theta_i == 0.1);
    CHECK(r.back().theta_f == 3.0);

    CHECK_FALSE(is_window_family("fig3b"));
    CHECK_THROWS_AS((void)window_family("nope", 0.02), std::invalid_argument);
}

TEST_CASE("episodes CSV round-trip") {
    volstab::testing::TempDir dir;
    const auto series = random_series(14, 50, 0.02);
    const auto swept = sweep_windows(series, window_family("fig2a", 0.02));
    {
        std::ofstream os(dir / "e.csv");
        write_episodes_header(os);
        write_episodes_csv(os, swept[0]);
    }
    const auto back = read_episodes_csv(dir / "e.csv");
    REQUIRE(back.size() == swept[0].episodes.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].window_id == "fig2a");
        CHECK(back[k].theta_i == 0.1);
        CHECK(back[k].episode.start_index == swept[0].episodes[k].start_index);
        CHECK(back[k].episode.volatility == swept[0].episodes[k].volatility);
    }
}
