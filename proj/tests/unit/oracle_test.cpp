// Randomized cross-checks of the metrics module against the brute-force
// implementations in oracles.hpp.

#include "tdvim/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tdvim;

namespace {

TrialTable single_backend(const TrialTable& t, const std::string& backend) {
    TrialTable out;
    for (const auto& r : t.rows) {
        if (r.backend == backend) out.rows.push_back(r);
    }
    return out;
}

}  // namespace

TEST(Oracle, EerAndThresholdAtFmr) {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = oracle::random_scores(rng, 200);
        const auto got = eer(s);
        const auto want = oracle::eer(s);
        EXPECT_NEAR(got.eer, want.eer, 1e-12);
        EXPECT_NEAR(got.threshold, want.threshold, 1e-12);
        for (const double target : {0.001, 0.01, 0.1, 0.37}) {
            EXPECT_NEAR(threshold_at_fmr(s, target), oracle::threshold_at_fmr(s, target), 1e-12);
        }
    }
}

TEST(Oracle, ThresholdAtFmrThousandImpostors) {
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScoreSet s;
    s.genuine = {0.9};
    for (int i = 0; i < 1000; ++i) s.impostor.push_back(u(rng));
    EXPECT_NEAR(threshold_at_fmr(s, 0.001), oracle::threshold_at_fmr(s, 0.001), 1e-12);
}

TEST(Oracle, DiscreteScoresWithTies) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> level(0, 10);
    for (int trial = 0; trial < 100; ++trial) {
        ScoreSet s;
        for (int i = 0; i < 30; ++i) {
            s.genuine.push_back(level(rng) / 10.0);
            s.impostor.push_back(level(rng) / 20.0);
        }
        const auto got = eer(s);
        const auto want = oracle::eer(s);
        EXPECT_NEAR(got.eer, want.eer, 1e-12);
        EXPECT_NEAR(got.threshold, want.threshold, 1e-12);
        EXPECT_EQ(threshold_at_fmr(s, 0.05), oracle::threshold_at_fmr(s, 0.05));
    }
}

TEST(Oracle, RandomTablesMatchNestedEnumeration) {
    std::mt19937_64 rng(200);
    std::uniform_int_distribution<int> morphs(1, 5);
    std::uniform_int_distribution<int> attempts(1, 3);
    std::uniform_int_distribution<int> backends(1, 3);
    std::uniform_real_distribution<double> fail(0.0, 0.4);
    for (int trial = 0; trial < 300; ++trial) {
        const oracle::TableShape shape{morphs(rng), attempts(rng), backends(rng), trial % 2 == 0 ? 0.0 : fail(rng)};
        const auto t = oracle::random_table(rng, shape);
        const auto th = oracle::random_thresholds(rng, shape.backends);

        for (const auto& b : oracle::backend_names(t)) {
            const auto single = single_backend(t, b);
            const double tau = th.at(b);
            EXPECT_NEAR(fmmpmr(single, th), oracle::fmmpmr(single, tau), 1e-12);
            EXPECT_NEAR(mmpmr(single, th), oracle::mmpmr(single, tau), 1e-12);
            EXPECT_NEAR(gmap(single, {th, GmapCapacity::MultiProbe, {}}), oracle::gmap_single(single, b, tau), 1e-12);
            for (int a = 1; a <= shape.attempts; ++a) {
                EXPECT_NEAR(ftar(t, b, a), oracle::ftar(t, b, a), 1e-12);
            }
        }
        EXPECT_NEAR(gmap(t, {th, GmapCapacity::MultiProbeMultiSvs, {}}), oracle::gmap_multi_svs(t, th), 1e-12);
        EXPECT_NEAR(gmap(t, {th, GmapCapacity::Full, {}}), oracle::gmap_full(t, th), 1e-12);

        const auto m = map_matrix(t, th);
        const auto want = oracle::map_cells(t, th);
        ASSERT_EQ(m.cells.size(), want.size());
        for (std::size_t r = 0; r < want.size(); ++r) {
            ASSERT_EQ(m.cells[r].size(), want[r].size());
            for (std::size_t c = 0; c < want[r].size(); ++c) EXPECT_NEAR(m.cells[r][c], want[r][c], 1e-12);
        }
    }
}

TEST(Properties, ErrorRatesMonotoneInThreshold) {
    std::mt19937_64 rng(300);
    std::uniform_real_distribution<double> t(-1.2, 1.2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = oracle::random_scores(rng, 50);
        double a = t(rng);
        double b = t(rng);
        if (a > b) std::swap(a, b);
        const auto ra = fmr_fnmr(s, a);
        const auto rb = fmr_fnmr(s, b);
        EXPECT_GE(ra.fmr, rb.fmr);
        EXPECT_LE(ra.fnmr, rb.fnmr);
        EXPECT_GE(ra.fmr, 0.0);
        EXPECT_LE(ra.fnmr, 1.0);
    }
}

TEST(Properties, FmmpmrAtMostMmpmr) {
    std::mt19937_64 rng(301);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = oracle::random_table(rng, {5, 3, 1, 0.1});
        const auto th = oracle::random_thresholds(rng, 1);
        EXPECT_LE(fmmpmr(t, th), mmpmr(t, th));
    }
}

TEST(Properties, GmapNonIncreasingUnderFailures) {
    std::mt19937_64 rng(302);
    std::uniform_int_distribution<int> pick(0, 1 << 30);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = oracle::random_table(rng, {5, 3, 3, 0.05});
        const auto th = oracle::random_thresholds(rng, 3);
        for (const auto capacity : {GmapCapacity::MultiProbeMultiSvs, GmapCapacity::Full}) {
            auto worse = t;
            double before = gmap(worse, {th, capacity, {}});
            for (int k = 0; k < 4; ++k) {
                worse.rows[static_cast<std::size_t>(pick(rng)) % worse.rows.size()].score.reset();
                const double after = gmap(worse, {th, capacity, {}});
                EXPECT_LE(after, before + 1e-12);
                EXPECT_GE(after, 0.0);
                EXPECT_LE(after, 100.0);
                before = after;
            }
        }
    }
}
