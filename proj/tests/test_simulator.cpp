#include "hawkes/simulator.hpp"
#include "hawkes/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using hawkes::HawkesParams;

namespace {

std::vector<std::uint64_t> seeds(std::size_t count, std::uint64_t base = 1000) {
    std::vector<std::uint64_t> s(count);
    std::iota(s.begin(), s.end(), base);
    return s;
}

// Mean and standard error of the per-seed event rate.
std::pair<double, double> rate_over_seeds(const HawkesParams& p, double horizon, std::size_t runs) {
    std::vector<double> rates;
    for (auto s : seeds(runs)) {
        rates.push_back(static_cast<double>(hawkes::simulate_thinning(p, horizon, s).events.size()) / horizon);
    }
    return {hawkes::stats::mean(rates), hawkes::stats::stddev(rates) / std::sqrt(static_cast<double>(runs))};
}

} // namespace

TEST(Thinning, PoissonLimitRate) {
    const double horizon = 1e5;
    const auto sim = hawkes::simulate_thinning({0.5, 0.0, 1.0}, horizon, 3);
    const double count = static_cast<double>(sim.events.size());
    EXPECT_NEAR(count / horizon, 0.5, 3.0 * std::sqrt(0.5 * horizon) / horizon);
}

TEST(Thinning, StationaryRateHalfBranching) {
    const auto [mean, se] = rate_over_seeds({0.5, 0.5, 1.0}, 1e5, 50);
    EXPECT_NEAR(mean, 1.0, 3.0 * se);
}

TEST(Thinning, StationaryRateNearCritical) {
    const auto [mean, se] = rate_over_seeds({0.1, 0.9, 5.0}, 1e4, 50);
    EXPECT_NEAR(mean, 1.0, 3.0 * se);
}

TEST(Thinning, DeterministicBitForBit) {
    const HawkesParams p{0.7, 0.8, 3.0};
    const auto a = hawkes::simulate_thinning(p, 500.0, 123);
    const auto b = hawkes::simulate_thinning(p, 500.0, 123);
    const auto c = hawkes::simulate_thinning(p, 500.0, 124);
    EXPECT_EQ(a.events, b.events);
    EXPECT_NE(a.events, c.events);
}

TEST(Thinning, StrictlyIncreasingInsideHorizon) {
    const auto sim = hawkes::simulate_thinning({1.0, 0.9, 10.0}, 1000.0, 8);
    const auto t = sim.events.times();
    ASSERT_FALSE(t.empty());
    EXPECT_GE(t.front(), 0.0);
    EXPECT_LE(t.back(), 1000.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        ASSERT_GT(t[i], t[i - 1]);
    }
}

TEST(Thinning, SupercriticalHitsCapAndReportsExplosion) {
    const auto sim = hawkes::simulate_thinning({0.5, 1.5, 1.0}, 1e5, 1, {1000});
    EXPECT_TRUE(sim.exploded());
    EXPECT_EQ(sim.events.size(), 1000u);
}

TEST(Thinning, SupercriticalShortHorizonIsWellDefined) {
    const auto sim = hawkes::simulate_thinning({0.5, 1.2, 1.0}, 5.0, 1);
    EXPECT_FALSE(sim.exploded());
}

TEST(Thinning, InvalidInputs) {
    EXPECT_THROW((void)hawkes::simulate_thinning({0.5, 0.5, 1.0}, 0.0, 1), hawkes::DomainError);
    EXPECT_THROW((void)hawkes::simulate_thinning({0.0, 0.5, 1.0}, 10.0, 1), hawkes::DomainError);
}

TEST(Branching, ZeroBranchingRatioOnlyImmigrants) {
    const auto sim = hawkes::simulate_branching({1.0, 0.0, 1.0}, 1000.0, 4);
    ASSERT_FALSE(sim.events.empty());
    for (const auto& e : sim.events) {
        EXPECT_EQ(e.generation, 0u);
        EXPECT_FALSE(e.parent_index.has_value());
    }
}

TEST(Branching, GenealogyInvariants) {
    const auto sim = hawkes::simulate_branching({0.3, 0.85, 2.0}, 2000.0, 5);
    for (std::size_t i = 0; i < sim.events.size(); ++i) {
        const auto& e = sim.events[i];
        ASSERT_GE(e.time, 0.0);
        ASSERT_LT(e.time, 2000.0);
        if (i > 0) {
            ASSERT_GE(e.time, sim.events[i - 1].time);
        }
        ASSERT_EQ(e.generation == 0, !e.parent_index.has_value());
        if (e.parent_index) {
            const auto& parent = sim.events[*e.parent_index];
            ASSERT_LT(*e.parent_index, i);
            ASSERT_GT(e.time, parent.time);
            ASSERT_EQ(e.generation, parent.generation + 1);
        }
    }
}

TEST(Branching, DeterministicBitForBit) {
    const auto a = hawkes::simulate_branching({0.5, 0.6, 1.0}, 300.0, 77);
    const auto b = hawkes::simulate_branching({0.5, 0.6, 1.0}, 300.0, 77);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        EXPECT_EQ(a.events[i].time, b.events[i].time);
        EXPECT_EQ(a.events[i].parent_index, b.events[i].parent_index);
    }
}

TEST(Branching, OffspringArePoissonAndLagsExponential) {
    const HawkesParams p{1.0, 0.6, 2.0};
    const double horizon = 20000.0;
    const auto sim = hawkes::simulate_branching(p, horizon, 6);
    // Parents far from the horizon have (almost) no truncated children.
    const double cutoff = horizon - 40.0 / p.beta;
    std::vector<std::size_t> kids(sim.events.size(), 0);
    std::vector<double> lag_u;
    for (const auto& e : sim.events) {
        if (e.parent_index && sim.events[*e.parent_index].time < cutoff) {
            ++kids[*e.parent_index];
            lag_u.push_back(1.0 - std::exp(-p.beta * (e.time - sim.events[*e.parent_index].time)));
        }
    }
    std::size_t parents = 0;
    std::size_t zero = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < sim.events.size(); ++i) {
        if (sim.events[i].time < cutoff) {
            ++parents;
            total += static_cast<double>(kids[i]);
            zero += kids[i] == 0;
        }
    }
    const double np = static_cast<double>(parents);
    EXPECT_NEAR(total / np, p.n, 3.0 * std::sqrt(p.n / np));
    const double p0 = std::exp(-p.n);
    EXPECT_NEAR(static_cast<double>(zero) / np, p0, 3.0 * std::sqrt(p0 * (1.0 - p0) / np));
    EXPECT_GT(hawkes::stats::ks_uniform(lag_u).p_value, 0.001);
}

TEST(Branching, ProjectionIsAnEventSeries) {
    const auto sim = hawkes::simulate_branching({0.5, 0.5, 1.0}, 100.0, 9);
    const auto series = sim.series();
    EXPECT_EQ(series.horizon(), 100.0);
    EXPECT_EQ(series.size(), sim.events.size());
}

TEST(Branching, SupercriticalReportsExplosion) {
    const auto sim = hawkes::simulate_branching({0.5, 1.5, 1.0}, 1e4, 1, {1000});
    EXPECT_TRUE(sim.exploded());
}

TEST(Clusters, MeanClusterSizeHalf) {
    const auto c = hawkes::simulate_clusters(0.5, 100000, 21);
    // Var(cluster size) = n / (1 - n)^3 = 4.
    EXPECT_NEAR(c.mean_cluster_size(), 2.0, 3.0 * std::sqrt(4.0 / 1e5));
}

TEST(Clusters, DescendantsPerImmigrantAt088) {
    const auto c = hawkes::simulate_clusters(0.88, 100000, 22);
    const double var = 0.88 / std::pow(0.12, 3);
    EXPECT_NEAR(c.descendants_per_immigrant(), 0.88 / 0.12, 3.0 * std::sqrt(var / 1e5));
    EXPECT_NEAR(c.descendants_per_immigrant(), 7.33, 0.25);
}

TEST(Equivalence, ThinningAndBranchingAgree) {
    const auto s = seeds(500);
    const auto r = hawkes::distributional_equivalence_check({0.5, 0.5, 1.0}, 100.0, s);
    EXPECT_GT(r.ks.p_value, 0.01);
}

TEST(Equivalence, MismatchedLawsAreDistinguished) {
    const auto s = seeds(500);
    const auto r = hawkes::distributional_equivalence_check({0.5, 0.0, 1.0}, hawkes::Sampler::thinning,
                                                            {0.5, 0.8, 1.0}, hawkes::Sampler::thinning, 100.0, s);
    EXPECT_LT(r.ks.p_value, 0.001);
}

TEST(Equivalence, SelfComparisonIsPerfect) {
    const auto s = seeds(200);
    const auto r = hawkes::distributional_equivalence_check({0.5, 0.5, 1.0}, hawkes::Sampler::thinning,
                                                            {0.5, 0.5, 1.0}, hawkes::Sampler::thinning, 100.0, s);
    EXPECT_EQ(r.counts_a, r.counts_b);
    EXPECT_EQ(r.ks.statistic, 0.0);
    EXPECT_NEAR(r.ks.p_value, 1.0, 1e-12);
}

TEST(Schedule, PiecewiseRatesFollowSegments) {
    // Background x5 on the middle third, n fixed: stationary rate mu / (1 - n) per segment.
    const std::vector<hawkes::ScheduleSegment> segs{{0.0, 1e4, 0.2, 0.5}, {1e4, 2e4, 1.0, 0.5}, {2e4, 3e4, 0.2, 0.5}};
    std::vector<double> middle;
    std::vector<double> outer;
    for (auto s : seeds(20)) {
        const auto sim = hawkes::simulate_schedule(segs, 1.0, 3e4, s);
        double a = 0;
        double b = 0;
        for (double t : sim.events.times()) {
            (t >= 1e4 && t < 2e4 ? a : b) += 1.0;
        }
        middle.push_back(a / 1e4);
        outer.push_back(b / 2e4);
    }
    EXPECT_NEAR(hawkes::stats::mean(middle), 2.0, 3.0 * hawkes::stats::stddev(middle) / std::sqrt(20.0) + 0.01);
    EXPECT_NEAR(hawkes::stats::mean(outer), 0.4, 3.0 * hawkes::stats::stddev(outer) / std::sqrt(20.0) + 0.01);
}

TEST(Schedule, SingleSegmentMatchesThinningLaw) {
    const std::vector<hawkes::ScheduleSegment> segs{{0.0, 100.0, 0.5, 0.5}};
    std::vector<double> a;
    std::vector<double> b;
    for (auto s : seeds(400)) {
        a.push_back(static_cast<double>(hawkes::simulate_schedule(segs, 1.0, 100.0, s).events.size()));
        b.push_back(static_cast<double>(hawkes::simulate_branching({0.5, 0.5, 1.0}, 100.0, s + 7777).events.size()));
    }
    EXPECT_GT(hawkes::stats::ks_two_sample(a, b).p_value, 0.01);
}
