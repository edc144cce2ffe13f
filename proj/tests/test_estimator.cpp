#include "hawkes/core_model.hpp"
#include "hawkes/estimator.hpp"
#include "hawkes/market_data.hpp"
#include "hawkes/simulator.hpp"
#include "hawkes/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <vector>

using hawkes::EventSeries;
using hawkes::FitConfig;
using hawkes::HawkesParams;

namespace {

EventSeries simulate(const HawkesParams& p, double horizon, std::uint64_t seed) {
    return hawkes::simulate_thinning(p, horizon, seed).events;
}

EventSeries scaled(const EventSeries& ev, double c) {
    std::vector<double> t;
    for (double x : ev.times()) {
        t.push_back(c * x);
    }
    return {t, c * ev.horizon()};
}

} // namespace

TEST(FitMle, SimulateThenRecover) {
    std::vector<double> n_hat;
    for (std::uint64_t s = 0; s < 100; ++s) {
        n_hat.push_back(hawkes::fit_mle(simulate({0.5, 0.7, 1.0}, 600.0, 500 + s)).params.n);
    }
    const double mean = hawkes::stats::mean(n_hat);
    const double sd = hawkes::stats::stddev(n_hat);
    std::printf("recovery over 100 windows: bias %.4f, spread %.4f\n", mean - 0.7, sd);
    std::size_t inside = 0;
    for (double v : n_hat) {
        inside += std::abs(v - 0.7) <= 3.0 * sd;
    }
    EXPECT_GE(inside, 95u);
    EXPECT_LT(std::abs(mean - 0.7), 0.02);
}

TEST(FitMle, PoissonNullRecovery) {
    std::size_t small = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        small += hawkes::fit_mle(simulate({1.0, 0.0, 1.0}, 600.0, 900 + s)).params.n < 0.1;
    }
    std::printf("Poisson null: n_hat < 0.1 in %zu of 100 windows\n", small);
    EXPECT_GE(small, 95u);
}

TEST(FitMle, Deterministic) {
    const auto ev = simulate({0.5, 0.7, 1.0}, 600.0, 3);
    const auto a = hawkes::fit_mle(ev);
    const auto b = hawkes::fit_mle(ev);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
    EXPECT_EQ(a.evaluations, b.evaluations);
    EXPECT_EQ(a.starts_tried, b.starts_tried);
}

TEST(FitMle, TooFewEventsIsInsufficientData) {
    const EventSeries ev({1.0, 2.0, 3.0}, 10.0);
    EXPECT_THROW((void)hawkes::fit_mle(ev), hawkes::InsufficientDataError);
    FitConfig cfg;
    cfg.min_events = 0;
    EXPECT_THROW((void)hawkes::fit_mle(EventSeries({}, 10.0), cfg), hawkes::InsufficientDataError);
}

TEST(FitMle, NoConvergedStartIsNonConvergence) {
    FitConfig cfg;
    cfg.max_iterations = 1;
    EXPECT_THROW((void)hawkes::fit_mle(simulate({0.5, 0.7, 1.0}, 600.0, 4), cfg), hawkes::NonConvergenceError);
}

TEST(FitMle, BestOfAllStarts) {
    const auto r = hawkes::fit_mle(simulate({0.5, 0.7, 1.0}, 600.0, 5));
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.starts_tried, 9u);
    ASSERT_EQ(r.starts.size(), r.starts_tried);
    for (const auto& s : r.starts) {
        EXPECT_GE(r.log_likelihood, s.initial_log_likelihood);
        EXPECT_GE(r.log_likelihood, s.final_log_likelihood);
    }
    EXPECT_DOUBLE_EQ(r.log_likelihood, hawkes::log_likelihood(r.params, simulate({0.5, 0.7, 1.0}, 600.0, 5)));
}

TEST(FitMle, StaysInsideTheBox) {
    const auto ev = simulate({0.5, 0.7, 1.0}, 600.0, 6);
    const auto r = hawkes::fit_mle(ev);
    const double N = static_cast<double>(ev.size());
    EXPECT_GT(r.params.mu, 0.0);
    EXPECT_GT(r.params.n, 0.0);
    EXPECT_LT(r.params.n, 1.0);
    EXPECT_GE(r.params.beta, 1.0 / 600.0);
    EXPECT_LE(r.params.beta, 1e3 * N / 600.0);
    EXPECT_FALSE(r.boundary_flag);
}

TEST(FitMle, OptimumIsStationary) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto ev = simulate({0.5, 0.7, 1.0}, 600.0, 40 + s);
        const auto r = hawkes::fit_mle(ev);
        ASSERT_FALSE(r.boundary_flag);
        const auto g = hawkes::log_likelihood_with_gradient(r.params, ev);
        const double N = static_cast<double>(ev.size());
        // Gradient in log coordinates, per event.
        EXPECT_LT(std::abs(g.gradient[0] * r.params.mu) / N, 1e-3);
        EXPECT_LT(std::abs(g.gradient[1] * r.params.n) / N, 1e-3);
        EXPECT_LT(std::abs(g.gradient[2] * r.params.beta) / N, 1e-3);
    }
}

TEST(FitMle, ErrorShrinksWithWindowLength) {
    std::vector<double> rmse;
    for (double horizon : {300.0, 600.0, 1800.0}) {
        double sq = 0.0;
        for (std::uint64_t s = 0; s < 60; ++s) {
            const double e = hawkes::fit_mle(simulate({0.5, 0.7, 1.0}, horizon, 7000 + s)).params.n - 0.7;
            sq += e * e;
        }
        rmse.push_back(std::sqrt(sq / 60.0));
    }
    std::printf("RMSE of n_hat at T = 300/600/1800 s: %.4f %.4f %.4f\n", rmse[0], rmse[1], rmse[2]);
    EXPECT_GT(rmse[0], rmse[1]);
    EXPECT_GT(rmse[1], rmse[2]);
}

TEST(FitMle, ReparametrizationInvariance) {
    FitConfig amp;
    amp.parametrization = hawkes::Parametrization::amplitude;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto ev = simulate({0.5, 0.7, 1.0}, 600.0, 80 + s);
        const auto a = hawkes::fit_mle(ev);
        const auto b = hawkes::fit_mle(ev, amp);
        EXPECT_NEAR(a.params.n, b.params.n, 1e-3);
        EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-5 * std::abs(a.log_likelihood));
    }
}

TEST(FitMle, ScaleCovariance) {
    const auto ev = simulate({0.8, 0.6, 2.0}, 600.0, 9);
    const auto base = hawkes::fit_mle(ev);
    for (double c : {0.1, 10.0}) {
        const auto r = hawkes::fit_mle(scaled(ev, c));
        EXPECT_NEAR(r.params.n, base.params.n, 1e-4);
        EXPECT_NEAR(r.params.mu * c, base.params.mu, 1e-4 * base.params.mu);
        EXPECT_NEAR(r.params.beta * c, base.params.beta, 1e-3 * base.params.beta);
        EXPECT_NEAR(r.log_likelihood, base.log_likelihood - static_cast<double>(ev.size()) * std::log(c),
                    1e-6 * std::abs(base.log_likelihood));
    }
}

TEST(FitMle, WiderBoxAllowsSupercriticalEstimates) {
    FitConfig cfg;
    cfg.n_max = 2.0;
    const auto ev = simulate({0.1, 0.95, 5.0}, 2000.0, 10);
    const auto r = hawkes::fit_mle(ev, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.boundary_flag);
    EXPECT_LT(r.params.n, 2.0);
    EXPECT_GT(r.params.n, 0.7);
}

TEST(FitMle, BoundaryFlagMeansNearUpperBound) {
    // A process above the box edge drives n_hat to n_max.
    FitConfig cfg;
    cfg.n_max = 0.5;
    const auto ev = simulate({0.3, 0.9, 1.0}, 2000.0, 11);
    const auto r = hawkes::fit_mle(ev, cfg);
    EXPECT_TRUE(r.boundary_flag);
    EXPECT_GE(r.params.n, 0.5 * (1.0 - cfg.boundary_tol));
}

TEST(Bootstrap, SingleRealizationHasZeroSpread) {
    const auto raw = hawkes::floor_to_seconds(simulate({1.5, 0.7, 1.0}, 600.0, 12));
    hawkes::BootstrapConfig b;
    b.realizations = 1;
    const auto r = hawkes::fit_bootstrap(raw, {}, b);
    ASSERT_EQ(r.realizations.size(), 1u);
    EXPECT_TRUE(r.usable);
    EXPECT_EQ(r.n.stddev, 0.0);
    EXPECT_EQ(r.n.median, r.realizations[0].fit->params.n);
}

TEST(Bootstrap, UntiedInputMakesEveryRealizationIdentical) {
    const auto ev = simulate({1.5, 0.7, 1.0}, 600.0, 13);
    hawkes::RawSeries raw{{ev.times().begin(), ev.times().end()}, 0.0, 600.0};
    const auto r = hawkes::fit_bootstrap(raw, {}, {});
    ASSERT_EQ(r.realizations.size(), 50u);
    EXPECT_EQ(r.converged, 50u);
    EXPECT_NEAR(r.n.stddev, 0.0, 1e-12);
    EXPECT_NEAR(r.mu.stddev, 0.0, 1e-12);
    for (const auto& x : r.realizations) {
        EXPECT_EQ(x.series, r.realizations.front().series);
        EXPECT_EQ(x.fit->params, r.realizations.front().fit->params);
    }
}

TEST(Bootstrap, RealizationsShareTheIntegerData) {
    const auto raw = hawkes::floor_to_seconds(simulate({1.5, 0.7, 1.0}, 600.0, 14));
    hawkes::BootstrapConfig b;
    b.realizations = 8;
    b.seed = 99;
    const auto r = hawkes::fit_bootstrap(raw, {}, b);
    for (const auto& x : r.realizations) {
        ASSERT_EQ(x.series.size(), raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            ASSERT_EQ(std::floor(x.series[i]), raw.timestamps[i]);
        }
    }
    EXPECT_NE(r.realizations[0].series, r.realizations[1].series);
}

TEST(Bootstrap, WarmStartMatchesFullGrid) {
    const auto raw = hawkes::floor_to_seconds(simulate({1.5, 0.7, 1.0}, 600.0, 15));
    hawkes::BootstrapConfig warm;
    warm.realizations = 6;
    hawkes::BootstrapConfig cold = warm;
    cold.warm_start = false;
    const auto a = hawkes::fit_bootstrap(raw, {}, warm);
    const auto b = hawkes::fit_bootstrap(raw, {}, cold);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(a.realizations[k].fit->params.n, b.realizations[k].fit->params.n, 1e-4);
        EXPECT_NEAR(a.realizations[k].fit->log_likelihood, b.realizations[k].fit->log_likelihood, 1e-6);
    }
}

TEST(Bootstrap, UnusableWhenTooFewConverge) {
    const auto raw = hawkes::floor_to_seconds(simulate({1.5, 0.7, 1.0}, 600.0, 16));
    FitConfig cfg;
    cfg.max_iterations = 1;
    hawkes::BootstrapConfig b;
    b.realizations = 4;
    const auto r = hawkes::fit_bootstrap(raw, cfg, b);
    EXPECT_FALSE(r.usable);
    EXPECT_EQ(r.converged, 0u);
    for (const auto& x : r.realizations) {
        EXPECT_FALSE(x.error.empty());
    }
}

TEST(Bootstrap, TooFewEventsIsInsufficientData) {
    hawkes::RawSeries raw{{1.0, 2.0, 2.0}, 0.0, 10.0};
    EXPECT_THROW((void)hawkes::fit_bootstrap(raw, {}, {}), hawkes::InsufficientDataError);
}

TEST(Bootstrap, RoundingSpreadOfOrderPublishedValues) {
    // Mean over windows of the per-window relative spread across 50 randomisations.
    double mu = 0.0;
    double n = 0.0;
    double beta = 0.0;
    const int windows = 10;
    for (int w = 0; w < windows; ++w) {
        const auto raw = hawkes::floor_to_seconds(simulate({1.5, 0.7, 1.0}, 600.0, 3000 + w));
        hawkes::BootstrapConfig b;
        b.seed = 17 + w;
        const auto r = hawkes::fit_bootstrap(raw, {}, b);
        ASSERT_TRUE(r.usable);
        mu += r.mu.relative_stddev() / windows;
        n += r.n.relative_stddev() / windows;
        beta += r.beta.relative_stddev() / windows;
    }
    std::printf("relative spread mu %.4f n %.4f beta %.4f\n", mu, n, beta);
    EXPECT_GE(mu, 0.014 / 2);
    EXPECT_LE(mu, 0.014 * 2);
    EXPECT_GE(n, 0.006 / 2);
    EXPECT_LE(n, 0.006 * 2);
    EXPECT_GE(beta, 0.035 / 2);
    EXPECT_LE(beta, 0.035 * 2);
}

TEST(ParameterSummary, QuantilesAndSpread) {
    const auto s = hawkes::ParameterSummary::of({4.0, 1.0, 3.0, 2.0, 5.0});
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(2.5));
    EXPECT_DOUBLE_EQ(s.q10, 1.4);
    EXPECT_DOUBLE_EQ(s.q90, 4.6);
}
