#pragma once

#include "hawkes/core_model.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/estimator.hpp"
#include "hawkes/stats.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace hawkes {

/// Event times mapped through the compensator: xi_i = Lambda(t_i),
/// Delta_i = xi_i - xi_{i-1} (xi_0 = 0) and U_i = 1 - exp(-Delta_i).
/// Under the model xi is a unit-rate Poisson process and U is uniform.
struct ResidualSeries {
    std::vector<double> xi;
    std::vector<double> deltas;
    std::vector<double> u;
};

/// O(N) residual transform. Lambda(t_i) = mu t_i + n ((i - 1) - A_i) with the
/// same A_i recursion as the likelihood.
inline constexpr double kBelowOne = 1.0 - 0x1p-53;

[[nodiscard]] inline ResidualSeries residual_transform(const HawkesParams& p, const EventSeries& events) {
    validate(p);
    const auto t = events.times();
    ResidualSeries r;
    r.xi.reserve(t.size());
    r.deltas.reserve(t.size());
    r.u.reserve(t.size());
    double a = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) {
            a = std::exp(-p.beta * (t[i] - t[i - 1])) * (1.0 + a);
        }
        // (i - a) = sum_{j<i} (1 - exp(-beta (t_i - t_j))), each term in [0, 1).
        const double xi = p.mu * t[i] + p.n * std::max(static_cast<double>(i) - a, 0.0);
        // Lambda is non-decreasing; rounding in the recursion must not break that.
        const double delta = std::max(xi - prev, 0.0);
        if (!(delta >= 0.0) || !std::isfinite(delta)) {
            throw NumericError("residual increment is not a finite non-negative number");
        }
        r.xi.push_back(std::max(xi, prev));
        r.deltas.push_back(delta);
        // 1 - exp(-delta) rounds to 1 for delta > ~37; keep U inside [0, 1).
        r.u.push_back(std::min(-std::expm1(-delta), kBelowOne));
        prev = r.xi.back();
    }
    return r;
}

/// One-sample KS test of u against U[0, 1]; asymptotic Kolmogorov p-value
/// with the (sqrt N + 0.12 + 0.11 / sqrt N) argument scaling.
[[nodiscard]] inline stats::KsResult ks_uniform_test(std::span<const double> u) { return stats::ks_uniform(u); }

inline constexpr double kRejectionLevel = 0.05;

struct GofVerdict {
    double ks_statistic{std::numeric_limits<double>::quiet_NaN()}; ///< of the realization with the largest p
    double p_value{std::numeric_limits<double>::quiet_NaN()};      ///< largest p over realizations
    bool rejected_at_5pct{false};
    std::vector<double> bootstrap_p_values;
    bool window_rejected{false}; ///< every realization rejects at 5%

    [[nodiscard]] double p_max() const noexcept { return p_value; }
};

/// Residual KS test of a single fit on its own series.
[[nodiscard]] inline GofVerdict gof_test(const HawkesParams& p, const EventSeries& events) {
    const auto r = residual_transform(p, events);
    const auto ks = ks_uniform_test(r.u);
    GofVerdict v;
    v.ks_statistic = ks.statistic;
    v.p_value = ks.p_value;
    v.rejected_at_5pct = ks.p_value < kRejectionLevel;
    v.bootstrap_p_values = {ks.p_value};
    v.window_rejected = v.rejected_at_5pct;
    return v;
}

/// Tests every fitted realization with its own parameters and randomised
/// series. The window is rejected only when all of them reject at 5%.
[[nodiscard]] inline GofVerdict window_rejection(const BootstrapResult& bootstrap) {
    if (!bootstrap.usable) {
        throw NonConvergenceError("bootstrap is unusable (too few converged fits)");
    }
    GofVerdict v;
    v.window_rejected = true;
    double best_p = -1.0;
    for (const auto& r : bootstrap.realizations) {
        if (!r.fit || !r.fit->converged) {
            continue;
        }
        const auto ks = ks_uniform_test(residual_transform(r.fit->params, r.series).u);
        v.bootstrap_p_values.push_back(ks.p_value);
        if (ks.p_value >= kRejectionLevel) {
            v.window_rejected = false;
        }
        if (ks.p_value > best_p) {
            best_p = ks.p_value;
            v.ks_statistic = ks.statistic;
        }
    }
    v.p_value = best_p;
    v.rejected_at_5pct = v.window_rejected;
    return v;
}

} // namespace hawkes
