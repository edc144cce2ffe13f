#pragma once

#include "hawkes/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hawkes {

/// Parameters of the exponential-kernel Hawkes intensity
///
///   lambda(t) = mu + n * beta * sum_{t_i < t} exp(-beta (t - t_i)).
///
/// The branching ratio n is stored directly; the kernel amplitude is the
/// derived quantity alpha = n * beta.
struct HawkesParams {
    double mu{1.0};   ///< background intensity, events / second
    double n{0.0};    ///< branching ratio, dimensionless
    double beta{1.0}; ///< kernel decay rate, 1 / second

    [[nodiscard]] constexpr double alpha() const noexcept { return n * beta; }

    friend constexpr bool operator==(const HawkesParams&, const HawkesParams&) = default;
};

/// Throws DomainError unless mu > 0, n >= 0 and beta > 0 (all finite).
inline void validate(const HawkesParams& p) {
    if (!(std::isfinite(p.mu) && p.mu > 0.0)) {
        throw DomainError("mu must be finite and > 0");
    }
    if (!(std::isfinite(p.n) && p.n >= 0.0)) {
        throw DomainError("n must be finite and >= 0");
    }
    if (!(std::isfinite(p.beta) && p.beta > 0.0)) {
        throw DomainError("beta must be finite and > 0");
    }
}

/// Strictly increasing event times in [0, horizon], seconds relative to the
/// start of the observation window.
class EventSeries {
public:
    EventSeries() = default;

    EventSeries(std::vector<double> times, double horizon)
        : times_(std::move(times)), horizon_(horizon) {
        if (!(std::isfinite(horizon_) && horizon_ >= 0.0)) {
            throw ValidationError("horizon must be finite and >= 0");
        }
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const double t = times_[i];
            if (!std::isfinite(t) || t < 0.0 || t > horizon_) {
                throw ValidationError("event time outside [0, horizon] at index " + std::to_string(i));
            }
            if (i > 0 && !(t > times_[i - 1])) {
                throw ValidationError("event times not strictly increasing at index " + std::to_string(i));
            }
        }
    }

    [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
    [[nodiscard]] double operator[](std::size_t i) const { return times_[i]; }

    friend bool operator==(const EventSeries&, const EventSeries&) = default;

private:
    std::vector<double> times_;
    double horizon_{0.0};
};

namespace detail {

inline void check_time(const EventSeries& events, double t) {
    if (!(t >= 0.0 && t <= events.horizon())) {
        throw DomainError("time outside [0, horizon]");
    }
}

// Parameters as accepted by the likelihood: mu may be 0 (the result is then
// non-finite for N > 0 and reported as a NumericError).
inline void validate_for_likelihood(const HawkesParams& p) {
    if (!(std::isfinite(p.mu) && p.mu >= 0.0) || !(std::isfinite(p.n) && p.n >= 0.0) ||
        !(std::isfinite(p.beta) && p.beta > 0.0)) {
        throw DomainError("invalid Hawkes parameters");
    }
}

} // namespace detail

/// Conditional intensity at t; only events strictly before t contribute.
[[nodiscard]] inline double intensity(const HawkesParams& p, const EventSeries& events, double t) {
    validate(p);
    detail::check_time(events, t);
    double excitation = 0.0;
    for (double ti : events.times()) {
        if (!(ti < t)) {
            break;
        }
        excitation += std::exp(-p.beta * (t - ti));
    }
    return p.mu + p.alpha() * excitation;
}

/// Integrated intensity Lambda(t) = mu t + n sum_{t_i < t} (1 - exp(-beta (t - t_i))).
[[nodiscard]] inline double compensator(const HawkesParams& p, const EventSeries& events, double t) {
    validate(p);
    detail::check_time(events, t);
    double sum = 0.0;
    for (double ti : events.times()) {
        if (!(ti < t)) {
            break;
        }
        sum += -std::expm1(-p.beta * (t - ti));
    }
    return p.mu * t + p.n * sum;
}

/// Log-likelihood value, gradient with respect to (mu, n, beta), and the
/// number of intensities that fell below the floor and were clamped.
struct LikelihoodEvaluation {
    double value{-std::numeric_limits<double>::infinity()};
    std::array<double, 3> gradient{};
    std::size_t clamped{0};
};

namespace detail {

// Shared O(N) pass. With A_i = sum_{j<i} exp(-beta (t_i - t_j)) and
// B_i = sum_{j<i} (t_i - t_j) exp(-beta (t_i - t_j)):
//   A_i = e_i (1 + A_{i-1}),  B_i = e_i (B_{i-1} + d_i (1 + A_{i-1})),
// where d_i = t_i - t_{i-1}, e_i = exp(-beta d_i). Only differences of
// consecutive times enter, so absolute epoch offsets cost no precision.
template <bool WithGradient>
LikelihoodEvaluation evaluate(const HawkesParams& p, const EventSeries& events, double floor) {
    const auto t = events.times();
    const double horizon = events.horizon();
    const double alpha = p.alpha();

    LikelihoodEvaluation out;
    double log_sum = 0.0;
    double a = 0.0;
    double b = 0.0;
    double g_mu = 0.0;
    double g_n = 0.0;
    double g_beta = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) {
            const double d = t[i] - t[i - 1];
            const double e = std::exp(-p.beta * d);
            if constexpr (WithGradient) {
                b = e * (b + d * (1.0 + a));
            }
            a = e * (1.0 + a);
        }
        double lambda = p.mu + alpha * a;
        if (lambda < floor) {
            lambda = floor;
            ++out.clamped;
        }
        log_sum += std::log(lambda);
        if constexpr (WithGradient) {
            const double inv = 1.0 / lambda;
            g_mu += inv;
            g_n += p.beta * a * inv;
            g_beta += p.n * (a - p.beta * b) * inv;
        }
    }

    double tail = 0.0;
    double tail_lag = 0.0;
    for (double ti : t) {
        const double lag = horizon - ti;
        const double m = std::expm1(-p.beta * lag);
        tail -= m;
        if constexpr (WithGradient) {
            tail_lag += lag * (1.0 + m);
        }
    }
    out.value = log_sum - p.mu * horizon - p.n * tail;
    if constexpr (WithGradient) {
        out.gradient = {g_mu - horizon, g_n - tail, g_beta - p.n * tail_lag};
    }
    return out;
}

} // namespace detail

/// Exact log-likelihood sum_i ln lambda(t_i) - Lambda(T), conditioned on an
/// empty history before the window. A positive `intensity_floor` clamps
/// ln lambda from below; with the default (0) no clamping happens and a
/// non-finite value raises NumericError.
[[nodiscard]] inline double log_likelihood(const HawkesParams& p, const EventSeries& events,
                                           double intensity_floor = 0.0) {
    detail::validate_for_likelihood(p);
    const auto r = detail::evaluate<false>(p, events, intensity_floor);
    if (!std::isfinite(r.value)) {
        throw NumericError("log-likelihood is not finite");
    }
    return r.value;
}

[[nodiscard]] inline LikelihoodEvaluation log_likelihood_with_gradient(const HawkesParams& p,
                                                                       const EventSeries& events,
                                                                       double intensity_floor = 0.0) {
    detail::validate_for_likelihood(p);
    auto r = detail::evaluate<true>(p, events, intensity_floor);
    if (!std::isfinite(r.value)) {
        throw NumericError("log-likelihood is not finite");
    }
    return r;
}

/// n = integral_0^inf alpha exp(-beta t) dt = alpha / beta.
[[nodiscard]] inline double branching_ratio(double alpha, double beta) {
    if (!(beta > 0.0)) {
        throw DomainError("beta must be > 0");
    }
    if (!(alpha >= 0.0)) {
        throw DomainError("alpha must be >= 0");
    }
    return alpha / beta;
}

struct ClusterStatistics {
    double endogenous_fraction;       ///< expected share of descendants among all events (= n)
    double descendants_per_immigrant; ///< n + n^2 + ... = n / (1 - n)
    double mean_cluster_size;         ///< immigrant plus descendants, 1 / (1 - n)
};

/// Only defined in the sub-critical regime 0 <= n < 1.
[[nodiscard]] inline ClusterStatistics endogenous_fraction(double n) {
    if (!(n >= 0.0 && n < 1.0)) {
        throw DomainError("endogenous fraction requires 0 <= n < 1");
    }
    const double descendants = n / (1.0 - n);
    return {descendants / (1.0 + descendants), descendants, 1.0 / (1.0 - n)};
}

} // namespace hawkes
