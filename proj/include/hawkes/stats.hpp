#pragma once

#include "hawkes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace hawkes::stats {

[[nodiscard]] inline double mean(std::span<const double> x) {
    if (x.empty()) {
        throw DomainError("mean of empty sample");
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
[[nodiscard]] inline double stddev(std::span<const double> x) {
    if (x.size() < 2) {
        return 0.0;
    }
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n - 1) q, the "type 7" convention). Input must be sorted.
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw DomainError("quantile of empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError("quantile level outside [0, 1]");
    }
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

[[nodiscard]] inline double quantile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, q);
}

[[nodiscard]] inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
/// For small lambda the alternating series converges slowly, so the
/// equivalent Jacobi-theta form is summed instead.
[[nodiscard]] inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) {
        return 1.0;
    }
    if (lambda < 1.18) {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double s = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double j = 2.0 * k - 1.0;
            s += std::exp(-j * j * pi2 / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += sign * term;
        if (term < 1e-18) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// Finite-sample argument scaling applied before Q.
[[nodiscard]] inline double ks_scaled(double effective_n, double d) {
    const double r = std::sqrt(effective_n);
    return (r + 0.12 + 0.11 / r) * d;
}

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
};

/// One-sample KS against the uniform CDF on [0, 1].
[[nodiscard]] inline KsResult ks_uniform(std::span<const double> u) {
    if (u.size() < 5) {
        throw DomainError("KS test needs at least 5 values");
    }
    std::vector<double> s(u.begin(), u.end());
    for (double v : s) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("KS uniform test: value outside [0, 1]");
        }
    }
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double above = static_cast<double>(i + 1) / n - s[i];
        const double below = s[i] - static_cast<double>(i) / n;
        d = std::max({d, above, below});
    }
    return {d, kolmogorov_q(ks_scaled(n, d))};
}

/// Two-sample KS; ties are handled by evaluating both ECDFs after each
/// distinct value.
[[nodiscard]] inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw DomainError("two-sample KS needs non-empty samples");
    }
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto nx = static_cast<double>(x.size());
    const auto ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) {
            ++i;
        }
        while (j < y.size() && y[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    const double ne = nx * ny / (nx + ny);
    return {d, kolmogorov_q(ks_scaled(ne, d))};
}

} // namespace hawkes::stats
