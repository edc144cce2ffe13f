#pragma once

// Reference computations written independently of the library: direct
// double sums, numerical quadrature and finite differences.

#include "hawkes/core_model.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double intensity(double mu, double n, double beta, const std::vector<double>& t, double at) {
    double s = 0.0;
    for (double ti : t) {
        if (ti < at) {
            s += n * beta * std::exp(-beta * (at - ti));
        }
    }
    return mu + s;
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

/// Adaptive Simpson on [a, b] for a smooth integrand.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    if (b <= a) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

/// Integral of the intensity over [0, at], split at the event times where
/// the integrand jumps.
inline double compensator(double mu, double n, double beta, const std::vector<double>& t, double at) {
    std::vector<double> cuts{0.0};
    for (double ti : t) {
        if (ti > 0.0 && ti < at) {
            cuts.push_back(ti);
        }
    }
    cuts.push_back(at);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k];
        const double hi = cuts[k + 1];
        // Events strictly before the segment's right end contribute on (lo, hi).
        auto f = [&](double x) {
            double s = 0.0;
            for (double ti : t) {
                if (ti <= lo) {
                    s += n * beta * std::exp(-beta * (x - ti));
                }
            }
            return mu + s;
        };
        total += integrate(f, lo, hi, 1e-13);
    }
    return total;
}

/// O(N^2) log-likelihood straight from the definition.
inline double log_likelihood(double mu, double n, double beta, const std::vector<double>& t, double horizon) {
    double ll = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double s = mu;
        for (std::size_t j = 0; j < i; ++j) {
            s += n * beta * std::exp(-beta * (t[i] - t[j]));
        }
        ll += std::log(s);
    }
    double comp = mu * horizon;
    for (double ti : t) {
        comp += n * (1.0 - std::exp(-beta * (horizon - ti)));
    }
    return ll - comp;
}

/// Sorted uniform draws on [0, horizon).
inline std::vector<double> uniform_times(std::size_t count, double horizon, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, horizon);
    std::vector<double> t(count);
    for (auto& x : t) {
        x = u(gen);
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

/// Brute-force type-7 quantile: sort and interpolate at h = (n - 1) q.
inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace oracle
