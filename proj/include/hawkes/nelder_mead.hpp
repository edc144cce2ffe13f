#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace hawkes::optim {

struct NelderMeadOptions {
    double initial_step{0.5};
    double xtol{1e-6};              ///< simplex diameter, relative to max(1, |x_best|)
    double ftol{1e-8};              ///< value spread, relative to max(1, |f_best|)
    std::size_t max_iterations{2000};
    std::size_t restarts{1};        ///< fresh simplices built around the optimum after convergence
};

struct NelderMeadResult {
    std::vector<double> x;
    double value{std::numeric_limits<double>::infinity()};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
};

/// Unconstrained downhill simplex minimisation (Lagarias et al. coefficients).
/// Non-finite objective values are treated as +inf.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& objective, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
    const std::size_t dim = x0.size();
    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    std::vector<double> values(dim + 1);
    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim);
    std::vector<double> trial(dim);
    std::vector<double> trial2(dim);

    auto build = [&](const std::vector<double>& base, double fbase) {
        simplex[0] = base;
        values[0] = fbase;
        for (std::size_t k = 0; k < dim; ++k) {
            simplex[k + 1] = base;
            simplex[k + 1][k] += opt.initial_step;
            values[k + 1] = eval(simplex[k + 1]);
        }
    };
    auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t k = 0; k < dim; ++k) {
            out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
        }
    };

    build(x0, eval(x0));
    std::size_t restarts_left = opt.restarts;
    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[dim - 1];

        double fspread = 0.0;
        double xspread = 0.0;
        double xscale = 1.0;
        for (double v : simplex[best]) {
            xscale = std::max(xscale, std::abs(v));
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            fspread = std::max(fspread, std::abs(values[i] - values[best]));
            for (std::size_t k = 0; k < dim; ++k) {
                xspread = std::max(xspread, std::abs(simplex[i][k] - simplex[best][k]));
            }
        }
        const bool finite_best = std::isfinite(values[best]);
        if (finite_best && fspread <= opt.ftol * std::max(1.0, std::abs(values[best])) &&
            xspread <= opt.xtol * xscale) {
            if (restarts_left == 0) {
                result.converged = true;
                result.x = simplex[best];
                result.value = values[best];
                return result;
            }
            --restarts_left;
            const auto base = simplex[best];
            build(base, values[best]);
            continue;
        }
        if (result.iterations >= opt.max_iterations) {
            result.x = simplex[best];
            result.value = values[best];
            return result;
        }
        ++result.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t k = 0; k < dim; ++k) {
                centroid[k] += simplex[i][k] / static_cast<double>(dim);
            }
        }

        point(-1.0, simplex[worst], trial);
        const double fr = eval(trial);
        if (fr < values[best]) {
            point(-2.0, simplex[worst], trial2);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        if (fr < values[worst]) {
            point(-0.5, simplex[worst], trial2);
            const double fc = eval(trial2);
            if (fc <= fr) {
                simplex[worst] = trial2;
                values[worst] = fc;
                continue;
            }
        } else {
            point(0.5, simplex[worst], trial2);
            const double fc = eval(trial2);
            if (fc < values[worst]) {
                simplex[worst] = trial2;
                values[worst] = fc;
                continue;
            }
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t k = 0; k < dim; ++k) {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            values[i] = eval(simplex[i]);
        }
    }
}

} // namespace hawkes::optim
