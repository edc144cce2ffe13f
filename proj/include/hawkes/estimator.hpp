#pragma once

#include "hawkes/core_model.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/market_data.hpp"
#include "hawkes/nelder_mead.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hawkes {

/// Internal coordinates used by the optimiser.
enum class Parametrization {
    branching_ratio, ///< (log mu, scaled-logit n, bounded log beta)
    amplitude,       ///< (log mu, log alpha, bounded log beta); n = alpha / beta
};

struct FitConfig {
    std::size_t min_events{100};
    double n_max{1.0};
    double beta_min_factor{1.0};   ///< beta_min = factor / T
    double beta_max_factor{1e3};   ///< beta_max = factor / mean inter-event gap
    std::vector<double> n_start_fractions{0.1, 0.5, 0.9};  ///< times n_max
    std::vector<double> beta_start_multipliers{0.1, 1.0, 10.0}; ///< times N / T
    bool grid_starts{true};
    std::vector<HawkesParams> extra_starts; ///< tried after the grid
    double rel_param_tol{1e-6};
    double func_tol{1e-8};
    std::size_t max_iterations{2000};
    double intensity_floor{1e-300};
    double boundary_tol{1e-3}; ///< n_hat >= n_max (1 - tol) raises boundary_flag
    Parametrization parametrization{Parametrization::branching_ratio};
};

struct StartOutcome {
    HawkesParams initial;
    double initial_log_likelihood{-std::numeric_limits<double>::infinity()};
    HawkesParams final;
    double final_log_likelihood{-std::numeric_limits<double>::infinity()};
    bool converged{false};
    std::size_t iterations{0};
};

struct FitResult {
    HawkesParams params;
    double log_likelihood{-std::numeric_limits<double>::infinity()};
    bool converged{false};
    std::size_t n_events{0};
    std::size_t starts_tried{0};
    bool boundary_flag{false};
    std::vector<StartOutcome> starts;
    std::size_t evaluations{0};
    std::size_t clamped_intensities{0}; ///< at the optimum
    std::array<double, 3> gradient{};   ///< d ll / d (mu, n, beta) at the optimum
};

namespace detail {

inline double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Maps between the box mu > 0, n in (0, n_max), beta in (beta_min, beta_max)
// and R^3.
struct Transform {
    Parametrization kind;
    double n_max;
    double log_beta_lo;
    double log_beta_hi;

    [[nodiscard]] HawkesParams to_params(const std::vector<double>& z) const {
        HawkesParams p;
        p.mu = std::exp(z[0]);
        p.beta = std::exp(log_beta_lo + (log_beta_hi - log_beta_lo) * logistic(z[2]));
        if (kind == Parametrization::branching_ratio) {
            p.n = n_max * logistic(z[1]);
        } else {
            p.n = std::exp(z[1]) / p.beta;
        }
        return p;
    }

    [[nodiscard]] std::vector<double> to_internal(const HawkesParams& p) const {
        const double lb = std::clamp((std::log(p.beta) - log_beta_lo) / (log_beta_hi - log_beta_lo), 1e-9,
                                     1.0 - 1e-9);
        std::vector<double> z(3);
        z[0] = std::log(p.mu);
        z[2] = logit(lb);
        if (kind == Parametrization::branching_ratio) {
            z[1] = logit(std::clamp(p.n / n_max, 1e-9, 1.0 - 1e-9));
        } else {
            z[1] = std::log(std::max(p.n, 1e-12) * p.beta);
        }
        return z;
    }

    [[nodiscard]] bool admissible(const HawkesParams& p) const {
        return kind == Parametrization::branching_ratio || p.n < n_max;
    }
};

} // namespace detail

/// Maximum likelihood estimate of (mu, n, beta) by multi-start simplex search
/// on unconstrained coordinates. The best endpoint over every start is
/// returned; throws InsufficientDataError below `min_events` and
/// NonConvergenceError when no start converges.
[[nodiscard]] inline FitResult fit_mle(const EventSeries& events, const FitConfig& cfg = {}) {
    const std::size_t count = events.size();
    if (count < cfg.min_events || count == 0) {
        throw InsufficientDataError("window has " + std::to_string(count) + " events, need " +
                                    std::to_string(std::max<std::size_t>(cfg.min_events, 1)));
    }
    if (!(cfg.n_max > 0.0)) {
        throw DomainError("n_max must be > 0");
    }
    const double horizon = events.horizon();
    if (!(horizon > 0.0)) {
        throw DomainError("window length must be > 0");
    }
    const double rate = static_cast<double>(count) / horizon;
    const double beta_min = cfg.beta_min_factor / horizon;
    const double beta_max = cfg.beta_max_factor * rate;
    if (!(beta_max > beta_min)) {
        throw DomainError("empty beta range");
    }
    const detail::Transform tr{cfg.parametrization, cfg.n_max, std::log(beta_min), std::log(beta_max)};

    auto objective = [&](const std::vector<double>& z) {
        const HawkesParams p = tr.to_params(z);
        if (!tr.admissible(p) || !(p.mu > 0.0) || !std::isfinite(p.mu)) {
            return std::numeric_limits<double>::infinity();
        }
        return -detail::evaluate<false>(p, events, cfg.intensity_floor).value;
    };

    std::vector<HawkesParams> starts;
    if (cfg.grid_starts) {
        for (double nf : cfg.n_start_fractions) {
            for (double bm : cfg.beta_start_multipliers) {
                const double n0 = nf * cfg.n_max;
                const double b0 = std::clamp(bm * rate, beta_min * 1.01, beta_max / 1.01);
                starts.push_back({rate * std::max(1.0 - n0, 0.1), n0, b0});
            }
        }
    }
    starts.insert(starts.end(), cfg.extra_starts.begin(), cfg.extra_starts.end());
    if (starts.empty()) {
        throw DomainError("no starting points configured");
    }

    optim::NelderMeadOptions nm;
    nm.xtol = cfg.rel_param_tol;
    nm.ftol = cfg.func_tol;
    nm.max_iterations = cfg.max_iterations;

    FitResult result;
    result.n_events = count;
    std::optional<std::size_t> best;
    for (const auto& s0 : starts) {
        StartOutcome o;
        const auto z0 = tr.to_internal(s0);
        o.initial = tr.to_params(z0);
        o.initial_log_likelihood = -objective(z0);
        const auto r = optim::nelder_mead(objective, z0, nm);
        result.evaluations += r.evaluations;
        o.final = tr.to_params(r.x);
        o.final_log_likelihood = -r.value;
        o.converged = r.converged;
        o.iterations = r.iterations;
        // The simplex never accepts a worse vertex, so the endpoint dominates
        // its own start; keep max() for the degenerate all-infinite case.
        if (o.initial_log_likelihood > o.final_log_likelihood) {
            o.final = o.initial;
            o.final_log_likelihood = o.initial_log_likelihood;
        }
        result.starts.push_back(o);
        if (!best || o.final_log_likelihood > result.starts[*best].final_log_likelihood) {
            best = result.starts.size() - 1;
        }
    }
    result.starts_tried = result.starts.size();
    const bool any_converged =
        std::any_of(result.starts.begin(), result.starts.end(), [](const auto& s) { return s.converged; });
    if (!any_converged || !std::isfinite(result.starts[*best].final_log_likelihood)) {
        throw NonConvergenceError("no start converged (" + std::to_string(result.starts_tried) + " tried, " +
                                  std::to_string(result.evaluations) + " evaluations)");
    }
    const auto& b = result.starts[*best];
    result.params = b.final;
    result.log_likelihood = b.final_log_likelihood;
    result.converged = b.converged;
    result.boundary_flag = result.params.n >= cfg.n_max * (1.0 - cfg.boundary_tol);
    const auto g = detail::evaluate<true>(result.params, events, cfg.intensity_floor);
    result.gradient = g.gradient;
    result.clamped_intensities = g.clamped;
    return result;
}

/// Mean, spread and quantiles of one parameter across bootstrap fits.
struct ParameterSummary {
    double mean{std::numeric_limits<double>::quiet_NaN()};
    double stddev{std::numeric_limits<double>::quiet_NaN()};
    double median{std::numeric_limits<double>::quiet_NaN()};
    double q05{std::numeric_limits<double>::quiet_NaN()};
    double q10{std::numeric_limits<double>::quiet_NaN()};
    double q90{std::numeric_limits<double>::quiet_NaN()};
    double q95{std::numeric_limits<double>::quiet_NaN()};

    [[nodiscard]] double relative_stddev() const { return stddev / std::abs(mean); }

    [[nodiscard]] static ParameterSummary of(std::vector<double> values) {
        ParameterSummary s;
        if (values.empty()) {
            return s;
        }
        s.mean = stats::mean(values);
        s.stddev = stats::stddev(values);
        std::sort(values.begin(), values.end());
        s.median = stats::quantile_sorted(values, 0.5);
        s.q05 = stats::quantile_sorted(values, 0.05);
        s.q10 = stats::quantile_sorted(values, 0.10);
        s.q90 = stats::quantile_sorted(values, 0.90);
        s.q95 = stats::quantile_sorted(values, 0.95);
        return s;
    }
};

struct BootstrapConfig {
    std::size_t realizations{50};
    std::uint64_t seed{0};
    std::size_t min_converged{0}; ///< 0 means half of the realizations, rounded up
    /// Realizations after the first start from the first optimum instead of
    /// the full grid.
    bool warm_start{true};
};

struct BootstrapRealization {
    std::uint64_t seed{0};
    EventSeries series;
    std::optional<FitResult> fit;
    std::string error;
};

struct BootstrapResult {
    std::vector<BootstrapRealization> realizations;
    ParameterSummary mu;
    ParameterSummary n;
    ParameterSummary beta;
    ParameterSummary log_likelihood;
    std::size_t converged{0};
    bool usable{false};

    [[nodiscard]] std::vector<FitResult> fits() const {
        std::vector<FitResult> out;
        for (const auto& r : realizations) {
            if (r.fit) {
                out.push_back(*r.fit);
            }
        }
        return out;
    }
};

/// Fits `realizations` independent sub-second randomisations of the same
/// integer-second window. Realization k uses seed derive_seed(cfg.seed, {k}).
/// Per-realization fit failures are recorded, not thrown; the result is
/// usable when at least min_converged fits converged.
[[nodiscard]] inline BootstrapResult fit_bootstrap(const RawSeries& raw, const FitConfig& fit_cfg,
                                                   const BootstrapConfig& cfg = {}) {
    if (cfg.realizations == 0) {
        throw DomainError("bootstrap needs at least one realization");
    }
    if (raw.size() < fit_cfg.min_events || raw.size() == 0) {
        throw InsufficientDataError("window has " + std::to_string(raw.size()) + " events, need " +
                                    std::to_string(std::max<std::size_t>(fit_cfg.min_events, 1)));
    }
    const bool identity = !raw.integer_resolution();
    BootstrapResult out;
    FitConfig warm = fit_cfg;
    std::optional<FitResult> shared;
    for (std::size_t k = 0; k < cfg.realizations; ++k) {
        BootstrapRealization r;
        r.seed = derive_seed(cfg.seed, {k});
        r.series = randomize_subsecond(raw, r.seed);
        if (identity && k > 0) {
            r.fit = out.realizations.front().fit;
            r.error = out.realizations.front().error;
            out.realizations.push_back(std::move(r));
            continue;
        }
        try {
            r.fit = fit_mle(r.series, k > 0 && cfg.warm_start && shared ? warm : fit_cfg);
            if (k == 0 && cfg.warm_start) {
                shared = r.fit;
                warm.grid_starts = false;
                warm.extra_starts.insert(warm.extra_starts.begin(), r.fit->params);
            }
        } catch (const Error& e) {
            r.error = e.what();
        }
        out.realizations.push_back(std::move(r));
    }
    std::vector<double> mu, n, beta, ll;
    for (const auto& r : out.realizations) {
        if (r.fit && r.fit->converged) {
            mu.push_back(r.fit->params.mu);
            n.push_back(r.fit->params.n);
            beta.push_back(r.fit->params.beta);
            ll.push_back(r.fit->log_likelihood);
        }
    }
    out.converged = mu.size();
    const std::size_t needed = cfg.min_converged > 0 ? cfg.min_converged : (cfg.realizations + 1) / 2;
    out.usable = out.converged >= needed;
    out.mu = ParameterSummary::of(std::move(mu));
    out.n = ParameterSummary::of(std::move(n));
    out.beta = ParameterSummary::of(std::move(beta));
    out.log_likelihood = ParameterSummary::of(std::move(ll));
    return out;
}

} // namespace hawkes
