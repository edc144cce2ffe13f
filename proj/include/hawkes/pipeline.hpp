#pragma once

#include "hawkes/errors.hpp"
#include "hawkes/estimator.hpp"
#include "hawkes/goodness_of_fit.hpp"
#include "hawkes/market_data.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace hawkes {

/// Event stream of one kept trading day, relative to the session open.
struct SessionEvents {
    Date date{};
    RawSeries events;
};

enum class WindowStatus { ok, skipped_few_events, rejected, failed };

[[nodiscard]] constexpr std::string_view to_string(WindowStatus s) noexcept {
    switch (s) {
    case WindowStatus::ok: return "ok";
    case WindowStatus::skipped_few_events: return "skipped_few_events";
    case WindowStatus::rejected: return "rejected";
    case WindowStatus::failed: return "failed";
    }
    return "failed";
}

[[nodiscard]] inline WindowStatus parse_window_status(std::string_view s) {
    for (auto st : {WindowStatus::ok, WindowStatus::skipped_few_events, WindowStatus::rejected,
                    WindowStatus::failed}) {
        if (to_string(st) == s) {
            return st;
        }
    }
    throw ValidationError("unknown window status '" + std::string(s) + "'");
}

/// Previous-day quantile band the detector compares against.
struct DetectorBand {
    double n_lo{0.0};
    double n_hi{0.0};
    double rate_lo{0.0};
    double rate_hi{0.0};
    std::size_t reference_windows{0};
};

struct WindowEstimate {
    std::size_t session_index{0};
    Date date{};
    double window_start{0.0};
    double window_length{0.0};
    std::size_t n_events{0};
    ParameterSummary mu;
    ParameterSummary n;
    ParameterSummary beta;
    double log_likelihood{std::numeric_limits<double>::quiet_NaN()}; ///< median over realizations
    std::size_t converged_fits{0};
    GofVerdict gof;
    WindowStatus status{WindowStatus::failed};
    std::string error;
    std::optional<bool> flag_n;
    std::optional<bool> flag_rate;
    std::optional<DetectorBand> band;

    [[nodiscard]] double rate() const noexcept { return static_cast<double>(n_events) / window_length; }
    [[nodiscard]] bool has_estimate() const noexcept {
        return status == WindowStatus::ok || status == WindowStatus::rejected;
    }
};

struct AggregationRecord {
    Date center{};
    double window_length{0.0};
    std::string param;
    double mean{0.0};
    double median{0.0};
    double q_lo{0.0};
    double q_hi{0.0};
    std::size_t count{0};
};

struct ScanReport {
    std::vector<WindowEstimate> windows;
    std::vector<AggregationRecord> aggregation;

    [[nodiscard]] std::size_t count(WindowStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(windows.begin(), windows.end(), [s](const auto& w) { return w.status == s; }));
    }
};

struct ScanConfig {
    std::vector<double> window_lengths{600.0, 1200.0, 1800.0};
    double step{300.0};
    FitConfig fit{};
    BootstrapConfig bootstrap{}; ///< the seed field is replaced per window
    std::uint64_t master_seed{0};
    unsigned jobs{0}; ///< 0 = hardware concurrency
};

/// Windows [k step, k step + len) fully inside a session of the given length.
[[nodiscard]] inline std::size_t window_count(double session_length, double len, double step) {
    if (!(len > 0.0) || !(step > 0.0)) {
        throw DomainError("window length and step must be > 0");
    }
    if (session_length < len) {
        return 0;
    }
    return static_cast<std::size_t>(std::floor((session_length - len) / step + 1e-9)) + 1;
}

/// Seed of one window: a pure function of (master seed, session date, start,
/// length), so any window can be replayed on its own.
[[nodiscard]] inline std::uint64_t window_seed(std::uint64_t master, const Date& date, double start, double len) {
    const auto day = static_cast<std::uint64_t>(std::chrono::sys_days{date}.time_since_epoch().count());
    return derive_seed(master, {day, static_cast<std::uint64_t>(std::llround(start * 1000.0)),
                                static_cast<std::uint64_t>(std::llround(len * 1000.0))});
}

/// Calibrates one window: bootstrap fits plus the all-realizations
/// rejection rule. Failures are folded into the status.
[[nodiscard]] inline WindowEstimate estimate_window(const SessionEvents& session, std::size_t session_index,
                                                    double start, double len, const ScanConfig& cfg) {
    WindowEstimate w;
    w.session_index = session_index;
    w.date = session.date;
    w.window_start = start;
    w.window_length = len;
    const RawSeries raw = session.events.slice(start, start + len);
    w.n_events = raw.size();
    if (raw.size() < cfg.fit.min_events || raw.size() == 0) {
        w.status = WindowStatus::skipped_few_events;
        return w;
    }
    try {
        BootstrapConfig b = cfg.bootstrap;
        b.seed = window_seed(cfg.master_seed, session.date, start, len);
        const auto boot = fit_bootstrap(raw, cfg.fit, b);
        w.converged_fits = boot.converged;
        w.mu = boot.mu;
        w.n = boot.n;
        w.beta = boot.beta;
        w.log_likelihood = boot.log_likelihood.median;
        if (!boot.usable) {
            w.status = WindowStatus::failed;
            w.error = "too few converged fits";
            return w;
        }
        w.gof = window_rejection(boot);
        w.status = w.gof.window_rejected ? WindowStatus::rejected : WindowStatus::ok;
    } catch (const Error& e) {
        w.status = WindowStatus::failed;
        w.error = e.what();
    }
    return w;
}

/// Runs `tasks.size()` independent jobs on a fixed number of threads; output
/// order is the task order whatever the completion order.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t tasks, unsigned jobs, Fn&& fn) {
    std::vector<Result> out(tasks);
    const unsigned workers =
        std::max(1u, std::min<unsigned>(jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs,
                                        static_cast<unsigned>(std::max<std::size_t>(tasks, 1))));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < tasks; i = next++) {
            out[i] = fn(i);
        }
    };
    if (workers == 1) {
        work();
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k) {
        pool.emplace_back(work);
    }
    pool.clear();
    return out;
}

/// Sweeps every window length through every session with the configured
/// step. Results are ordered by (session, window_start, window_length).
[[nodiscard]] inline ScanReport scan(std::span<const SessionEvents> sessions, const ScanConfig& cfg = {}) {
    struct Task {
        std::size_t session;
        double start;
        double len;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        sessions[s].events.validate();
        const double length = sessions[s].events.end - sessions[s].events.start;
        std::vector<Task> local;
        for (double len : cfg.window_lengths) {
            const std::size_t count = window_count(length, len, cfg.step);
            for (std::size_t k = 0; k < count; ++k) {
                local.push_back({s, sessions[s].events.start + static_cast<double>(k) * cfg.step, len});
            }
        }
        std::stable_sort(local.begin(), local.end(), [](const Task& a, const Task& b) {
            return a.start != b.start ? a.start < b.start : a.len < b.len;
        });
        tasks.insert(tasks.end(), local.begin(), local.end());
    }
    ScanReport report;
    report.windows = parallel_map<WindowEstimate>(tasks.size(), cfg.jobs, [&](std::size_t i) {
        const auto& t = tasks[i];
        return estimate_window(sessions[t.session], t.session, t.start, t.len, cfg);
    });
    return report;
}

struct AggregateConfig {
    int half_width_days{30}; ///< centred window of 2 * half_width + 1 days
    double q_lo{0.10};
    double q_hi{0.90};
    bool include_rejected{false};
};

/// Centred rolling aggregation of per-window bootstrap medians. One record per
/// (distinct session date, window length, parameter); periods without any
/// eligible window produce no record.
[[nodiscard]] inline std::vector<AggregationRecord> aggregate(std::span<const WindowEstimate> windows,
                                                              const AggregateConfig& cfg = {}) {
    if (windows.empty()) {
        throw DomainError("cannot aggregate an empty report");
    }
    using std::chrono::sys_days;
    std::vector<sys_days> centers;
    std::vector<double> lengths;
    for (const auto& w : windows) {
        centers.push_back(sys_days{w.date});
        lengths.push_back(w.window_length);
    }
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    std::sort(lengths.begin(), lengths.end());
    lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

    auto eligible = [&](const WindowEstimate& w) {
        return w.status == WindowStatus::ok || (cfg.include_rejected && w.status == WindowStatus::rejected);
    };
    std::vector<AggregationRecord> out;
    const std::chrono::days half{cfg.half_width_days};
    for (const auto& c : centers) {
        for (double len : lengths) {
            std::vector<double> values[3];
            for (const auto& w : windows) {
                const auto d = sys_days{w.date};
                if (w.window_length != len || d < c - half || d > c + half || !eligible(w)) {
                    continue;
                }
                values[0].push_back(w.mu.median);
                values[1].push_back(w.n.median);
                values[2].push_back(w.beta.median);
            }
            static constexpr const char* kNames[3] = {"mu", "n", "beta"};
            for (int k = 0; k < 3; ++k) {
                auto& v = values[k];
                if (v.empty()) {
                    continue;
                }
                std::sort(v.begin(), v.end());
                out.push_back({std::chrono::year_month_day{c}, len, kNames[k], stats::mean(v),
                               stats::quantile_sorted(v, 0.5), stats::quantile_sorted(v, cfg.q_lo),
                               stats::quantile_sorted(v, cfg.q_hi), v.size()});
            }
        }
    }
    return out;
}

struct DetectorConfig {
    double band_lo{0.05};
    double band_hi{0.95};
    std::size_t min_windows{5}; ///< ok windows required on the reference day
};

/// Flags windows whose bootstrap-median n exceeds the previous session's
/// upper n quantile, and, separately, windows whose event rate exceeds the
/// previous session's upper rate quantile. The reference is the preceding
/// session in report order with the same window length; without one (or
/// with too few ok windows) flags stay undefined.
inline void criticality_detector(std::span<WindowEstimate> windows, const DetectorConfig& cfg = {}) {
    if (!(cfg.band_lo >= 0.0 && cfg.band_lo < cfg.band_hi && cfg.band_hi <= 1.0)) {
        throw DomainError("detector band must satisfy 0 <= lo < hi <= 1");
    }
    std::map<std::pair<std::size_t, double>, std::vector<const WindowEstimate*>> by_session;
    std::vector<std::size_t> sessions;
    for (const auto& w : windows) {
        by_session[{w.session_index, w.window_length}].push_back(&w);
        sessions.push_back(w.session_index);
    }
    std::sort(sessions.begin(), sessions.end());
    sessions.erase(std::unique(sessions.begin(), sessions.end()), sessions.end());

    std::map<std::pair<std::size_t, double>, std::optional<DetectorBand>> bands;
    for (auto& w : windows) {
        w.flag_n.reset();
        w.flag_rate.reset();
        w.band.reset();
        const auto it = std::lower_bound(sessions.begin(), sessions.end(), w.session_index);
        if (it == sessions.begin()) {
            continue;
        }
        const std::pair<std::size_t, double> ref_key{*(it - 1), w.window_length};
        auto cached = bands.find(ref_key);
        if (cached == bands.end()) {
            std::optional<DetectorBand> band;
            std::vector<double> n;
            std::vector<double> rate;
            for (const auto* r : by_session[ref_key]) {
                if (r->status == WindowStatus::ok) {
                    n.push_back(r->n.median);
                    rate.push_back(r->rate());
                }
            }
            if (n.size() >= cfg.min_windows) {
                std::sort(n.begin(), n.end());
                std::sort(rate.begin(), rate.end());
                band = DetectorBand{stats::quantile_sorted(n, cfg.band_lo), stats::quantile_sorted(n, cfg.band_hi),
                                    stats::quantile_sorted(rate, cfg.band_lo),
                                    stats::quantile_sorted(rate, cfg.band_hi), n.size()};
            }
            cached = bands.emplace(ref_key, band).first;
        }
        if (!cached->second) {
            continue;
        }
        w.band = cached->second;
        w.flag_rate = w.rate() > w.band->rate_hi;
        if (w.has_estimate()) {
            w.flag_n = w.n.median > w.band->n_hi;
        }
    }
}

struct NullArmSummary {
    double window_length{0.0};
    std::size_t windows_ok{0};
    double n_median{std::numeric_limits<double>::quiet_NaN()};
    double n_q10{std::numeric_limits<double>::quiet_NaN()};
    double n_q90{std::numeric_limits<double>::quiet_NaN()};
};

struct ReshuffleComparison {
    ScanReport original;
    ScanReport reshuffled;
    std::vector<NullArmSummary> original_summary;
    std::vector<NullArmSummary> reshuffled_summary;
    std::vector<SessionEvents> reshuffled_sessions;
    bool counts_conserved{false};
};

[[nodiscard]] inline std::vector<NullArmSummary> summarize_n(const ScanReport& report,
                                                             std::span<const double> lengths) {
    std::vector<NullArmSummary> out;
    for (double len : lengths) {
        NullArmSummary s;
        s.window_length = len;
        std::vector<double> n;
        for (const auto& w : report.windows) {
            if (w.window_length == len && w.status == WindowStatus::ok) {
                n.push_back(w.n.median);
            }
        }
        s.windows_ok = n.size();
        if (!n.empty()) {
            std::sort(n.begin(), n.end());
            s.n_median = stats::quantile_sorted(n, 0.5);
            s.n_q10 = stats::quantile_sorted(n, 0.1);
            s.n_q90 = stats::quantile_sorted(n, 0.9);
        }
        out.push_back(s);
    }
    return out;
}

/// Poissonises every session (counts kept, times redrawn uniformly over the
/// day) and scans both arms identically. Integer-second input is floored
/// again after redrawing so both arms pass through the same randomisation.
[[nodiscard]] inline std::vector<SessionEvents> poissonize_sessions(std::span<const SessionEvents> sessions,
                                                                    std::uint64_t master_seed) {
    std::vector<SessionEvents> out;
    for (const auto& s : sessions) {
        const auto day = static_cast<std::uint64_t>(std::chrono::sys_days{s.date}.time_since_epoch().count());
        const auto shuffled = poissonize_within_day(s.events, derive_seed(master_seed, {0x5245534855464c45ULL, day}));
        RawSeries raw;
        if (s.events.integer_resolution()) {
            raw = floor_to_seconds(shuffled, s.events.start);
        } else {
            raw = RawSeries{{}, s.events.start, s.events.end};
            for (double t : shuffled.times()) {
                raw.timestamps.push_back(s.events.start + t);
            }
        }
        out.push_back({s.date, std::move(raw)});
    }
    return out;
}

[[nodiscard]] inline ReshuffleComparison reshuffle_null_experiment(std::span<const SessionEvents> sessions,
                                                                   const ScanConfig& cfg = {}) {
    ReshuffleComparison cmp;
    cmp.reshuffled_sessions = poissonize_sessions(sessions, cfg.master_seed);
    cmp.counts_conserved = true;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        cmp.counts_conserved = cmp.counts_conserved && sessions[i].events.size() == cmp.reshuffled_sessions[i].events.size();
    }
    cmp.original = scan(sessions, cfg);
    cmp.reshuffled = scan(cmp.reshuffled_sessions, cfg);
    cmp.original_summary = summarize_n(cmp.original, cfg.window_lengths);
    cmp.reshuffled_summary = summarize_n(cmp.reshuffled, cfg.window_lengths);
    return cmp;
}

} // namespace hawkes
