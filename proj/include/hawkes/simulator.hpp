#pragma once

#include "hawkes/core_model.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace hawkes {

enum class SimulationStatus { complete, exploded };

struct SimulationLimits {
    std::size_t max_events{10'000'000};
};

struct Simulation {
    EventSeries events;
    SimulationStatus status{SimulationStatus::complete};

    [[nodiscard]] bool exploded() const noexcept { return status == SimulationStatus::exploded; }
};

namespace detail {

inline void check_horizon(double horizon) {
    if (!(std::isfinite(horizon) && horizon > 0.0)) {
        throw DomainError("simulation horizon must be finite and > 0");
    }
}

} // namespace detail

/// Exact simulation on [0, horizon] by thinning the conditional intensity.
///
/// Between events the intensity only decays, so mu + S(t+) (the intensity
/// just after the current point, including the alpha jump of an accepted
/// event) dominates it until the next event. A candidate drawn from a
/// Poisson flow at that rate is accepted with probability lambda(t)/bound,
/// which is the standard exactness argument for thinning. The bound is
/// refreshed after every candidate, accepted or not.
[[nodiscard]] inline Simulation simulate_thinning(const HawkesParams& p, double horizon, std::uint64_t seed,
                                                  SimulationLimits limits = {}) {
    validate(p);
    detail::check_horizon(horizon);
    Rng rng(seed);
    const double alpha = p.alpha();
    std::vector<double> times;
    double t = 0.0;
    double excitation = 0.0;
    while (true) {
        const double bound = p.mu + excitation;
        const double w = rng.exponential(bound);
        t += w;
        if (t > horizon) {
            break;
        }
        excitation *= std::exp(-p.beta * w);
        const double lambda = p.mu + excitation;
        if (rng.uniform() * bound <= lambda) {
            if (!times.empty() && !(t > times.back())) {
                continue; // zero-length gap from underflow; measure zero
            }
            if (times.size() >= limits.max_events) {
                return {EventSeries(std::move(times), horizon), SimulationStatus::exploded};
            }
            times.push_back(t);
            excitation += alpha;
        }
    }
    return {EventSeries(std::move(times), horizon), SimulationStatus::complete};
}

/// One piece of a piecewise-constant parameter schedule. The decay rate is
/// shared by all pieces; an event excites the future with the branching ratio
/// in force at its own time.
struct ScheduleSegment {
    double start{0.0};
    double end{0.0};
    double mu{1.0};
    double n{0.0};
};

/// Thinning for a piecewise-constant (mu, n) schedule covering [0, horizon].
/// Candidates crossing a segment boundary are discarded and the flow is
/// restarted at the boundary, which is exact by memorylessness.
[[nodiscard]] inline Simulation simulate_schedule(std::span<const ScheduleSegment> segments, double beta,
                                                  double horizon, std::uint64_t seed,
                                                  SimulationLimits limits = {}) {
    detail::check_horizon(horizon);
    if (!(beta > 0.0)) {
        throw DomainError("beta must be > 0");
    }
    if (segments.empty() || segments.front().start != 0.0 || segments.back().end < horizon) {
        throw DomainError("schedule must cover [0, horizon]");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.end > s.start) || !(s.mu > 0.0) || !(s.n >= 0.0) ||
            (i > 0 && s.start != segments[i - 1].end)) {
            throw DomainError("schedule segments must be contiguous with mu > 0, n >= 0");
        }
    }
    Rng rng(seed);
    std::vector<double> times;
    double t = 0.0;
    double excitation = 0.0;
    std::size_t seg = 0;
    while (t < horizon) {
        const auto& s = segments[seg];
        const double bound = s.mu + excitation;
        const double candidate = t + rng.exponential(bound);
        const double seg_end = std::min(s.end, horizon);
        if (candidate >= seg_end) {
            excitation *= std::exp(-beta * (seg_end - t));
            t = seg_end;
            ++seg;
            if (seg == segments.size()) {
                break;
            }
            continue;
        }
        excitation *= std::exp(-beta * (candidate - t));
        t = candidate;
        if (rng.uniform() * bound <= s.mu + excitation) {
            if (!times.empty() && !(t > times.back())) {
                continue;
            }
            if (times.size() >= limits.max_events) {
                return {EventSeries(std::move(times), horizon), SimulationStatus::exploded};
            }
            times.push_back(t);
            excitation += s.n * beta;
        }
    }
    return {EventSeries(std::move(times), horizon), SimulationStatus::complete};
}

/// An event of the branching (cluster) representation.
struct ClusterEvent {
    double time{0.0};
    std::uint32_t generation{0};           ///< 0 for immigrants
    std::optional<std::size_t> parent_index; ///< index into the same, time-sorted, sequence
};

struct BranchingSimulation {
    std::vector<ClusterEvent> events; ///< sorted by time
    double horizon{0.0};
    SimulationStatus status{SimulationStatus::complete};

    [[nodiscard]] bool exploded() const noexcept { return status == SimulationStatus::exploded; }

    /// Projection onto the time axis.
    [[nodiscard]] EventSeries series() const {
        std::vector<double> t;
        t.reserve(events.size());
        for (const auto& e : events) {
            if (t.empty() || e.time > t.back()) {
                t.push_back(e.time);
            }
        }
        return {std::move(t), horizon};
    }
};

/// Immigrant/descendant construction: immigrants form a Poisson flow of rate
/// mu on [0, horizon]; every event independently spawns Poisson(n) children at
/// lags with density beta exp(-beta t). Children past the horizon (and hence
/// their whole subtree) are discarded.
[[nodiscard]] inline BranchingSimulation simulate_branching(const HawkesParams& p, double horizon,
                                                            std::uint64_t seed, SimulationLimits limits = {}) {
    validate(p);
    detail::check_horizon(horizon);
    Rng rng(seed);

    struct Raw {
        double time;
        std::uint32_t generation;
        std::size_t parent; // SIZE_MAX for immigrants
    };
    constexpr auto kNoParent = static_cast<std::size_t>(-1);
    std::vector<Raw> raw;
    BranchingSimulation out;
    out.horizon = horizon;

    const std::uint64_t immigrants = rng.poisson(p.mu * horizon);
    if (immigrants > limits.max_events) {
        out.status = SimulationStatus::exploded;
        return out;
    }
    raw.reserve(static_cast<std::size_t>(immigrants));
    for (std::uint64_t k = 0; k < immigrants; ++k) {
        raw.push_back({rng.uniform(0.0, horizon), 0, kNoParent});
    }
    // Breadth-first expansion; raw doubles as the queue.
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::uint64_t children = rng.poisson(p.n);
        for (std::uint64_t c = 0; c < children; ++c) {
            const double child = raw[i].time + rng.exponential(p.beta);
            if (child >= horizon || !(child > raw[i].time)) {
                continue;
            }
            if (raw.size() >= limits.max_events) {
                out.status = SimulationStatus::exploded;
                break;
            }
            raw.push_back({child, raw[i].generation + 1, i});
        }
        if (out.exploded()) {
            break;
        }
    }

    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return raw[a].time < raw[b].time; });
    std::vector<std::size_t> position(raw.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        position[order[k]] = k;
    }
    out.events.reserve(raw.size());
    for (std::size_t k : order) {
        const auto& r = raw[k];
        ClusterEvent e{r.time, r.generation, std::nullopt};
        if (r.parent != kNoParent) {
            e.parent_index = position[r.parent];
        }
        out.events.push_back(e);
    }
    return out;
}

/// Totals over independent clusters grown without a time horizon.
struct ClusterCensus {
    std::size_t clusters{0};
    std::size_t descendants{0};
    bool exploded{false};

    [[nodiscard]] double mean_cluster_size() const {
        return static_cast<double>(clusters + descendants) / static_cast<double>(clusters);
    }
    [[nodiscard]] double descendants_per_immigrant() const {
        return static_cast<double>(descendants) / static_cast<double>(clusters);
    }
    [[nodiscard]] double endogenous_fraction() const {
        return static_cast<double>(descendants) / static_cast<double>(clusters + descendants);
    }
};

/// Galton-Watson growth of `clusters` families with Poisson(n) offspring.
[[nodiscard]] inline ClusterCensus simulate_clusters(double n, std::size_t clusters, std::uint64_t seed,
                                                     SimulationLimits limits = {}) {
    if (!(n >= 0.0) || clusters == 0) {
        throw DomainError("cluster census needs n >= 0 and at least one cluster");
    }
    Rng rng(seed);
    ClusterCensus census;
    census.clusters = clusters;
    for (std::size_t c = 0; c < clusters; ++c) {
        std::uint64_t pending = 1;
        while (pending > 0) {
            --pending;
            const std::uint64_t kids = rng.poisson(n);
            census.descendants += kids;
            pending += kids;
            if (census.descendants + clusters > limits.max_events) {
                census.exploded = true;
                return census;
            }
        }
    }
    return census;
}

enum class Sampler { thinning, branching };

struct EquivalenceReport {
    stats::KsResult ks;
    std::vector<double> counts_a;
    std::vector<double> counts_b;
};

/// Two-sample KS on per-run event counts of two (sampler, params) pairs.
/// Seeds for the second arm are derived from the given ones and the sampler
/// kind, so comparing a sampler with itself on equal params reproduces the
/// first arm exactly.
[[nodiscard]] inline EquivalenceReport distributional_equivalence_check(const HawkesParams& a, Sampler sampler_a,
                                                                        const HawkesParams& b, Sampler sampler_b,
                                                                        double horizon,
                                                                        std::span<const std::uint64_t> seeds) {
    auto run = [horizon](const HawkesParams& p, Sampler s, std::uint64_t seed) {
        const std::uint64_t derived = derive_seed(seed, {static_cast<std::uint64_t>(s)});
        if (s == Sampler::thinning) {
            return static_cast<double>(simulate_thinning(p, horizon, derived).events.size());
        }
        return static_cast<double>(simulate_branching(p, horizon, derived).events.size());
    };
    EquivalenceReport report;
    report.counts_a.reserve(seeds.size());
    report.counts_b.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        report.counts_a.push_back(run(a, sampler_a, seed));
        report.counts_b.push_back(run(b, sampler_b, seed));
    }
    report.ks = stats::ks_two_sample(report.counts_a, report.counts_b);
    return report;
}

/// Thinning against branching at the same parameters.
[[nodiscard]] inline EquivalenceReport distributional_equivalence_check(const HawkesParams& p, double horizon,
                                                                        std::span<const std::uint64_t> seeds) {
    return distributional_equivalence_check(p, Sampler::thinning, p, Sampler::branching, horizon, seeds);
}

} // namespace hawkes
