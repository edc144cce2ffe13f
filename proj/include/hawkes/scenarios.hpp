#pragma once

// Synthetic trading days built from piecewise-constant (mu, n) schedules.

#include "hawkes/market_data.hpp"
#include "hawkes/simulator.hpp"

#include <cmath>
#include <vector>

namespace hawkes::scenarios {

/// 09:30-16:15 in seconds.
inline constexpr double kSessionLength = 24300.0;

[[nodiscard]] inline std::vector<ScheduleSegment> stationary(double mu, double n, double length = kSessionLength) {
    return {{0.0, length, mu, n}};
}

/// Background rate multiplied by `factor` on [shock_start, shock_end); n is unchanged.
[[nodiscard]] inline std::vector<ScheduleSegment> exogenous_shock(double mu, double n, double shock_start,
                                                                  double shock_end, double factor,
                                                                  double length = kSessionLength) {
    return {{0.0, shock_start, mu, n}, {shock_start, shock_end, mu * factor, n}, {shock_end, length, mu, n}};
}

/// n stepped linearly from n_from to n_to over [ramp_start, ramp_end) in
/// `steps` pieces, then back to n_from; mu is constant.
[[nodiscard]] inline std::vector<ScheduleSegment> endogenous_ramp(double mu, double n_from, double n_to,
                                                                  double ramp_start, double ramp_end,
                                                                  std::size_t steps,
                                                                  double length = kSessionLength) {
    std::vector<ScheduleSegment> s{{0.0, ramp_start, mu, n_from}};
    const double width = (ramp_end - ramp_start) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double frac = steps == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(steps - 1);
        const double a = ramp_start + width * static_cast<double>(k);
        const double b = k + 1 == steps ? ramp_end : a + width;
        s.push_back({a, b, mu, n_from + (n_to - n_from) * frac});
    }
    if (ramp_end < length) {
        s.push_back({ramp_end, length, mu, n_from});
    }
    return s;
}

/// First part of the day at (mu1, n1), the rest at (mu2, n2).
[[nodiscard]] inline std::vector<ScheduleSegment> regime_switch(double mu1, double n1, double mu2, double n2,
                                                                double switch_at, double length = kSessionLength) {
    return {{0.0, switch_at, mu1, n1}, {switch_at, length, mu2, n2}};
}

/// Simulates one day; with `integer_seconds` the times are floored as an
/// integer-second feed would report them.
[[nodiscard]] inline RawSeries simulate_day(const std::vector<ScheduleSegment>& schedule, double beta,
                                            std::uint64_t seed, bool integer_seconds = true) {
    const double length = schedule.back().end;
    const auto sim = simulate_schedule(schedule, beta, length, seed);
    if (sim.exploded()) {
        throw NumericError("scenario simulation exploded");
    }
    if (integer_seconds) {
        return floor_to_seconds(sim.events);
    }
    RawSeries raw{{}, 0.0, length};
    raw.timestamps.assign(sim.events.times().begin(), sim.events.times().end());
    return raw;
}

} // namespace hawkes::scenarios
