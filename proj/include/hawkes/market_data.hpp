#pragma once

#include "hawkes/core_model.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hawkes {

/// One row of the quote/trade feed. Prices are in ticks (or any consistent
/// price unit); the timestamp is integer epoch seconds.
struct QuoteRecord {
    std::int64_t timestamp{0};
    char type{'Q'}; ///< 'Q' best bid/ask update, 'T' trade
    std::optional<double> bid;
    std::optional<double> ask;
    std::optional<double> trade_price;
    std::optional<double> trade_volume;
    std::string contract;
    std::size_t line{0}; ///< 1-based source line, 0 when not read from a file
};

struct MidPriceEvent {
    std::int64_t timestamp{0};
    double mid{0.0};
};

struct MidPriceExtraction {
    std::vector<MidPriceEvent> events;
    std::size_t crossed_skipped{0}; ///< ask < bid
    std::size_t missing_skipped{0}; ///< bid or ask absent on a quote row
};

/// Raw session-relative timestamps, possibly tied (integer-second input),
/// covering [start, end).
struct RawSeries {
    std::vector<double> timestamps;
    double start{0.0};
    double end{0.0};

    [[nodiscard]] std::size_t size() const noexcept { return timestamps.size(); }

    /// True when every timestamp is a whole second. Series with sub-second
    /// resolution are passed through randomisation unchanged.
    [[nodiscard]] bool integer_resolution() const noexcept {
        return std::all_of(timestamps.begin(), timestamps.end(),
                           [](double t) { return t == std::floor(t); });
    }

    /// Events with start <= t < end re-rooted to window [lo, hi).
    [[nodiscard]] RawSeries slice(double lo, double hi) const {
        RawSeries out{{}, lo, hi};
        auto first = std::lower_bound(timestamps.begin(), timestamps.end(), lo);
        auto last = std::lower_bound(first, timestamps.end(), hi);
        out.timestamps.assign(first, last);
        return out;
    }

    void validate() const {
        if (!(end >= start)) {
            throw ValidationError("raw series end before start");
        }
        for (std::size_t i = 0; i < timestamps.size(); ++i) {
            if (timestamps[i] < start || timestamps[i] >= end) {
                throw ValidationError("raw timestamp outside session bounds");
            }
            if (i > 0 && timestamps[i] < timestamps[i - 1]) {
                throw ValidationError("raw timestamps decreasing");
            }
        }
    }
};

/// Floors event times to whole seconds, mimicking an integer-second feed.
[[nodiscard]] inline RawSeries floor_to_seconds(const EventSeries& events, double start = 0.0) {
    RawSeries raw{{}, start, start + events.horizon()};
    raw.timestamps.reserve(events.size());
    for (double t : events.times()) {
        raw.timestamps.push_back(start + std::floor(t));
    }
    // A horizon that is not a whole number can floor the last event onto end.
    while (!raw.timestamps.empty() && raw.timestamps.back() >= raw.end) {
        raw.timestamps.pop_back();
    }
    return raw;
}

/// Keeps the time order strictly increasing after sorting random draws; exact
/// collisions have probability zero but are resolved deterministically.
namespace detail {
inline EventSeries sorted_series(std::vector<double> t, double horizon) {
    std::sort(t.begin(), t.end());
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) {
            t[i] = std::nextafter(t[i - 1], horizon + 1.0);
        }
    }
    return {std::move(t), horizon};
}
} // namespace detail

/// Every event stamped with whole second s is moved to s + U, U ~ U[0, 1),
/// independently; per-second counts are preserved exactly. The result is
/// relative to raw.start. Sub-second input is returned unchanged.
[[nodiscard]] inline EventSeries randomize_subsecond(const RawSeries& raw, std::uint64_t seed) {
    raw.validate();
    const double horizon = raw.end - raw.start;
    std::vector<double> t;
    t.reserve(raw.size());
    if (!raw.integer_resolution()) {
        for (double v : raw.timestamps) {
            t.push_back(v - raw.start);
        }
        return detail::sorted_series(std::move(t), horizon);
    }
    Rng rng(seed);
    for (double v : raw.timestamps) {
        t.push_back(std::min(v - raw.start + rng.uniform(), std::nextafter(horizon, 0.0)));
    }
    return detail::sorted_series(std::move(t), horizon);
}

/// Replaces the session's N times by N sorted uniform draws on the session
/// interval (a homogeneous Poisson process conditioned on its count).
[[nodiscard]] inline EventSeries poissonize_within_day(const RawSeries& raw, std::uint64_t seed) {
    raw.validate();
    const double horizon = raw.end - raw.start;
    Rng rng(seed);
    std::vector<double> t(raw.size());
    for (double& v : t) {
        v = rng.uniform(0.0, horizon);
    }
    return detail::sorted_series(std::move(t), horizon);
}

/// One event per change of the mid-price (a + b) / 2. Quote rows lacking a
/// side are skipped; crossed books are skipped and counted; trade rows are
/// ignored. Throws IngestError on decreasing timestamps.
[[nodiscard]] inline MidPriceExtraction extract_midprice_events(std::span<const QuoteRecord> quotes) {
    MidPriceExtraction out;
    std::optional<double> last_mid;
    std::optional<std::int64_t> last_ts;
    for (const auto& q : quotes) {
        if (last_ts && q.timestamp < *last_ts) {
            throw IngestError("timestamps not time-ordered", q.line);
        }
        last_ts = q.timestamp;
        if (q.type != 'Q') {
            continue;
        }
        if (!q.bid || !q.ask) {
            ++out.missing_skipped;
            continue;
        }
        if (*q.ask < *q.bid) {
            ++out.crossed_skipped;
            continue;
        }
        const double mid = 0.5 * (*q.ask + *q.bid);
        if (!last_mid || mid != *last_mid) {
            out.events.push_back({q.timestamp, mid});
            last_mid = mid;
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> parse_optional_double(std::string_view s, std::size_t line) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    // std::from_chars for double is available from GCC 11.
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw IngestError("malformed number '" + std::string(s) + "'", line);
    }
    return v;
}

inline std::int64_t parse_int64(std::string_view s, std::size_t line) {
    s = trim(s);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IngestError("malformed integer timestamp '" + std::string(s) + "'", line);
    }
    return v;
}

} // namespace detail

/// Reads the quote CSV (header `ts,type,bid,ask,price,volume,contract`;
/// `contract` may be omitted, `#` lines are comments).
[[nodiscard]] inline std::vector<QuoteRecord> read_quotes_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t, std::less<>> column;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto names = detail::split_csv(t);
        for (std::size_t i = 0; i < names.size(); ++i) {
            column.emplace(std::string(detail::trim(names[i])), i);
        }
        break;
    }
    for (const char* required : {"ts", "type", "bid", "ask", "price", "volume"}) {
        if (!column.contains(required)) {
            throw IngestError(std::string("missing column '") + required + "'", lineno);
        }
    }
    const auto contract_col = column.find("contract");
    std::vector<QuoteRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto f = detail::split_csv(t);
        auto field = [&](const char* name) -> std::string_view {
            const std::size_t i = column.find(name)->second;
            return i < f.size() ? f[i] : std::string_view{};
        };
        QuoteRecord r;
        r.line = lineno;
        r.timestamp = detail::parse_int64(field("ts"), lineno);
        const auto type = detail::trim(field("type"));
        if (type != "Q" && type != "T") {
            throw IngestError("type must be Q or T", lineno);
        }
        r.type = type.front();
        r.bid = detail::parse_optional_double(field("bid"), lineno);
        r.ask = detail::parse_optional_double(field("ask"), lineno);
        r.trade_price = detail::parse_optional_double(field("price"), lineno);
        r.trade_volume = detail::parse_optional_double(field("volume"), lineno);
        if (r.trade_volume && *r.trade_volume < 0.0) {
            throw IngestError("negative volume", lineno);
        }
        if (contract_col != column.end() && contract_col->second < f.size()) {
            r.contract = std::string(detail::trim(f[contract_col->second]));
        }
        out.push_back(std::move(r));
    }
    return out;
}

using Date = std::chrono::year_month_day;

[[nodiscard]] inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

[[nodiscard]] inline Date parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const std::string str(detail::trim(s));
    if (std::sscanf(str.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
        throw ValidationError("bad date '" + str + "', expected YYYY-MM-DD");
    }
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) {
        throw ValidationError("invalid date '" + str + "'");
    }
    return date;
}

/// Metadata of one trading day.
struct TradingSession {
    Date date{};
    std::int64_t open_s{9 * 3600 + 30 * 60}; ///< seconds after local midnight
    std::int64_t close_s{16 * 3600 + 15 * 60};
    double volume{0.0};
    std::size_t n_events{0};
    bool active{true};
    bool early_close{false};
    bool kept{true};

    [[nodiscard]] double length() const noexcept { return static_cast<double>(close_s - open_s); }
};

struct SessionFilterConfig {
    double volume_quantile{0.05};
    bool drop_early_close{true};
    bool drop_inactive{true};
};

/// Marks sessions to keep: per calendar year, days with volume strictly below
/// the empirical volume quantile (linear interpolation) are dropped, as are
/// early-close and inactive days when configured. The quantile is taken over
/// every input session regardless of its previous `kept` flag, so applying
/// the filter twice equals applying it once.
[[nodiscard]] inline std::vector<TradingSession> filter_sessions(std::vector<TradingSession> sessions,
                                                                 const SessionFilterConfig& cfg = {}) {
    std::map<int, std::vector<double>> by_year;
    for (const auto& s : sessions) {
        if (s.close_s <= s.open_s) {
            throw ValidationError("session close must be after open");
        }
        by_year[static_cast<int>(s.date.year())].push_back(s.volume);
    }
    std::map<int, double> threshold;
    for (auto& [year, volumes] : by_year) {
        threshold[year] = stats::quantile(volumes, cfg.volume_quantile);
    }
    for (auto& s : sessions) {
        const bool enough_volume = s.volume >= threshold[static_cast<int>(s.date.year())];
        s.kept = enough_volume && !(cfg.drop_early_close && s.early_close) && !(cfg.drop_inactive && !s.active);
    }
    return sessions;
}

[[nodiscard]] inline std::vector<TradingSession> kept_only(std::span<const TradingSession> sessions) {
    std::vector<TradingSession> out;
    std::copy_if(sessions.begin(), sessions.end(), std::back_inserter(out), [](const auto& s) { return s.kept; });
    return out;
}

/// Parses `HH:MM-HH:MM` into seconds after midnight.
[[nodiscard]] inline std::pair<std::int64_t, std::int64_t> parse_session_hours(std::string_view s) {
    unsigned h1 = 0, m1 = 0, h2 = 0, m2 = 0;
    const std::string str(s);
    char tail = 0;
    if (std::sscanf(str.c_str(), "%u:%u-%u:%u%c", &h1, &m1, &h2, &m2, &tail) != 4 || h1 > 23 || h2 > 24 ||
        m1 > 59 || m2 > 59) {
        throw ValidationError("session hours must look like 09:30-16:15");
    }
    const std::int64_t open = h1 * 3600 + m1 * 60;
    const std::int64_t close = h2 * 3600 + m2 * 60;
    if (close <= open) {
        throw ValidationError("session close must be after open");
    }
    return {open, close};
}

/// Fixed UTC offset in seconds from `UTC`, `UTC+02:00`, `-05:00`, `+0530`.
/// Named zones with daylight-saving rules are not interpreted.
[[nodiscard]] inline std::int64_t parse_utc_offset(std::string_view s) {
    std::string str(detail::trim(s));
    if (str.rfind("UTC", 0) == 0 || str.rfind("GMT", 0) == 0) {
        str = str.substr(3);
    }
    if (str.empty() || str == "Z") {
        return 0;
    }
    if (str.front() != '+' && str.front() != '-') {
        throw ValidationError("time zone must be a fixed offset such as UTC-05:00");
    }
    const int sign = str.front() == '-' ? -1 : 1;
    std::string digits;
    for (char c : str.substr(1)) {
        if (c != ':') {
            digits.push_back(c);
        }
    }
    if (digits.size() != 2 && digits.size() != 4) {
        throw ValidationError("time zone must be a fixed offset such as UTC-05:00");
    }
    for (char c : digits) {
        if (c < '0' || c > '9') {
            throw ValidationError("time zone must be a fixed offset such as UTC-05:00");
        }
    }
    const int hours = std::stoi(digits.substr(0, 2));
    const int minutes = digits.size() == 4 ? std::stoi(digits.substr(2, 2)) : 0;
    if (hours > 14 || minutes > 59) {
        throw ValidationError("time zone offset out of range");
    }
    return sign * static_cast<std::int64_t>(hours * 3600 + minutes * 60);
}

struct IngestConfig {
    std::int64_t open_s{9 * 3600 + 30 * 60};
    std::int64_t close_s{16 * 3600 + 15 * 60};
    std::int64_t utc_offset_s{0};
    std::int64_t early_close_tolerance_s{900}; ///< last record earlier than close - tolerance
    std::size_t min_events_active{0};          ///< days with fewer mid changes are inactive
    SessionFilterConfig filter{};
};

/// One trading day after ingestion: metadata plus the integer-second event
/// stream relative to the session open, on [0, close - open).
struct SessionData {
    TradingSession session;
    RawSeries events;
    std::string contract;
    std::size_t crossed_skipped{0};
};

/// Groups records by exchange-local date, keeps the most active contract of
/// each day (largest trade count), extracts mid-price changes inside the
/// session hours and applies the session filter.
[[nodiscard]] inline std::vector<SessionData> ingest_sessions(std::span<const QuoteRecord> quotes,
                                                              const IngestConfig& cfg = {}) {
    using namespace std::chrono;
    for (std::size_t i = 1; i < quotes.size(); ++i) {
        if (quotes[i].timestamp < quotes[i - 1].timestamp) {
            throw IngestError("timestamps not time-ordered", quotes[i].line);
        }
    }
    struct Day {
        std::vector<const QuoteRecord*> rows;
    };
    std::map<sys_days, Day> days;
    auto local_day = [&](std::int64_t ts) {
        return floor<std::chrono::days>(sys_seconds{seconds{ts + cfg.utc_offset_s}});
    };
    for (const auto& q : quotes) {
        days[local_day(q.timestamp)].rows.push_back(&q);
    }

    std::vector<SessionData> out;
    std::vector<TradingSession> meta;
    for (const auto& [day, d] : days) {
        const std::int64_t midnight = duration_cast<seconds>(day.time_since_epoch()).count() - cfg.utc_offset_s;
        auto in_session = [&](const QuoteRecord& q) {
            const std::int64_t local = q.timestamp - midnight;
            return local >= cfg.open_s && local < cfg.close_s;
        };
        std::map<std::string, std::size_t> trades;
        for (const auto* q : d.rows) {
            if (q->type == 'T' && in_session(*q)) {
                ++trades[q->contract];
            }
            trades.try_emplace(q->contract, 0);
        }
        std::string contract;
        std::size_t best = 0;
        bool first = true;
        for (const auto& [name, count] : trades) {
            if (first || count > best) {
                contract = name;
                best = count;
                first = false;
            }
        }
        std::vector<QuoteRecord> selected;
        double volume = 0.0;
        std::int64_t last_local = 0;
        for (const auto* q : d.rows) {
            if (q->contract != contract) {
                continue;
            }
            selected.push_back(*q);
            last_local = q->timestamp - midnight;
            if (q->type == 'T' && q->trade_volume && in_session(*q)) {
                volume += *q->trade_volume;
            }
        }
        const auto mids = extract_midprice_events(selected);
        SessionData s;
        s.contract = contract;
        s.crossed_skipped = mids.crossed_skipped;
        s.session.date = year_month_day{day};
        s.session.open_s = cfg.open_s;
        s.session.close_s = cfg.close_s;
        s.session.volume = volume;
        s.events = RawSeries{{}, 0.0, static_cast<double>(cfg.close_s - cfg.open_s)};
        for (const auto& e : mids.events) {
            const std::int64_t local = e.timestamp - midnight;
            if (local >= cfg.open_s && local < cfg.close_s) {
                s.events.timestamps.push_back(static_cast<double>(local - cfg.open_s));
            }
        }
        s.session.n_events = s.events.size();
        s.session.early_close = last_local < cfg.close_s - cfg.early_close_tolerance_s;
        s.session.active = s.session.n_events >= cfg.min_events_active;
        meta.push_back(s.session);
        out.push_back(std::move(s));
    }
    meta = filter_sessions(std::move(meta), cfg.filter);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].session.kept = meta[i].kept;
    }
    return out;
}

/// Synthetic best bid/ask feed whose mid changes exactly at the given
/// integer-second event times: each event moves one side by one tick.
/// A trade row per event carries a unit volume. Times are session-relative
/// and placed on `date` at the session open in the given UTC offset.
[[nodiscard]] inline std::vector<QuoteRecord> synthesize_quotes(const RawSeries& events, const Date& date,
                                                                std::int64_t open_s, std::int64_t utc_offset_s,
                                                                std::uint64_t seed, std::string contract = "SYN") {
    using namespace std::chrono;
    Rng rng(seed);
    const std::int64_t midnight =
        duration_cast<seconds>(sys_days{date}.time_since_epoch()).count() - utc_offset_s;
    double bid = 10000.0;
    double ask = 10001.0;
    std::vector<QuoteRecord> out;
    out.push_back({midnight + open_s - 60, 'Q', bid, ask, std::nullopt, std::nullopt, contract, 0});
    for (double t : events.timestamps) {
        const auto ts = midnight + open_s + static_cast<std::int64_t>(std::floor(t));
        const bool move_bid = rng.uniform() < 0.5;
        const double step = rng.uniform() < 0.5 ? -1.0 : 1.0;
        if (move_bid && (step < 0.0 || bid + 1.0 < ask)) {
            bid += step;
        } else if (!move_bid && (step > 0.0 || ask - 1.0 > bid)) {
            ask += step;
        } else {
            // Spread is one tick and the move would cross it: widen instead.
            ask += 1.0;
        }
        out.push_back({ts, 'Q', bid, ask, std::nullopt, std::nullopt, contract, 0});
        out.push_back({ts, 'T', std::nullopt, std::nullopt, ask, 1.0, contract, 0});
    }
    out.push_back({midnight + open_s + static_cast<std::int64_t>(events.end) - 1, 'T', std::nullopt, std::nullopt,
                   ask, 1.0, contract, 0});
    return out;
}

} // namespace hawkes
