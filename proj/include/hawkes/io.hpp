#pragma once

#include "hawkes/errors.hpp"
#include "hawkes/market_data.hpp"
#include "hawkes/pipeline.hpp"
#include "hawkes/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace hawkes::io {

/// Shortest text that parses back to the same double.
[[nodiscard]] inline std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Ten significant digits; "NA" for NaN.
[[nodiscard]] inline std::string num(double v) {
    if (std::isnan(v)) {
        return "NA";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

[[nodiscard]] inline std::string flag(const std::optional<bool>& f) {
    return f ? (*f ? "1" : "0") : "NA";
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::ostream& out, const Metadata& meta) {
    for (const auto& [k, v] : meta) {
        out << "# " << k << '=' << v << '\n';
    }
}

/// `# key=value` header lines followed by a CSV table.
struct Table {
    std::map<std::string, std::string> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) {
                return i;
            }
        }
        throw ValidationError("missing column '" + name + "'");
    }
    [[nodiscard]] bool has_column(const std::string& name) const {
        for (const auto& c : columns) {
            if (c == name) {
                return true;
            }
        }
        return false;
    }
};

[[nodiscard]] inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        const auto s = hawkes::detail::trim(line);
        if (s.empty()) {
            continue;
        }
        if (s.front() == '#') {
            const auto body = hawkes::detail::trim(s.substr(1));
            const auto eq = body.find('=');
            if (eq != std::string_view::npos) {
                t.metadata[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
            }
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : hawkes::detail::split_csv(s)) {
            fields.emplace_back(hawkes::detail::trim(f));
        }
        if (!header) {
            t.columns = std::move(fields);
            header = true;
        } else {
            if (fields.size() != t.columns.size()) {
                throw ValidationError("row with " + std::to_string(fields.size()) + " fields, expected " +
                                      std::to_string(t.columns.size()));
            }
            t.rows.push_back(std::move(fields));
        }
    }
    if (!header) {
        throw ValidationError("table has no header");
    }
    return t;
}

[[nodiscard]] inline double to_double(const std::string& s) {
    if (s == "NA" || s.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ValidationError("malformed number '" + s + "'");
    }
    if (used != s.size()) {
        throw ValidationError("malformed number '" + s + "'");
    }
    return v;
}

inline void write_events(std::ostream& out, const EventSeries& events, const Metadata& meta) {
    write_metadata(out, meta);
    out << "time_s\n";
    for (double t : events.times()) {
        out << exact(t) << '\n';
    }
}

inline void write_branching(std::ostream& out, const BranchingSimulation& sim, const Metadata& meta) {
    write_metadata(out, meta);
    out << "time_s,generation,parent_index\n";
    for (const auto& e : sim.events) {
        out << exact(e.time) << ',' << e.generation << ',';
        if (e.parent_index) {
            out << *e.parent_index;
        }
        out << '\n';
    }
}

/// Multi-session event file: `date,time_s`, times relative to the session open.
inline void write_session_events(std::ostream& out, std::span<const SessionEvents> sessions, const Metadata& meta) {
    write_metadata(out, meta);
    out << "date,time_s\n";
    for (const auto& s : sessions) {
        const std::string d = format_date(s.date);
        for (double t : s.events.timestamps) {
            out << d << ',' << exact(t) << '\n';
        }
    }
}

/// Reads either a single-window file (`time_s`, horizon from `# horizon=`)
/// or a multi-session file (`date,time_s`, length from `# session_length_s=`).
/// Dates listed in `# dates=` (semicolon separated) are kept even when they
/// carry no events.
[[nodiscard]] inline std::vector<SessionEvents> read_session_events(std::istream& in, double default_length) {
    const Table t = read_table(in);
    const std::size_t tc = t.column("time_s");
    double length = default_length;
    if (auto it = t.metadata.find("session_length_s"); it != t.metadata.end()) {
        length = to_double(it->second);
    } else if (auto h = t.metadata.find("horizon"); h != t.metadata.end()) {
        length = to_double(h->second);
    }
    if (!(length > 0.0)) {
        throw ValidationError("session length must be > 0");
    }
    std::map<std::string, std::vector<double>> by_date;
    if (auto it = t.metadata.find("dates"); it != t.metadata.end()) {
        std::string_view list = it->second;
        while (!list.empty()) {
            const auto semi = list.find(';');
            by_date[std::string(list.substr(0, semi))];
            list = semi == std::string_view::npos ? std::string_view{} : list.substr(semi + 1);
        }
    }
    const bool dated = t.has_column("date");
    const std::size_t dc = dated ? t.column("date") : 0;
    for (const auto& row : t.rows) {
        by_date[dated ? row[dc] : std::string("1970-01-01")].push_back(to_double(row[tc]));
    }
    std::vector<SessionEvents> out;
    for (auto& [d, times] : by_date) {
        SessionEvents s{parse_date(d), RawSeries{std::move(times), 0.0, length}};
        s.events.validate();
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_session_summary(std::ostream& out, std::span<const TradingSession> sessions) {
    out << "date,volume,n_events,kept\n";
    for (const auto& s : sessions) {
        out << format_date(s.date) << ',' << num(s.volume) << ',' << s.n_events << ',' << (s.kept ? 1 : 0) << '\n';
    }
}

inline constexpr const char* kScanHeader =
    "date,window_start_s,len_s,n_events,mu_med,mu_std,n_med,n_mean,n_std,beta_med,ll,ks_pmax,status,flag_n,flag_rate";

inline void write_scan(std::ostream& out, std::span<const WindowEstimate> windows) {
    out << kScanHeader << '\n';
    for (const auto& w : windows) {
        out << format_date(w.date) << ',' << num(w.window_start) << ',' << num(w.window_length) << ','
            << w.n_events << ',' << num(w.mu.median) << ',' << num(w.mu.stddev) << ',' << num(w.n.median) << ','
            << num(w.n.mean) << ',' << num(w.n.stddev) << ',' << num(w.beta.median) << ','
            << num(w.log_likelihood) << ',' << num(w.gof.p_value) << ',' << to_string(w.status) << ','
            << flag(w.flag_n) << ',' << flag(w.flag_rate) << '\n';
    }
}

/// Parses a scan CSV back into window estimates (summary fields only).
[[nodiscard]] inline std::vector<WindowEstimate> read_scan(std::istream& in) {
    const Table t = read_table(in);
    const auto col = [&](const char* name) { return t.column(name); };
    const std::size_t c_date = col("date"), c_ws = col("window_start_s"), c_len = col("len_s"),
                      c_ne = col("n_events"), c_mu = col("mu_med"), c_mus = col("mu_std"), c_n = col("n_med"),
                      c_nm = col("n_mean"), c_ns = col("n_std"), c_b = col("beta_med"), c_ll = col("ll"),
                      c_p = col("ks_pmax"), c_st = col("status"), c_fn = col("flag_n"), c_fr = col("flag_rate");
    std::vector<WindowEstimate> out;
    std::map<std::string, std::size_t> session_of;
    for (const auto& row : t.rows) {
        session_of.try_emplace(row[c_date], 0);
    }
    std::size_t k = 0;
    for (auto& [d, idx] : session_of) {
        idx = k++;
    }
    auto parse_flag = [](const std::string& s) -> std::optional<bool> {
        if (s == "1") return true;
        if (s == "0") return false;
        return std::nullopt;
    };
    for (const auto& row : t.rows) {
        WindowEstimate w;
        w.date = parse_date(row[c_date]);
        w.session_index = session_of[row[c_date]];
        w.window_start = to_double(row[c_ws]);
        w.window_length = to_double(row[c_len]);
        w.n_events = static_cast<std::size_t>(to_double(row[c_ne]));
        w.mu.median = to_double(row[c_mu]);
        w.mu.stddev = to_double(row[c_mus]);
        w.n.median = to_double(row[c_n]);
        w.n.mean = to_double(row[c_nm]);
        w.n.stddev = to_double(row[c_ns]);
        w.beta.median = to_double(row[c_b]);
        w.log_likelihood = to_double(row[c_ll]);
        w.gof.p_value = to_double(row[c_p]);
        w.status = parse_window_status(row[c_st]);
        w.flag_n = parse_flag(row[c_fn]);
        w.flag_rate = parse_flag(row[c_fr]);
        out.push_back(std::move(w));
    }
    return out;
}

inline void write_aggregation(std::ostream& out, std::span<const AggregationRecord> records) {
    out << "center_date,len_s,param,mean,median,q10,q90\n";
    for (const auto& r : records) {
        out << format_date(r.center) << ',' << num(r.window_length) << ',' << r.param << ',' << num(r.mean) << ','
            << num(r.median) << ',' << num(r.q_lo) << ',' << num(r.q_hi) << '\n';
    }
}

/// Quote/trade feed in the layout read_quotes_csv expects.
inline void write_quotes(std::ostream& out, std::span<const QuoteRecord> quotes) {
    out << "ts,type,bid,ask,price,volume,contract\n";
    auto opt = [](const std::optional<double>& v) { return v ? exact(*v) : std::string(); };
    for (const auto& q : quotes) {
        out << q.timestamp << ',' << q.type << ',' << opt(q.bid) << ',' << opt(q.ask) << ',' << opt(q.trade_price)
            << ',' << opt(q.trade_volume) << ',' << q.contract << '\n';
    }
}

} // namespace hawkes::io
