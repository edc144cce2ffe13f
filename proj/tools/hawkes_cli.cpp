#include "hawkes/hawkes.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";
constexpr const char* kConfigEnv = "HAWKES_CONFIG";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitExplosion = 3,
    kExitInsufficient = 4,
    kExitInternal = 5,
};

struct ExitError : std::runtime_error {
    int code;
    ExitError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ExitError(kExitInsufficient, "cannot read " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

std::string utc_now() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto day = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::hh_mm_ss hms{now - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", hawkes::format_date(std::chrono::year_month_day{day}).c_str(),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

/// Collects the files of one command run and writes the single manifest.
class Run {
public:
    Run(std::string command, std::vector<std::string> argv, std::uint64_t seed)
        : command_(std::move(command)), argv_(std::move(argv)), seed_(seed), started_(utc_now()) {}

    void set_output(const fs::path& dir) {
        dir_ = dir;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw ExitError(kExitInternal, "cannot create output directory " + dir_.string());
        }
    }

    void set_config(json config) { config_ = std::move(config); }

    void input(const std::string& path) {
        if (!fs::exists(path)) {
            throw ExitError(kExitInsufficient, "input file not found: " + path);
        }
        inputs_[path] = sha256_file(path);
    }

    template <class Fn>
    void write(const std::string& name, Fn&& fn) {
        const fs::path path = dir_ / name;
        {
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw ExitError(kExitInternal, "cannot write " + path.string());
            }
            fn(out);
            if (!out) {
                throw ExitError(kExitInternal, "write failed for " + path.string());
            }
        }
        outputs_[name] = sha256_file(path);
    }

    void finish() {
        json m;
        m["tool"] = "hawkes";
        m["tool_version"] = kVersion;
        m["command"] = command_;
        m["argv"] = argv_;
        m["config"] = config_;
        m["master_seed"] = seed_;
        m["rng"] = hawkes::kRngAlgorithm;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["started_utc"] = started_;
        m["finished_utc"] = utc_now();
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::uint64_t seed_;
    std::string started_;
    fs::path dir_{"."};
    json config_ = json::object();
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

/// Effective value of every named option of the given (sub)command, after
/// defaults, the config file and the command line have been applied.
json resolved_config(const CLI::App* app) {
    json out = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") {
            continue;
        }
        std::string value;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            for (std::size_t i = 0; i < results.size(); ++i) {
                value += (i ? "," : "") + results[i];
            }
            if (opt->get_items_expected_max() == 0 && value.empty()) {
                value = "true";
            }
        } else {
            value = opt->get_default_str();
            if (opt->get_items_expected_max() == 0 && value.empty()) {
                value = "false";
            }
        }
        // Vector defaults render as [a,b]; match the a,b form of given values.
        if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
            value = value.substr(1, value.size() - 2);
        }
        out[name] = value;
    }
    return out;
}

json summary_json(const hawkes::ParameterSummary& s) {
    auto v = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
    return {{"mean", v(s.mean)}, {"std", v(s.stddev)}, {"median", v(s.median)}, {"q05", v(s.q05)},
            {"q10", v(s.q10)},   {"q90", v(s.q90)},    {"q95", v(s.q95)}};
}

json nullable(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

std::vector<hawkes::SessionEvents> load_sessions(Run& run, const std::string& path, double default_length) {
    run.input(path);
    std::ifstream in(path);
    auto sessions = hawkes::io::read_session_events(in, default_length);
    if (sessions.empty()) {
        throw ExitError(kExitInsufficient, "no sessions in " + path);
    }
    return sessions;
}

/// One series for the single-window commands: a dated file needs --date
/// unless it holds just one session, and --window-start/--window-len cut it.
hawkes::RawSeries select_window(const std::vector<hawkes::SessionEvents>& sessions, const std::string& date,
                                double start, double len) {
    const hawkes::SessionEvents* chosen = nullptr;
    if (!date.empty()) {
        const auto d = hawkes::parse_date(date);
        for (const auto& s : sessions) {
            if (s.date == d) {
                chosen = &s;
            }
        }
        if (!chosen) {
            throw ExitError(kExitInsufficient, "no session dated " + date);
        }
    } else if (sessions.size() == 1) {
        chosen = &sessions.front();
    } else {
        throw ExitError(kExitUsage, "input holds several sessions; choose one with --date");
    }
    if (start == 0.0 && len <= 0.0) {
        return chosen->events;
    }
    const double hi = len > 0.0 ? start + len : chosen->events.end;
    if (start < chosen->events.start || hi > chosen->events.end || !(hi > start)) {
        throw ExitError(kExitUsage, "window outside the session");
    }
    return chosen->events.slice(start, hi);
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    double mu{0.5};
    double n{0.7};
    double beta{1.0};
    double horizon{600.0};
    std::uint64_t seed{0};
    std::string method{"thinning"};
    std::size_t max_events{10'000'000};
    std::size_t days{0};
    std::string start_date{"2010-01-04"};
    bool integer{false};
    std::string scenario{"stationary"};
    double shock_start{18000.0};
    double shock_end{19800.0};
    double shock_factor{5.0};
    double ramp_start{18000.0};
    double ramp_end{19800.0};
    double n_peak{0.95};
    std::size_t ramp_steps{6};
    bool quotes{false};
    std::string rth{"09:30-16:15"};
    std::string tz{"UTC-05:00"};
    std::string out{"out"};
};

std::vector<hawkes::ScheduleSegment> schedule_of(const SimulateOptions& o, bool scenario_day) {
    namespace sc = hawkes::scenarios;
    if (!scenario_day || o.scenario == "stationary") {
        return sc::stationary(o.mu, o.n, o.horizon);
    }
    if (o.scenario == "exogenous-shock") {
        return sc::exogenous_shock(o.mu, o.n, o.shock_start, o.shock_end, o.shock_factor, o.horizon);
    }
    return sc::endogenous_ramp(o.mu, o.n, o.n_peak, o.ramp_start, o.ramp_end, o.ramp_steps, o.horizon);
}

int cmd_simulate(const SimulateOptions& o, Run& run) {
    run.set_output(o.out);
    const hawkes::HawkesParams p{o.mu, o.n, o.beta};
    const hawkes::SimulationLimits limits{o.max_events};
    hawkes::io::Metadata meta{{"mu", hawkes::io::exact(o.mu)},     {"n", hawkes::io::exact(o.n)},
                              {"beta", hawkes::io::exact(o.beta)}, {"seed", std::to_string(o.seed)},
                              {"method", o.method},                {"scenario", o.scenario},
                              {"rng", std::string(hawkes::kRngAlgorithm)}};

    if (o.days == 0) {
        meta.emplace_back("horizon", hawkes::io::exact(o.horizon));
        if (o.method == "branching") {
            if (o.scenario != "stationary") {
                throw ExitError(kExitUsage, "the branching sampler only supports the stationary scenario");
            }
            const auto sim = hawkes::simulate_branching(p, o.horizon, o.seed, limits);
            if (sim.exploded()) {
                throw ExitError(kExitExplosion, "simulation exceeded --max-events " + std::to_string(o.max_events));
            }
            run.write("events.csv", [&](std::ostream& out) { hawkes::io::write_branching(out, sim, meta); });
            return kExitOk;
        }
        const auto schedule = schedule_of(o, true);
        const auto sim = o.scenario == "stationary" ? hawkes::simulate_thinning(p, o.horizon, o.seed, limits)
                                                    : hawkes::simulate_schedule(schedule, o.beta, o.horizon, o.seed,
                                                                                limits);
        if (sim.exploded()) {
            throw ExitError(kExitExplosion, "simulation exceeded --max-events " + std::to_string(o.max_events));
        }
        if (o.integer) {
            const auto raw = hawkes::floor_to_seconds(sim.events);
            run.write("events.csv", [&](std::ostream& out) {
                hawkes::io::write_metadata(out, meta);
                out << "time_s\n";
                for (double t : raw.timestamps) {
                    out << hawkes::io::exact(t) << '\n';
                }
            });
        } else {
            run.write("events.csv", [&](std::ostream& out) { hawkes::io::write_events(out, sim.events, meta); });
        }
        return kExitOk;
    }

    if (o.method != "thinning") {
        throw ExitError(kExitUsage, "multi-day simulation uses the thinning sampler");
    }
    // Weekdays from the start date; every day is stationary except the last,
    // which follows the chosen scenario.
    std::vector<hawkes::SessionEvents> sessions;
    std::chrono::sys_days day{hawkes::parse_date(o.start_date)};
    std::string dates;
    for (std::size_t k = 0; k < o.days; ++day) {
        const std::chrono::weekday wd{day};
        if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) {
            continue;
        }
        const auto schedule = schedule_of(o, k + 1 == o.days);
        const auto sim = hawkes::simulate_schedule(schedule, o.beta, o.horizon, hawkes::derive_seed(o.seed, {k}),
                                                   limits);
        if (sim.exploded()) {
            throw ExitError(kExitExplosion, "simulation exceeded --max-events " + std::to_string(o.max_events));
        }
        hawkes::RawSeries raw{{}, 0.0, o.horizon};
        if (o.integer) {
            raw = hawkes::floor_to_seconds(sim.events);
        } else {
            raw.timestamps.assign(sim.events.times().begin(), sim.events.times().end());
        }
        const hawkes::Date date{day};
        dates += (dates.empty() ? "" : ";") + hawkes::format_date(date);
        sessions.push_back({date, std::move(raw)});
        ++k;
    }
    meta.emplace_back("session_length_s", hawkes::io::exact(o.horizon));
    meta.emplace_back("dates", dates);
    run.write("events.csv", [&](std::ostream& out) { hawkes::io::write_session_events(out, sessions, meta); });
    if (o.quotes) {
        const auto [open_s, close_s] = hawkes::parse_session_hours(o.rth);
        if (static_cast<double>(close_s - open_s) < o.horizon) {
            throw ExitError(kExitUsage, "--horizon is longer than the --rth session");
        }
        const auto offset = hawkes::parse_utc_offset(o.tz);
        std::vector<hawkes::QuoteRecord> quotes;
        for (std::size_t k = 0; k < sessions.size(); ++k) {
            auto q = hawkes::synthesize_quotes(sessions[k].events, sessions[k].date, open_s, offset,
                                               hawkes::derive_seed(o.seed, {k, 0x51554f5445ULL}));
            quotes.insert(quotes.end(), q.begin(), q.end());
        }
        run.write("quotes.csv", [&](std::ostream& out) { hawkes::io::write_quotes(out, quotes); });
    }
    return kExitOk;
}

// ------------------------------------------------------------------ ingest

struct IngestOptions {
    std::string quotes;
    std::string rth{"09:30-16:15"};
    std::string tz{"UTC-05:00"};
    double volume_quantile{0.05};
    std::int64_t early_close_tolerance{900};
    std::size_t min_active_events{0};
    bool keep_early_close{false};
    std::string out{"out"};
};

int cmd_ingest(const IngestOptions& o, Run& run) {
    run.set_output(o.out);
    run.input(o.quotes);
    std::ifstream in(o.quotes);
    const auto quotes = hawkes::read_quotes_csv(in);
    if (quotes.empty()) {
        throw ExitError(kExitInsufficient, "no records in " + o.quotes);
    }
    hawkes::IngestConfig cfg;
    std::tie(cfg.open_s, cfg.close_s) = hawkes::parse_session_hours(o.rth);
    cfg.utc_offset_s = hawkes::parse_utc_offset(o.tz);
    cfg.early_close_tolerance_s = o.early_close_tolerance;
    cfg.min_events_active = o.min_active_events;
    cfg.filter.volume_quantile = o.volume_quantile;
    cfg.filter.drop_early_close = !o.keep_early_close;
    const auto days = hawkes::ingest_sessions(quotes, cfg);

    std::vector<hawkes::SessionEvents> kept;
    std::vector<hawkes::TradingSession> meta;
    std::string dates;
    std::size_t crossed = 0;
    for (const auto& d : days) {
        meta.push_back(d.session);
        crossed += d.crossed_skipped;
        if (d.session.kept) {
            kept.push_back({d.session.date, d.events});
            dates += (dates.empty() ? "" : ";") + hawkes::format_date(d.session.date);
        }
    }
    if (kept.empty()) {
        throw ExitError(kExitInsufficient, "every session was filtered out");
    }
    const double length = static_cast<double>(cfg.close_s - cfg.open_s);
    run.write("events.csv", [&](std::ostream& out) {
        hawkes::io::write_session_events(out, kept,
                                         {{"session_length_s", hawkes::io::exact(length)},
                                          {"rth", o.rth},
                                          {"tz", o.tz},
                                          {"crossed_skipped", std::to_string(crossed)},
                                          {"dates", dates}});
    });
    run.write("sessions.csv", [&](std::ostream& out) { hawkes::io::write_session_summary(out, meta); });
    return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOptions {
    std::string events;
    std::string date;
    double window_start{0.0};
    double window_len{0.0};
    double horizon{0.0};
    double n_max{1.0};
    std::size_t min_events{100};
    std::size_t bootstrap{1};
    std::uint64_t seed{0};
    std::string parametrization{"branching"};
    std::string out{"out"};
};

hawkes::FitConfig fit_config(double n_max, std::size_t min_events, const std::string& parametrization) {
    hawkes::FitConfig cfg;
    cfg.n_max = n_max;
    cfg.min_events = min_events;
    cfg.parametrization = parametrization == "amplitude" ? hawkes::Parametrization::amplitude
                                                         : hawkes::Parametrization::branching_ratio;
    return cfg;
}

int cmd_fit(const FitOptions& o, Run& run) {
    run.set_output(o.out);
    const auto sessions = load_sessions(run, o.events, o.horizon);
    const auto raw = select_window(sessions, o.date, o.window_start, o.window_len);
    const auto cfg = fit_config(o.n_max, o.min_events, o.parametrization);
    hawkes::BootstrapConfig b;
    b.realizations = std::max<std::size_t>(1, o.bootstrap);
    b.seed = o.seed;
    const auto boot = hawkes::fit_bootstrap(raw, cfg, b);
    if (!boot.usable) {
        throw hawkes::NonConvergenceError("too few converged fits (" + std::to_string(boot.converged) + " of " +
                                          std::to_string(b.realizations) + ")");
    }
    const auto gof = hawkes::window_rejection(boot);
    const hawkes::FitResult* first = nullptr;
    bool boundary = false;
    for (const auto& r : boot.realizations) {
        if (r.fit && r.fit->converged) {
            first = first ? first : &*r.fit;
            boundary = boundary || r.fit->boundary_flag;
        }
    }
    const bool single = b.realizations == 1;
    json j;
    j["n_events"] = raw.size();
    j["window_start_s"] = raw.start;
    j["window_len_s"] = raw.end - raw.start;
    j["integer_resolution"] = raw.integer_resolution();
    j["mu"] = single ? first->params.mu : boot.mu.median;
    j["n"] = single ? first->params.n : boot.n.median;
    j["beta"] = single ? first->params.beta : boot.beta.median;
    j["ll"] = single ? first->log_likelihood : boot.log_likelihood.median;
    j["converged"] = true;
    j["boundary_flag"] = boundary;
    j["n_max"] = o.n_max;
    j["starts_tried"] = first->starts_tried;
    j["gradient"] = first->gradient;
    j["ks_stat"] = nullable(gof.ks_statistic);
    j["ks_pmax"] = nullable(gof.p_value);
    j["window_rejected"] = gof.window_rejected;
    j["bootstrap"] = {{"realizations", b.realizations},
                      {"converged", boot.converged},
                      {"usable", boot.usable},
                      {"mu", summary_json(boot.mu)},
                      {"n", summary_json(boot.n)},
                      {"beta", summary_json(boot.beta)},
                      {"ll", summary_json(boot.log_likelihood)},
                      {"p_values", gof.bootstrap_p_values}};
    run.write("fit.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    return kExitOk;
}

// --------------------------------------------------------------------- gof

struct GofOptions {
    std::string events;
    std::string fit;
    std::string date;
    double window_start{0.0};
    double window_len{0.0};
    double horizon{0.0};
    double mu{std::numeric_limits<double>::quiet_NaN()};
    double n{std::numeric_limits<double>::quiet_NaN()};
    double beta{std::numeric_limits<double>::quiet_NaN()};
    std::uint64_t seed{0};
    std::string out{"out"};
};

int cmd_gof(const GofOptions& o, Run& run) {
    run.set_output(o.out);
    hawkes::HawkesParams p{o.mu, o.n, o.beta};
    if (!o.fit.empty()) {
        run.input(o.fit);
        std::ifstream in(o.fit);
        const json f = json::parse(in, nullptr, false);
        if (f.is_discarded() || !f.contains("mu") || !f.contains("n") || !f.contains("beta")) {
            throw ExitError(kExitInsufficient, "fit file lacks mu, n, beta: " + o.fit);
        }
        p = {f["mu"].get<double>(), f["n"].get<double>(), f["beta"].get<double>()};
    } else if (std::isnan(p.mu) || std::isnan(p.n) || std::isnan(p.beta)) {
        throw ExitError(kExitUsage, "give --fit or all of --mu, --n, --beta");
    }
    const auto sessions = load_sessions(run, o.events, o.horizon);
    const auto raw = select_window(sessions, o.date, o.window_start, o.window_len);
    const auto series = hawkes::randomize_subsecond(raw, hawkes::derive_seed(o.seed, {0}));
    if (series.size() < 5) {
        throw hawkes::InsufficientDataError("goodness of fit needs at least 5 events");
    }
    const auto r = hawkes::residual_transform(p, series);
    const auto v = hawkes::gof_test(p, series);
    json j{{"n_events", series.size()},
           {"mu", p.mu},
           {"n", p.n},
           {"beta", p.beta},
           {"ks_stat", v.ks_statistic},
           {"p_value", v.p_value},
           {"rejected_at_5pct", v.rejected_at_5pct}};
    run.write("gof.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    run.write("residuals.csv", [&](std::ostream& out) {
        out << "i,time_s,xi,delta,u\n";
        for (std::size_t i = 0; i < r.xi.size(); ++i) {
            out << i + 1 << ',' << hawkes::io::exact(series.times()[i]) << ',' << hawkes::io::exact(r.xi[i]) << ','
                << hawkes::io::exact(r.deltas[i]) << ',' << hawkes::io::exact(r.u[i]) << '\n';
        }
    });
    return kExitOk;
}

// ------------------------------------------------- scan, reshuffle, detect

struct ScanOptions {
    std::string events;
    std::string scan;
    double horizon{0.0};
    std::vector<double> windows{600.0, 1200.0, 1800.0};
    double step{300.0};
    std::size_t bootstrap{50};
    std::uint64_t seed{0};
    unsigned jobs{0};
    double n_max{1.0};
    std::size_t min_events{100};
    int half_width{30};
    bool include_rejected{false};
    std::vector<double> band{0.05, 0.95};
    std::size_t min_windows{5};
    bool overlapping{false};
    bool json_out{false};
    std::string out{"out"};
};

hawkes::ScanConfig scan_config(const ScanOptions& o) {
    hawkes::ScanConfig cfg;
    cfg.window_lengths = o.windows;
    cfg.step = o.step;
    cfg.fit = fit_config(o.n_max, o.min_events, "branching");
    cfg.bootstrap.realizations = o.bootstrap;
    cfg.master_seed = o.seed;
    cfg.jobs = o.jobs;
    return cfg;
}

json window_json(const hawkes::WindowEstimate& w) {
    json j{{"date", hawkes::format_date(w.date)},
           {"window_start_s", w.window_start},
           {"len_s", w.window_length},
           {"n_events", w.n_events},
           {"status", std::string(hawkes::to_string(w.status))},
           {"converged_fits", w.converged_fits},
           {"mu", summary_json(w.mu)},
           {"n", summary_json(w.n)},
           {"beta", summary_json(w.beta)},
           {"ll", nullable(w.log_likelihood)},
           {"ks_stat", nullable(w.gof.ks_statistic)},
           {"ks_pmax", nullable(w.gof.p_value)},
           {"window_rejected", w.gof.window_rejected},
           {"p_values", w.gof.bootstrap_p_values}};
    j["flag_n"] = w.flag_n ? json(*w.flag_n) : json(nullptr);
    j["flag_rate"] = w.flag_rate ? json(*w.flag_rate) : json(nullptr);
    if (!w.error.empty()) {
        j["error"] = w.error;
    }
    return j;
}

json aggregation_json(std::span<const hawkes::AggregationRecord> records) {
    json a = json::array();
    for (const auto& r : records) {
        a.push_back({{"center_date", hawkes::format_date(r.center)},
                     {"len_s", r.window_length},
                     {"param", r.param},
                     {"mean", r.mean},
                     {"median", r.median},
                     {"q10", r.q_lo},
                     {"q90", r.q_hi},
                     {"count", r.count}});
    }
    return a;
}

void write_scan_outputs(Run& run, const ScanOptions& o, const std::string& prefix,
                        std::span<const hawkes::WindowEstimate> windows) {
    run.write(prefix + "scan.csv", [&](std::ostream& out) { hawkes::io::write_scan(out, windows); });
    hawkes::AggregateConfig ac;
    ac.half_width_days = o.half_width;
    ac.include_rejected = o.include_rejected;
    const auto agg = windows.empty() ? std::vector<hawkes::AggregationRecord>{} : hawkes::aggregate(windows, ac);
    run.write(prefix + "aggregation.csv", [&](std::ostream& out) { hawkes::io::write_aggregation(out, agg); });
    if (o.json_out) {
        json w = json::array();
        for (const auto& e : windows) {
            w.push_back(window_json(e));
        }
        run.write(prefix + "scan.json", [&](std::ostream& out) { out << w.dump(2) << '\n'; });
        run.write(prefix + "aggregation.json",
                  [&](std::ostream& out) { out << aggregation_json(agg).dump(2) << '\n'; });
    }
}

int cmd_scan(const ScanOptions& o, Run& run) {
    run.set_output(o.out);
    const auto sessions = load_sessions(run, o.events, o.horizon);
    const auto report = hawkes::scan(sessions, scan_config(o));
    write_scan_outputs(run, o, "", report.windows);
    return kExitOk;
}

int cmd_reshuffle(const ScanOptions& o, Run& run) {
    run.set_output(o.out);
    const auto sessions = load_sessions(run, o.events, o.horizon);
    const auto cmp = hawkes::reshuffle_null_experiment(sessions, scan_config(o));
    write_scan_outputs(run, o, "", cmp.original.windows);
    write_scan_outputs(run, o, "reshuffled_", cmp.reshuffled.windows);
    run.write("reshuffled_events.csv", [&](std::ostream& out) {
        hawkes::io::write_session_events(out, cmp.reshuffled_sessions,
                                         {{"session_length_s", hawkes::io::exact(sessions.front().events.end)}});
    });
    run.write("reshuffle_summary.csv", [&](std::ostream& out) {
        out << "arm,len_s,windows_ok,n_median,n_q10,n_q90\n";
        auto rows = [&](const char* arm, const std::vector<hawkes::NullArmSummary>& s) {
            for (const auto& r : s) {
                out << arm << ',' << hawkes::io::num(r.window_length) << ',' << r.windows_ok << ','
                    << hawkes::io::num(r.n_median) << ',' << hawkes::io::num(r.n_q10) << ','
                    << hawkes::io::num(r.n_q90) << '\n';
            }
        };
        rows("original", cmp.original_summary);
        rows("reshuffled", cmp.reshuffled_summary);
    });
    run.write("day_counts.csv", [&](std::ostream& out) {
        out << "date,n_original,n_reshuffled\n";
        for (std::size_t i = 0; i < sessions.size(); ++i) {
            out << hawkes::format_date(sessions[i].date) << ',' << sessions[i].events.size() << ','
                << cmp.reshuffled_sessions[i].events.size() << '\n';
        }
    });
    if (!cmp.counts_conserved) {
        throw ExitError(kExitInternal, "reshuffling changed a per-day event count");
    }
    return kExitOk;
}

hawkes::DetectorConfig detector_config(const ScanOptions& o) {
    if (o.band.size() != 2) {
        throw ExitError(kExitUsage, "--band takes two quantiles, e.g. 0.05,0.95");
    }
    return {o.band[0], o.band[1], o.min_windows};
}

int cmd_detect(ScanOptions o, Run& run) {
    run.set_output(o.out);
    const auto dc = detector_config(o);
    std::vector<hawkes::WindowEstimate> windows;
    if (!o.scan.empty()) {
        run.input(o.scan);
        std::ifstream in(o.scan);
        windows = hawkes::io::read_scan(in);
        if (windows.empty()) {
            throw ExitError(kExitInsufficient, "scan file has no windows");
        }
    } else {
        if (o.events.empty()) {
            throw ExitError(kExitUsage, "give --events or --scan");
        }
        const auto sessions = load_sessions(run, o.events, o.horizon);
        auto cfg = scan_config(o);
        if (!o.overlapping) {
            if (cfg.window_lengths.size() != 1) {
                throw ExitError(kExitUsage, "non-overlapping detection takes a single --windows length");
            }
            cfg.step = cfg.window_lengths.front();
        }
        windows = hawkes::scan(sessions, cfg).windows;
    }
    hawkes::criticality_detector(windows, dc);
    run.write("detect.csv", [&](std::ostream& out) { hawkes::io::write_scan(out, windows); });
    if (o.json_out) {
        json w = json::array();
        for (const auto& e : windows) {
            w.push_back(window_json(e));
        }
        run.write("detect.json", [&](std::ostream& out) { out << w.dump(2) << '\n'; });
    }
    return kExitOk;
}

// ------------------------------------------------------------------ report

struct ReportOptions {
    std::string scan;
    int half_width{30};
    bool include_rejected{false};
    bool recompute_flags{false};
    std::vector<double> band{0.05, 0.95};
    std::size_t min_windows{5};
    std::string out{"out"};
};

int cmd_report(const ReportOptions& o, Run& run) {
    run.set_output(o.out);
    run.input(o.scan);
    std::ifstream in(o.scan);
    auto windows = hawkes::io::read_scan(in);
    if (windows.empty()) {
        throw ExitError(kExitInsufficient, "scan file has no windows");
    }
    if (o.recompute_flags) {
        if (o.band.size() != 2) {
            throw ExitError(kExitUsage, "--band takes two quantiles, e.g. 0.05,0.95");
        }
        hawkes::criticality_detector(windows, {o.band[0], o.band[1], o.min_windows});
    }
    hawkes::AggregateConfig ac;
    ac.half_width_days = o.half_width;
    ac.include_rejected = o.include_rejected;
    const auto bands = hawkes::aggregate(windows, ac);
    run.write("bands.csv", [&](std::ostream& out) { hawkes::io::write_aggregation(out, bands); });

    auto eligible = [&](const hawkes::WindowEstimate& w) {
        return w.status == hawkes::WindowStatus::ok ||
               (o.include_rejected && w.status == hawkes::WindowStatus::rejected);
    };
    run.write("intraday_profile.csv", [&](std::ostream& out) {
        out << "len_s,window_start_s,windows,rate_mean,mu_median,n_mean,n_median,n_q10,n_q90\n";
        std::map<std::pair<double, double>, std::vector<const hawkes::WindowEstimate*>> groups;
        for (const auto& w : windows) {
            groups[{w.window_length, w.window_start}];
            if (eligible(w)) {
                groups[{w.window_length, w.window_start}].push_back(&w);
            }
        }
        for (const auto& [key, ws] : groups) {
            std::vector<double> rate, mu, n;
            for (const auto* w : ws) {
                rate.push_back(w->rate());
                mu.push_back(w->mu.median);
                n.push_back(w->n.median);
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            out << hawkes::io::num(key.first) << ',' << hawkes::io::num(key.second) << ',' << ws.size() << ','
                << hawkes::io::num(rate.empty() ? nan : hawkes::stats::mean(rate)) << ','
                << hawkes::io::num(mu.empty() ? nan : hawkes::stats::median(mu)) << ','
                << hawkes::io::num(n.empty() ? nan : hawkes::stats::mean(n)) << ','
                << hawkes::io::num(n.empty() ? nan : hawkes::stats::median(n)) << ','
                << hawkes::io::num(n.empty() ? nan : hawkes::stats::quantile(n, 0.1)) << ','
                << hawkes::io::num(n.empty() ? nan : hawkes::stats::quantile(n, 0.9)) << '\n';
        }
    });
    run.write("pvalue_cdf.csv", [&](std::ostream& out) {
        out << "len_s,p_max,cum_fraction\n";
        std::map<double, std::vector<double>> by_len;
        for (const auto& w : windows) {
            if (w.has_estimate() && !std::isnan(w.gof.p_value)) {
                by_len[w.window_length].push_back(w.gof.p_value);
            }
        }
        for (auto& [len, p] : by_len) {
            std::sort(p.begin(), p.end());
            for (std::size_t i = 0; i < p.size(); ++i) {
                out << hawkes::io::num(len) << ',' << hawkes::io::num(p[i]) << ','
                    << hawkes::io::num(static_cast<double>(i + 1) / static_cast<double>(p.size())) << '\n';
            }
        }
    });
    run.write("detector_timeline.csv", [&](std::ostream& out) {
        out << "date,window_start_s,len_s,rate,n_med,status,flag_n,flag_rate\n";
        for (const auto& w : windows) {
            out << hawkes::format_date(w.date) << ',' << hawkes::io::num(w.window_start) << ','
                << hawkes::io::num(w.window_length) << ',' << hawkes::io::num(w.rate()) << ','
                << hawkes::io::num(w.n.median) << ',' << hawkes::to_string(w.status) << ','
                << hawkes::io::flag(w.flag_n) << ',' << hawkes::io::flag(w.flag_rate) << '\n';
        }
    });
    return kExitOk;
}

int exit_code_of(const std::exception& e) {
    if (const auto* x = dynamic_cast<const ExitError*>(&e)) {
        return x->code;
    }
    if (dynamic_cast<const hawkes::InsufficientDataError*>(&e) || dynamic_cast<const hawkes::IngestError*>(&e) ||
        dynamic_cast<const hawkes::ValidationError*>(&e)) {
        return kExitInsufficient;
    }
    if (dynamic_cast<const hawkes::DomainError*>(&e)) {
        return kExitUsage;
    }
    return kExitInternal;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential-kernel Hawkes process toolkit: simulation, calibration, goodness of fit and "
                 "rolling branching-ratio scans.\n"
                 "Exit codes: 0 ok, 2 usage, 3 simulation explosion, 4 insufficient or missing data, "
                 "5 internal error."};
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key=value config file; values are overridden by flags")
        ->envname(kConfigEnv);
    app.require_subcommand(1);
    // Lets --config follow the subcommand name.
    app.fallthrough();

    SimulateOptions so;
    auto* sim = app.add_subcommand("simulate", "Simulate a Hawkes process (one series or several sessions)");
    sim->add_option("--mu", so.mu, "background intensity, events/s");
    sim->add_option("--n", so.n, "branching ratio");
    sim->add_option("--beta", so.beta, "kernel decay rate, 1/s");
    sim->add_option("--horizon", so.horizon, "series or session length, s");
    sim->add_option("--seed", so.seed, "master seed");
    sim->add_option("--method", so.method, "sampler")->check(CLI::IsMember({"thinning", "branching"}));
    sim->add_option("--max-events", so.max_events, "explosion cap");
    sim->add_option("--days", so.days, "number of weekday sessions; 0 writes a single series");
    sim->add_option("--start-date", so.start_date, "first session date (YYYY-MM-DD)");
    sim->add_flag("--integer", so.integer, "floor times to whole seconds");
    sim->add_option("--scenario", so.scenario, "intensity schedule (last session only with --days)")
        ->check(CLI::IsMember({"stationary", "exogenous-shock", "endogenous-ramp"}));
    sim->add_option("--shock-start", so.shock_start, "exogenous shock start, s");
    sim->add_option("--shock-end", so.shock_end, "exogenous shock end, s");
    sim->add_option("--shock-factor", so.shock_factor, "background multiplier during the shock");
    sim->add_option("--ramp-start", so.ramp_start, "endogenous ramp start, s");
    sim->add_option("--ramp-end", so.ramp_end, "endogenous ramp end, s");
    sim->add_option("--n-peak", so.n_peak, "branching ratio at the end of the ramp");
    sim->add_option("--ramp-steps", so.ramp_steps, "number of constant pieces in the ramp");
    sim->add_flag("--quotes", so.quotes, "also write a synthetic quote feed (needs --days)");
    sim->add_option("--rth", so.rth, "session hours of the synthetic feed");
    sim->add_option("--tz", so.tz, "exchange UTC offset of the synthetic feed");
    sim->add_option("-o,--out", so.out, "output directory");

    IngestOptions io;
    auto* ing = app.add_subcommand("ingest", "Extract mid-price change events from a quote feed");
    ing->add_option("--quotes", io.quotes, "quote/trade CSV (ts,type,bid,ask,price,volume,contract)")->required();
    ing->add_option("--rth", io.rth, "regular trading hours, HH:MM-HH:MM local");
    ing->add_option("--tz", io.tz, "exchange time zone as a fixed UTC offset, e.g. UTC-05:00");
    ing->add_option("--volume-quantile", io.volume_quantile, "drop days below this per-year volume quantile");
    ing->add_option("--early-close-tolerance", io.early_close_tolerance, "s before the close");
    ing->add_option("--min-active-events", io.min_active_events, "days with fewer events are inactive");
    ing->add_flag("--keep-early-close", io.keep_early_close, "keep early-close days");
    ing->add_option("-o,--out", io.out, "output directory");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Maximum likelihood fit of one window");
    fit->add_option("--events", fo.events, "event CSV")->required();
    fit->add_option("--date", fo.date, "session to fit in a multi-session file");
    fit->add_option("--window-start", fo.window_start, "window start, s");
    fit->add_option("--window-len", fo.window_len, "window length, s (0 = to the end)");
    fit->add_option("--horizon", fo.horizon, "series length when the file has no horizon header");
    fit->add_option("--n-max", fo.n_max, "upper bound of the branching ratio");
    fit->add_option("--min-events", fo.min_events, "minimum events to fit");
    fit->add_option("--bootstrap", fo.bootstrap, "sub-second randomisations (1 = single fit)");
    fit->add_option("--seed", fo.seed, "master seed");
    fit->add_option("--parametrization", fo.parametrization, "search coordinates")
        ->check(CLI::IsMember({"branching", "amplitude"}));
    fit->add_option("-o,--out", fo.out, "output directory");

    GofOptions go;
    auto* gof = app.add_subcommand("gof", "Residual Kolmogorov-Smirnov test of given parameters");
    gof->add_option("--events", go.events, "event CSV")->required();
    gof->add_option("--fit", go.fit, "fit.json from the fit command");
    gof->add_option("--mu", go.mu, "background intensity");
    gof->add_option("--n", go.n, "branching ratio");
    gof->add_option("--beta", go.beta, "kernel decay rate");
    gof->add_option("--date", go.date, "session in a multi-session file");
    gof->add_option("--window-start", go.window_start, "window start, s");
    gof->add_option("--window-len", go.window_len, "window length, s (0 = to the end)");
    gof->add_option("--horizon", go.horizon, "series length when the file has no horizon header");
    gof->add_option("--seed", go.seed, "seed of the sub-second randomisation");
    gof->add_option("-o,--out", go.out, "output directory");

    auto add_scan_options = [](CLI::App* c, ScanOptions& o) {
        c->add_option("--horizon", o.horizon, "session length when the file has no header");
        c->add_option("--windows", o.windows, "window lengths, s")->delimiter(',');
        c->add_option("--step", o.step, "window step, s");
        c->add_option("--bootstrap", o.bootstrap, "randomisations per window");
        c->add_option("--seed", o.seed, "master seed");
        c->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
        c->add_option("--n-max", o.n_max, "upper bound of the branching ratio");
        c->add_option("--min-events", o.min_events, "windows with fewer events are skipped");
        c->add_option("--half-width", o.half_width, "aggregation half-width, days");
        c->add_flag("--include-rejected", o.include_rejected, "aggregate rejected windows too");
        c->add_flag("--json", o.json_out, "also write JSON mirrors");
        c->add_option("-o,--out", o.out, "output directory");
    };
    ScanOptions sc;
    auto* scan = app.add_subcommand("scan", "Rolling-window calibration of every session");
    scan->add_option("--events", sc.events, "event CSV")->required();
    add_scan_options(scan, sc);

    ScanOptions ro;
    auto* resh = app.add_subcommand("reshuffle", "Scan the data and its within-day Poissonisation");
    resh->add_option("--events", ro.events, "event CSV")->required();
    add_scan_options(resh, ro);

    ScanOptions dop;
    dop.windows = {600.0};
    dop.step = 600.0;
    auto* det = app.add_subcommand("detect", "Flag windows above the previous session's quantile band");
    det->add_option("--events", dop.events, "event CSV (runs a scan)");
    det->add_option("--scan", dop.scan, "existing scan CSV (flags only)");
    add_scan_options(det, dop);
    det->add_option("--band", dop.band, "reference quantiles lo,hi")->delimiter(',')->expected(2);
    det->add_option("--min-windows", dop.min_windows, "ok windows needed on the reference session");
    det->add_flag("--overlapping", dop.overlapping, "use --step instead of back-to-back windows");

    ReportOptions rp;
    auto* rep = app.add_subcommand("report", "Plot-ready tables from a scan CSV");
    rep->add_option("--scan", rp.scan, "scan or detect CSV")->required();
    rep->add_option("--half-width", rp.half_width, "aggregation half-width, days");
    rep->add_flag("--include-rejected", rp.include_rejected, "use rejected windows too");
    rep->add_flag("--recompute-flags", rp.recompute_flags, "rerun the detector on the scan");
    rep->add_option("--band", rp.band, "reference quantiles lo,hi")->delimiter(',')->expected(2);
    rep->add_option("--min-windows", rp.min_windows, "ok windows needed on the reference session");
    rep->add_option("-o,--out", rp.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    std::vector<std::string> args(argv, argv + argc);
    args.front() = "hawkes";
    const CLI::App* used = app.get_subcommands().front();
    std::uint64_t seed = 0;
    if (used == sim) seed = so.seed;
    if (used == fit) seed = fo.seed;
    if (used == gof) seed = go.seed;
    if (used == scan) seed = sc.seed;
    if (used == resh) seed = ro.seed;
    if (used == det) seed = dop.seed;
    Run run(used->get_name(), args, seed);
    run.set_config(resolved_config(used));
    try {
        int rc = kExitOk;
        if (used == sim) rc = cmd_simulate(so, run);
        if (used == ing) rc = cmd_ingest(io, run);
        if (used == fit) rc = cmd_fit(fo, run);
        if (used == gof) rc = cmd_gof(go, run);
        if (used == scan) rc = cmd_scan(sc, run);
        if (used == resh) rc = cmd_reshuffle(ro, run);
        if (used == det) rc = cmd_detect(dop, run);
        if (used == rep) rc = cmd_report(rp, run);
        run.finish();
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "hawkes " << used->get_name() << ": " << e.what() << '\n';
        return exit_code_of(e);
    }
}
