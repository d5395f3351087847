#pragma once

// Subcommand pipelines: each writes its result files under cfg.out_dir. Every
// CSV starts with a `#` provenance line, every JSON object carries a
// "provenance" field and JSON-lines files start with one.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orthant/config.hpp"
#include "orthant/estimators.hpp"
#include "orthant/exploration.hpp"
#include "orthant/oracle.hpp"
#include "orthant/osss.hpp"
#include "orthant/reach.hpp"
#include "orthant/version.hpp"
#include "orthant/walk.hpp"

namespace orthant {

using nlohmann::json;

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string generator = kGeneratorIdentity;
    std::string version = kVersion;
    std::string started;
    std::string finished;
    std::vector<std::string> files;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"theta",       "sweep",  "critical", "shape",        "walk",
                                            "osss-check", "russo-check", "oracle", "explore-trace"};
    return c;
}

class RunContext {
public:
    RunContext(std::string command, ExperimentConfig cfg)
        : command_(std::move(command)), cfg_(std::move(cfg)), hash_(hex64(config_hash(cfg_, command_))) {
        std::error_code ec;
        std::filesystem::create_directories(cfg_.out_dir, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + cfg_.out_dir + ": " + ec.message());
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    const std::string& command() const { return command_; }
    const std::string& hash() const { return hash_; }
    const std::vector<std::string>& files() const { return files_; }

    /// Config text without the keys that do not affect results.
    std::string canonical_config() const {
        std::istringstream in(emit_config(cfg_));
        std::string out;
        for (std::string line; std::getline(in, line);)
            if (line.rfind("threads", 0) != 0 && line.rfind("out_dir", 0) != 0) out += line + "\n";
        return out;
    }

    std::string provenance_line() const {
        return "# orthant " + command_ + " config_hash=" + hash_ + " generator=" + kGeneratorIdentity + " version=" + kVersion;
    }

    json provenance() const {
        return {{"command", command_}, {"config_hash", hash_}, {"generator", kGeneratorIdentity}, {"version", kVersion},
                {"config", canonical_config()}};
    }

    void write_csv(const std::string& name, const std::string& header, const std::string& body) {
        std::string config_line = "# config:";
        std::istringstream in(canonical_config());
        for (std::string line; std::getline(in, line);) config_line += " " + line + ";";
        write(name, provenance_line() + "\n" + config_line + "\n" + header + "\n" + body);
    }

    void write_json(const std::string& name, json body) {
        body["provenance"] = provenance();
        write(name, body.dump(2) + "\n");
    }

    void write_jsonl(const std::string& name, json head, const std::vector<json>& lines) {
        head["provenance"] = provenance();
        std::string text = head.dump() + "\n";
        for (const auto& l : lines) text += l.dump() + "\n";
        write(name, text);
    }

    void write(const std::string& name, const std::string& text) {
        const auto path = std::filesystem::path(cfg_.out_dir) / name;
        std::ofstream f(path, std::ios::binary);
        f << text;
        f.close();
        if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
        files_.push_back(name);
    }

private:
    std::string command_;
    ExperimentConfig cfg_;
    std::string hash_;
    std::vector<std::string> files_;
};

namespace detail {

inline std::string num(double x) { return fmt_double(x); }

inline std::string vertex_field(const Vertex& v) {
    std::string s;
    for (int i = 0; i < v.dim; ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

inline json vertex_json(const Vertex& v) {
    json a = json::array();
    for (int i = 0; i < v.dim; ++i) a.push_back(v[i]);
    return a;
}

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ThetaOptions theta_options(const ExperimentConfig& c) {
    ThetaOptions o;
    o.p_grid = c.p_grid;
    o.n_list = c.n_list;
    o.eta = c.eta;
    o.d = c.d;
    o.window.fixed = c.window;
    o.window.scale = c.window_scale;
    o.trials = c.trials;
    o.seed = c.seed;
    o.threads = c.threads;
    return o;
}

inline std::string theta_rows(const ThetaCurve& curve) {
    std::string body;
    for (const auto& cell : curve.cells)
        body += num(cell.p) + "," + std::to_string(cell.n) + "," + cell.eta.str() + "," + std::to_string(cell.successes) + "," +
                std::to_string(cell.trials) + "," + std::to_string(cell.window) + "," + num(cell.truncation_rate()) + "\n";
    return body;
}

inline const char* kThetaHeader = "p,n,eta,successes,trials,window,truncation_rate";

inline std::vector<Vertex> default_directions(int d) {
    if (d == 2) return {Vertex{1, 0}, Vertex{0, 1}, Vertex{1, -1}, Vertex{-1, 1}, Vertex{2, -1}, Vertex{-1, 2}, Vertex{1, 1}};
    std::vector<Vertex> us{Vertex::unit(d, 0), Vertex::unit(d, 1), Vertex::unit(d, 0) - Vertex::unit(d, 1), Vertex::ones(d)};
    return us;
}

}  // namespace detail

inline void run_theta(RunContext& ctx) {
    const auto curve = estimate_theta(detail::theta_options(ctx.cfg()));
    ctx.write_csv("theta.csv", detail::kThetaHeader, detail::theta_rows(curve));
}

inline void run_sweep(RunContext& ctx) {
    using detail::num;
    const auto& c = ctx.cfg();
    const auto curve = estimate_theta(detail::theta_options(c));
    ctx.write_csv("theta.csv", detail::kThetaHeader, detail::theta_rows(curve));
    std::string fits, sums;
    auto list = [](const std::vector<std::int64_t>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + std::to_string(xs[i]);
        return s;
    };
    for (double p : c.p_grid) {
        const auto pi = *curve.p_index(p);
        double running = 0;
        for (std::size_t ni = 0; ni < curve.n_list.size(); ++ni) {
            running += curve.at(pi, ni).estimate();
            sums += num(p) + "," + std::to_string(curve.n_list[ni]) + "," + num(running) + "\n";
        }
        try {
            const auto fit = fit_decay(curve, p, c.min_successes);
            fits += num(p) + "," + c.eta.str() + "," + num(fit.c_p) + "," + num(fit.stderr_) + "," + num(fit.r2) + "," +
                    (fit.decaying ? "1" : "0") + "," + list(fit.n_used) + "," + list(fit.censored) + ",ok\n";
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InsufficientData) throw;
            fits += num(p) + "," + c.eta.str() + ",,,,0,,,insufficient\n";
        }
    }
    ctx.write_csv("fits.csv", "p,eta,c_p,stderr,r2,decaying,n_used,censored,status", fits);
    ctx.write_csv("sums.csv", "p,n,S_n", sums);
}

inline void run_critical(RunContext& ctx) {
    using detail::num;
    const auto& c = ctx.cfg();
    std::string body;
    std::int64_t largest = 0;
    for (auto n : c.n_list) {
        largest = std::max(largest, n);
        const int w = c.window_for(n);
        const auto e = estimate_ptilde(c.eta, n, c.d, Window{w}, c.trials, c.tol, c.seed, c.threads, c.threshold);
        body += e.eta.str() + "," + num(e.p_lo) + "," + num(e.p_hi) + "," + std::to_string(n) + "," + std::to_string(w) + "," +
                num(e.threshold) + "," + num(e.stat_lo) + "," + num(e.stat_hi) + "," + std::to_string(e.trials) + "\n";
    }
    ctx.write_csv("critical.csv", "eta,p_lo,p_hi,n,window,threshold,stat_lo,stat_hi,trials", body);
    const int w = c.window_for(std::max<std::int64_t>(largest, 1));
    const std::int64_t m = c.depth > 0 ? c.depth : w / 2;
    const auto e = estimate_pc(m, c.d, Window{w}, c.trials, c.tol, c.seed, c.threads, c.threshold);
    ctx.write_csv("pc.csv", "m,p_lo,p_hi,window,threshold,stat_lo,stat_hi,trials",
                  std::to_string(m) + "," + num(e.p_lo) + "," + num(e.p_hi) + "," + std::to_string(w) + "," + num(e.threshold) +
                      "," + num(e.stat_lo) + "," + num(e.stat_hi) + "," + std::to_string(e.trials) + "\n");
}

inline void run_shape_command(RunContext& ctx) {
    using detail::num;
    const auto& c = ctx.cfg();
    const auto us = c.u_list.empty() ? detail::default_directions(c.d) : c.u_list;
    std::int64_t largest = 1;
    for (auto n : c.n_list) {
        require(n >= 1, "shape: n_list entries must be positive");
        largest = std::max(largest, n);
    }
    ShapeOptions opt;
    opt.p = c.p;
    opt.model = c.model;
    opt.d = c.d;
    opt.window = Window{c.window_for(largest)};
    opt.n_list = c.n_list;
    opt.trials = c.trials;
    opt.seed = c.seed;
    opt.threads = c.threads;
    const auto run = run_shape(us, opt);
    std::string body;
    std::string truncated;
    for (std::size_t ui = 0; ui < us.size(); ++ui) {
        const auto est = summarize_direction(run, ui);
        for (const auto& lv : est.levels)
            body += detail::vertex_field(us[ui]) + "," + std::to_string(lv.n) + "," + (lv.count ? num(lv.mean) : "") + "," +
                    (lv.count ? num(lv.stderr_) : "") + "," + std::to_string(lv.count) + "," + std::to_string(lv.nones) + "\n";
        if (!est.gamma_hat && truncated.empty()) truncated = us[ui].str();
    }
    ctx.write_csv("gamma.csv", "u,n,gamma_hat,stderr,count,nones", body);

    const auto cloud = shape_cloud(c.p, largest, opt.window, c.d, c.cloud_seeds, c.seed, c.threads, c.model);
    std::string cbody;
    for (const auto& [seed, x] : cloud.points) {
        cbody += std::to_string(seed);
        for (double v : x) cbody += "," + num(v);
        cbody += "\n";
    }
    std::string coords;
    for (int i = 0; i < c.d; ++i) coords += (i ? ",x" : "x") + std::to_string(i + 1);
    ctx.write_csv("cloud.csv", "seed," + coords, cbody);

    std::string kbody;
    for (const auto& v : filled_cluster(c.model, SiteField(derive_seed(c.seed, stream::kShape, 0), c.d), c.p, opt.window, c.d)) {
        for (int i = 0; i < c.d; ++i) kbody += (i ? "," : "") + std::to_string(v[i]);
        kbody += "\n";
    }
    ctx.write_csv("cluster.csv", coords, kbody);
    if (!truncated.empty())
        throw Error(ErrorKind::TruncationDominated, "shape: direction " + truncated + " has windowed-out samples at the largest n");
}

inline void run_walk(RunContext& ctx) {
    using detail::num;
    const auto& c = ctx.cfg();
    const auto st = ballisticity_report(c.p, c.d, c.steps, c.walks, c.seed, c.quenched, c.threads);
    json pairs = json::array();
    for (const auto& pd : st.pair_diffs) pairs.push_back({{"a", pd.a}, {"b", pd.b}, {"mean", pd.mean}, {"stderr", pd.stderr_}});
    ctx.write_json("walk_stats.json", {{"p", st.p},
                                       {"d", st.d},
                                       {"steps", st.steps},
                                       {"walks", st.walks},
                                       {"quenched", st.quenched},
                                       {"speed", st.speed},
                                       {"speed_stderr", st.speed_stderr},
                                       {"covariance", st.covariance},
                                       {"covariance_stderr", st.covariance_stderr},
                                       {"lambda_min", st.lambda_min},
                                       {"lambda_min_stderr", st.lambda_min_stderr},
                                       {"lambda_max", st.lambda_max},
                                       {"eigen_positive", st.eigen_positive},
                                       {"drift", st.drift},
                                       {"drift_stderr", st.drift_stderr},
                                       {"pair_diffs", pairs}});
    const SiteField env(derive_seed(c.seed, stream::kEnvironment, 0), c.d);
    std::string body;
    std::int64_t t = 0;
    walk_visit(env, c.p, c.steps, derive_seed(c.seed, stream::kWalk, 0), c.d, [&](const Vertex& v) {
        body += std::to_string(t++);
        for (int i = 0; i < c.d; ++i) body += "," + std::to_string(v[i]);
        body += "\n";
    });
    std::string coords;
    for (int i = 0; i < c.d; ++i) coords += ",x" + std::to_string(i + 1);
    ctx.write_csv("path.csv", "t" + coords, body);
}

inline json osss_json(const OsssReport& r) {
    json sites = json::array();
    for (const auto& s : r.sites)
        sites.push_back({{"v", detail::vertex_json(s.v)}, {"influence", s.influence}, {"revealment", s.revealment}});
    double slack = INFINITY;
    for (double x : r.per_k_rhs) slack = std::min(slack, x - r.variance);
    return {{"p", r.p},
            {"n", r.n},
            {"eta", r.eta.str()},
            {"window", r.window.radius},
            {"d", r.d},
            {"exact", r.exact},
            {"theta", r.theta},
            {"variance", r.variance},
            {"per_k_rhs", r.per_k_rhs},
            {"single_tree_holds", r.single_tree_holds()},
            {"single_tree_min_slack", slack},
            {"summed_lhs", r.summed_lhs},
            {"summed_rhs", r.summed_rhs},
            {"summed_holds", r.summed_holds()},
            {"summed_slack", r.summed_rhs - r.summed_lhs},
            {"determination_failures", r.determination_failures},
            {"sites", sites}};
}

inline void run_osss(RunContext& ctx) {
    const auto& c = ctx.cfg();
    OsssOptions opt;
    opt.exact = c.exact;
    opt.cap = c.cap;
    opt.trials = c.trials;
    opt.seed = c.seed;
    opt.threads = c.threads;
    const auto r = osss_check(c.p, std::max<std::int64_t>(c.n, 1), c.eta, Window{c.window_for(c.n)}, c.d, opt);
    ctx.write_json("osss.json", osss_json(r));
}

inline void run_russo(RunContext& ctx) {
    const auto& c = ctx.cfg();
    const auto r = russo_check(c.n, c.eta, Window{c.window_for(c.n)}, c.d, c.p_grid, c.cap, c.threads);
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"p", row.p},
                        {"minus_derivative", row.minus_derivative},
                        {"total_influence", row.total_influence},
                        {"discrepancy", row.discrepancy},
                        {"exact_equal", row.exact_equal}});
    ctx.write_json("russo.json", {{"n", r.n},
                                  {"eta", r.eta.str()},
                                  {"window", r.window.radius},
                                  {"d", r.d},
                                  {"max_discrepancy", r.max_discrepancy},
                                  {"rows", rows}});
}

/// Returns printable (p, theta) lines as well as writing theta_poly.json.
inline std::string run_oracle(RunContext& ctx) {
    using detail::num;
    const auto& c = ctx.cfg();
    const Window w{c.window_for(c.n)};
    const auto table = tabulate_event(c.d, c.n, c.eta, w, c.cap, c.threads);
    const auto poly = theta_polynomial(table);
    const auto infl = influences_from_table(table, c.threads);
    const SiteIndex sites(c.d, w);
    json values = json::array(), influences = json::array();
    std::string printed;
    for (double p : c.p_grid) {
        values.push_back({{"p", p}, {"theta", poly.value(p)}});
        printed += num(p) + " " + num(poly.value(p)) + "\n";
    }
    for (int j = 0; j < sites.count(); ++j)
        influences.push_back({{"v", detail::vertex_json(sites.vertex(j))}, {"counts", infl[j].counts}});
    ctx.write_json("theta_poly.json", {{"d", c.d},
                                       {"n", c.n},
                                       {"eta", c.eta.str()},
                                       {"window", w.radius},
                                       {"site_count", poly.site_count},
                                       {"form", "theta(p) = sum_j counts[j] p^j (1-p)^(site_count-j)"},
                                       {"counts", poly.counts},
                                       {"values", values},
                                       {"influences", influences}});
    return printed;
}

inline void run_explore(RunContext& ctx) {
    const auto& c = ctx.cfg();
    require(c.n >= 1, "explore-trace: n must be at least 1");
    const std::int64_t k = c.k > 0 ? c.k : 1;
    require(k <= c.n, "explore-trace: k must lie in 1..n");
    TreeOptions opt;
    opt.round_cap = c.round_cap;
    const SiteField f(c.seed, c.d);
    const auto tr = run_tree(f, c.p, c.n, c.eta, k, Window{c.window_for(c.n)}, c.d, opt);
    std::vector<json> lines;
    for (const auto& r : tr.revealed)
        lines.push_back({{"v", detail::vertex_json(r.v)}, {"bit", r.bit ? 1 : 0}, {"phase", to_string(r.phase)}, {"round", r.round}});
    json active_a = json::array(), active_b = json::array();
    for (const auto& v : tr.active_A) active_a.push_back(detail::vertex_json(v));
    for (const auto& v : tr.active_B) active_b.push_back(detail::vertex_json(v));
    ctx.write_jsonl("trace.jsonl",
                    {{"k", k},
                     {"n", c.n},
                     {"eta", c.eta.str()},
                     {"p", c.p},
                     {"window", c.window_for(c.n)},
                     {"outcome", to_string(tr.outcome)},
                     {"reveals", tr.revealed.size()},
                     {"active_A", active_a},
                     {"active_B", active_b}},
                    lines);
}

/// Dispatches one subcommand; `printed` receives any text meant for stdout.
inline RunManifest run(const std::string& command, const ExperimentConfig& cfg, std::string* printed = nullptr) {
    RunManifest m;
    m.command = command;
    m.started = detail::utc_now();
    RunContext ctx(command, cfg);
    m.config_hash = ctx.hash();
    if (command == "theta") run_theta(ctx);
    else if (command == "sweep") run_sweep(ctx);
    else if (command == "critical") run_critical(ctx);
    else if (command == "shape") run_shape_command(ctx);
    else if (command == "walk") run_walk(ctx);
    else if (command == "osss-check") run_osss(ctx);
    else if (command == "russo-check") run_russo(ctx);
    else if (command == "oracle") {
        const auto text = run_oracle(ctx);
        if (printed) *printed = text;
    } else if (command == "explore-trace") run_explore(ctx);
    else throw Error(ErrorKind::InvalidArgument, "unknown command `" + command + "`");
    m.files = ctx.files();
    m.finished = detail::utc_now();
    json j = {{"command", m.command}, {"config_hash", m.config_hash}, {"generator", m.generator}, {"version", m.version},
              {"started", m.started}, {"finished", m.finished},     {"files", m.files},         {"config", ctx.canonical_config()}};
    const auto path = std::filesystem::path(cfg.out_dir) / "manifest.json";
    std::ofstream f(path, std::ios::binary);
    f << j.dump(2) << "\n";
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return m;
}

}  // namespace orthant
