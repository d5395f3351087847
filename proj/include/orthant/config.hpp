#pragma once

// Flat `key = value` experiment configuration. Lines starting with '#' are
// comments, values may be double-quoted, later keys override earlier ones.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/error.hpp"
#include "orthant/lattice.hpp"

namespace orthant {

struct ExperimentConfig {
    int d = 2;
    ModelKind model = ModelKind::HalfOrthant;
    Rational eta{0};
    double p = 0.9;
    std::vector<double> p_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::int64_t n = 1;
    std::vector<std::int64_t> n_list{1, 2, 4};
    int window = 0;          // 0: window_scale * n * d per level
    int window_scale = 4;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";
    std::int64_t round_cap = 0;  // 0: default cap
    std::int64_t k = 0;          // 0: every k in 1..n
    double tol = 1e-3;
    double threshold = 0.5;
    std::uint64_t min_successes = 5;
    std::int64_t steps = 10000;
    std::uint64_t walks = 1000;
    std::vector<Vertex> u_list;
    std::int64_t depth = 0;      // 0: window / 2
    bool exact = true;
    std::size_t cap = 26;
    bool quenched = false;
    std::uint64_t cloud_seeds = 4;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    int window_for(std::int64_t level) const {
        return window > 0 ? window : static_cast<int>(std::max<std::int64_t>(1, window_scale * level * d));
    }
};

/// Keys in emission order.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "d",     "model", "eta",       "p",          "p_grid", "n",           "n_list", "window", "window_scale",
        "trials", "seed", "threads",   "out_dir",    "round_cap", "k",        "tol",    "threshold", "min_successes",
        "steps", "walks", "u_list",    "depth",      "exact",  "cap",         "quenched", "cloud_seeds"};
    return keys;
}

struct ParseResult {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value(); }
    std::string joined() const {
        std::string s;
        for (const auto& e : errors) s += (s.empty() ? "" : "; ") + e;
        return s;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(trim(s));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (*end != '\0') return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> to_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> to_uint(const std::string& s) {
    if (s.empty() || s[0] == '-') return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    return v;
}

inline std::optional<bool> to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    return std::nullopt;
}

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

/// Parses config text, reporting every problem rather than the first.
inline ParseResult parse_config(std::string_view text) {
    using namespace detail;
    ParseResult res;
    auto& errs = res.errors;
    std::map<std::string, std::pair<std::string, int>> raw;
    int lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            errs.push_back("line " + std::to_string(lineno) + ": expected `key = value`");
            continue;
        }
        const std::string key(trim(t.substr(0, eq)));
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
            errs.push_back("line " + std::to_string(lineno) + ": unknown key `" + key + "`");
            continue;
        }
        raw[key] = {unquote(t.substr(eq + 1)), lineno};
    }

    ExperimentConfig c;
    auto bad = [&](const std::string& key, const std::string& why) {
        errs.push_back(key + " (line " + std::to_string(raw[key].second) + "): " + why);
    };
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second.first;
    };
    auto read_int = [&](const std::string& key, auto& dst, std::int64_t lo, std::int64_t hi) {
        if (const auto* s = get(key)) {
            const auto v = to_int(*s);
            if (!v) return bad(key, "not an integer: `" + *s + "`");
            if (*v < lo || *v > hi) return bad(key, std::to_string(*v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
        }
    };
    auto read_uint = [&](const std::string& key, auto& dst, std::uint64_t lo) {
        if (const auto* s = get(key)) {
            const auto v = to_uint(*s);
            if (!v) return bad(key, "not a nonnegative integer: `" + *s + "`");
            if (*v < lo) return bad(key, "must be at least " + std::to_string(lo));
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
        }
    };
    auto read_bool = [&](const std::string& key, bool& dst) {
        if (const auto* s = get(key)) {
            const auto v = to_bool(*s);
            if (!v) return bad(key, "not a boolean: `" + *s + "`");
            dst = *v;
        }
    };
    auto read_prob = [&](const std::string& key, const std::string& s) -> std::optional<double> {
        const auto v = to_double(s);
        if (!v) {
            bad(key, "not a number: `" + s + "`");
            return std::nullopt;
        }
        if (!(*v >= 0 && *v <= 1)) {
            bad(key, s + " outside [0, 1]");
            return std::nullopt;
        }
        return v;
    };

    read_int("d", c.d, 2, kMaxDim);
    if (const auto* s = get("model")) {
        if (*s == "orthant") c.model = ModelKind::Orthant;
        else if (*s == "half-orthant" || *s == "half_orthant") c.model = ModelKind::HalfOrthant;
        else bad("model", "expected orthant or half-orthant, got `" + *s + "`");
    }
    if (const auto* s = get("eta")) {
        const auto r = parse_rational(*s);
        if (!r) bad("eta", "malformed rational `" + *s + "`");
        else if (*r < Rational(0) || Rational(1) < *r) bad("eta", r->str() + " outside [0, 1]");
        else c.eta = *r;
    }
    if (const auto* s = get("p"))
        if (const auto v = read_prob("p", *s)) c.p = *v;
    if (const auto* s = get("p_grid")) {
        std::vector<double> grid;
        bool ok = true;
        for (const auto& item : split(*s, ',')) {
            if (item.empty()) continue;
            const auto v = read_prob("p_grid", item);
            ok = ok && v.has_value();
            if (v) grid.push_back(*v);
        }
        if (ok && grid.empty()) bad("p_grid", "empty grid");
        if (ok && !grid.empty()) c.p_grid = grid;
    }
    read_int("n", c.n, 0, 1 << 20);
    if (const auto* s = get("n_list")) {
        std::vector<std::int64_t> list;
        bool ok = true;
        for (const auto& item : split(*s, ',')) {
            if (item.empty()) continue;
            const auto v = to_int(item);
            if (!v || *v < 0) {
                bad("n_list", "not a nonnegative integer: `" + item + "`");
                ok = false;
            } else {
                list.push_back(*v);
            }
        }
        if (ok && list.empty()) bad("n_list", "empty list");
        if (ok && !list.empty()) c.n_list = list;
    }
    read_int("window", c.window, 0, 1 << 16);
    read_int("window_scale", c.window_scale, 1, 1 << 10);
    read_uint("trials", c.trials, 1);
    read_uint("seed", c.seed, 0);
    read_int("threads", c.threads, 1, 1024);
    if (const auto* s = get("out_dir")) {
        if (s->empty()) bad("out_dir", "empty path");
        else c.out_dir = *s;
    }
    read_int("round_cap", c.round_cap, 0, std::int64_t{1} << 40);
    read_int("k", c.k, 0, 1 << 20);
    if (const auto* s = get("tol")) {
        const auto v = to_double(*s);
        if (!v || !(*v > 0 && *v < 1)) bad("tol", "expected a number in (0, 1), got `" + *s + "`");
        else c.tol = *v;
    }
    if (const auto* s = get("threshold")) {
        const auto v = to_double(*s);
        if (!v || !(*v > 0 && *v < 1)) bad("threshold", "expected a number in (0, 1), got `" + *s + "`");
        else c.threshold = *v;
    }
    read_uint("min_successes", c.min_successes, 1);
    read_int("steps", c.steps, 1, std::int64_t{1} << 40);
    read_uint("walks", c.walks, 1);
    read_int("depth", c.depth, 0, 1 << 20);
    read_bool("exact", c.exact);
    read_uint("cap", c.cap, 1);
    if (c.cap > 40) bad("cap", "enumeration cap above 40 sites is not supported");
    read_bool("quenched", c.quenched);
    read_uint("cloud_seeds", c.cloud_seeds, 0);
    if (const auto* s = get("u_list")) {
        std::vector<Vertex> us;
        for (const auto& item : split(*s, ';')) {
            if (item.empty()) continue;
            const auto parts = split(item, ',');
            if (static_cast<int>(parts.size()) != c.d) {
                bad("u_list", "direction `" + item + "` does not have " + std::to_string(c.d) + " coordinates");
                continue;
            }
            Vertex u(c.d);
            bool ok = true;
            for (int i = 0; i < c.d; ++i) {
                const auto v = to_int(parts[i]);
                if (!v || *v < -(1 << 20) || *v > (1 << 20)) ok = false;
                else u.coords[i] = static_cast<std::int32_t>(*v);
            }
            if (!ok) bad("u_list", "malformed direction `" + item + "`");
            else us.push_back(u);
        }
        c.u_list = us;
    }
    for (const auto& u : c.u_list)
        if (u.dim != c.d) errs.push_back("u_list: direction " + u.str() + " does not match d = " + std::to_string(c.d));

    if (errs.empty()) res.config = c;
    return res;
}

/// Canonical text; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
    using detail::fmt_double;
    std::ostringstream o;
    auto list = [](const auto& xs, auto&& f) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + f(xs[i]);
        return s;
    };
    std::string us;
    for (std::size_t i = 0; i < c.u_list.size(); ++i) {
        us += i ? ";" : "";
        for (int j = 0; j < c.u_list[i].dim; ++j) us += (j ? "," : "") + std::to_string(c.u_list[i][j]);
    }
    o << "d = " << c.d << "\n"
      << "model = " << to_string(c.model) << "\n"
      << "eta = \"" << c.eta.str() << "\"\n"
      << "p = " << fmt_double(c.p) << "\n"
      << "p_grid = " << list(c.p_grid, fmt_double) << "\n"
      << "n = " << c.n << "\n"
      << "n_list = " << list(c.n_list, [](std::int64_t x) { return std::to_string(x); }) << "\n"
      << "window = " << c.window << "\n"
      << "window_scale = " << c.window_scale << "\n"
      << "trials = " << c.trials << "\n"
      << "seed = " << c.seed << "\n"
      << "threads = " << c.threads << "\n"
      << "out_dir = \"" << c.out_dir << "\"\n"
      << "round_cap = " << c.round_cap << "\n"
      << "k = " << c.k << "\n"
      << "tol = " << fmt_double(c.tol) << "\n"
      << "threshold = " << fmt_double(c.threshold) << "\n"
      << "min_successes = " << c.min_successes << "\n"
      << "steps = " << c.steps << "\n"
      << "walks = " << c.walks << "\n"
      << "u_list = \"" << us << "\"\n"
      << "depth = " << c.depth << "\n"
      << "exact = " << (c.exact ? "true" : "false") << "\n"
      << "cap = " << c.cap << "\n"
      << "quenched = " << (c.quenched ? "true" : "false") << "\n"
      << "cloud_seeds = " << c.cloud_seeds << "\n";
    return o.str();
}

/// FNV-1a over the canonical text minus the keys that cannot change results.
inline std::uint64_t config_hash(const ExperimentConfig& c, std::string_view command) {
    ExperimentConfig k = c;
    k.threads = 1;
    k.out_dir = "";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    };
    mix(command);
    mix("\n");
    mix(emit_config(k));
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

}  // namespace orthant
