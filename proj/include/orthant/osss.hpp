#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/exploration.hpp"
#include "orthant/lattice.hpp"
#include "orthant/oracle.hpp"
#include "orthant/parallel.hpp"
#include "orthant/reach.hpp"

namespace orthant {

namespace stream {
inline constexpr std::uint64_t kTheta = 0x7468657461ULL;
inline constexpr std::uint64_t kInfluence = 0x696e666cULL;
inline constexpr std::uint64_t kRevealment = 0x72657665ULL;
inline constexpr std::uint64_t kShape = 0x73686170ULL;
inline constexpr std::uint64_t kCritical = 0x63726974ULL;
inline constexpr std::uint64_t kEnvironment = 0x656e7669ULL;
inline constexpr std::uint64_t kWalk = 0x77616c6bULL;
inline constexpr std::uint64_t kProfile = 0x70726f66ULL;
}  // namespace stream

/// Exact conversion of a finite double.
inline BigRational to_rational(double x) {
    int exp = 0;
    const double m = std::frexp(x, &exp);
    const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    exp -= 53;
    BigRational r(mant);
    BigInt two = 1;
    if (exp >= 0) {
        two <<= exp;
        r *= BigRational(two);
    } else {
        two <<= -exp;
        r /= BigRational(two);
    }
    return r;
}

struct InfluenceEstimate {
    Vertex v;
    std::uint64_t trials = 0;
    std::uint64_t flips_changed = 0;
    double estimate = 0;
    double stderr_ = 0;
};

/// Frequency, over fresh fields, that flipping v changes the windowed f_n.
inline InfluenceEstimate influence(double p, std::int64_t n, Rational eta, const Vertex& v, const Window& w, std::uint64_t trials,
                                   std::uint64_t master_seed, int threads = 1) {
    require(trials >= 1, "influence: trials must be positive");
    const int d = v.dim;
    std::vector<std::uint8_t> changed(trials, 0);
    if (w.contains(v)) {
        parallel_for(trials, threads, [&](std::size_t t) {
            const SiteField f(derive_seed(master_seed, stream::kInfluence, t), d);
            const bool a = escapes_cone(f, p, n, eta, w, d);
            const bool b = escapes_cone(flip(f, v), p, n, eta, w, d);
            changed[t] = a != b;
        });
    }
    InfluenceEstimate out;
    out.v = v;
    out.trials = trials;
    for (auto c : changed) out.flips_changed += c;
    out.estimate = static_cast<double>(out.flips_changed) / static_cast<double>(trials);
    out.stderr_ = std::sqrt(out.estimate * (1 - out.estimate) / static_cast<double>(trials));
    return out;
}

/// Monte Carlo revealment frequencies of T_1..T_n over the window sites.
struct RevealmentProfile {
    std::int64_t n = 0;
    std::uint64_t trials = 0;
    std::vector<Vertex> sites;                         // window sites, lexicographic
    std::vector<std::vector<std::uint64_t>> counts;    // [k-1][site]

    double estimate(std::int64_t k, std::size_t site) const {
        return static_cast<double>(counts[k - 1][site]) / static_cast<double>(trials);
    }
    double summed(std::size_t site) const {
        double s = 0;
        for (std::int64_t k = 1; k <= n; ++k) s += estimate(k, site);
        return s;
    }
    /// Binomial-sum standard error of summed(site), treating each T_k frequency as independent.
    double summed_stderr(std::size_t site) const {
        double v = 0;
        for (std::int64_t k = 1; k <= n; ++k) {
            const double q = estimate(k, site);
            v += q * (1 - q) / static_cast<double>(trials);
        }
        return std::sqrt(v);
    }
    /// Revealment of a vertex outside the window is 0.
    double summed(const Vertex& v) const {
        for (std::size_t i = 0; i < sites.size(); ++i)
            if (sites[i] == v) return summed(i);
        return 0.0;
    }
};

inline RevealmentProfile revealment_profile(double p, std::int64_t n, Rational eta, const Window& w, int d, std::uint64_t seeds,
                                            std::uint64_t master_seed, int threads = 1, TreeOptions opt = {}) {
    require(seeds >= 1, "revealment_profile: seeds must be nonempty");
    const SiteIndex index(d, w);
    std::vector<TreeGeometry> geoms;
    for (std::int64_t k = 1; k <= n; ++k) geoms.emplace_back(d, eta, n, k, w, opt);
    std::vector<int> site_of(geoms[0].grid().size(), -1);
    for (std::uint32_t c = 0; c < site_of.size(); ++c)
        if (geoms[0].grid().in_window(c)) site_of[c] = index.index(geoms[0].grid().vertex(c));

    // per-seed reveal lists, merged in seed order
    std::vector<std::vector<std::vector<int>>> per_seed(seeds);
    parallel_for(seeds, threads, [&](std::size_t t) {
        const CachedSiteField f(SiteField(derive_seed(master_seed, stream::kRevealment, t), d), w.radius + 1);
        TreeWorkspace ws;
        auto& lists = per_seed[t];
        lists.resize(n);
        for (std::int64_t k = 1; k <= n; ++k) {
            run_tree(geoms[k - 1], ws, f, p);
            for (const auto& ev : ws.log()) lists[k - 1].push_back(site_of[ev.cell]);
        }
    });
    RevealmentProfile out;
    out.n = n;
    out.trials = seeds;
    for (int j = 0; j < index.count(); ++j) out.sites.push_back(index.vertex(j));
    out.counts.assign(n, std::vector<std::uint64_t>(index.count(), 0));
    for (const auto& lists : per_seed)
        for (std::int64_t k = 0; k < n; ++k)
            for (int s : lists[k]) ++out.counts[k][s];
    return out;
}

struct OsssSiteTerm {
    Vertex v;
    double influence = 0;
    std::vector<double> revealment;  // per k
};

struct OsssReport {
    double p = 0;
    std::int64_t n = 0;
    Rational eta;
    Window window;
    int d = 2;
    bool exact = false;
    double theta = 0;
    double variance = 0;
    std::vector<double> per_k_rhs;  // sum_v Inf_v Rev_v(T_k)
    double summed_lhs = 0;          // n theta (1 - theta)
    double summed_rhs = 0;          // sum_v Inf_v sum_k Rev_v(T_k)
    std::uint64_t determination_failures = 0;
    std::vector<OsssSiteTerm> sites;

    bool single_tree_holds() const {
        for (double r : per_k_rhs)
            if (variance > r) return false;
        return true;
    }
    bool summed_holds() const { return summed_lhs <= summed_rhs; }
};

/// Exact OSSS report at p from a prebuilt instance (which must carry revealments).
inline OsssReport osss_from_instance(const ExactInstance& x, double p) {
    require(static_cast<std::int64_t>(x.revealment.size()) == x.n, "osss: instance lacks revealment tables");
    OsssReport r;
    r.p = p;
    r.n = x.n;
    r.eta = x.eta;
    r.window = x.window;
    r.d = x.d;
    r.exact = true;
    r.theta = x.theta.value(p);
    r.variance = r.theta * (1 - r.theta);
    r.per_k_rhs.assign(x.n, 0.0);
    for (int j = 0; j < x.sites; ++j) {
        OsssSiteTerm term{x.site(j), x.influence[j].value(p), {}};
        for (std::int64_t k = 0; k < x.n; ++k) {
            const double rev = x.revealment[k].per_site[j].value(p);
            term.revealment.push_back(rev);
            r.per_k_rhs[k] += term.influence * rev;
            r.summed_rhs += term.influence * rev;
        }
        r.sites.push_back(std::move(term));
    }
    for (const auto& t : x.revealment) r.determination_failures += t.determination_failures;
    r.summed_lhs = static_cast<double>(x.n) * r.variance;
    return r;
}

struct OsssOptions {
    bool exact = true;
    std::size_t cap = kDefaultEnumerationCap;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
};

inline OsssReport osss_check(double p, std::int64_t n, Rational eta, const Window& w, int d, const OsssOptions& opt) {
    if (opt.exact) {
        const auto x = ExactInstance::build(d, n, eta, w, true, opt.cap, opt.threads);
        return osss_from_instance(x, p);
    }
    OsssReport r;
    r.p = p;
    r.n = n;
    r.eta = eta;
    r.window = w;
    r.d = d;
    r.exact = false;
    std::vector<std::uint8_t> hits(opt.trials, 0);
    parallel_for(opt.trials, opt.threads, [&](std::size_t t) {
        hits[t] = escapes_cone(SiteField(derive_seed(opt.seed, stream::kTheta, t), d), p, n, eta, w, d);
    });
    std::uint64_t s = 0;
    for (auto h : hits) s += h;
    r.theta = static_cast<double>(s) / static_cast<double>(opt.trials);
    r.variance = r.theta * (1 - r.theta);
    const auto prof = revealment_profile(p, n, eta, w, d, opt.trials, opt.seed, opt.threads);
    r.per_k_rhs.assign(n, 0.0);
    for (std::size_t j = 0; j < prof.sites.size(); ++j) {
        const auto inf = influence(p, n, eta, prof.sites[j], w, opt.trials, derive_seed(opt.seed, stream::kInfluence, j), opt.threads);
        OsssSiteTerm term{prof.sites[j], inf.estimate, {}};
        for (std::int64_t k = 1; k <= n; ++k) {
            const double rev = prof.estimate(k, j);
            term.revealment.push_back(rev);
            r.per_k_rhs[k - 1] += term.influence * rev;
            r.summed_rhs += term.influence * rev;
        }
        r.sites.push_back(std::move(term));
    }
    r.summed_lhs = static_cast<double>(n) * r.variance;
    return r;
}

struct RussoRow {
    double p = 0;
    double minus_derivative = 0;
    double total_influence = 0;
    double discrepancy = 0;       // |-theta' - sum Inf| in floating point
    bool exact_equal = false;     // same comparison in exact rationals
};

struct RussoReport {
    std::int64_t n = 0;
    Rational eta;
    Window window;
    int d = 2;
    std::vector<RussoRow> rows;
    double max_discrepancy = 0;
};

inline RussoReport russo_from_instance(const ExactInstance& x, const std::vector<double>& p_grid) {
    RussoReport r;
    r.n = x.n;
    r.eta = x.eta;
    r.window = x.window;
    r.d = x.d;
    for (double p : p_grid) {
        RussoRow row;
        row.p = p;
        row.minus_derivative = -x.theta.derivative(p);
        row.total_influence = x.total_influence(p);
        row.discrepancy = std::fabs(row.minus_derivative - row.total_influence);
        const BigRational q = to_rational(p);
        row.exact_equal = (-x.theta.derivative(q)) == x.total_influence(q);
        r.max_discrepancy = std::max(r.max_discrepancy, row.discrepancy);
        r.rows.push_back(row);
    }
    return r;
}

inline RussoReport russo_check(std::int64_t n, Rational eta, const Window& w, int d, const std::vector<double>& p_grid,
                               std::size_t cap = kDefaultEnumerationCap, int threads = 1) {
    const auto x = ExactInstance::build(d, n, eta, w, false, cap, threads);
    return russo_from_instance(x, p_grid);
}

}  // namespace orthant
