#pragma once

// Brute force over all 2^N configurations of a small window.

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "orthant/cone.hpp"
#include "orthant/error.hpp"
#include "orthant/exploration.hpp"
#include "orthant/grid.hpp"
#include "orthant/lattice.hpp"
#include "orthant/parallel.hpp"

namespace orthant {

using BigRational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr std::size_t kDefaultEnumerationCap = 26;

/// c_j = number of configurations with j one-sites in the counted set;
/// value(p) = sum_j c_j p^j (1-p)^{N-j}.
struct CountPolynomial {
    std::vector<std::uint64_t> counts;
    int site_count = 0;

    CountPolynomial() = default;
    explicit CountPolynomial(int n) : counts(static_cast<std::size_t>(n) + 1, 0), site_count(n) {}

    bool is_zero() const {
        for (auto c : counts)
            if (c) return false;
        return true;
    }

    double value(double p) const {
        long double s = 0;
        for (int j = 0; j <= site_count; ++j)
            if (counts[j]) s += counts[j] * std::pow((long double)p, j) * std::pow(1.0L - p, site_count - j);
        return static_cast<double>(s);
    }

    double derivative(double p) const {
        long double s = 0;
        const int N = site_count;
        for (int j = 0; j <= N; ++j) {
            if (!counts[j]) continue;
            if (j > 0) s += counts[j] * (long double)j * std::pow((long double)p, j - 1) * std::pow(1.0L - p, N - j);
            if (j < N) s -= counts[j] * (long double)(N - j) * std::pow((long double)p, j) * std::pow(1.0L - p, N - j - 1);
        }
        return static_cast<double>(s);
    }

    BigRational value(const BigRational& p) const {
        BigRational s = 0;
        const BigRational q = 1 - p;
        for (int j = 0; j <= site_count; ++j)
            if (counts[j]) s += BigRational(counts[j]) * pow_int(p, j) * pow_int(q, site_count - j);
        return s;
    }

    BigRational derivative(const BigRational& p) const {
        BigRational s = 0;
        const BigRational q = 1 - p;
        const int N = site_count;
        for (int j = 0; j <= N; ++j) {
            if (!counts[j]) continue;
            if (j > 0) s += BigRational(counts[j]) * j * pow_int(p, j - 1) * pow_int(q, N - j);
            if (j < N) s -= BigRational(counts[j]) * (N - j) * pow_int(p, j) * pow_int(q, N - j - 1);
        }
        return s;
    }

    CountPolynomial& operator+=(const CountPolynomial& o) {
        for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += o.counts[j];
        return *this;
    }

    static BigRational pow_int(const BigRational& x, int e) {
        BigRational r = 1;
        for (int i = 0; i < e; ++i) r *= x;
        return r;
    }
};

/// Index of each window site in lexicographic order.
class SiteIndex {
public:
    SiteIndex(int d, const Window& w) : d_(d), r_(w.radius), side_(2 * w.radius + 1), count_(static_cast<int>(w.site_count(d))) {}

    int count() const { return count_; }
    int dim() const { return d_; }
    int radius() const { return r_; }
    bool contains(const Vertex& v) const { return v.sup_norm() <= r_; }
    int index(const Vertex& v) const {
        int idx = 0;
        for (int i = 0; i < d_; ++i) idx = idx * side_ + v.coords[i] + r_;
        return idx;
    }
    Vertex vertex(int idx) const {
        Vertex v(d_);
        for (int i = d_ - 1; i >= 0; --i) {
            v.coords[i] = idx % side_ - r_;
            idx /= side_;
        }
        return v;
    }

private:
    int d_, r_, side_, count_;
};

/// A fixed configuration: bit j of the mask is omega at window site j; sites
/// outside the window read as 1 (they are never departures).
class ConfigField {
public:
    ConfigField(const SiteIndex& sites, std::uint64_t mask) : sites_(&sites), mask_(mask) {}

    bool is_one(const Vertex& v, double) const {
        if (!sites_->contains(v)) return true;
        return (mask_ >> sites_->index(v)) & 1U;
    }
    void set_mask(std::uint64_t m) { mask_ = m; }
    std::uint64_t mask() const { return mask_; }

private:
    const SiteIndex* sites_;
    std::uint64_t mask_;
};

inline void check_enumeration_size(int sites, std::size_t cap) {
    if (static_cast<std::size_t>(sites) > cap || sites > 40)
        throw Error(ErrorKind::EnumerationTooLarge,
                    "window has " + std::to_string(sites) + " sites; enumeration cap is " + std::to_string(cap));
}

/// Windowed f_n evaluated straight from a configuration mask.
class MaskEscape {
public:
    MaskEscape(int d, std::int64_t n, Rational eta, const Window& w) : grid_(d, w.radius) {
        const Cone cone(eta, n);
        const SiteIndex sites(d, w);
        site_.assign(grid_.size(), -1);
        target_.assign(grid_.size(), 0);
        for (std::uint32_t c = 0; c < grid_.size(); ++c) {
            const Vertex v = grid_.vertex(c);
            target_[c] = !cone.contains(v);
            if (grid_.in_window(c)) site_[c] = sites.index(v);
        }
        origin_ = grid_.index(Vertex::origin(d));
    }

    bool operator()(std::uint64_t mask, StampSet& seen, std::vector<std::uint32_t>& queue) const {
        seen.resize(grid_.size());
        seen.clear();
        queue.assign(1, origin_);
        seen.insert(origin_);
        const int d = grid_.dim();
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::uint32_t c = queue[head];
            const bool one = (mask >> site_[c]) & 1U;
            for (int s = 0; s < (one ? 1 : 2); ++s) {
                for (int i = 0; i < d; ++i) {
                    const auto nb = static_cast<std::uint32_t>(s == 0 ? c + grid_.stride(i) : c - grid_.stride(i));
                    if (!seen.insert(nb)) continue;
                    if (target_[nb]) return true;
                    if (site_[nb] >= 0) queue.push_back(nb);
                }
            }
        }
        return false;
    }

private:
    WindowGrid grid_;
    std::vector<int> site_;
    std::vector<std::uint8_t> target_;
    std::uint32_t origin_ = 0;
};

/// The table of windowed f_n over all configurations, one bit per mask.
struct EventTable {
    int sites = 0;
    std::vector<std::uint64_t> words;

    bool at(std::uint64_t mask) const { return (words[mask >> 6] >> (mask & 63)) & 1U; }
};

inline EventTable tabulate_event(int d, std::int64_t n, Rational eta, const Window& w, std::size_t cap = kDefaultEnumerationCap,
                                 int threads = 1) {
    const SiteIndex sites(d, w);
    check_enumeration_size(sites.count(), cap);
    const MaskEscape f(d, n, eta, w);
    const std::uint64_t total = std::uint64_t{1} << sites.count();
    EventTable t;
    t.sites = sites.count();
    t.words.assign(std::max<std::uint64_t>(1, total / 64), 0);
    const std::size_t nwords = t.words.size();
    parallel_chunks(nwords, 64, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        StampSet seen;
        std::vector<std::uint32_t> queue;
        for (std::size_t word = b; word < e; ++word) {
            std::uint64_t bits = 0;
            for (std::uint64_t j = 0; j < 64; ++j) {
                const std::uint64_t mask = word * 64 + j;
                if (mask >= total) break;
                if (f(mask, seen, queue)) bits |= std::uint64_t{1} << j;
            }
            t.words[word] = bits;
        }
    });
    return t;
}

inline CountPolynomial theta_polynomial(const EventTable& t) {
    CountPolynomial poly(t.sites);
    const std::uint64_t total = std::uint64_t{1} << t.sites;
    for (std::uint64_t m = 0; m < total; ++m)
        if (t.at(m)) ++poly.counts[std::popcount(m)];
    return poly;
}

inline CountPolynomial enumerate_theta(int d, std::int64_t n, Rational eta, const Window& w, std::size_t cap = kDefaultEnumerationCap,
                                       int threads = 1) {
    return theta_polynomial(tabulate_event(d, n, eta, w, cap, threads));
}

/// Count polynomials of the pivotal configurations of each site, in site order.
inline std::vector<CountPolynomial> influences_from_table(const EventTable& t, int threads = 1) {
    const int N = t.sites;
    std::vector<CountPolynomial> out(N, CountPolynomial(N));
    const std::uint64_t total = std::uint64_t{1} << N;
    parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t j) {
        const std::uint64_t bit = std::uint64_t{1} << j;
        auto& counts = out[j].counts;
        for (std::uint64_t m = 0; m < total; ++m) {
            if (m & bit) continue;
            if (t.at(m) != t.at(m | bit)) {
                const int pc = std::popcount(m);
                ++counts[pc];
                ++counts[pc + 1];
            }
        }
    });
    return out;
}

struct InfluencePolynomial {
    Vertex v;
    CountPolynomial poly;
};

inline std::vector<InfluencePolynomial> exact_influences(int d, std::int64_t n, Rational eta, const Window& w,
                                                         std::size_t cap = kDefaultEnumerationCap, int threads = 1) {
    const auto table = tabulate_event(d, n, eta, w, cap, threads);
    const auto polys = influences_from_table(table, threads);
    const SiteIndex sites(d, w);
    std::vector<InfluencePolynomial> out;
    for (int j = 0; j < sites.count(); ++j) out.push_back({sites.vertex(j), polys[j]});
    return out;
}

/// For tree T_k: per site, the count polynomial of configurations on which
/// the tree reveals that site. Also checks determination on every configuration.
struct RevealmentTable {
    std::int64_t k = 0;
    std::vector<CountPolynomial> per_site;
    std::uint64_t determination_failures = 0;
};

inline RevealmentTable exact_revealments(int d, std::int64_t n, Rational eta, std::int64_t k, const Window& w, const EventTable& t,
                                         int threads = 1, TreeOptions opt = {}) {
    const SiteIndex sites(d, w);
    const int N = sites.count();
    const TreeGeometry geom(d, eta, n, k, w, opt);
    std::vector<int> site_of(geom.grid().size(), -1);
    for (std::uint32_t c = 0; c < geom.grid().size(); ++c)
        if (geom.grid().in_window(c)) site_of[c] = sites.index(geom.grid().vertex(c));
    const std::uint64_t total = std::uint64_t{1} << N;
    const std::size_t chunks = 64;
    std::vector<std::vector<CountPolynomial>> partial(chunks, std::vector<CountPolynomial>(N, CountPolynomial(N)));
    std::vector<std::uint64_t> failures(chunks, 0);
    parallel_chunks(total, chunks, threads, [&](std::size_t chunk, std::size_t b, std::size_t e) {
        TreeWorkspace ws;
        ConfigField field(sites, 0);
        auto& acc = partial[chunk];
        for (std::uint64_t m = b; m < e; ++m) {
            field.set_mask(m);
            const auto outcome = run_tree(geom, ws, field, 0.5);
            if ((outcome == TreeOutcome::Escaped) != t.at(m)) ++failures[chunk];
            const int pc = std::popcount(m);
            for (const auto& ev : ws.log()) ++acc[site_of[ev.cell]].counts[pc];
        }
    });
    RevealmentTable out;
    out.k = k;
    out.per_site.assign(N, CountPolynomial(N));
    for (std::size_t c = 0; c < chunks; ++c) {
        for (int j = 0; j < N; ++j) out.per_site[j] += partial[c][j];
        out.determination_failures += failures[c];
    }
    return out;
}

/// Everything the exact checks need for one (d, n, eta, window).
struct ExactInstance {
    int d = 2;
    std::int64_t n = 1;
    Rational eta{0};
    Window window;
    int sites = 0;
    EventTable table;
    CountPolynomial theta;
    std::vector<CountPolynomial> influence;         // per site
    std::vector<RevealmentTable> revealment;        // k = 1..n
    std::vector<CountPolynomial> lower_theta;       // theta_0 .. theta_{n-1} on the same window

    static ExactInstance build(int d, std::int64_t n, Rational eta, const Window& w, bool with_revealment,
                               std::size_t cap = kDefaultEnumerationCap, int threads = 1) {
        ExactInstance x;
        x.d = d;
        x.n = n;
        x.eta = eta;
        x.window = w;
        x.table = tabulate_event(d, n, eta, w, cap, threads);
        x.sites = x.table.sites;
        x.theta = theta_polynomial(x.table);
        x.influence = influences_from_table(x.table, threads);
        for (std::int64_t j = 0; j < n; ++j) x.lower_theta.push_back(enumerate_theta(d, j, eta, w, cap, threads));
        if (with_revealment)
            for (std::int64_t k = 1; k <= n; ++k) x.revealment.push_back(exact_revealments(d, n, eta, k, w, x.table, threads));
        return x;
    }

    Vertex site(int j) const { return SiteIndex(d, window).vertex(j); }

    double total_influence(double p) const {
        double s = 0;
        for (const auto& q : influence) s += q.value(p);
        return s;
    }
    BigRational total_influence(const BigRational& p) const {
        BigRational s = 0;
        for (const auto& q : influence) s += q.value(p);
        return s;
    }
    /// S_n = sum_{j<=n} theta_j.
    BigRational partial_sum(const BigRational& p) const {
        BigRational s = theta.value(p);
        for (const auto& q : lower_theta) s += q.value(p);
        return s;
    }
    double partial_sum(double p) const {
        double s = theta.value(p);
        for (const auto& q : lower_theta) s += q.value(p);
        return s;
    }
};

}  // namespace orthant
