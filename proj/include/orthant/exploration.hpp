#pragma once

// The exploration decision tree T_k for f_n = 1{0 -> (-n1 + K_eta)^c}, run on
// the windowed event (departures confined to Lambda_W).
//
// Phase A explores, inside the k-cone, the backward cluster of its boundary;
// phase B explores forward from the outer-boundary vertices that 0 reaches
// through the revealed set R. Sets kept incrementally:
//   Q      vertices x with x ->R dplus (dplus itself included)
//   F_any  vertices y with 0 ->R y
//   F_plus vertices y with 0 ->R x ->R y for some x in dplus
// A candidate for A is an unrevealed in-cone neighbour of a revealed Q vertex;
// B is every unrevealed window vertex in F_plus.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/error.hpp"
#include "orthant/grid.hpp"
#include "orthant/lattice.hpp"

namespace orthant {

enum class Phase : std::uint8_t { A, B };
enum class TreeOutcome { Escaped, ExhaustedWindow };

inline std::string to_string(Phase ph) { return ph == Phase::A ? "A" : "B"; }
inline std::string to_string(TreeOutcome o) { return o == TreeOutcome::Escaped ? "Escaped" : "ExhaustedWindow"; }

/// How A is seeded. Full: the k-cone boundary across the whole window.
/// WithinN: the boundary inside Lambda_n only, as the pseudocode's first lines read.
enum class SeedPolicy { FullWindow, WithinN };

struct TreeOptions {
    SeedPolicy seed = SeedPolicy::FullWindow;
    std::int64_t round_cap = 0;  ///< 0 selects max(n, W) + |Lambda_W|
};

/// Static per-instance data: grid, cone classifications, the seed set.
class TreeGeometry {
public:
    enum Flag : std::uint8_t {
        kWindow = 1,
        kInK = 2,        // inside -k1 + K_eta
        kBoundary = 4,   // boundary of the k-cone
        kOuter = 8,      // outer boundary (dplus) of the k-cone
        kTarget = 16,    // outside -n1 + K_eta
    };

    TreeGeometry(int d, Rational eta, std::int64_t n, std::int64_t k, const Window& w, TreeOptions opt = {})
        : d_(d), eta_(eta), n_(n), k_(k), window_(w), grid_(d, w.radius), options_(opt) {
        require(n >= 1, "run_tree: n must be at least 1");
        require(k >= 1 && k <= n, "run_tree: k must lie in 1..n");
        const Cone kc(eta, k), nc(eta, n);
        flags_.resize(grid_.size());
        norm_.resize(grid_.size());
        const auto dirs = all_directions(d);
        for (std::uint32_t c = 0; c < grid_.size(); ++c) {
            const Vertex v = grid_.vertex(c);
            std::uint8_t f = 0;
            const bool in = kc.contains(v);
            if (grid_.in_window(c)) f |= kWindow;
            if (in) f |= kInK;
            for (const auto& dir : dirs) {
                if (kc.contains(v + dir.step(d)) != in) {
                    f |= in ? kBoundary : kOuter;
                    break;
                }
            }
            if (!nc.contains(v)) f |= kTarget;
            flags_[c] = f;
            norm_[c] = static_cast<std::uint16_t>(v.sup_norm());
        }
        const int seed_radius = opt.seed == SeedPolicy::FullWindow ? w.radius : static_cast<int>(std::min<std::int64_t>(n, w.radius));
        for (std::uint32_t c = 0; c < grid_.size(); ++c)
            if ((flags_[c] & kWindow) && (flags_[c] & kBoundary) && norm_[c] <= seed_radius) seeds_.push_back(c);
        round_cap_ = opt.round_cap > 0 ? opt.round_cap
                                       : std::max<std::int64_t>(n, w.radius) + static_cast<std::int64_t>(w.site_count(d));
    }

    int dim() const { return d_; }
    Rational eta() const { return eta_; }
    std::int64_t n() const { return n_; }
    std::int64_t k() const { return k_; }
    const Window& window() const { return window_; }
    const WindowGrid& grid() const { return grid_; }
    const TreeOptions& options() const { return options_; }
    std::int64_t round_cap() const { return round_cap_; }
    const std::vector<std::uint32_t>& seeds() const { return seeds_; }

    bool has(std::uint32_t c, Flag f) const { return (flags_[c] & f) != 0; }
    int norm(std::uint32_t c) const { return norm_[c]; }

private:
    int d_;
    Rational eta_;
    std::int64_t n_, k_;
    Window window_;
    WindowGrid grid_;
    TreeOptions options_;
    std::int64_t round_cap_ = 0;
    std::vector<std::uint8_t> flags_;
    std::vector<std::uint16_t> norm_;
    std::vector<std::uint32_t> seeds_;
};

struct RevealEvent {
    std::uint32_t cell = 0;
    bool bit = false;
    Phase phase = Phase::A;
    std::int64_t round = 0;
};

namespace detail {

/// Active set with lexicographic-minimum extraction restricted to Lambda_i.
class ActiveQueue {
public:
    void reset(int max_norm) {
        heap_.clear();
        later_.resize(static_cast<std::size_t>(max_norm) + 2);
        for (auto& b : later_) b.clear();
        radius_ = -1;
        size_ = 0;
    }

    void insert(std::uint32_t c, int norm, StampSet& member) {
        if (!member.insert(c)) return;
        ++size_;
        if (norm <= radius_)
            push(c);
        else
            later_[norm].push_back(c);
    }
    void erase(std::uint32_t c, StampSet& member) {
        if (member.contains(c)) {
            member.erase(c);
            --size_;
        }
    }
    void grow_to(int radius, const StampSet& member) {
        while (radius_ < radius) {
            ++radius_;
            if (static_cast<std::size_t>(radius_) >= later_.size()) continue;
            for (auto c : later_[radius_])
                if (member.contains(c)) push(c);
            later_[radius_].clear();
        }
    }
    /// Smallest member inside the current radius; false when there is none.
    bool pop_min(std::uint32_t& out, StampSet& member) {
        while (!heap_.empty()) {
            std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
            const std::uint32_t c = heap_.back();
            heap_.pop_back();
            if (member.contains(c)) {
                member.erase(c);
                --size_;
                out = c;
                return true;
            }
        }
        return false;
    }
    std::size_t size() const { return size_; }

private:
    void push(std::uint32_t c) {
        heap_.push_back(c);
        std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
    }
    std::vector<std::uint32_t> heap_;
    std::vector<std::vector<std::uint32_t>> later_;
    int radius_ = -1;
    std::size_t size_ = 0;
};

}  // namespace detail

/// Mutable state of one run; reusable across runs on the same geometry size.
class TreeWorkspace {
public:
    void prepare(const TreeGeometry& g) {
        const std::size_t n = g.grid().size();
        for (StampSet* s : {&revealed_, &q_, &fany_, &fplus_, &cand_, &in_a_, &in_b_}) {
            s->resize(n);
            s->clear();
        }
        if (bit_.size() != n) bit_.assign(n, 0);
        a_.reset(g.window().radius);
        b_.reset(g.window().radius);
        pending_.clear();
        stack_.clear();
        log_.clear();
        escaped_ = false;
    }

    bool revealed(std::uint32_t c) const { return revealed_.contains(c); }
    bool bit(std::uint32_t c) const { return bit_[c] != 0; }
    bool in_a(std::uint32_t c) const { return in_a_.contains(c); }
    bool in_b(std::uint32_t c) const { return in_b_.contains(c); }
    bool reaches_outer(std::uint32_t c, const TreeGeometry& g) const { return g.has(c, TreeGeometry::kOuter) || q_.contains(c); }
    bool from_origin(std::uint32_t c) const { return fany_.contains(c); }
    bool from_outer(std::uint32_t c) const { return fplus_.contains(c); }
    const std::vector<RevealEvent>& log() const { return log_; }
    bool escaped() const { return escaped_; }

private:
    template <SiteOracle F, class Observer>
    friend class TreeRunner;

    StampSet revealed_, q_, fany_, fplus_, cand_, in_a_, in_b_;
    std::vector<std::uint8_t> bit_;
    detail::ActiveQueue a_, b_;
    std::vector<std::uint32_t> pending_, stack_;
    std::vector<RevealEvent> log_;
    bool escaped_ = false;
};

struct NoObserver {
    void operator()(const TreeGeometry&, const TreeWorkspace&, const RevealEvent&) const {}
};

template <SiteOracle F, class Observer = NoObserver>
class TreeRunner {
public:
    TreeRunner(const TreeGeometry& g, TreeWorkspace& ws, const F& field, double p, Observer obs = {})
        : g_(g), grid_(g.grid()), ws_(ws), field_(field), p_(p), obs_(std::move(obs)) {}

    TreeOutcome run() {
        ws_.prepare(g_);
        const std::uint32_t origin = grid_.index(Vertex::origin(g_.dim()));
        ws_.fany_.insert(origin);
        for (auto c : g_.seeds()) ws_.a_.insert(c, g_.norm(c), ws_.in_a_);

        const int W = g_.window().radius;
        for (std::int64_t i = g_.n();; ++i) {
            if (i > g_.round_cap())
                throw Error(ErrorKind::RoundCapExceeded, "run_tree: round cap " + std::to_string(g_.round_cap()) + " exceeded");
            round_ = i;
            const int radius = static_cast<int>(std::min<std::int64_t>(i, W));
            ws_.a_.grow_to(radius, ws_.in_a_);
            ws_.b_.grow_to(radius, ws_.in_b_);
            flush_candidates();
            std::uint32_t v = 0;
            while (ws_.a_.pop_min(v, ws_.in_a_)) {
                reveal(v, Phase::A);
                if (ws_.escaped_) return TreeOutcome::Escaped;
            }
            while (ws_.b_.pop_min(v, ws_.in_b_)) {
                reveal(v, Phase::B);
                if (ws_.escaped_) return TreeOutcome::Escaped;
            }
            if (radius == W && ws_.a_.size() == 0 && ws_.b_.size() == 0 && !has_live_pending()) return TreeOutcome::ExhaustedWindow;
        }
    }

private:
    void reveal(std::uint32_t v, Phase phase) {
        const bool bit = field_.is_one(grid_.vertex(v), p_);
        ws_.revealed_.insert(v);
        ws_.bit_[v] = bit;
        ws_.a_.erase(v, ws_.in_a_);
        ws_.b_.erase(v, ws_.in_b_);

        update_q(v);
        if (ws_.fany_.contains(v)) propagate_forward(v);
        if (phase == Phase::A) flush_candidates();

        const RevealEvent ev{v, bit, phase, round_};
        ws_.log_.push_back(ev);
        obs_(g_, ws_, ev);
    }

    template <class Fn>
    void for_out(std::uint32_t c, Fn&& fn) const {
        const int d = g_.dim();
        for (int i = 0; i < d; ++i) fn(static_cast<std::uint32_t>(c + grid_.stride(i)));
        if (ws_.bit_[c] == 0)
            for (int i = 0; i < d; ++i) fn(static_cast<std::uint32_t>(c - grid_.stride(i)));
    }

    void update_q(std::uint32_t v) {
        auto in_q = [&](std::uint32_t c) { return g_.has(c, TreeGeometry::kOuter) || ws_.q_.contains(c); };
        if (in_q(v)) {
            emit_candidates(v);
            return;
        }
        bool hits = false;
        for_out(v, [&](std::uint32_t z) { hits = hits || in_q(z); });
        if (!hits) return;
        const int d = g_.dim();
        ws_.q_.insert(v);
        ws_.stack_.assign(1, v);
        while (!ws_.stack_.empty()) {
            const std::uint32_t y = ws_.stack_.back();
            ws_.stack_.pop_back();
            emit_candidates(y);
            for (int i = 0; i < d; ++i) {
                const auto lower = static_cast<std::uint32_t>(y - grid_.stride(i));  // lower -> y along +e_i
                if (ws_.revealed_.contains(lower) && !in_q(lower)) {
                    ws_.q_.insert(lower);
                    ws_.stack_.push_back(lower);
                }
                const auto upper = static_cast<std::uint32_t>(y + grid_.stride(i));  // upper -> y along -e_i
                if (ws_.revealed_.contains(upper) && ws_.bit_[upper] == 0 && !in_q(upper)) {
                    ws_.q_.insert(upper);
                    ws_.stack_.push_back(upper);
                }
            }
        }
    }

    void emit_candidates(std::uint32_t x) {
        const int d = g_.dim();
        for (int i = 0; i < d; ++i) {
            for (int s : {+1, -1}) {
                const auto w = static_cast<std::uint32_t>(x + s * grid_.stride(i));
                if (!g_.has(w, TreeGeometry::kWindow) || !g_.has(w, TreeGeometry::kInK)) continue;
                if (ws_.revealed_.contains(w)) continue;
                if (ws_.cand_.insert(w)) ws_.pending_.push_back(w);
            }
        }
    }

    void flush_candidates() {
        for (auto w : ws_.pending_)
            if (!ws_.revealed_.contains(w) && !ws_.in_b_.contains(w) && !ws_.fplus_.contains(w))
                ws_.a_.insert(w, g_.norm(w), ws_.in_a_);
        ws_.pending_.clear();
    }

    bool has_live_pending() const {
        for (auto w : ws_.pending_)
            if (!ws_.revealed_.contains(w) && !ws_.in_b_.contains(w) && !ws_.fplus_.contains(w)) return true;
        return false;
    }

    // Pushes F_any / F_plus forward from a revealed vertex through revealed vertices.
    void propagate_forward(std::uint32_t v) {
        ws_.stack_.assign(1, v);
        while (!ws_.stack_.empty() && !ws_.escaped_) {
            const std::uint32_t y = ws_.stack_.back();
            ws_.stack_.pop_back();
            const bool plus = ws_.fplus_.contains(y);
            for_out(y, [&](std::uint32_t z) {
                if (ws_.escaped_) return;
                bool changed = ws_.fany_.insert(z);
                if (changed && g_.has(z, TreeGeometry::kTarget)) {
                    ws_.escaped_ = true;
                    return;
                }
                if ((plus || g_.has(z, TreeGeometry::kOuter)) && ws_.fplus_.insert(z)) {
                    changed = true;
                    if (!ws_.revealed_.contains(z) && g_.has(z, TreeGeometry::kWindow)) {
                        ws_.a_.erase(z, ws_.in_a_);
                        ws_.b_.insert(z, g_.norm(z), ws_.in_b_);
                    }
                }
                if (changed && ws_.revealed_.contains(z)) ws_.stack_.push_back(z);
            });
        }
    }

    const TreeGeometry& g_;
    const WindowGrid& grid_;
    TreeWorkspace& ws_;
    const F& field_;
    double p_;
    Observer obs_;
    std::int64_t round_ = 0;
};

/// Full record of one run.
struct ExplorationTrace {
    struct Reveal {
        Vertex v;
        bool bit = false;
        Phase phase = Phase::A;
        std::int64_t round = 0;
    };
    std::int64_t k = 0;
    std::vector<Reveal> revealed;
    TreeOutcome outcome = TreeOutcome::ExhaustedWindow;
    std::vector<Vertex> active_A;
    std::vector<Vertex> active_B;
};

template <SiteOracle F, class Observer = NoObserver>
TreeOutcome run_tree(const TreeGeometry& g, TreeWorkspace& ws, const F& field, double p, Observer obs = {}) {
    return TreeRunner<F, Observer>(g, ws, field, p, std::move(obs)).run();
}

template <SiteOracle F>
ExplorationTrace run_tree(const F& field, double p, std::int64_t n, Rational eta, std::int64_t k, const Window& w, int d,
                          TreeOptions opt = {}) {
    const TreeGeometry g(d, eta, n, k, w, opt);
    TreeWorkspace ws;
    ExplorationTrace tr;
    tr.k = k;
    tr.outcome = run_tree(g, ws, field, p);
    for (const auto& ev : ws.log()) tr.revealed.push_back({g.grid().vertex(ev.cell), ev.bit, ev.phase, ev.round});
    for (std::uint32_t c = 0; c < g.grid().size(); ++c) {
        if (ws.in_a(c)) tr.active_A.push_back(g.grid().vertex(c));
        if (ws.in_b(c)) tr.active_B.push_back(g.grid().vertex(c));
    }
    return tr;
}

}  // namespace orthant
