#pragma once

// Window-truncated directed searches. A path counts when every departure
// vertex lies in Lambda_w; its final vertex may sit one step outside.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/grid.hpp"
#include "orthant/lattice.hpp"

namespace orthant {

struct ReachResult {
    std::vector<Vertex> reached;  ///< reached vertices of Lambda_w, lexicographic
    bool hit_target = false;
    bool frontier_hit_window = false;
};

/// Integer-or-None answer of a windowed profile query.
struct ProfileValue {
    std::optional<std::int64_t> value;
    Window window;

    bool is_none() const { return !value.has_value(); }
};

struct KRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

namespace detail {

template <SiteOracle F, class Visit>
void for_each_out_edge(ModelKind model, const F& field, const WindowGrid& grid, std::uint32_t cell, double p, Visit&& visit) {
    const Vertex v = grid.vertex(cell);
    const bool one = field.is_one(v, p);
    const int d = grid.dim();
    if (one || model == ModelKind::HalfOrthant)
        for (int i = 0; i < d; ++i) visit(static_cast<std::uint32_t>(cell + grid.stride(i)), false);
    if (!one)
        for (int i = 0; i < d; ++i) visit(static_cast<std::uint32_t>(cell - grid.stride(i)), true);
}

}  // namespace detail

/// Forward cluster of a source under the chosen model, with departures
/// confined to Lambda_w. Keeps the one-step-outside endpoints as well.
class Cluster {
public:
    template <SiteOracle F>
    Cluster(ModelKind model, const F& field, double p, const Vertex& source, const Window& w)
        : grid_(source.dim, w.radius), window_(w), seen_(grid_.size()) {
        require(w.contains(source), "Cluster: source outside window");
        std::vector<std::uint32_t> queue{grid_.index(source)};
        seen_.insert(queue[0]);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::uint32_t c = queue[head];
            if (!grid_.in_window(c)) continue;
            detail::for_each_out_edge(model, field, grid_, c, p, [&](std::uint32_t nb, bool) {
                if (!grid_.in_window(nb)) frontier_ = true;
                if (seen_.insert(nb)) queue.push_back(nb);
            });
        }
    }

    const WindowGrid& grid() const { return grid_; }
    const Window& window() const { return window_; }
    bool frontier_hit_window() const { return frontier_; }

    bool contains(const Vertex& v) const { return grid_.addressable(v) && seen_.contains(grid_.index(v)); }

    std::vector<Vertex> window_points() const {
        std::vector<Vertex> out;
        for (std::uint32_t c = 0; c < grid_.size(); ++c)
            if (seen_.contains(c) && grid_.in_window(c)) out.push_back(grid_.vertex(c));
        return out;
    }

    /// Smallest k in the range with v + k e1 in the cluster.
    ProfileValue leftmost(const Vertex& v, std::optional<KRange> range = std::nullopt) const {
        const std::int64_t reach = grid_.radius() + grid_.pad();
        const KRange r = range.value_or(KRange{-reach - v[0], reach - v[0]});
        for (std::int64_t k = r.lo; k <= r.hi; ++k) {
            Vertex x = v;
            x.coords[0] = static_cast<std::int32_t>(v[0] + k);
            if (contains(x)) return {k, window_};
        }
        return {std::nullopt, window_};
    }

    /// Smallest k in the range with k*1 + n*u in the cluster.
    ProfileValue first_shift(const Vertex& u, std::int64_t n, std::optional<KRange> range = std::nullopt) const {
        const std::int64_t reach = grid_.radius() + grid_.pad();
        KRange r{-reach - n * u[0], reach - n * u[0]};
        for (int i = 1; i < u.dim; ++i) {
            r.lo = std::max(r.lo, -reach - n * u[i]);
            r.hi = std::min(r.hi, reach - n * u[i]);
        }
        if (range) r = *range;
        for (std::int64_t k = r.lo; k <= r.hi; ++k) {
            Vertex x(u.dim);
            for (int i = 0; i < u.dim; ++i) x.coords[i] = static_cast<std::int32_t>(k + n * u[i]);
            if (contains(x)) return {k, window_};
        }
        return {std::nullopt, window_};
    }

    /// Cluster points of Lambda_w together with their +e1 rays, cut at the window.
    std::vector<Vertex> filled() const {
        StampSet mark(grid_.size());
        const std::uint32_t step = static_cast<std::uint32_t>(grid_.stride(0));
        for (std::uint32_t c = 0; c < grid_.size(); ++c) {
            if (!seen_.contains(c) || !grid_.in_window(c)) continue;
            for (std::uint32_t x = c; grid_.in_window(x) && mark.insert(x); x += step) {
            }
        }
        std::vector<Vertex> out;
        for (std::uint32_t c = 0; c < grid_.size(); ++c)
            if (mark.contains(c)) out.push_back(grid_.vertex(c));
        return out;
    }

private:
    WindowGrid grid_;
    Window window_;
    StampSet seen_;
    bool frontier_ = false;
};

template <SiteOracle F>
ReachResult forward_cluster(ModelKind model, const F& field, double p, const Vertex& v, const Window& w) {
    Cluster c(model, field, p, v, w);
    return {c.window_points(), false, c.frontier_hit_window()};
}

/// Half-orthant search from 0 for a vertex outside -n1 + K_eta.
template <SiteOracle F>
ReachResult escape_search(const F& field, double p, std::int64_t n, Rational eta, const Window& w, int d) {
    const Cone cone(eta, n);
    const WindowGrid grid(d, w.radius);
    StampSet seen(grid.size());
    ReachResult res;
    std::vector<std::uint32_t> queue{grid.index(Vertex::origin(d))};
    seen.insert(queue[0]);
    for (std::size_t head = 0; head < queue.size() && !res.hit_target; ++head) {
        const std::uint32_t c = queue[head];
        detail::for_each_out_edge(ModelKind::HalfOrthant, field, grid, c, p, [&](std::uint32_t nb, bool) {
            if (res.hit_target || !seen.insert(nb)) return;
            if (!cone.contains(grid.vertex(nb))) {
                res.hit_target = true;
                return;
            }
            if (grid.in_window(nb))
                queue.push_back(nb);
            else
                res.frontier_hit_window = true;
        });
    }
    return res;
}

template <SiteOracle F>
bool escapes_cone(const F& field, double p, std::int64_t n, Rational eta, const Window& w, int d) {
    require(n >= 0, "escapes_cone: n must be nonnegative");
    return escape_search(field, p, n, eta, w, d).hit_target;
}

template <class F>
    requires requires(const F& f) { f.dim(); }
bool escapes_cone(const F& field, double p, std::int64_t n, Rational eta, const Window& w) {
    return escapes_cone(field, p, n, eta, w, field.dim());
}

/// Largest p at which a target is reached, over all p at once.
///
/// Half-orthant paths only lose negative edges as p grows: a path survives at
/// p iff U >= p at each of its negative departures. The escape level is the
/// widest-path value max_path min_{negative departures} U (2.0 for a path
/// with no negative step). `cut_level` is the same quantity for edges that
/// leave the window toward a non-target vertex.
struct EscapeLevel {
    static constexpr double kNever = -1.0;
    double level = kNever;
    double cut_level = kNever;

    bool escaped_at(double p) const { return level >= p; }
    bool truncated_at(double p) const { return !escaped_at(p) && p <= cut_level; }
};

class LevelWorkspace {
public:
    void prepare(std::size_t n) {
        seen.resize(n);
        seen.clear();
        if (best.size() != n) best.assign(n, 0.0);
        heap.clear();
    }
    StampSet seen;
    std::vector<double> best;
    std::vector<std::pair<double, std::uint32_t>> heap;
};

/// Widest-path search from 0. `is_target(cell)` marks the goal cells; labels
/// below `floor` are pruned, so the result is exact only for queries p >= floor.
template <UniformSiteField F, class Target>
EscapeLevel escape_level(const F& field, const WindowGrid& grid, Target&& is_target, double floor, LevelWorkspace& ws) {
    ws.prepare(grid.size());
    EscapeLevel out;
    const int d = grid.dim();
    auto push = [&](std::uint32_t c, double label) {
        if (label < floor) return;
        if (ws.seen.contains(c) && ws.best[c] >= label) return;
        ws.seen.insert(c);
        ws.best[c] = label;
        ws.heap.emplace_back(label, c);
        std::push_heap(ws.heap.begin(), ws.heap.end());
    };
    push(grid.index(Vertex::origin(d)), 2.0);
    while (!ws.heap.empty()) {
        std::pop_heap(ws.heap.begin(), ws.heap.end());
        const auto [label, c] = ws.heap.back();
        ws.heap.pop_back();
        if (label < ws.best[c]) continue;
        if (is_target(c)) {
            out.level = label;
            break;
        }
        if (!grid.in_window(c)) {
            out.cut_level = std::max(out.cut_level, label);
            continue;
        }
        const double u = field.uniform(grid.vertex(c));
        for (int i = 0; i < d; ++i) push(static_cast<std::uint32_t>(c + grid.stride(i)), label);
        const double neg = std::min(label, u);
        for (int i = 0; i < d; ++i) push(static_cast<std::uint32_t>(c - grid.stride(i)), neg);
    }
    return out;
}

/// Marks the cells of a grid lying outside -n1 + K_eta.
inline std::vector<std::uint8_t> outside_cone_mask(const WindowGrid& grid, std::int64_t n, Rational eta) {
    const Cone cone(eta, n);
    std::vector<std::uint8_t> mask(grid.size());
    for (std::uint32_t c = 0; c < grid.size(); ++c) mask[c] = !cone.contains(grid.vertex(c));
    return mask;
}

struct EscapeHit {
    bool escaped = false;
    bool truncated = false;
};

/// Plain BFS at a single p against a precomputed target mask.
template <SiteOracle F>
EscapeHit escape_at(const F& field, double p, const WindowGrid& grid, const std::vector<std::uint8_t>& mask, StampSet& seen,
                    std::vector<std::uint32_t>& queue) {
    seen.resize(grid.size());
    seen.clear();
    queue.assign(1, grid.index(Vertex::origin(grid.dim())));
    seen.insert(queue[0]);
    if (mask[queue[0]]) return {true, false};
    EscapeHit out;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::uint32_t c = queue[head];
        bool hit = false;
        detail::for_each_out_edge(ModelKind::HalfOrthant, field, grid, c, p, [&](std::uint32_t nb, bool) {
            if (hit || !seen.insert(nb)) return;
            if (mask[nb]) {
                hit = true;
            } else if (grid.in_window(nb)) {
                queue.push_back(nb);
            } else {
                out.truncated = true;
            }
        });
        if (hit) return {true, false};
    }
    return out;
}

template <UniformSiteField F>
EscapeLevel escape_level(const F& field, std::int64_t n, Rational eta, const Window& w, int d, double floor = 0.0) {
    const WindowGrid grid(d, w.radius);
    const auto mask = outside_cone_mask(grid, n, eta);
    LevelWorkspace ws;
    return escape_level(field, grid, [&](std::uint32_t c) { return mask[c] != 0; }, floor, ws);
}

template <SiteOracle F>
ProfileValue l_profile(ModelKind model, const F& field, double p, const Vertex& v, const Window& w,
                       std::optional<KRange> k_range = std::nullopt) {
    return Cluster(model, field, p, Vertex::origin(v.dim), w).leftmost(v, k_range);
}

template <SiteOracle F>
ProfileValue beta(ModelKind model, const F& field, double p, const Vertex& u, std::int64_t n, const Window& w,
                  std::optional<KRange> k_range = std::nullopt) {
    return Cluster(model, field, p, Vertex::origin(u.dim), w).first_shift(u, n, k_range);
}

template <SiteOracle F>
std::vector<Vertex> filled_cluster(ModelKind model, const F& field, double p, const Window& w, int d) {
    return Cluster(model, field, p, Vertex::origin(d), w).filled();
}

}  // namespace orthant
