#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/error.hpp"
#include "orthant/grid.hpp"
#include "orthant/lattice.hpp"
#include "orthant/osss.hpp"
#include "orthant/parallel.hpp"
#include "orthant/reach.hpp"

namespace orthant {

/// Window radius per level: fixed, or scale * n * d.
struct WindowPolicy {
    int fixed = 0;
    int scale = 4;

    int radius(std::int64_t n, int d) const {
        return fixed > 0 ? fixed : static_cast<int>(std::max<std::int64_t>(1, scale * n * d));
    }
};

struct ThetaCell {
    double p = 0;
    std::int64_t n = 0;
    Rational eta;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    int window = 0;
    std::uint64_t truncated = 0;

    double estimate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
    double stderr_() const {
        const double q = estimate();
        return trials ? std::sqrt(q * (1 - q) / static_cast<double>(trials)) : 0.0;
    }
    double truncation_rate() const { return trials ? static_cast<double>(truncated) / static_cast<double>(trials) : 0.0; }
};

/// Cells are stored n-major, p-minor.
struct ThetaCurve {
    std::vector<double> p_grid;
    std::vector<std::int64_t> n_list;
    Rational eta;
    std::vector<ThetaCell> cells;

    const ThetaCell& at(std::size_t pi, std::size_t ni) const { return cells[ni * p_grid.size() + pi]; }
    std::optional<std::size_t> p_index(double p) const {
        for (std::size_t i = 0; i < p_grid.size(); ++i)
            if (p_grid[i] == p) return i;
        return std::nullopt;
    }
};

/// Levels: one widest-path search per (seed, n) answers every p at once.
/// PerP: one BFS per (seed, n, p); cheaper for a couple of grid points,
/// where the level search with a low floor floods the window.
enum class ThetaMethod { Auto, Levels, PerP };

struct ThetaOptions {
    std::vector<double> p_grid;
    std::vector<std::int64_t> n_list;
    Rational eta;
    int d = 2;
    WindowPolicy window;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    ThetaMethod method = ThetaMethod::Auto;
};

namespace detail {

struct LevelTarget {
    WindowGrid grid;
    std::vector<std::uint8_t> mask;
};

inline LevelWorkspace& thread_level_workspace() {
    thread_local LevelWorkspace ws;
    return ws;
}

}  // namespace detail

/// Per-seed escape levels, [trial][n index]; one shared U-field per trial.
inline std::vector<std::vector<EscapeLevel>> theta_levels(const ThetaOptions& opt) {
    require(opt.trials >= 1, "estimate_theta: trials must be positive");
    require(!opt.p_grid.empty() && !opt.n_list.empty(), "estimate_theta: empty grid");
    double floor = 1.0;
    for (double p : opt.p_grid) {
        require(p >= 0 && p <= 1, "estimate_theta: p outside [0,1]");
        floor = std::min(floor, p);
    }
    std::vector<detail::LevelTarget> targets;
    for (auto n : opt.n_list) {
        require(n >= 0, "estimate_theta: n must be nonnegative");
        WindowGrid g(opt.d, opt.window.radius(n, opt.d));
        auto mask = outside_cone_mask(g, n, opt.eta);
        targets.push_back({std::move(g), std::move(mask)});
    }
    std::vector<std::vector<EscapeLevel>> levels(opt.trials, std::vector<EscapeLevel>(opt.n_list.size()));
    parallel_for(opt.trials, opt.threads, [&](std::size_t t) {
        const SiteField f(derive_seed(opt.seed, stream::kTheta, t), opt.d);
        auto& ws = detail::thread_level_workspace();
        for (std::size_t ni = 0; ni < targets.size(); ++ni) {
            const auto& tg = targets[ni];
            levels[t][ni] = escape_level(f, tg.grid, [&](std::uint32_t c) { return tg.mask[c] != 0; }, floor, ws);
        }
    });
    return levels;
}

namespace detail {

inline ThetaCurve empty_curve(const ThetaOptions& opt) {
    ThetaCurve curve;
    curve.p_grid = opt.p_grid;
    curve.n_list = opt.n_list;
    curve.eta = opt.eta;
    for (auto n : opt.n_list)
        for (double p : opt.p_grid) {
            ThetaCell cell;
            cell.p = p;
            cell.n = n;
            cell.eta = opt.eta;
            cell.trials = opt.trials;
            cell.window = opt.window.radius(n, opt.d);
            curve.cells.push_back(cell);
        }
    return curve;
}

inline ThetaCurve theta_per_p(const ThetaOptions& opt) {
    require(opt.trials >= 1, "estimate_theta: trials must be positive");
    require(!opt.p_grid.empty() && !opt.n_list.empty(), "estimate_theta: empty grid");
    for (double p : opt.p_grid) require(p >= 0 && p <= 1, "estimate_theta: p outside [0,1]");
    std::vector<LevelTarget> targets;
    for (auto n : opt.n_list) {
        require(n >= 0, "estimate_theta: n must be nonnegative");
        WindowGrid g(opt.d, opt.window.radius(n, opt.d));
        auto mask = outside_cone_mask(g, n, opt.eta);
        targets.push_back({std::move(g), std::move(mask)});
    }
    const std::size_t np = opt.p_grid.size();
    std::vector<EscapeHit> hits(opt.trials * targets.size() * np);
    parallel_for(opt.trials, opt.threads, [&](std::size_t t) {
        thread_local StampSet seen;
        thread_local std::vector<std::uint32_t> queue;
        const SiteField f(derive_seed(opt.seed, stream::kTheta, t), opt.d);
        for (std::size_t ni = 0; ni < targets.size(); ++ni)
            for (std::size_t pi = 0; pi < np; ++pi)
                hits[(t * targets.size() + ni) * np + pi] = escape_at(f, opt.p_grid[pi], targets[ni].grid, targets[ni].mask, seen, queue);
    });
    auto curve = empty_curve(opt);
    for (std::size_t t = 0; t < opt.trials; ++t)
        for (std::size_t ni = 0; ni < targets.size(); ++ni)
            for (std::size_t pi = 0; pi < np; ++pi) {
                const auto& h = hits[(t * targets.size() + ni) * np + pi];
                auto& cell = curve.cells[ni * np + pi];
                cell.successes += h.escaped;
                cell.truncated += h.truncated;
            }
    return curve;
}

}  // namespace detail

inline ThetaCurve estimate_theta(const ThetaOptions& opt) {
    const bool per_p = opt.method == ThetaMethod::PerP || (opt.method == ThetaMethod::Auto && opt.p_grid.size() <= 2);
    if (per_p) return detail::theta_per_p(opt);
    const auto levels = theta_levels(opt);
    auto curve = detail::empty_curve(opt);
    const std::size_t np = opt.p_grid.size();
    for (const auto& row : levels)
        for (std::size_t ni = 0; ni < opt.n_list.size(); ++ni)
            for (std::size_t pi = 0; pi < np; ++pi) {
                auto& cell = curve.cells[ni * np + pi];
                cell.successes += row[ni].escaped_at(opt.p_grid[pi]);
                cell.truncated += row[ni].truncated_at(opt.p_grid[pi]);
            }
    return curve;
}

struct PartialSum {
    std::int64_t n = 0;
    double value = 0;
};

struct DecayFit {
    double p = 0;
    Rational eta;
    std::vector<std::int64_t> n_used;
    std::vector<std::int64_t> censored;     // zero-success levels
    std::vector<std::int64_t> excluded;     // 0 < successes < min_successes
    double c_p = 0;
    double stderr_ = 0;
    double intercept = 0;
    double r2 = 0;
    double scale_factor = 1;
    bool decaying = false;
    std::vector<PartialSum> partial_sums;   // S_n over the levels in the curve
};

/// Weighted least squares of ln theta_n on n at a grid value of p.
inline DecayFit fit_decay(const ThetaCurve& curve, double p, std::uint64_t min_successes = 5) {
    const auto pi = curve.p_index(p);
    require(pi.has_value(), "fit_decay: p not on the curve's grid");
    DecayFit fit;
    fit.p = p;
    fit.eta = curve.eta;
    std::vector<double> x, y, w;
    double running = 0;
    for (std::size_t ni = 0; ni < curve.n_list.size(); ++ni) {
        const auto& c = curve.at(*pi, ni);
        running += c.estimate();
        fit.partial_sums.push_back({c.n, running});
        if (c.successes == 0) {
            fit.censored.push_back(c.n);
            continue;
        }
        if (c.successes < min_successes) {
            fit.excluded.push_back(c.n);
            continue;
        }
        const double q = c.estimate();
        const double T = static_cast<double>(c.trials);
        fit.n_used.push_back(c.n);
        x.push_back(static_cast<double>(c.n));
        y.push_back(std::log(q));
        w.push_back(static_cast<double>(c.successes) / std::max(1 - q, 0.5 / T));
    }
    if (x.size() < 3)
        throw Error(ErrorKind::InsufficientData,
                    "fit_decay: " + std::to_string(x.size()) + " usable levels at p=" + std::to_string(p) + " (need 3)");
    double W = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        W += w[i];
        Sx += w[i] * x[i];
        Sy += w[i] * y[i];
        Sxx += w[i] * x[i] * x[i];
        Sxy += w[i] * x[i] * y[i];
    }
    const double D = W * Sxx - Sx * Sx;
    const double slope = (W * Sxy - Sx * Sy) / D;
    fit.intercept = (Sy - slope * Sx) / W;
    fit.c_p = -slope;
    double chi2 = 0, tss = 0;
    const double ybar = Sy / W;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.intercept - slope * x[i];
        chi2 += w[i] * r * r;
        tss += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    const double dof = static_cast<double>(x.size()) - 2;
    fit.scale_factor = std::max(1.0, chi2 / dof);
    fit.stderr_ = std::sqrt(W / D * fit.scale_factor);
    fit.r2 = tss > 0 ? 1 - chi2 / tss : 0.0;
    fit.decaying = fit.c_p > 3 * fit.stderr_ && fit.r2 >= 0.9;
    return fit;
}

struct CriticalEstimate {
    Rational eta;
    double p_lo = 0;
    double p_hi = 1;
    std::string method = "bisection";
    std::int64_t n = 0;   // cone index, or the depth m for the p_c proxy
    int window = 0;
    double threshold = 0.5;
    double stat_lo = 0;
    double stat_hi = 0;
    std::uint64_t trials = 0;
};

namespace detail {

/// Bisection on a nonincreasing step statistic s(p) = #{level_t >= p} / T.
inline CriticalEstimate bisect_levels(std::vector<double> levels, double tol, double threshold) {
    require(tol > 0, "critical: tol must be positive");
    std::sort(levels.begin(), levels.end());
    const double T = static_cast<double>(levels.size());
    auto stat = [&](double p) {
        const auto it = std::lower_bound(levels.begin(), levels.end(), p);
        return static_cast<double>(levels.end() - it) / T;
    };
    CriticalEstimate c;
    c.threshold = threshold;
    c.trials = levels.size();
    double lo = 0, hi = 1;
    double s_lo = stat(lo), s_hi = stat(hi);
    if (s_lo <= threshold || s_hi >= threshold)
        throw Error(ErrorKind::BracketFailure, "critical: statistic does not cross the threshold on [0,1] (s(0)=" +
                                                   std::to_string(s_lo) + ", s(1)=" + std::to_string(s_hi) + ")");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double s = stat(mid);
        if (s > threshold) {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
    }
    c.p_lo = lo;
    c.p_hi = hi;
    c.stat_lo = s_lo;
    c.stat_hi = s_hi;
    return c;
}

template <class Target>
std::vector<double> level_samples(const WindowGrid& grid, Target&& target, int d, std::uint64_t trials, std::uint64_t seed,
                                  std::uint64_t stream_tag, int threads) {
    std::vector<double> levels(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        const SiteField f(derive_seed(seed, stream_tag, t), d);
        levels[t] = escape_level(f, grid, target, 0.0, thread_level_workspace()).level;
    });
    return levels;
}

}  // namespace detail

/// Finite-size proxy for the containment threshold: theta_n(p) crossing `threshold`.
inline CriticalEstimate estimate_ptilde(Rational eta, std::int64_t n, int d, const Window& w, std::uint64_t trials, double tol,
                                        std::uint64_t seed, int threads = 1, double threshold = 0.5) {
    require(trials >= 1, "estimate_ptilde: trials must be positive");
    const WindowGrid grid(d, w.radius);
    const auto mask = outside_cone_mask(grid, n, eta);
    auto levels = detail::level_samples(grid, [&](std::uint32_t c) { return mask[c] != 0; }, d, trials, seed,
                                        stream::kCritical, threads);
    auto c = detail::bisect_levels(std::move(levels), tol, threshold);
    c.eta = eta;
    c.n = n;
    c.window = w.radius;
    return c;
}

/// Finite-size proxy for p_c: P(some k e1 with k < -m is reached), half-orthant model.
inline CriticalEstimate estimate_pc(std::int64_t m, int d, const Window& w, std::uint64_t trials, double tol, std::uint64_t seed,
                                    int threads = 1, double threshold = 0.5) {
    require(trials >= 1, "estimate_pc: trials must be positive");
    require(m >= 0, "estimate_pc: depth must be nonnegative");
    const WindowGrid grid(d, w.radius);
    std::vector<std::uint8_t> mask(grid.size(), 0);
    for (std::uint32_t c = 0; c < grid.size(); ++c) {
        const Vertex v = grid.vertex(c);
        bool axis = v[0] < -m;
        for (int i = 1; i < d; ++i) axis = axis && v[i] == 0;
        mask[c] = axis;
    }
    auto levels = detail::level_samples(grid, [&](std::uint32_t c) { return mask[c] != 0; }, d, trials, seed,
                                        stream::kCritical ^ 0x7063, threads);
    auto c = detail::bisect_levels(std::move(levels), tol, threshold);
    c.n = m;
    c.window = w.radius;
    return c;
}

// ---------------------------------------------------------------------------
// Shape function.

struct ShapeOptions {
    double p = 0.9;
    ModelKind model = ModelKind::Orthant;
    int d = 2;
    Window window{32};
    std::vector<std::int64_t> n_list{4, 8};
    std::uint64_t trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
};

/// beta_n(u) for every seed, direction and scale, from one cluster per seed.
struct ShapeRun {
    ShapeOptions options;
    std::vector<Vertex> directions;
    std::vector<std::vector<std::vector<std::optional<std::int64_t>>>> beta;  // [trial][u][n]
};

inline ShapeRun run_shape(const std::vector<Vertex>& us, const ShapeOptions& opt) {
    require(opt.trials >= 1, "estimate_gamma: trials must be positive");
    ShapeRun run;
    run.options = opt;
    run.directions = us;
    run.beta.assign(opt.trials, {});
    parallel_for(opt.trials, opt.threads, [&](std::size_t t) {
        const SiteField f(derive_seed(opt.seed, stream::kShape, t), opt.d);
        const Cluster cl(opt.model, f, opt.p, Vertex::origin(opt.d), opt.window);
        auto& rows = run.beta[t];
        rows.resize(us.size());
        for (std::size_t ui = 0; ui < us.size(); ++ui)
            for (auto n : opt.n_list) rows[ui].push_back(cl.first_shift(us[ui], n).value);
    });
    return run;
}

struct ShapeLevel {
    std::int64_t n = 0;
    double mean = 0;      // mean of beta_n(u)/n over non-None samples
    double stderr_ = 0;
    std::uint64_t count = 0;
    std::uint64_t nones = 0;
};

struct ShapeEstimate {
    Vertex u;
    std::vector<ShapeLevel> levels;
    std::optional<double> gamma_hat;  // largest-n mean, only when no sample there is None
    double stderr_ = 0;
};

inline ShapeEstimate summarize_direction(const ShapeRun& run, std::size_t ui) {
    ShapeEstimate e;
    e.u = run.directions[ui];
    const auto& ns = run.options.n_list;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        ShapeLevel lv;
        lv.n = ns[ni];
        double s = 0, s2 = 0;
        for (const auto& row : run.beta) {
            const auto& b = row[ui][ni];
            if (!b) {
                ++lv.nones;
                continue;
            }
            const double x = static_cast<double>(*b) / static_cast<double>(lv.n);
            s += x;
            s2 += x * x;
            ++lv.count;
        }
        if (lv.count) {
            lv.mean = s / static_cast<double>(lv.count);
            const double var = lv.count > 1 ? (s2 - lv.count * lv.mean * lv.mean) / static_cast<double>(lv.count - 1) : 0.0;
            lv.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(lv.count));
        }
        e.levels.push_back(lv);
    }
    if (!e.levels.empty() && e.levels.back().nones == 0) {
        e.gamma_hat = e.levels.back().mean;
        e.stderr_ = e.levels.back().stderr_;
    }
    return e;
}

/// Shape estimates for each direction; TruncationDominated when any largest-n sample is None.
inline std::vector<ShapeEstimate> estimate_gamma(const std::vector<Vertex>& us, const ShapeOptions& opt) {
    const auto run = run_shape(us, opt);
    std::vector<ShapeEstimate> out;
    for (std::size_t ui = 0; ui < us.size(); ++ui) {
        out.push_back(summarize_direction(run, ui));
        if (!out.back().gamma_hat)
            throw Error(ErrorKind::TruncationDominated, "estimate_gamma: u=" + us[ui].str() + " has " +
                                                            std::to_string(out.back().levels.back().nones) +
                                                            " windowed-out samples at the largest n");
    }
    return out;
}

struct PairedStat {
    double mean = 0;
    double stderr_ = 0;
    std::uint64_t count = 0;
};

/// Per-seed sum_i coef_i * beta_n(u_i) / n at the largest n; seeds with any None are skipped.
inline PairedStat paired_combination(const ShapeRun& run, const std::vector<std::pair<std::size_t, double>>& terms) {
    const std::size_t ni = run.options.n_list.size() - 1;
    const double n = static_cast<double>(run.options.n_list[ni]);
    PairedStat st;
    double s = 0, s2 = 0;
    for (const auto& row : run.beta) {
        double x = 0;
        bool ok = true;
        for (const auto& [ui, coef] : terms) {
            const auto& b = row[ui][ni];
            if (!b) {
                ok = false;
                break;
            }
            x += coef * static_cast<double>(*b) / n;
        }
        if (!ok) continue;
        s += x;
        s2 += x * x;
        ++st.count;
    }
    if (st.count) {
        st.mean = s / static_cast<double>(st.count);
        const double var = st.count > 1 ? (s2 - st.count * st.mean * st.mean) / static_cast<double>(st.count - 1) : 0.0;
        st.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(st.count));
    }
    return st;
}

/// (1/n) filled cluster for each seed; rows are (seed index, x_1..x_d).
struct ShapeCloud {
    std::int64_t n = 1;
    int d = 2;
    std::vector<std::pair<std::uint64_t, std::vector<double>>> points;
};

inline ShapeCloud shape_cloud(double p, std::int64_t n, const Window& w, int d, std::uint64_t seeds, std::uint64_t master_seed,
                              int threads = 1, ModelKind model = ModelKind::Orthant) {
    require(n >= 1, "shape_cloud: n must be positive");
    std::vector<std::vector<Vertex>> per(seeds);
    parallel_for(seeds, threads, [&](std::size_t t) {
        per[t] = filled_cluster(model, SiteField(derive_seed(master_seed, stream::kShape, t), d), p, w, d);
    });
    ShapeCloud cloud;
    cloud.n = n;
    cloud.d = d;
    for (std::size_t t = 0; t < per.size(); ++t) {
        for (const auto& v : per[t]) {
            std::vector<double> x(d);
            for (int i = 0; i < d; ++i) x[i] = static_cast<double>(v[i]) / static_cast<double>(n);
            cloud.points.emplace_back(t, std::move(x));
        }
    }
    return cloud;
}

/// Planar shape-function surrogate: gamma(x) = |x1-x2|/2 * g - (x1+x2)/2 with g = gamma(1,-1),
/// from gamma(u + r1) = gamma(u) - r, positive homogeneity and permutation symmetry.
inline double gamma_planar(const std::vector<double>& x, double g) {
    return std::fabs(x[0] - x[1]) / 2 * g - (x[0] + x[1]) / 2;
}

/// Symmetric Hausdorff distance between two point sets (brute force).
inline double hausdorff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    auto directed = [](const auto& from, const auto& to) {
        double worst = 0;
        for (const auto& x : from) {
            double best = INFINITY;
            for (const auto& y : to) {
                double m = 0;
                for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
                best = std::min(best, m);
                if (best <= worst) break;
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : INFINITY;
    return std::max(directed(a, b), directed(b, a));
}

}  // namespace orthant
