#pragma once

// Random walk on the orthant-model cluster: every step picks one of the d
// out-edges of the current vertex uniformly (all +e_i on a 1-site, all -e_i on
// a 0-site), so the walk never leaves C_0.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "orthant/lattice.hpp"
#include "orthant/osss.hpp"
#include "orthant/parallel.hpp"

namespace orthant {

struct WalkPath {
    std::vector<Vertex> positions;
    std::uint64_t env_seed = 0;
    std::uint64_t walk_seed = 0;
};

/// Axis chosen at step t: the high word of word * d (unbiased enough for d <= 4).
inline int walk_axis(std::uint64_t walk_seed, std::uint64_t t, int d) {
    const std::uint64_t word = Philox4x64::apply({t, 0, 0, 0}, {walk_seed, stream::kWalk})[0];
    return static_cast<int>((static_cast<unsigned __int128>(word) * static_cast<unsigned>(d)) >> 64);
}

template <SiteOracle F, class Visit>
Vertex walk_visit(const F& env, double p, std::int64_t steps, std::uint64_t walk_seed, int d, Visit&& visit) {
    require(steps >= 1, "walk: steps must be positive");
    Vertex x = Vertex::origin(d);
    visit(x);
    for (std::int64_t t = 0; t < steps; ++t) {
        const int axis = walk_axis(walk_seed, static_cast<std::uint64_t>(t), d);
        x.coords[axis] += env.is_one(x, p) ? 1 : -1;
        visit(x);
    }
    return x;
}

inline WalkPath walk(const SiteField& env, double p, std::int64_t steps, std::uint64_t walk_seed) {
    WalkPath path;
    path.env_seed = env.seed();
    path.walk_seed = walk_seed;
    path.positions.reserve(static_cast<std::size_t>(steps) + 1);
    walk_visit(env, p, steps, walk_seed, env.dim(), [&](const Vertex& v) { path.positions.push_back(v); });
    return path;
}

inline Vertex walk_endpoint(const SiteField& env, double p, std::int64_t steps, std::uint64_t walk_seed) {
    return walk_visit(env, p, steps, walk_seed, env.dim(), [](const Vertex&) {});
}

/// Replays a path against its environment; true when every step is an out-edge.
inline bool path_is_valid(const WalkPath& path, double p, int d) {
    const SiteField env(path.env_seed, d);
    if (path.positions.empty() || path.positions[0] != Vertex::origin(d)) return false;
    for (std::size_t i = 1; i < path.positions.size(); ++i) {
        const Vertex step = path.positions[i] - path.positions[i - 1];
        if (step.l1() != 1) return false;
        const bool up = step.sum() > 0;
        if (up != env.is_one(path.positions[i - 1], p)) return false;
    }
    return true;
}

struct PairDiff {
    int a = 0, b = 0;
    double mean = 0;
    double stderr_ = 0;
};

struct WalkStats {
    double p = 0;
    int d = 2;
    std::int64_t steps = 0;
    std::uint64_t walks = 0;
    bool quenched = false;
    std::vector<double> speed;            // E[X_N] / N
    std::vector<double> speed_stderr;
    std::vector<std::vector<double>> covariance;       // of (X_N - N v) / sqrt(N)
    std::vector<std::vector<double>> covariance_stderr;
    double lambda_min = 0;                // reported as 0 when below 1e-9 * lambda_max
    double lambda_min_stderr = 0;
    double lambda_max = 0;
    bool eigen_positive = false;          // lambda_min > 3 stderr
    double drift = 0;                     // E[X_N . 1] / N
    double drift_stderr = 0;
    std::vector<PairDiff> pair_diffs;     // (X_a - X_b) / N
};

inline WalkStats summarize_walks(const std::vector<Vertex>& ends, double p, int d, std::int64_t steps, bool quenched) {
    const std::size_t M = ends.size();
    require(M >= 2, "ballisticity_report: need at least two walks");
    const double N = static_cast<double>(steps);
    const double Md = static_cast<double>(M);
    WalkStats st;
    st.p = p;
    st.d = d;
    st.steps = steps;
    st.walks = M;
    st.quenched = quenched;

    auto mean_se = [&](auto&& value) {
        double s = 0, s2 = 0;
        for (std::size_t j = 0; j < M; ++j) {
            const double x = value(j);
            s += x;
            s2 += x * x;
        }
        const double m = s / Md;
        const double var = std::max(0.0, (s2 - Md * m * m) / (Md - 1));
        return std::pair{m, std::sqrt(var / Md)};
    };

    std::vector<double> mean(d);
    for (int i = 0; i < d; ++i) {
        auto [m, se] = mean_se([&](std::size_t j) { return ends[j][i] / N; });
        st.speed.push_back(m);
        st.speed_stderr.push_back(se);
        mean[i] = m * N;
    }
    Eigen::MatrixXd Y(M, d);
    for (std::size_t j = 0; j < M; ++j)
        for (int i = 0; i < d; ++i) Y(j, i) = (ends[j][i] - mean[i]) / std::sqrt(N);
    st.covariance.assign(d, std::vector<double>(d));
    st.covariance_stderr.assign(d, std::vector<double>(d));
    Eigen::MatrixXd cov(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            auto [m, se] = mean_se([&](std::size_t j) { return Y(j, a) * Y(j, b); });
            cov(a, b) = m * Md / (Md - 1);
            st.covariance[a][b] = cov(a, b);
            st.covariance_stderr[a][b] = se;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto& vals = eig.eigenvalues();
    st.lambda_max = vals(d - 1);
    st.lambda_min = std::fabs(vals(0)) <= 1e-9 * std::fabs(st.lambda_max) ? 0.0 : vals(0);
    const Eigen::VectorXd q = eig.eigenvectors().col(0);
    {
        auto [m, se] = mean_se([&](std::size_t j) {
            const double z = Y.row(j).dot(q);
            return z * z;
        });
        (void)m;
        st.lambda_min_stderr = se;
    }
    st.eigen_positive = st.lambda_min > 3 * st.lambda_min_stderr;
    {
        auto [m, se] = mean_se([&](std::size_t j) { return ends[j].sum() / N; });
        st.drift = m;
        st.drift_stderr = se;
    }
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            auto [m, se] = mean_se([&](std::size_t j) { return (ends[j][a] - ends[j][b]) / N; });
            st.pair_diffs.push_back({a, b, m, se});
        }
    return st;
}

/// Annealed (fresh environment per walk) or quenched (one environment) endpoints.
inline std::vector<Vertex> walk_endpoints(double p, int d, std::int64_t steps, std::uint64_t walks, std::uint64_t seed, bool quenched,
                                          int threads = 1) {
    std::vector<Vertex> ends(walks);
    parallel_for(walks, threads, [&](std::size_t j) {
        const SiteField env(derive_seed(seed, stream::kEnvironment, quenched ? 0 : j), d);
        ends[j] = walk_endpoint(env, p, steps, derive_seed(seed, stream::kWalk, j));
    });
    return ends;
}

inline WalkStats ballisticity_report(double p, int d, std::int64_t steps, std::uint64_t walks, std::uint64_t seed,
                                     bool quenched = false, int threads = 1) {
    require(walks >= 30, "ballisticity_report: need at least 30 walks");
    return summarize_walks(walk_endpoints(p, d, steps, walks, seed, quenched, threads), p, d, steps, quenched);
}

}  // namespace orthant
