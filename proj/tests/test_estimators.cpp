#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "orthant/estimators.hpp"
#include "orthant/oracle.hpp"

using namespace orthant;

namespace {

ThetaCurve synthetic_curve(double rate, std::uint64_t trials, int levels) {
    ThetaCurve c;
    c.p_grid = {0.9};
    c.eta = Rational(1, 10);
    for (int n = 1; n <= levels; ++n) {
        c.n_list.push_back(n);
        ThetaCell cell;
        cell.p = 0.9;
        cell.n = n;
        cell.trials = trials;
        cell.successes = static_cast<std::uint64_t>(std::llround(trials * std::exp(-rate * n)));
        c.cells.push_back(cell);
    }
    return c;
}

}  // namespace

TEST(FitDecay, RecoversSyntheticRate) {
    const auto fit = fit_decay(synthetic_curve(0.3, 1000000, 12), 0.9);
    EXPECT_NEAR(fit.c_p, 0.30, 0.01);
    EXPECT_GT(fit.r2, 0.99);
    EXPECT_TRUE(fit.decaying);
    EXPECT_TRUE(fit.censored.empty());
    ASSERT_EQ(fit.partial_sums.size(), 12u);
    double s = 0;
    for (int n = 1; n <= 12; ++n) s += std::llround(1000000 * std::exp(-0.3 * n)) / 1e6;
    EXPECT_NEAR(fit.partial_sums.back().value, s, 1e-12);
}

TEST(FitDecay, CensorsZeroLevels) {
    const auto fit = fit_decay(synthetic_curve(1.5, 10000, 10), 0.9);
    EXPECT_FALSE(fit.censored.empty());
    for (auto n : fit.censored) EXPECT_GE(n, 7);
    EXPECT_NEAR(fit.c_p, 1.5, 0.1);
}

TEST(FitDecay, FlatCurveIsNotDecaying) {
    auto c = synthetic_curve(0.0, 1000, 6);
    const auto fit = fit_decay(c, 0.9);
    EXPECT_FALSE(fit.decaying);
}

TEST(FitDecay, InsufficientData) {
    auto c = synthetic_curve(3.0, 1000, 8);
    try {
        fit_decay(c, 0.9);
        FAIL() << "expected InsufficientData";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
    EXPECT_THROW(fit_decay(c, 0.5), Error);
}

TEST(EstimateTheta, EndpointsAreExact) {
    for (int d : {2, 3}) {
        ThetaOptions opt;
        opt.p_grid = {0.0, 1.0};
        opt.n_list = {1, 2};
        opt.eta = Rational(0);
        opt.d = d;
        opt.trials = 50;
        const auto curve = estimate_theta(opt);
        for (std::size_t ni = 0; ni < 2; ++ni) {
            EXPECT_EQ(curve.at(0, ni).successes, 50u);
            EXPECT_EQ(curve.at(1, ni).successes, 0u);
            EXPECT_EQ(curve.at(0, ni).window, 4 * curve.n_list[ni] * d);
        }
    }
}

TEST(EstimateTheta, LevelsAgreeWithDirectSearch) {
    ThetaOptions opt;
    opt.p_grid = {0.3, 0.6, 0.9};
    opt.n_list = {1, 3};
    opt.eta = Rational(1, 10);
    opt.window.fixed = 9;
    opt.trials = 40;
    opt.seed = 17;
    const auto levels = theta_levels(opt);
    for (std::size_t t = 0; t < 40; ++t) {
        const SiteField f(derive_seed(17, stream::kTheta, t), 2);
        for (std::size_t ni = 0; ni < 2; ++ni)
            for (double p : opt.p_grid)
                EXPECT_EQ(levels[t][ni].escaped_at(p), escapes_cone(f, p, opt.n_list[ni], opt.eta, Window{9}, 2));
    }
}

TEST(EstimateTheta, PerSeedMonotone) {
    ThetaOptions opt;
    for (int i = 0; i <= 10; ++i) opt.p_grid.push_back(i / 10.0);
    opt.n_list = {1, 2, 3, 4};
    opt.eta = Rational(0);
    opt.window.fixed = 16;
    opt.trials = 500;
    opt.threads = 2;
    const auto levels = theta_levels(opt);
    for (const auto& row : levels)
        for (std::size_t ni = 0; ni < row.size(); ++ni)
            for (std::size_t pi = 0; pi < opt.p_grid.size(); ++pi) {
                const double p = opt.p_grid[pi];
                if (pi > 0) EXPECT_LE(row[ni].escaped_at(p), row[ni].escaped_at(opt.p_grid[pi - 1]));
                if (ni > 0) EXPECT_LE(row[ni].escaped_at(p), row[ni - 1].escaped_at(p));
            }
}

TEST(EstimateTheta, AgreesWithExactPolynomial) {
    const auto poly = enumerate_theta(2, 1, Rational(0), Window{1});
    ThetaOptions opt;
    opt.p_grid = {0.2, 0.5, 0.8};
    opt.n_list = {1};
    opt.eta = Rational(0);
    opt.window.fixed = 1;
    opt.trials = 40000;
    opt.seed = 3;
    const auto curve = estimate_theta(opt);
    for (std::size_t pi = 0; pi < 3; ++pi) {
        const auto& c = curve.at(pi, 0);
        const double exact = poly.value(c.p);
        EXPECT_LT(std::fabs(c.estimate() - exact), 4 * std::sqrt(exact * (1 - exact) / 40000)) << c.p;
    }
}

TEST(EstimateTheta, ThreadCountDoesNotChangeCounts) {
    ThetaOptions opt;
    opt.p_grid = {0.5, 0.7};
    opt.n_list = {2};
    opt.eta = Rational(1, 10);
    opt.trials = 300;
    const auto a = estimate_theta(opt);
    opt.threads = 4;
    const auto b = estimate_theta(opt);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].successes, b.cells[i].successes);
        EXPECT_EQ(a.cells[i].truncated, b.cells[i].truncated);
    }
}

TEST(Critical, BracketProperties) {
    const auto c = estimate_ptilde(Rational(0), 4, 2, Window{16}, 2000, 1e-3, 5, 2);
    EXPECT_LT(c.p_lo, c.p_hi);
    EXPECT_GE(c.p_lo, 0.0);
    EXPECT_LE(c.p_hi, 1.0);
    EXPECT_LE(c.p_hi - c.p_lo, 1e-3);
    EXPECT_GT(c.stat_lo, 0.5);
    EXPECT_LE(c.stat_hi, 0.5);
}

TEST(Critical, IncreasingInEta) {
    // Same seeds: the wider complement of K_{1/4} can only raise each level.
    const auto a = estimate_ptilde(Rational(0), 4, 2, Window{16}, 2000, 1e-3, 5, 2);
    const auto b = estimate_ptilde(Rational(1, 4), 4, 2, Window{16}, 2000, 1e-3, 5, 2);
    EXPECT_GE(b.p_lo, a.p_lo);
}

TEST(Critical, PcProxyBelowPtilde) {
    const auto pt = estimate_ptilde(Rational(0), 4, 2, Window{16}, 2000, 1e-3, 5, 2);
    const auto pc = estimate_pc(8, 2, Window{16}, 2000, 1e-3, 5, 2);
    EXPECT_LE(pc.p_lo, pt.p_hi + (pt.p_hi - pt.p_lo) + (pc.p_hi - pc.p_lo));
    EXPECT_GT(pc.stat_lo, 0.5);
}

TEST(Critical, BracketFailure) {
    try {
        estimate_ptilde(Rational(0), 1, 2, Window{0}, 100, 1e-2, 1);
        FAIL() << "expected BracketFailure";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BracketFailure);
    }
    EXPECT_THROW(estimate_ptilde(Rational(0), 2, 2, Window{12}, 100, 1e-2, 1, 2, 1.0), Error);
}

TEST(Shape, ClosedFormAtPOne) {
    std::mt19937_64 rng(11);
    std::vector<Vertex> us;
    for (int i = 0; i < 10; ++i) us.push_back(Vertex{static_cast<int>(rng() % 7) - 3, static_cast<int>(rng() % 7) - 3});
    ShapeOptions opt;
    opt.p = 1.0;
    opt.window = Window{40};
    opt.n_list = {2, 4};
    opt.trials = 5;
    const auto est = estimate_gamma(us, opt);
    for (std::size_t i = 0; i < us.size(); ++i) {
        ASSERT_TRUE(est[i].gamma_hat.has_value());
        EXPECT_EQ(*est[i].gamma_hat, -std::min(us[i][0], us[i][1])) << us[i].str();
        EXPECT_EQ(est[i].stderr_, 0.0);
    }
}

TEST(Shape, ShiftIdentityPerRealization) {
    ShapeOptions opt;
    opt.p = 0.9;
    opt.window = Window{40};
    opt.n_list = {3, 6};
    opt.trials = 50;
    const std::vector<Vertex> us{Vertex{1, -1}, Vertex{3, 1}, Vertex{-1, 2}, Vertex{0, 3}};
    const auto run = run_shape(us, opt);
    int compared = 0;
    for (const auto& row : run.beta)
        for (std::size_t ni = 0; ni < opt.n_list.size(); ++ni) {
            const auto n = opt.n_list[ni];
            if (row[0][ni] && row[1][ni]) {
                EXPECT_EQ(*row[1][ni], *row[0][ni] - 2 * n);
                ++compared;
            }
            if (row[2][ni] && row[3][ni]) EXPECT_EQ(*row[3][ni], *row[2][ni] - n);
        }
    EXPECT_GT(compared, 50);
}

TEST(Shape, TruncationDominated) {
    ShapeOptions opt;
    opt.p = 0.9;
    opt.window = Window{3};
    opt.n_list = {8};
    opt.trials = 3;
    try {
        estimate_gamma({Vertex{1, -1}}, opt);
        FAIL() << "expected TruncationDominated";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TruncationDominated);
    }
}

TEST(Shape, PairedPermutationDifference) {
    ShapeOptions opt;
    opt.p = 0.9;
    opt.window = Window{48};
    opt.n_list = {8};
    opt.trials = 200;
    const auto run = run_shape({Vertex{2, -1}, Vertex{-1, 2}}, opt);
    const auto diff = paired_combination(run, {{0, 1.0}, {1, -1.0}});
    EXPECT_GT(diff.count, 150u);
    EXPECT_LT(std::fabs(diff.mean), 3 * diff.stderr_ + 1e-12);
}

TEST(Shape, PlanarSurrogateAtPOne) {
    for (double a : {-2.0, 0.0, 1.5})
        for (double b : {-1.0, 0.5, 3.0}) EXPECT_DOUBLE_EQ(gamma_planar({a, b}, 1.0), -std::min(a, b));
}

TEST(Shape, CloudAtPOneIsTheScaledQuadrant) {
    const auto cloud = shape_cloud(1.0, 2, Window{4}, 2, 2, 9, 1, ModelKind::HalfOrthant);
    EXPECT_EQ(cloud.points.size(), 2u * 25u);
    for (const auto& [seed, x] : cloud.points) {
        EXPECT_GE(x[0], 0.0);
        EXPECT_GE(x[1], 0.0);
        EXPECT_LE(x[0], 2.0);
    }
}

TEST(Shape, Hausdorff) {
    const std::vector<std::vector<double>> a{{0, 0}, {1, 0}}, b{{0, 0}, {1, 0.5}};
    EXPECT_DOUBLE_EQ(hausdorff(a, b), 0.5);
    EXPECT_DOUBLE_EQ(hausdorff(a, a), 0.0);
    EXPECT_TRUE(std::isinf(hausdorff(a, {})));
}

TEST(Theta, PerPSearchMatchesLevels) {
    for (int d : {2, 3})
        for (double p : {0.3, 0.6}) {
            ThetaOptions o;
            o.p_grid = {p, p + 0.2};
            o.n_list = {1, 2};
            o.d = d;
            o.eta = Rational(1, 4);
            o.trials = 300;
            o.method = ThetaMethod::PerP;
            const auto a = estimate_theta(o);
            o.method = ThetaMethod::Levels;
            const auto b = estimate_theta(o);
            for (std::size_t i = 0; i < a.cells.size(); ++i) {
                EXPECT_EQ(a.cells[i].successes, b.cells[i].successes);
                EXPECT_EQ(a.cells[i].truncated, b.cells[i].truncated);
            }
        }
}
