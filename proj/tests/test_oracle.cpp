#include <gtest/gtest.h>

#include <bit>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "orthant/oracle.hpp"
#include "orthant/osss.hpp"
#include "orthant/reach.hpp"

using namespace orthant;

namespace {

// Test-side evaluation of the windowed event straight from a mask.
bool reference_event(int d, int r, std::int64_t n, Rational eta, std::uint64_t mask) {
    const auto pts = window_points(d, Window{r});
    std::map<Vertex, bool> omega;
    for (std::size_t j = 0; j < pts.size(); ++j) omega[pts[j]] = (mask >> j) & 1U;
    const Cone c(eta, n);
    std::set<Vertex> seen{Vertex::origin(d)};
    std::vector<Vertex> stack{Vertex::origin(d)};
    while (!stack.empty()) {
        const Vertex y = stack.back();
        stack.pop_back();
        if (!c.contains(y)) return true;
        const auto it = omega.find(y);
        if (it == omega.end()) continue;
        for (int i = 0; i < d; ++i) {
            const Vertex up = y + Vertex::unit(d, i), down = y - Vertex::unit(d, i);
            if (seen.insert(up).second) stack.push_back(up);
            if (!it->second && seen.insert(down).second) stack.push_back(down);
        }
    }
    return false;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const ExactInstance& lambda2() {
    static const ExactInstance x = ExactInstance::build(2, 1, Rational(0), Window{2}, true, kDefaultEnumerationCap, workers());
    return x;
}

}  // namespace

TEST(Oracle, SingleSiteWindowGivesZeroPolynomial) {
    const auto poly = enumerate_theta(2, 1, Rational(0), Window{0});
    EXPECT_EQ(poly.site_count, 1);
    EXPECT_TRUE(poly.is_zero());
    for (const auto& inf : exact_influences(2, 1, Rational(0), Window{0})) EXPECT_TRUE(inf.poly.is_zero());
}

TEST(Oracle, TableMatchesReferenceOnEveryConfiguration) {
    for (std::int64_t n : {0, 1, 2})
        for (auto eta : {Rational(0), Rational(1, 3)}) {
            const auto t = tabulate_event(2, n, eta, Window{1});
            for (std::uint64_t m = 0; m < 512; ++m) ASSERT_EQ(t.at(m), reference_event(2, 1, n, eta, m)) << n << " " << m;
        }
}

TEST(Oracle, TableMatchesReferenceOnSampledConfigurations) {
    const auto& x = lambda2();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 3000; ++i) {
        const std::uint64_t m = rng() & ((std::uint64_t{1} << 25) - 1);
        ASSERT_EQ(x.table.at(m), reference_event(2, 2, 1, Rational(0), m)) << m;
    }
}

TEST(Oracle, EndpointsMatchDirectSearch) {
    for (int r : {1, 2}) {
        const auto poly = r == 2 ? lambda2().theta : enumerate_theta(2, 1, Rational(0), Window{r});
        const SiteField f(3, 2);
        EXPECT_EQ(poly.value(0.0), escapes_cone(f, 0.0, 1, Rational(0), Window{r}) ? 1.0 : 0.0);
        EXPECT_EQ(poly.value(1.0), 0.0);
    }
}

TEST(Oracle, CountsAreBoundedByBinomials) {
    const auto& poly = lambda2().theta;
    BigInt binom = 1;
    for (int j = 0; j <= poly.site_count; ++j) {
        EXPECT_LE(BigInt(poly.counts[j]), binom);
        binom = binom * (poly.site_count - j) / (j + 1);
    }
}

TEST(Oracle, MonteCarloAgreesWithPolynomial) {
    const auto poly = enumerate_theta(2, 1, Rational(0), Window{1});
    const std::uint64_t T = 100000;
    for (double p : {0.3, 0.5}) {
        std::uint64_t hits = 0;
        for (std::uint64_t t = 0; t < T; ++t) hits += escapes_cone(SiteField(derive_seed(91, 0, t), 2), p, 1, Rational(0), Window{1});
        const double exact = poly.value(p);
        const double sigma = std::sqrt(exact * (1 - exact) / T);
        EXPECT_LT(std::fabs(hits / double(T) - exact), 4 * sigma) << p;
    }
}

TEST(Oracle, ThetaIsNonincreasing) {
    const auto& poly = lambda2().theta;
    double prev = 2;
    for (int i = 0; i <= 200; ++i) {
        const double v = poly.value(i / 200.0);
        EXPECT_LE(v, prev + 1e-15);
        prev = v;
    }
}

TEST(Oracle, EnumerationCap) {
    try {
        enumerate_theta(2, 1, Rational(0), Window{3});
        FAIL() << "expected EnumerationTooLarge";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EnumerationTooLarge);
    }
    EXPECT_THROW(enumerate_theta(3, 1, Rational(0), Window{1}), Error);
    EXPECT_THROW(enumerate_theta(2, 1, Rational(0), Window{2}, 24), Error);
}

TEST(Influence, RussoIdentityExact) {
    const auto& x = lambda2();
    const auto rep = russo_from_instance(x, {0.0, 0.25, 0.5, 0.75, 1.0});
    for (const auto& row : rep.rows) {
        EXPECT_TRUE(row.exact_equal) << row.p;
        EXPECT_LT(row.discrepancy, 1e-9);
    }
    for (int j = 0; j <= 10; ++j) {
        const BigRational p(j, 10);
        EXPECT_EQ(-x.theta.derivative(p), x.total_influence(p));
    }
}

TEST(Influence, PermutationSymmetric) {
    const auto& x = lambda2();
    const SiteIndex idx(2, Window{2});
    for (int j = 0; j < x.sites; ++j) {
        const Vertex v = idx.vertex(j);
        const Vertex swapped{v[1], v[0]};
        EXPECT_EQ(x.influence[j].counts, x.influence[idx.index(swapped)].counts) << v.str();
    }
}

TEST(Influence, SitesInsideThePositiveQuadrantNeverMatter) {
    // Positive edges are always open, so every point with nonnegative coords is
    // always reached; a site with all coords >= 1 only points at such points.
    const auto& x = lambda2();
    const SiteIndex idx(2, Window{2});
    int nonzero = 0;
    for (int j = 0; j < x.sites; ++j) {
        const Vertex v = idx.vertex(j);
        if (v[0] >= 1 && v[1] >= 1) EXPECT_TRUE(x.influence[j].is_zero()) << v.str();
        nonzero += !x.influence[j].is_zero();
    }
    EXPECT_GT(nonzero, 5);
}

TEST(Influence, OriginAtPOneIsNotPivotal) {
    // All other sites forced to 1: the origin's negative steps stay inside -1 + K_0.
    const SiteIndex idx(2, Window{2});
    const std::uint64_t all = (std::uint64_t{1} << idx.count()) - 1;
    const std::uint64_t without = all & ~(std::uint64_t{1} << idx.index(Vertex{0, 0}));
    EXPECT_FALSE(reference_event(2, 2, 1, Rational(0), all));
    EXPECT_FALSE(reference_event(2, 2, 1, Rational(0), without));
    EXPECT_EQ(lambda2().influence[idx.index(Vertex{0, 0})].value(1.0), 0.0);
}

TEST(Influence, MonteCarloMatchesExact) {
    const auto x = ExactInstance::build(2, 1, Rational(0), Window{1}, false);
    const SiteIndex idx(2, Window{1});
    for (const Vertex v : {Vertex{0, 0}, Vertex{-1, -1}, Vertex{-1, 0}}) {
        const auto est = influence(0.5, 1, Rational(0), v, Window{1}, 40000, 8, 2);
        const double exact = x.influence[idx.index(v)].value(0.5);
        EXPECT_LT(std::fabs(est.estimate - exact), 4 * std::sqrt(exact * (1 - exact) / 40000) + 1e-12) << v.str();
        EXPECT_GE(est.estimate, 0.0);
        EXPECT_LE(est.estimate, 1.0);
    }
    EXPECT_EQ(influence(0.5, 1, Rational(0), Vertex{3, 0}, Window{1}, 100, 8).flips_changed, 0u);
}

TEST(Revealment, TreeDeterminesEveryConfiguration) {
    const auto& x = lambda2();
    ASSERT_EQ(x.revealment.size(), 1u);
    EXPECT_EQ(x.revealment[0].determination_failures, 0u);
    const auto t = tabulate_event(2, 2, Rational(1, 3), Window{1});
    for (std::int64_t k = 1; k <= 2; ++k) EXPECT_EQ(exact_revealments(2, 2, Rational(1, 3), k, Window{1}, t).determination_failures, 0u);
}

TEST(Revealment, MonteCarloProfileMatchesExact) {
    const auto t = tabulate_event(2, 2, Rational(0), Window{2});
    const auto exact = exact_revealments(2, 2, Rational(0), 2, Window{2}, t, workers());
    const auto prof = revealment_profile(0.6, 2, Rational(0), Window{2}, 2, 20000, 4, workers());
    for (std::size_t j = 0; j < prof.sites.size(); ++j) {
        const double e = exact.per_site[j].value(0.6);
        const double got = prof.estimate(2, j);
        EXPECT_LT(std::fabs(got - e), 4 * std::sqrt(e * (1 - e) / 20000) + 1e-12) << prof.sites[j].str();
    }
    EXPECT_EQ(prof.summed(Vertex{5, 5}), 0.0);
}

TEST(Revealment, SummedBoundAtModerateP) {
    // The bound uses window-level theta_0; see README for where it can fail.
    const auto& x = lambda2();
    for (double p : {0.3, 0.5, 0.7}) {
        const double bound = 5 * x.partial_sum(p);
        for (int j = 0; j < x.sites; ++j) EXPECT_LE(x.revealment[0].per_site[j].value(p), bound) << p;
    }
}

TEST(Revealment, FirstSeedIsAlwaysRevealed) {
    const auto& x = lambda2();
    const SiteIndex idx(2, Window{2});
    // rounds start at radius n = 1
    const auto seed = cone_boundary(Cone(Rational(0), 1), Window{1}, 2).front();
    EXPECT_EQ(x.revealment[0].per_site[idx.index(seed)].value(0.37), 1.0);
}

TEST(Osss, HoldsOnTheExactInstance) {
    const auto& x = lambda2();
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto r = osss_from_instance(x, p);
        EXPECT_TRUE(r.single_tree_holds()) << p;
        EXPECT_TRUE(r.summed_holds()) << p;
        EXPECT_EQ(r.determination_failures, 0u);
    }
    for (double p : {0.0, 1.0}) {
        const auto r = osss_from_instance(x, p);
        EXPECT_EQ(r.variance, 0.0);
        EXPECT_GE(r.summed_rhs, 0.0);
    }
}

TEST(Osss, MonteCarloModeRuns) {
    OsssOptions opt;
    opt.exact = false;
    opt.trials = 2000;
    opt.threads = workers();
    const auto r = osss_check(0.5, 1, Rational(0), Window{1}, 2, opt);
    const double exact = enumerate_theta(2, 1, Rational(0), Window{1}).value(0.5);
    EXPECT_LT(std::fabs(r.theta - exact), 4 * std::sqrt(exact * (1 - exact) / 2000));
    EXPECT_EQ(r.sites.size(), 9u);
}

TEST(DifferentialInequality, ExactOnGrid) {
    const auto& x = lambda2();
    const BigRational d4(4 * x.d);
    for (int j = 0; j <= 20; ++j) {
        const BigRational p(j, 20);
        const BigRational th = x.theta.value(p);
        const BigRational S = x.partial_sum(p);
        const BigRational lhs = -x.theta.derivative(p);
        const BigRational rhs = S == 0 ? BigRational(0) : BigRational(x.n) / S * th * (1 - th) / d4;
        EXPECT_GE(lhs, rhs) << j;
    }
}

TEST(ToRational, ExactForDyadics) {
    EXPECT_EQ(to_rational(0.25), BigRational(1, 4));
    EXPECT_EQ(to_rational(-3.0), BigRational(-3));
    EXPECT_EQ(to_rational(0.0), BigRational(0));
    EXPECT_EQ(static_cast<double>(to_rational(0.1)), 0.1);
}
