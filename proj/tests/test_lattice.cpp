#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "orthant/lattice.hpp"

using namespace orthant;

// Known-answer vectors produced by numpy.random.Philox (counter adjusted for
// numpy's pre-increment); the all-zero case is the published Random123 answer.
TEST(Philox, KnownAnswers) {
    struct Kat {
        Philox4x64::Key key;
        Philox4x64::Counter ctr;
        Philox4x64::Counter out;
    };
    const Kat kats[] = {
        {{0, 0}, {0, 0, 0, 0}, {0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL}},
        {{42, 2}, {5, 0xfffffffffffffffdULL, 0, 0},
         {0x4a0964e82217c862ULL, 0x899e3e27bb557771ULL, 0x90584243855d773bULL, 0xa76179862328e498ULL}},
        {{~0ULL, ~0ULL}, {~0ULL, ~0ULL, ~0ULL, ~0ULL},
         {0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL}},
        {{0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
         {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0x03707344a4093822ULL, 0x299f31d0082efa98ULL},
         {0x8bcf4e00734e4ad5ULL, 0x25c59247fa37886cULL, 0xef70b98f34167d34ULL, 0x512312e12114a1fdULL}},
        {{7, 3}, {~0ULL, 0, 0xfffffffffffffffeULL, 1},
         {0xecdfae38d64e1d5fULL, 0x52c5b2a20a9fe172ULL, 0x087f9db58c6ede98ULL, 0x4b5bc7af12a194ceULL}},
    };
    for (const auto& k : kats) EXPECT_EQ(Philox4x64::apply(k.ctr, k.key), k.out);
}

TEST(SiteField, UniformMatchesGeneratorWord) {
    const SiteField f(42, 2);
    const Vertex v{5, -3};
    const auto word = Philox4x64::apply({5, 0xfffffffffffffffdULL, 0, 0}, {42, 2})[0];
    EXPECT_EQ(f.uniform(v), static_cast<double>(word >> 11) * 0x1.0p-53);
}

TEST(SiteField, EndpointsAreCertain) {
    const SiteField f(9, 3);
    for (int x = -5; x <= 5; ++x) {
        const Vertex v{x, -x, 2 * x};
        EXPECT_FALSE(sample_site(f, v, 0.0));
        EXPECT_TRUE(sample_site(f, v, 1.0));
    }
}

TEST(SiteField, DeterministicAndMonotone) {
    const SiteField a(42, 2), b(42, 2);
    for (int x = -20; x <= 20; ++x)
        for (int y = -20; y <= 20; ++y) {
            const Vertex v{x, y};
            EXPECT_EQ(a.uniform(v), b.uniform(v));
            EXPECT_LE(a.is_one(v, 0.6), a.is_one(v, 0.7));
        }
    EXPECT_LE(a.is_one({0, 0}, 0.6), a.is_one({0, 0}, 0.7));
}

TEST(SiteField, DimensionIsPartOfTheKey) {
    const SiteField two(5, 2), three(5, 3);
    int same = 0;
    for (int x = 0; x < 100; ++x) same += two.uniform(Vertex{x, 0}) == three.uniform(Vertex{x, 0, 0});
    EXPECT_LT(same, 2);
}

TEST(SiteField, EmpiricalMarginal) {
    const Vertex v{3, -1};
    const int seeds = 100000;
    for (double p : {0.1, 0.5, 0.83}) {
        int ones = 0;
        for (int s = 0; s < seeds; ++s) ones += sample_site(SiteField(derive_seed(77, 1, s), 2), v, p);
        const double sigma = std::sqrt(p * (1 - p) / seeds);
        EXPECT_LT(std::fabs(ones / double(seeds) - p), 4 * sigma) << p;
    }
}

TEST(SiteField, RejectsBadDimension) {
    EXPECT_THROW(SiteField(1, 1), Error);
    EXPECT_THROW(SiteField(1, 5), Error);
}

TEST(OutNeighbors, Definitions) {
    // find sites with each value
    const SiteField f(3, 2);
    Vertex one_site(2), zero_site(2);
    bool got1 = false, got0 = false;
    for (int x = 0; x < 50 && !(got1 && got0); ++x) {
        const Vertex v{x, 0};
        if (f.is_one(v, 0.5) && !got1) one_site = v, got1 = true;
        if (!f.is_one(v, 0.5) && !got0) zero_site = v, got0 = true;
    }
    ASSERT_TRUE(got1 && got0);
    auto o1 = out_neighbors(ModelKind::Orthant, f, one_site, 0.5);
    EXPECT_EQ(o1, (std::vector<Vertex>{one_site + Vertex{1, 0}, one_site + Vertex{0, 1}}));
    auto o0 = out_neighbors(ModelKind::Orthant, f, zero_site, 0.5);
    EXPECT_EQ(o0, (std::vector<Vertex>{zero_site - Vertex{1, 0}, zero_site - Vertex{0, 1}}));
    auto h0 = out_neighbors(ModelKind::HalfOrthant, f, zero_site, 0.5);
    EXPECT_EQ(h0.size(), 4u);
    auto h1 = out_neighbors(ModelKind::HalfOrthant, f, one_site, 0.5);
    EXPECT_EQ(h1.size(), 2u);

    // origin at p=1 / p=0
    EXPECT_EQ(out_neighbors(ModelKind::Orthant, f, Vertex{0, 0}, 1.0), (std::vector<Vertex>{{1, 0}, {0, 1}}));
    EXPECT_EQ(out_neighbors(ModelKind::HalfOrthant, f, Vertex{0, 0}, 0.0),
              (std::vector<Vertex>{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
    for (int x = -3; x <= 3; ++x) EXPECT_EQ(out_neighbors(ModelKind::HalfOrthant, f, Vertex{x, 1}, 1.0).size(), 2u);
}

TEST(OutNeighbors, HalfOrthantEdgesShrinkWithP) {
    const SiteField f(11, 3);
    for (int x = -4; x <= 4; ++x)
        for (int y = -4; y <= 4; ++y) {
            const Vertex v{x, y, x - y};
            auto lo = out_neighbors(ModelKind::HalfOrthant, f, v, 0.3);
            auto hi = out_neighbors(ModelKind::HalfOrthant, f, v, 0.8);
            for (const auto& w : hi) EXPECT_NE(std::find(lo.begin(), lo.end(), w), lo.end());
        }
}

TEST(Flip, InvolutionAndLocality) {
    const SiteField f(5, 2);
    const Vertex pivot{1, 2};
    const auto once = flip(f, pivot);
    const auto twice = flip(once, pivot);
    for (int x = -3; x <= 3; ++x)
        for (int y = -3; y <= 3; ++y) {
            const Vertex v{x, y};
            EXPECT_EQ(twice.is_one(v, 0.4), f.is_one(v, 0.4));
            if (v != pivot) EXPECT_EQ(once.is_one(v, 0.4), f.is_one(v, 0.4));
        }
    EXPECT_NE(once.is_one(pivot, 0.4), f.is_one(pivot, 0.4));
    EXPECT_FALSE(flip(f, pivot).is_one(pivot, 1.0));
}

TEST(Vertex, LexicographicOrder) {
    EXPECT_LT((Vertex{-1, 5}), (Vertex{0, -5}));
    EXPECT_LT((Vertex{0, -5}), (Vertex{0, -4}));
    EXPECT_EQ((Vertex{1, 2} + Vertex{3, -4}), (Vertex{4, -2}));
}

TEST(CachedSiteField, AgreesUnderConcurrentUse) {
    const SiteField base(123, 2);
    const CachedSiteField cache(base, 10);
    std::vector<std::thread> pool;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&] {
            for (int x = -12; x <= 12; ++x)
                for (int y = -12; y <= 12; ++y)
                    if (cache.uniform(Vertex{x, y}) != base.uniform(Vertex{x, y})) ++mismatches;
        });
    for (auto& th : pool) th.join();
    EXPECT_EQ(mismatches.load(), 0);
}

TEST(DeriveSeed, PureAndSpread) {
    EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}
