#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <random>
#include <unordered_set>

#include "dlab/disorder.hpp"
#include "oracles.hpp"

using dlab::ColumnSite;
using dlab::CouplingField;
using dlab::Distribution;
using dlab::Edge;
using dlab::Shift;
using dlab::Site;

namespace {

Edge random_edge(std::mt19937_64& rng, int d, int extent) {
    Site v(d);
    for (int i = 0; i < d; ++i) v[i] = static_cast<int>(rng() % static_cast<unsigned>(2 * extent + 1)) - extent;
    const int k = static_cast<int>(rng() % 21) - 10;
    const int axis = 1 + static_cast<int>(rng() % static_cast<unsigned>(d + 1));
    return Edge{ColumnSite{v, k}, axis};
}

Shift random_small_shift(std::mt19937_64& rng, int d, int extent) {
    Shift t(d);
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
        Site v(d);
        for (int j = 0; j < d; ++j) v[j] = static_cast<int>(rng() % static_cast<unsigned>(2 * extent + 1)) - extent;
        t.set(v, static_cast<int>(rng() % 9) - 4);
    }
    return t;
}

}  // namespace

TEST(Distribution, Widths) {
    EXPECT_DOUBLE_EQ(Distribution::uniform(1, 2).width(), 1.0);
    EXPECT_DOUBLE_EQ(Distribution::point(3).width(), 0.0);
    EXPECT_DOUBLE_EQ(Distribution::relu_gauss(0.5, 2).width(), 0.5);
}

TEST(Distribution, ReluGaussIsHalfLipschitzInTheGaussian) {
    const auto nu = Distribution::relu_gauss(0.5, 2);
    double worst = 0;
    for (int i = 1; i < 2000; ++i) {
        const double u1 = i / 2000.0, u2 = (i + 0.5) / 2000.0;
        const double dz = dlab::normal_quantile(u2) - dlab::normal_quantile(u1);
        worst = std::max(worst, (nu.quantile(u2) - nu.quantile(u1)) / dz);
    }
    EXPECT_LE(worst, 0.5 + 1e-9);
    EXPECT_GT(worst, 0.49);
    EXPECT_DOUBLE_EQ(nu.min_support(), 2.0);
}

TEST(Distribution, ParseRoundTrip) {
    for (const std::string s : {"uniform:1,2", "point:0.7", "relugauss:0.5,2"}) {
        const auto nu = Distribution::parse(s);
        EXPECT_EQ(nu.spec(), s);
        EXPECT_EQ(Distribution::parse(nu.spec()), nu);
    }
    for (const std::string bad : {"uniform:2,1", "uniform:1", "point:-1", "gauss:1,2", "uniform:1,2,", "relugauss:0,1", ""})
        EXPECT_THROW(Distribution::parse(bad), std::invalid_argument) << bad;
}

TEST(Distribution, NormalQuantileMatchesBoost) {
    const boost::math::normal_distribution<double> N01;
    for (double u : {1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-9})
        EXPECT_NEAR(dlab::normal_quantile(u), boost::math::quantile(N01, u), 1e-9) << u;
    EXPECT_THROW(dlab::normal_quantile(0.0), std::domain_error);
    EXPECT_THROW(dlab::normal_quantile(1.0), std::domain_error);
}

TEST(Kappa, Examples) {
    const auto u12 = Distribution::uniform(1, 2);
    EXPECT_NEAR(dlab::kappa(u12, u12, 3), 7.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(dlab::kappa(Distribution::point(1), Distribution::point(1), 5), 0.0);
    const auto u89 = Distribution::uniform(8, 9);
    EXPECT_NEAR(dlab::kappa(u89, u89, 3), 0.036458333333333336, 1e-15);
    EXPECT_NEAR(dlab::kappa(u89, u89, 3), oracle::kappa(1, 1, 8, 8, 3), 1e-15);
    EXPECT_THROW(dlab::kappa(Distribution::point(0), u12, 3), dlab::ZeroSupport);
}

TEST(Kappa, MatchesFormulaOnRandomPairs) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.1, 5);
    for (int i = 0; i < 200; ++i) {
        const double a = U(rng), b = a + U(rng), s = U(rng), c = U(rng);
        const auto par = Distribution::uniform(a, b);
        const auto perp = Distribution::relu_gauss(s, c);
        const int d = 1 + i % 4;
        EXPECT_NEAR(dlab::kappa(par, perp, d), oracle::kappa(b - a, s, a, c, d), 1e-9);
    }
}

TEST(Condition, Examples) {
    const auto p = dlab::check_condition(Distribution::point(1), Distribution::point(2), 3, 0.01);
    EXPECT_DOUBLE_EQ(p.lhs, 0.0);
    EXPECT_TRUE(p.satisfied);

    const auto u12 = Distribution::uniform(1, 2);
    const auto r = dlab::check_condition(u12, u12, 3, 1.0);
    EXPECT_NEAR(r.lhs, 14.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.rhs, 4.0 / (std::log(4.0) * std::log(4.0)), 1e-12);
    EXPECT_NEAR(r.rhs, 2.0813689810056077, 1e-12);
    EXPECT_FALSE(r.satisfied);

    const auto u100 = Distribution::uniform(100, 101);
    EXPECT_TRUE(dlab::check_condition(u100, u100, 3, 1.0).satisfied);
}

TEST(Field, Deterministic) {
    const CouplingField f(5, Distribution::uniform(1, 2), Distribution::uniform(1, 2), 2);
    const CouplingField g(5, Distribution::uniform(1, 2), Distribution::uniform(1, 2), 2);
    std::mt19937_64 rng(22);
    for (int i = 0; i < 1000; ++i) {
        const auto e = random_edge(rng, 2, 6);
        EXPECT_EQ(f.sample_edge(e), f.sample_edge(e));
        EXPECT_EQ(f.sample_edge(e), g.sample_edge(e));
        EXPECT_GE(f.sample_edge(e), 1.0);
        EXPECT_LT(f.sample_edge(e), 2.0);
    }
}

TEST(Field, PointMassIsConstant) {
    const CouplingField f(9, Distribution::point(0.75), Distribution::point(1.5), 3);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
        const auto e = random_edge(rng, 3, 8);
        EXPECT_EQ(f.sample_edge(e), e.axis == 4 ? 0.75 : 1.5);
    }
}

TEST(Field, NoCollisionsOverAMillionPairs) {
    const CouplingField f(1, Distribution::uniform(1, 2), Distribution::uniform(1, 2), 2);
    std::int64_t collisions = 0;
    for (int i = 0; i < 1000000; ++i) {
        const Edge a{ColumnSite{Site{i % 1000, i / 1000}, 0}, 3};
        const Edge b{ColumnSite{Site{i % 1000, i / 1000}, 1}, 1};
        if (f.sample_edge(a) == f.sample_edge(b)) ++collisions;
    }
    EXPECT_EQ(collisions, 0);
}

TEST(Field, ParallelAndPerpendicularDrawFromTheirOwnLaws) {
    const CouplingField f(3, Distribution::uniform(8, 9), Distribution::uniform(2, 3), 2);
    double par = 0, perp = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        par += f.sample_edge(Edge{ColumnSite{Site{i, 0}, 0}, 3});
        perp += f.sample_edge(Edge{ColumnSite{Site{i, 0}, 0}, 1});
    }
    EXPECT_NEAR(par / n, 8.5, 0.01);
    EXPECT_NEAR(perp / n, 2.5, 0.01);
}

TEST(ShiftAction, ZeroShiftIsIdentity) {
    const CouplingField f(4, Distribution::uniform(1, 2), Distribution::uniform(1, 2), 2);
    const auto g = f.shifted(Shift(2));
    std::mt19937_64 rng(24);
    for (int i = 0; i < 500; ++i) {
        const auto e = random_edge(rng, 2, 5);
        EXPECT_EQ(f.sample_edge(e), g.sample_edge(e));
    }
}

TEST(ShiftAction, ParallelColumnMovesByTau) {
    const CouplingField f(4, Distribution::uniform(1, 2), Distribution::uniform(1, 2), 2);
    Shift t(2);
    t.set(Site{1, 0}, 3);
    const auto g = f.shifted(t);
    for (int k = -5; k <= 5; ++k)
        EXPECT_EQ(g.sample_edge(Edge{ColumnSite{Site{1, 0}, k}, 3}), f.sample_edge(Edge{ColumnSite{Site{1, 0}, k + 3}, 3}));
}

TEST(ShiftAction, CompositionAndIotaIndependence) {
    const CouplingField f(6, Distribution::uniform(1, 2), Distribution::relu_gauss(0.5, 1), 2);
    std::mt19937_64 rng(25);
    for (int i = 0; i < 1000; ++i) {
        const auto t1 = random_small_shift(rng, 2, 3);
        const auto t2 = random_small_shift(rng, 2, 3);
        const auto e = random_edge(rng, 2, 3);
        ASSERT_EQ(f.shifted(t1).shifted(t2).sample_edge(e), f.shifted(t1 + t2).sample_edge(e));
    }
    int tested = 0;
    while (tested < 1000) {
        auto t = random_small_shift(rng, 2, 2);
        auto e = random_edge(rng, 2, 2);
        if (e.axis == 3) continue;
        const Site u = e.base.v, v = e.other().v;
        t.set(v, t(u));
        const auto g = f.shifted(t);
        const ColumnSite lo_u{u, e.base.k + t(v)}, lo_v{v, e.base.k + t(v)};
        ASSERT_EQ(g.sample_edge(e), f.sample_edge(Edge::between(lo_u, lo_v)));
        ASSERT_EQ(g.sample_edge(e), f.sample_edge(Edge::between({u, e.base.k + t(u)}, {v, e.base.k + t(u)})));
        ++tested;
    }
}

TEST(FixedPoint, RoundTripAndOverflow) {
    EXPECT_EQ(dlab::to_fixed(1.0), std::int64_t{1} << 32);
    EXPECT_EQ(dlab::to_fixed(0.0), 0);
    EXPECT_NEAR(dlab::from_fixed(dlab::to_fixed(8.25)), 8.25, 1e-12);
    EXPECT_THROW(dlab::to_fixed(1e300), dlab::CapacityOverflow);
    EXPECT_THROW(dlab::to_fixed(-1.0), dlab::CapacityOverflow);
}
