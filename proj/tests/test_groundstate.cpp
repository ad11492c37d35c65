#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "dlab/groundstate.hpp"
#include "oracles.hpp"

using dlab::CouplingField;
using dlab::Distribution;
using dlab::Energy;
using dlab::Shift;
using dlab::Site;
using dlab::SiteSet;
using dlab::SpinConfiguration;

namespace {

SiteSet segment(int lo, int hi) {
    std::vector<Site> pts;
    for (int x = lo; x <= hi; ++x) pts.push_back(Site{x});
    return oracle::set_of(1, pts);
}

SiteSet square(int r) {
    std::vector<Site> pts;
    for (int x = -r; x <= r; ++x)
        for (int y = -r; y <= r; ++y) pts.push_back(Site{x, y});
    return oracle::set_of(2, pts);
}

CouplingField uniform_field(std::uint64_t seed, int d, double a = 1, double b = 2) {
    return CouplingField(seed, Distribution::uniform(a, b), Distribution::uniform(a, b), d);
}

SpinConfiguration from_spins(const SiteSet& lambda, int M, const std::vector<int>& spins) {
    SpinConfiguration s(lambda, M);
    for (std::size_t i = 0; i < spins.size(); ++i) s.set_index(i, spins[i]);
    return s;
}

}  // namespace

TEST(Hamiltonian, DobrushinWithPointMass) {
    const CouplingField f(1, Distribution::point(1.5), Distribution::point(0.5), 1);
    const auto lam = segment(0, 0);
    EXPECT_DOUBLE_EQ(dlab::hamiltonian(SpinConfiguration(lam, 3), f), 3.0);
    const CouplingField g(1, Distribution::point(1.5), Distribution::point(0.5), 2);
    EXPECT_DOUBLE_EQ(dlab::hamiltonian(SpinConfiguration(square(1), 2), g), 2 * 1.5 * 9);
}

TEST(Hamiltonian, MatchesNaiveSumOnRandomConfigurations) {
    std::mt19937_64 rng(51);
    for (int i = 0; i < 200; ++i) {
        const int d = 1 + i % 2;
        const auto lam = d == 1 ? segment(-1, 1) : square(1);
        const auto f = uniform_field(static_cast<std::uint64_t>(i), d);
        SpinConfiguration s(lam, 2);
        std::vector<int> spins(s.size());
        for (auto& x : spins) x = rng() % 2 ? 1 : -1;
        s = from_spins(lam, 2, spins);
        ASSERT_NEAR(dlab::hamiltonian(s, f), oracle::naive_hamiltonian(f, lam.members(), 2, spins), 1e-6);
    }
}

TEST(Hamiltonian, FlipDeltaIsLocal) {
    std::mt19937_64 rng(52);
    const auto f = uniform_field(3, 2);
    const auto lam = square(1);
    SpinConfiguration s(lam, 2);
    for (int i = 0; i < 200; ++i) {
        const Site v = lam.members()[rng() % lam.size()];
        const int k = static_cast<int>(rng() % 5) - 2;
        const Energy before = dlab::hamiltonian_scaled(s, f);
        const Energy delta = dlab::flip_delta_scaled(s, f, {{v, k}});
        s.flip(v, k);
        ASSERT_EQ(dlab::hamiltonian_scaled(s, f) - before, delta);
    }
}

TEST(CylinderEdges, EachEdgeOnce) {
    const auto lam = square(1);
    const auto edges = dlab::cylinder_edges(lam, 2);
    std::set<dlab::Edge> uniq(edges.begin(), edges.end());
    EXPECT_EQ(uniq.size(), edges.size());
    // 9 columns x 6 vertical edges, plus 12 inner and 12 outer horizontal edges per layer.
    EXPECT_EQ(edges.size(), 9u * 6 + 5 * (12 + 12));
}

TEST(GroundState, PointMassIsFlat) {
    const CouplingField f(1, Distribution::point(2), Distribution::point(1), 2);
    const auto lam = square(2);
    const auto g = dlab::ground_state(f, lam, 4);
    EXPECT_EQ(g.config, SpinConfiguration(lam, 4));
    EXPECT_DOUBLE_EQ(g.energy, 2 * 2.0 * 25);
    EXPECT_TRUE(g.certificate_ok);
}

TEST(GroundState, SingleColumnHandEnumeration) {
    // d=1, Lambda={0}, M=1: eight assignments of (k=-1, 0, 1).
    const auto f = uniform_field(17, 1);
    const auto lam = segment(0, 0);
    const auto bf = oracle::brute_force(f, lam.members(), 1);
    const auto g = dlab::ground_state(f, lam, 1);
    EXPECT_NEAR(g.energy, bf.energy, 1e-9);
    EXPECT_EQ(g.config, from_spins(lam, 1, bf.spins));
    EXPECT_EQ(dlab::brute_force_ground(f, lam, 1).energy_scaled, g.energy_scaled);
}

TEST(GroundState, AgreesWithIndependentBruteForce) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto f = uniform_field(seed, 1);
        const auto lam = segment(-1, 1);
        const auto bf = oracle::brute_force(f, lam.members(), 2);
        const auto g = dlab::ground_state(f, lam, 2);
        ASSERT_NEAR(g.energy, bf.energy, 1e-6) << seed;
        EXPECT_EQ(g.config, from_spins(lam, 2, bf.spins)) << seed;
    }
}

TEST(GroundState, AgreesWithLibraryBruteForceInTwoDimensions) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto f = uniform_field(seed, 2, 0.2, 3);
        std::vector<Site> pts{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
        const auto lam = oracle::set_of(2, pts);
        const auto bf = dlab::brute_force_ground(f, lam, 2);
        const auto g = dlab::ground_state(f, lam, 2);
        ASSERT_EQ(g.energy_scaled, bf.energy_scaled);
        EXPECT_EQ(dlab::hamiltonian_scaled(g.config, f), g.energy_scaled);
    }
}

TEST(GroundState, CertificateSurvivesTallerCylinder) {
    int passing = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto f = uniform_field(seed, 2, 8, 9);
        const auto lam = square(1);
        const auto g = dlab::ground_state(f, lam, 4);
        if (!g.certificate_ok) continue;
        ++passing;
        const auto h = dlab::ground_state(f, lam, 6);
        EXPECT_EQ(h.energy_scaled, g.energy_scaled);
        EXPECT_EQ(h.config, g.config.with_height(6));
    }
    EXPECT_GT(passing, 20);
}

TEST(GroundState, TruncationCertificateThreshold) {
    const CouplingField f(1, Distribution::uniform(1, 2), Distribution::uniform(3, 4), 2);
    const Energy one = Energy{1} << 32;
    // 2 * 1 * 4 + 2 * 3 * (2 + 1) = 26
    EXPECT_TRUE(dlab::truncation_certificate(25 * one, f, 4, 2));
    EXPECT_FALSE(dlab::truncation_certificate(26 * one, f, 4, 2));
}

TEST(GroundState, SolvePolicyGrowsM) {
    const auto f = uniform_field(5, 2, 8, 9);
    const auto g = dlab::solve_ground(f, square(1), {2, 8});
    EXPECT_TRUE(g.certificate_ok);
    EXPECT_GE(g.M_used, 2);
    EXPECT_LE(g.M_used, 8);
}

TEST(GroundState, BruteForceRefusesLargeCylinders) {
    EXPECT_THROW(dlab::brute_force_ground(uniform_field(1, 2), square(1), 2), dlab::ScaleExceeded);
}

TEST(Layering, Examples) {
    const auto lam = square(1);
    SpinConfiguration s(lam, 3);
    const auto A = oracle::set_of(2, {Site{0, 0}, Site{0, 1}, Site{1, 1}});
    EXPECT_EQ(dlab::layering(s, A), (dlab::LayeringCount{3, 0}));
    EXPECT_EQ(dlab::layering(s, SiteSet(lam.window())), (dlab::LayeringCount{0, 0}));
    // Column (0,0) from bottom: -,-,-,+,-,+,+ has three sign changes.
    s.set(Site{0, 0}, 0, 1);
    s.set(Site{0, 0}, 1, -1);
    const auto L = dlab::layering(s, A);
    EXPECT_EQ(L.parallel, 3 + 2);
}

TEST(RestrictedGround, UnboundedEqualsGround) {
    const auto f = uniform_field(8, 1);
    const auto lam = segment(-1, 1);
    const auto A = oracle::set_of(1, {Site{0}});
    const auto r = dlab::restricted_ground(f, lam, A, dlab::kUnbounded, dlab::kUnbounded, 2);
    EXPECT_EQ(r.energy_scaled, dlab::ground_state(f, lam, 2).energy_scaled);
}

TEST(RestrictedGround, TightBoundsNeverBeatGround) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = uniform_field(seed, 1, 0.1, 3);
        const auto lam = segment(-1, 1);
        const auto r = dlab::restricted_ground(f, lam, lam, 3, 0, 2);
        EXPECT_GE(r.energy_scaled, dlab::ground_state(f, lam, 2).energy_scaled);
        EXPECT_EQ(dlab::layering(r.config, lam).perpendicular, 0);
    }
    EXPECT_THROW(dlab::restricted_ground(uniform_field(1, 1), segment(-1, 1), segment(-1, 1), 2, 0, 1),
                 dlab::InfeasibleBounds);
}

TEST(RestrictedGround, MatchesFilteredBruteForce) {
    const auto lam = segment(-1, 1);
    const auto A = oracle::set_of(1, {Site{0}, Site{1}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = uniform_field(seed, 1, 0.1, 3);
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> spins(9);
        for (int mask = 0; mask < 512; ++mask) {
            for (int i = 0; i < 9; ++i) spins[static_cast<std::size_t>(i)] = (mask >> i & 1) ? 1 : -1;
            const auto L = dlab::layering(from_spins(lam, 1, spins), A);
            if (L.parallel > 2 || L.perpendicular > 1) continue;
            best = std::min(best, oracle::naive_hamiltonian(f, lam.members(), 1, spins));
        }
        EXPECT_NEAR(dlab::restricted_ground(f, lam, A, 2, 1, 1).energy, best, 1e-6);
    }
}

TEST(EnergyGap, IdentityAntisymmetryTelescoping) {
    const auto f = uniform_field(9, 2, 2, 3);
    const auto lam = square(1);
    const dlab::MPolicy fixed{6, 6};
    const auto t1 = Shift::indicator({Site{0, 0}});
    const auto t2 = Shift::indicator({Site{0, 0}, Site{1, 0}}, -2);
    const auto t3 = Shift::indicator({Site{-1, 1}}, 3);
    EXPECT_EQ(dlab::energy_gap(f, lam, t1, t1, fixed).gap_scaled, 0);
    const Energy g12 = dlab::energy_gap(f, lam, t1, t2, fixed).gap_scaled;
    const Energy g21 = dlab::energy_gap(f, lam, t2, t1, fixed).gap_scaled;
    const Energy g23 = dlab::energy_gap(f, lam, t2, t3, fixed).gap_scaled;
    const Energy g13 = dlab::energy_gap(f, lam, t1, t3, fixed).gap_scaled;
    EXPECT_EQ(g12, -g21);
    EXPECT_EQ(g13, g12 + g23);
}

TEST(EnergyGap, ShiftOutsideLambdaChangesNothingForPointMass) {
    const CouplingField f(2, Distribution::point(1), Distribution::point(1), 2);
    const auto g = dlab::energy_gap(f, square(1), Shift(2), Shift::indicator({Site{5, 5}}, 4));
    EXPECT_EQ(g.gap_scaled, 0);
    EXPECT_TRUE(g.trusted);
}

TEST(InstanceJson, DescribesTheCylinder) {
    const auto f = uniform_field(4, 1);
    const auto j = nlohmann::json::parse(dlab::instance_json(f, segment(0, 1), 2, true));
    EXPECT_EQ(j["d"], 1);
    EXPECT_EQ(j["M"], 2);
    EXPECT_EQ(j["nu_par"], "uniform:1,2");
    EXPECT_EQ(j["lambda"].size(), 2u);
    EXPECT_EQ(j["capacities"].size(), dlab::cylinder_edges(segment(0, 1), 2).size());
}

TEST(SpinConfiguration, HeightChangesAndRestriction) {
    const auto lam = square(1);
    SpinConfiguration s(lam, 2);
    s.set(Site{0, 0}, 2, -1);
    const auto t = s.with_height(4);
    EXPECT_EQ(t.at(Site{0, 0}, 2), -1);
    EXPECT_EQ(t.at(Site{0, 0}, 4), 1);
    EXPECT_EQ(t.with_height(2), s);
    const auto r = s.restricted(oracle::set_of(2, {Site{0, 0}}), 2);
    EXPECT_EQ(r.size(), 5u);
    EXPECT_EQ(r.at(Site{0, 0}, 2), -1);
    EXPECT_EQ(s.at(Site{7, 7}, 0), -1);
    EXPECT_EQ(s.at(Site{0, 0}, 9), 1);
}
