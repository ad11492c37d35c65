#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dlab/experiments.hpp"
#include "oracles.hpp"

using dlab::CouplingField;
using dlab::Distribution;
using dlab::Energy;
using dlab::GrainingSpec;
using dlab::Shift;
using dlab::Site;
using dlab::SiteSet;
using dlab::SpinConfiguration;
using dlab::TripMode;

namespace {

SiteSet cube_set(int d, int r) {
    const auto cube = dlab::Box::cube(d, r);
    std::vector<Site> pts;
    for (std::int64_t i = 0; i < cube.size(); ++i) pts.push_back(cube.site(i));
    return oracle::set_of(d, pts);
}

Distribution random_distribution(std::mt19937_64& rng) {
    switch (rng() % 3) {
        case 0: return Distribution::uniform(0.2, 3);
        case 1: return Distribution::relu_gauss(1, 1);
        default: return Distribution::point(1.5);
    }
}

CouplingField random_field(std::mt19937_64& rng, int d) {
    const auto par = random_distribution(rng);
    const auto perp = random_distribution(rng);
    return CouplingField(rng(), par, perp, d);
}

Shift map_sites(const Shift& t, const std::function<Site(const Site&)>& f) {
    Shift out(t.dim());
    for (const auto& [v, x] : t.entries()) out.set(f(v), x);
    return out;
}

Site translate(const Site& v, const Site& by) { return v + by; }

Site reflect(const Site& v) {
    Site w(v.d);
    for (int i = 0; i < v.d; ++i) w[i] = -v[i];
    return w;
}

Site rotate_axes(const Site& v) {
    Site w(v.d);
    for (int i = 0; i < v.d; ++i) w[i] = v[(i + 1) % v.d];
    return w;
}

}  // namespace

TEST(GroundStateProperties, NoSingleFlipOrColumnBlockLowersTheEnergy) {
    std::mt19937_64 rng(71);
    for (int i = 0; i < 30; ++i) {
        const int d = 1 + i % 2;
        const auto f = random_field(rng, d);
        const auto lam = cube_set(d, 1);
        const int M = 3;
        const auto g = dlab::ground_state(f, lam, M);
        for (const Site& v : g.config.columns())
            for (int lo = -M; lo <= M; ++lo) {
                std::vector<dlab::ColumnSite> block;
                for (int hi = lo; hi <= M; ++hi) {
                    block.push_back({v, hi});
                    ASSERT_GE(dlab::flip_delta_scaled(g.config, f, block), 0) << i;
                }
            }
    }
}

TEST(GroundStateProperties, NeverAboveRandomInterfacialConfigurations) {
    std::mt19937_64 rng(72);
    for (int i = 0; i < 30; ++i) {
        const int d = 1 + i % 2;
        const auto f = random_field(rng, d);
        const auto lam = cube_set(d, 1);
        const auto g = dlab::ground_state(f, lam, 3);
        EXPECT_EQ(g.energy_scaled, dlab::hamiltonian_scaled(g.config, f));
        EXPECT_LE(g.energy_scaled, dlab::hamiltonian_scaled(SpinConfiguration(lam, 3), f));
        for (int j = 0; j < 10; ++j)
            EXPECT_LE(g.energy_scaled, dlab::hamiltonian_scaled(dlab::random_interfacial(rng, lam, 3), f));
    }
}

TEST(GroundStateProperties, RestrictedEnergyIsMonotoneInTheBounds) {
    std::mt19937_64 rng(73);
    for (int i = 0; i < 20; ++i) {
        const auto f = random_field(rng, 1);
        const auto lam = cube_set(1, 1);
        const auto A = oracle::set_of(1, {Site{0}, Site{1}});
        const auto ground = dlab::ground_state(f, lam, 2).energy_scaled;
        Energy prev = ground;
        for (std::int64_t b = 8; b >= 0; --b) {
            try {
                const auto r = dlab::restricted_ground(f, lam, A, b, b, 2);
                EXPECT_GE(r.energy_scaled, prev);
                prev = r.energy_scaled;
                const auto lay = dlab::layering(r.config, A);
                EXPECT_LE(lay.parallel, b);
                EXPECT_LE(lay.perpendicular, b);
            } catch (const dlab::InfeasibleBounds&) {
                break;
            }
        }
    }
}

TEST(GroundStateProperties, ConstructedGapMatchesEnergyGap) {
    std::mt19937_64 rng(74);
    const auto E = oracle::set_of(2, {Site{0, 0}});
    const dlab::MPolicy policy{6, 6};
    for (int i = 0; i < 20; ++i) {
        const CouplingField f(rng(), Distribution::uniform(0.2, 3), Distribution::uniform(0.05, 0.3), 2);
        const auto lam = cube_set(2, 2);
        const auto g = dlab::solve_ground(f, lam, policy);
        const auto cs = dlab::construct_shift(g.config, E, f, policy, &g);
        const auto gap = dlab::energy_gap(f, lam, cs.tau, Shift(2), policy);
        EXPECT_EQ(cs.gap_scaled, gap.gap_scaled) << i;
        EXPECT_GE(cs.sigma_gap_scaled, cs.gap_scaled);
    }
}

TEST(ShiftProperties, InvariantsUnderLatticeSymmetries) {
    std::mt19937_64 rng(75);
    for (int i = 0; i < 300; ++i) {
        const int d = 2 + i % 2;
        const auto t = dlab::random_shift(rng, d, 40);
        Site by(d);
        for (int j = 0; j < d; ++j) by[j] = static_cast<int>(rng() % 9) - 4;
        const auto moved = map_sites(t, [&](const Site& v) { return translate(v, by); });
        const auto flipped = map_sites(t, reflect);
        const auto rotated = map_sites(t, rotate_axes);
        for (const Shift* s : {&moved, &flipped, &rotated}) {
            EXPECT_EQ(dlab::tv(*s), dlab::tv(t));
            EXPECT_EQ(dlab::level_components(*s).size(), dlab::level_components(t).size());
        }
        // Symmetries fixing the origin preserve the trip entropy.
        const auto r = dlab::trip_entropy(t, TripMode::Upper).value;
        if (dlab::level_components(t).size() <= 8) {
            const auto ex = dlab::trip_entropy(t, TripMode::Exact).value;
            EXPECT_EQ(dlab::trip_entropy(flipped, TripMode::Exact).value, ex);
            EXPECT_EQ(dlab::trip_entropy(rotated, TripMode::Exact).value, ex);
            EXPECT_LE(ex, r);
        }
    }
}

TEST(ShiftProperties, LemmaRowsHoldOnRandomPairs) {
    std::mt19937_64 rng(76);
    for (int i = 0; i < 300; ++i) {
        const int d = 2 + i % 2;
        const auto a = dlab::random_shift(rng, d, 60);
        const auto b = dlab::random_shift(rng, d, 60);
        for (const auto& row : dlab::shift_lemma_rows(a, b)) ASSERT_TRUE(row.pass) << row.check << " " << a.to_json();
        for (const auto& row : dlab::shift_lemma_rows(-a, a)) ASSERT_TRUE(row.pass) << row.check;
    }
}

TEST(GrainingProperties, GrainingIsIdempotent) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i) {
        const int d = 2 + i % 2;
        const auto t = dlab::random_shift(rng, d, 60);
        for (int N : {2, 4}) {
            const auto g = dlab::grain(t, GrainingSpec::coarse(N));
            EXPECT_EQ(dlab::grain(g, GrainingSpec::coarse(N)), g);
        }
        for (const auto& I : dlab::index_subsets(d, 1 + i % d)) {
            const auto g = dlab::grain(t, GrainingSpec::fine(I));
            EXPECT_EQ(dlab::grain(g, GrainingSpec::fine(I)), g);
        }
    }
}

TEST(GrainingProperties, CoarseGrainingCommutesWithCellTranslations) {
    std::mt19937_64 rng(78);
    for (int i = 0; i < 200; ++i) {
        const int d = 2 + i % 2;
        const auto t = dlab::random_shift(rng, d, 60);
        const int N = 1 << (1 + i % 2);
        Site by(d);
        for (int j = 0; j < d; ++j) by[j] = N * (static_cast<int>(rng() % 5) - 2);
        const auto shift_by = [&](const Site& v) { return translate(v, by); };
        EXPECT_EQ(dlab::grain(map_sites(t, shift_by), GrainingSpec::coarse(N)),
                  map_sites(dlab::grain(t, GrainingSpec::coarse(N)), shift_by));
    }
}

TEST(GrainingProperties, GrainedValuesStayWithinTheOriginalRange) {
    std::mt19937_64 rng(79);
    for (int i = 0; i < 200; ++i) {
        const int d = 2 + i % 2;
        const auto t = dlab::random_shift(rng, d, 60);
        int lo = 0, hi = 0;
        for (const auto& [v, x] : t.entries()) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        for (const auto& [v, x] : dlab::grain(t, GrainingSpec::coarse(2)).entries()) {
            EXPECT_GE(x, lo);
            EXPECT_LE(x, hi);
        }
    }
}

TEST(ReductionProperties, ReducedConfigurationsAreFixedPoints) {
    std::mt19937_64 rng(80);
    for (int i = 0; i < 200; ++i) {
        const auto lam = i % 2 ? cube_set(1, 2) : cube_set(2, 1);
        const auto r = dlab::no_overhang_reduce(dlab::random_interfacial(rng, lam, 3, 7));
        const auto again = dlab::no_overhang_reduce(r.config);
        EXPECT_EQ(again.config, r.config);
        EXPECT_EQ(again.steps, 0);
        for (const auto& c : dlab::profile(r.config).columns()) EXPECT_EQ(c.osc.size(), 1u);
    }
}

TEST(ReductionProperties, PerpendicularWallNeverGrows) {
    std::mt19937_64 rng(81);
    for (int i = 0; i < 300; ++i) {
        const auto lam = cube_set(2, 1);
        const auto s = dlab::random_interfacial(rng, lam, 4, 9);
        const auto r = dlab::no_overhang_reduce(s);
        EXPECT_LE(dlab::perpendicular_wall(r.config), dlab::perpendicular_wall(s));
    }
}
