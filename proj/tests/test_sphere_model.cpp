#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mcob/sphere_model.hpp"

using namespace mcob;

namespace {

Stimulus linear_stimulus(const Grid& grid) {
    return Stimulus(grid, [](double x) { return (x + 2.0) / 4.0; }, 0.25, 0.75, 0.25);
}

struct SmallRun {
    SphereSetup setup;
    Field1D u0;
    Stimulus g;
    NonlocalRun res;
};

// Coarse version of the default preset, shared by the run-level tests.
const SmallRun& small_run() {
    static const SmallRun run = [] {
        SphereSetup s;
        s.n_cells = 400;
        std::vector<double> probes;
        for (int k = 1; k <= 20; ++k) probes.push_back(0.0025 * k);
        const Field1D u0 = s.initial();
        const Stimulus g = s.stimulus();
        return SmallRun{s, u0, g, solve_sphere(u0, g, 0.05, 1e-4, probes)};
    }();
    return run;
}

}  // namespace

TEST(Stimulus, RejectsValuesOutsideBounds) {
    Grid grid(-1.0, 1.0, 20);
    EXPECT_THROW(Stimulus(grid, [](double x) { return x; }, 0.1, 0.9), Error);
    EXPECT_THROW(Stimulus(grid, [](double) { return 0.5; }, 0.6, 0.4), Error);
}

TEST(Stimulus, RejectsSlopeBelowKappa) {
    Grid grid(-1.0, 1.0, 20);
    EXPECT_THROW(Stimulus(grid, [](double x) { return 0.5 + 0.1 * x; }, 0.4, 0.6, 0.2), Error);
    EXPECT_NO_THROW(Stimulus(grid, [](double x) { return 0.5 + 0.1 * x; }, 0.4, 0.6, 0.1));
}

TEST(LambdaOfSupport, ConstantStimulus) {
    Grid grid(-1.0, 1.0, 100);
    Stimulus g(grid, [](double) { return 0.5; }, 0.5, 0.5);
    const auto s = detect_support(Field1D::sample(grid, [](double x) { return x > 0.3 ? 1.0 : 0.0; }));
    EXPECT_DOUBLE_EQ(lambda_of_support(g, s), 0.5);
}

TEST(LambdaOfSupport, LinearStimulusOnUnitInterval) {
    Grid grid(-1.0, 2.0, 300);
    Stimulus g(grid, [](double x) { return x + 2.0; }, 1.0, 4.0);
    std::vector<double> v(grid.n_nodes(), 0.0);
    for (std::size_t i = 100; i <= 200; ++i) v[i] = 1.0;
    EXPECT_NEAR(lambda_of_support(g, detect_support(Field1D(grid, v))), 2.5, 1e-13);
}

TEST(LambdaOfSupport, EmptySupportIsDegenerate) {
    Grid grid(-1.0, 1.0, 10);
    try {
        lambda_of_support(linear_stimulus(grid), SupportSet{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSupport);
    }
}

TEST(SOfT, LinearInversion) {
    Grid grid(-1.0, 1.0, 200);
    const auto g = linear_stimulus(grid);
    EXPECT_NEAR(s_of_t(g, 0.5), 0.0, 1e-12);
    EXPECT_NEAR(s_of_t(g, g(0.3)), 0.3, 1e-12);
}

TEST(SOfT, OutOfRange) {
    Grid grid(-1.0, 1.0, 200);
    const auto g = linear_stimulus(grid);
    try {
        s_of_t(g, 0.8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
    Stimulus flat(grid, [](double) { return 0.5; }, 0.5, 0.5);
    EXPECT_THROW(s_of_t(flat, 0.5), Error);
}

TEST(SpherePreset, NamesAndAmplitude) {
    const auto a = sphere_preset("assumption-3.1-default");
    const auto b = sphere_preset("default");
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_DOUBLE_EQ(a.gamma, -0.2);
    EXPECT_NEAR(a.compatible_amplitude(), 0.130208333333, 1e-12);
    EXPECT_THROW(sphere_preset("nope"), Error);
}

TEST(SolveNonlocal, FullSupportStartsAtMeanOfG) {
    Grid grid(-1.0, 1.0, 200);
    const auto g = linear_stimulus(grid);
    const auto u0 = Field1D::sample(grid, [](double x) { return 1.0 + 0.5 * x * x; });
    const auto res = solve_sphere(u0, g, 1e-3, 1e-4, std::vector<double>{1e-3});
    EXPECT_NEAR(res.run.trace.rows.front().lambda, 0.5, 1e-14);
}

TEST(SolveNonlocal, RejectsZeroMass) {
    Grid grid(-1.0, 1.0, 50);
    EXPECT_THROW(solve_sphere(Field1D(grid), linear_stimulus(grid), 0.01, 1e-3, std::vector<double>{0.01}), Error);
}

TEST(SphereRun, MassIsConserved) {
    const auto& r = small_run();
    const double m0 = r.res.run.trace.rows.front().mass;
    EXPECT_NEAR(m0, 2.0 * std::numbers::pi * integrate(r.u0), 1e-15);
    for (const auto& row : r.res.run.trace.rows) EXPECT_NEAR(row.mass / m0, 1.0, 1e-6);
}

TEST(SphereRun, StaysMonotone) {
    const auto& r = small_run();
    const auto rep = monotonicity_check(r.res.run.snapshots, 1e-8 * r.u0.max_value());
    EXPECT_TRUE(rep.monotone) << rep.worst_slope;
}

TEST(SphereRun, SideConditionHoldsEveryStep) {
    const auto& r = small_run();
    EXPECT_LE(r.res.log.max_side_condition, 1e-6);
    EXPECT_EQ(r.res.log.side_condition_violations, 0);
}

TEST(SphereRun, LambdaWithinStimulusBoundsAndSConsistent) {
    const auto& r = small_run();
    for (const auto& row : r.res.run.trace.rows) {
        EXPECT_GE(row.lambda, r.g.g0());
        EXPECT_LE(row.lambda, r.g.g1());
        ASSERT_TRUE(std::isfinite(row.s));
        EXPECT_NEAR(r.g.interpolate_at(row.s), row.lambda, 1e-10);
    }
}

TEST(SphereRun, NondegeneracyMarginsPositive) {
    const auto& r = small_run();
    const double h = r.u0.grid().h();
    const auto nd = nondegeneracy_report(r.u0, r.g, r.res.run.trace, r.res.run.snapshots, 2.0 * h);
    EXPECT_TRUE(nd.hypotheses_met);
    EXPECT_GT(nd.theta_margin, 0.0);
    EXPECT_GT(nd.c0, 0.0);
    EXPECT_GE(nd.p_bound_margin, 0.0);
    EXPECT_GE(nd.separation_margin, 0.0);
    const double m = nd.mass, M = nd.sup_norm, kappa = r.g.kappa();
    const double pi2 = 2.0 * std::numbers::pi;
    EXPECT_NEAR(nd.delta0, 0.125 * std::min({nd.c0, m / (pi2 * M), kappa * m / (2.0 * pi2 * M)}), 1e-15);
}

TEST(SphereRun, LeftRegionVanishes) {
    const auto& r = small_run();
    std::vector<double> lambdas;
    for (const auto& s : r.res.run.snapshots) {
        auto row = std::find_if(r.res.run.trace.rows.begin(), r.res.run.trace.rows.end(),
                                [&](const TraceRow& x) { return x.t == s.t; });
        lambdas.push_back(row->lambda);
    }
    const auto rep = left_vanishing_check(r.res.run.snapshots, r.g, lambdas, std::vector<double>{0.05, 0.1});
    EXPECT_GT(rep.rectangles_checked, 0);
    EXPECT_EQ(rep.violations, 0);
}

TEST(Monotonicity, ConstantFieldIsMonotone) {
    Grid grid(-1.0, 1.0, 10);
    std::vector<StepResult> snaps{{0.0, Field1D::sample(grid, [](double) { return 2.0; }), {}, 0.0, 0, false}};
    EXPECT_TRUE(monotonicity_check(snaps, 0.0).monotone);
}

TEST(Monotonicity, CorruptedSnapshotIsLocated) {
    const auto& r = small_run();
    std::vector<StepResult> snaps = r.res.run.snapshots;
    auto& v = snaps[3].field.mutable_values();
    std::swap(v[300], v[310]);
    const auto rep = monotonicity_check(snaps, 1e-8);
    EXPECT_FALSE(rep.monotone);
    EXPECT_EQ(rep.snapshot, 3u);
    ASSERT_TRUE(rep.node);
    EXPECT_TRUE(*rep.node == 300 || *rep.node == 309);
}

TEST(Nondegeneracy, ConstantStimulusFlagsHypotheses) {
    Grid grid(-1.0, 1.0, 100);
    Stimulus g(grid, [](double) { return 0.5; }, 0.5, 0.5);
    const auto u0 = Field1D::sample(grid, [](double x) { return x > 0.0 ? x : 0.0; });
    const auto rep = nondegeneracy_report(u0, g, FreeBoundaryTrace{}, {});
    EXPECT_FALSE(rep.hypotheses_met);
    EXPECT_TRUE(std::isnan(rep.c0));
}

TEST(Nondegeneracy, FrontBoundAtEqualityScale) {
    // Mass equal to 2 pi |u|_inf puts the bound at p <= 0.
    Grid grid(-1.0, 1.0, 1000);
    const auto u0 = Field1D::sample(grid, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
    const auto rep = nondegeneracy_report(u0, linear_stimulus(grid), FreeBoundaryTrace{}, {});
    EXPECT_NEAR(rep.mass, 2.0 * std::numbers::pi * rep.sup_norm, 2.0 * std::numbers::pi * grid.h());
    EXPECT_NEAR(rep.p_upper_bound, 0.0, grid.h());
}
