#include <cmath>

#include <gtest/gtest.h>

#include "mcob/line_models.hpp"

using namespace mcob;

namespace {

DiracOptions small_dirac(double lambda = 1.0) {
    DiracOptions o;
    o.lambda = lambda;
    o.bootstrap = {1e-6, 2.0, 1500};
    o.t_end = 1e-2;
    o.schedule = TimeSchedule{1e-8, 0.01, 1e-4};
    o.probes = log_spaced(1e-5, 1e-2, 10);
    return o;
}

const DiracRun& unit_run() {
    static const DiracRun run = solve_dirac(small_dirac());
    return run;
}

}  // namespace

TEST(DiracBootstrap, HasUnitMass) {
    for (std::size_t n : {500u, 4000u}) {
        const auto f = DiracBootstrap{1e-6, 6.0, n}.field();
        EXPECT_NEAR(integrate(f), 1.0, 1e-8);
    }
}

TEST(DiracBootstrap, MatchesKernelWhenResolved) {
    const DiracBootstrap b{1e-2, 2.0, 2000};
    const auto f = b.field();
    const double h = f.grid().h();
    for (std::size_t i = 0; i < f.size(); i += 50)
        EXPECT_NEAR(f[i], heat_kernel(f.grid().x(i), 1e-2), h * h * 20.0);
}

TEST(SolveDirac, RejectsTruncationTooSmall) {
    auto o = small_dirac();
    o.bootstrap.radius = 0.3;
    EXPECT_THROW(solve_dirac(o), Error);
}

TEST(SolveDirac, SupportReachingBoundaryIsReported) {
    // The truncation precondition keeps the support off the edge, so widen the guard band.
    auto o = small_dirac();
    o.guard_nodes = 700;
    try {
        solve_dirac(o);
        FAIL() << "expected domain-too-small";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DomainTooSmall);
    }
}

TEST(SolveDirac, BelowHeatEvolution) {
    const auto heat = heat_reference(small_dirac());
    const auto& run = unit_run().run;
    ASSERT_EQ(heat.snapshots.size(), run.snapshots.size());
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const auto m = sandwich_margins(run.snapshots[k].field.values(), heat.snapshots[k].field.values(),
                                        run.snapshots[k].t - 1e-6);
        EXPECT_GE(m.upper, -1e-8);
        EXPECT_GE(m.lower, -1e-8);
    }
}

TEST(SolveDirac, SymmetricSupport) {
    const auto& run = unit_run().run;
    for (const auto& s : run.snapshots) {
        const double h = s.field.grid().h();
        EXPECT_NEAR(support_radius_left(s.field), support_radius_right(s.field), h);
    }
}

TEST(SolveDirac, BallVanishingHasNoViolations) {
    const auto rep = ball_vanishing_check(unit_run().run.snapshots, 1.0, std::vector<double>{0.02, 0.05});
    EXPECT_EQ(rep.violations, 0);
}

TEST(SupportEnvelope, SubsolutionRadiusFormula) {
    const double t = 1e-4;
    const double expected = std::sqrt(6e-4 * std::log(1.0 / (std::cbrt(4.0 * M_PI) * t)));
    EXPECT_DOUBLE_EQ(subsolution_radius(t), expected);
    EXPECT_NEAR(subsolution_radius(t), 0.070851953917, 1e-11);
    EXPECT_EQ(subsolution_radius(0.5), 0.0);
}

TEST(SupportEnvelope, InnerBelowOuterAndNearReference) {
    const auto env = support_envelope(unit_run().run.snapshots);
    ASSERT_FALSE(env.times.empty());
    for (std::size_t k = 0; k < env.times.size(); ++k) {
        EXPECT_LE(env.ell[k], env.L[k]);
        if (env.times[k] >= 1e-4) {
            EXPECT_GT(env.ratio[k], 0.8);
            EXPECT_LT(env.ratio[k], 1.2);
        }
        EXPECT_GE(env.radius[k] + 1e-12, subsolution_radius(env.times[k]));
    }
}

TEST(Scaling, UnitLambdaIsIdentity) {
    const auto& s = unit_run().run.snapshots;
    const auto rep = scaling_check(1.0, s, s);
    EXPECT_LE(rep.max_relative_deviation, 1e-12);
    EXPECT_EQ(rep.max_radius_mismatch, 0.0);
}

TEST(Scaling, RejectsMissingProbe) {
    const auto& s = unit_run().run.snapshots;
    EXPECT_THROW(scaling_check(2.0, s, s), Error);
}

TEST(Scaling, LambdaTwoMatchesRescaledUnitRun) {
    auto unit = small_dirac();
    unit.bootstrap = {1e-6, 2.0, 1000};
    unit.t_end = 4e-3;
    unit.probes = {4e-4, 4e-3};
    auto two = unit;
    two.lambda = 2.0;
    two.bootstrap = {1e-6 / 4, 1.0, 1000};
    two.t_end = 1e-3;
    two.schedule = TimeSchedule{1e-8 / 4, 0.01, 1e-4 / 4};
    two.probes = {1e-4, 1e-3};
    const auto rep = scaling_check(2.0, solve_dirac(two).run.snapshots, solve_dirac(unit).run.snapshots);
    EXPECT_LE(rep.max_relative_deviation, 5e-3);
}

TEST(Extinction, FiniteAndNearGolden) {
    DiracOptions o;
    o.bootstrap = {1e-6, 10.0, 2000};
    o.t_end = 0.7;
    o.schedule = TimeSchedule{1e-8, 0.01, 1e-3};
    const auto x = find_extinction(o, 1e-6);
    EXPECT_LE(x.bracket_hi - x.bracket_lo, 1e-6);
    EXPECT_NEAR(x.t_star, 0.46522, 0.01);
}

TEST(Composite, StimulusRegions) {
    EXPECT_DOUBLE_EQ(composite_stimulus(-4.5), kCompositeGMin);
    EXPECT_DOUBLE_EQ(composite_stimulus(0.5), kCompositeGMin);
    EXPECT_DOUBLE_EQ(composite_stimulus(-2.5), kCompositeGMax);
    EXPECT_DOUBLE_EQ(composite_stimulus(-3.0), kCompositeGMax);
    for (double x = -5.0; x <= 5.0; x += 0.01) {
        EXPECT_GE(composite_stimulus(x), kCompositeGMin);
        EXPECT_LE(composite_stimulus(x), kCompositeGMax);
    }
}

TEST(Composite, LeftBumpPositivitySet) {
    EXPECT_EQ(composite_left_bump(-4.0), 0.0);
    EXPECT_EQ(composite_left_bump(-1.0), 0.0);
    EXPECT_GT(composite_left_bump(-3.99), 0.0);
    EXPECT_GT(composite_left_bump(-1.01), 0.0);
    EXPECT_NEAR(composite_left_bump(-2.5, 2.0), 2.0, 1e-15);
}

TEST(Composite, LambdaLowerBoundOnCoreSupport) {
    CompositeSpec spec;
    spec.n_cells = 2000;
    const Stimulus g = spec.stimulus();
    const Grid grid = spec.grid();
    for (double hi : {-1.5, 0.0, 5.0}) {
        const auto u = Field1D::sample(grid, [hi](double x) { return x >= -3.5 && x <= hi ? 1.0 : 0.0; });
        EXPECT_GE(lambda_of_support(g, detect_support(u)), 11.0 / 120.0);
    }
}

TEST(Composite, RestrictionSplitsExactly) {
    CompositeSpec spec;
    spec.n_cells = 2000;
    spec.atoms = {{0.1, 1e-3}, {0.3, 2e-3}};
    const auto u = composite_initial(spec);
    const auto left = restrict_to(u, -5.1, kCompositeSplit);
    const auto right = restrict_to(u, kCompositeSplit, 5.1);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(left[i] + right[i], u[i]);
    EXPECT_NEAR(integrate(right), 3e-3, 1e-15);
}

TEST(Composite, HeatKernelAtomsKeepMass) {
    CompositeSpec spec;
    spec.n_cells = 4000;
    spec.atoms = {{0.2, 1e-3}};
    spec.regularization = AtomRegularization::HeatKernel;
    spec.mollify_time = 1e-4;
    const auto u = composite_initial(spec);
    EXPECT_NEAR(integrate(restrict_to(u, kCompositeSplit, 5.1)), 1e-3, 1e-12);
}

TEST(Composite, AtomsOutsideEtaRejected) {
    CompositeSpec spec;
    spec.n_cells = 200;
    spec.eta = 0.5;
    spec.atoms = {{0.7, 1e-3}};
    EXPECT_THROW(composite_initial(spec), Error);
}

TEST(Composite, ShortRunBounds) {
    CompositeSpec spec;
    spec.n_cells = 2000;
    spec.atoms = {{0.2, 1e-3}, {0.6, 1e-3}};
    const std::vector<double> probes{1e-4, 1e-3, 1e-2};
    const auto run = solve_composite(spec, 1e-2, TimeSchedule{1e-5, 0.05, 1e-4}, probes);
    ASSERT_EQ(run.lambdas.size(), 3u);
    EXPECT_TRUE(run.bounds.holds);
    EXPECT_GT(run.bounds.min_positivity_on_core, 0.0);
    EXPECT_GE(run.bounds.min_lambda, 11.0 / 120.0);
    EXPECT_LE(run.bounds.max_lambda, run.bounds.lambda_upper_bound);
    EXPECT_GE(run.bounds.min_sink_off_core, 1.0 / 11.0);
    const double m0 = run.nonlocal.run.trace.rows.front().mass;
    for (const auto& r : run.nonlocal.run.trace.rows) EXPECT_NEAR(r.mass / m0, 1.0, 1e-8);
}

TEST(LambdaGap, EqualMeasuresGiveZero) {
    CompositeSpec spec;
    spec.n_cells = 1000;
    const auto left = detect_support(restrict_to(composite_initial(spec), -5.1, kCompositeSplit));
    EXPECT_EQ(lambda_gap_lower_bound(left, 0.1, 0.1, spec.stimulus()), 0.0);
    EXPECT_GT(lambda_gap_lower_bound(left, 0.05, 0.1, spec.stimulus()), 0.0);
    EXPECT_THROW(lambda_gap_lower_bound(left, 0.2, 0.1, spec.stimulus()), Error);
    EXPECT_THROW(lambda_gap_lower_bound(SupportSet{}, 0.1, 0.2, spec.stimulus()), Error);
}

TEST(LambdaGap, ConstantStimulusGivesZero) {
    Grid grid(-5.0, 5.0, 1000);
    Stimulus g(grid, [](double) { return kCompositeGMax; }, kCompositeGMax, kCompositeGMax);
    const auto u = Field1D::sample(grid, [](double x) { return composite_left_bump(x); });
    EXPECT_EQ(lambda_gap_lower_bound(detect_support(u), 0.05, 0.1, g), 0.0);
}
