#include <cmath>

#include <gtest/gtest.h>

#include "mcob/oracle.hpp"

using namespace mcob;

namespace {

const auto unit_a = [](double) { return 1.0; };

SphereBundle small_sphere_bundle() {
    SphereSetup s;
    s.n_cells = 200;
    const std::vector<double> probes{0.01, 0.02, 0.03};
    const Field1D u0 = s.initial();
    const Stimulus g = s.stimulus();
    auto res = solve_sphere(u0, g, 0.03, 2e-4, probes);
    return SphereBundle{u0, g, std::move(res.run.trace), std::move(res.run.snapshots)};
}

DiracBundle small_dirac_bundle() {
    DiracOptions o;
    o.bootstrap = {1e-6, 2.0, 1000};
    o.t_end = 1e-2;
    o.schedule = TimeSchedule{1e-8, 0.01, 1e-4};
    o.probes = log_spaced(1e-5, 1e-2, 6);
    return DiracBundle{solve_dirac(o).run.snapshots, heat_reference(o).snapshots, 1e-6, 1.0};
}

const InequalityResult& entry(const CertificationReport& r, const std::string& name) {
    for (const auto& e : r.entries)
        if (e.name == name) return e;
    throw std::runtime_error("no entry " + name);
}

}  // namespace

TEST(ExplicitReference, ConstantDecaysLinearly) {
    Grid g(0.0, 1.0, 20);
    const std::vector<double> u0(g.n_nodes(), 0.5), probes{0.1};
    const auto ref = explicit_reference(g, u0, unit_a, BoundaryCondition::NeumannZero,
                                        [](double, double) { return 1.0; }, 0.1, 1e-3, probes);
    ASSERT_EQ(ref.size(), 1u);
    for (double v : ref[0].values) EXPECT_NEAR(v, 0.4, 1e-12);
}

TEST(ExplicitReference, ConstantStopsAtZero) {
    Grid g(0.0, 1.0, 20);
    const std::vector<double> u0(g.n_nodes(), 0.5), probes{1.0};
    const auto ref = explicit_reference(g, u0, unit_a, BoundaryCondition::NeumannZero,
                                        [](double, double) { return 1.0; }, 1.0, 1e-2, probes);
    for (double v : ref[0].values) EXPECT_EQ(v, 0.0);
}

TEST(ExplicitReference, HeatKernelSecondOrderInSpace) {
    auto error_for = [](std::size_t n) {
        Grid g(-8.0, 8.0, n);
        std::vector<double> u0(g.n_nodes());
        for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = heat_kernel(g.x(i), 0.1);
        const std::vector<double> probes{0.05};
        const auto ref = explicit_reference(g, u0, [](double) { return 1.0; }, BoundaryCondition::NeumannZero,
                                            [](double, double) { return 0.0; }, 0.05, 1e-3, probes);
        double e = 0.0;
        for (std::size_t i = 0; i < u0.size(); ++i)
            e = std::max(e, std::abs(ref[0].values[i] - heat_kernel(g.x(i), 0.15)));
        return e;
    };
    const double coarse = error_for(200), fine = error_for(400);
    EXPECT_LT(fine, 2e-3);
    EXPECT_GT(coarse / fine, 3.0);
}

TEST(ExplicitReference, ReturnsOnlyRequestedProbes) {
    Grid g(0.0, 1.0, 20);
    const std::vector<double> u0(g.n_nodes(), 1.0), probes{0.01, 0.02};
    const auto ref = explicit_reference(g, u0, unit_a, BoundaryCondition::NeumannZero,
                                        [](double, double) { return 1.0; }, 0.05, 1e-3, probes);
    ASSERT_EQ(ref.size(), 2u);
    EXPECT_EQ(ref[0].t, 0.01);
    EXPECT_EQ(ref[1].t, 0.02);
}

TEST(ExplicitReference, RefusesUnstableStep) {
    Grid g(-1.0, 1.0, 100);
    const std::vector<double> u0(g.n_nodes(), 1.0), probes{1.0};
    EXPECT_THROW(explicit_reference(g, u0, unit_a, BoundaryCondition::NeumannZero,
                                    [](double, double) { return 1.0; }, 1.0, 1.0, probes),
                 Error);
}

TEST(ExplicitReference, RefusesSmallStepRatio) {
    Grid g(-1.0, 1.0, 10);
    const std::vector<double> u0(g.n_nodes(), 1.0), probes{1e-3};
    EXPECT_THROW(explicit_reference(g, u0, unit_a, BoundaryCondition::NeumannZero,
                                    [](double, double) { return 1.0; }, 1e-3, 1e-4, probes, OracleConfig{50}),
                 Error);
}

TEST(ExplicitReference, AgreesWithImplicitSolverOverManySteps) {
    Grid g(-5.0, 5.0, 2000);
    const auto u0 = Field1D::sample(g, [](double x) { return std::exp(-x * x); });
    const std::vector<double> probes{1e-2};
    const auto imp = evolve(u0, OperatorSpec::unit(), SinkField::constant(1.0), 1e-2, 1e-5, probes);
    const auto ref = explicit_reference(g, u0.values(), unit_a, BoundaryCondition::NeumannZero,
                                        [](double, double) { return 1.0; }, 1e-2, 1e-5, probes);
    EXPECT_LE(max_abs_difference(imp.snapshots[0].field.values(), ref[0].values), 1e-5);
}

TEST(Certify, SphereRunPasses) {
    RunBundle b;
    b.sphere = small_sphere_bundle();
    const auto rep = certify_inequalities(b);
    EXPECT_TRUE(rep.passed());
    EXPECT_TRUE(entry(rep, inequality::front_bound).passed);
    EXPECT_TRUE(entry(rep, inequality::side_condition).passed);
}

TEST(Certify, SyntheticFrontViolationIsFlagged) {
    RunBundle b;
    b.sphere = small_sphere_bundle();
    b.sphere->trace.rows[1].p = 0.99;
    const auto rep = certify_inequalities(b);
    EXPECT_FALSE(rep.passed());
    const auto& e = entry(rep, inequality::front_bound);
    EXPECT_FALSE(e.passed);
    EXPECT_LT(e.worst_margin, 0.0);
}

TEST(Certify, MissingInputIsNamed) {
    RunBundle b;
    b.dirac = small_dirac_bundle();
    const std::vector<std::string> req{inequality::front_bound};
    try {
        certify_inequalities(b, req);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("missing input for front-bound: sphere run"), std::string::npos);
    }
}

TEST(Certify, EmptyBundleRejected) {
    EXPECT_THROW(certify_inequalities(RunBundle{}), Error);
    const std::vector<std::string> req{"no-such-inequality"};
    RunBundle b;
    b.dirac = small_dirac_bundle();
    EXPECT_THROW(certify_inequalities(b, req), Error);
}

TEST(Certify, DiracSandwichMargins) {
    RunBundle b;
    b.dirac = small_dirac_bundle();
    const auto rep = certify_inequalities(b);
    EXPECT_GE(entry(rep, inequality::sandwich_upper).worst_margin, -1e-8);
    EXPECT_GE(entry(rep, inequality::sandwich_lower).worst_margin, -1e-8);
    EXPECT_TRUE(rep.passed());
}

TEST(Certify, CompositeBoundsAndZeroedCore) {
    CompositeSpec spec;
    spec.n_cells = 1000;
    spec.atoms = {{0.2, 1e-3}};
    const std::vector<double> probes{1e-3, 1e-2};
    const auto run = solve_composite(spec, 1e-2, TimeSchedule{1e-5, 0.05, 1e-4}, probes);
    RunBundle b;
    b.composite = CompositeBundle{run.nonlocal.run.snapshots, run.lambdas};
    EXPECT_TRUE(certify_inequalities(b).passed());
    auto& f = b.composite->snapshots[0].field.mutable_values();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.0;
    const auto rep = certify_inequalities(b);
    EXPECT_FALSE(entry(rep, inequality::core_positivity).passed);
}
