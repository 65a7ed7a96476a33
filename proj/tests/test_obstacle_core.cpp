#include <cmath>

#include <gtest/gtest.h>

#include "mcob/obstacle_core.hpp"
#include "mcob/oracle.hpp"

using namespace mcob;

namespace {

Field1D gaussian(const Grid& g, double width = 1.0) {
    return Field1D::sample(g, [width](double x) { return std::exp(-x * x / (width * width)); });
}

std::vector<double> implicit_defect(const Field1D& u, const Field1D& next, const OperatorSpec& spec, double F,
                                    double dt) {
    DiscreteOperator op(u.grid(), spec);
    std::vector<double> lu(u.size());
    op.apply(next.values(), lu);
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = (next[i] - u[i]) / dt - lu[i] + F;
    return w;
}

}  // namespace

TEST(StepProjected, ConstantDecaysLinearly) {
    Grid g(0.0, 1.0, 50);
    const auto u = Field1D::sample(g, [](double) { return 0.5; });
    const auto r = step_projected(u, OperatorSpec::unit(), SinkField::constant(1.0), 0.1);
    for (double v : r.field.values()) EXPECT_NEAR(v, 0.4, 1e-14);
}

TEST(StepProjected, ConstantHitsZeroAndStays) {
    Grid g(0.0, 1.0, 50);
    const auto u = Field1D::sample(g, [](double) { return 0.5; }, 1e-12);
    const std::vector<double> probes{0.3, 0.5, 0.8};
    const auto res = evolve(u, OperatorSpec::unit(), SinkField::constant(1.0), 0.8, 0.1, probes);
    ASSERT_EQ(res.snapshots.size(), 3u);
    EXPECT_NEAR(res.snapshots[0].field[10], 0.2, 1e-13);
    EXPECT_LE(res.snapshots[1].field.max_value(), 1e-12);
    EXPECT_TRUE(detect_support(res.snapshots[1].field).empty());
    EXPECT_EQ(res.snapshots[2].field.max_value(), 0.0);
}

TEST(StepProjected, ZeroFieldStaysZero) {
    Grid g(-1.0, 1.0, 40);
    const auto r = step_projected(Field1D(g), OperatorSpec::unit(), SinkField::constant(1.0), 0.01);
    EXPECT_EQ(r.field.max_value(), 0.0);
    EXPECT_TRUE(r.active_set.empty());
}

TEST(StepProjected, GaussianMatchesExplicitOracle) {
    Grid g(-5.0, 5.0, 2000);
    const auto u = gaussian(g);
    const double dt = 1e-4;
    const auto r = step_projected(u, OperatorSpec::unit(), SinkField::constant(1.0), dt);
    const std::vector<double> probes{dt};
    const auto ref = explicit_reference(g, u.values(), [](double) { return 1.0; }, BoundaryCondition::NeumannZero,
                                        [](double, double) { return 1.0; }, dt, dt, probes, OracleConfig{1000});
    ASSERT_EQ(ref.size(), 1u);
    EXPECT_LE(max_abs_difference(r.field.values(), ref[0].values), 1e-5);
}

TEST(StepProjected, ComplementarityHolds) {
    Grid g(-2.0, 2.0, 400);
    const auto u = gaussian(g, 0.5);
    const double dt = 1e-3;
    const auto spec = OperatorSpec::unit();
    const auto r = step_projected(u, spec, SinkField::constant(2.0), dt);
    const auto w = implicit_defect(u, r.field, spec, 2.0, dt);
    bool some_contact = false;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        EXPECT_GE(r.field[i], 0.0);
        EXPECT_GE(w[i], -1e-8);
        EXPECT_LE(std::abs(r.field[i] * w[i]), 1e-10);
        some_contact |= r.field[i] == 0.0;
    }
    EXPECT_TRUE(some_contact);
    EXPECT_LE(r.complementarity_residual, 1e-10);
}

TEST(StepProjected, VariableCoefficientComplementarity) {
    Grid g(-1.0, 1.0, 300);
    const auto u = Field1D::sample(g, [](double x) { return x > -0.2 ? 0.1 * (x + 0.2) * (x + 0.2) : 0.0; });
    const double dt = 1e-3;
    const auto spec = OperatorSpec::sphere();
    const auto r = step_projected(u, spec, SinkField::constant(0.5), dt);
    const auto w = implicit_defect(u, r.field, spec, 0.5, dt);
    for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_GE(w[i], -1e-8);
        EXPECT_LE(std::abs(r.field[i] * w[i]), 1e-10);
    }
}

TEST(StepProjected, HeatConservesMassWithZeroFlux) {
    Grid g(-1.0, 1.0, 200);
    const auto u = gaussian(g, 0.3);
    const auto res = evolve(u, OperatorSpec::unit(), SinkField::constant(0.0), 0.05, 1e-3, std::vector<double>{0.05});
    EXPECT_NEAR(integrate(res.snapshots[0].field), integrate(u), 1e-12);
}

TEST(StepProjected, DirichletEndsStayZero) {
    Grid g(0.0, 1.0, 100);
    const auto u = Field1D::sample(g, [](double x) { return std::sin(M_PI * x); });
    const auto r = step_projected(u, OperatorSpec::unit(BoundaryCondition::DirichletZero), SinkField::constant(0.5),
                                  1e-3);
    EXPECT_EQ(r.field[0], 0.0);
    EXPECT_EQ(r.field[100], 0.0);
}

TEST(StepProjected, RejectsNonPositiveStep) {
    Grid g(0.0, 1.0, 10);
    EXPECT_THROW(step_projected(Field1D(g), OperatorSpec::unit(), SinkField::constant(1.0), 0.0), Error);
    EXPECT_THROW(step_projected(Field1D(g), OperatorSpec::unit(), SinkField::constant(1.0), -1.0), Error);
}

TEST(StepProjected, ReportsSolverFailureWithResidual) {
    Grid g(-1.0, 1.0, 100);
    LcpOptions lcp;
    lcp.max_active_set_iterations = 0;
    lcp.max_sweeps = 1;
    try {
        step_projected(gaussian(g), OperatorSpec::unit(), SinkField::constant(1.0), 0.1, 0.1, lcp);
        FAIL() << "expected a solver failure";
    } catch (const SolverFailure& e) {
        EXPECT_GT(e.residual(), lcp.tolerance);
    }
}

TEST(Evolve, ZeroDurationReturnsInitialData) {
    Grid g(-1.0, 1.0, 50);
    const auto u = gaussian(g);
    const auto res = evolve(u, OperatorSpec::unit(), SinkField::constant(1.0), 0.0, 1e-3, std::vector<double>{0.0});
    ASSERT_EQ(res.snapshots.size(), 1u);
    EXPECT_EQ(res.snapshots[0].t, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(res.snapshots[0].field[i], u[i]);
    EXPECT_EQ(res.trace.rows.size(), 1u);
}

TEST(Evolve, RejectsUnsortedProbes) {
    Grid g(-1.0, 1.0, 50);
    EXPECT_THROW(evolve(gaussian(g), OperatorSpec::unit(), SinkField::constant(1.0), 0.1, 1e-3,
                        std::vector<double>{0.05, 0.01}),
                 Error);
    EXPECT_THROW(evolve(gaussian(g), OperatorSpec::unit(), SinkField::constant(1.0), 0.1, 1e-3,
                        std::vector<double>{0.2}),
                 Error);
}

TEST(TimeSchedule, HitsProbesExactly) {
    const std::vector<double> probes{0.0015, 0.01};
    const auto times = TimeSchedule{1e-3}.build(0.0, 0.01, probes);
    EXPECT_NE(std::find(times.begin(), times.end(), 0.0015), times.end());
    EXPECT_EQ(times.back(), 0.01);
    for (std::size_t k = 1; k < times.size(); ++k) EXPECT_GT(times[k], times[k - 1]);
}

TEST(TimeSchedule, GeometricGrowthIsCapped) {
    const auto times = TimeSchedule{1e-6, 0.1, 1e-3}.build(0.0, 0.1, {});
    double max_step = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) max_step = std::max(max_step, times[k] - times[k - 1]);
    EXPECT_LE(max_step, 1e-3 * (1 + 1e-9));
    EXPECT_EQ(times.back(), 0.1);
}

TEST(Comparison, OrderedDataStayOrdered) {
    Grid g(-3.0, 3.0, 600);
    const auto lo = gaussian(g, 0.5);
    const auto hi = Field1D::sample(g, [](double x) {
        return std::exp(-4.0 * x * x) + 0.3 * std::exp(-10.0 * (x - 0.5) * (x - 0.5));
    });
    const std::vector<double> probes{0.01, 0.05, 0.1};
    const auto a = evolve(lo, OperatorSpec::unit(), SinkField::constant(1.0), 0.1, 1e-3, probes);
    const auto b = evolve(hi, OperatorSpec::unit(), SinkField::constant(1.0), 0.1, 1e-3, probes);
    const auto rep = comparison_check(a.snapshots, b.snapshots);
    EXPECT_TRUE(rep.ordered);
    EXPECT_LE(rep.worst_excess, 1e-8);
}

TEST(Comparison, LargerSinkGivesSmallerSolution) {
    Grid g(-3.0, 3.0, 600);
    const auto u = gaussian(g, 0.5);
    const std::vector<double> probes{0.02, 0.1};
    const auto weak = evolve(u, OperatorSpec::unit(), SinkField::lambda_cubed(1.0), 0.1, 1e-3, probes);
    const auto strong = evolve(u, OperatorSpec::unit(), SinkField::lambda_cubed(1.5), 0.1, 1e-3, probes);
    EXPECT_TRUE(comparison_check(strong.snapshots, weak.snapshots).ordered);
    EXPECT_FALSE(comparison_check(weak.snapshots, strong.snapshots).ordered);
}

TEST(Refinement, ConsistentUnderGridHalving) {
    auto solve = [](std::size_t n) {
        Grid g(-2.0, 2.0, n);
        const auto res = evolve(gaussian(g, 0.5), OperatorSpec::unit(), SinkField::constant(1.0), 0.05, 2.5e-4,
                                std::vector<double>{0.05});
        return res.snapshots[0].field;
    };
    const auto coarse = solve(200), mid = solve(400), fine = solve(800);
    auto diff = [](const Field1D& a, const Field1D& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            m = std::max(m, std::abs(a[i] - interpolate(b.grid(), b.values(), a.grid().x(i))));
        return m;
    };
    const double e1 = diff(coarse, mid), e2 = diff(mid, fine);
    EXPECT_LT(e2, e1);
    EXPECT_LT(e2, 1e-3);
}

TEST(DiscreteOperator, RejectsInteriorDegeneracy) {
    Grid g(-1.0, 1.0, 10);
    OperatorSpec spec{[](double x) { return x * x; }, BoundaryCondition::NeumannZero};
    EXPECT_THROW(DiscreteOperator(g, spec), Error);
}

TEST(DiscreteOperator, ZeroFluxStencilHasZeroMass) {
    Grid g(-1.0, 1.0, 64);
    DiscreteOperator op(g, OperatorSpec::sphere());
    const auto u = Field1D::sample(g, [](double x) { return 2.0 + x + x * x * x; });
    std::vector<double> lu(u.size());
    op.apply(u.values(), lu);
    EXPECT_NEAR(integrate_values(g, lu), 0.0, 1e-10);
}
