#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace jetc;

namespace {

Connection order0(const std::string& c1, const std::string& c2) {
    JetSpace s = JetSpace::standard(2, 1, 0);
    return Connection(s, {parse(c1, s.coordinate_set()), parse(c2, s.coordinate_set())}, "order0");
}

Connection zero_top(int n) {
    JetSpace s = JetSpace::standard(n, 1, 1);
    std::map<std::pair<int, MultiIndex>, Expr> tops;
    for (const MultiIndex& sigma : multi_indices(n, 2)) tops[{0, sigma}] = Expr::integer(0);
    return make_geometric(GeometricSpec(s, tops), "zero-top");
}

Connection oscillator() {
    JetSpace s = JetSpace::standard(1, 1, 1);
    return make_geometric(GeometricSpec(s, {{{0, MultiIndex({1, 1})}, -Expr::var("y")}}), "oscillator");
}

double max_error(const SolutionTrace& t, const std::function<double(const std::vector<double>&)>& exact,
                 std::size_t column = 0) {
    double worst = 0.0;
    for (std::size_t node = 0; node < t.box.node_count(); ++node)
        worst = std::max(worst, std::abs(t.at(node, column) - exact(t.box.point(t.box.multi(node)))));
    return worst;
}

}  // namespace

TEST(Integrate, FlatExponentialExample) {
    SolutionTrace t = integrate(order0("y", "y"), {0, 0, 1}, GridBox({0, 0}, {1, 1}, 0.01));
    EXPECT_LT(max_error(t, [](const auto& x) { return std::exp(x[0] + x[1]); }), 1e-6);
    EXPECT_EQ(t.at(0, 0), 1.0);
    EXPECT_EQ(t.metadata.integrator, "RK4");
    EXPECT_EQ(t.columns, std::vector<std::string>{"y"});
}

TEST(Integrate, ConstantCoefficientsAreAffine) {
    SolutionTrace t = integrate(order0("2", "-3"), {0.5, 0, 1}, GridBox({0, -1}, {1, 1}, 0.25));
    EXPECT_LT(max_error(t, [](const auto& x) { return 1 + 2 * (x[0] - 0.5) - 3 * x[1]; }), 1e-13);
}

TEST(Integrate, InitOffGridIsRejected) {
    EXPECT_THROW(integrate(order0("y", "y"), {0.005, 0, 1}, GridBox({0, 0}, {1, 1}, 0.01)), InvalidGrid);
    EXPECT_THROW(integrate(order0("y", "y"), {2, 0, 1}, GridBox({0, 0}, {1, 1}, 0.01)), InvalidGrid);
}

TEST(Integrate, BlowUpIsReported) {
    JetSpace s = JetSpace::standard(1, 1, 0);
    Connection c(s, {parse("y^2", s.coordinate_set())});
    EXPECT_THROW(integrate(c, {0, 1}, GridBox({0}, {3}, 0.01)), NonFiniteEncountered);
}

TEST(Integrate, GeometricAffine) {
    SolutionTrace t = integrate(zero_top(1), {0, 1, 2}, GridBox({0}, {1}, 0.1));
    EXPECT_LT(max_error(t, [](const auto& x) { return 1 + 2 * x[0]; }, 0), 1e-14);
    EXPECT_LT(max_error(t, [](const auto&) { return 2.0; }, 1), 1e-14);
}

TEST(Integrate, BitStable) {
    GridBox box({0, 0}, {1, 1}, 0.05);
    SolutionTrace a = integrate(order0("x1*y", "sin(y)"), {0, 0, 0.5}, box);
    SolutionTrace b = integrate(order0("x1*y", "sin(y)"), {0, 0, 0.5}, box);
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Trace, CsvLayout) {
    SolutionTrace t = integrate(zero_top(1), {0, 1, 2}, GridBox({0}, {1}, 0.5));
    std::ostringstream out;
    t.write_csv(out);
    EXPECT_EQ(out.str(), "x1,y,y_1\n0,1,2\n0.5,2,2\n1,3,2\n");
}

TEST(Paths, FlatDiscrepancyDecaysFast) {
    EXPECT_EQ(path_dependence(order0("y", "y"), {0, 0, 1}, {1, 1}, 0.1).discrepancy, 0.0);
    // y = exp(x1*x2): flat but not separable, so the two orders differ by truncation error
    Connection c = order0("x2*y", "x1*y");
    double d1 = path_dependence(c, {0.2, 0.3, 1}, {1, 1}, 0.1).discrepancy;
    double d2 = path_dependence(c, {0.2, 0.3, 1}, {1, 1}, 0.05).discrepancy;
    EXPECT_LT(d1, 1e-4);
    EXPECT_GT(d2, 0.0);
    EXPECT_GE(d1 / d2, 8.0);
}

TEST(Paths, CurvedExampleHolonomy) {
    Connection c = order0("y", "x1*y");
    PathReport r = path_dependence(c, {0, 0, 1}, {1, 1}, 0.01);
    ASSERT_EQ(r.orders.size(), 2u);
    EXPECT_NEAR(r.terminal[0][0], std::exp(2.0), 1e-6);
    EXPECT_NEAR(r.terminal[1][0], std::exp(1.0), 1e-6);
    double fine = path_dependence(c, {0, 0, 1}, {1, 1}, 0.0025).discrepancy;
    EXPECT_GT(r.discrepancy, 1e-3);
    EXPECT_NEAR(r.discrepancy, fine, 1e-6);
}

TEST(Paths, SingleAxisHasOnePath) {
    PathReport r = path_dependence(oscillator(), {0, 1, 0}, {1}, 0.01);
    EXPECT_EQ(r.orders.size(), 1u);
    EXPECT_EQ(r.discrepancy, 0.0);
}

TEST(SolveGeometric, AffineInTwoVariables) {
    GeometricSolution s = solve_geometric(zero_top(2), {0, 0, 1, 2, 3}, GridBox({0, 0}, {1, 1}, 0.1));
    EXPECT_TRUE(s.geometric);
    EXPECT_TRUE(s.flat);
    EXPECT_LT(s.holonomy_defect, 1e-10);
    EXPECT_LT(max_error(s.trace, [](const auto& x) { return 1 + 2 * x[0] + 3 * x[1]; }), 1e-13);
    ASSERT_TRUE(s.second_derivative_residual.has_value());
    EXPECT_LT(*s.second_derivative_residual, 1e-9);
}

TEST(SolveGeometric, Oscillator) {
    GeometricSolution s = solve_geometric(oscillator(), {0, 1, 0}, GridBox({0}, {3}, 1e-3));
    EXPECT_LT(max_error(s.trace, [](const auto& x) { return std::cos(x[0]); }), 1e-6);
    double coarse = solve_geometric(oscillator(), {0, 1, 0}, GridBox({0}, {3}, 2e-3)).holonomy_defect;
    EXPECT_NEAR(coarse / s.holonomy_defect, 4.0, 0.8);
}

TEST(SolveGeometric, StrictRejectsNonGeometric) {
    JetSpace s = JetSpace::standard(1, 1, 1);
    Connection c(s, {Expr::integer(0), Expr::integer(1)});
    EXPECT_THROW(solve_geometric(c, {0, 1, 0}, GridBox({0}, {1}, 0.1)), NotGeometric);
    GeometricSolution loose = solve_geometric(c, {0, 1, 0}, GridBox({0}, {1}, 0.1), false);
    EXPECT_FALSE(loose.geometric);
}

TEST(SolveGeometric, FlatNonGeometricIsNotHolonomic) {
    JetSpace s = JetSpace::standard(1, 1, 1);
    Connection c(s, {Expr::integer(0), Expr::integer(1)});
    for (double h : {0.01, 0.005, 0.0025}) {
        SolutionTrace t = integrate(c, {0, 1, 0}, GridBox({0}, {1}, h));
        EXPECT_GT(holonomy_defect(t), 0.5);
    }
}

TEST(SolveGeometric, RandomFlatFamilies) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 4; ++i) {
        Connection c = oracle::random_flat_geometric(2, rng);
        ASSERT_TRUE(is_flat(c).flat);
        double d1 = solve_geometric(c, {0, 0, 1, 0, 0}, GridBox({0, 0}, {0.5, 0.5}, 0.02)).holonomy_defect;
        double d2 = solve_geometric(c, {0, 0, 1, 0, 0}, GridBox({0, 0}, {0.5, 0.5}, 0.01)).holonomy_defect;
        if (d1 < 1e-9) continue;
        EXPECT_NEAR(d1 / d2, 4.0, 0.8);
    }
}

TEST(SolvePde, ReducedSystemAndLabels) {
    JetSpace s = JetSpace::standard(1, 1, 2);
    SolvedPde pde(s, {{{0, MultiIndex({1, 1})}, -Expr::var("y")}});
    SolutionTrace t = solve_pde(pde, {0, 0, 1}, GridBox({0}, {1}, 0.001));
    EXPECT_EQ(t.columns, (std::vector<std::string>{"y", "y_1"}));
    EXPECT_EQ(t.space.order(), 1);
    EXPECT_LT(max_error(t, [](const auto& x) { return std::sin(x[0]); }), 1e-10);
}
