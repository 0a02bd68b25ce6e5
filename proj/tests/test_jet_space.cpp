#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace jetc;

using Names = std::vector<std::string>;

TEST(MultiIndex, CanonicalForm) {
    EXPECT_EQ(MultiIndex({2, 1}), MultiIndex({1, 2}));
    EXPECT_EQ(MultiIndex({1}).plus(2), MultiIndex({2}).plus(1));
    EXPECT_EQ(MultiIndex({1, 2}).plus(1).digits(), "112");
    EXPECT_EQ(MultiIndex::from_digits("21").digits(), "12");
    EXPECT_EQ(MultiIndex({1, 2, 2}).minus(2), MultiIndex({1, 2}));
    EXPECT_EQ(MultiIndex().order(), 0u);
}

TEST(MultiIndex, PlusRaisesOrderByOne) {
    for (const MultiIndex& mu : multi_indices(3, 2))
        for (int j = 1; j <= 3; ++j) {
            MultiIndex up = mu.plus(j);
            EXPECT_EQ(up.order(), mu.order() + 1);
            EXPECT_TRUE(std::is_sorted(up.entries().begin(), up.entries().end()));
        }
}

TEST(JetSpace, CoordinateOrder) {
    EXPECT_EQ(JetSpace::standard(2, 1, 1).coordinates(), (Names{"x1", "x2", "y", "y_1", "y_2"}));
    EXPECT_EQ(JetSpace::standard(1, 1, 2).coordinates(), (Names{"x1", "y", "y_1", "y_11"}));
    EXPECT_EQ(JetSpace::standard(2, 1, 2).dimension(), 8u);
    EXPECT_EQ(JetSpace::standard(2, 1, 2).coordinates(),
              (Names{"x1", "x2", "y", "y_1", "y_2", "y_11", "y_12", "y_22"}));
    EXPECT_EQ(JetSpace::standard(1, 2, 1).coordinates(), (Names{"x1", "y1", "y2", "y1_1", "y2_1"}));
}

TEST(JetSpace, DimensionMatchesBruteForceEnumeration) {
    for (int n = 1; n <= 4; ++n)
        for (int m = 1; m <= 3; ++m)
            for (int k = 0; k <= 4; ++k) {
                std::size_t want = oracle::brute_force_jet_dimension(n, m, k);
                EXPECT_EQ(JetSpace::standard(n, m, k).dimension(), want) << n << " " << m << " " << k;
                EXPECT_EQ(want, std::size_t(n) + std::size_t(m) * binomial(std::size_t(n + k), std::size_t(k)));
            }
}

TEST(JetSpace, RejectsBadShapes) {
    EXPECT_THROW(JetSpace({"x", "x"}, {"y"}, 0), InvalidSpace);
    EXPECT_THROW(JetSpace({"x"}, {"x"}, 0), InvalidSpace);
    EXPECT_THROW(JetSpace({}, {"y"}, 0), InvalidSpace);
    EXPECT_THROW(JetSpace({"x"}, {"y"}, -1), InvalidSpace);
}

TEST(JetSpace, LookupRoundTrip) {
    JetSpace s = JetSpace::standard(3, 2, 2);
    for (const JetCoordinate& c : s.fiber_coordinates()) {
        std::string name = s.coordinate_name(c);
        auto back = s.find_fiber(name);
        ASSERT_TRUE(back.has_value()) << name;
        EXPECT_EQ(back->alpha, c.alpha);
        EXPECT_EQ(back->mu, c.mu);
    }
    EXPECT_EQ(s.find_base("x2"), 1);
    EXPECT_FALSE(s.has_coordinate("y1_4"));
}

TEST(TotalDerivative, Examples) {
    JetSpace j0 = JetSpace::standard(2, 1, 0);
    EXPECT_EQ(total_derivative(j0, Expr::var("y"), 1).str(), "y_1");

    JetSpace j1 = JetSpace::standard(2, 1, 1);
    Expr e = parse("x1*y_1", j1.coordinate_set());
    Expr d = total_derivative(j1, e, 2);
    EXPECT_EQ(d.str(), "x1*y_12");
}

// D_2(x1*y_1) on the 2-jet of y = x1*x2 equals d/dx2 of x1*(dy/dx1) = x1.
TEST(TotalDerivative, ChainRuleOnProlongedSection) {
    JetSpace j1 = JetSpace::standard(2, 1, 1);
    Expr d = total_derivative(j1, parse("x1*y_1", j1.coordinate_set()), 2);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        Binding b = oracle::random_point({"x1", "x2"}, rng);
        double x1 = b["x1"], x2 = b["x2"];
        Binding jet = {{"x1", x1}, {"x2", x2}, {"y", x1 * x2}, {"y_1", x2}, {"y_2", x1},
                       {"y_11", 0.0}, {"y_12", 1.0}, {"y_22", 0.0}};
        EXPECT_NEAR(eval(d, jet), x1, 1e-14);
    }
}

TEST(TotalDerivative, Commute) {
    JetSpace j1 = JetSpace::standard(2, 1, 1);
    JetSpace j2 = j1.with_order(2);
    JetSpace j3 = j1.with_order(3);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        Expr e = oracle::random_polynomial(j1.coordinates(), 3, rng, 5);
        Expr d12 = total_derivative(j2, total_derivative(j1, e, 1), 2);
        Expr d21 = total_derivative(j2, total_derivative(j1, e, 2), 1);
        EXPECT_EQ(simplify(d12 - d21).str(), "0") << e.str();
        Binding b = oracle::random_point(j3.coordinates(), rng);
        EXPECT_NEAR(eval(d12, b), eval(d21, b), 1e-9);
    }
}

TEST(TotalDerivative, BaseOnlyIsPartial) {
    JetSpace s = JetSpace::standard(3, 1, 1);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
        Expr e = oracle::random_polynomial(s.base_names(), 3, rng);
        for (int j = 1; j <= 3; ++j)
            EXPECT_EQ(total_derivative(s, e, j).str(), diff(e, s.base_names()[std::size_t(j - 1)]).str());
    }
}

TEST(TotalDerivative, RaisesOrderByOne) {
    JetSpace s = JetSpace::standard(2, 2, 1);
    Expr e = parse("y1_2*y2 + x1*y2_1", s.coordinate_set());
    Expr d = total_derivative(s, e, 1);
    std::size_t top = 0;
    for (const std::string& v : free_variables(d)) {
        auto c = s.with_order(2).find_fiber(v);
        if (c) top = std::max(top, c->mu.order());
    }
    EXPECT_EQ(top, 2u);
    EXPECT_THROW(total_derivative(s, parse("y1_11", s.with_order(2).coordinate_set()), 1), UnknownVariable);
}

TEST(CanonicalInclusion, FirstOrderLayer) {
    CanonicalInclusion inc(JetSpace::standard(1, 1, 1));
    EXPECT_EQ(inc.iterated_coordinates(), (Names{"x1", "y", "y_1", "y,1", "y_1,1"}));
    std::vector<double> img = inc.apply({0.5, 2.0, 3.0, 4.0});
    EXPECT_EQ(img, (std::vector<double>{0.5, 2.0, 3.0, 3.0, 4.0}));
}

TEST(CanonicalInclusion, MixedDerivativesShareTarget) {
    CanonicalInclusion inc(JetSpace::standard(2, 1, 1));
    std::map<std::string, std::string> target;
    for (const InclusionEntry& e : inc.entries()) target[e.source] = e.target_name;
    EXPECT_EQ(target["y_1,2"], "y_12");
    EXPECT_EQ(target["y_2,1"], "y_12");
    EXPECT_EQ(target["y,2"], "y_2");
}

TEST(CanonicalInclusion, InjectiveAndProjectionCompatible) {
    JetSpace s = JetSpace::standard(2, 2, 1);
    CanonicalInclusion inc(s);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        Binding a = oracle::random_point(inc.upper().coordinates(), rng);
        Binding b = oracle::random_point(inc.upper().coordinates(), rng);
        std::vector<double> pa = inc.upper().values(a), pb = inc.upper().values(b);
        EXPECT_NE(inc.apply(pa), inc.apply(pb));

        std::vector<double> img = inc.apply(pa);
        for (std::size_t c = 0; c < s.dimension(); ++c) EXPECT_EQ(img[c], pa[c]);
        auto back = inc.preimage(img);
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, pa);
    }
}

TEST(CanonicalInclusion, OffImagePointsHaveNoPreimage) {
    CanonicalInclusion inc(JetSpace::standard(2, 1, 1));
    std::vector<double> img = inc.apply({0, 0, 1, 2, 3, 4, 5, 6});
    std::vector<std::string> names = inc.iterated_coordinates();
    auto pos = std::find(names.begin(), names.end(), "y_2,1") - names.begin();
    img[std::size_t(pos)] += 1.0;
    EXPECT_FALSE(inc.preimage(img).has_value());
}

namespace {

SolutionTrace affine_trace(double a, double b, double h, double perturb = 0.0) {
    SolutionTrace t;
    t.box = GridBox({0.0}, {1.0}, h);
    t.space = JetSpace::standard(1, 1, 1);
    t.columns = {"y", "y_1"};
    for (std::size_t i = 0; i < t.box.node_count(); ++i) {
        double x = t.box.coordinate(0, i);
        t.values.push_back(a + b * x);
        t.values.push_back(b + perturb);
    }
    return t;
}

}  // namespace

TEST(HolonomyDefect, AffineSectionIsHolonomic) { EXPECT_NEAR(holonomy_defect(affine_trace(1.0, 2.0, 0.1)), 0.0, 1e-12); }

TEST(HolonomyDefect, PlantedDefect) { EXPECT_NEAR(holonomy_defect(affine_trace(1.0, 2.0, 0.1, 1.0)), 1.0, 1e-12); }

TEST(HolonomyDefect, CentralDifferenceConvergesQuadratically) {
    auto trace = [](double h) {
        SolutionTrace t;
        t.box = GridBox({0.0}, {1.0}, h);
        t.space = JetSpace::standard(1, 1, 1);
        t.columns = {"y", "y_1"};
        for (std::size_t i = 0; i < t.box.node_count(); ++i) {
            double x = t.box.coordinate(0, i);
            t.values.push_back(std::sin(x));
            t.values.push_back(std::cos(x));
        }
        return t;
    };
    double ratio = holonomy_defect(trace(0.02)) / holonomy_defect(trace(0.01));
    EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(HolonomyDefect, Errors) {
    SolutionTrace t = affine_trace(0.0, 1.0, 1.0);
    EXPECT_THROW(holonomy_defect(t), GridTooSmall);
    t.space = JetSpace::standard(1, 1, 0);
    EXPECT_THROW(holonomy_defect(t), InvalidSpace);
}

TEST(GridBox, Validation) {
    EXPECT_THROW(GridBox({0.0}, {1.0}, 0.3), InvalidGrid);
    EXPECT_THROW(GridBox({1.0}, {0.0}, 0.1), InvalidGrid);
    EXPECT_THROW(GridBox({0.0}, {1.0}, 0.0), InvalidGrid);
    GridBox b({0.0, -1.0}, {1.0, 1.0}, 0.5);
    EXPECT_EQ(b.counts(), (std::vector<std::size_t>{3, 5}));
    EXPECT_EQ(b.linear(b.multi(11)), 11u);
    EXPECT_EQ(b.coordinate(1, 4), 1.0);
}
