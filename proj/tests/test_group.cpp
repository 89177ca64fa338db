#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rotadic/error.hpp"
#include "rotadic/group.hpp"

using namespace rotadic;

namespace {

void expect_point_near(const GroupPoint& actual, const GroupPoint& expected, double tol = 1e-14) {
    ASSERT_EQ(actual.dim(), expected.dim());
    for (std::size_t i = 0; i < actual.dim(); ++i) {
        EXPECT_NEAR(actual[i], expected[i], tol) << "coordinate " << i;
    }
}

} // namespace

TEST(GroupProduct, HeisenbergBracket) {
    const auto h = GroupDescriptor::heisenberg_h2();
    expect_point_near(group_product(h, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}), {1, 1, 0, 0, 0.5});
    // conj(v1) v2 contributes with the same sign
    expect_point_near(group_product(h, {0, 0, 1, 0, 0}, {0, 0, 0, 1, 0}), {0, 0, 1, 1, 0.5});
}

TEST(GroupProduct, AbelianAddition) {
    const auto r2 = GroupDescriptor::parabolic_r2();
    expect_point_near(group_product(r2, {1, 2}, {3, 4}), {4, 6});
    const auto g = GroupDescriptor::g1(1.0, {2.0});
    expect_point_near(group_product(g, {1, 2, 3}, {-1, 1, 1}), {0, 3, 4});
}

TEST(GroupProduct, IdentityAndInverse) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(0.7, {1.3})}) {
        CounterRng rng = CounterRng::stream(7, "test.identity");
        for (int k = 0; k < 100; ++k) {
            const GroupPoint x = random_point(g, rng);
            expect_point_near(group_product(g, x, GroupPoint::zero(g.dim())), x, 0.0);
            EXPECT_LE(group_product(g, x, group_inverse(g, x)).euclidean(), 1e-12);
            expect_point_near(group_inverse(g, group_inverse(g, x)), x, 0.0);
        }
    }
}

TEST(GroupProduct, DimensionMismatchIsStructural) {
    const auto r2 = GroupDescriptor::parabolic_r2();
    EXPECT_THROW(group_product(r2, {1, 2}, {1, 2, 3}), StructuralError);
    EXPECT_THROW(group_inverse(r2, {1, 2, 3}), StructuralError);
}

TEST(Dilate, Examples) {
    const auto h = GroupDescriptor::heisenberg_h2();
    expect_point_near(dilate(h, 2.0, {1, 1, 1, 1, 1}), {2, 2, 2, 2, 4});
    const auto r2 = GroupDescriptor::parabolic_r2();
    expect_point_near(dilate(r2, 4.0, {1, 0}), {2, 0});
    const GroupPoint x{0.3, -1.2};
    expect_point_near(dilate(r2, 3.0, dilate(r2, 5.0, x)), dilate(r2, 15.0, x), 1e-14);
}

TEST(Dilate, RejectsNonPositive) {
    const auto r2 = GroupDescriptor::parabolic_r2();
    EXPECT_THROW(dilate(r2, 0.0, {1, 0}), DomainError);
    EXPECT_THROW(dilate(r2, -1.0, {1, 0}), DomainError);
}

TEST(Rotate, Examples) {
    const auto r2 = GroupDescriptor::parabolic_r2();
    expect_point_near(rotate(r2, std::numbers::pi / 2, {1, 0}), {0, 1}, 1e-15);
    const auto h = GroupDescriptor::heisenberg_h2(1.0, 0.0);
    expect_point_near(rotate(h, std::numbers::pi, {1, 0, 1, 0, 2}), {-1, 0, 1, 0, 2}, 1e-15);
}

TEST(Rotate, G1FixesTail) {
    const auto g = GroupDescriptor::g1(1.0, {2.0, 3.0});
    const GroupPoint r = rotate(g, 0.7, {1, 0, 5, -2});
    EXPECT_NEAR(r[0], std::cos(0.7), 1e-15);
    EXPECT_NEAR(r[1], std::sin(0.7), 1e-15);
    EXPECT_EQ(r[2], 5.0);
    EXPECT_EQ(r[3], -2.0);
}

TEST(HomNorm, Examples) {
    const auto g = GroupDescriptor::g1(1.0, {2.0});
    EXPECT_DOUBLE_EQ(hom_norm(g, NormVariant::MaxType, {3, 4, 8}), 5.0);
    const auto r2 = GroupDescriptor::parabolic_r2();
    EXPECT_DOUBLE_EQ(hom_norm(r2, NormVariant::SquaredEuclidean, {3, 4}), 25.0);
    EXPECT_NEAR(hom_norm(r2, NormVariant::SquaredEuclidean, dilate(r2, 3.0, {3, 4})), 75.0, 1e-12);
    for (const auto v : r2.norm_variants()) {
        EXPECT_EQ(hom_norm(r2, v, {0, 0}), 0.0);
        // every shipped variant coincides with ||x||^2 on the parabolic plane
        EXPECT_NEAR(hom_norm(r2, v, {3, 4}), 25.0, 1e-9);
    }
}

TEST(HomNorm, HeisenbergMaxType) {
    const auto h = GroupDescriptor::heisenberg_h2();
    EXPECT_DOUBLE_EQ(hom_norm(h, NormVariant::MaxType, {1, 2, 2, 0, 4}), 3.0);
    EXPECT_DOUBLE_EQ(hom_norm(h, NormVariant::MaxType, {0, 0, 0, 0, -16}), 4.0);
}

TEST(HomNorm, InfimumSolvesUnitEquation) {
    const auto g = GroupDescriptor::g1(0.5, {2.0});
    const GroupPoint x{0.4, -0.9, 3.0};
    const double r = hom_norm(g, NormVariant::InfimumType, x);
    EXPECT_NEAR(dilate(g, 1.0 / r, x).euclidean(), 1.0, 1e-12);
}

TEST(HomNorm, IncompatibleVariant) {
    EXPECT_THROW(hom_norm(GroupDescriptor::heisenberg_h2(), NormVariant::SquaredEuclidean, {0, 0, 0, 0, 1}),
                 ConfigurationError);
    EXPECT_THROW(hom_norm(GroupDescriptor::g1(1.0), NormVariant::SquaredEuclidean, {1, 0}), ConfigurationError);
}

TEST(ValidateGroup, AllFamiliesPass) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(),
                          GroupDescriptor::g1(1.0, {2.0}), GroupDescriptor::g1(0.5, {1.5, 3.0})}) {
        const StructureReport report = validate_group(g, 2000, 11);
        for (const auto& c : report.checks) {
            EXPECT_TRUE(c.passed()) << g.describe() << " " << c.name << " " << c.max_violation;
        }
    }
}

TEST(ValidateGroup, ParabolicIsExact) {
    const StructureReport report = validate_group(GroupDescriptor::parabolic_r2(), 1000, 3);
    EXPECT_LE(report.find("identity")->max_violation, 0.0);
    EXPECT_LE(report.find("inverse")->max_violation, 0.0);
    EXPECT_LE(report.max_violation(), 1e-14);
}

TEST(ValidateGroup, Deterministic) {
    const auto g = GroupDescriptor::heisenberg_h2();
    const auto a = validate_group(g, 300, 5);
    const auto b = validate_group(g, 300, 5);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        EXPECT_EQ(a.checks[i].max_violation, b.checks[i].max_violation);
    }
}

TEST(ValidateGroup, CorruptedRotationIsFlagged) {
    const auto base = GroupDescriptor::g1(1.0);
    const auto corrupted = base.with_rotation_override([](double s) {
        SquareMatrix m = SquareMatrix::identity(2);
        m(0, 0) = std::cos(s);
        m(0, 1) = -std::sin(1.5 * s);
        m(1, 0) = std::sin(s);
        m(1, 1) = std::cos(s);
        return m;
    });
    const StructureReport report = validate_group(corrupted, 500, 1);
    EXPECT_FALSE(report.passed());
    EXPECT_GT(report.find("rotation_orthogonality")->max_violation, 0.1);
}

TEST(ValidateGroup, RejectsZeroSamples) {
    EXPECT_THROW(validate_group(GroupDescriptor::parabolic_r2(), 0, 1), DomainError);
}

TEST(NormEstimates, FiniteConstants) {
    for (const auto& g : {GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(1.0, {2.0})}) {
        for (const auto v : g.norm_variants()) {
            const NormEstimate e = measure_norm_estimates(g, v, 5000, 2);
            EXPECT_TRUE(std::isfinite(e.c1) && e.c1 > 0.0);
            EXPECT_TRUE(std::isfinite(e.c2) && e.c2 > 0.0);
        }
    }
}

TEST(NormEquivalence, RatiosBounded) {
    const auto g = GroupDescriptor::g1(1.0, {2.0});
    const auto variants = g.norm_variants();
    for (const auto a : variants) {
        for (const auto b : variants) {
            const NormRatioRange range = measure_norm_ratio(g, a, b, 10000, 4);
            EXPECT_GT(range.lower, 0.2);
            EXPECT_LT(range.upper, 5.0);
        }
    }
}
