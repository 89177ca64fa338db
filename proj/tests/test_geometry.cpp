#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "rotadic/error.hpp"
#include "rotadic/geometry.hpp"
#include "rotadic/parallel.hpp"

using namespace rotadic;

namespace {

constexpr double kPi = std::numbers::pi;

GroupPoint unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Brute-force min over |s| <= r of |u - e^{is} v|^(1/a) on a dense grid.
double dense_orbit_min(const GroupPoint& x, const GroupPoint& y, double r, double a, int points = 200001) {
    const std::complex<double> u(x[0], x[1]);
    const std::complex<double> v(y[0], y[1]);
    double best = 1e300;
    for (int k = 0; k < points; ++k) {
        const double s = -r + 2.0 * r * k / (points - 1);
        best = std::min(best, std::pow(std::abs(u - std::polar(1.0, s) * v), 1.0 / a));
    }
    return best;
}

} // namespace

TEST(QuasiBall, WorkedMembership) {
    const QuasiSpace g1(GroupDescriptor::g1(1.0));
    const GroupPoint y{1.0, 0.0};
    EXPECT_TRUE(quasi_ball_contains(g1, y, 0.31, unit(0.3)));
    EXPECT_TRUE(quasi_ball_contains(g1, y, 0.2, unit(0.3)));
    EXPECT_FALSE(quasi_ball_contains(g1, y, 0.14, unit(0.3)));
}

TEST(QuasiBall, CentreIsInside) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(0.5, {2.0})}) {
        const QuasiSpace space(g);
        CounterRng rng = CounterRng::stream(3, "test.centre");
        for (int k = 0; k < 50; ++k) {
            const GroupPoint y = random_point(g, rng);
            EXPECT_TRUE(quasi_ball_contains(space, y, 1e-6, y));
        }
    }
}

TEST(QuasiBall, RejectsNonPositiveRadius) {
    const QuasiSpace space(GroupDescriptor::g1(1.0));
    EXPECT_THROW(quasi_ball_contains(space, {1, 0}, 0.0, {1, 0}), DomainError);
    EXPECT_THROW(quasi_ball_contains(space, {1, 0}, -1.0, {1, 0}), DomainError);
}

TEST(QuasiBall, ClosedFormMatchesDenseScan) {
    const auto g = GroupDescriptor::g1(0.7);
    const QuasiSpace space(g);
    CounterRng rng = CounterRng::stream(9, "test.dense");
    for (int k = 0; k < 40; ++k) {
        const GroupPoint x = random_point(g, rng, 1.0);
        const GroupPoint y = random_point(g, rng, 1.0);
        const double r = std::exp2(rng.uniform(-4.0, 2.0));
        const double expected = dense_orbit_min(x, y, r, 0.7);
        EXPECT_NEAR(orbit_minimum(space, y, r, x), expected, 1e-6 * (1.0 + expected));
    }
}

TEST(QuasiBall, ScanPathMatchesClosedForm) {
    // with a single block the infimum norm equals the max-type norm but goes through the scan path
    const auto g = GroupDescriptor::g1(0.8);
    const QuasiSpace scanned(g, NormVariant::InfimumType);
    const QuasiSpace exact(g);
    ASSERT_FALSE(scanned.has_closed_form_metric());
    ASSERT_TRUE(exact.has_closed_form_metric());
    CounterRng rng = CounterRng::stream(4, "test.scan");
    for (int k = 0; k < 100; ++k) {
        const GroupPoint x = random_point(g, rng, 1.0);
        const GroupPoint y = random_point(g, rng, 1.0);
        const double r = std::exp2(rng.uniform(-3.0, 2.0));
        EXPECT_NEAR(orbit_minimum(scanned, y, r, x), orbit_minimum(exact, y, r, x), 1e-9);
        EXPECT_NEAR(quasi_dist(scanned, x, y, 1e-11), quasi_dist(exact, x, y), 1e-9);
    }
}

TEST(QuasiBall, MembershipIsSymmetric) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(1.0, {2.0})}) {
        const QuasiSpace space(g);
        CounterRng rng = CounterRng::stream(5, "test.symmetry");
        int disagreements = 0;
        for (int k = 0; k < 1000; ++k) {
            const GroupPoint x = random_point(g, rng, 1.0);
            const GroupPoint y = random_point(g, rng, 1.0);
            const double r = std::exp2(rng.uniform(-2.0, 2.0));
            disagreements += quasi_ball_contains(space, y, r, x) != quasi_ball_contains(space, x, r, y);
        }
        EXPECT_EQ(disagreements, 0) << g.describe();
    }
}

TEST(QuasiBall, MonotoneInRadius) {
    const QuasiSpace space(GroupDescriptor::heisenberg_h2());
    CounterRng rng = CounterRng::stream(6, "test.monotone");
    for (int k = 0; k < 30; ++k) {
        const GroupPoint x = random_point(space.group(), rng, 1.0);
        const GroupPoint y = random_point(space.group(), rng, 1.0);
        int switches = 0;
        bool previous = false;
        for (int j = 0; j < 80; ++j) {
            const bool now = quasi_ball_contains(space, y, std::exp2(-6.0 + 0.125 * j), x);
            switches += now != previous;
            EXPECT_FALSE(previous && !now);
            previous = now;
        }
        EXPECT_LE(switches, 1);
    }
}

TEST(QuasiDist, WorkedDistance) {
    // independent oracle: root of s = 2 sin((0.5 - s) / 2) by bisection
    double lo = 0.0;
    double hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid - 2.0 * std::sin(0.5 * (0.5 - mid)) < 0.0 ? lo : hi) = mid;
    }
    const QuasiSpace space(GroupDescriptor::g1(1.0));
    const double d = quasi_dist(space, unit(0.5), {1.0, 0.0});
    EXPECT_NEAR(d, 0.2497, 5e-4);
    EXPECT_NEAR(d, lo, 1e-12);
    EXPECT_NEAR(quasi_dist(space, unit(0.5), {1.0, 0.0}, 1e-12, DistanceMethod::Bisection), lo, 1e-10);
}

TEST(QuasiDist, IdentityAndFixedPoint) {
    const auto g = GroupDescriptor::g1(1.0, {2.0});
    const QuasiSpace space(g);
    const GroupPoint x{0.3, -0.7, 1.2};
    EXPECT_EQ(quasi_dist(space, x, x), 0.0);
    const GroupPoint y{0.0, 0.0, -0.4};
    EXPECT_NEAR(quasi_dist(space, x, y), hom_norm(g, NormVariant::MaxType, x - y), 1e-12);
}

TEST(QuasiDist, ConsistentWithMembership) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(0.5, {1.5})}) {
        const QuasiSpace space(g);
        CounterRng rng = CounterRng::stream(8, "test.consistency");
        const double tol = 1e-9;
        for (int k = 0; k < 200; ++k) {
            const GroupPoint x = random_point(g, rng, 1.0);
            const GroupPoint y = random_point(g, rng, 1.0);
            const double d = quasi_dist(space, x, y, tol);
            const double r = d * std::exp2(rng.uniform(-1.0, 1.0));
            if (std::abs(r - d) > 10.0 * tol) {
                EXPECT_EQ(d < r, quasi_ball_contains(space, y, r, x)) << g.describe() << " d=" << d << " r=" << r;
            }
        }
    }
}

TEST(QuasiDist, MethodsAgree) {
    for (const auto& g : {GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(1.0, {2.0})}) {
        const QuasiSpace space(g);
        CounterRng rng = CounterRng::stream(10, "test.methods");
        for (int k = 0; k < 100; ++k) {
            const GroupPoint x = random_point(g, rng, 1.0);
            const GroupPoint y = random_point(g, rng, 1.0);
            const double a = quasi_dist(space, x, y, 1e-10, DistanceMethod::Bisection);
            const double b = quasi_dist(space, x, y, 1e-10, DistanceMethod::MinMax);
            EXPECT_NEAR(a, b, 1e-8 * (1.0 + a)) << g.describe();
        }
    }
}

TEST(SweptDisc, ExactRegime) {
    CounterRng rng = CounterRng::stream(1, "test.disc");
    for (int k = 0; k < 50; ++k) {
        const double rho = rng.uniform(0.1, 3.0);
        const double s = rho * rng.uniform(0.01, 0.99);
        const double phi = rng.uniform(0.0, kPi / 2);
        EXPECT_NEAR(swept_disc_area(s, phi, rho), kPi * s * s + 4.0 * s * phi * rho, 1e-10 * (1.0 + rho * rho));
    }
}

TEST(SweptDisc, GeneralRegimeAgainstHitOrMiss) {
    struct Case {
        double s, phi, rho;
    };
    for (const Case c : {Case{1.5, 0.4, 1.0}, Case{0.8, 2.5, 1.0}, Case{0.3, 3.0, 1.0}, Case{2.0, 1.7, 0.5}}) {
        CounterRng rng = CounterRng::stream(2, "test.hitmiss");
        const double half = c.rho + c.s;
        const int n = 400000;
        int hits = 0;
        for (int k = 0; k < n; ++k) {
            const std::complex<double> p(rng.uniform(-half, half), rng.uniform(-half, half));
            // nearest arc point sits at the clamped angle
            const double d = std::abs(p - std::polar(c.rho, std::clamp(std::arg(p), -c.phi, c.phi)));
            hits += d < c.s;
        }
        const double box = 4.0 * half * half;
        const double p = static_cast<double>(hits) / n;
        const double sigma = box * std::sqrt(p * (1.0 - p) / n);
        EXPECT_NEAR(swept_disc_area(c.s, c.phi, c.rho), box * p, 4.0 * sigma) << c.s << " " << c.phi << " " << c.rho;
    }
}

TEST(BallVolume, ClosedFormExamples) {
    const QuasiSpace space(GroupDescriptor::g1(1.0));
    const VolumeEstimate v = ball_volume(space, {1.0, 0.0}, 0.1, VolumeMethod::closed_form());
    EXPECT_NEAR(v.value, kPi * 0.01 + 0.04, 1e-12);
    EXPECT_NEAR(ball_volume(space, {0.0, 0.0}, 0.3, VolumeMethod::closed_form()).value, kPi * 0.09, 1e-14);
    const QuasiSpace tall(GroupDescriptor::g1(1.0, {2.0}));
    EXPECT_NEAR(ball_volume(tall, {0.0, 0.0, 5.0}, 0.5, VolumeMethod::closed_form()).value, kPi * 0.25 * 2.0 * 0.25, 1e-14);
}

TEST(BallVolume, ClosedFormNeedsG1) {
    EXPECT_THROW(ball_volume(QuasiSpace(GroupDescriptor::heisenberg_h2()), {0, 0, 0, 0, 0}, 1.0, VolumeMethod::closed_form()),
                 ConfigurationError);
    EXPECT_THROW(ball_volume(QuasiSpace(GroupDescriptor::parabolic_r2()), {0, 0}, 1.0, VolumeMethod::closed_form()),
                 ConfigurationError);
    EXPECT_THROW(ball_volume(QuasiSpace(GroupDescriptor::g1(1.0)), {0, 0}, 0.0, VolumeMethod::closed_form()), DomainError);
}

TEST(BallVolume, MonteCarloAgreesWithClosedForm) {
    const auto g = GroupDescriptor::g1(1.0, {2.0});
    const QuasiSpace space(g);
    CounterRng rng = CounterRng::stream(12, "test.mc");
    for (int k = 0; k < 20; ++k) {
        const GroupPoint y = random_point(g, rng, 2.0);
        const double r = std::exp2(rng.uniform(-4.0, 2.0));
        const VolumeEstimate exact = ball_volume(space, y, r, VolumeMethod::closed_form());
        const VolumeEstimate mc = ball_volume(space, y, r, VolumeMethod::monte_carlo(20000, 100 + k));
        EXPECT_NEAR(mc.value, exact.value, mc.error) << "r=" << r;
        EXPECT_GT(mc.error, 0.0);
    }
}

TEST(BallVolume, MonteCarloDeterministicAcrossThreads) {
    const QuasiSpace space(GroupDescriptor::heisenberg_h2());
    const GroupPoint y{0.5, 0.2, -0.3, 0.1, 0.4};
    set_thread_count(1);
    const VolumeEstimate a = ball_volume(space, y, 0.5, VolumeMethod::monte_carlo(20000, 3));
    set_thread_count(4);
    const VolumeEstimate b = ball_volume(space, y, 0.5, VolumeMethod::monte_carlo(20000, 3));
    set_thread_count(1);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.error, b.error);
}

TEST(BallVolume, RotationPreservesVolume) {
    const QuasiSpace space(GroupDescriptor::heisenberg_h2());
    const GroupPoint y{0.8, 0.2, -0.3, 0.6, 0.4};
    const VolumeEstimate a = ball_volume(space, y, 0.5, VolumeMethod::monte_carlo(40000, 3));
    const VolumeEstimate b = ball_volume(space, rotate(space.group(), 1.1, y), 0.5, VolumeMethod::monte_carlo(40000, 4));
    EXPECT_NEAR(a.value, b.value, a.error + b.error);
}

TEST(BoundingBox, ContainsSampledPoints) {
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(0.5, {2.0})}) {
        const QuasiSpace space(g);
        CounterRng rng = CounterRng::stream(13, "test.box");
        for (int k = 0; k < 20; ++k) {
            const GroupPoint y = random_point(g, rng, 1.0);
            const double r = std::exp2(rng.uniform(-2.0, 2.0));
            const BoundingBox box = quasi_ball_bounding_box(space, y, r, 1.0);
            for (int j = 0; j < 200; ++j) {
                const GroupPoint x = sample_quasi_ball(space, y, r, rng);
                for (std::size_t i = 0; i < g.dim(); ++i) {
                    EXPECT_GE(x[i], box.lower[i] - 1e-12);
                    EXPECT_LE(x[i], box.upper[i] + 1e-12);
                }
            }
        }
    }
}

TEST(SpaceAxioms, G1SmallRun) {
    GeometryConfig config;
    config.doubling_samples = 200;
    config.engulfing_samples = 50;
    config.triangle_samples = 500;
    config.tecnical_samples = 300;
    config.growth_samples = 50;
    config.dichte_samples = 30;
    const GeometryReport report = verify_space_axioms(QuasiSpace(GroupDescriptor::g1(1.0)), config);
    EXPECT_LE(report.doubling_constant, 8.0);
    EXPECT_GE(report.engulfing_constant, 3.0);
    EXPECT_TRUE(std::isfinite(report.quasi_triangle_kappa));
    EXPECT_GT(report.growth_constant, 0.0);
    EXPECT_TRUE(std::isfinite(report.dichte_c1));
    EXPECT_TRUE(std::isfinite(report.dichte_c2));
    EXPECT_TRUE(std::isfinite(report.tecnical_constant));
    for (const auto& m : report.measurements) {
        EXPECT_TRUE(m.passed) << m.name << " value=" << m.value << " drift=" << m.drift;
    }
}
