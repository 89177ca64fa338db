#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rotadic/error.hpp"
#include "rotadic/kernel.hpp"
#include "rotadic/numerics.hpp"
#include "rotadic/random.hpp"

using namespace rotadic;

namespace {

QuasiSpace r2_space(double rate = 1.0) { return QuasiSpace(GroupDescriptor::parabolic_r2(rate)); }

} // namespace

TEST(Kernel, GaussianAtUnitDistance) {
    // eta = e^{-|x|^2}, Q = 1: int_0^inf t^-2 e^{-1/t} dt = 1
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::gaussian(2);
    const auto e = kernel_K_detailed(space, eta, {1.0, 0.0}, {0.0, 0.0}, quasi_dist(space, {1.0, 0.0}, {0.0, 0.0}));
    // the part beyond the cap t > 1000 is 1 - e^{-1/1000}
    EXPECT_NEAR(e.value.real(), std::exp(-1.0 / 1000.0), 1e-9);
    EXPECT_NEAR(e.value.imag(), 0.0, 1e-14);
    EXPECT_NEAR(e.tail_bound, 1e-3, 1e-7);
    EXPECT_GE(e.value.real() + e.tail_bound, 1.0 - 1e-9);
}

TEST(Kernel, GaussianTruncated) {
    // int_a^b t^-2 e^{-r^2/t} dt = (e^{-r^2/b} - e^{-r^2/a}) / r^2
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::gaussian(2);
    const GroupPoint x{0.6, -0.9};
    const GroupPoint y{-0.2, 0.3};
    // at y = 0 the rotation does not act; shift both by a translation instead
    const GroupPoint z = right_quotient(space.group(), x, y);
    const double r2 = z.euclidean() * z.euclidean();
    const Truncation tr{0.05, 3.0};
    const Complex v = kernel_K(space, eta, z, GroupPoint::zero(2), tr);
    EXPECT_NEAR(v.real(), (std::exp(-r2 / 3.0) - std::exp(-r2 / 0.05)) / r2, 1e-10);
}

TEST(Kernel, ZeroProfileAndDomain) {
    const QuasiSpace space = r2_space();
    const auto zero = SchwartzProfile::gaussian(2).scaled(0.0);
    EXPECT_EQ(kernel_K(space, zero, {1.0, 0.0}, {0.0, 0.5}), Complex(0.0, 0.0));
    const GroupPoint p{0.3, 0.4};
    EXPECT_THROW(kernel_K(space, SchwartzProfile::gaussian(2), p, p), DomainError);
    EXPECT_NO_THROW(kernel_K(space, SchwartzProfile::gaussian(2), p, p, Truncation{0.1, 1.0}));
    EXPECT_EQ(kernel_K(space, SchwartzProfile::gaussian(2), p, {0.0, 0.0}, Truncation{2.0, 1.0}), Complex(0.0, 0.0));
}

TEST(Kernel, TruncationAdditivity) {
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::laplacian_gaussian(2).translated({0.3, -0.2});
    const GroupPoint x{0.8, 0.4};
    const GroupPoint y{-0.5, 1.1};
    const double d = quasi_dist(space, x, y);
    const Complex whole = kernel_K(space, eta, x, y, d, Truncation{0.0, 50.0});
    const Complex low = kernel_K(space, eta, x, y, d, Truncation{0.0, 0.7});
    const Complex high = kernel_K(space, eta, x, y, d, Truncation{0.7, 50.0});
    EXPECT_LE(std::abs(whole - low - high), 1e-8 * std::max(1.0, std::abs(whole)));
}

TEST(Kernel, TruncatedKernelCrudeBound) {
    // |^eps K| <= sup|eta| int_0^eps t^-Q dt/t is infinite; the lower part is bounded by
    // sup|eta| eps^-Q / Q for K_eps = int_eps^inf
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::laplacian_gaussian(2);
    CounterRng rng = CounterRng::stream(3, "test.kernel.crude");
    for (int k = 0; k < 20; ++k) {
        const GroupPoint x = random_point(space.group(), rng, 2.0);
        const GroupPoint y = random_point(space.group(), rng, 2.0);
        for (const double eps : {0.1, 1.0, 4.0}) {
            const Complex v = kernel_K(space, eta, x, y, Truncation{eps, std::numeric_limits<double>::infinity()});
            EXPECT_LE(std::abs(v), eta.sup_bound() / eps * (1.0 + 1e-9));
        }
    }
}

TEST(Kernel, VariantsAgreeWithoutRotation) {
    const QuasiSpace space = r2_space(0.0);
    const auto eta = SchwartzProfile::hermite_gaussian(2, {1, 0});
    const GroupPoint x{0.7, -0.4};
    const GroupPoint y{-0.1, 0.9};
    const Complex a = kernel_K(space, eta, x, y, {}, {}, KernelVariant::Standard);
    EXPECT_LE(std::abs(a - kernel_K(space, eta, x, y, {}, {}, KernelVariant::PlusRotation)), 1e-12);
    EXPECT_LE(std::abs(a - kernel_K(space, eta, x, y, {}, {}, KernelVariant::RotateFirst)), 1e-12);
}

TEST(Kernel, VariantsRelatedBySymmetry) {
    // a rotation-symmetric eta gives |x (O_{-t} y)^-1| = |(O_t x) y^-1|, so Standard at (x, y)
    // equals RotateFirst with the rotation reversed, i.e. PlusRotation at (y, x) conjugated
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::laplacian_gaussian(2);
    const GroupPoint x{0.7, -0.4};
    const GroupPoint y{-0.1, 0.9};
    const Complex a = kernel_K(space, eta, x, y);
    const Complex b = kernel_K(space, eta, y, x, {}, {}, KernelVariant::PlusRotation);
    EXPECT_LE(std::abs(a - b), 1e-4 * std::abs(a));
    const Complex c = kernel_K(space, eta, x, y, {}, {}, KernelVariant::PlusRotation);
    EXPECT_GT(std::abs(a - c), 1e-4 * std::abs(a));
}

TEST(Kernel, QuadratureConverges) {
    const QuasiSpace space = r2_space();
    const auto eta = SchwartzProfile::laplacian_gaussian(2).translated({0.5, 0.0});
    CounterRng rng = CounterRng::stream(5, "test.kernel.doubling");
    for (int k = 0; k < 10; ++k) {
        const GroupPoint x = random_point(space.group(), rng, 2.0);
        const GroupPoint y = random_point(space.group(), rng, 2.0);
        const double d = quasi_dist(space, x, y);
        const Complex a = kernel_K(space, eta, x, y, d, {}, QuadratureSpec{});
        const Complex b = kernel_K(space, eta, x, y, d, {}, QuadratureSpec{}.doubled());
        EXPECT_LE(std::abs(a - b), 1e-4 * std::abs(b) + 1e-3 * eta.sup_bound() * std::pow(d, -1.0)) << k;
    }
}

TEST(Cotlar, DiagonalIndependentOfScaleWithoutRotation) {
    const auto g = GroupDescriptor::parabolic_r2(0.0);
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const double h1 = cotlar_h(g, psi, 1.0, 1.0);
    for (const double t : {0.125, 8.0}) {
        EXPECT_NEAR(cotlar_h(g, psi, t, t), h1, 1e-9 * h1) << t;
    }
    EXPECT_EQ(cotlar_h(g, SchwartzProfile::laplacian_gaussian(2).scaled(0.0), 2.0, 0.5), 0.0);
}

TEST(Cotlar, ConvolutionL1OfGaussians) {
    // Gaussians e^{-|x|^2/a}/(pi a) convolve to the same family with widths adding: L1 = 1
    const auto g = GroupDescriptor::parabolic_r2(0.0);
    const auto unit = SchwartzProfile::gaussian(2).scaled(1.0 / std::numbers::pi);
    EXPECT_NEAR(convolution_l1(g, unit, 1.0, unit, 0.25), 1.0, 1e-6);
    EXPECT_THROW(convolution_l1(g, unit, 1.0, unit, 1e-6), ResourceError);
}

TEST(Cotlar, LoeschDecay) {
    // ||psi * psi_s||_1 <= C s^gamma with gamma = 1/2 on R2
    const auto g = GroupDescriptor::parabolic_r2();
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    std::vector<double> xs, ys;
    for (int j = 1; j <= 8; ++j) {
        const double s = std::exp2(-j);
        xs.push_back(std::log(s));
        ys.push_back(std::log(convolution_l1(g, psi, 1.0, psi, s)));
    }
    EXPECT_GE(numerics::fit_slope(xs, ys), 0.4);
}

TEST(CompactProfile, MeanZeroSupportedSymmetric) {
    const auto g = GroupDescriptor::g1(0.5);
    const CompactProfile c = compact_cz_profile(g);
    const auto& psi = c.profile;
    EXPECT_TRUE(psi.mean_zero());
    EXPECT_TRUE(psi.rotationally_symmetric());
    EXPECT_EQ(psi.support_radius(), 1.0);
    const GridField f = sample(g, psi, GridSpec::cube(g.dim(), -1.5, 1.5, 301));
    double mass = 0.0;
    for (std::size_t i = 0; i < f.grid().size(); ++i) {
        mass += f[i].real() * f.grid().cell_volume();
    }
    EXPECT_LE(std::abs(mass), 1e-6 * lp_norm(f, 1.0));
    EXPECT_LE(f.sup_norm(), psi.sup_bound());
    EXPECT_EQ(psi(GroupPoint{1.01, 0.0}), Complex(0.0, 0.0));
    EXPECT_THROW(compact_cz_profile(GroupDescriptor::parabolic_r2()), ConfigurationError);
}

TEST(Kernel, RepresentsOperatorOffSupport) {
    // f supported in a ball of Euclidean radius 1/2 around (1, 0); at x away from it
    // T_{eps,R} f(x) = int K^{eps,R}(x, y) f(y) dy
    const auto g = GroupDescriptor::parabolic_r2();
    const QuasiSpace space(g);
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const GroupPoint c{1.0, 0.0};
    const auto f_profile = SchwartzProfile::custom(
        2,
        [c](const GroupPoint& p) {
            const double r2 = (std::pow(p[0] - c[0], 2) + std::pow(p[1] - c[1], 2)) / 0.25;
            return Complex(r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0, 0.0);
        },
        false, false, "bump");
    const GridSpec grid = GridSpec::cube(2, -8.0, 8.0, 257);
    const GridField f = sample(g, f_profile, grid, SampleMode::Point);
    const QuadratureSpec quad;
    OperatorOptions opt;
    opt.diagnostics = false;
    const GridField tf = apply_T(g, psi, f, quad, opt).field;
    const Truncation tr{quad.t_lower, quad.t_upper};
    for (const std::vector<std::size_t> idx : {std::vector<std::size_t>{96, 128}, {128, 160}, {160, 112}}) {
        const GroupPoint x = grid.node(grid.flat(idx));
        Complex direct{};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (f[i] == Complex{}) {
                continue;
            }
            direct += kernel_K(space, psi, x, grid.node(i), tr, quad) * f[i] * grid.cell_volume();
        }
        const Complex op = tf[grid.flat(idx)];
        EXPECT_LE(std::abs(direct - op), 0.02 * std::abs(direct)) << x[0] << "," << x[1];
        EXPECT_GT(std::abs(direct), 1e-3);
    }
}

TEST(Kernel, FarFieldNeedsPeriodResolvedScales) {
    // at quasi distance ~12 the input rotates through many periods across the
    // scales that matter; log-uniform nodes alias, period panels do not
    const auto g = GroupDescriptor::parabolic_r2();
    const QuasiSpace space(g);
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const GroupPoint c{1.0, 0.0};
    const auto f_profile = SchwartzProfile::custom(
        2,
        [c](const GroupPoint& p) {
            const double r2 = (std::pow(p[0] - c[0], 2) + std::pow(p[1] - c[1], 2)) / 0.25;
            return Complex(r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0, 0.0);
        },
        false, false, "bump");
    const GridSpec grid = GridSpec::cube(2, -8.0, 8.0, 129);
    const GridField f = sample(g, f_profile, grid, SampleMode::Point);
    const QuadratureSpec quad;
    const std::size_t at = grid.flat({100, 64});
    const GroupPoint x = grid.node(at);
    ASSERT_GT(quasi_dist(space, x, c), 10.0);
    Complex direct{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (f[i] != Complex{}) {
            direct += kernel_K(space, psi, x, grid.node(i), Truncation{quad.t_lower, quad.t_upper}, quad) * f[i] *
                      grid.cell_volume();
        }
    }
    OperatorOptions opt;
    opt.diagnostics = false;
    opt.resolve_rotation = true;
    const OperatorResult resolved = apply_T(g, psi, f, quad, opt);
    EXPECT_LE(std::abs(resolved.field[at] - direct), 0.02 * std::abs(direct));
    opt.resolve_rotation = false;
    const OperatorResult plain = apply_T(g, psi, f, quad, opt);
    EXPECT_GT(resolved.diagnostics.nodes, 10 * plain.diagnostics.nodes);
}

TEST(Cotlar, VanishesAsTShrinks) {
    // h(t, s) -> 0 as t -> 0 at least like t^(gamma/2)
    const auto g = GroupDescriptor::parabolic_r2();
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    std::vector<double> xs, ys;
    for (int j = 1; j <= 8; ++j) {
        const double t = std::exp2(-j);
        xs.push_back(std::log(t));
        ys.push_back(std::log(cotlar_h(g, psi, t, 1.0)));
    }
    EXPECT_GE(numerics::fit_slope(xs, ys), g.gamma() / 2.0 - 0.05);
}

namespace {

KernelConfig light_config() {
    KernelConfig c;
    c.pointwise_pairs = 100;
    c.epskern_centers = 2;
    c.epskern_samples = 256;
    c.hormander_centers = 1;
    c.hormander_j_max = 2;
    c.hormander_samples = 96;
    c.mws_pairs = 2000;
    c.cotlar_log2_s_min = -1;
    c.cotlar_log2_s_max = 1;
    c.cotlar_half_steps = 10;
    return c;
}

} // namespace

TEST(KernelVerifier, AllChecksOnR2) {
    const QuasiSpace space(GroupDescriptor::parabolic_r2());
    const KernelReport r = verify_kernel_estimates(space, SchwartzProfile::laplacian_gaussian(2), light_config());
    for (const auto& m : r.measurements) {
        EXPECT_TRUE(m.passed) << m.name << " " << m.value << " drift " << m.drift << " " << m.note;
    }
    EXPECT_LE(r.find("pointwise_constant")->drift, 0.2);
    EXPECT_LE(r.epskern_ratio, 10.0);
    EXPECT_GE(r.loesch_slope, 0.4);
    ASSERT_TRUE(r.hormander_adjoint_constant.has_value());
    EXPECT_TRUE(std::isfinite(*r.hormander_adjoint_constant));
    EXPECT_GE(r.engulfing_k, 3.0);
    EXPECT_TRUE(std::isfinite(r.cotlar_sup_integral));
    EXPECT_GT(r.rows.rows(), 0u);
}

TEST(KernelVerifier, Deterministic) {
    const QuasiSpace space(GroupDescriptor::parabolic_r2());
    KernelConfig c = light_config();
    c.epskern = c.hormander = c.loesch = c.cotlar = false;
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const KernelReport a = verify_kernel_estimates(space, psi, c);
    const KernelReport b = verify_kernel_estimates(space, psi, c);
    EXPECT_EQ(a.pointwise_constant, b.pointwise_constant);
    EXPECT_EQ(a.mws_constant, b.mws_constant);
}

TEST(KernelVerifier, AdjointHormanderOnlyForSymmetricPsi) {
    const QuasiSpace space(GroupDescriptor::parabolic_r2());
    KernelConfig c = light_config();
    c.pointwise = c.epskern = c.loesch = c.mws = c.cotlar = false;
    c.hormander_samples = 32;
    c.check_stability = false;
    const auto psi = SchwartzProfile::hermite_gaussian(2, {1, 0});
    const KernelReport r = verify_kernel_estimates(space, psi, c);
    EXPECT_FALSE(r.hormander_adjoint_constant.has_value());
    EXPECT_TRUE(std::isfinite(r.hormander_constant));
}

TEST(KernelVerifier, CzExponentOnG1) {
    for (const double a : {1.0, 0.5}) {
        const auto g = GroupDescriptor::g1(a);
        const QuasiSpace space(g);
        KernelConfig c;
        c.pointwise = c.epskern = c.hormander = c.loesch = c.mws = c.cotlar = false;
        c.cz = true;
        const KernelReport r = verify_kernel_estimates(space, compact_cz_profile(g).profile, c);
        EXPECT_GE(r.cz_epsilon_fit, std::min(1.0, g.gamma()) - 0.1) << a;
        EXPECT_TRUE(r.passed()) << a;
        EXPECT_TRUE(std::isfinite(r.cz_c_fit));
    }
}

TEST(KernelVerifier, CzRequiresCompactSymmetricPsi) {
    KernelConfig c;
    c.cz = true;
    const QuasiSpace g1(GroupDescriptor::g1(1.0));
    EXPECT_THROW(verify_kernel_estimates(g1, SchwartzProfile::laplacian_gaussian(2), c), ConfigurationError);
    const QuasiSpace r2(GroupDescriptor::parabolic_r2());
    EXPECT_THROW(verify_kernel_estimates(r2, SchwartzProfile::laplacian_gaussian(2), c), ConfigurationError);
}
