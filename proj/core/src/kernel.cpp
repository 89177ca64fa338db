#include "rotadic/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rotadic/error.hpp"
#include "rotadic/numerics.hpp"
#include "rotadic/parallel.hpp"
#include "rotadic/random.hpp"

namespace rotadic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// relative size of the rotating part of the integrand left unresolved beyond the oscillation cutoff
constexpr double kOscillationTolerance = 1e-3;

GroupPoint kernel_argument(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y, double t,
                           KernelVariant variant) {
    switch (variant) {
    case KernelVariant::PlusRotation:
        return right_quotient(g, x, rotate(g, t, y));
    case KernelVariant::RotateFirst:
        return right_quotient(g, rotate(g, -t, x), y);
    case KernelVariant::Standard:
    default:
        return right_quotient(g, x, rotate(g, -t, y));
    }
}

struct KernelIntegrand {
    const GroupDescriptor& g;
    const SchwartzProfile& eta;
    const GroupPoint& x;
    const GroupPoint& y;
    KernelVariant variant;
    double q;

    Complex operator()(double t) const {
        const GroupPoint z = kernel_argument(g, x, y, t, variant);
        return eta(dilate(g, 1.0 / t, z)) * std::pow(t, -q);
    }
};

// Euclidean size of the rotated coordinates of p and the smallest exponent among them.
std::pair<double, double> rotating_part(const GroupDescriptor& g, const GroupPoint& p) {
    double r2 = 0.0;
    double a = kInf;
    for (const auto& plane : g.planes()) {
        if (plane.rate == 0.0) {
            continue;
        }
        r2 += p[plane.first] * p[plane.first] + p[plane.second] * p[plane.second];
        a = std::min(a, g.exponents()[plane.first]);
    }
    return {std::sqrt(r2), a};
}

void add_panels(std::vector<LogNode>& nodes, double ta, double tb, double base_width, double max_length,
                double t_osc) {
    if (!(tb > ta)) {
        return;
    }
    const auto& gl = numerics::gauss_legendre(8);
    double u = std::log(ta);
    const double ub = std::log(tb);
    // keep pathological ranges bounded: at most ~8192 oscillation panels
    if (t_osc > ta) {
        const double span = std::min(t_osc, tb) - ta;
        max_length = std::max(max_length, span / 8192.0);
    }
    while (ub - u > 1e-13) {
        double w = base_width;
        const double t = std::exp(u);
        if (t < t_osc) {
            w = std::min(w, std::log1p(max_length / t));
        }
        if (ub - (u + w) < 1e-3 * w) {
            w = ub - u;
        }
        w = std::min(w, ub - u);
        const double mid = u + 0.5 * w;
        for (const auto& [xi, wi] : gl) {
            nodes.push_back({std::exp(mid + 0.5 * w * xi), 0.5 * w * wi});
        }
        u += w;
    }
}

void require_space(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y) {
    const std::size_t n = space.group().dim();
    if (eta.dim() != n || x.dim() != n || y.dim() != n) {
        throw StructuralError("kernel_K: dimensions of profile, points and group differ");
    }
}

} // namespace

namespace {

struct NodePlan {
    double t_lo = 0.0;
    double t_hi = 0.0;
    // refinement window [d_lo / 8, 8 d_hi]
    double d_lo = 0.0;
    double d_hi = 0.0;
    double t_osc = 0.0;
    double tail_bound = 0.0;
    bool empty = false;
};

NodePlan plan_nodes(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y,
                    double d, const Truncation& trunc, const QuadratureSpec& quad, KernelVariant variant) {
    require_space(space, eta, x, y);
    quad.validate();
    if (!(trunc.lower >= 0.0) || std::isnan(trunc.upper)) {
        throw DomainError("kernel_K: truncation needs 0 <= lower");
    }
    if (trunc.lower == 0.0 && (x == y || !(d > 0.0))) {
        throw DomainError("kernel_K: x = y with lower truncation 0 (singular integrand)");
    }
    NodePlan plan;
    if (!(trunc.upper > trunc.lower) || eta.is_zero()) {
        plan.empty = true;
        return plan;
    }
    const GroupDescriptor& g = space.group();
    const double q = g.homogeneous_dimension();
    const KernelIntegrand f{g, eta, x, y, variant, q};

    double t_lo = trunc.lower;
    if (t_lo == 0.0) {
        double ref = 0.0;
        for (const double t : {0.5 * d, d, 2.0 * d}) {
            ref = std::max(ref, std::abs(f(t)));
        }
        double t = std::min(0.5 * d, trunc.upper);
        for (int k = 0; k < 200 && ref > 0.0 && std::abs(f(t)) > 1e-16 * ref; ++k) {
            t *= 0.5;
        }
        t_lo = t;
    }
    plan.t_lo = t_lo;
    plan.t_hi = std::min(trunc.upper, std::max({quad.t_upper, 64.0 * d, 64.0 * t_lo}));
    if (plan.t_hi < trunc.upper) {
        plan.tail_bound = eta.sup_bound() * std::pow(plan.t_hi, -q) / q;
    }
    plan.d_lo = d;
    plan.d_hi = d;
    if (g.max_rotation_rate() > 0.0) {
        const auto [r, a] = rotating_part(g, variant == KernelVariant::RotateFirst ? x : y);
        if (r > 0.0) {
            // the rotating part contributes at most 4 sup|eta| r t^(-Q-a) per unit dt/t
            plan.t_osc = std::pow(4.0 * r * std::pow(std::max(d, 1e-300), q) / (kOscillationTolerance * (q + a)),
                                  1.0 / (q + a));
        }
    }
    return plan;
}

NodePlan merge(const NodePlan& a, const NodePlan& b) {
    if (a.empty) {
        return b;
    }
    if (b.empty) {
        return a;
    }
    NodePlan m;
    m.t_lo = std::min(a.t_lo, b.t_lo);
    m.t_hi = std::max(a.t_hi, b.t_hi);
    m.d_lo = std::min(a.d_lo, b.d_lo);
    m.d_hi = std::max(a.d_hi, b.d_hi);
    m.t_osc = std::max(a.t_osc, b.t_osc);
    m.tail_bound = std::max(a.tail_bound, b.tail_bound);
    return m;
}

std::vector<LogNode> plan_to_nodes(const NodePlan& plan, const GroupDescriptor& g, const QuadratureSpec& quad) {
    std::vector<LogNode> nodes;
    if (plan.empty) {
        return nodes;
    }
    const double m = quad.nodes_per_decade;
    const double base = std::log(10.0) * 8.0 / m;
    const double window = base / quad.refinement;
    const double rate = g.max_rotation_rate();
    const double max_length = rate > 0.0 ? 2.0 * std::numbers::pi / rate * (16.0 / m) : kInf;
    const double w_lo = plan.d_lo > 0.0 ? std::clamp(plan.d_lo / 8.0, plan.t_lo, plan.t_hi) : plan.t_hi;
    const double w_hi = plan.d_hi > 0.0 ? std::clamp(8.0 * plan.d_hi, plan.t_lo, plan.t_hi) : plan.t_hi;
    add_panels(nodes, plan.t_lo, w_lo, base, max_length, plan.t_osc);
    add_panels(nodes, w_lo, w_hi, window, max_length, plan.t_osc);
    add_panels(nodes, w_hi, plan.t_hi, base, max_length, plan.t_osc);
    return nodes;
}

} // namespace

KernelEvaluation kernel_K_detailed(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x,
                                   const GroupPoint& y, double distance, const Truncation& trunc,
                                   const QuadratureSpec& quad, KernelVariant variant) {
    const NodePlan plan = plan_nodes(space, eta, x, y, distance, trunc, quad, variant);
    KernelEvaluation out;
    if (plan.empty) {
        return out;
    }
    const GroupDescriptor& g = space.group();
    const KernelIntegrand f{g, eta, x, y, variant, g.homogeneous_dimension()};
    const auto nodes = plan_to_nodes(plan, g, quad);
    numerics::CompensatedSum re;
    numerics::CompensatedSum im;
    for (const LogNode& node : nodes) {
        const Complex v = f(node.t) * node.weight;
        re.add(v.real());
        im.add(v.imag());
    }
    out.value = Complex(re.value(), im.value());
    out.tail_bound = plan.tail_bound;
    out.t_min = plan.t_lo;
    out.t_max = plan.t_hi;
    out.nodes = nodes.size();
    return out;
}

Complex kernel_K_difference(const QuasiSpace& space, const SchwartzProfile& eta, const KernelArguments& first,
                            const KernelArguments& second, const Truncation& trunc, const QuadratureSpec& quad,
                            KernelVariant variant) {
    const NodePlan plan =
        merge(plan_nodes(space, eta, first.x, first.y, first.distance, trunc, quad, variant),
              plan_nodes(space, eta, second.x, second.y, second.distance, trunc, quad, variant));
    const GroupDescriptor& g = space.group();
    const double q = g.homogeneous_dimension();
    const KernelIntegrand f1{g, eta, first.x, first.y, variant, q};
    const KernelIntegrand f2{g, eta, second.x, second.y, variant, q};
    numerics::CompensatedSum re;
    numerics::CompensatedSum im;
    for (const LogNode& node : plan_to_nodes(plan, g, quad)) {
        const Complex v = (f1(node.t) - f2(node.t)) * node.weight;
        re.add(v.real());
        im.add(v.imag());
    }
    return {re.value(), im.value()};
}

Complex kernel_K(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y,
                 double distance, const Truncation& trunc, const QuadratureSpec& quad, KernelVariant variant) {
    return kernel_K_detailed(space, eta, x, y, distance, trunc, quad, variant).value;
}

Complex kernel_K(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y,
                 const Truncation& trunc, const QuadratureSpec& quad, KernelVariant variant) {
    require_space(space, eta, x, y);
    if (trunc.lower == 0.0 && x == y) {
        throw DomainError("kernel_K: x = y with lower truncation 0 (singular integrand)");
    }
    const double d = x == y ? 0.0 : quasi_dist(space, x, y);
    return kernel_K(space, eta, x, y, d, trunc, quad, variant);
}

double convolution_l1(const GroupDescriptor& g, const SchwartzProfile& u, double scale_u, const SchwartzProfile& v,
                      double scale_v, const TwoScaleGrid& grid) {
    if (!(scale_u > 0.0) || !(scale_v > 0.0)) {
        throw DomainError("convolution_l1: scales must be positive");
    }
    if (u.is_zero() || v.is_zero()) {
        return 0.0;
    }
    const std::size_t n = g.dim();
    std::vector<double> lower(n), upper(n);
    std::vector<std::size_t> counts(n);
    double total = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = g.exponents()[i];
        const double wu = std::pow(scale_u, a);
        const double wv = std::pow(scale_v, a);
        const double h = std::min(wu, wv) / grid.resolution;
        const double half = grid.extent * (wu + wv);
        const auto k = static_cast<std::size_t>(std::ceil(half / h));
        counts[i] = 2 * k + 1;
        lower[i] = -static_cast<double>(k) * h;
        upper[i] = static_cast<double>(k) * h;
        total *= static_cast<double>(counts[i]);
    }
    if (total > static_cast<double>(grid.budget)) {
        throw ResourceError("convolution_l1: two-scale grid with " + std::to_string(static_cast<long long>(total)) +
                            " nodes exceeds the budget");
    }
    const GridSpec spec(lower, upper, counts, grid.budget);
    const GridField a = sample(g, u.dilated(g, scale_u), spec, SampleMode::CellAverage);
    const GridField b = sample(g, v.dilated(g, scale_v), spec, SampleMode::CellAverage);
    return lp_norm(convolve(g, a, b, grid.convolution), 1.0);
}

double cotlar_h(const GroupDescriptor& g, const SchwartzProfile& psi, double t, double s, const TwoScaleGrid& grid) {
    if (!(t > 0.0) || !(s > 0.0)) {
        throw DomainError("cotlar_h: t and s must be positive");
    }
    const double tau = t / s;
    const SchwartzProfile star = psi.conjugate_inverse();
    const double first = convolution_l1(g, psi.rotated(g, s - t), tau, star, 1.0, grid);
    const double second = convolution_l1(g, star, tau, psi, 1.0, grid);
    return std::sqrt(first) + std::sqrt(second);
}

CompactProfile compact_cz_profile(const GroupDescriptor& g) {
    if (g.family() != Family::G1) {
        throw ConfigurationError("compact_cz_profile: defined on G1 only");
    }
    const std::size_t n = g.dim();
    std::vector<NormBlock> blocks(g.blocks().begin(), g.blocks().end());
    auto bump = [blocks](const GroupPoint& x) {
        double rho2 = 0.0;
        for (const auto& b : blocks) {
            double s = 0.0;
            for (std::size_t i = b.begin; i < b.end; ++i) {
                s += x[i] * x[i];
            }
            rho2 += std::pow(s, 1.0 / b.exponent);
        }
        return rho2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - rho2)) : 0.0;
    };
    auto laplacian = [n](const GroupPoint& x) {
        const double r2 = x.euclidean() * x.euclidean();
        return (4.0 * r2 - 2.0 * static_cast<double>(n)) * std::exp(-r2);
    };
    // tensor Gauss-Legendre over [-1, 1]^n
    const std::size_t order = n <= 2 ? 96 : (n == 3 ? 40 : 16);
    const auto& gl = numerics::gauss_legendre(order);
    numerics::CompensatedSum num;
    numerics::CompensatedSum den;
    double sup_lap = 0.0;
    std::vector<std::size_t> idx(n, 0);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        total *= order;
    }
    GroupPoint x(n);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& [xi, wi] = gl[rest % order];
            rest /= order;
            x[i] = xi;
            w *= wi;
        }
        const double b = bump(x);
        if (b == 0.0) {
            continue;
        }
        num.add(w * laplacian(x) * b);
        den.add(w * b);
        sup_lap = std::max(sup_lap, std::abs(laplacian(x)));
    }
    const double c = num.value() / den.value();
    auto psi = [bump, laplacian, c](const GroupPoint& p) { return Complex(bump(p) * (laplacian(p) - c), 0.0); };
    CompactProfile out{SchwartzProfile::custom(n, psi, true, true, "compact_laplacian_bump")
                           .with_support_radius(1.0)
                           .with_sup_bound(sup_lap + std::abs(c)),
                       c};
    return out;
}

bool KernelReport::passed() const noexcept {
    return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed; });
}

const Measurement* KernelReport::find(const std::string& name) const noexcept {
    for (const auto& m : measurements) {
        if (m.name == name) {
            return &m;
        }
    }
    return nullptr;
}

namespace {

struct Checker {
    const QuasiSpace& space;
    const SchwartzProfile& psi;
    const KernelConfig& config;
    KernelReport& report;

    const GroupDescriptor& g() const { return space.group(); }
    double q() const { return g().homogeneous_dimension(); }
    QuadratureSpec refined_quad() const { return config.quadrature.doubled(); }

    void record(const std::string& name, double value, double refined, const std::string& note,
                bool extra = true) {
        Measurement m{name, value, 0.0, true, note};
        if (config.check_stability) {
            m.drift = numerics::relative_drift(value, refined);
        }
        m.passed = std::isfinite(value) && extra &&
                   (!config.check_stability || (std::isfinite(m.drift) && m.drift <= config.stability_tolerance));
        report.measurements.push_back(m);
    }

    void row(const char* check, std::size_t index, double a, double b, double value) {
        report.rows.add_row({std::string(check), static_cast<long long>(index), a, b, value});
    }

    GroupPoint uniform_in(const BoundingBox& box, CounterRng& rng) const {
        GroupPoint p(g().dim());
        for (std::size_t i = 0; i < g().dim(); ++i) {
            p[i] = rng.uniform(box.lower[i], box.upper[i]);
        }
        return p;
    }

    // x with |x y^-1| = r exactly
    GroupPoint at_norm(const GroupPoint& y, double r, CounterRng& rng) const {
        for (;;) {
            GroupPoint z = sample_norm_ball(space, 1.0, rng);
            const double nz = space.norm_of(z);
            if (nz > 1e-3) {
                return group_product(g(), dilate(g(), r / nz, z), y);
            }
        }
    }

    void pointwise() {
        const std::size_t n = config.pointwise_pairs;
        std::vector<double> v1(n, kNaN), v2(n, kNaN), dist(n, kNaN);
        const CounterRng base = CounterRng::stream(config.seed, "singular_operator.pointwise");
        const double lo = std::exp2(config.pointwise_log2_min);
        const double hi = std::exp2(config.pointwise_log2_max);
        parallel_for(n, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            for (int attempt = 0; attempt < 64; ++attempt) {
                const GroupPoint y = random_point(g(), rng, config.center_log2_spread);
                const double r = std::exp2(rng.uniform(config.pointwise_log2_min, config.pointwise_log2_max));
                const GroupPoint x = at_norm(y, r, rng);
                const double d = quasi_dist(space, x, y);
                if (d < lo || d > hi) {
                    continue;
                }
                dist[i] = d;
                v1[i] = std::abs(kernel_K(space, psi, x, y, d, {}, config.quadrature)) * std::pow(d, q());
                if (config.check_stability) {
                    v2[i] = std::abs(kernel_K(space, psi, x, y, d, {}, refined_quad())) * std::pow(d, q());
                }
                return;
            }
        });
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            row("pointwise", i, dist[i], v2[i], v1[i]);
            if (!std::isnan(v1[i])) {
                s1 = std::max(s1, v1[i]);
                s2 = std::max(s2, std::isnan(v2[i]) ? 0.0 : v2[i]);
            }
        }
        report.pointwise_constant = s1;
        record("pointwise_constant", s1, s2, "sup |K(x,y)| d(x,y)^Q over sampled pairs");
    }

    // Monte Carlo integral of `integrand(x, d(x, y))` over the shells eps 2^k <= d(x, y) < eps 2^(k+1).
    struct ShellIntegral {
        std::vector<double> first;
        std::vector<double> refined;
    };

    template <class Integrand>
    ShellIntegral shells(const GroupPoint& y, double r0, int count, std::size_t samples, const CounterRng& base,
                         Integrand&& integrand) {
        ShellIntegral out{std::vector<double>(static_cast<std::size_t>(count), 0.0),
                          std::vector<double>(static_cast<std::size_t>(count), 0.0)};
        for (int k = 0; k < count; ++k) {
            const double inner = r0 * std::exp2(k);
            const double outer = 2.0 * inner;
            const BoundingBox box = quasi_ball_bounding_box(space, y, outer);
            std::vector<double> a(samples, 0.0), b(samples, 0.0);
            const CounterRng shell_rng = base.split(static_cast<std::uint64_t>(k));
            parallel_for(samples, [&](std::size_t i) {
                CounterRng rng = shell_rng.split(i);
                const GroupPoint x = uniform_in(box, rng);
                const double d = quasi_dist(space, x, y);
                if (d >= inner && d < outer) {
                    const auto [va, vb] = integrand(x, d);
                    a[i] = va;
                    b[i] = vb;
                }
            });
            numerics::CompensatedSum sa;
            numerics::CompensatedSum sb;
            for (std::size_t i = 0; i < samples; ++i) {
                sa.add(a[i]);
                sb.add(b[i]);
            }
            const auto ks = static_cast<std::size_t>(k);
            out.first[ks] = box.volume() * sa.value() / static_cast<double>(samples);
            out.refined[ks] = box.volume() * sb.value() / static_cast<double>(samples);
        }
        return out;
    }

    void epskern() {
        const CounterRng centers = CounterRng::stream(config.seed, "singular_operator.epskern.centers");
        std::vector<GroupPoint> ys;
        for (std::size_t c = 0; c < config.epskern_centers; ++c) {
            CounterRng rng = centers.split(c);
            ys.push_back(random_point(g(), rng, config.center_log2_spread));
        }
        double best = 0.0;
        double best_refined = 0.0;
        double lo = kInf;
        double hi = 0.0;
        std::size_t index = 0;
        for (int j = config.epskern_j_min; j <= config.epskern_j_max; ++j) {
            const double eps = std::exp2(-j);
            double sup1 = 0.0;
            double sup2 = 0.0;
            for (std::size_t c = 0; c < ys.size(); ++c) {
                const CounterRng base = CounterRng::stream(config.seed, "singular_operator.epskern")
                                            .split(static_cast<std::uint64_t>(j + 64))
                                            .split(c);
                const auto res = shells(ys[c], eps, config.epskern_shells, config.epskern_samples, base,
                                        [&](const GroupPoint& x, double d) {
                                            const Truncation tr{0.0, eps};
                                            const double a = std::abs(
                                                kernel_K(space, psi, x, ys[c], d, tr, config.quadrature));
                                            const double b =
                                                config.check_stability
                                                    ? std::abs(kernel_K(space, psi, x, ys[c], d, tr, refined_quad()))
                                                    : a;
                                            return std::pair{a, b};
                                        });
                double total1 = 0.0;
                double total2 = 0.0;
                for (std::size_t k = 0; k < res.first.size(); ++k) {
                    total1 += res.first[k];
                    total2 += res.refined[k];
                }
                row("epskern", index++, eps, static_cast<double>(c), total1);
                sup1 = std::max(sup1, total1);
                sup2 = std::max(sup2, total2);
                if (total1 > 0.0 && res.first.back() > 0.05 * total1) {
                    report.notes.push_back("epskern: outermost shell carries more than 5% at eps = " +
                                           format_number(eps));
                }
            }
            lo = std::min(lo, sup1);
            hi = std::max(hi, sup1);
            best = std::max(best, sup1);
            best_refined = std::max(best_refined, sup2);
        }
        report.epskern_constant = best;
        report.epskern_ratio = lo > 0.0 ? hi / lo : kInf;
        record("epskern_constant", best, best_refined,
               "sup over eps and y of int_{d(x,y)>eps} |^eps K(x,y)| dx (Monte Carlo over dyadic shells)");
        Measurement ratio{"epskern_uniformity", report.epskern_ratio, 0.0, report.epskern_ratio <= 10.0,
                          "max/min over eps of the epskern integral"};
        report.measurements.push_back(ratio);
    }

    void hormander() {
        GeometryConfig gc;
        gc.seed = config.seed;
        gc.engulfing_samples = config.engulfing_samples;
        gc.check_stability = false;
        const double k = measure_engulfing(space, gc);
        report.engulfing_k = k;
        const bool adjoint = psi.rotationally_symmetric();
        const CounterRng centers = CounterRng::stream(config.seed, "singular_operator.hormander.centers");
        double sup1 = 0.0;
        double sup2 = 0.0;
        double sup1_adj = 0.0;
        double sup2_adj = 0.0;
        double lo = kInf;
        double hi = 0.0;
        bool converged = true;
        std::size_t index = 0;
        for (int j = config.hormander_j_min; j <= config.hormander_j_max; ++j) {
            const double delta = std::exp2(-j);
            double per_delta = 0.0;
            for (std::size_t c = 0; c < config.hormander_centers; ++c) {
                CounterRng rng = centers.split(c).split(static_cast<std::uint64_t>(j + 64));
                const GroupPoint y = random_point(g(), rng, config.center_log2_spread);
                GroupPoint ybar = y;
                for (int attempt = 0; attempt < 64; ++attempt) {
                    ybar = sample_quasi_ball(space, y, delta, rng);
                    if (quasi_dist(space, ybar, y) < delta) {
                        break;
                    }
                }
                const CounterRng base = CounterRng::stream(config.seed, "singular_operator.hormander")
                                            .split(static_cast<std::uint64_t>(j + 64))
                                            .split(c);
                for (const bool adj : {false, true}) {
                    if (adj && !adjoint) {
                        continue;
                    }
                    auto diff = [&](const GroupPoint& x, double d, const QuadratureSpec& quad) {
                        if (adj) {
                            return std::abs(kernel_K_difference(space, psi, {y, x, d}, {ybar, x, d}, {}, quad));
                        }
                        return std::abs(kernel_K_difference(space, psi, {x, y, d}, {x, ybar, d}, {}, quad));
                    };
                    const auto res = shells(y, k * delta, config.hormander_shells, config.hormander_samples,
                                            base.split(adj ? 1 : 0), [&](const GroupPoint& x, double d) {
                                                const double a = diff(x, d, config.quadrature);
                                                const double b =
                                                    config.check_stability ? diff(x, d, refined_quad()) : a;
                                                return std::pair{a, b};
                                            });
                    auto total = [&](const std::vector<double>& s) {
                        double sum = 0.0;
                        for (const double v : s) {
                            sum += v;
                        }
                        const std::size_t m = s.size();
                        // shells that have dropped to the quadrature floor need no tail
                        if (m >= 2 && s[m - 1] > 1e-3 * sum && s[m - 2] > 0.0) {
                            const double ratio = s[m - 1] / s[m - 2];
                            if (ratio < 0.9) {
                                sum += s[m - 1] * ratio / (1.0 - ratio);
                            } else {
                                converged = false;
                            }
                        }
                        return sum;
                    };
                    const double t1 = total(res.first);
                    const double t2 = total(res.refined);
                    row(adj ? "hormander_adjoint" : "hormander", index++, delta, static_cast<double>(c), t1);
                    if (adj) {
                        sup1_adj = std::max(sup1_adj, t1);
                        sup2_adj = std::max(sup2_adj, t2);
                    } else {
                        sup1 = std::max(sup1, t1);
                        sup2 = std::max(sup2, t2);
                        per_delta = std::max(per_delta, t1);
                    }
                }
            }
            lo = std::min(lo, per_delta);
            hi = std::max(hi, per_delta);
        }
        report.hormander_constant = sup1;
        std::ostringstream note;
        note << "sup over delta, y, ybar of int_{d(x,y)>k delta} |K(x,y)-K(x,ybar)| dx, k = " << format_number(k)
             << "; max/min over delta " << format_number(lo > 0.0 ? hi / lo : kInf);
        if (!converged) {
            note << "; shell sums not geometrically decaying";
        }
        record("hormander_constant", sup1, sup2, note.str(), converged);
        if (adjoint) {
            report.hormander_adjoint_constant = sup1_adj;
            record("hormander_adjoint_constant", sup1_adj, sup2_adj,
                   "sup of int_{d(x,y)>k delta} |K(y,x)-K(ybar,x)| dx", converged);
        }
    }

    // L1 norms over s = 2^-j; NaN where the grid exceeds the budget.
    void loesch() {
        TwoScaleGrid fine = config.grid;
        fine.resolution *= std::numbers::sqrt2;
        std::vector<double> xs, y1, y2;
        double c1 = 0.0;
        double c2 = 0.0;
        std::size_t skipped = 0;
        for (int j = config.loesch_j_min; j <= config.loesch_j_max; ++j) {
            const double s = std::exp2(-j);
            double a = kNaN;
            double b = kNaN;
            try {
                a = convolution_l1(g(), psi, 1.0, psi, s, config.grid);
                b = config.check_stability ? convolution_l1(g(), psi, 1.0, psi, s, fine) : a;
            } catch (const ResourceError&) {
                ++skipped;
            }
            row("loesch", static_cast<std::size_t>(j), s, b, a);
            if (std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0) {
                xs.push_back(std::log(s));
                y1.push_back(std::log(a));
                y2.push_back(std::log(b));
                c1 = std::max(c1, a / std::pow(s, g().gamma()));
                c2 = std::max(c2, b / std::pow(s, g().gamma()));
            }
        }
        const double slope = xs.size() >= 3 ? numerics::fit_slope(xs, y1) : kNaN;
        const double slope_fine = xs.size() >= 3 ? numerics::fit_slope(xs, y2) : kNaN;
        report.loesch_slope = slope;
        std::ostringstream note;
        note << "slope of log||psi * psi_s||_1 vs log s over " << xs.size() << " scales";
        if (!xs.empty()) {
            note << " in [" << format_number(std::exp(xs.back())) << ", " << format_number(std::exp(xs.front()))
                 << "]";
        }
        if (skipped > 0) {
            note << "; " << skipped << " scales over the grid budget";
        }
        record("loesch_slope", slope, slope_fine, note.str());
        Measurement gamma{"loesch_slope_vs_gamma", slope, 0.0, slope >= g().gamma() - 0.1,
                          "fitted slope >= gamma - 0.1, gamma = " + format_number(g().gamma())};
        report.measurements.push_back(gamma);
        record("loesch_constant", c1, c2, "max ||psi * psi_s||_1 / s^gamma");
    }

    void mws() {
        const std::size_t n = config.mws_pairs;
        const double l = config.mws_l >= 0 ? config.mws_l : static_cast<double>(g().dim() + 1);
        const double gamma = g().gamma();
        const std::size_t total = config.check_stability ? 2 * n : n;
        std::vector<double> ratio(total, 0.0);
        const CounterRng base = CounterRng::stream(config.seed, "singular_operator.mws");
        parallel_for(total, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            const GroupPoint x = random_point(g(), rng, config.center_log2_spread);
            GroupPoint y;
            if (i % 2 == 0) {
                y = random_point(g(), rng, config.center_log2_spread);
            } else {
                const double r = std::exp2(rng.uniform(-10.0, 2.0));
                y = group_product(g(), x, at_norm(GroupPoint::zero(g().dim()), r, rng));
            }
            const double gap = space.norm_of(group_product(g(), group_inverse(g(), x), y));
            const double weight =
                std::pow(gap, gamma) * (std::pow(1.0 + x.euclidean(), -l) + std::pow(1.0 + y.euclidean(), -l));
            if (weight > 0.0) {
                ratio[i] = std::abs(psi(x) - psi(y)) / weight;
            }
        });
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            if (i < n) {
                s1 = std::max(s1, ratio[i]);
            }
            s2 = std::max(s2, ratio[i]);
            if (i < 2000) {
                row("mws", i, 0.0, 0.0, ratio[i]);
            }
        }
        report.mws_constant = s1;
        record("mws_constant", s1, s2,
               "sup |psi(x)-psi(y)| / (|x^-1 y|^gamma ((1+|x|)^-l + (1+|y|)^-l)), l = " + format_number(l) +
                   "; refined = twice the pairs");
    }

    // int h(t, s) dt/t over tau = t/s = 2^(j/2) with power-law tails.
    double cotlar_integral(const std::vector<double>& u, const std::vector<double>& h) {
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (std::isfinite(h[i]) && h[i] > 0.0) {
                ok.push_back(i);
            }
        }
        if (ok.size() < 4) {
            return kNaN;
        }
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < ok.size(); ++k) {
            sum += 0.5 * (h[ok[k]] + h[ok[k + 1]]) * (u[ok[k + 1]] - u[ok[k]]);
        }
        auto slope = [&](std::size_t a, std::size_t b, std::size_t c) {
            const std::vector<double> xs{u[a], u[b], u[c]};
            const std::vector<double> ys{std::log(h[a]), std::log(h[b]), std::log(h[c])};
            return numerics::fit_slope(xs, ys);
        };
        const std::size_t m = ok.size();
        const double p_lo = slope(ok[0], ok[1], ok[2]);
        const double p_hi = slope(ok[m - 3], ok[m - 2], ok[m - 1]);
        if (!(p_lo > 0.0) || !(p_hi < 0.0)) {
            return kInf;
        }
        return sum + h[ok[0]] / p_lo + h[ok[m - 1]] / (-p_hi);
    }

    void cotlar() {
        const int steps = config.cotlar_half_steps;
        TwoScaleGrid fine = config.grid;
        fine.resolution *= std::numbers::sqrt2;
        const bool symmetric = psi.rotationally_symmetric() || g().max_rotation_rate() == 0.0;
        std::vector<double> u;
        for (int j = -steps; j <= steps; ++j) {
            u.push_back(0.5 * j * std::numbers::ln2);
        }
        const SchwartzProfile star = psi.conjugate_inverse();
        auto l1 = [&](const SchwartzProfile& a, double tau, const SchwartzProfile& b, const TwoScaleGrid& grid) {
            try {
                return convolution_l1(g(), a, tau, b, 1.0, grid);
            } catch (const ResourceError&) {
                return kNaN;
            }
        };
        std::vector<double> second1(u.size()), second2(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double tau = std::exp(u[i]);
            second1[i] = l1(star, tau, psi, config.grid);
            second2[i] = config.check_stability ? l1(star, tau, psi, fine) : second1[i];
        }
        double sup1 = 0.0;
        double sup2 = 0.0;
        std::vector<double> first1(u.size()), first2(u.size());
        bool computed = false;
        for (int k = config.cotlar_log2_s_min; k <= config.cotlar_log2_s_max; ++k) {
            const double s = std::exp2(k);
            if (!symmetric || !computed) {
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const double tau = std::exp(u[i]);
                    const SchwartzProfile turned = psi.rotated(g(), s - tau * s);
                    first1[i] = l1(turned, tau, star, config.grid);
                    first2[i] = config.check_stability ? l1(turned, tau, star, fine) : first1[i];
                }
                computed = true;
            }
            std::vector<double> h1(u.size()), h2(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) {
                h1[i] = std::sqrt(first1[i]) + std::sqrt(second1[i]);
                h2[i] = std::sqrt(first2[i]) + std::sqrt(second2[i]);
                row("cotlar_h", static_cast<std::size_t>(k + 64) * 1000 + i, s, std::exp(u[i]), h1[i]);
            }
            const double i1 = cotlar_integral(u, h1);
            const double i2 = cotlar_integral(u, h2);
            row("cotlar_integral", static_cast<std::size_t>(k + 64), s, i2, i1);
            sup1 = std::isnan(i1) ? kNaN : std::max(sup1, i1);
            sup2 = std::isnan(i2) ? kNaN : std::max(sup2, i2);
        }
        report.cotlar_sup_integral = sup1;
        std::ostringstream note;
        note << "sup over s = 2^k, k in [" << config.cotlar_log2_s_min << ", " << config.cotlar_log2_s_max
             << "] of int h(t,s) dt/t; tau = t/s sampled at 2^(j/2), |j| <= " << steps
             << ", power-law tails beyond";
        if (symmetric) {
            note << "; psi o O = psi so h depends on t/s only";
        }
        record("cotlar_sup_integral", sup1, sup2, note.str());
    }

    void cz() {
        if (g().family() != Family::G1 || !psi.rotationally_symmetric() || !std::isfinite(psi.support_radius())) {
            throw ConfigurationError(
                "cz exponent check needs G1 and a rotation-symmetric psi with compact support in B_1");
        }
        GeometryConfig gc;
        gc.seed = config.seed;
        gc.engulfing_samples = config.engulfing_samples;
        gc.check_stability = false;
        const double k = std::max(4.0, measure_engulfing(space, gc));
        const std::size_t n = config.cz_samples;
        constexpr double kSpan = 8.0;
        std::vector<double> ratio(n, kNaN), value1(n, kNaN), value2(n, kNaN);
        const CounterRng base = CounterRng::stream(config.seed, "singular_operator.cz");
        parallel_for(n, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            for (int attempt = 0; attempt < 64; ++attempt) {
                const GroupPoint y = random_point(g(), rng, 1.0);
                const double r = std::exp2(rng.uniform(-6.0, -1.0));
                const GroupPoint ybar = sample_quasi_ball(space, y, r, rng);
                const double delta = quasi_dist(space, ybar, y);
                if (!(delta > 0.0)) {
                    continue;
                }
                const GroupPoint x = at_norm(y, delta * k * std::exp2(rng.uniform(0.0, kSpan)), rng);
                const double dxy = quasi_dist(space, x, y);
                if (!(k * delta < dxy)) {
                    continue;
                }
                const double dxb = quasi_dist(space, x, ybar);
                const double big = std::min(dxy, dxb);
                const double mu = ball_volume(space, y, big, VolumeMethod::closed_form()).value;
                auto lhs = [&](const QuadratureSpec& quad) {
                    return std::abs(kernel_K_difference(space, psi, {y, x, dxy}, {ybar, x, dxb}, {}, quad)) +
                           std::abs(kernel_K_difference(space, psi, {x, y, dxy}, {x, ybar, dxb}, {}, quad));
                };
                ratio[i] = delta / big;
                value1[i] = lhs(config.quadrature) * mu;
                value2[i] = config.check_stability ? lhs(refined_quad()) * mu : value1[i];
                return;
            }
        });
        auto fit = [&](const std::vector<double>& value, double& c_out) {
            // upper envelope: sup per unit bin of log2(delta/Delta), then a line through the bin maxima;
            // only bins inside the sampled range delta/d(x,y) in [2^-span / k, 1 / k] count
            const int b_min = static_cast<int>(std::ceil(-kSpan - std::log2(k)));
            const int b_max = static_cast<int>(std::floor(-std::log2(k))) - 1;
            std::map<int, double> bins;
            std::map<int, int> counts;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(value[i]) || !(value[i] > 0.0) || !(ratio[i] > 0.0)) {
                    continue;
                }
                const int b = static_cast<int>(std::floor(std::log2(ratio[i])));
                bins[b] = std::max(bins.count(b) ? bins[b] : 0.0, value[i]);
                ++counts[b];
            }
            std::vector<double> xs, ys;
            for (const auto& [b, v] : bins) {
                if (counts[b] >= 20 && b >= b_min && b <= b_max) {
                    xs.push_back(b + 0.5);
                    ys.push_back(std::log2(v));
                }
            }
            if (xs.size() < 3) {
                c_out = kNaN;
                return kNaN;
            }
            const double eps = numerics::fit_slope(xs, ys);
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (std::isfinite(value[i]) && ratio[i] > 0.0) {
                    c = std::max(c, value[i] / std::pow(ratio[i], eps));
                }
            }
            c_out = c;
            return eps;
        };
        double c1 = 0.0;
        double c2 = 0.0;
        const double e1 = fit(value1, c1);
        const double e2 = fit(value2, c2);
        for (std::size_t i = 0; i < n; ++i) {
            row("cz_kernel", i, ratio[i], value2[i], value1[i]);
        }
        report.cz_epsilon_fit = e1;
        report.cz_c_fit = c1;
        const double target = std::min(1.0, g().gamma()) - 0.1;
        record("cz_epsilon_fit", e1, e2,
               "slope of the per-bin sup of (|K(y,x)-K(ybar,x)|+|K(x,y)-K(x,ybar)|) mu(B~_Delta(y)) against "
               "delta/Delta, k = " + format_number(k),
               e1 >= target);
        record("cz_c_fit", c1, c2, "max of the same quantity divided by (delta/Delta)^eps");
    }
};

} // namespace

KernelReport verify_kernel_estimates(const QuasiSpace& space, const SchwartzProfile& psi, const KernelConfig& config) {
    if (psi.dim() != space.group().dim()) {
        throw StructuralError("verify_kernel_estimates: profile dimension does not match the group");
    }
    config.quadrature.validate();
    KernelReport report;
    report.quadrature = config.quadrature;
    report.seed = config.seed;
    Checker check{space, psi, config, report};
    if (config.cz) {
        // configuration errors surface before any expensive work
        if (space.group().family() != Family::G1 || !psi.rotationally_symmetric() ||
            !std::isfinite(psi.support_radius())) {
            throw ConfigurationError(
                "cz exponent check needs G1 and a rotation-symmetric psi with compact support in B_1");
        }
    }
    if (config.pointwise) {
        check.pointwise();
    }
    if (config.epskern) {
        check.epskern();
    }
    if (config.hormander) {
        check.hormander();
    }
    if (config.loesch) {
        check.loesch();
    }
    if (config.mws) {
        check.mws();
    }
    if (config.cotlar) {
        check.cotlar();
    }
    if (config.cz) {
        check.cz();
    }
    report.notes.push_back("quadrature: " + config.quadrature.describe());
    return report;
}

} // namespace rotadic
