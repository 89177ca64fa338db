// Acceptance run: one PASS/FAIL line per criterion.
//
//   rotadic_acceptance [--only N[,M...]] [--expect-fail N[,M...]]
//
// Exit status is 0 when the failing criteria are exactly the expected-failure
// set (an expected failure that passes is reported as an error too).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rotadic/cz.hpp"
#include "rotadic/experiments.hpp"
#include "rotadic/geometry.hpp"
#include "rotadic/kernel.hpp"
#include "rotadic/operator.hpp"
#include "rotadic/report.hpp"

using namespace rotadic;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<GroupDescriptor> families() {
    return {GroupDescriptor::parabolic_r2(), GroupDescriptor::heisenberg_h2(), GroupDescriptor::g1(1.0)};
}

const Measurement& need(const std::vector<Measurement>& ms, const std::string& name) {
    for (const auto& m : ms) {
        if (m.name == name) {
            return m;
        }
    }
    throw std::runtime_error("measurement " + name + " missing");
}

// ------------------------------------------------------------------ geometry cache

struct GeometryRuns {
    GeometryReport g1;
    GeometryReport r2;
    GeometryReport h2;
};

const GeometryRuns& geometry_runs() {
    static const GeometryRuns runs = [] {
        GeometryRuns r;
        GeometryConfig c;
        c.seed = 1;
        r.g1 = verify_space_axioms(QuasiSpace(GroupDescriptor::g1(1.0)), c);
        r.r2 = verify_space_axioms(QuasiSpace(GroupDescriptor::parabolic_r2()), c);
        GeometryConfig h = c;
        h.doubling_samples = 200;
        h.engulfing_samples = 100;
        h.triangle_samples = 2000;
        h.tecnical_samples = 400;
        h.growth_samples = 0;
        h.dichte_samples = 0;
        r.h2 = verify_space_axioms(QuasiSpace(GroupDescriptor::heisenberg_h2()), h);
        return r;
    }();
    return runs;
}

// ------------------------------------------------------------------ kernel cache (R2, psi = Delta E)

const KernelReport& r2_kernel() {
    static const KernelReport report = [] {
        KernelConfig c;
        c.seed = 1;
        return verify_kernel_estimates(QuasiSpace(GroupDescriptor::parabolic_r2()),
                                       SchwartzProfile::laplacian_gaussian(2), c);
    }();
    return report;
}

// ------------------------------------------------------------------ criteria

Outcome c1() {
    Outcome o{true, ""};
    for (const auto& g : families()) {
        const StructureReport r = validate_group(g, 10000, 1, 1e-10);
        o.passed = o.passed && r.passed() && r.max_violation() <= 1e-10;
        o.detail += g.describe().substr(0, g.describe().find('(')) + " max " + num(r.max_violation()) + "; ";
    }
    return o;
}

Outcome c2() {
    Outcome o{true, ""};
    std::size_t count = 0;
    double worst = 0.0;
    for (const auto& g : families()) {
        const StructureReport r = validate_group(g, 10000, 2, 1e-9);
        for (const auto& c : r.checks) {
            if (c.name.rfind("norm_", 0) == 0) {
                ++count;
                worst = std::max(worst, c.max_violation);
                o.passed = o.passed && c.max_violation <= 1e-9;
            }
        }
    }
    o.detail = std::to_string(count) + " norm checks over every shipped variant, worst " + num(worst);
    return o;
}

Outcome c3() {
    const QuasiSpace space(GroupDescriptor::g1(1.0));
    const VolumeAgreement v = verify_volume_formula(space, 200, 20000, 1);
    const bool a = v.misses == 0;
    const VolumeEstimate mc = ball_volume(space, {1.0, 0.0}, 0.1, VolumeMethod::monte_carlo(200000, 1));
    const VolumeEstimate exact = ball_volume(space, {1.0, 0.0}, 0.1, VolumeMethod::closed_form());
    const bool b = std::abs(mc.value - 0.05142) <= mc.error;
    Outcome o;
    o.passed = a && b;
    o.detail = std::string("(a) ") + (a ? "pass" : "fail") + ": " + std::to_string(v.misses) + "/200 outside 3 sigma; (b) " +
               (b ? "pass" : "fail") + ": Monte Carlo " + num(mc.value) + " +- " + num(mc.error) +
               " vs stated 0.05142 (closed form " + num(exact.value) + ")";
    return o;
}

Outcome c4() {
    const auto& r = geometry_runs();
    const double g1 = r.g1.doubling_constant;
    const double r2 = r.r2.doubling_constant;
    const double h2 = r.h2.doubling_constant;
    const auto rb = experiments::frozen_bound("geometry.doubling_constant", Family::ParabolicR2).value();
    const auto hb = experiments::frozen_bound("geometry.doubling_constant", Family::HeisenbergH2).value();
    Outcome o;
    o.passed = std::isfinite(g1) && g1 <= 8.0 && std::isfinite(r2) && r2 <= rb && std::isfinite(h2) && h2 <= hb &&
               need(r.g1.measurements, "doubling_constant").passed;
    o.detail = "G1 " + num(g1) + " (<= 8, " + std::to_string(r.g1.sample_counts.at("doubling")) + " samples); R2 " +
               num(r2) + " (<= " + num(rb) + "); H2 " + num(h2) + " (<= " + num(hb) + ")";
    return o;
}

Outcome c5() {
    const auto& r = geometry_runs();
    Outcome o{true, ""};
    for (const auto* rep : {&r.g1, &r.r2, &r.h2}) {
        const Measurement& m = need(rep->measurements, "engulfing_constant");
        o.passed = o.passed && std::isfinite(rep->engulfing_constant) && rep->engulfing_constant >= 3.0 &&
                   m.drift <= 0.10;
        o.detail += "k " + num(rep->engulfing_constant) + " (measured " + num(rep->engulfing_measured) + ", drift " +
                    num(m.drift) + "); ";
    }
    return o;
}

Outcome c6() {
    const auto& r = geometry_runs();
    Outcome o{true, ""};
    const char* names[] = {"G1", "R2", "H2"};
    int i = 0;
    for (const auto* rep : {&r.g1, &r.r2, &r.h2}) {
        o.passed = o.passed && rep->symmetry_violation <= 1e-9 && rep->identity_violation <= 1e-9 &&
                   std::isfinite(rep->quasi_triangle_kappa);
        o.detail += std::string(names[i++]) + " kappa " + num(rep->quasi_triangle_kappa) + " over " +
                    std::to_string(rep->sample_counts.count("triangle") ? rep->sample_counts.at("triangle") : 0) +
                    " triples, symmetry " + num(rep->symmetry_violation) + "; ";
    }
    // 1-D oracle: the minimiser solves s = 2 sin((0.5 - s) / 2)
    double lo = 0.0;
    double hi = 0.5;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (mid - 2.0 * std::sin(0.5 * (0.5 - mid)) < 0.0 ? lo : hi) = mid;
    }
    const QuasiSpace space(GroupDescriptor::g1(1.0));
    const double d = quasi_dist(space, {std::cos(0.5), std::sin(0.5)}, {1.0, 0.0});
    o.passed = o.passed && std::abs(d - 0.2497) <= 5e-4 && std::abs(d - lo) <= 1e-8;
    o.detail += "d(e^{0.5 i}, 1) = " + num(d) + " (oracle " + num(lo) + ")";
    return o;
}

Outcome c7() {
    KernelConfig c;
    c.seed = 1;
    c.pointwise = c.epskern = c.hormander = c.mws = c.cotlar = c.cz = false;
    c.loesch_j_min = 1;
    c.loesch_j_max = 8;
    const auto g = GroupDescriptor::parabolic_r2();
    const KernelReport r = verify_kernel_estimates(QuasiSpace(g), SchwartzProfile::laplacian_gaussian(2), c);
    Outcome o;
    o.passed = r.loesch_slope >= g.gamma() - 0.1;
    o.detail = "slope " + num(r.loesch_slope) + " over s in [2^-8, 2^-1], target >= " + num(g.gamma() - 0.1);
    return o;
}

Outcome c8() {
    const KernelReport& r = r2_kernel();
    const Measurement& m = need(r.measurements, "pointwise_constant");
    const QuasiSpace space(GroupDescriptor::parabolic_r2());
    const KernelEvaluation e = kernel_K_detailed(space, SchwartzProfile::gaussian(2), {1.0, 0.0}, {0.0, 0.0},
                                                 quasi_dist(space, {1.0, 0.0}, {0.0, 0.0}));
    const double k = e.value.real();
    Outcome o;
    o.passed = std::isfinite(r.pointwise_constant) && m.drift <= 0.20 && std::abs(k - 1.0) <= 0.01;
    o.detail = "sup |K| d^Q = " + num(r.pointwise_constant) + " over " + std::to_string(KernelConfig{}.pointwise_pairs) +
               " pairs, drift " + num(m.drift) + "; K_eta((1,0),(0,0)) = " + num(k) + " (tail <= " +
               num(e.tail_bound) + ")";
    return o;
}

Outcome c9() {
    const KernelReport& r = r2_kernel();
    const double b = experiments::frozen_bound("kernel.epskern_constant", Family::ParabolicR2).value();
    Outcome o;
    o.passed = r.epskern_ratio <= 10.0 && r.epskern_constant <= b && need(r.measurements, "epskern_constant").passed;
    o.detail = "constant " + num(r.epskern_constant) + " (<= " + num(b) + "), max/min over eps in {2^-6..1} " +
               num(r.epskern_ratio) + " (<= 10)";
    return o;
}

Outcome c10() {
    const KernelReport& r = r2_kernel();
    const double b = experiments::frozen_bound("kernel.hormander_constant", Family::ParabolicR2).value();
    const double adj = r.hormander_adjoint_constant.value_or(std::nan(""));
    Outcome o;
    o.passed = need(r.measurements, "hormander_constant").passed && r.hormander_constant <= b &&
               r.hormander_adjoint_constant.has_value() && need(r.measurements, "hormander_adjoint_constant").passed &&
               adj <= b;
    o.detail = "sup over delta sweep " + num(r.hormander_constant) + ", adjoint " + num(adj) + " (<= " + num(b) +
               "), k = " + num(r.engulfing_k);
    return o;
}

Outcome c11() {
    const KernelReport& r = r2_kernel();
    const double b = experiments::frozen_bound("kernel.cotlar_sup_integral", Family::ParabolicR2).value();
    Outcome o;
    o.passed = need(r.measurements, "cotlar_sup_integral").passed && r.cotlar_sup_integral <= b;
    o.detail = "sup_s int h(t,s) dt/t = " + num(r.cotlar_sup_integral) + " (<= " + num(b) + ")";
    return o;
}

Outcome c12() {
    const auto g = GroupDescriptor::parabolic_r2();
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    L2FamilyConfig c;
    c.seed = 1;
    const L2FamilyReport r = verify_l2_family(g, psi, c);
    const double b = experiments::frozen_bound("operator.l2_ratio", Family::ParabolicR2).value();
    const GridSpec grid = GridSpec::cube(2, -8.0, 8.0, 129);
    OperatorOptions opts;
    opts.diagnostics = false;
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const GridField f = sample(g, l2_family_member(g, 1, 2 * k), grid, SampleMode::CellAverage);
        const GridField h = sample(g, l2_family_member(g, 1, 2 * k + 1), grid, SampleMode::CellAverage);
        const Complex a = inner_product(apply_T(g, psi, GridField(grid, f.values()), {}, opts).field, h);
        const Complex t = inner_product(f, apply_T_adjoint(g, psi, GridField(grid, h.values()), {}, opts).field);
        worst = std::max(worst, std::abs(a - t) / std::max(std::abs(a), std::abs(t)));
    }
    Outcome o;
    o.passed = r.passed && r.ratio <= b && worst <= 0.01;
    o.detail = "sup ||Tf||/||f|| = " + num(r.ratio) + " over 50 members (<= " + num(b) + ", drift " + num(r.drift) +
               "); adjoint identity worst " + num(worst);
    return o;
}

Outcome c13() {
    const auto g = GroupDescriptor::parabolic_r2();
    const QuasiSpace space(g);
    const auto psi = SchwartzProfile::laplacian_gaussian(2);
    const GroupPoint c{1.0, 0.0};
    const auto bump = SchwartzProfile::custom(
        2,
        [c](const GroupPoint& p) {
            const double r2 = (std::pow(p[0] - c[0], 2) + std::pow(p[1] - c[1], 2)) / 0.25;
            return Complex(r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0, 0.0);
        },
        false, false, "bump");
    const GridSpec grid = GridSpec::cube(2, -8.0, 8.0, 257);
    const GridField f = sample(g, bump, grid, SampleMode::Point);
    // quasi radius of the support around c, and the engulfing multiple to stay outside of
    double radius = 0.0;
    for (int k = 0; k < 720; ++k) {
        const double a = k * std::numbers::pi / 360.0;
        radius = std::max(radius, quasi_dist(space, {c[0] + 0.5 * std::cos(a), 0.5 * std::sin(a)}, c));
    }
    const double k = geometry_runs().r2.engulfing_constant;
    const QuadratureSpec quad;
    OperatorOptions opt;
    opt.diagnostics = false;
    opt.resolve_rotation = true;
    const GridField tf = apply_T(g, psi, f, quad, opt).field;
    const Truncation tr{quad.t_lower, quad.t_upper};
    double worst = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    std::size_t points = 0;
    bool outside = true;
    for (const std::vector<std::size_t> idx : {std::vector<std::size_t>{96, 128}, {160, 96}, {128, 176}, {200, 128},
                                               {64, 160}, {224, 224}, {32, 128}}) {
        const GroupPoint x = grid.node(grid.flat(idx));
        const double d = quasi_dist(space, x, c);
        outside = outside && d > k * radius;
        nearest = std::min(nearest, d);
        Complex direct{};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (f[i] != Complex{}) {
                direct += kernel_K(space, psi, x, grid.node(i), tr, quad) * f[i] * grid.cell_volume();
            }
        }
        worst = std::max(worst, std::abs(direct - tf[grid.flat(idx)]) / std::abs(direct));
        ++points;
    }
    Outcome o;
    o.passed = outside && worst <= 0.02;
    o.detail = "max relative gap " + num(worst) + " at " + std::to_string(points) + " points, quasi distance " +
               num(nearest) + "+ from the support centre (outside " + num(k) + " x support radius " +
               num(radius) + (outside ? ")" : ", VIOLATED)");
    return o;
}

Outcome c14() {
    Outcome o{true, ""};
    const double cg = experiments::frozen_bound("cz.max_good_ratio", Family::G1).value();
    const double cm = experiments::frozen_bound("cz.max_measure_ratio", Family::G1).value();
    const double co = experiments::frozen_bound("cz.max_overlap", Family::G1).value();
    for (const auto& g : {GroupDescriptor::parabolic_r2(), GroupDescriptor::g1(1.0)}) {
        const CZSuiteReport s = run_cz_suite(QuasiSpace(g), 1, 100);
        o.passed = o.passed && s.cases == 100 && s.max_reconstruction_error <= 1e-10 && s.support_exact &&
                   s.max_mean_error <= 1e-8 && s.max_good_ratio <= cg && s.max_measure_ratio <= cm &&
                   s.max_overlap <= co;
        o.detail += g.describe().substr(0, g.describe().find('(')) + ": recon " + num(s.max_reconstruction_error) +
                    ", mean " + num(s.max_mean_error) + ", support " + (s.support_exact ? "exact" : "LEAKS") +
                    ", good " + num(s.max_good_ratio) + " (<= " + num(cg) + "), measure " + num(s.max_measure_ratio) +
                    " (<= " + num(cm) + "), overlap " + std::to_string(s.max_overlap) + "; ";
    }
    return o;
}

Outcome c15() {
    BoundsConfig c;
    c.seed = 1;
    c.gaussian_members = 0;
    const BoundsReport r = verify_operator_bounds(QuasiSpace(GroupDescriptor::parabolic_r2()),
                                                  SchwartzProfile::laplacian_gaussian(2), c);
    Outcome o;
    o.passed = std::isfinite(r.weak11_constant) && r.width_drift <= 0.25 && std::isfinite(r.maximal_weak11_constant) &&
               r.maximal_width_drift <= 0.25 && r.passed();
    o.detail = "T weak " + num(r.weak11_constant) + " (width drift " + num(r.width_drift) + ", refined " +
               num(r.refined_weak11) + "); M weak " + num(r.maximal_weak11_constant) + " (width drift " +
               num(r.maximal_width_drift) + ", refined " + num(r.refined_maximal_weak11) + ")";
    return o;
}

Outcome c16() {
    const auto g = GroupDescriptor::g1(1.0);
    KernelConfig c;
    c.seed = 1;
    c.pointwise = c.epskern = c.hormander = c.loesch = c.mws = c.cotlar = false;
    c.cz = true;
    const CompactProfile psi = compact_cz_profile(g);
    const KernelReport r = verify_kernel_estimates(QuasiSpace(g), psi.profile, c);
    const double target = std::min(1.0, g.gamma()) - 0.1;
    Outcome o;
    o.passed = r.cz_epsilon_fit >= target && need(r.measurements, "cz_epsilon_fit").passed;
    o.detail = "fitted exponent " + num(r.cz_epsilon_fit) + " (>= " + num(target) + "), C " + num(r.cz_c_fit);
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c17() {
    const char* configs[] = {
        R"({"scenario": "validate", "seed": 7, "group": {"family": "HeisenbergH2"}, "sampling": {"samples": 2000}})",
        R"({"scenario": "geometry", "seed": 7, "group": {"family": "G1", "a": 1.0},
            "sampling": {"doubling_samples": 100, "engulfing_samples": 30, "triangle_samples": 300,
                         "tecnical_samples": 100, "growth_samples": 30, "dichte_samples": 20, "volume_cases": 20}})",
        R"({"scenario": "kernel", "seed": 7, "group": {"family": "ParabolicR2"},
            "sampling": {"checks": ["pointwise", "loesch", "mws"], "pointwise_pairs": 50, "mws_pairs": 500}})",
        R"({"scenario": "operator", "seed": 7, "group": {"family": "ParabolicR2"},
            "grid": {"lower": -8, "upper": 8, "count": 65},
            "sampling": {"l2_members": 3, "adjoint_pairs": 1, "width_log2": [0, 1], "gaussian_members": 1,
                         "maximal_width_log2": [0, 1], "maximal_grid": {"lower": -2, "upper": 2, "count": 17},
                         "check_stability": false}})",
        R"({"scenario": "cz", "seed": 7, "group": {"family": "G1", "a": 1.0},
            "sampling": {"cases": 10, "grid": {"lower": -4, "upper": 4, "count": 17}, "tall_gaussian": false}})",
    };
    const auto root = std::filesystem::temp_directory_path() / "rotadic_acceptance_determinism";
    std::filesystem::remove_all(root);
    Outcome o{true, ""};
    std::size_t compared = 0;
    int k = 0;
    for (const char* text : configs) {
        const auto cfg = experiments::parse_config(text);
        experiments::RunOptions a;
        a.output = root / (std::to_string(k) + "a");
        a.threads = 1;
        experiments::RunOptions b = a;
        b.output = root / (std::to_string(k) + "b");
        b.threads = 2;
        const auto ma = experiments::run_scenario(cfg, a);
        const auto mb = experiments::run_scenario(cfg, b);
        for (const auto& f : ma.artifacts) {
            if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") {
                ++compared;
                if (slurp(*a.output / f) != slurp(*b.output / f)) {
                    o.passed = false;
                    o.detail += "differs: " + std::string(experiments::to_string(cfg.scenario)) + "/" + f + "; ";
                }
            }
        }
        ++k;
    }
    std::filesystem::remove_all(root);
    o.detail += std::to_string(compared) + " CSV files byte-identical across reruns (1 vs 2 threads), 5 scenarios";
    return o;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

std::set<int> parse_ids(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.insert(std::stoi(item));
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    std::set<int> expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only = parse_ids(argv[++i]);
        } else if (a == "--expect-fail" && i + 1 < argc) {
            expect_fail = parse_ids(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--only N,M] [--expect-fail N,M]\n", argv[0]);
            return 2;
        }
    }
    const std::vector<Criterion> criteria = {
        {1, "group axioms", c1},
        {2, "homogeneous-norm axioms", c2},
        {3, "G1 ball volume formula", c3},
        {4, "doubling", c4},
        {5, "engulfing", c5},
        {6, "quasi-metric", c6},
        {7, "convolution decay slope", c7},
        {8, "kernel pointwise bound", c8},
        {9, "truncated kernel uniformity", c9},
        {10, "Hormander integral", c10},
        {11, "Cotlar integrability", c11},
        {12, "L2 boundedness", c12},
        {13, "kernel representation", c13},
        {14, "CZ decomposition", c14},
        {15, "weak (1,1)", c15},
        {16, "CZ kernel exponent", c16},
        {17, "determinism", c17},
    };
    std::set<int> failed;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.passed) {
            failed.insert(c.id);
        }
        std::printf("ACCEPTANCE %2d %s %s: %s [%.1f s]%s\n", c.id, o.passed ? "PASS" : "FAIL", c.title,
                    o.detail.c_str(), secs, (!o.passed && expect_fail.count(c.id)) ? " (expected failure)" : "");
        std::fflush(stdout);
    }
    int status = 0;
    for (const int id : failed) {
        if (!expect_fail.count(id)) {
            std::printf("unexpected failure: criterion %d\n", id);
            status = 1;
        }
    }
    for (const int id : expect_fail) {
        if ((only.empty() || only.count(id)) && !failed.count(id)) {
            std::printf("criterion %d was expected to fail but passed\n", id);
            status = 1;
        }
    }
    std::printf("%zu failed, %zu expected\n", failed.size(), expect_fail.size());
    return status;
}
