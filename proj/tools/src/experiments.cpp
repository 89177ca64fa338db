#include "rotadic/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rotadic/error.hpp"
#include "rotadic/parallel.hpp"
#include "rotadic/report.hpp"

namespace rotadic::experiments {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw ParseError("config field '" + path + "': " + what);
}

std::string type_name(const json& j) { return j.type_name(); }

/// One JSON object with the keys consumed so far; finish() rejects the rest.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            field_error(path_.empty() ? "<root>" : path_, "expected object, got " + type_name(j_));
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    Node child(const std::string& key) { return Node(raw(key), path(key)); }

    void read(const std::string& key, double& out) {
        if (!has(key)) {
            return;
        }
        const json& v = raw(key);
        if (!v.is_number()) {
            field_error(path(key), "expected number, got " + type_name(v));
        }
        out = v.get<double>();
        if (!std::isfinite(out)) {
            field_error(path(key), "must be finite");
        }
    }

    void read(const std::string& key, bool& out) {
        if (!has(key)) {
            return;
        }
        const json& v = raw(key);
        if (!v.is_boolean()) {
            field_error(path(key), "expected boolean, got " + type_name(v));
        }
        out = v.get<bool>();
    }

    void read(const std::string& key, std::string& out) {
        if (!has(key)) {
            return;
        }
        const json& v = raw(key);
        if (!v.is_string()) {
            field_error(path(key), "expected string, got " + type_name(v));
        }
        out = v.get<std::string>();
    }

    void read(const std::string& key, int& out) {
        if (!has(key)) {
            return;
        }
        out = static_cast<int>(integer(raw(key), path(key), std::numeric_limits<int>::min()));
    }

    void read(const std::string& key, std::size_t& out) {
        if (!has(key)) {
            return;
        }
        out = static_cast<std::size_t>(integer(raw(key), path(key), 0));
    }

    void read_u64(const std::string& key, std::uint64_t& out) {
        if (!has(key)) {
            return;
        }
        const json& v = raw(key);
        if (!v.is_number_unsigned()) {
            field_error(path(key), "expected non-negative integer, got " + type_name(v));
        }
        out = v.get<std::uint64_t>();
    }

    template <class T>
    void read(const std::string& key, std::vector<T>& out) {
        if (!has(key)) {
            return;
        }
        const json& v = raw(key);
        if (!v.is_array()) {
            field_error(path(key), "expected array, got " + type_name(v));
        }
        if (v.empty()) {
            field_error(path(key), "must not be empty");
        }
        std::vector<T> result;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = path(key) + "[" + std::to_string(i) + "]";
            if constexpr (std::is_same_v<T, double>) {
                if (!v[i].is_number()) {
                    field_error(p, "expected number, got " + type_name(v[i]));
                }
                result.push_back(v[i].template get<double>());
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v[i].is_string()) {
                    field_error(p, "expected string, got " + type_name(v[i]));
                }
                result.push_back(v[i].template get<std::string>());
            } else {
                const long long lo = std::is_signed_v<T> ? std::numeric_limits<int>::min() : 0;
                result.push_back(static_cast<T>(integer(v[i], p, lo)));
            }
        }
        out = std::move(result);
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) {
                field_error(path(item.key()), "unknown field");
            }
        }
    }

private:
    static long long integer(const json& v, const std::string& path, long long lo) {
        if (!v.is_number_integer()) {
            field_error(path, "expected integer, got " + type_name(v));
        }
        const long long x = v.get<long long>();
        if (x < lo) {
            field_error(path, "must be >= " + std::to_string(lo));
        }
        return x;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) {
        field_error(path, what);
    }
}

void require_range(double lo, double hi, const std::string& path) {
    require(lo < hi, path, "empty range [" + format_number(lo) + ", " + format_number(hi) + "]");
}

void require_range(int lo, int hi, const std::string& path) {
    require(lo <= hi, path, "empty range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

GroupBlock parse_group(Node n) {
    GroupBlock g;
    std::string family;
    if (!n.has("family")) {
        field_error(n.path("family"), "required");
    }
    n.read("family", family);
    try {
        g.family = family_from_string(family);
    } catch (const Error&) {
        field_error(n.path("family"), "unknown family '" + family + "' (ParabolicR2, HeisenbergH2, G1)");
    }
    n.read("rate", g.rate);
    n.read("alpha", g.alpha);
    n.read("beta", g.beta);
    n.read("a", g.a);
    n.read("tail_exponents", g.tail_exponents);
    n.finish();
    try {
        (void)g.build();
    } catch (const Error& e) {
        field_error(n.path(""), e.what());
    }
    return g;
}

std::vector<double> per_axis(const json& v, const std::string& path, std::size_t dim) {
    if (v.is_number()) {
        return std::vector<double>(dim, v.get<double>());
    }
    if (v.is_array() && v.size() == dim && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
        return v.get<std::vector<double>>();
    }
    field_error(path, "expected number or array of " + std::to_string(dim) + " numbers");
}

GridSpec parse_grid(Node n, std::size_t dim) {
    for (const char* key : {"lower", "upper", "count"}) {
        if (!n.has(key)) {
            field_error(n.path(key), "required");
        }
    }
    const auto lower = per_axis(n.raw("lower"), n.path("lower"), dim);
    const auto upper = per_axis(n.raw("upper"), n.path("upper"), dim);
    const json& c = n.raw("count");
    std::vector<std::size_t> counts;
    if (c.is_number_unsigned()) {
        counts.assign(dim, c.get<std::size_t>());
    } else if (c.is_array() && c.size() == dim &&
               std::all_of(c.begin(), c.end(), [](const json& x) { return x.is_number_unsigned(); })) {
        counts = c.get<std::vector<std::size_t>>();
    } else {
        field_error(n.path("count"), "expected non-negative integer or array of " + std::to_string(dim));
    }
    n.finish();
    for (std::size_t i = 0; i < dim; ++i) {
        require_range(lower[i], upper[i], n.path("lower/upper"));
        require(counts[i] >= 2, n.path("count"), "needs at least 2 nodes per axis");
    }
    try {
        return GridSpec(lower, upper, counts);
    } catch (const Error& e) {
        field_error(n.path(""), e.what());
    }
}

QuadratureSpec parse_quadrature(Node n) {
    QuadratureSpec q;
    n.read("t_lower", q.t_lower);
    n.read("t_upper", q.t_upper);
    n.read("nodes_per_decade", q.nodes_per_decade);
    n.read("refinement", q.refinement);
    n.finish();
    require_range(q.t_lower, q.t_upper, n.path("t_lower/t_upper"));
    require(q.refinement >= 1, n.path("refinement"), "must be >= 1");
    try {
        q.validate();
    } catch (const Error& e) {
        field_error(n.path(""), e.what());
    }
    return q;
}

PsiBlock parse_psi(Node n) {
    PsiBlock p;
    n.read("kind", p.kind);
    n.read("alpha", p.alpha);
    n.finish();
    require(p.kind == "laplacian_gaussian" || p.kind == "compact" || p.kind == "hermite", n.path("kind"),
            "unknown profile '" + p.kind + "' (laplacian_gaussian, compact, hermite)");
    require(p.kind != "hermite" || !p.alpha.empty(), n.path("alpha"), "required for kind hermite");
    return p;
}

void parse_geometry(Node n, GeometrySampling& s) {
    GeometryConfig& c = s.config;
    n.read("doubling_samples", c.doubling_samples);
    n.read("log2_radius_min", c.log2_radius_min);
    n.read("log2_radius_max", c.log2_radius_max);
    n.read("center_log2_spread", c.center_log2_spread);
    n.read("mc_samples", c.mc_samples);
    n.read("engulfing_samples", c.engulfing_samples);
    n.read("engulfing_probes", c.engulfing_probes);
    n.read("triangle_samples", c.triangle_samples);
    n.read("tecnical_samples", c.tecnical_samples);
    n.read("growth_samples", c.growth_samples);
    n.read("growth_max_j", c.growth_max_j);
    n.read("dichte_samples", c.dichte_samples);
    n.read("distance_tolerance", c.distance_tolerance);
    n.read("check_stability", c.check_stability);
    n.read("stability_tolerance", c.stability_tolerance);
    n.read("volume_cases", s.volume_cases);
    n.read("volume_mc_samples", s.volume_mc_samples);
    n.finish();
    require_range(c.log2_radius_min, c.log2_radius_max, n.path("log2_radius_min/log2_radius_max"));
    require(c.doubling_samples > 0, n.path("doubling_samples"), "must be positive");
    require(c.mc_samples > 0, n.path("mc_samples"), "must be positive");
    require(s.volume_mc_samples > 0, n.path("volume_mc_samples"), "must be positive");
    require(c.distance_tolerance > 0.0, n.path("distance_tolerance"), "must be positive");
}

void parse_kernel(Node n, KernelConfig& k) {
    if (n.has("checks")) {
        std::vector<std::string> checks;
        n.read("checks", checks);
        k.pointwise = k.epskern = k.hormander = k.loesch = k.mws = k.cotlar = k.cz = false;
        for (std::size_t i = 0; i < checks.size(); ++i) {
            const std::string& c = checks[i];
            bool* flag = c == "pointwise" ? &k.pointwise
                         : c == "epskern" ? &k.epskern
                         : c == "hormander" ? &k.hormander
                         : c == "loesch" ? &k.loesch
                         : c == "mws" ? &k.mws
                         : c == "cotlar" ? &k.cotlar
                         : c == "cz" ? &k.cz
                                     : nullptr;
            if (flag == nullptr) {
                field_error(n.path("checks") + "[" + std::to_string(i) + "]",
                            "unknown check '" + c + "' (pointwise, epskern, hormander, loesch, mws, cotlar, cz)");
            }
            *flag = true;
        }
    }
    n.read("check_stability", k.check_stability);
    n.read("stability_tolerance", k.stability_tolerance);
    n.read("pointwise_pairs", k.pointwise_pairs);
    n.read("pointwise_log2_min", k.pointwise_log2_min);
    n.read("pointwise_log2_max", k.pointwise_log2_max);
    n.read("epskern_j_min", k.epskern_j_min);
    n.read("epskern_j_max", k.epskern_j_max);
    n.read("epskern_centers", k.epskern_centers);
    n.read("epskern_shells", k.epskern_shells);
    n.read("epskern_samples", k.epskern_samples);
    n.read("hormander_j_min", k.hormander_j_min);
    n.read("hormander_j_max", k.hormander_j_max);
    n.read("hormander_centers", k.hormander_centers);
    n.read("hormander_shells", k.hormander_shells);
    n.read("hormander_samples", k.hormander_samples);
    n.read("engulfing_samples", k.engulfing_samples);
    n.read("loesch_j_min", k.loesch_j_min);
    n.read("loesch_j_max", k.loesch_j_max);
    n.read("mws_pairs", k.mws_pairs);
    n.read("mws_l", k.mws_l);
    n.read("cotlar_log2_s_min", k.cotlar_log2_s_min);
    n.read("cotlar_log2_s_max", k.cotlar_log2_s_max);
    n.read("cotlar_half_steps", k.cotlar_half_steps);
    n.read("cz_samples", k.cz_samples);
    n.read("center_log2_spread", k.center_log2_spread);
    if (n.has("two_scale")) {
        Node t = n.child("two_scale");
        t.read("resolution", k.grid.resolution);
        t.read("extent", k.grid.extent);
        t.read("budget", k.grid.budget);
        t.finish();
        require(k.grid.resolution > 0.0 && k.grid.extent > 0.0, t.path(""), "resolution and extent must be positive");
    }
    n.finish();
    require_range(k.pointwise_log2_min, k.pointwise_log2_max, n.path("pointwise_log2_min/pointwise_log2_max"));
    require_range(k.epskern_j_min, k.epskern_j_max, n.path("epskern_j_min/epskern_j_max"));
    require_range(k.hormander_j_min, k.hormander_j_max, n.path("hormander_j_min/hormander_j_max"));
    require_range(k.loesch_j_min, k.loesch_j_max, n.path("loesch_j_min/loesch_j_max"));
    require_range(k.cotlar_log2_s_min, k.cotlar_log2_s_max, n.path("cotlar_log2_s_min/cotlar_log2_s_max"));
}

void parse_operator(Node n, OperatorSampling& o, std::size_t dim) {
    n.read("l2_family", o.l2_family);
    n.read("l2_members", o.l2.members);
    n.read("adjoint", o.adjoint);
    n.read("adjoint_pairs", o.adjoint_pairs);
    n.read("bounds", o.bounds);
    BoundsConfig& b = o.bounds_config;
    n.read("width_log2", b.width_log2);
    n.read("gaussian_members", b.gaussian_members);
    n.read("p_list", b.p_list);
    n.read("level_steps", b.level_steps);
    n.read("maximal", b.maximal);
    n.read("maximal_width_log2", b.maximal_width_log2);
    if (n.has("maximal_grid")) {
        b.maximal_grid = parse_grid(n.child("maximal_grid"), dim);
    }
    bool stability = true;
    if (n.has("check_stability")) {
        n.read("check_stability", stability);
        o.l2.check_stability = b.check_stability = stability;
    }
    if (n.has("stability_tolerance")) {
        double t = 0.0;
        n.read("stability_tolerance", t);
        o.l2.stability_tolerance = b.stability_tolerance = t;
    }
    n.read("width_drift_tolerance", b.width_drift_tolerance);
    n.finish();
    require(o.l2.members > 0, n.path("l2_members"), "must be positive");
    require(b.level_steps >= 0, n.path("level_steps"), "must be >= 0");
    for (std::size_t i = 0; i < b.p_list.size(); ++i) {
        require(b.p_list[i] > 1.0 && std::isfinite(b.p_list[i]), n.path("p_list") + "[" + std::to_string(i) + "]",
                "p must lie in (1, inf)");
    }
}

void parse_cz(Node n, CZSampling& c, std::size_t dim) {
    n.read("cases", c.cases);
    if (n.has("grid")) {
        c.grid = parse_grid(n.child("grid"), dim);
    }
    n.read("c0", c.policy.c0);
    if (n.has("radii_log2")) {
        std::vector<int> r;
        n.read("radii_log2", r);
        require(r.size() == 2, n.path("radii_log2"), "expected [j_min, j_max]");
        require_range(r[0], r[1], n.path("radii_log2"));
        c.policy.radii = dyadic_radii(r[0], r[1]);
    }
    n.read("engulfing", c.policy.engulfing);
    n.read("tall_gaussian", c.tall_gaussian);
    n.read("tall_counts", c.tall_counts);
    n.finish();
    require(c.policy.c0 > 0.0, n.path("c0"), "must be positive");
    require(c.policy.engulfing >= 0.0, n.path("engulfing"), "must be >= 0 (0 measures it)");
    for (const auto count : c.tall_counts) {
        require(count >= 3, n.path("tall_counts"), "needs at least 3 nodes per axis");
    }
}

// ---------------------------------------------------------------- checks

struct FrozenEntry {
    const char* check;
    std::optional<Family> family; // nullopt: every family
    double bound;
};

// Regression bounds, about 1.5 to 2 times the measured values at default sampling.
constexpr double kNoBound = std::numeric_limits<double>::quiet_NaN();
const FrozenEntry kFrozen[] = {
    {"geometry.doubling_constant", Family::G1, 8.0},
    {"geometry.doubling_constant", Family::ParabolicR2, 4.0},
    {"geometry.doubling_constant", Family::HeisenbergH2, 128.0},
    {"geometry.quasi_triangle_kappa", Family::G1, 2.0},
    {"geometry.quasi_triangle_kappa", Family::ParabolicR2, 3.0},
    {"geometry.quasi_triangle_kappa", Family::HeisenbergH2, 2.0},
    {"geometry.quasi_symmetry", std::nullopt, 1e-9},
    {"geometry.quasi_identity", std::nullopt, 1e-9},
    {"geometry.volume_formula_misses", std::nullopt, 0.0},
    {"kernel.pointwise_constant", Family::ParabolicR2, 4.0},
    {"kernel.epskern_constant", Family::ParabolicR2, 8.0},
    {"kernel.epskern_uniformity", std::nullopt, 10.0},
    {"kernel.hormander_constant", Family::ParabolicR2, 8.0},
    {"kernel.hormander_adjoint_constant", Family::ParabolicR2, 8.0},
    {"kernel.mws_constant", Family::ParabolicR2, 25.0},
    {"kernel.cotlar_sup_integral", Family::ParabolicR2, 160.0},
    {"operator.l2_ratio", Family::ParabolicR2, 20.0},
    {"operator.adjoint_relative_error", std::nullopt, 0.01},
    {"operator.lp2_vs_l2_relative", std::nullopt, 0.10},
    {"operator.weak11_constant", Family::ParabolicR2, 12.0},
    {"operator.lp_constant_1.5", Family::ParabolicR2, 20.0},
    {"operator.lp_constant_2", Family::ParabolicR2, 20.0},
    {"operator.maximal_weak11_constant", Family::ParabolicR2, 2.0},
    {"cz.max_good_ratio", std::nullopt, 8.0},
    {"cz.max_measure_ratio", std::nullopt, 16.0},
    {"cz.max_overlap", std::nullopt, 8.0},
    {"cz.max_reconstruction_error", std::nullopt, 1e-10},
    {"cz.max_mean_error", std::nullopt, 1e-8},
    {"cz.tall_good_ratio", std::nullopt, 20.0},
    {"cz.tall_measure_ratio", std::nullopt, 20.0},
    {"cz.tall_refinement_drift", std::nullopt, 0.20},
};

std::string relation_symbol(Relation r) {
    switch (r) {
    case Relation::AtMost:
        return "<=";
    case Relation::AtLeast:
        return ">=";
    case Relation::Finite:
        return "finite";
    }
    return "?";
}

class Checks {
public:
    Checks(const ScenarioConfig& cfg, Family family) : cfg_(cfg), family_(family) {}

    /// Upper bound from the config override or the frozen table; `ok` carries the verifier's own verdict.
    void at_most(const std::string& name, double value, bool ok = true, const std::string& note = {}) {
        const auto b = bound(name);
        if (b) {
            push({name, value, Relation::AtMost, *b, ok && std::isfinite(value) && value <= *b, note});
        } else {
            finite(name, value, ok, note);
        }
    }

    void at_least(const std::string& name, double value, double bound, bool ok = true, const std::string& note = {}) {
        push({name, value, Relation::AtLeast, bound, ok && std::isfinite(value) && value >= bound, note});
    }

    void finite(const std::string& name, double value, bool ok = true, const std::string& note = {}) {
        push({name, value, Relation::Finite, kNoBound, ok && std::isfinite(value), note});
    }

    std::vector<CheckResult> take() { return std::move(results_); }

private:
    std::optional<double> bound(const std::string& name) const {
        if (const auto it = cfg_.bounds.find(name); it != cfg_.bounds.end()) {
            return it->second;
        }
        return frozen_bound(name, family_);
    }

    void push(CheckResult r) { results_.push_back(std::move(r)); }

    const ScenarioConfig& cfg_;
    Family family_;
    std::vector<CheckResult> results_;
};

/// Names of the measurements that get an upper bound; the others are checked for finiteness.
bool bounded_measurement(const std::string& name) {
    return name.find("drift") == std::string::npos && name != "loesch_slope" && name != "loesch_slope_vs_gamma" &&
           name != "loesch_constant" && name != "cz_epsilon_fit" && name != "cz_c_fit" &&
           name != "engulfing_constant" && name != "growth_constant" && name.rfind("dichte", 0) != 0 &&
           name != "tecnical_constant";
}

void add_measurements(Checks& checks, const std::string& prefix, const std::vector<Measurement>& ms) {
    for (const auto& m : ms) {
        std::string note = m.note;
        if (m.drift != 0.0) {
            note += (note.empty() ? "" : "; ") + std::string("drift ") + format_number(m.drift);
        }
        if (bounded_measurement(m.name)) {
            checks.at_most(prefix + m.name, m.value, m.passed, note);
        } else {
            checks.finite(prefix + m.name, m.value, m.passed, note);
        }
    }
}

SchwartzProfile build_psi(const PsiBlock& p, const GroupDescriptor& g) {
    if (p.kind == "compact") {
        return compact_cz_profile(g).profile;
    }
    if (p.kind == "hermite") {
        if (p.alpha.size() != g.dim()) {
            throw ConfigurationError("psi.alpha needs " + std::to_string(g.dim()) + " entries");
        }
        MultiIndex alpha{};
        int order = 0;
        for (std::size_t i = 0; i < p.alpha.size(); ++i) {
            alpha[i] = p.alpha[i];
            order += p.alpha[i];
        }
        if (order == 0) {
            throw ConfigurationError("psi.alpha = 0 gives the Gaussian, which is not mean-zero");
        }
        return SchwartzProfile::hermite_gaussian(g.dim(), alpha);
    }
    return SchwartzProfile::laplacian_gaussian(g.dim());
}

GridSpec default_operator_grid(std::size_t dim) {
    return dim == 2 ? GridSpec::cube(2, -8.0, 8.0, 257) : GridSpec::cube(dim, -4.0, 4.0, 17);
}

struct Artifacts {
    std::filesystem::path dir;
    std::vector<std::string> files;

    void table(const std::string& name, const Table& t) {
        t.write_csv(dir / name);
        files.push_back(name);
    }
    void text(const std::string& name, const std::string& contents) {
        write_file_atomic(dir / name, contents);
        files.push_back(name);
    }
    void field(const std::string& name, const GridField& f) {
        const auto tmp = dir / (name + ".tmp");
        write_binary(f, tmp);
        std::filesystem::rename(tmp, dir / name);
        files.push_back(name);
    }
};

// ---------------------------------------------------------------- scenarios

void run_validate(const ScenarioConfig& cfg, const GroupDescriptor& g, Checks& checks, Artifacts& out) {
    const StructureReport r = validate_group(g, cfg.validate.samples, cfg.seed, cfg.validate.tolerance);
    Table t({"check", "max_violation", "tolerance", "passed"});
    for (const auto& c : r.checks) {
        t.add_row({c.name, c.max_violation, c.tolerance, static_cast<long long>(c.passed())});
        checks.at_most("structure." + c.name, c.max_violation, c.passed(),
                       "tolerance " + format_number(c.tolerance));
    }
    out.table("validate.csv", t);
}

void run_geometry(const ScenarioConfig& cfg, const GroupDescriptor& g, Checks& checks, Artifacts& out) {
    const QuasiSpace space(g, cfg.norm);
    GeometryConfig gc = cfg.geometry.config;
    gc.seed = cfg.seed;
    const GeometryReport r = verify_space_axioms(space, gc);
    out.table("geometry.csv", r.rows);
    for (const auto& m : r.measurements) {
        const bool available = std::isfinite(m.value) || m.note.find("needed") == std::string::npos;
        if (!available) {
            continue;
        }
        std::string note = m.note;
        if (m.drift != 0.0) {
            note += (note.empty() ? "" : "; ") + std::string("drift ") + format_number(m.drift);
        }
        if (m.name == "engulfing_constant") {
            checks.at_least("geometry.engulfing_constant", r.engulfing_constant, 3.0, m.passed,
                            "max(3, measured); " + note);
            checks.finite("geometry.engulfing_measured", r.engulfing_measured, true, "sampled sup before the floor");
        } else if (bounded_measurement(m.name)) {
            checks.at_most("geometry." + m.name, m.value, m.passed, note);
        } else {
            checks.finite("geometry." + m.name, m.value, m.passed, note);
        }
    }
    if (space.has_closed_form_volume() && cfg.geometry.volume_cases > 0) {
        const VolumeAgreement v =
            verify_volume_formula(space, cfg.geometry.volume_cases, cfg.geometry.volume_mc_samples, cfg.seed);
        out.table("geometry_volume.csv", v.rows);
        checks.at_most("geometry.volume_formula_misses", static_cast<double>(v.misses), true,
                       std::to_string(v.cases) + " cases, 3-sigma Monte Carlo error");
        checks.finite("geometry.volume_formula_max_score", v.max_score, true, "max |closed - mc| / error");
    }
}

void run_kernel(const ScenarioConfig& cfg, const GroupDescriptor& g, Checks& checks, Artifacts& out) {
    const QuasiSpace space(g, cfg.norm);
    KernelConfig kc = cfg.kernel;
    kc.seed = cfg.seed;
    kc.quadrature = cfg.quadrature;
    const KernelReport r = verify_kernel_estimates(space, build_psi(cfg.psi, g), kc);
    out.table("kernel.csv", r.rows);
    std::vector<Measurement> rest;
    for (const auto& m : r.measurements) {
        if (m.name == "loesch_slope") {
            checks.at_least("kernel.loesch_slope", m.value, g.gamma() - 0.1, m.passed, m.note);
        } else if (m.name == "cz_epsilon_fit") {
            checks.at_least("kernel.cz_epsilon_fit", m.value, std::min(1.0, g.gamma()) - 0.1, m.passed, m.note);
        } else if (m.name != "loesch_slope_vs_gamma") {
            rest.push_back(m);
        }
    }
    add_measurements(checks, "kernel.", rest);
}

void run_operator(const ScenarioConfig& cfg, const GroupDescriptor& g, Checks& checks, Artifacts& out) {
    const SchwartzProfile psi = build_psi(cfg.psi, g);
    const GridSpec grid = cfg.grid ? *cfg.grid : default_operator_grid(g.dim());
    std::optional<double> l2_ratio;
    if (cfg.op.l2_family) {
        L2FamilyConfig lc = cfg.op.l2;
        lc.seed = cfg.seed;
        lc.grid = grid;
        lc.quadrature = cfg.quadrature;
        const L2FamilyReport r = verify_l2_family(g, psi, lc);
        out.table("operator_l2.csv", r.rows);
        checks.at_most("operator.l2_ratio", r.ratio, r.passed,
                       "sup ||Tf||_2/||f||_2 over " + std::to_string(lc.members) + " members; drift " +
                           format_number(r.drift));
        l2_ratio = r.ratio;
    }
    if (cfg.op.adjoint) {
        Table t({"pair", "tf_g", "f_tstar_g", "relative_error"});
        double worst = 0.0;
        OperatorOptions opts;
        opts.diagnostics = false;
        for (std::size_t k = 0; k < cfg.op.adjoint_pairs; ++k) {
            const GridField f = sample(g, l2_family_member(g, cfg.seed, 2 * k), grid, SampleMode::CellAverage);
            const GridField h = sample(g, l2_family_member(g, cfg.seed, 2 * k + 1), grid, SampleMode::CellAverage);
            const Complex a = inner_product(apply_T(g, psi, GridField(grid, f.values()), cfg.quadrature, opts).field, h);
            const Complex b =
                inner_product(f, apply_T_adjoint(g, psi, GridField(grid, h.values()), cfg.quadrature, opts).field);
            const double scale = std::max(std::abs(a), std::abs(b));
            const double rel = scale > 0.0 ? std::abs(a - b) / scale : 0.0;
            worst = std::max(worst, rel);
            t.add_row({static_cast<long long>(k), std::abs(a), std::abs(b), rel});
        }
        out.table("operator_adjoint.csv", t);
        checks.at_most("operator.adjoint_relative_error", worst, true, "|<Tf,g> - <f,T*g>| / max");
    }
    if (cfg.op.bounds) {
        BoundsConfig bc = cfg.op.bounds_config;
        bc.seed = cfg.seed;
        bc.grid = grid;
        bc.quadrature = cfg.quadrature;
        const BoundsReport r = verify_operator_bounds(QuasiSpace(g, cfg.norm), psi, bc);
        out.table("operator_bounds.csv", r.rows);
        add_measurements(checks, "operator.", r.measurements);
        if (l2_ratio && r.lp_constants.count(2.0) && *l2_ratio > 0.0) {
            checks.at_most("operator.lp2_vs_l2_relative", std::abs(r.lp_constants.at(2.0) / *l2_ratio - 1.0), true,
                           "bounds lp_2 " + format_number(r.lp_constants.at(2.0)) + " vs L2 family " +
                               format_number(*l2_ratio));
        }
    }
}

void run_cz(const ScenarioConfig& cfg, const GroupDescriptor& g, Checks& checks, Artifacts& out) {
    const QuasiSpace space(g, cfg.norm);
    CoverPolicy policy = cfg.cz.policy;
    policy.seed = cfg.seed;
    if (!(policy.engulfing > 0.0)) {
        GeometryConfig gc;
        gc.seed = cfg.seed;
        gc.check_stability = false;
        policy.engulfing = measure_engulfing(space, gc);
    }
    const CZSuiteReport s = run_cz_suite(space, cfg.seed, cfg.cz.cases, cfg.cz.grid, policy);
    out.table("cz_suite.csv", s.rows);
    const std::string k = "engulfing k = " + format_number(policy.engulfing);
    checks.at_most("cz.max_good_ratio", s.max_good_ratio, true, "||g||_inf / lambda; " + k);
    checks.at_most("cz.max_measure_ratio", s.max_measure_ratio, true, "sum mu(B_i) lambda / ||f||_1");
    checks.at_most("cz.max_overlap", s.max_overlap, true, "cover multiplicity");
    checks.at_most("cz.max_reconstruction_error", s.max_reconstruction_error, true, "||f - g - sum b_i||_1 / ||f||_1");
    checks.at_most("cz.max_mean_error", s.max_mean_error, true, "|int b_i| / ||b_i||_1");
    checks.at_least("cz.support_exact", s.support_exact ? 1.0 : 0.0, 1.0, true, "every b_i vanishes outside B_i");
    checks.finite("cz.fallback_balls", static_cast<double>(s.fallback_balls), true,
                  "balls kept although a larger dilate held their centre");
    if (cfg.cz.tall_gaussian && g.dim() == 2) {
        Table t({"count", "omega_nodes", "bad_parts", "good_ratio", "measure_ratio", "overlap", "reconstruction_error"});
        double good = 0.0;
        double measure = 0.0;
        std::vector<double> goods;
        std::vector<double> measures;
        CZDecomposition last;
        for (const auto count : cfg.cz.tall_counts) {
            const GridSpec grid = GridSpec::cube(2, -1.0, 1.0, count);
            const double w = std::sqrt(1.0 / (100.0 * std::numbers::pi));
            SquareMatrix m = SquareMatrix::identity(2);
            m(0, 0) = m(1, 1) = 1.0 / w;
            const GridField f =
                sample(g, SchwartzProfile::gaussian(2).composed_linear(m).scaled(100.0), grid, SampleMode::CellAverage);
            last = cz_decompose(space, GridField(grid, f.values()), 1.0, policy);
            t.add_row({static_cast<long long>(count), static_cast<long long>(last.omega_nodes),
                       static_cast<long long>(last.bad.size()), last.good_ratio, last.measure_ratio,
                       static_cast<long long>(last.cover_overlap), last.reconstruction_error});
            good = std::max(good, last.good_ratio);
            measure = std::max(measure, last.measure_ratio);
            goods.push_back(last.good_ratio);
            measures.push_back(last.measure_ratio);
        }
        out.table("cz_tall.csv", t);
        out.table("cz_tall_balls.csv", last.balls_table());
        out.field("cz_tall_good.bin", last.good);
        GridField bad = GridField::zeros(last.good.grid());
        for (const auto& b : last.bad) {
            bad += b.field;
        }
        out.field("cz_tall_bad.bin", bad);
        checks.at_most("cz.tall_good_ratio", good, true, "mass 1, height 100, lambda 1");
        checks.at_most("cz.tall_measure_ratio", measure, true, "mass 1, height 100, lambda 1");
        if (goods.size() >= 2) {
            const double drift = std::max(std::abs(goods.back() / goods[goods.size() - 2] - 1.0),
                                          std::abs(measures.back() / measures[measures.size() - 2] - 1.0));
            checks.at_most("cz.tall_refinement_drift", drift, true, "finest two grids");
        }
    }
}

json checks_json(const std::vector<CheckResult>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        json j{{"name", c.name},
               {"value", std::isfinite(c.value) ? json(c.value) : json(format_number(c.value))},
               {"relation", relation_symbol(c.relation)},
               {"passed", c.passed}};
        if (c.relation != Relation::Finite) {
            j["bound"] = c.bound;
        }
        if (!c.note.empty()) {
            j["note"] = c.note;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

// ---------------------------------------------------------------- public

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::Validate:
        return "validate";
    case Scenario::Geometry:
        return "geometry";
    case Scenario::Kernel:
        return "kernel";
    case Scenario::Operator:
        return "operator";
    case Scenario::CZ:
        return "cz";
    }
    return "?";
}

Scenario scenario_from_string(std::string_view name) {
    for (const auto s : {Scenario::Validate, Scenario::Geometry, Scenario::Kernel, Scenario::Operator, Scenario::CZ}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ParseError("unknown scenario '" + std::string(name) + "' (validate, geometry, kernel, operator, cz)");
}

GroupDescriptor GroupBlock::build() const {
    switch (family) {
    case Family::ParabolicR2:
        return GroupDescriptor::parabolic_r2(rate);
    case Family::HeisenbergH2:
        return GroupDescriptor::heisenberg_h2(alpha, beta);
    case Family::G1:
        return GroupDescriptor::g1(a, tail_exponents);
    }
    throw ConfigurationError("unknown family");
}

ScenarioConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
            throw ParseError("config is empty");
        }
        throw ParseError(std::string("config syntax error: ") + e.what());
    }
    ScenarioConfig cfg;
    cfg.source = doc;
    Node root(doc, "");
    for (const char* key : {"scenario", "seed", "group"}) {
        if (!root.has(key)) {
            field_error(key, "required");
        }
    }
    std::string scenario;
    root.read("scenario", scenario);
    try {
        cfg.scenario = scenario_from_string(scenario);
    } catch (const ParseError& e) {
        field_error("scenario", e.what());
    }
    root.read_u64("seed", cfg.seed);
    cfg.group = parse_group(root.child("group"));
    const GroupDescriptor g = cfg.group.build();
    if (root.has("norm")) {
        std::string norm;
        root.read("norm", norm);
        try {
            cfg.norm = norm_from_string(norm);
        } catch (const Error&) {
            field_error("norm", "unknown norm variant '" + norm + "'");
        }
        require(g.supports(cfg.norm), "norm", "not shipped for " + g.describe());
    }
    if (root.has("psi")) {
        cfg.psi = parse_psi(root.child("psi"));
        require(cfg.psi.kind != "compact" || g.family() == Family::G1, "psi.kind", "compact profile needs G1");
        require(cfg.psi.kind != "hermite" || cfg.psi.alpha.size() == g.dim(), "psi.alpha",
                "needs " + std::to_string(g.dim()) + " entries");
    }
    if (root.has("grid")) {
        cfg.grid = parse_grid(root.child("grid"), g.dim());
    }
    if (root.has("quadrature")) {
        cfg.quadrature = parse_quadrature(root.child("quadrature"));
    }
    if (root.has("sampling")) {
        Node s = root.child("sampling");
        switch (cfg.scenario) {
        case Scenario::Validate:
            s.read("samples", cfg.validate.samples);
            s.read("tolerance", cfg.validate.tolerance);
            s.finish();
            require(cfg.validate.samples > 0, "sampling.samples", "must be positive");
            require(cfg.validate.tolerance > 0.0, "sampling.tolerance", "must be positive");
            break;
        case Scenario::Geometry:
            parse_geometry(s, cfg.geometry);
            break;
        case Scenario::Kernel:
            parse_kernel(s, cfg.kernel);
            break;
        case Scenario::Operator:
            parse_operator(s, cfg.op, g.dim());
            break;
        case Scenario::CZ:
            parse_cz(s, cfg.cz, g.dim());
            break;
        }
    }
    if (root.has("bounds")) {
        const json& b = root.raw("bounds");
        require(b.is_object(), "bounds", "expected object, got " + type_name(b));
        for (const auto& item : b.items()) {
            require(item.value().is_number(), "bounds." + item.key(), "expected number");
            cfg.bounds[item.key()] = item.value().get<double>();
        }
    }
    if (root.has("output")) {
        std::string o;
        root.read("output", o);
        require(!o.empty(), "output", "must not be empty");
        cfg.output = o;
    }
    root.finish();
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::optional<double> frozen_bound(std::string_view check, Family family) {
    for (const auto& e : kFrozen) {
        if (check == e.check && (!e.family || *e.family == family)) {
            return e.bound;
        }
    }
    return std::nullopt;
}

bool RunManifest::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> RunManifest::failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (!c.passed) {
            out.push_back(c.name);
        }
    }
    return out;
}

RunManifest run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    ScenarioConfig cfg = config;
    if (options.seed) {
        cfg.seed = *options.seed;
    }
    if (options.output) {
        cfg.output = *options.output;
    }
    set_thread_count(options.threads);
    const GroupDescriptor g = cfg.group.build();

    std::filesystem::create_directories(cfg.output);
    Artifacts out{cfg.output, {}};
    Checks checks(cfg, g.family());
    switch (cfg.scenario) {
    case Scenario::Validate:
        run_validate(cfg, g, checks, out);
        break;
    case Scenario::Geometry:
        run_geometry(cfg, g, checks, out);
        break;
    case Scenario::Kernel:
        run_kernel(cfg, g, checks, out);
        break;
    case Scenario::Operator:
        run_operator(cfg, g, checks, out);
        break;
    case Scenario::CZ:
        run_cz(cfg, g, checks, out);
        break;
    }

    RunManifest m;
    m.checks = checks.take();
    Table t({"check", "value", "relation", "bound", "passed", "note"});
    for (const auto& c : m.checks) {
        t.add_row({c.name, c.value, relation_symbol(c.relation), c.bound, static_cast<long long>(c.passed), c.note});
    }
    out.table("checks.csv", t);

    json summary{{"scenario", std::string(to_string(cfg.scenario))},
                 {"seed", cfg.seed},
                 {"group", g.describe()},
                 {"passed", m.passed()},
                 {"checks", checks_json(m.checks)}};
    out.text("summary.json", summary.dump(2) + "\n");

    m.config = cfg.source;
    m.config["seed"] = cfg.seed;
    m.config["output"] = cfg.output.string();
    m.tool_version = std::string(kToolVersion);
    m.output = cfg.output;
    m.artifacts = out.files;
    m.artifacts.push_back("manifest.json");
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest{{"tool", "rotadic"},
                  {"version", m.tool_version},
                  {"started_utc", started},
                  {"wall_clock_seconds", m.wall_seconds},
                  {"threads", thread_count()},
                  {"config", m.config},
                  {"passed", m.passed()},
                  {"checks", checks_json(m.checks)},
                  {"artifacts", m.artifacts}};
    write_file_atomic(cfg.output / "manifest.json", manifest.dump(2) + "\n");
    return m;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"rotadic: batch runner for rotation-adapted singular integral checks"};
    std::string scenario;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("scenario", scenario, "validate | geometry | kernel | operator | cz")->required();
    app.add_option("--config", config_path, "JSON scenario config")->required();
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "seed (overrides the config)");
    app.add_option("--threads", threads, "worker threads, 0 = hardware concurrency");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    RunManifest m;
    try {
        const Scenario requested = scenario_from_string(scenario);
        const ScenarioConfig cfg = load_config(config_path);
        if (cfg.scenario != requested) {
            throw ParseError("config scenario '" + std::string(to_string(cfg.scenario)) +
                             "' does not match the requested '" + scenario + "'");
        }
        RunOptions opts;
        if (*out_opt) {
            opts.output = out_dir;
        }
        if (*seed_opt) {
            opts.seed = seed;
        }
        opts.threads = threads;
        m = run_scenario(cfg, opts);
    } catch (const ParseError& e) {
        std::cerr << "rotadic: " << e.what() << "\n";
        return 2;
    } catch (const ConfigurationError& e) {
        std::cerr << "rotadic: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rotadic: " << e.what() << "\n";
        return 2;
    }

    for (const auto& c : m.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << format_number(c.value);
        if (c.relation != Relation::Finite) {
            std::cout << " (" << relation_symbol(c.relation) << " " << format_number(c.bound) << ")";
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << m.artifacts.size() << " files to " << m.output.string() << " in " << std::fixed
              << std::setprecision(2) << m.wall_seconds << " s\n";
    if (!m.passed()) {
        for (const auto& name : m.failed()) {
            std::cerr << "rotadic: check failed: " << name << "\n";
        }
        return 1;
    }
    return 0;
}

} // namespace rotadic::experiments
