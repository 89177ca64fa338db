#include "rotadic/operator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "rotadic/error.hpp"
#include "rotadic/numerics.hpp"
#include "rotadic/parallel.hpp"
#include "rotadic/random.hpp"

namespace rotadic {

void QuadratureSpec::validate() const {
    if (!(t_lower > 0.0) || !(t_upper > t_lower) || !std::isfinite(t_upper)) {
        throw ConfigurationError("quadrature: need 0 < t_lower < t_upper < inf");
    }
    if (nodes_per_decade < 8) {
        throw ConfigurationError("quadrature: nodes_per_decade must be at least 8");
    }
    if (refinement < 1) {
        throw ConfigurationError("quadrature: refinement must be at least 1");
    }
}

QuadratureSpec QuadratureSpec::doubled() const {
    QuadratureSpec q = *this;
    q.nodes_per_decade *= 2;
    return q;
}

std::string QuadratureSpec::describe() const {
    std::ostringstream out;
    out << "t in [" << t_lower << ", " << t_upper << "], " << nodes_per_decade << " nodes/decade, refinement "
        << refinement;
    return out.str();
}

std::vector<LogNode> log_quadrature(double lower, double upper, int nodes_per_decade) {
    std::vector<LogNode> nodes;
    if (!(upper > lower) || !(lower > 0.0)) {
        return nodes;
    }
    const auto& gl = numerics::gauss_legendre(8);
    const double u0 = std::log(lower);
    const double u1 = std::log(upper);
    const double decades = (u1 - u0) / std::log(10.0);
    const auto panels = static_cast<std::size_t>(
        std::max(1.0, std::ceil(decades * static_cast<double>(nodes_per_decade) / 8.0 - 1e-9)));
    const double width = (u1 - u0) / static_cast<double>(panels);
    nodes.reserve(panels * gl.size());
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = u0 + (static_cast<double>(p) + 0.5) * width;
        for (const auto& [x, w] : gl) {
            nodes.push_back({std::exp(mid + 0.5 * width * x), 0.5 * width * w});
        }
    }
    return nodes;
}

GridField compose_rotation(const GroupDescriptor& g, const GridField& f, double s) {
    if (f.grid().dim() != g.dim()) {
        throw StructuralError("compose_rotation: field dimension does not match the group");
    }
    if (s == 0.0 || g.max_rotation_rate() == 0.0) {
        return f;
    }
    if (f.profile()) {
        return sample(g, f.profile()->rotated(g, s), f.grid(), f.sample_mode());
    }
    GridField out = GridField::zeros(f.grid());
    parallel_for(out.grid().size(), [&](std::size_t i) { out[i] = f.interpolate(rotate(g, s, f.grid().node(i))); });
    return out;
}

GridField sample_dilate(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridSpec& grid) {
    return sample(g, psi.dilated(g, t), grid, SampleMode::CellAverage);
}

namespace {

void require_dims(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f) {
    if (psi.dim() != g.dim() || f.grid().dim() != g.dim()) {
        throw StructuralError("operator: profile, field and group dimensions differ");
    }
}

void require_positive(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw DomainError("operator: scale t must be positive and finite");
    }
}

// Input side invariant under the rotations, so one transform serves every node.
bool rotation_invariant(const GroupDescriptor& g, const GridField& f) {
    return g.max_rotation_rate() == 0.0 || (f.profile() && f.profile()->rotationally_symmetric());
}

struct ScaleIntegrand {
    std::function<SchwartzProfile(double)> kernel; // profile convolved from the left at scale t
    double rotation_sign = 1.0;                    // the input is composed with O_{sign t}
};

void accumulate(ConvolutionAccumulator& acc, const GroupDescriptor& g, const GridField& f,
                const std::vector<LogNode>& nodes, const ScaleIntegrand& integrand,
                std::optional<ConvolutionAccumulator::PreparedInput>& invariant_input) {
    const bool invariant = rotation_invariant(g, f);
    for (const LogNode& node : nodes) {
        const GridField kernel = sample(g, integrand.kernel(node.t), f.grid(), SampleMode::CellAverage);
        if (invariant) {
            if (!invariant_input) {
                invariant_input = acc.prepare(f);
            }
            acc.add(kernel, *invariant_input, node.weight);
        } else {
            acc.add(kernel, compose_rotation(g, f, integrand.rotation_sign * node.t), node.weight);
        }
    }
}

// log_quadrature, with every panel longer than one rotation period in t replaced by
// period-long Gauss-Legendre panels in t (weights carry the 1/t of dt/t).
std::vector<LogNode> period_resolved(double lower, double upper, int nodes_per_decade, double rate) {
    const std::vector<LogNode> coarse = log_quadrature(lower, upper, nodes_per_decade);
    if (coarse.empty() || rate <= 0.0) {
        return coarse;
    }
    const auto& gl = numerics::gauss_legendre(8);
    const double period = 2.0 * std::numbers::pi / rate;
    const double u0 = std::log(lower);
    const double width = (std::log(upper) - u0) / static_cast<double>(coarse.size() / gl.size());
    std::vector<LogNode> nodes;
    for (std::size_t p = 0; p * gl.size() < coarse.size(); ++p) {
        const double a = std::exp(u0 + static_cast<double>(p) * width);
        const double b = std::exp(u0 + static_cast<double>(p + 1) * width);
        if (b - a <= period) {
            nodes.insert(nodes.end(), coarse.begin() + static_cast<std::ptrdiff_t>(p * gl.size()),
                         coarse.begin() + static_cast<std::ptrdiff_t>((p + 1) * gl.size()));
            continue;
        }
        const auto pieces = static_cast<std::size_t>(std::ceil((b - a) / period));
        const double h = (b - a) / static_cast<double>(pieces);
        for (std::size_t k = 0; k < pieces; ++k) {
            const double mid = a + (static_cast<double>(k) + 0.5) * h;
            for (const auto& [x, w] : gl) {
                const double t = mid + 0.5 * h * x;
                nodes.push_back({t, 0.5 * h * w / t});
            }
        }
    }
    return nodes;
}

double relative_l2(const GridField& value, const GridField& reference) {
    const double diff = lp_norm(value - reference, 2.0);
    const double base = lp_norm(reference, 2.0);
    if (diff == 0.0) {
        return 0.0;
    }
    return diff / std::max(base, std::numeric_limits<double>::min());
}

double profile_sup(const GroupDescriptor& g, const SchwartzProfile& psi, const GridSpec& grid) {
    const double bound = psi.sup_bound();
    if (std::isfinite(bound)) {
        return bound;
    }
    return sample(g, psi, grid).sup_norm();
}

OperatorResult integrate_scales(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f,
                                const QuadratureSpec& quad, const OperatorOptions& options,
                                const ScaleIntegrand& integrand) {
    require_dims(g, psi, f);
    quad.validate();
    if (!psi.mean_zero()) {
        throw PreconditionError("operator: psi must have mean zero for the scale integral to converge");
    }
    OperatorResult result;
    OperatorDiagnostics& diag = result.diagnostics;
    diag.quadrature = quad;

    const double rate = options.resolve_rotation && !rotation_invariant(g, f) ? g.max_rotation_rate() : 0.0;
    const auto quadrature = [rate](double lower, double upper, int npd) {
        return period_resolved(lower, upper, npd, rate);
    };

    ConvolutionAccumulator acc(g, f.grid(), f.grid(), options.convolution);
    std::optional<ConvolutionAccumulator::PreparedInput> invariant;
    const auto nodes = quadrature(quad.t_lower, quad.t_upper, quad.nodes_per_decade);
    accumulate(acc, g, f, nodes, integrand, invariant);
    result.field = acc.result();
    diag.nodes = nodes.size();

    const double q = g.homogeneous_dimension();
    diag.tail_bound = profile_sup(g, psi, f.grid()) * lp_norm(f, 1.0) * std::pow(quad.t_upper, -q) / q;
    if (!options.diagnostics) {
        return result;
    }
    accumulate(acc, g, f, quadrature(0.5 * quad.t_lower, quad.t_lower, quad.nodes_per_decade), integrand,
               invariant);
    const GridField lower = acc.result();
    diag.epsilon_change = relative_l2(lower, result.field);
    accumulate(acc, g, f, quadrature(quad.t_upper, 2.0 * quad.t_upper, quad.nodes_per_decade), integrand,
               invariant);
    diag.upper_change = relative_l2(acc.result(), lower);

    ConvolutionAccumulator fine(g, f.grid(), f.grid(), options.convolution);
    std::optional<ConvolutionAccumulator::PreparedInput> fine_invariant;
    const QuadratureSpec dq = quad.doubled();
    accumulate(fine, g, f, quadrature(dq.t_lower, dq.t_upper, dq.nodes_per_decade), integrand, fine_invariant);
    diag.doubling_change = relative_l2(fine.result(), result.field);
    diag.computed = true;
    return result;
}

} // namespace

GridField apply_At(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridField& f,
                   const ConvolutionOptions& options) {
    require_positive(t);
    require_dims(g, psi, f);
    return convolve(g, sample_dilate(g, psi, t, f.grid()), compose_rotation(g, f, t), options);
}

GridField apply_At_adjoint(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridField& f,
                           const ConvolutionOptions& options) {
    require_positive(t);
    require_dims(g, psi, f);
    const GridField inner = convolve(g, sample_dilate(g, psi.conjugate_inverse(), t, f.grid()), f, options);
    return compose_rotation(g, inner, -t);
}

OperatorResult apply_T(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f,
                       const QuadratureSpec& quad, const OperatorOptions& options) {
    ScaleIntegrand integrand{[&](double t) { return psi.dilated(g, t); }, 1.0};
    return integrate_scales(g, psi, f, quad, options, integrand);
}

OperatorResult apply_T_adjoint(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f,
                               const QuadratureSpec& quad, const OperatorOptions& options) {
    const SchwartzProfile star = psi.conjugate_inverse();
    ScaleIntegrand integrand{[&](double t) { return star.rotated(g, -t).dilated(g, t); }, -1.0};
    return integrate_scales(g, psi, f, quad, options, integrand);
}

namespace {

struct MemberShape {
    SchwartzProfile profile;
    double center_norm = 0.0;
    double scale = 1.0;
};

MemberShape family_member(const GroupDescriptor& g, std::uint64_t seed, std::size_t k) {
    const std::size_t n = g.dim();
    CounterRng rng = CounterRng::stream(seed, "singular_operator.l2_family").split(k);
    SquareMatrix m = SquareMatrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = std::exp2(rng.uniform(-0.5, 0.5));
    }
    if (n >= 2) {
        const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double c = std::cos(th);
        const double s = std::sin(th);
        const double a0 = m(0, 0);
        const double a1 = m(1, 1);
        m(0, 0) = a0 * c;
        m(0, 1) = -a0 * s;
        m(1, 0) = a1 * s;
        m(1, 1) = a1 * c;
    }
    GroupPoint shift(n);
    for (std::size_t i = 0; i < n; ++i) {
        shift[i] = rng.uniform(-2.0, 2.0);
    }
    const double scale = std::exp2(rng.uniform(-1.0, 1.0));
    return {SchwartzProfile::gaussian(n).composed_linear(m).dilated(g, scale).translated(shift), shift.euclidean(),
            scale};
}

} // namespace

SchwartzProfile l2_family_member(const GroupDescriptor& g, std::uint64_t seed, std::size_t k) {
    return family_member(g, seed, k).profile;
}

L2FamilyReport verify_l2_family(const GroupDescriptor& g, const SchwartzProfile& psi, const L2FamilyConfig& config) {
    config.quadrature.validate();
    const GridSpec grid = config.grid ? *config.grid : GridSpec::cube(g.dim(), -8.0, 8.0, 129);
    OperatorOptions opt;
    opt.diagnostics = false;
    opt.convolution = config.convolution;
    L2FamilyReport report;
    for (std::size_t k = 0; k < config.members; ++k) {
        const MemberShape shape = family_member(g, config.seed, k);
        const GridField f = sample(g, shape.profile, grid);
        const double norm = lp_norm(f, 2.0);
        if (norm == 0.0) {
            continue;
        }
        const double r1 = lp_norm(apply_T(g, psi, f, config.quadrature, opt).field, 2.0) / norm;
        const double r2 = config.check_stability
                              ? lp_norm(apply_T(g, psi, f, config.quadrature.doubled(), opt).field, 2.0) / norm
                              : r1;
        report.rows.add_row({static_cast<long long>(k), shape.center_norm, shape.scale, r1, r2});
        report.ratio = std::max(report.ratio, r1);
        report.refined_ratio = std::max(report.refined_ratio, r2);
    }
    report.drift = config.check_stability ? numerics::relative_drift(report.ratio, report.refined_ratio) : 0.0;
    report.passed = std::isfinite(report.ratio) && report.drift <= config.stability_tolerance;
    return report;
}

} // namespace rotadic
