#pragma once

// The winding operator Tf = int_0^inf psi_t * (f o O_t) dt/t on grids, its
// single-scale pieces A_t and the adjoint.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rotadic/grid.hpp"
#include "rotadic/group.hpp"
#include "rotadic/profile.hpp"
#include "rotadic/report.hpp"

namespace rotadic {

/// Truncated scale integral over [t_lower, t_upper] with composite 8-point
/// Gauss-Legendre panels in u = ln t.
struct QuadratureSpec {
    double t_lower = 1e-3;
    double t_upper = 1e3;
    int nodes_per_decade = 16;
    /// Density multiplier inside the window where a kernel integrand peaks.
    int refinement = 4;

    /// Throws ConfigurationError unless 0 < t_lower < t_upper and nodes_per_decade >= 8.
    void validate() const;
    QuadratureSpec doubled() const;
    std::string describe() const;
};

struct LogNode {
    double t = 0.0;
    /// Weight for int F(t) dt/t.
    double weight = 0.0;
};

/// Nodes for int_lower^upper F(t) dt/t: ceil(decades * nodes_per_decade / 8)
/// equal panels in ln t with 8 Gauss-Legendre nodes each. Empty when lower >= upper.
std::vector<LogNode> log_quadrature(double lower, double upper, int nodes_per_decade);

/// f o O_s on the grid of f: exact through the attached profile, otherwise
/// cubic interpolation at O_s x (zero where O_s x leaves the grid).
GridField compose_rotation(const GroupDescriptor& g, const GridField& f, double s);

/// psi_t sampled as cell averages on `grid`, profile attached so convolutions
/// extend it analytically.
GridField sample_dilate(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridSpec& grid);

/// A_t f = psi_t * (f o O_t)
GridField apply_At(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridField& f,
                   const ConvolutionOptions& options = {});

/// A_t^* f = (psi_t^* * f) o O_{-t}
GridField apply_At_adjoint(const GroupDescriptor& g, const SchwartzProfile& psi, double t, const GridField& f,
                           const ConvolutionOptions& options = {});

struct OperatorOptions {
    /// Also compute the changes under t_lower / 2, 2 t_upper and node doubling.
    bool diagnostics = true;
    /// For inputs not invariant under the rotations: once a log panel spans more than
    /// one rotation period, split it into Gauss-Legendre panels one period long in t.
    /// Needed for pointwise accuracy far from the support; costs ~8 rate t_upper / 2pi nodes.
    bool resolve_rotation = false;
    ConvolutionOptions convolution;
};

/// Relative L2 changes of the result under the three refinements.
struct OperatorDiagnostics {
    double epsilon_change = 0.0;
    double upper_change = 0.0;
    double doubling_change = 0.0;
    /// sup |psi| ||f||_1 t_upper^-Q / Q: bound on the discarded upper tail, pointwise.
    double tail_bound = 0.0;
    std::size_t nodes = 0;
    QuadratureSpec quadrature;
    bool computed = false;
};

struct OperatorResult {
    GridField field;
    OperatorDiagnostics diagnostics;
};

/// T_{eps,R} f on the grid of f. Requires psi.mean_zero().
OperatorResult apply_T(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f,
                       const QuadratureSpec& quad = {}, const OperatorOptions& options = {});

/// T*_{eps,R} f = int A_t^* f dt/t, accumulated as ((psi^* o O_{-t})_t * (f o O_{-t})).
OperatorResult apply_T_adjoint(const GroupDescriptor& g, const SchwartzProfile& psi, const GridField& f,
                               const QuadratureSpec& quad = {}, const OperatorOptions& options = {});

struct L2FamilyConfig {
    std::uint64_t seed = 1;
    std::size_t members = 50;
    /// Defaults to [-8, 8]^n with 129 nodes per axis.
    std::optional<GridSpec> grid;
    QuadratureSpec quadrature;
    /// Recompute every ratio at doubled t-nodes.
    bool check_stability = true;
    double stability_tolerance = 0.20;
    ConvolutionOptions convolution;
};

struct L2FamilyReport {
    /// sup ||T f||_2 / ||f||_2 over the family, and the same at doubled nodes.
    double ratio = 0.0;
    double refined_ratio = 0.0;
    double drift = 0.0;
    bool passed = false;
    /// member, center_norm, scale, ratio, refined_ratio
    Table rows{{"member", "center_norm", "scale", "ratio", "refined_ratio"}};
};

/// Member k of the seeded family: an anisotropic Gaussian turned in the first
/// coordinate plane, translated and dilated.
SchwartzProfile l2_family_member(const GroupDescriptor& g, std::uint64_t seed, std::size_t k);

L2FamilyReport verify_l2_family(const GroupDescriptor& g, const SchwartzProfile& psi, const L2FamilyConfig& config);

} // namespace rotadic
