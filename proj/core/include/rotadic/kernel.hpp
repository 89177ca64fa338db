#pragma once

// Singular kernels K_eta(x, y) = int_0^inf eta_t(x (O_{-t} y)^-1) dt/t with
// truncations, the Cotlar function h(t, s), and sampled verifiers for the
// kernel estimates behind the L2, Hormander and Calderon-Zygmund bounds.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rotadic/geometry.hpp"
#include "rotadic/grid.hpp"
#include "rotadic/operator.hpp"
#include "rotadic/profile.hpp"
#include "rotadic/report.hpp"

namespace rotadic {

enum class KernelVariant {
    Standard,     // x (O_{-t} y)^-1
    PlusRotation, // x (O_t y)^-1
    RotateFirst,  // (O_{-t} x) y^-1
};

/// Scale range [lower, upper] of the t-integral; the default is the full kernel.
struct Truncation {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
};

struct KernelEvaluation {
    Complex value;
    /// Bound on the part beyond the finite cap when the upper limit is infinite:
    /// sup|eta| cap^-Q / Q (NaN when sup|eta| is unknown).
    double tail_bound = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t nodes = 0;
};

/// Composite Gauss-Legendre panels in ln t: quad.nodes_per_decade per decade,
/// quad.refinement times more inside [d/8, 8d], and panels no longer than
/// (2 pi / rate) (16 / nodes_per_decade) in t while the rotating argument still
/// moves the integrand. Below d the range stops once the integrand has decayed
/// to 1e-16 of its peak; an infinite upper limit is capped at max(t_upper, 64 d).
KernelEvaluation kernel_K_detailed(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x,
                                   const GroupPoint& y, double distance, const Truncation& trunc = {},
                                   const QuadratureSpec& quad = {}, KernelVariant variant = KernelVariant::Standard);

/// Throws DomainError when x = y and trunc.lower = 0.
Complex kernel_K(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y,
                 const Truncation& trunc = {}, const QuadratureSpec& quad = {},
                 KernelVariant variant = KernelVariant::Standard);

/// Same with d(x, y) supplied by the caller.
Complex kernel_K(const QuasiSpace& space, const SchwartzProfile& eta, const GroupPoint& x, const GroupPoint& y,
                 double distance, const Truncation& trunc = {}, const QuadratureSpec& quad = {},
                 KernelVariant variant = KernelVariant::Standard);

struct KernelArguments {
    GroupPoint x;
    GroupPoint y;
    double distance = 0.0;
};

/// K(first) - K(second) with both integrands on one node set, so panel
/// placement does not enter the difference.
Complex kernel_K_difference(const QuasiSpace& space, const SchwartzProfile& eta, const KernelArguments& first,
                            const KernelArguments& second, const Truncation& trunc = {},
                            const QuadratureSpec& quad = {}, KernelVariant variant = KernelVariant::Standard);

/// Grid used for the L1 norm of a two-scale convolution u_a * v_b: per axis the
/// spacing is the narrower width divided by `resolution`, the half-extent is
/// `extent` times the sum of both widths.
struct TwoScaleGrid {
    double resolution = 4.0;
    double extent = 5.0;
    std::size_t budget = std::size_t{1} << 21;
    ConvolutionOptions convolution;
};

/// || u_{scale_u} * v_{scale_v} ||_1 for unit-scale profiles u, v; ResourceError over budget.
double convolution_l1(const GroupDescriptor& g, const SchwartzProfile& u, double scale_u, const SchwartzProfile& v,
                      double scale_v, const TwoScaleGrid& grid = {});

/// h(t, s) = ||(psi o O_{s-t})_t * psi*_s||_1^(1/2) + ||psi*_t * psi_s||_1^(1/2),
/// evaluated after rescaling by s (both norms are dilation invariant).
double cotlar_h(const GroupDescriptor& g, const SchwartzProfile& psi, double t, double s,
                const TwoScaleGrid& grid = {});

/// Compactly supported, rotation-symmetric, mean-zero profile on G1:
/// psi = (Delta E - c) chi(rho), chi(rho) = exp(1 - 1/(1 - rho^2)) for rho < 1,
/// rho^2 = sum_b |x_b|^(2/a_b). Supported in the max-type unit ball.
struct CompactProfile {
    SchwartzProfile profile;
    /// The subtracted multiple c of the bump chi(rho).
    double correction = 0.0;
};

CompactProfile compact_cz_profile(const GroupDescriptor& g);

struct KernelConfig {
    std::uint64_t seed = 1;
    QuadratureSpec quadrature;
    /// Recompute every constant at doubled t-nodes (grid checks: sqrt 2 finer spacing).
    bool check_stability = true;
    double stability_tolerance = 0.20;

    bool pointwise = true;
    bool epskern = true;
    bool hormander = true;
    bool loesch = true;
    bool mws = true;
    bool cotlar = true;
    bool cz = false;

    std::size_t pointwise_pairs = 500;
    double pointwise_log2_min = -4.0;
    double pointwise_log2_max = 3.0;

    /// epsilon = 2^-j for j in [epskern_j_min, epskern_j_max]
    int epskern_j_min = 0;
    int epskern_j_max = 6;
    std::size_t epskern_centers = 4;
    int epskern_shells = 5;
    std::size_t epskern_samples = 1024;

    /// delta = 2^-j for j in [hormander_j_min, hormander_j_max]
    int hormander_j_min = 0;
    int hormander_j_max = 4;
    std::size_t hormander_centers = 4;
    int hormander_shells = 6;
    std::size_t hormander_samples = 256;
    std::size_t engulfing_samples = 200;

    /// s = 2^-j for j in [loesch_j_min, loesch_j_max]
    int loesch_j_min = 1;
    int loesch_j_max = 8;

    std::size_t mws_pairs = 10000;
    /// Decay order l; negative means n + 1.
    int mws_l = -1;

    /// s = 2^k, k in [cotlar_log2_s_min, cotlar_log2_s_max]; t = tau s with tau = 2^(j/2), |j| <= cotlar_half_steps.
    int cotlar_log2_s_min = -4;
    int cotlar_log2_s_max = 4;
    int cotlar_half_steps = 12;

    std::size_t cz_samples = 2000;

    TwoScaleGrid grid;
    double center_log2_spread = 2.0;
};

struct KernelReport {
    double pointwise_constant = 0.0;
    double epskern_constant = 0.0;
    /// max / min over epsilon of the epskern integral.
    double epskern_ratio = 0.0;
    double hormander_constant = 0.0;
    std::optional<double> hormander_adjoint_constant;
    double loesch_slope = 0.0;
    double mws_constant = 0.0;
    double cotlar_sup_integral = 0.0;
    double cz_epsilon_fit = 0.0;
    double cz_c_fit = 0.0;
    double engulfing_k = 0.0;

    QuadratureSpec quadrature;
    std::uint64_t seed = 0;
    std::vector<Measurement> measurements;
    /// One row per sample or sweep point: check, index, a, b, value.
    Table rows{{"check", "index", "a", "b", "value"}};
    std::vector<std::string> notes;

    bool passed() const noexcept;
    const Measurement* find(const std::string& name) const noexcept;
};

/// Runs the selected kernel checks. The cz check needs G1 and a rotation-symmetric
/// psi with finite support radius (ConfigurationError otherwise); the adjoint
/// Hormander integral is computed only for rotation-symmetric psi.
KernelReport verify_kernel_estimates(const QuasiSpace& space, const SchwartzProfile& psi, const KernelConfig& config);

} // namespace rotadic
