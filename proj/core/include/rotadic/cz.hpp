#pragma once

// Hardy-Littlewood maximal function over quasi-balls, the Calderon-Zygmund
// decomposition on a grid, and measured weak-(1,1) / L^p bounds for T.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rotadic/geometry.hpp"
#include "rotadic/grid.hpp"
#include "rotadic/operator.hpp"
#include "rotadic/report.hpp"

namespace rotadic {

/// 2^j for j in [j_min, j_max].
std::vector<double> dyadic_radii(int j_min = -8, int j_max = 4);

/// The grid is the measure space: mu(B) = (nodes of the grid in B) * cell volume,
/// so averages of a constant are that constant. Mf at each point is the sup over
/// `radii` of the average of |f| over the nodes in B~_r(x).
std::vector<double> maximal_function_at(const QuasiSpace& space, const GridField& f,
                                        const std::vector<GroupPoint>& points,
                                        const std::vector<double>& radii = dyadic_radii());

GridField maximal_function(const QuasiSpace& space, const GridField& f,
                           const std::vector<double>& radii = dyadic_radii());

/// Nodes of the grid inside B~_r(center), ascending flat order.
std::vector<std::size_t> ball_nodes(const QuasiSpace& space, const GridSpec& grid, const GroupPoint& center,
                                    double r);

struct CoverPolicy {
    /// Omega = {Mf > c0 lambda}
    double c0 = 1.0;
    std::vector<double> radii = dyadic_radii();
    /// Engulfing constant for the selection; 0 measures it (seeded).
    double engulfing = 0.0;
    std::uint64_t seed = 1;
};

struct BadPart {
    GridField field;
    /// Cover ball B~_i: the k-dilate of a selected maximal ball.
    QuasiBall ball;
    std::vector<std::size_t> piece; // flat indices of the partition cell, inside the ball
};

struct CZDecomposition {
    double level = 0.0;
    GridField good;
    std::vector<BadPart> bad;
    /// Max number of cover balls containing one node of Omega.
    int cover_overlap = 0;
    /// ||g||_inf / lambda
    double good_ratio = 0.0;
    /// sum mu(B~_i) lambda / ||f||_1
    double measure_ratio = 0.0;
    double engulfing = 0.0;
    std::size_t omega_nodes = 0;
    /// Candidates kept although a larger ball's dilate held their centre (engulfing
    /// failed on the grid); they keep the cover complete.
    std::size_t fallback_balls = 0;

    // postconditions, measured
    /// ||f - g - sum b_i||_1 / ||f||_1
    double reconstruction_error = 0.0;
    /// max_i |int b_i| / ||b_i||_1
    double mean_error = 0.0;
    bool support_exact = true;

    /// center coordinates, radius, piece size
    Table balls_table() const;
};

/// lambda > 0 required (DomainError otherwise). An empty Omega gives g = f and no bad parts.
CZDecomposition cz_decompose(const QuasiSpace& space, const GridField& f, double lambda,
                             const CoverPolicy& policy = {});

struct CZCase {
    GridField f;
    double lambda = 0.0;
};

/// Case `index` of the seeded suite: one to three anisotropic Gaussian bumps of
/// random sign, width and centre, with lambda = ||f||_inf 2^-u, u uniform in [0, 4].
CZCase cz_suite_case(const GroupDescriptor& g, const GridSpec& grid, std::uint64_t seed, std::size_t index);

struct CZSuiteReport {
    std::size_t cases = 0;
    std::size_t empty_cases = 0;
    double max_good_ratio = 0.0;
    double max_measure_ratio = 0.0;
    int max_overlap = 0;
    double max_reconstruction_error = 0.0;
    double max_mean_error = 0.0;
    bool support_exact = true;
    std::size_t fallback_balls = 0;
    /// case, lambda, omega_nodes, bad_parts, good_ratio, measure_ratio, overlap, reconstruction, mean_error
    Table rows{{"case", "lambda", "omega_nodes", "bad_parts", "good_ratio", "measure_ratio", "overlap",
                "reconstruction_error", "mean_error"}};
};

/// Decomposes every suite case; grid defaults to [-4, 4]^n with 33 nodes per axis.
CZSuiteReport run_cz_suite(const QuasiSpace& space, std::uint64_t seed, std::size_t cases,
                           const std::optional<GridSpec>& grid = std::nullopt, const CoverPolicy& policy = {});

/// sup over the family and `levels` of lambda mu{Mf > lambda} / ||f||_1; null members skipped.
double verify_maximal_weak11(const QuasiSpace& space, const std::vector<GridField>& family,
                             const std::vector<double>& levels, const std::vector<double>& radii = dyadic_radii());

struct BoundsConfig {
    std::uint64_t seed = 1;
    /// Mass-normalised Gaussian bumps psi-dilated to width 2^-j, centred at (1, 0, ...).
    std::vector<int> width_log2 = {0, 1, 2, 3};
    /// Members 0 .. n-1 of l2_family_member, so p = 2 is comparable with verify_l2_family.
    std::size_t gaussian_members = 50;
    std::vector<double> p_list = {1.5, 2.0};
    /// lambda = ||F||_inf 2^(-k/2), k = 0 .. level_steps, per member and function F.
    int level_steps = 24;
    /// Grid for T; defaults to [-8, 8]^n with 257 nodes per axis.
    std::optional<GridSpec> grid;
    QuadratureSpec quadrature;
    /// Maximal function: widths (j list) and grid, default [-4, 4]^n with 65 nodes per axis.
    bool maximal = true;
    std::vector<int> maximal_width_log2 = {0, 1, 2, 3, 4};
    std::optional<GridSpec> maximal_grid;
    /// Recompute at doubled t-nodes on a grid with spacing / sqrt 2 (maximal function:
    /// spacing * sqrt 2).
    bool check_stability = true;
    double stability_tolerance = 0.20;
    double width_drift_tolerance = 0.25;
    ConvolutionOptions convolution;
};

struct BoundsReport {
    double weak11_constant = 0.0;
    std::map<double, double> lp_constants;
    double maximal_weak11_constant = 0.0;
    /// Relative change of the bump-family weak constant between the two finest widths.
    double width_drift = 0.0;
    double maximal_width_drift = 0.0;
    double refined_weak11 = 0.0;
    std::map<double, double> refined_lp;
    double refined_maximal_weak11 = 0.0;

    std::vector<Measurement> measurements;
    /// member, kind, width, weak11, refined_weak11, lp_1.5, ... (one column per p)
    Table rows;
    std::vector<std::string> notes;

    bool passed() const noexcept;
    const Measurement* find(const std::string& name) const noexcept;
};

/// p > 2 needs rotation-symmetric psi (ConfigurationError); psi must have mean zero.
BoundsReport verify_operator_bounds(const QuasiSpace& space, const SchwartzProfile& psi, const BoundsConfig& config);

/// Mass-normalised Gaussian of group width w centred at (1, 0, ...).
SchwartzProfile delta_approximant(const GroupDescriptor& g, double width);

} // namespace rotadic
