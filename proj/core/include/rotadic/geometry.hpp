#pragma once

// Quasi-balls B~_r(y) = union over |s| <= r of B_r * (O_s y), the quasi-metric
// they generate, ball volumes, and sampled certificates of the properties of a
// space of homogeneous type.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rotadic/group.hpp"
#include "rotadic/report.hpp"

namespace rotadic {

/// Controls the s-minimisation behind membership and distance.
struct ScanSettings {
    std::size_t min_points = 64;
    /// Scan samples per radian swept by the fastest rotation plane.
    double points_per_radian = 16.0;
    std::size_t max_points = 1 << 15;
    /// Bracket width at which golden-section refinement stops.
    double tolerance = 1e-12;
};

enum class DistanceMethod {
    Auto,      // closed form on G1 with the max-type norm, bisection elsewhere
    Bisection, // inf{r : x in B~_r(y)} by bisection on r
    MinMax,    // min over s of max{|s|, |x (O_s y)^-1|}
};

/// A group together with the norm whose balls generate the quasi-balls.
class QuasiSpace {
public:
    explicit QuasiSpace(GroupDescriptor group, NormVariant norm = NormVariant::MaxType, ScanSettings scan = {});

    const GroupDescriptor& group() const noexcept { return group_; }
    NormVariant norm() const noexcept { return norm_; }
    const ScanSettings& scan() const noexcept { return scan_; }

    double norm_of(const GroupPoint& x) const { return hom_norm(group_, norm_, x); }
    /// |x * (O_s y)^-1|
    double orbit_gap(const GroupPoint& y, double s, const GroupPoint& x) const;
    /// True when membership has an exact closed form (abelian, single rotated block, max-type norm).
    bool has_closed_form_metric() const noexcept { return closed_form_; }
    /// True when ball_volume supports the ClosedForm method.
    bool has_closed_form_volume() const noexcept;

    std::size_t scan_points(double half_width) const;

private:
    GroupDescriptor group_;
    NormVariant norm_;
    ScanSettings scan_;
    bool closed_form_ = false;
};

struct QuasiBall {
    GroupPoint center;
    double radius = 0.0;
};

/// min over |s| <= r of |x (O_s y)^-1|; on the closed-form path the exact minimiser.
double orbit_minimum(const QuasiSpace& space, const GroupPoint& y, double r, const GroupPoint& x);

/// x in B~_r(y). Ties |.| = r count as outside.
bool quasi_ball_contains(const QuasiSpace& space, const GroupPoint& y, double r, const GroupPoint& x,
                         double tol = 1e-12);

/// d(x, y) = inf{r > 0 : x in B~_r(y)} to absolute accuracy `tol`.
double quasi_dist(const QuasiSpace& space, const GroupPoint& x, const GroupPoint& y, double tol = 1e-10,
                  DistanceMethod method = DistanceMethod::Auto);

struct VolumeMethod {
    enum class Kind { ClosedForm, MonteCarlo };
    Kind kind = Kind::ClosedForm;
    std::size_t samples = 0;
    std::uint64_t seed = 0;

    static VolumeMethod closed_form() { return {}; }
    static VolumeMethod monte_carlo(std::size_t samples, std::uint64_t seed) {
        return {Kind::MonteCarlo, samples, seed};
    }
};

struct VolumeEstimate {
    double value = 0.0;
    /// Quadrature error for the closed form, 3-sigma binomial half-width for Monte Carlo.
    double error = 0.0;
};

/// Lebesgue measure of B~_r(y). ClosedForm is available on G1 with the max-type norm.
VolumeEstimate ball_volume(const QuasiSpace& space, const GroupPoint& y, double r, const VolumeMethod& method);

/// Area of the union of Euclidean discs of radius s centred on the arc
/// {e^(i alpha) v : |alpha| <= phi} with |v| = rho.
double swept_disc_area(double s, double phi, double rho);

/// Axis-aligned box containing B~_r(y): lower/upper corners.
struct BoundingBox {
    GroupPoint lower;
    GroupPoint upper;
    double volume() const noexcept;
};

BoundingBox quasi_ball_bounding_box(const QuasiSpace& space, const GroupPoint& y, double r, double inflation = 1.1);

/// Uniform point with |z| < r for the space's norm.
GroupPoint sample_norm_ball(const QuasiSpace& space, double r, CounterRng& rng);

/// A uniform-ish point of B~_r(y): z * O_s y with |z| < r and |s| <= r.
GroupPoint sample_quasi_ball(const QuasiSpace& space, const GroupPoint& y, double r, CounterRng& rng);

struct GeometryConfig {
    std::uint64_t seed = 1;
    std::size_t doubling_samples = 1000;
    double log2_radius_min = -8.0;
    double log2_radius_max = 4.0;
    /// Centre magnitudes are 2^U(-spread, spread) times a Gaussian direction.
    double center_log2_spread = 3.0;
    std::size_t mc_samples = 4096;
    std::size_t engulfing_samples = 200;
    std::size_t engulfing_probes = 16;
    std::size_t triangle_samples = 10000;
    std::size_t tecnical_samples = 2000;
    std::size_t growth_samples = 200;
    int growth_max_j = 8;
    std::size_t dichte_samples = 200;
    double distance_tolerance = 1e-10;
    DistanceMethod distance_method = DistanceMethod::Auto;
    bool check_stability = true;
    double stability_tolerance = 0.10;
};

/// A measured constant with its pass status.
struct Measurement {
    std::string name;
    double value = 0.0;
    double drift = 0.0;
    bool passed = true;
    std::string note;
};

struct GeometryReport {
    double doubling_constant = 0.0;
    double engulfing_constant = 0.0;
    double engulfing_measured = 0.0;
    double quasi_triangle_kappa = 0.0;
    double symmetry_violation = 0.0;
    double identity_violation = 0.0;
    double growth_constant = 0.0;
    bool growth_check = false;
    double dichte_c1 = 0.0;
    double dichte_c2 = 0.0;
    double tecnical_constant = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> sample_counts;
    std::vector<Measurement> measurements;
    Table rows{{"check", "index", "center_norm", "radius", "value"}};

    bool passed() const noexcept;
    const Measurement* find(const std::string& name) const noexcept;
};

/// Samples doubling, engulfing, quasi-metric axioms, G1 volume growth, orbit
/// density and the dilation-difference estimate. Constants are
/// recomputed with twice the samples; pass requires finite values with drift
/// within config.stability_tolerance.
GeometryReport verify_space_axioms(const QuasiSpace& space, const GeometryConfig& config);

/// Sampled engulfing constant k: sup over the engulfing probes, at least 3.
double measure_engulfing(const QuasiSpace& space, const GeometryConfig& config);

struct VolumeAgreement {
    std::size_t cases = 0;
    /// Cases with |closed form - Monte Carlo| > Monte Carlo error (3 sigma).
    std::size_t misses = 0;
    /// max |closed form - Monte Carlo| / error
    double max_score = 0.0;
    Table rows{{"case", "center_norm", "radius", "closed_form", "monte_carlo", "error"}};
};

/// Closed-form vs Monte Carlo ball volumes at seeded (y, r): y from random_point with
/// spread 2, r = 2^U(-4, 2). Needs a closed-form volume (ConfigurationError otherwise).
VolumeAgreement verify_volume_formula(const QuasiSpace& space, std::size_t cases, std::size_t mc_samples,
                                      std::uint64_t seed);

} // namespace rotadic
