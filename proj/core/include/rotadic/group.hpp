#pragma once

// Homogeneous groups in exponential coordinates: the parabolic plane, the
// Heisenberg group H2 = C^2 x R and the family G1 = C x R^(n-2), together with
// their dilations D_t, rotations O_s and rotation-invariant homogeneous norms.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotadic/random.hpp"

namespace rotadic {

inline constexpr std::size_t kMaxDim = 8;

/// A point of G in exponential coordinates. Fixed capacity, no allocation.
/// H2 points are stored as (Re u, Im u, Re v, Im v, s).
class GroupPoint {
public:
    GroupPoint() = default;
    explicit GroupPoint(std::size_t dim);
    GroupPoint(std::initializer_list<double> coords);
    static GroupPoint from(std::span<const double> coords);
    static GroupPoint zero(std::size_t dim) { return GroupPoint(dim); }

    std::size_t dim() const noexcept { return dim_; }
    double& operator[](std::size_t i) noexcept { return coords_[i]; }
    double operator[](std::size_t i) const noexcept { return coords_[i]; }
    std::span<const double> coords() const noexcept { return {coords_.data(), dim_}; }
    std::span<double> coords() noexcept { return {coords_.data(), dim_}; }

    /// Euclidean norm of the coordinate vector.
    double euclidean() const noexcept;
    bool finite() const noexcept;

    friend bool operator==(const GroupPoint& a, const GroupPoint& b) noexcept;

private:
    std::array<double, kMaxDim> coords_{};
    std::size_t dim_ = 0;
};

GroupPoint operator+(const GroupPoint& a, const GroupPoint& b);
GroupPoint operator-(const GroupPoint& a, const GroupPoint& b);
GroupPoint operator*(double scale, const GroupPoint& a);
double euclidean_distance(const GroupPoint& a, const GroupPoint& b);

enum class Family { ParabolicR2, HeisenbergH2, G1 };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

enum class NormVariant { MaxType, InfimumType, SumType, SquaredEuclidean };

std::string_view to_string(NormVariant variant);
NormVariant norm_from_string(std::string_view name);

/// Coordinates [begin, end) scaled jointly by t^exponent; norms treat a block
/// through its Euclidean length so block-wise rotations leave them invariant.
struct NormBlock {
    std::size_t begin = 0;
    std::size_t end = 0;
    double exponent = 1.0;
};

/// A plane (first, second) rotated by angle rate * s under O_s.
struct RotationPlane {
    std::size_t first = 0;
    std::size_t second = 1;
    double rate = 1.0;
};

/// Row-major n x n matrix with the fixed point capacity.
struct SquareMatrix {
    std::size_t dim = 0;
    std::array<double, kMaxDim * kMaxDim> entries{};

    double operator()(std::size_t row, std::size_t col) const noexcept { return entries[row * kMaxDim + col]; }
    double& operator()(std::size_t row, std::size_t col) noexcept { return entries[row * kMaxDim + col]; }
    static SquareMatrix identity(std::size_t dim);
};

double determinant(SquareMatrix m);

/// Immutable description of a homogeneous group with rotations.
class GroupDescriptor {
public:
    /// R^2 with D_r x = r^(1/2) x and planar rotation at `rate`.
    static GroupDescriptor parabolic_r2(double rate = 1.0);
    /// H2 with D_t(u, v, s) = (tu, tv, t^2 s) and O_t(u, v, s) = (u e^(i alpha t), v e^(i beta t), s).
    static GroupDescriptor heisenberg_h2(double alpha = 1.0, double beta = 1.4142135623730951);
    /// G1 = C x R^(n-2), D_r = (r^a u, r^a3 x3, ...), O_t(u, x') = (e^(it) u, x').
    static GroupDescriptor g1(double a, std::vector<double> tail_exponents = {});

    Family family() const noexcept { return family_; }
    std::size_t dim() const noexcept { return exponents_.size(); }
    std::span<const double> exponents() const noexcept { return exponents_; }
    std::span<const NormBlock> blocks() const noexcept { return blocks_; }
    std::span<const RotationPlane> planes() const noexcept { return planes_; }

    double homogeneous_dimension() const noexcept { return q_; }
    double gamma() const noexcept { return gamma_; }
    double big_gamma() const noexcept { return big_gamma_; }
    bool abelian() const noexcept { return family_ != Family::HeisenbergH2; }
    /// Largest angular speed of the rotation planes.
    double max_rotation_rate() const noexcept;

    /// Replaces O_s by an arbitrary matrix function; used to inject faulty
    /// rotations when testing the structure validator.
    GroupDescriptor with_rotation_override(std::function<SquareMatrix(double)> rotation) const;
    bool has_rotation_override() const noexcept { return static_cast<bool>(override_); }

    SquareMatrix rotation_matrix(double s) const;
    SquareMatrix dilation_matrix(double t) const;

    /// Homogeneous norms shipped for this family.
    std::vector<NormVariant> norm_variants() const;
    bool supports(NormVariant variant) const noexcept;

    std::string describe() const;

private:
    GroupDescriptor() = default;
    void finalize();

    Family family_ = Family::ParabolicR2;
    std::vector<double> exponents_;
    std::vector<NormBlock> blocks_;
    std::vector<RotationPlane> planes_;
    std::function<SquareMatrix(double)> override_;
    double q_ = 0.0;
    double gamma_ = 0.0;
    double big_gamma_ = 0.0;
};

GroupPoint group_product(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y);
GroupPoint group_inverse(const GroupDescriptor& g, const GroupPoint& x);
/// x * y^(-1), the argument of right-invariant distances.
GroupPoint right_quotient(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y);
GroupPoint dilate(const GroupDescriptor& g, double t, const GroupPoint& x);
GroupPoint rotate(const GroupDescriptor& g, double s, const GroupPoint& x);
double hom_norm(const GroupDescriptor& g, NormVariant variant, const GroupPoint& x);

/// One structural property with its measured worst case.
struct StructureCheck {
    std::string name;
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool passed() const noexcept { return max_violation <= tolerance; }
};

struct StructureReport {
    std::vector<StructureCheck> checks;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    bool passed() const noexcept;
    double max_violation() const noexcept;
    const StructureCheck* find(std::string_view name) const noexcept;
};

/// Samples the group axioms, automorphism properties of D_t and O_s, their
/// commutation, orthogonality of O_s and the norm axioms of every shipped
/// variant. Deterministic in `seed`.
StructureReport validate_group(const GroupDescriptor& g, std::size_t sample_count, std::uint64_t seed,
                               double tolerance = 1e-10);

/// Measured constants of |x|^Gamma <= C1 ||x||_2 and ||x||_2 <= C2 |x|^gamma on the unit Euclidean ball.
struct NormEstimate {
    double c1 = 0.0;
    double c2 = 0.0;
};

NormEstimate measure_norm_estimates(const GroupDescriptor& g, NormVariant variant, std::size_t samples,
                                    std::uint64_t seed);

/// Range [min, max] of hom_norm(first) / hom_norm(second) over random points.
struct NormRatioRange {
    double lower = 0.0;
    double upper = 0.0;
};

NormRatioRange measure_norm_ratio(const GroupDescriptor& g, NormVariant first, NormVariant second,
                                  std::size_t samples, std::uint64_t seed);

/// Random point with coordinates of mixed dyadic magnitudes, used by the samplers.
GroupPoint random_point(const GroupDescriptor& g, CounterRng& rng, double log2_spread = 3.0);

} // namespace rotadic
