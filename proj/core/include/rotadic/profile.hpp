#pragma once

// Analytic Schwartz test functions. A profile is
//     psi(x) = amp * B(M x + b)
// with B either a Gaussian-Hermite sum  sum_k c_k prod_i phi_{alpha_ki}(z_i),
// phi_j = d^j/dz^j e^{-z^2}, or an arbitrary closure. Dilations, rotations and
// the conjugate inverse act on (amp, M, b), so psi_t, psi o O_s and psi* stay exact.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rotadic/group.hpp"

namespace rotadic {

using Complex = std::complex<double>;
using MultiIndex = std::array<int, kMaxDim>;

/// phi_j(z) = d^j/dz^j e^{-z^2}
double hermite_function(int order, double z);
/// sup_z |phi_j(z)| for j <= 16 (NaN beyond).
double hermite_sup(int order);
/// Antiderivative of phi_j: (sqrt(pi)/2) erf(z) for j = 0, phi_{j-1} otherwise.
double hermite_antiderivative(int order, double z);

struct HermiteTerm {
    Complex coeff{1.0, 0.0};
    MultiIndex alpha{};
};

class SchwartzProfile {
public:
    enum class Kind { GaussianE, LaplacianGaussian, HermiteGaussian, Custom };

    /// E(x) = exp(-|x|_2^2)
    static SchwartzProfile gaussian(std::size_t dim);
    /// Laplacian of E: mean zero, rotation invariant.
    static SchwartzProfile laplacian_gaussian(std::size_t dim);
    /// prod_i phi_{alpha_i}(x_i)
    static SchwartzProfile hermite_gaussian(std::size_t dim, const MultiIndex& alpha);
    /// General Gaussian-Hermite sum.
    static SchwartzProfile hermite_sum(std::size_t dim, std::vector<HermiteTerm> terms, bool rotationally_symmetric,
                                       std::string name);
    static SchwartzProfile custom(std::size_t dim, std::function<Complex(const GroupPoint&)> fn, bool mean_zero,
                                  bool rotationally_symmetric, std::string name);

    Kind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    bool mean_zero() const noexcept { return mean_zero_; }
    bool rotationally_symmetric() const noexcept { return rotationally_symmetric_; }
    const std::string& name() const noexcept { return name_; }
    bool is_zero() const noexcept { return amp_ == Complex{}; }

    Complex operator()(const GroupPoint& x) const;
    /// Upper bound for sup |psi|: sum |c_k| prod sup|phi_alpha| for Hermite sums, NaN for closures.
    double sup_bound() const;
    /// Records sup |psi| for closures, where it cannot be derived.
    SchwartzProfile with_sup_bound(double bound) const;

    /// d^beta psi(x). Exact for Hermite sums with a diagonal affine map,
    /// 4th-order central differences otherwise.
    Complex derivative(const GroupPoint& x, const MultiIndex& beta) const;
    bool exact_derivatives() const noexcept;

    /// Average of psi over the box prod_i [c_i - h_i/2, c_i + h_i/2]; exact when
    /// exact_cell_average() holds, midpoint value otherwise.
    Complex cell_average(const GroupPoint& center, std::span<const double> h) const;
    bool exact_cell_average() const noexcept { return exact_derivatives(); }

    /// c * psi
    SchwartzProfile scaled(Complex c) const;
    /// psi_t = t^-Q psi o D_{1/t}
    SchwartzProfile dilated(const GroupDescriptor& g, double t) const;
    /// psi o D_r without the Jacobian factor.
    SchwartzProfile composed_dilation(const GroupDescriptor& g, double r) const;
    /// psi o O_s
    SchwartzProfile rotated(const GroupDescriptor& g, double s) const;
    /// psi o L for a linear map L.
    SchwartzProfile composed_linear(const SquareMatrix& l) const;
    /// x -> psi(x - shift) (abelian translation)
    SchwartzProfile translated(const GroupPoint& shift) const;
    /// psi*(x) = conj(psi(x^-1)) = conj(psi(-x))
    SchwartzProfile conjugate_inverse() const;

    /// Replaces the mean-zero flag (used after an explicit correction).
    SchwartzProfile with_flags(bool mean_zero, bool rotationally_symmetric) const;

    /// Radius r such that psi vanishes outside the max-type ball B_r; infinity when unknown.
    double support_radius() const noexcept { return support_; }
    SchwartzProfile with_support_radius(double r) const;

    /// Values on the lattice lower + k h (row-major). Diagonal Hermite sums are
    /// tabulated per axis; cell averages are exact for them and fall back to
    /// point values otherwise.
    void sample_lattice(std::span<const double> lower, std::span<const double> h,
                        std::span<const std::size_t> counts, bool cell_average, std::span<Complex> out) const;

private:
    SchwartzProfile() = default;
    Complex base(const GroupPoint& z) const;
    bool diagonal() const noexcept;
    GroupPoint affine(const GroupPoint& x) const;

    Kind kind_ = Kind::Custom;
    std::size_t dim_ = 0;
    bool mean_zero_ = false;
    bool rotationally_symmetric_ = false;
    std::string name_;
    Complex amp_{1.0, 0.0};
    bool conjugate_ = false;
    SquareMatrix matrix_;
    std::array<double, kMaxDim> shift_{};
    double support_ = std::numeric_limits<double>::infinity();
    double base_sup_ = std::numeric_limits<double>::quiet_NaN(); // sup |B| for closures
    std::shared_ptr<const std::vector<HermiteTerm>> terms_;
    std::shared_ptr<const std::function<Complex(const GroupPoint&)>> closure_;
};

} // namespace rotadic
