#include "rotadic/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotadic/error.hpp"

namespace rotadic {

double hermite_function(int order, double z) {
    // (-1)^j H_j(z) e^{-z^2}, physicists' Hermite polynomials by recurrence
    double h0 = 1.0;
    double h1 = 2.0 * z;
    double hj = order == 0 ? h0 : h1;
    for (int j = 1; j < order; ++j) {
        hj = 2.0 * z * h1 - 2.0 * j * h0;
        h0 = h1;
        h1 = hj;
    }
    return (order % 2 ? -hj : hj) * std::exp(-z * z);
}

double hermite_antiderivative(int order, double z) {
    if (order == 0) {
        return 0.5 * std::sqrt(std::numbers::pi) * std::erf(z);
    }
    return hermite_function(order - 1, z);
}

namespace {

MultiIndex unit_index(std::size_t k, int order) {
    MultiIndex a{};
    a[k] = order;
    return a;
}

bool all_terms_mean_zero(const std::vector<HermiteTerm>& terms, std::size_t dim) {
    for (const auto& t : terms) {
        bool has_derivative = false;
        for (std::size_t i = 0; i < dim; ++i) {
            has_derivative = has_derivative || t.alpha[i] > 0;
        }
        if (!has_derivative && t.coeff != Complex{}) {
            return false;
        }
    }
    return true;
}

// 4th-order central stencils for the k-th derivative, k = 1..4 (offsets -3..3).
const std::array<double, 7>& stencil(int k) {
    static const std::array<std::array<double, 7>, 5> table{{
        {0, 0, 0, 1, 0, 0, 0},
        {0, 1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12, 0},
        {0, -1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0},
        {-1.0 / 8, 8.0 / 8, -13.0 / 8, 0, 13.0 / 8, -8.0 / 8, 1.0 / 8},
        {-1.0 / 6, 12.0 / 6, -39.0 / 6, 56.0 / 6, -39.0 / 6, 12.0 / 6, -1.0 / 6},
    }};
    if (k < 0 || k > 4) {
        throw ConfigurationError("finite-difference derivatives are limited to order 4 per axis");
    }
    return table[static_cast<std::size_t>(k)];
}

} // namespace

SchwartzProfile SchwartzProfile::hermite_sum(std::size_t dim, std::vector<HermiteTerm> terms,
                                             bool rotationally_symmetric, std::string name) {
    if (dim == 0 || dim > kMaxDim) {
        throw StructuralError("profile dimension out of range");
    }
    SchwartzProfile p;
    p.kind_ = Kind::HermiteGaussian;
    p.dim_ = dim;
    p.mean_zero_ = all_terms_mean_zero(terms, dim);
    p.rotationally_symmetric_ = rotationally_symmetric;
    p.name_ = std::move(name);
    p.matrix_ = SquareMatrix::identity(dim);
    p.terms_ = std::make_shared<const std::vector<HermiteTerm>>(std::move(terms));
    return p;
}

SchwartzProfile SchwartzProfile::gaussian(std::size_t dim) {
    SchwartzProfile p = hermite_sum(dim, {HermiteTerm{}}, true, "gaussian");
    p.kind_ = Kind::GaussianE;
    return p;
}

SchwartzProfile SchwartzProfile::laplacian_gaussian(std::size_t dim) {
    std::vector<HermiteTerm> terms;
    for (std::size_t k = 0; k < dim; ++k) {
        terms.push_back({Complex{1.0, 0.0}, unit_index(k, 2)});
    }
    SchwartzProfile p = hermite_sum(dim, std::move(terms), true, "laplacian_gaussian");
    p.kind_ = Kind::LaplacianGaussian;
    return p;
}

SchwartzProfile SchwartzProfile::hermite_gaussian(std::size_t dim, const MultiIndex& alpha) {
    std::string name = "hermite(";
    for (std::size_t i = 0; i < dim; ++i) {
        name += (i ? "," : "") + std::to_string(alpha[i]);
    }
    SchwartzProfile p = hermite_sum(dim, {HermiteTerm{Complex{1.0, 0.0}, alpha}}, false, name + ")");
    p.kind_ = Kind::HermiteGaussian;
    return p;
}

SchwartzProfile SchwartzProfile::custom(std::size_t dim, std::function<Complex(const GroupPoint&)> fn, bool mean_zero,
                                        bool rotationally_symmetric, std::string name) {
    if (dim == 0 || dim > kMaxDim) {
        throw StructuralError("profile dimension out of range");
    }
    SchwartzProfile p;
    p.kind_ = Kind::Custom;
    p.dim_ = dim;
    p.mean_zero_ = mean_zero;
    p.rotationally_symmetric_ = rotationally_symmetric;
    p.name_ = std::move(name);
    p.matrix_ = SquareMatrix::identity(dim);
    p.closure_ = std::make_shared<const std::function<Complex(const GroupPoint&)>>(std::move(fn));
    return p;
}

GroupPoint SchwartzProfile::affine(const GroupPoint& x) const {
    if (x.dim() != dim_) {
        throw StructuralError("profile evaluated at a point of the wrong dimension");
    }
    GroupPoint z(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = shift_[i];
        for (std::size_t j = 0; j < dim_; ++j) {
            s += matrix_(i, j) * x[j];
        }
        z[i] = s;
    }
    return z;
}

Complex SchwartzProfile::base(const GroupPoint& z) const {
    Complex value;
    if (closure_) {
        value = (*closure_)(z);
    } else {
        for (const auto& t : *terms_) {
            double prod = 1.0;
            for (std::size_t i = 0; i < dim_ && prod != 0.0; ++i) {
                prod *= hermite_function(t.alpha[i], z[i]);
            }
            value += t.coeff * prod;
        }
    }
    return conjugate_ ? std::conj(value) : value;
}

double hermite_sup(int order) {
    static const std::vector<double> table = [] {
        std::vector<double> t(17);
        for (int j = 0; j <= 16; ++j) {
            double m = 0.0;
            for (int k = 0; k <= 40000; ++k) {
                m = std::max(m, std::abs(hermite_function(j, -10.0 + 5e-4 * k)));
            }
            // maxima are smooth, so the scan misses at most a relative O(step^2)
            t[static_cast<std::size_t>(j)] = m * (1.0 + 1e-5);
        }
        return t;
    }();
    if (order < 0 || order > 16) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return table[static_cast<std::size_t>(order)];
}

double SchwartzProfile::sup_bound() const {
    if (is_zero()) {
        return 0.0;
    }
    if (closure_) {
        return std::abs(amp_) * base_sup_;
    }
    double total = 0.0;
    for (const auto& t : *terms_) {
        double prod = std::abs(t.coeff);
        for (std::size_t i = 0; i < dim_; ++i) {
            prod *= hermite_sup(t.alpha[i]);
        }
        total += prod;
    }
    return std::abs(amp_) * total;
}

SchwartzProfile SchwartzProfile::with_sup_bound(double bound) const {
    SchwartzProfile p = *this;
    p.base_sup_ = bound / std::abs(amp_);
    return p;
}

Complex SchwartzProfile::operator()(const GroupPoint& x) const {
    if (is_zero()) {
        return {};
    }
    return amp_ * base(affine(x));
}

bool SchwartzProfile::diagonal() const noexcept {
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            if (i != j && matrix_(i, j) != 0.0) {
                return false;
            }
        }
    }
    return true;
}

bool SchwartzProfile::exact_derivatives() const noexcept {
    return !closure_ && diagonal();
}

Complex SchwartzProfile::derivative(const GroupPoint& x, const MultiIndex& beta) const {
    if (is_zero()) {
        return {};
    }
    if (exact_derivatives()) {
        const GroupPoint z = affine(x);
        Complex value;
        for (const auto& t : *terms_) {
            double prod = 1.0;
            for (std::size_t i = 0; i < dim_ && prod != 0.0; ++i) {
                prod *= std::pow(matrix_(i, i), beta[i]) * hermite_function(t.alpha[i] + beta[i], z[i]);
            }
            value += t.coeff * prod;
        }
        return amp_ * (conjugate_ ? std::conj(value) : value);
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            scale = std::max(scale, std::abs(matrix_(i, j)));
        }
    }
    const double h = 0.02 / scale;
    // tensor stencil over the axes with beta_i > 0
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < dim_; ++i) {
        if (beta[i] > 0) {
            axes.push_back(i);
            (void)stencil(beta[i]);
        }
    }
    if (axes.empty()) {
        return (*this)(x);
    }
    Complex sum;
    std::vector<int> offset(axes.size(), -3);
    for (;;) {
        double weight = 1.0;
        GroupPoint p = x;
        for (std::size_t k = 0; k < axes.size(); ++k) {
            weight *= stencil(beta[axes[k]])[static_cast<std::size_t>(offset[k] + 3)] / std::pow(h, beta[axes[k]]);
            p[axes[k]] += offset[k] * h;
        }
        if (weight != 0.0) {
            sum += weight * (*this)(p);
        }
        std::size_t k = 0;
        while (k < axes.size() && ++offset[k] > 3) {
            offset[k] = -3;
            ++k;
        }
        if (k == axes.size()) {
            break;
        }
    }
    return sum;
}

Complex SchwartzProfile::cell_average(const GroupPoint& center, std::span<const double> h) const {
    if (is_zero()) {
        return {};
    }
    if (!exact_cell_average()) {
        return (*this)(center);
    }
    const GroupPoint z = affine(center);
    Complex value;
    for (const auto& t : *terms_) {
        double prod = 1.0;
        for (std::size_t i = 0; i < dim_ && prod != 0.0; ++i) {
            const double m = matrix_(i, i);
            const double half = 0.5 * m * h[i];
            if (std::abs(half) < 1e-6) {
                prod *= hermite_function(t.alpha[i], z[i]);
            } else {
                prod *= (hermite_antiderivative(t.alpha[i], z[i] + half) -
                         hermite_antiderivative(t.alpha[i], z[i] - half)) /
                        (2.0 * half);
            }
        }
        value += t.coeff * prod;
    }
    return amp_ * (conjugate_ ? std::conj(value) : value);
}

SchwartzProfile SchwartzProfile::scaled(Complex c) const {
    SchwartzProfile p = *this;
    p.amp_ *= c;
    return p;
}

SchwartzProfile SchwartzProfile::composed_linear(const SquareMatrix& l) const {
    if (l.dim != dim_) {
        throw StructuralError("linear map dimension does not match the profile");
    }
    SchwartzProfile p = *this;
    p.support_ = std::numeric_limits<double>::infinity();
    // a general linear map need not commute with the rotations
    p.rotationally_symmetric_ = false;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) {
                s += matrix_(i, k) * l(k, j);
            }
            p.matrix_(i, j) = s;
        }
    }
    return p;
}

SchwartzProfile SchwartzProfile::composed_dilation(const GroupDescriptor& g, double r) const {
    if (!(r > 0.0)) {
        throw DomainError("dilation parameter must be positive");
    }
    SchwartzProfile p = composed_linear(g.dilation_matrix(r));
    p.support_ = support_ / r;
    p.rotationally_symmetric_ = rotationally_symmetric_;
    return p;
}

SchwartzProfile SchwartzProfile::dilated(const GroupDescriptor& g, double t) const {
    if (!(t > 0.0)) {
        throw DomainError("psi_t needs t > 0");
    }
    return composed_dilation(g, 1.0 / t).scaled(std::pow(t, -g.homogeneous_dimension()));
}

SchwartzProfile SchwartzProfile::rotated(const GroupDescriptor& g, double s) const {
    if (rotationally_symmetric_) {
        return *this;
    }
    // rotations preserve the max-type norm
    SchwartzProfile p = composed_linear(g.rotation_matrix(s));
    p.support_ = support_;
    return p;
}

SchwartzProfile SchwartzProfile::translated(const GroupPoint& shift) const {
    SchwartzProfile p = *this;
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            s += matrix_(i, j) * shift[j];
        }
        p.shift_[i] -= s;
    }
    p.support_ = std::numeric_limits<double>::infinity();
    p.rotationally_symmetric_ = false;
    return p;
}

SchwartzProfile SchwartzProfile::conjugate_inverse() const {
    SchwartzProfile p = *this;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            p.matrix_(i, j) = -matrix_(i, j);
        }
    }
    p.amp_ = std::conj(amp_);
    p.conjugate_ = !conjugate_;
    p.name_ = name_ + "*";
    return p;
}

SchwartzProfile SchwartzProfile::with_flags(bool mean_zero, bool rotationally_symmetric) const {
    SchwartzProfile p = *this;
    p.mean_zero_ = mean_zero;
    p.rotationally_symmetric_ = rotationally_symmetric;
    return p;
}

SchwartzProfile SchwartzProfile::with_support_radius(double r) const {
    if (!(r > 0.0)) {
        throw DomainError("support radius must be positive");
    }
    SchwartzProfile p = *this;
    p.support_ = r;
    return p;
}

void SchwartzProfile::sample_lattice(std::span<const double> lower, std::span<const double> h,
                                     std::span<const std::size_t> counts, bool cell_average,
                                     std::span<Complex> out) const {
    std::size_t total = 1;
    for (std::size_t i = 0; i < dim_; ++i) {
        total *= counts[i];
    }
    if (lower.size() != dim_ || h.size() != dim_ || counts.size() != dim_ || out.size() != total) {
        throw StructuralError("sample_lattice: shape mismatch");
    }
    if (is_zero()) {
        std::fill(out.begin(), out.end(), Complex{});
        return;
    }
    if (!exact_derivatives()) {
        GroupPoint x(dim_);
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rest = flat;
            for (std::size_t i = dim_; i-- > 0;) {
                x[i] = lower[i] + static_cast<double>(rest % counts[i]) * h[i];
                rest /= counts[i];
            }
            out[flat] = (*this)(x);
        }
        return;
    }
    std::fill(out.begin(), out.end(), Complex{});
    std::vector<std::vector<double>> tables(dim_);
    for (const auto& t : *terms_) {
        for (std::size_t i = 0; i < dim_; ++i) {
            const double m = matrix_(i, i);
            const double half = 0.5 * m * h[i];
            auto& tab = tables[i];
            tab.resize(counts[i]);
            for (std::size_t k = 0; k < counts[i]; ++k) {
                const double z = m * (lower[i] + static_cast<double>(k) * h[i]) + shift_[i];
                if (cell_average && std::abs(half) >= 1e-6) {
                    tab[k] = (hermite_antiderivative(t.alpha[i], z + half) -
                              hermite_antiderivative(t.alpha[i], z - half)) /
                             (2.0 * half);
                } else {
                    tab[k] = hermite_function(t.alpha[i], z);
                }
            }
        }
        // row-major outer product: the innermost axis varies fastest
        const std::size_t inner = counts[dim_ - 1];
        const auto& last = tables[dim_ - 1];
        for (std::size_t row = 0; row < total / inner; ++row) {
            std::size_t rest = row;
            double prefix = 1.0;
            for (std::size_t i = dim_ - 1; i-- > 0;) {
                prefix *= tables[i][rest % counts[i]];
                rest /= counts[i];
            }
            if (prefix == 0.0) {
                continue;
            }
            const Complex c = t.coeff * prefix;
            Complex* dst = out.data() + row * inner;
            for (std::size_t k = 0; k < inner; ++k) {
                dst[k] += c * last[k];
            }
        }
    }
    for (auto& v : out) {
        v = amp_ * (conjugate_ ? std::conj(v) : v);
    }
}

} // namespace rotadic
