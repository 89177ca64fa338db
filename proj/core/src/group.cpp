#include "rotadic/group.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rotadic/error.hpp"

namespace rotadic {

GroupPoint::GroupPoint(std::size_t dim) : dim_(dim) {
    if (dim > kMaxDim) {
        throw StructuralError("GroupPoint: dimension exceeds capacity");
    }
}

GroupPoint::GroupPoint(std::initializer_list<double> coords) : GroupPoint(coords.size()) {
    std::copy(coords.begin(), coords.end(), coords_.begin());
}

GroupPoint GroupPoint::from(std::span<const double> coords) {
    GroupPoint p(coords.size());
    std::copy(coords.begin(), coords.end(), p.coords_.begin());
    return p;
}

double GroupPoint::euclidean() const noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        sum += coords_[i] * coords_[i];
    }
    return std::sqrt(sum);
}

bool GroupPoint::finite() const noexcept {
    return std::all_of(coords_.begin(), coords_.begin() + static_cast<std::ptrdiff_t>(dim_),
                       [](double c) { return std::isfinite(c); });
}

bool operator==(const GroupPoint& a, const GroupPoint& b) noexcept {
    return a.dim_ == b.dim_ && std::equal(a.coords_.begin(), a.coords_.begin() + static_cast<std::ptrdiff_t>(a.dim_),
                                          b.coords_.begin());
}

namespace {

void require_same_dim(const GroupPoint& a, const GroupPoint& b) {
    if (a.dim() != b.dim()) {
        throw StructuralError("dimension mismatch between group points");
    }
}

void require_dim(const GroupDescriptor& g, const GroupPoint& x) {
    if (x.dim() != g.dim()) {
        throw StructuralError("point dimension " + std::to_string(x.dim()) + " does not match group dimension " +
                              std::to_string(g.dim()));
    }
}

double block_length(const GroupPoint& x, const NormBlock& b) {
    double sum = 0.0;
    for (std::size_t i = b.begin; i < b.end; ++i) {
        sum += x[i] * x[i];
    }
    return std::sqrt(sum);
}

} // namespace

GroupPoint operator+(const GroupPoint& a, const GroupPoint& b) {
    require_same_dim(a, b);
    GroupPoint r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        r[i] = a[i] + b[i];
    }
    return r;
}

GroupPoint operator-(const GroupPoint& a, const GroupPoint& b) {
    require_same_dim(a, b);
    GroupPoint r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        r[i] = a[i] - b[i];
    }
    return r;
}

GroupPoint operator*(double scale, const GroupPoint& a) {
    GroupPoint r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        r[i] = scale * a[i];
    }
    return r;
}

double euclidean_distance(const GroupPoint& a, const GroupPoint& b) {
    return (a - b).euclidean();
}

std::string_view to_string(Family family) {
    switch (family) {
    case Family::ParabolicR2:
        return "ParabolicR2";
    case Family::HeisenbergH2:
        return "HeisenbergH2";
    case Family::G1:
        return "G1";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "ParabolicR2") {
        return Family::ParabolicR2;
    }
    if (name == "HeisenbergH2") {
        return Family::HeisenbergH2;
    }
    if (name == "G1") {
        return Family::G1;
    }
    throw ConfigurationError("unknown group family '" + std::string(name) + "'");
}

std::string_view to_string(NormVariant variant) {
    switch (variant) {
    case NormVariant::MaxType:
        return "MaxType";
    case NormVariant::InfimumType:
        return "InfimumType";
    case NormVariant::SumType:
        return "SumType";
    case NormVariant::SquaredEuclidean:
        return "SquaredEuclidean";
    }
    return "unknown";
}

NormVariant norm_from_string(std::string_view name) {
    for (const auto v : {NormVariant::MaxType, NormVariant::InfimumType, NormVariant::SumType,
                         NormVariant::SquaredEuclidean}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    throw ConfigurationError("unknown norm variant '" + std::string(name) + "'");
}

SquareMatrix SquareMatrix::identity(std::size_t dim) {
    SquareMatrix m;
    m.dim = dim;
    for (std::size_t i = 0; i < dim; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

double determinant(SquareMatrix m) {
    double det = 1.0;
    const std::size_t n = m.dim;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(m(row, col)) > std::abs(m(pivot, col))) {
                pivot = row;
            }
        }
        if (m(pivot, col) == 0.0) {
            return 0.0;
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(m(pivot, k), m(col, k));
            }
            det = -det;
        }
        det *= m(col, col);
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = m(row, col) / m(col, col);
            for (std::size_t k = col; k < n; ++k) {
                m(row, k) -= factor * m(col, k);
            }
        }
    }
    return det;
}

GroupDescriptor GroupDescriptor::parabolic_r2(double rate) {
    GroupDescriptor g;
    g.family_ = Family::ParabolicR2;
    g.exponents_ = {0.5, 0.5};
    g.blocks_ = {{0, 2, 0.5}};
    g.planes_ = {{0, 1, rate}};
    g.finalize();
    return g;
}

GroupDescriptor GroupDescriptor::heisenberg_h2(double alpha, double beta) {
    GroupDescriptor g;
    g.family_ = Family::HeisenbergH2;
    g.exponents_ = {1.0, 1.0, 1.0, 1.0, 2.0};
    g.blocks_ = {{0, 4, 1.0}, {4, 5, 2.0}};
    g.planes_ = {{0, 1, alpha}, {2, 3, beta}};
    g.finalize();
    return g;
}

GroupDescriptor GroupDescriptor::g1(double a, std::vector<double> tail_exponents) {
    if (!(a > 0.0) || std::any_of(tail_exponents.begin(), tail_exponents.end(), [](double e) { return !(e > 0.0); })) {
        throw ConfigurationError("G1: dilation exponents must be positive");
    }
    if (tail_exponents.size() + 2 > kMaxDim) {
        throw ConfigurationError("G1: dimension exceeds capacity");
    }
    GroupDescriptor g;
    g.family_ = Family::G1;
    g.exponents_ = {a, a};
    g.blocks_ = {{0, 2, a}};
    for (std::size_t j = 0; j < tail_exponents.size(); ++j) {
        g.exponents_.push_back(tail_exponents[j]);
        g.blocks_.push_back({j + 2, j + 3, tail_exponents[j]});
    }
    g.planes_ = {{0, 1, 1.0}};
    g.finalize();
    return g;
}

void GroupDescriptor::finalize() {
    q_ = 0.0;
    for (const double e : exponents_) {
        q_ += e;
    }
    gamma_ = *std::min_element(exponents_.begin(), exponents_.end());
    big_gamma_ = *std::max_element(exponents_.begin(), exponents_.end());
}

double GroupDescriptor::max_rotation_rate() const noexcept {
    double rate = 0.0;
    for (const auto& p : planes_) {
        rate = std::max(rate, std::abs(p.rate));
    }
    return rate;
}

GroupDescriptor GroupDescriptor::with_rotation_override(std::function<SquareMatrix(double)> rotation) const {
    GroupDescriptor g = *this;
    g.override_ = std::move(rotation);
    return g;
}

SquareMatrix GroupDescriptor::rotation_matrix(double s) const {
    if (override_) {
        return override_(s);
    }
    SquareMatrix m = SquareMatrix::identity(dim());
    for (const auto& p : planes_) {
        const double c = std::cos(p.rate * s);
        const double sn = std::sin(p.rate * s);
        m(p.first, p.first) = c;
        m(p.first, p.second) = -sn;
        m(p.second, p.first) = sn;
        m(p.second, p.second) = c;
    }
    return m;
}

SquareMatrix GroupDescriptor::dilation_matrix(double t) const {
    SquareMatrix m = SquareMatrix::identity(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        m(i, i) = std::pow(t, exponents_[i]);
    }
    return m;
}

std::vector<NormVariant> GroupDescriptor::norm_variants() const {
    std::vector<NormVariant> v{NormVariant::MaxType, NormVariant::InfimumType, NormVariant::SumType};
    if (family_ == Family::ParabolicR2) {
        v.insert(v.begin(), NormVariant::SquaredEuclidean);
    }
    return v;
}

bool GroupDescriptor::supports(NormVariant variant) const noexcept {
    return variant != NormVariant::SquaredEuclidean || family_ == Family::ParabolicR2;
}

std::string GroupDescriptor::describe() const {
    std::ostringstream out;
    out << to_string(family_) << "(n=" << dim() << ", exponents=[";
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
        out << (i ? "," : "") << exponents_[i];
    }
    out << "], rates=[";
    for (std::size_t i = 0; i < planes_.size(); ++i) {
        out << (i ? "," : "") << planes_[i].rate;
    }
    out << "])";
    return out.str();
}

GroupPoint group_product(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y) {
    require_dim(g, x);
    require_dim(g, y);
    GroupPoint r = x + y;
    if (g.family() == Family::HeisenbergH2) {
        // [x, y] = (0, 0, Im(conj(u1) u2 + conj(v1) v2)); step 2, so BCH stops here.
        const double bracket = (x[0] * y[1] - x[1] * y[0]) + (x[2] * y[3] - x[3] * y[2]);
        r[4] += 0.5 * bracket;
    }
    return r;
}

GroupPoint group_inverse(const GroupDescriptor& g, const GroupPoint& x) {
    require_dim(g, x);
    return -1.0 * x;
}

GroupPoint right_quotient(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y) {
    return group_product(g, x, group_inverse(g, y));
}

GroupPoint dilate(const GroupDescriptor& g, double t, const GroupPoint& x) {
    require_dim(g, x);
    if (!(t > 0.0)) {
        throw DomainError("dilate: t must be positive");
    }
    GroupPoint r(x.dim());
    const auto exps = g.exponents();
    for (std::size_t i = 0; i < x.dim(); ++i) {
        r[i] = (exps[i] == 1.0 ? t : exps[i] == 0.5 ? std::sqrt(t) : std::pow(t, exps[i])) * x[i];
    }
    return r;
}

GroupPoint rotate(const GroupDescriptor& g, double s, const GroupPoint& x) {
    require_dim(g, x);
    if (g.has_rotation_override()) {
        const SquareMatrix m = g.rotation_matrix(s);
        GroupPoint r(x.dim());
        for (std::size_t i = 0; i < x.dim(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < x.dim(); ++j) {
                sum += m(i, j) * x[j];
            }
            r[i] = sum;
        }
        return r;
    }
    GroupPoint r = x;
    for (const auto& p : g.planes()) {
        const double c = std::cos(p.rate * s);
        const double sn = std::sin(p.rate * s);
        r[p.first] = c * x[p.first] - sn * x[p.second];
        r[p.second] = sn * x[p.first] + c * x[p.second];
    }
    return r;
}

namespace {

double infimum_norm(const GroupDescriptor& g, const GroupPoint& x) {
    // |x|' = inf{r > 0 : ||D_{1/r} x||_2 < 1}; phi(r) = ||D_{1/r} x||^2 decreases strictly in r.
    double upper_start = 0.0;
    for (const auto& b : g.blocks()) {
        upper_start = std::max(upper_start, std::pow(block_length(x, b), 1.0 / b.exponent));
    }
    if (upper_start == 0.0) {
        return 0.0;
    }
    const auto exps = g.exponents();
    auto phi = [&](double log_r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < x.dim(); ++i) {
            const double scaled = x[i] * std::exp(-exps[i] * log_r);
            sum += scaled * scaled;
        }
        return sum;
    };
    double lo = std::log(upper_start);
    double hi = lo + std::log(static_cast<double>(x.dim())) / (2.0 * g.gamma()) + 1e-12;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (phi(mid) >= 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

} // namespace

double hom_norm(const GroupDescriptor& g, NormVariant variant, const GroupPoint& x) {
    require_dim(g, x);
    if (!g.supports(variant)) {
        throw ConfigurationError(std::string("norm variant ") + std::string(to_string(variant)) +
                                 " is not available on " + std::string(to_string(g.family())));
    }
    switch (variant) {
    case NormVariant::SquaredEuclidean:
        return x[0] * x[0] + x[1] * x[1];
    case NormVariant::MaxType: {
        double m = 0.0;
        for (const auto& b : g.blocks()) {
            const double len = block_length(x, b);
            m = std::max(m, b.exponent == 1.0 ? len : b.exponent == 0.5 ? len * len : std::pow(len, 1.0 / b.exponent));
        }
        return m;
    }
    case NormVariant::SumType: {
        double sum = 0.0;
        for (const auto& b : g.blocks()) {
            sum += std::pow(block_length(x, b), 2.0 / b.exponent);
        }
        return std::sqrt(sum);
    }
    case NormVariant::InfimumType:
        return infimum_norm(g, x);
    }
    return 0.0;
}

GroupPoint random_point(const GroupDescriptor& g, CounterRng& rng, double log2_spread) {
    GroupPoint p(g.dim());
    const double scale = std::exp2(rng.uniform(-log2_spread, log2_spread));
    for (std::size_t i = 0; i < g.dim(); ++i) {
        p[i] = scale * rng.normal();
    }
    return p;
}

bool StructureReport::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.passed(); });
}

double StructureReport::max_violation() const noexcept {
    double m = 0.0;
    for (const auto& c : checks) {
        m = std::max(m, c.max_violation);
    }
    return m;
}

const StructureCheck* StructureReport::find(std::string_view name) const noexcept {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

namespace {

double relative_gap(const GroupPoint& a, const GroupPoint& b) {
    return euclidean_distance(a, b) / (1.0 + std::max(a.euclidean(), b.euclidean()));
}

} // namespace

StructureReport validate_group(const GroupDescriptor& g, std::size_t sample_count, std::uint64_t seed,
                               double tolerance) {
    if (sample_count == 0) {
        throw DomainError("validate_group: sample_count must be at least 1");
    }
    StructureReport report;
    report.sample_count = sample_count;
    report.seed = seed;
    auto& checks = report.checks;
    enum : std::size_t {
        kIdentity,
        kInverse,
        kAssociativity,
        kDilationLaw,
        kDilationAutomorphism,
        kRotationAutomorphism,
        kRotationHomomorphism,
        kCommutation,
        kOrthogonality,
        kDeterminant,
    };
    for (const char* name : {"identity", "inverse", "associativity", "dilation_group_law", "dilation_automorphism",
                             "rotation_automorphism", "rotation_homomorphism", "rotation_dilation_commutation",
                             "rotation_orthogonality", "rotation_determinant"}) {
        checks.push_back({name, 0.0, tolerance});
    }
    const std::size_t norm_base = checks.size();
    const auto variants = g.norm_variants();
    for (const auto v : variants) {
        const std::string prefix = "norm_" + std::string(to_string(v)) + "_";
        for (const char* axiom : {"zero", "symmetry", "homogeneity", "rotation_invariance"}) {
            checks.push_back({prefix + axiom, 0.0, tolerance});
        }
    }
    auto bump = [&](std::size_t index, double value) {
        checks[index].max_violation = std::max(checks[index].max_violation, value);
    };

    CounterRng rng = CounterRng::stream(seed, "homogeneous_group.validate");
    const GroupPoint origin = GroupPoint::zero(g.dim());
    for (std::size_t k = 0; k < sample_count; ++k) {
        const GroupPoint x = random_point(g, rng);
        const GroupPoint y = random_point(g, rng);
        const GroupPoint z = random_point(g, rng);
        const double t = std::exp2(rng.uniform(-4.0, 4.0));
        const double t2 = std::exp2(rng.uniform(-4.0, 4.0));
        const double s = rng.uniform(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
        const double s2 = rng.uniform(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);

        bump(kIdentity, std::max(relative_gap(group_product(g, x, origin), x), relative_gap(group_product(g, origin, x), x)));
        bump(kInverse, group_product(g, x, group_inverse(g, x)).euclidean() / (1.0 + x.euclidean()));
        bump(kAssociativity, relative_gap(group_product(g, group_product(g, x, y), z), group_product(g, x, group_product(g, y, z))));
        bump(kDilationLaw, relative_gap(dilate(g, t, dilate(g, t2, x)), dilate(g, t * t2, x)));
        bump(kDilationAutomorphism, relative_gap(dilate(g, t, group_product(g, x, y)), group_product(g, dilate(g, t, x), dilate(g, t, y))));
        bump(kRotationAutomorphism, relative_gap(rotate(g, s, group_product(g, x, y)), group_product(g, rotate(g, s, x), rotate(g, s, y))));
        bump(kRotationHomomorphism, relative_gap(rotate(g, s + s2, x), rotate(g, s, rotate(g, s2, x))));
        bump(kCommutation, relative_gap(rotate(g, s, dilate(g, t, x)), dilate(g, t, rotate(g, s, x))));

        const SquareMatrix o = g.rotation_matrix(s);
        double orth = 0.0;
        for (std::size_t i = 0; i < g.dim(); ++i) {
            for (std::size_t j = 0; j < g.dim(); ++j) {
                double dot = 0.0;
                for (std::size_t l = 0; l < g.dim(); ++l) {
                    dot += o(l, i) * o(l, j);
                }
                orth = std::max(orth, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
        }
        bump(kOrthogonality, orth);
        bump(kDeterminant, std::abs(determinant(o) - 1.0));

        for (std::size_t v = 0; v < variants.size(); ++v) {
            const std::size_t base = norm_base + 4 * v;
            const double nx = hom_norm(g, variants[v], x);
            if (k == 0) {
                bump(base, hom_norm(g, variants[v], origin));
            }
            bump(base + 1, std::abs(hom_norm(g, variants[v], group_inverse(g, x)) - nx) / (1.0 + nx));
            for (int j = -4; j <= 4; ++j) {
                const double tj = std::exp2(j);
                bump(base + 2, std::abs(hom_norm(g, variants[v], dilate(g, tj, x)) - tj * nx) / (1.0 + tj * nx));
            }
            bump(base + 3, std::abs(hom_norm(g, variants[v], rotate(g, s, x)) - nx) / (1.0 + nx));
        }
    }
    return report;
}

NormEstimate measure_norm_estimates(const GroupDescriptor& g, NormVariant variant, std::size_t samples,
                                    std::uint64_t seed) {
    CounterRng rng = CounterRng::stream(seed, "homogeneous_group.norm_estimates");
    NormEstimate e;
    for (std::size_t k = 0; k < samples; ++k) {
        GroupPoint x(g.dim());
        for (std::size_t i = 0; i < g.dim(); ++i) {
            x[i] = rng.normal();
        }
        // radius log-uniform in [2^-12, 1] to probe the small-scale regime
        const double radius = std::exp2(rng.uniform(-12.0, 0.0));
        x = (radius / x.euclidean()) * x;
        const double euclid = x.euclidean();
        const double hom = hom_norm(g, variant, x);
        e.c1 = std::max(e.c1, std::pow(hom, g.big_gamma()) / euclid);
        e.c2 = std::max(e.c2, euclid / std::pow(hom, g.gamma()));
    }
    return e;
}

NormRatioRange measure_norm_ratio(const GroupDescriptor& g, NormVariant first, NormVariant second,
                                  std::size_t samples, std::uint64_t seed) {
    CounterRng rng = CounterRng::stream(seed, "homogeneous_group.norm_ratio");
    NormRatioRange range{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t k = 0; k < samples; ++k) {
        GroupPoint x = random_point(g, rng, 6.0);
        // independent block scales so that every block can dominate
        for (const auto& b : g.blocks()) {
            const double scale = std::exp2(rng.uniform(-6.0, 6.0));
            for (std::size_t i = b.begin; i < b.end; ++i) {
                x[i] *= scale;
            }
        }
        const double ratio = hom_norm(g, first, x) / hom_norm(g, second, x);
        range.lower = std::min(range.lower, ratio);
        range.upper = std::max(range.upper, ratio);
    }
    return range;
}

} // namespace rotadic
