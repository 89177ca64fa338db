#include "rotadic/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "rotadic/error.hpp"
#include "rotadic/numerics.hpp"
#include "rotadic/parallel.hpp"
#include "rotadic/report.hpp"

namespace rotadic {

GridSpec::GridSpec(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> counts,
                   std::size_t budget)
    : lower_(std::move(lower)), upper_(std::move(upper)), counts_(std::move(counts)) {
    const std::size_t n = lower_.size();
    if (n == 0 || n > kMaxDim || upper_.size() != n || counts_.size() != n) {
        throw StructuralError("GridSpec: corners and counts must share a dimension in [1, 8]");
    }
    h_.resize(n);
    double size = 1.0;
    cell_ = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(upper_[i] > lower_[i]) || counts_[i] < 2) {
            throw DomainError("GridSpec: need upper > lower and at least two nodes per axis");
        }
        h_[i] = (upper_[i] - lower_[i]) / static_cast<double>(counts_[i] - 1);
        size *= static_cast<double>(counts_[i]);
        cell_ *= h_[i];
    }
    if (size > static_cast<double>(budget)) {
        throw ResourceError("GridSpec: " + std::to_string(static_cast<long long>(size)) + " nodes exceed the budget of " +
                            std::to_string(budget));
    }
    size_ = static_cast<std::size_t>(size);
}

GridSpec GridSpec::cube(std::size_t dim, double lower, double upper, std::size_t count, std::size_t budget) {
    return GridSpec(std::vector<double>(dim, lower), std::vector<double>(dim, upper), std::vector<std::size_t>(dim, count),
                    budget);
}

GridSpec GridSpec::with_spacing(std::size_t dim, double lower, double upper, double h, std::size_t budget) {
    if (!(h > 0.0)) {
        throw DomainError("GridSpec: spacing must be positive");
    }
    const auto cells = static_cast<std::size_t>(std::ceil((upper - lower) / h - 1e-9));
    return cube(dim, lower, lower + static_cast<double>(cells) * h, cells + 1, budget);
}

GridSpec GridSpec::default_r2() { return cube(2, -8.0, 8.0, 257); }

GridSpec GridSpec::default_h2() { return cube(5, -4.0, 4.0, 25); }

GroupPoint GridSpec::node(std::size_t flat_index) const {
    GroupPoint x(dim());
    for (std::size_t i = dim(); i-- > 0;) {
        const std::size_t k = flat_index % counts_[i];
        flat_index /= counts_[i];
        x[i] = lower_[i] + static_cast<double>(k) * h_[i];
    }
    return x;
}

GroupPoint GridSpec::node(const std::vector<std::size_t>& index) const {
    GroupPoint x(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        x[i] = lower_[i] + static_cast<double>(index[i]) * h_[i];
    }
    return x;
}

std::size_t GridSpec::flat(const std::vector<std::size_t>& index) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
        f = f * counts_[i] + index[i];
    }
    return f;
}

std::vector<std::size_t> GridSpec::unflatten(std::size_t flat_index) const {
    std::vector<std::size_t> index(dim());
    for (std::size_t i = dim(); i-- > 0;) {
        index[i] = flat_index % counts_[i];
        flat_index /= counts_[i];
    }
    return index;
}

namespace {

bool on_lattice(double value, double h) {
    const double k = value / h;
    return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k));
}

} // namespace

bool GridSpec::commensurable(const GridSpec& other) const noexcept {
    if (other.dim() != dim()) {
        return false;
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        if (std::abs(h_[i] - other.h_[i]) > 1e-12 * h_[i] || !on_lattice(lower_[i], h_[i]) ||
            !on_lattice(other.lower_[i], h_[i])) {
            return false;
        }
    }
    return true;
}

GridField::GridField(GridSpec grid, std::vector<Complex> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw StructuralError("GridField: value count does not match the grid");
    }
    for (const Complex& v : values_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw DomainError("GridField: values must be finite");
        }
    }
}

GridField GridField::zeros(const GridSpec& grid) { return GridField(grid, std::vector<Complex>(grid.size())); }

namespace {

void require_same_grid(const GridField& a, const GridField& b) {
    if (!(a.grid() == b.grid())) {
        throw StructuralError("fields live on different grids");
    }
}

std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2)};
}

// Tensor interpolation; axes whose coordinate sits on a node use one tap.
Complex lattice_read(const GridField& f, const GroupPoint& x) {
    const GridSpec& grid = f.grid();
    const std::size_t n = grid.dim();
    std::array<long long, kMaxDim> base{};
    std::array<std::array<double, 4>, kMaxDim> weights{};
    std::array<int, kMaxDim> taps{};
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (x[i] - grid.lower()[i]) / grid.spacing()[i];
        const double r = std::round(p);
        if (std::abs(p - r) <= 1e-9 * std::max(1.0, std::abs(p))) {
            if (r < 0.0 || r > static_cast<double>(grid.counts()[i] - 1)) {
                return {};
            }
            base[i] = static_cast<long long>(r);
            weights[i] = {1.0, 0.0, 0.0, 0.0};
            taps[i] = 1;
        } else {
            if (p < 0.0 || p > static_cast<double>(grid.counts()[i] - 1)) {
                return {};
            }
            const double fl = std::floor(p);
            base[i] = static_cast<long long>(fl) - 1;
            weights[i] = catmull_rom(p - fl);
            taps[i] = 4;
        }
    }
    Complex sum;
    std::array<int, kMaxDim> k{};
    for (;;) {
        double w = 1.0;
        std::size_t flat = 0;
        bool inside = true;
        for (std::size_t i = 0; i < n; ++i) {
            const long long idx = base[i] + k[i];
            if (idx < 0 || idx >= static_cast<long long>(grid.counts()[i])) {
                inside = false;
            }
            w *= weights[i][static_cast<std::size_t>(k[i])];
            flat = flat * grid.counts()[i] + static_cast<std::size_t>(std::max<long long>(idx, 0));
        }
        if (inside && w != 0.0) {
            sum += w * f[flat];
        }
        std::size_t i = 0;
        while (i < n && ++k[i] >= taps[i]) {
            k[i] = 0;
            ++i;
        }
        if (i == n) {
            break;
        }
    }
    return sum;
}

} // namespace

Complex GridField::interpolate(const GroupPoint& x) const {
    if (x.dim() != grid_.dim()) {
        throw StructuralError("interpolate: dimension mismatch");
    }
    return lattice_read(*this, x);
}

Complex GridField::evaluate(const GroupPoint& x) const {
    if (profile_) {
        return (*profile_)(x);
    }
    return interpolate(x);
}

GridField& GridField::operator+=(const GridField& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += other.values_[i];
    }
    profile_.reset();
    return *this;
}

GridField& GridField::operator-=(const GridField& other) {
    require_same_grid(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] -= other.values_[i];
    }
    profile_.reset();
    return *this;
}

GridField& GridField::operator*=(Complex c) {
    for (auto& v : values_) {
        v *= c;
    }
    if (profile_) {
        profile_ = std::make_shared<const SchwartzProfile>(profile_->scaled(c));
    }
    return *this;
}

Complex GridField::integral() const {
    numerics::CompensatedSum re;
    numerics::CompensatedSum im;
    for (const auto& v : values_) {
        re.add(v.real());
        im.add(v.imag());
    }
    return Complex(re.value(), im.value()) * grid_.cell_volume();
}

double GridField::sup_norm() const {
    double m = 0.0;
    for (const auto& v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

GridField sample(const GroupDescriptor& g, const SchwartzProfile& profile, const GridSpec& grid, SampleMode mode) {
    if (profile.dim() != grid.dim() || g.dim() != grid.dim()) {
        throw StructuralError("sample: profile, group and grid dimensions differ");
    }
    std::vector<Complex> values(grid.size());
    profile.sample_lattice(grid.lower(), grid.spacing(), grid.counts(), mode == SampleMode::CellAverage, values);
    GridField f(grid, std::move(values));
    f.attach_profile(std::make_shared<const SchwartzProfile>(profile), mode);
    return f;
}

double lp_norm(const GridField& f, double p) {
    if (std::isinf(p) && p > 0) {
        return f.sup_norm();
    }
    if (!(p >= 1.0)) {
        throw DomainError("lp_norm: p must be at least 1");
    }
    numerics::CompensatedSum sum;
    for (const auto& v : f.values()) {
        const double a = std::abs(v);
        sum.add(p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p));
    }
    const double total = sum.value() * f.grid().cell_volume();
    return p == 1.0 ? total : p == 2.0 ? std::sqrt(total) : std::pow(total, 1.0 / p);
}

double distribution(const GridField& f, double lambda) {
    if (!(lambda > 0.0)) {
        throw DomainError("distribution: lambda must be positive");
    }
    std::size_t count = 0;
    for (const auto& v : f.values()) {
        count += std::abs(v) > lambda;
    }
    return static_cast<double>(count) * f.grid().cell_volume();
}

Complex inner_product(const GridField& f, const GridField& g) {
    require_same_grid(f, g);
    numerics::CompensatedSum re;
    numerics::CompensatedSum im;
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        const Complex v = f[i] * std::conj(g[i]);
        re.add(v.real());
        im.add(v.imag());
    }
    return Complex(re.value(), im.value()) * f.grid().cell_volume();
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t smooth_size(std::size_t n) {
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (const std::size_t p : {2u, 3u, 5u, 7u}) {
            while (r % p == 0) {
                r /= p;
            }
        }
        if (r == 1) {
            return m;
        }
    }
}

double boundary_sup(const GridField& f) {
    const GridSpec& grid = f.grid();
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto idx = grid.unflatten(i);
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            if (idx[a] == 0 || idx[a] + 1 == grid.counts()[a]) {
                m = std::max(m, std::abs(f[i]));
                break;
            }
        }
    }
    return m;
}

void require_convolvable(const GridSpec& a, const GridSpec& b) {
    if (a.dim() != b.dim()) {
        throw StructuralError("convolve: grids of different dimension");
    }
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (std::abs(a.spacing()[i] - b.spacing()[i]) > 1e-12 * a.spacing()[i] || !on_lattice(b.lower()[i], a.spacing()[i])) {
            throw StructuralError("convolve: grids are not commensurable (equal spacing, second grid anchored on the lattice)");
        }
    }
}

Complex direct_sum_at(const GroupDescriptor& g, const GridField& f, const GridField& h, const GroupPoint& x) {
    const auto& profile = f.profile();
    const bool cell = f.sample_mode() == SampleMode::CellAverage;
    numerics::CompensatedSum re;
    numerics::CompensatedSum im;
    const GridSpec& hg = h.grid();
    for (std::size_t j = 0; j < hg.size(); ++j) {
        const Complex hv = h[j];
        if (hv == Complex{}) {
            continue;
        }
        const GroupPoint z = right_quotient(g, x, hg.node(j));
        Complex fv;
        if (!profile) {
            fv = lattice_read(f, z);
        } else if (cell) {
            fv = profile->cell_average(z, f.grid().spacing());
        } else {
            fv = (*profile)(z);
        }
        const Complex v = fv * hv;
        re.add(v.real());
        im.add(v.imag());
    }
    return Complex(re.value(), im.value()) * hg.cell_volume();
}

} // namespace

Complex convolve_at(const GroupDescriptor& g, const GridField& f, const GridField& h, const GroupPoint& x) {
    if (f.grid().dim() != g.dim() || h.grid().dim() != g.dim()) {
        throw StructuralError("convolve_at: dimension mismatch");
    }
    return direct_sum_at(g, f, h, x);
}

struct ConvolutionAccumulator::Impl {
    Impl() = default;
    Impl(const Impl&) = delete;
    Impl& operator=(const Impl&) = delete;

    GroupDescriptor group = GroupDescriptor::parabolic_r2();
    GridSpec output;
    GridSpec input;
    ConvolutionOptions options;
    bool fft = false;
    ConvolutionInfo info;
    std::size_t terms = 0;

    // direct path
    std::vector<Complex> direct;

    // FFT path: f is read on the extension lattice of size nf + nh - 1 per axis,
    // starting (offset - nh + 1) nodes before the output grid.
    std::size_t total = 0;
    std::vector<int> dims;
    std::vector<double> ext_lower;
    std::vector<std::size_t> ext_counts;
    std::vector<std::size_t> ext_to_padded;
    std::vector<std::size_t> f_to_ext;
    std::vector<std::size_t> h_to_padded;
    std::vector<std::size_t> out_from_padded;
    fftw_complex* a = nullptr;
    fftw_complex* b = nullptr;
    fftw_complex* acc = nullptr;
    fftw_plan plan_a = nullptr;
    fftw_plan plan_b = nullptr;
    fftw_plan plan_back = nullptr;
    std::vector<Complex> ext;

    ~Impl() {
        std::lock_guard lock(fftw_planner_mutex());
        for (fftw_plan p : {plan_a, plan_b, plan_back}) {
            if (p) {
                fftw_destroy_plan(p);
            }
        }
        fftw_free(a);
        fftw_free(b);
        fftw_free(acc);
    }

    void setup_fft() {
        const std::size_t n = output.dim();
        std::vector<std::size_t> padded(n);
        std::vector<long long> nf(n), nh(n), offset(n);
        total = 1;
        std::size_t ext_total = 1;
        ext_lower.resize(n);
        ext_counts.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            nf[i] = static_cast<long long>(output.counts()[i]);
            nh[i] = static_cast<long long>(input.counts()[i]);
            offset[i] = std::llround(-input.lower()[i] / output.spacing()[i]);
            ext_counts[i] = static_cast<std::size_t>(nf[i] + nh[i] - 1);
            ext_lower[i] = output.lower()[i] + static_cast<double>(offset[i] - nh[i] + 1) * output.spacing()[i];
            padded[i] = smooth_size(ext_counts[i]);
            total *= padded[i];
            ext_total *= ext_counts[i];
        }
        auto to_padded = [&](const std::vector<std::size_t>& idx) {
            std::size_t p = 0;
            for (std::size_t i = 0; i < n; ++i) {
                p = p * padded[i] + idx[i];
            }
            return p;
        };
        auto ext_flat = [&](const std::vector<long long>& idx) {
            std::size_t p = 0;
            for (std::size_t i = 0; i < n; ++i) {
                p = p * ext_counts[i] + static_cast<std::size_t>(idx[i]);
            }
            return p;
        };
        std::vector<std::size_t> idx(n, 0);
        ext_to_padded.resize(ext_total);
        for (std::size_t e = 0; e < ext_total; ++e) {
            std::size_t rest = e;
            for (std::size_t i = n; i-- > 0;) {
                idx[i] = rest % ext_counts[i];
                rest /= ext_counts[i];
            }
            ext_to_padded[e] = to_padded(idx);
        }
        // f node k sits at extension index k - offset + nh - 1; outside the extension it is never read
        f_to_ext.assign(output.size(), ext_total);
        out_from_padded.resize(output.size());
        std::vector<long long> k(n);
        for (std::size_t flat = 0; flat < output.size(); ++flat) {
            const auto oi = output.unflatten(flat);
            bool inside = true;
            for (std::size_t i = 0; i < n; ++i) {
                k[i] = static_cast<long long>(oi[i]) - offset[i] + nh[i] - 1;
                inside = inside && k[i] >= 0 && k[i] < static_cast<long long>(ext_counts[i]);
            }
            if (inside) {
                f_to_ext[flat] = ext_flat(k);
            }
            for (std::size_t i = 0; i < n; ++i) {
                idx[i] = oi[i] + static_cast<std::size_t>(nh[i] - 1);
            }
            out_from_padded[flat] = to_padded(idx);
        }
        h_to_padded.resize(input.size());
        for (std::size_t flat = 0; flat < input.size(); ++flat) {
            const auto hi = input.unflatten(flat);
            h_to_padded[flat] = to_padded(hi);
        }
        ext.resize(ext_total);
        dims.assign(padded.begin(), padded.end());
        a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        acc = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        if (!a || !b || !acc) {
            throw ResourceError("convolve: cannot allocate FFT buffers");
        }
        std::memset(acc, 0, sizeof(fftw_complex) * total);
        std::lock_guard lock(fftw_planner_mutex());
        const int rank = static_cast<int>(n);
        plan_a = fftw_plan_dft(rank, dims.data(), a, a, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_b = fftw_plan_dft(rank, dims.data(), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_back = fftw_plan_dft(rank, dims.data(), acc, acc, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    void transform_input(const GridField& h) {
        std::memset(b, 0, sizeof(fftw_complex) * total);
        for (std::size_t j = 0; j < h.grid().size(); ++j) {
            b[h_to_padded[j]][0] = h[j].real();
            b[h_to_padded[j]][1] = h[j].imag();
        }
        fftw_execute(plan_b);
    }

    void transform_output_side(const GridField& f) {
        std::memset(a, 0, sizeof(fftw_complex) * total);
        const auto& profile = f.profile();
        if (profile) {
            profile->sample_lattice(ext_lower, output.spacing(), ext_counts,
                                    f.sample_mode() == SampleMode::CellAverage, ext);
        } else {
            std::fill(ext.begin(), ext.end(), Complex{});
        }
        for (std::size_t i = 0; i < f.grid().size(); ++i) {
            if (f_to_ext[i] < ext.size()) {
                ext[f_to_ext[i]] = f[i];
            }
        }
        for (std::size_t e = 0; e < ext.size(); ++e) {
            a[ext_to_padded[e]][0] = ext[e].real();
            a[ext_to_padded[e]][1] = ext[e].imag();
        }
        fftw_execute(plan_a);
    }

    void accumulate(const std::vector<Complex>& spectrum, Complex weight) {
        for (std::size_t i = 0; i < total; ++i) {
            const Complex v = Complex(a[i][0], a[i][1]) * spectrum[i] * weight;
            acc[i][0] += v.real();
            acc[i][1] += v.imag();
        }
    }

    void note(const GridField& f, const GridField& h) {
        if (!f.profile()) {
            info.extension = "zero";
            info.leak_estimate = std::max(info.leak_estimate, boundary_sup(f) * lp_norm(h, 1.0));
        }
    }
};

ConvolutionAccumulator::ConvolutionAccumulator(const GroupDescriptor& g, const GridSpec& output, const GridSpec& input,
                                               const ConvolutionOptions& options)
    : impl_(std::make_unique<Impl>()) {
    impl_->group = g;
    impl_->output = output;
    impl_->input = input;
    impl_->options = options;
    if (output.dim() != g.dim()) {
        throw StructuralError("convolve: field dimension does not match the group");
    }
    require_convolvable(output, input);
    impl_->info.extension = "analytic";
    impl_->fft = g.abelian() && options.allow_fft;
    if (impl_->fft) {
        impl_->info.method = "fft";
        impl_->setup_fft();
    } else {
        const double pairs = static_cast<double>(output.size()) * static_cast<double>(input.size());
        if (pairs > options.direct_pair_budget) {
            throw ResourceError("convolve: direct sum over " + std::to_string(static_cast<long long>(pairs)) +
                                " pairs exceeds the budget");
        }
        impl_->info.method = "direct";
        impl_->direct.assign(output.size(), Complex{});
    }
}

ConvolutionAccumulator::~ConvolutionAccumulator() = default;

ConvolutionAccumulator::PreparedInput ConvolutionAccumulator::prepare(const GridField& h) const {
    if (!(h.grid() == impl_->input)) {
        throw StructuralError("convolve: input field is not on the accumulator's input grid");
    }
    PreparedInput p;
    p.field = h;
    if (impl_->fft) {
        impl_->transform_input(h);
        p.spectrum.resize(impl_->total);
        const double scale = impl_->output.cell_volume() / static_cast<double>(impl_->total);
        for (std::size_t i = 0; i < impl_->total; ++i) {
            p.spectrum[i] = Complex(impl_->b[i][0], impl_->b[i][1]) * scale;
        }
    }
    return p;
}

void ConvolutionAccumulator::add(const GridField& f, const PreparedInput& h, Complex weight) {
    if (!(f.grid() == impl_->output)) {
        throw StructuralError("convolve: field is not on the accumulator's output grid");
    }
    impl_->note(f, h.field);
    if (impl_->fft) {
        impl_->transform_output_side(f);
        impl_->accumulate(h.spectrum, weight);
    } else {
        const GroupDescriptor& g = impl_->group;
        parallel_for(f.grid().size(), [&](std::size_t i) {
            impl_->direct[i] += weight * direct_sum_at(g, f, h.field, f.grid().node(i));
        });
    }
    ++impl_->terms;
}

void ConvolutionAccumulator::add(const GridField& f, const GridField& h, Complex weight) {
    add(f, prepare(h), weight);
}

std::size_t ConvolutionAccumulator::terms() const noexcept { return impl_->terms; }

GridField ConvolutionAccumulator::result() const {
    GridField out = GridField::zeros(impl_->output);
    if (impl_->fft) {
        Impl& m = *impl_;
        std::copy_n(&m.acc[0][0], 2 * m.total, &m.a[0][0]);
        std::swap(m.a, m.acc);
        fftw_execute_dft(m.plan_back, m.acc, m.acc);
        for (std::size_t flat = 0; flat < out.grid().size(); ++flat) {
            out[flat] = Complex(m.acc[m.out_from_padded[flat]][0], m.acc[m.out_from_padded[flat]][1]);
        }
        std::swap(m.a, m.acc);
    } else {
        out.values() = impl_->direct;
    }
    out.set_convolution_info(impl_->info);
    return out;
}

GridField convolve(const GroupDescriptor& g, const GridField& f, const GridField& h, const ConvolutionOptions& options) {
    ConvolutionAccumulator acc(g, f.grid(), h.grid(), options);
    acc.add(f, h);
    return acc.result();
}

namespace {

// Fornberg's finite-difference weights for derivative `order` at z0 on `nodes`.
std::vector<double> fornberg(int order, double z0, const std::vector<double>& nodes) {
    const std::size_t n = nodes.size();
    const auto m = static_cast<std::size_t>(order);
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - z0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - z0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = c[i][m];
    }
    return w;
}

// k-th derivative along `axis`, 4th order or better (one-sided windows near the boundary).
std::vector<Complex> axis_derivative(const std::vector<Complex>& values, const GridSpec& grid, std::size_t axis, int k) {
    if (k == 0) {
        return values;
    }
    const auto count = static_cast<long long>(grid.counts()[axis]);
    const double h = grid.spacing()[axis];
    const long long central_half = k <= 2 ? 2 : 3;
    const long long width = std::min<long long>(count, k + 4);
    if (count < k + 1) {
        throw DomainError("schwartz_seminorm: grid too coarse for the requested derivative order");
    }
    std::size_t stride = 1;
    for (std::size_t i = axis + 1; i < grid.dim(); ++i) {
        stride *= grid.counts()[i];
    }
    // weights per position along the axis
    std::vector<std::pair<long long, std::vector<double>>> rules(static_cast<std::size_t>(count));
    for (long long p = 0; p < count; ++p) {
        long long start;
        long long len;
        if (p - central_half >= 0 && p + central_half < count) {
            start = p - central_half;
            len = 2 * central_half + 1;
        } else {
            len = width;
            start = std::clamp<long long>(p - len / 2, 0, count - len);
        }
        std::vector<double> nodes(static_cast<std::size_t>(len));
        for (long long q = 0; q < len; ++q) {
            nodes[static_cast<std::size_t>(q)] = static_cast<double>(start + q - p);
        }
        auto w = fornberg(k, 0.0, nodes);
        for (auto& x : w) {
            x /= std::pow(h, k);
        }
        rules[static_cast<std::size_t>(p)] = {start, std::move(w)};
    }
    std::vector<Complex> out(values.size());
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        const auto p = static_cast<long long>((flat / stride) % grid.counts()[axis]);
        const std::size_t line0 = flat - static_cast<std::size_t>(p) * stride;
        const auto& [start, w] = rules[static_cast<std::size_t>(p)];
        Complex s;
        for (std::size_t q = 0; q < w.size(); ++q) {
            s += w[q] * values[line0 + static_cast<std::size_t>(start + static_cast<long long>(q)) * stride];
        }
        out[flat] = s;
    }
    return out;
}

void enumerate_indices(std::size_t dim, int order, std::vector<MultiIndex>& out) {
    MultiIndex a{};
    for (;;) {
        int total = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            total += a[i];
        }
        if (total <= order) {
            out.push_back(a);
        }
        std::size_t i = 0;
        while (i < dim && ++a[i] > order) {
            a[i] = 0;
            ++i;
        }
        if (i == dim) {
            break;
        }
    }
}

} // namespace

SeminormEstimate schwartz_seminorm_estimate(const GridField& f, int order, int derivative_budget) {
    if (order < 0) {
        throw DomainError("schwartz_seminorm: order must be non-negative");
    }
    if (order > derivative_budget) {
        throw ConfigurationError("schwartz_seminorm: order " + std::to_string(order) + " exceeds the derivative budget " +
                                 std::to_string(derivative_budget));
    }
    const GridSpec& grid = f.grid();
    const std::size_t n = grid.dim();
    std::vector<MultiIndex> indices;
    enumerate_indices(n, order, indices);
    std::vector<double> best(grid.size(), 0.0);
    const auto& profile = f.profile();
    const bool exact = profile && profile->exact_derivatives();
    for (const auto& alpha : indices) {
        if (exact) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                best[i] = std::max(best[i], std::abs(profile->derivative(grid.node(i), alpha)));
            }
        } else {
            std::vector<Complex> d = f.values();
            for (std::size_t axis = 0; axis < n; ++axis) {
                d = axis_derivative(d, grid, axis, alpha[axis]);
            }
            for (std::size_t i = 0; i < grid.size(); ++i) {
                best[i] = std::max(best[i], std::abs(d[i]));
            }
        }
    }
    SeminormEstimate est;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid.node(i).euclidean();
        const double v = std::pow(1.0 + r * r, 0.5 * order) * best[i];
        if (v > est.value) {
            est.value = v;
            arg = i;
        }
    }
    est.argmax = grid.node(arg);
    const auto idx = grid.unflatten(arg);
    for (std::size_t a = 0; a < n; ++a) {
        est.boundary_attained = est.boundary_attained || idx[a] == 0 || idx[a] + 1 == grid.counts()[a];
    }
    return est;
}

double schwartz_seminorm(const GridField& f, int order, int derivative_budget) {
    return schwartz_seminorm_estimate(f, order, derivative_budget).value;
}

namespace {

template <class T>
void put(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

template <class T>
T take(std::istream& in) {
    T value{};
    char bytes[sizeof(T)];
    if (!in.read(bytes, sizeof(T))) {
        throw ParseError("binary field: truncated file");
    }
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_binary(const GridField& f, const std::filesystem::path& path) {
    const GridSpec& grid = f.grid();
    std::string out = "RTDF";
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
    for (const double v : grid.lower()) {
        put(out, v);
    }
    for (const double v : grid.upper()) {
        put(out, v);
    }
    for (const std::size_t c : grid.counts()) {
        put<std::uint64_t>(out, c);
    }
    for (const auto& v : f.values()) {
        put(out, v.real());
        put(out, v.imag());
    }
    write_file_atomic(path, out);
}

GridField read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ResourceError("cannot open " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "RTDF", 4) != 0) {
        throw ParseError("binary field: bad magic in " + path.string());
    }
    if (take<std::uint32_t>(in) != 1) {
        throw ParseError("binary field: unsupported version");
    }
    const auto dim = take<std::uint32_t>(in);
    if (dim == 0 || dim > kMaxDim) {
        throw ParseError("binary field: bad dimension");
    }
    std::vector<double> lower(dim), upper(dim);
    std::vector<std::size_t> counts(dim);
    for (auto& v : lower) {
        v = take<double>(in);
    }
    for (auto& v : upper) {
        v = take<double>(in);
    }
    for (auto& c : counts) {
        c = static_cast<std::size_t>(take<std::uint64_t>(in));
    }
    GridSpec grid(lower, upper, counts);
    std::vector<Complex> values(grid.size());
    for (auto& v : values) {
        const double re = take<double>(in);
        const double im = take<double>(in);
        v = Complex(re, im);
    }
    return GridField(grid, std::move(values));
}

void write_csv(const GridField& f, const std::filesystem::path& path, std::size_t max_points) {
    const GridSpec& grid = f.grid();
    if (grid.size() > max_points) {
        throw ResourceError("write_csv: grid too large for CSV output");
    }
    std::vector<std::string> header;
    for (std::size_t i = 0; i < grid.dim(); ++i) {
        header.push_back("x" + std::to_string(i));
    }
    header.emplace_back("re");
    header.emplace_back("im");
    Table table(header);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const GroupPoint x = grid.node(i);
        std::vector<Table::Cell> row;
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            row.emplace_back(x[a]);
        }
        row.emplace_back(f[i].real());
        row.emplace_back(f[i].imag());
        table.add_row(std::move(row));
    }
    table.write_csv(path);
}

} // namespace rotadic
