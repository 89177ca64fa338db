#pragma once

// Complex functions sampled on uniform node grids x_i = lower + i h.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rotadic/group.hpp"
#include "rotadic/profile.hpp"

namespace rotadic {

inline constexpr std::size_t kDefaultGridBudget = std::size_t{1} << 24;

class GridSpec {
public:
    GridSpec() = default;
    GridSpec(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> counts,
             std::size_t budget = kDefaultGridBudget);
    /// Same box and count on every axis.
    static GridSpec cube(std::size_t dim, double lower, double upper, std::size_t count,
                         std::size_t budget = kDefaultGridBudget);
    /// Node grid with spacing h on every axis covering [lower, upper] (upper rounded outward).
    static GridSpec with_spacing(std::size_t dim, double lower, double upper, double h,
                                 std::size_t budget = kDefaultGridBudget);
    /// [-8, 8]^2 with 257 nodes per axis, so the origin is a node.
    static GridSpec default_r2();
    /// [-4, 4]^5 with 25 nodes per axis.
    static GridSpec default_h2();

    std::size_t dim() const noexcept { return lower_.size(); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    const std::vector<double>& spacing() const noexcept { return h_; }
    std::size_t size() const noexcept { return size_; }
    double cell_volume() const noexcept { return cell_; }

    GroupPoint node(std::size_t flat) const;
    GroupPoint node(const std::vector<std::size_t>& index) const;
    std::size_t flat(const std::vector<std::size_t>& index) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;

    /// Same spacing, and both lower corners lie on the lattice h Z.
    bool commensurable(const GridSpec& other) const noexcept;

    friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
        return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.counts_ == b.counts_;
    }

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::size_t> counts_;
    std::vector<double> h_;
    std::size_t size_ = 0;
    double cell_ = 0.0;
};

enum class SampleMode {
    Point,       // value at each node
    CellAverage, // average over the cell centred at each node (exact for diagonal Hermite sums)
};

/// How out-of-grid reads were resolved during a convolution.
struct ConvolutionInfo {
    std::string method;    // "fft" or "direct"
    std::string extension; // "analytic" or "zero"
    /// max |f| over the boundary nodes times ||g||_1; indicates truncation loss under zero extension.
    double leak_estimate = 0.0;
};

class GridField {
public:
    GridField() = default;
    GridField(GridSpec grid, std::vector<Complex> values);
    static GridField zeros(const GridSpec& grid);

    const GridSpec& grid() const noexcept { return grid_; }
    const std::vector<Complex>& values() const noexcept { return values_; }
    std::vector<Complex>& values() noexcept { return values_; }
    Complex operator[](std::size_t i) const { return values_[i]; }
    Complex& operator[](std::size_t i) { return values_[i]; }

    /// Analytic profile the field was sampled from, if any, and how it was sampled.
    const std::shared_ptr<const SchwartzProfile>& profile() const noexcept { return profile_; }
    SampleMode sample_mode() const noexcept { return mode_; }
    void attach_profile(std::shared_ptr<const SchwartzProfile> profile, SampleMode mode = SampleMode::Point) {
        profile_ = std::move(profile);
        mode_ = mode;
    }

    const std::optional<ConvolutionInfo>& convolution_info() const noexcept { return info_; }
    void set_convolution_info(ConvolutionInfo info) { info_ = std::move(info); }

    /// Value at an arbitrary point: the profile when attached, otherwise tensor
    /// cubic interpolation (zero outside the grid).
    Complex evaluate(const GroupPoint& x) const;
    /// Tensor cubic (Catmull-Rom) interpolation of the samples; zero outside the grid.
    Complex interpolate(const GroupPoint& x) const;

    GridField& operator+=(const GridField& other);
    GridField& operator-=(const GridField& other);
    GridField& operator*=(Complex c);
    friend GridField operator+(GridField a, const GridField& b) { return a += b; }
    friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
    friend GridField operator*(Complex c, GridField a) { return a *= c; }

    /// Riemann-sum integral.
    Complex integral() const;
    double sup_norm() const;

private:
    GridSpec grid_;
    std::vector<Complex> values_;
    std::shared_ptr<const SchwartzProfile> profile_;
    SampleMode mode_ = SampleMode::Point;
    std::optional<ConvolutionInfo> info_;
};

GridField sample(const GroupDescriptor& g, const SchwartzProfile& profile, const GridSpec& grid,
                 SampleMode mode = SampleMode::Point);

/// (sum |f|^p prod h)^(1/p); p = infinity gives the sup over nodes.
double lp_norm(const GridField& f, double p);

/// Measure of {|f| > lambda}: count of nodes times the cell volume.
double distribution(const GridField& f, double lambda);

/// <f, g> = sum f conj(g) prod h
Complex inner_product(const GridField& f, const GridField& g);

struct ConvolutionOptions {
    /// Use the FFT path for abelian groups.
    bool allow_fft = true;
    /// Upper bound on output-points x input-points for the direct sum.
    double direct_pair_budget = 2e9;
};

/// (f * g)(x) = int f(x y^-1) g(y) dy on the grid of f. Abelian groups use a
/// zero-padded FFT; H2 uses the direct sum with the exact product.
GridField convolve(const GroupDescriptor& g, const GridField& f, const GridField& h,
                   const ConvolutionOptions& options = {});

/// Weighted sum of convolutions sum_k w_k (f_k * h_k) with every f_k on `output`
/// and every h_k on `input`. Abelian groups accumulate in frequency space with
/// plans built once and a single inverse transform per result().
class ConvolutionAccumulator {
public:
    /// An input field with its transform cached for reuse across terms.
    struct PreparedInput {
        GridField field;
        std::vector<Complex> spectrum;
    };

    ConvolutionAccumulator(const GroupDescriptor& g, const GridSpec& output, const GridSpec& input,
                           const ConvolutionOptions& options = {});
    ~ConvolutionAccumulator();
    ConvolutionAccumulator(const ConvolutionAccumulator&) = delete;
    ConvolutionAccumulator& operator=(const ConvolutionAccumulator&) = delete;

    PreparedInput prepare(const GridField& h) const;
    void add(const GridField& f, const GridField& h, Complex weight = 1.0);
    void add(const GridField& f, const PreparedInput& h, Complex weight = 1.0);
    std::size_t terms() const noexcept;
    /// Current sum on the output grid; accumulation may continue afterwards.
    GridField result() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Riemann-sum value of (f * g)(x) at a single point.
Complex convolve_at(const GroupDescriptor& g, const GridField& f, const GridField& h, const GroupPoint& x);

struct SeminormEstimate {
    double value = 0.0;
    GroupPoint argmax;
    /// The sup sits on the grid boundary: the field does not decay inside the box,
    /// so the number measures the box rather than a Schwartz seminorm.
    bool boundary_attained = false;
};

/// sup over nodes of <x>^N max_{|alpha| <= N} |d^alpha f|, <x> = (1 + |x|_2^2)^(1/2).
/// Uses the attached profile's derivatives when exact, otherwise 4th-order finite
/// differences (one-sided near the boundary).
SeminormEstimate schwartz_seminorm_estimate(const GridField& f, int order, int derivative_budget = 4);
double schwartz_seminorm(const GridField& f, int order, int derivative_budget = 4);

/// Flat binary container: magic "RTDF", u32 version, u32 dim, f64 lower[dim],
/// f64 upper[dim], u64 counts[dim], then f64 (re, im) pairs, little endian.
void write_binary(const GridField& f, const std::filesystem::path& path);
GridField read_binary(const std::filesystem::path& path);

/// CSV with the node coordinates followed by re, im.
void write_csv(const GridField& f, const std::filesystem::path& path, std::size_t max_points = 1 << 20);

} // namespace rotadic
