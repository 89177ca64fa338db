#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace rotadic::numerics {

/// Neumaier-compensated accumulator; order dependent but far less so than naive summation.
class CompensatedSum {
public:
    void add(double value) noexcept {
        const double t = sum_ + value;
        if ((sum_ >= 0 ? sum_ : -sum_) >= (value >= 0 ? value : -value)) {
            compensation_ += (sum_ - t) + value;
        } else {
            compensation_ += (value - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

struct Minimum {
    double argument = 0.0;
    double value = 0.0;
};

/// Golden-section search on [lo, hi] for a function unimodal on that bracket.
Minimum golden_section(const std::function<double(double)>& f, double lo, double hi, double tolerance);

/// Global 1-D minimisation: uniform scan with `scan_points` samples on [lo, hi]
/// (endpoints included), then golden-section refinement around the best few
/// scan cells. The returned value never exceeds the best scanned sample.
Minimum scan_minimize(const std::function<double(double)>& f, double lo, double hi, std::size_t scan_points,
                      double tolerance, std::size_t refine_candidates = 3);

/// Gauss-Legendre nodes and weights on [-1, 1].
const std::vector<std::pair<double, double>>& gauss_legendre(std::size_t order);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Largest relative change |b - a| / max(|a|, tiny).
double relative_drift(double reference, double refined);

} // namespace rotadic::numerics
