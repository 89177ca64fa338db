#include "rotadic/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace rotadic::numerics {

Minimum golden_section(const std::function<double(double)>& f, double lo, double hi, double tolerance) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

Minimum scan_minimize(const std::function<double(double)>& f, double lo, double hi, std::size_t scan_points,
                      double tolerance, std::size_t refine_candidates) {
    if (hi < lo) {
        std::swap(lo, hi);
    }
    if (hi == lo) {
        return {lo, f(lo)};
    }
    scan_points = std::max<std::size_t>(scan_points, 3);
    std::vector<double> values(scan_points);
    const double step = (hi - lo) / static_cast<double>(scan_points - 1);
    for (std::size_t i = 0; i < scan_points; ++i) {
        const double s = (i + 1 == scan_points) ? hi : lo + step * static_cast<double>(i);
        values[i] = f(s);
    }
    std::vector<std::size_t> order(scan_points);
    for (std::size_t i = 0; i < scan_points; ++i) {
        order[i] = i;
    }
    // local minima of the scan first, best value first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    Minimum best{lo + step * static_cast<double>(order[0]), values[order[0]]};
    if (order[0] + 1 == scan_points) {
        best.argument = hi;
    }
    std::size_t refined = 0;
    for (std::size_t k = 0; k < scan_points && refined < refine_candidates; ++k) {
        const std::size_t i = order[k];
        const bool local = (i == 0 || values[i] <= values[i - 1]) && (i + 1 == scan_points || values[i] <= values[i + 1]);
        if (!local) {
            continue;
        }
        ++refined;
        const double a = std::max(lo, lo + step * (static_cast<double>(i) - 1.0));
        const double b = std::min(hi, lo + step * (static_cast<double>(i) + 1.0));
        const Minimum m = golden_section(f, a, b, tolerance);
        if (m.value < best.value) {
            best = m;
        }
    }
    return best;
}

namespace {

std::vector<std::pair<double, double>> compute_gauss_legendre(std::size_t order) {
    std::vector<std::pair<double, double>> nodes(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(order) + 0.5));
        double derivative = 0.0;
        for (int iteration = 0; iteration < 100; ++iteration) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t j = 1; j <= order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) - 1.0) * x * p1 - (static_cast<double>(j) - 1.0) * p2) /
                     static_cast<double>(j);
            }
            derivative = static_cast<double>(order) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / derivative;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = {-x, w};
        nodes[order - 1 - i] = {x, w};
    }
    return nodes;
}

} // namespace

const std::vector<std::pair<double, double>>& gauss_legendre(std::size_t order) {
    if (order == 0) {
        throw std::invalid_argument("gauss_legendre: order must be positive");
    }
    static std::mutex mutex;
    static std::map<std::size_t, std::vector<std::pair<double, double>>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, compute_gauss_legendre(order)).first;
    }
    return it->second;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_slope: need at least two paired samples");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

double relative_drift(double reference, double refined) {
    const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
    return std::abs(refined - reference) / scale;
}

} // namespace rotadic::numerics
