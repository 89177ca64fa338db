#include "rotadic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rotadic/error.hpp"
#include "rotadic/numerics.hpp"
#include "rotadic/parallel.hpp"

namespace rotadic {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

double block_len(const GroupPoint& x, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        s += x[i] * x[i];
    }
    return std::sqrt(s);
}

double root_exponent(double value, double exponent) {
    if (exponent == 1.0) {
        return value;
    }
    if (exponent == 0.5) {
        return value * value;
    }
    return std::pow(value, 1.0 / exponent);
}

// |u - e^{i delta'} v| where the angular mismatch between u and the rotated v is delta.
double chord(double ru, double rv, double delta) {
    const double h = std::sin(0.5 * delta);
    const double d = ru - rv;
    return std::sqrt(d * d + 4.0 * ru * rv * h * h);
}

struct PlaneView {
    double ru = 0.0;
    double rv = 0.0;
    double theta = 0.0; // arg u - arg v
};

PlaneView plane_view(const GroupPoint& x, const GroupPoint& y, const RotationPlane& p) {
    PlaneView v;
    v.ru = std::hypot(x[p.first], x[p.second]);
    v.rv = std::hypot(y[p.first], y[p.second]);
    v.theta = wrap_angle(std::atan2(x[p.second], x[p.first]) - std::atan2(y[p.second], y[p.first]));
    return v;
}

// Smallest |wrap(theta - phi)| over phi in [-window, window].
double best_mismatch(double theta, double window) {
    if (window >= kPi || std::abs(theta) <= window) {
        return 0.0;
    }
    return std::min(std::abs(wrap_angle(theta - window)), std::abs(wrap_angle(theta + window)));
}

// Max over the non-rotated blocks of |x_b - y_b|^(1/a_b).
double tail_term(const GroupDescriptor& g, const GroupPoint& x, const GroupPoint& y) {
    double t = 0.0;
    const auto blocks = g.blocks();
    for (std::size_t b = 1; b < blocks.size(); ++b) {
        double s = 0.0;
        for (std::size_t i = blocks[b].begin; i < blocks[b].end; ++i) {
            const double d = x[i] - y[i];
            s += d * d;
        }
        t = std::max(t, root_exponent(std::sqrt(s), blocks[b].exponent));
    }
    return t;
}

double closed_form_orbit_min(const QuasiSpace& space, const GroupPoint& y, double r, const GroupPoint& x) {
    const auto& g = space.group();
    const RotationPlane& p = g.planes()[0];
    const PlaneView v = plane_view(x, y, p);
    const double mismatch = best_mismatch(v.theta, std::abs(p.rate) * r);
    const double head = root_exponent(chord(v.ru, v.rv, mismatch), g.blocks()[0].exponent);
    return std::max(head, tail_term(g, x, y));
}

// min over s of max{|s|, |u - e^{i w s} v|^(1/a)} combined with the tail blocks.
double closed_form_distance(const QuasiSpace& space, const GroupPoint& x, const GroupPoint& y) {
    const auto& g = space.group();
    const RotationPlane& p = g.planes()[0];
    const double a = g.blocks()[0].exponent;
    const double omega = std::abs(p.rate);
    const PlaneView v = plane_view(x, y, p);
    const double tail = tail_term(g, x, y);
    auto c = [&](double mismatch) { return root_exponent(chord(v.ru, v.rv, mismatch), a); };
    if (v.ru == 0.0 || v.rv == 0.0 || omega == 0.0) {
        return std::max(tail, c(v.theta));
    }
    double best = kInf;
    for (const double span : {std::abs(v.theta), 2.0 * kPi - std::abs(v.theta)}) {
        const double tau_end = span / omega;
        auto h = [&](double tau) { return tau - c(std::max(0.0, span - omega * tau)); };
        if (h(tau_end) <= 0.0) {
            best = std::min(best, c(0.0));
            continue;
        }
        double lo = 0.0;
        double hi = tau_end;
        for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (h(mid) <= 0.0 ? lo : hi) = mid;
        }
        best = std::min(best, hi);
    }
    return std::max(tail, best);
}

// Scan [lo, hi]; stops early once a value below `threshold` is seen. Returns the
// smallest value found after golden-section refinement of the best scan cells.
double scan_for_minimum(const std::function<double(double)>& f, double lo, double hi, std::size_t points,
                        double threshold, double tol) {
    points = std::max<std::size_t>(points, 3);
    std::vector<double> values(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    double best = kInf;
    for (std::size_t i = 0; i < points; ++i) {
        values[i] = f(lo + step * static_cast<double>(i));
        best = std::min(best, values[i]);
        if (best < threshold) {
            return best;
        }
    }
    std::vector<std::size_t> minima;
    for (std::size_t i = 0; i < points; ++i) {
        const bool left = i == 0 || values[i] <= values[i - 1];
        const bool right = i + 1 == points || values[i] <= values[i + 1];
        if (left && right) {
            minima.push_back(i);
        }
    }
    std::sort(minima.begin(), minima.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    for (std::size_t k = 0; k < std::min<std::size_t>(minima.size(), 3); ++k) {
        const std::size_t i = minima[k];
        const double a = lo + step * static_cast<double>(i == 0 ? 0 : i - 1);
        const double b = lo + step * static_cast<double>(std::min(i + 1, points - 1));
        best = std::min(best, numerics::golden_section(f, a, b, tol).value);
        if (best < threshold) {
            return best;
        }
    }
    return best;
}

void require_radius(double r, const char* what) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError(std::string(what) + ": radius must be positive and finite");
    }
}

} // namespace

QuasiSpace::QuasiSpace(GroupDescriptor group, NormVariant norm, ScanSettings scan)
    : group_(std::move(group)), norm_(norm), scan_(scan) {
    if (!group_.supports(norm_)) {
        throw ConfigurationError(std::string("norm variant ") + std::string(to_string(norm_)) + " is not available on " +
                                 std::string(to_string(group_.family())));
    }
    if (group_.has_rotation_override()) {
        throw ConfigurationError("quasi-balls need plane rotations; rotation overrides are for structure tests only");
    }
    const bool single_plane =
        group_.planes().size() == 1 && group_.planes()[0].first == 0 && group_.planes()[0].second == 1 &&
        group_.blocks()[0].begin == 0 && group_.blocks()[0].end == 2;
    const bool block_max = norm_ == NormVariant::MaxType || norm_ == NormVariant::SquaredEuclidean ||
                           (norm_ == NormVariant::SumType && group_.blocks().size() == 1);
    closed_form_ = group_.abelian() && single_plane && block_max;
}

bool QuasiSpace::has_closed_form_volume() const noexcept {
    return group_.family() == Family::G1 && closed_form_ && norm_ == NormVariant::MaxType;
}

double QuasiSpace::orbit_gap(const GroupPoint& y, double s, const GroupPoint& x) const {
    return norm_of(right_quotient(group_, x, rotate(group_, s, y)));
}

std::size_t QuasiSpace::scan_points(double half_width) const {
    const double sweep = 2.0 * half_width * std::max(group_.max_rotation_rate(), 1e-300);
    const double wanted = std::ceil(sweep * scan_.points_per_radian) + 1.0;
    if (!(wanted < static_cast<double>(scan_.max_points))) {
        return scan_.max_points;
    }
    return std::max(scan_.min_points, static_cast<std::size_t>(wanted));
}

double orbit_minimum(const QuasiSpace& space, const GroupPoint& y, double r, const GroupPoint& x) {
    require_radius(r, "orbit_minimum");
    if (space.has_closed_form_metric()) {
        return closed_form_orbit_min(space, y, r, x);
    }
    auto f = [&](double s) { return space.orbit_gap(y, s, x); };
    return std::min(f(0.0), scan_for_minimum(f, -r, r, space.scan_points(r), -kInf, space.scan().tolerance));
}

bool quasi_ball_contains(const QuasiSpace& space, const GroupPoint& y, double r, const GroupPoint& x, double tol) {
    require_radius(r, "quasi_ball_contains");
    if (space.has_closed_form_metric()) {
        return closed_form_orbit_min(space, y, r, x) < r;
    }
    auto f = [&](double s) { return space.orbit_gap(y, s, x); };
    if (f(0.0) < r) {
        return true;
    }
    const double refine = std::min(space.scan().tolerance, tol);
    return scan_for_minimum(f, -r, r, space.scan_points(r), r, refine) < r;
}

double quasi_dist(const QuasiSpace& space, const GroupPoint& x, const GroupPoint& y, double tol,
                  DistanceMethod method) {
    if (!(tol > 0.0)) {
        throw DomainError("quasi_dist: tolerance must be positive");
    }
    if (method == DistanceMethod::Auto) {
        method = space.group().family() == Family::G1 ? DistanceMethod::MinMax : DistanceMethod::Bisection;
    }
    const double f0 = space.norm_of(right_quotient(space.group(), x, y));
    if (f0 == 0.0) {
        return 0.0;
    }
    if (method == DistanceMethod::MinMax) {
        if (space.has_closed_form_metric()) {
            return closed_form_distance(space, x, y);
        }
        auto f = [&](double s) { return std::max(std::abs(s), space.orbit_gap(y, s, x)); };
        return std::min(f0, scan_for_minimum(f, -f0, f0, space.scan_points(f0), -kInf, std::min(tol, 1e-12)));
    }
    double lo = 0.0;
    double hi = f0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (quasi_ball_contains(space, y, mid, x, tol) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double swept_disc_area(double s, double phi, double rho) {
    if (!(s > 0.0)) {
        return 0.0;
    }
    phi = std::abs(phi);
    rho = std::abs(rho);
    if (rho == 0.0 || phi == 0.0) {
        return kPi * s * s;
    }
    if (phi >= kPi) {
        const double inner = std::max(0.0, rho - s);
        return kPi * ((rho + s) * (rho + s) - inner * inner);
    }
    // Polar integration: the circle of radius R meets the union in an arc of
    // angular length min(2 pi, 2 phi + 2 beta(R)), beta the half-angle of the
    // circle inside a single disc.
    auto measure = [&](double radius) {
        if (radius <= 0.0) {
            return s > rho ? 2.0 * kPi : 0.0;
        }
        const double c = (radius * radius + rho * rho - s * s) / (2.0 * radius * rho);
        if (c >= 1.0) {
            return 0.0;
        }
        if (c <= -1.0) {
            return 2.0 * kPi;
        }
        return std::min(2.0 * kPi, 2.0 * phi + 2.0 * std::acos(c));
    };
    std::vector<double> cuts{0.0, std::abs(rho - s), rho + s};
    // radii where 2 phi + 2 beta = 2 pi
    const double disc = s * s - rho * rho * std::sin(phi) * std::sin(phi);
    if (disc >= 0.0) {
        for (const double sign : {-1.0, 1.0}) {
            const double root = -rho * std::cos(phi) + sign * std::sqrt(disc);
            if (root > 0.0 && root < rho + s) {
                cuts.push_back(root);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    boost::math::quadrature::tanh_sinh<double> integrator;
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] <= 0.0) {
            continue;
        }
        area += integrator.integrate([&](double radius) { return radius * measure(radius); }, cuts[i], cuts[i + 1]);
    }
    return area;
}

double BoundingBox::volume() const noexcept {
    double v = 1.0;
    for (std::size_t i = 0; i < lower.dim(); ++i) {
        v *= upper[i] - lower[i];
    }
    return v;
}

namespace {

// Range of cos over the angle interval [a, b].
std::pair<double, double> cos_range(double a, double b) {
    if (b - a >= 2.0 * kPi) {
        return {-1.0, 1.0};
    }
    double lo = std::min(std::cos(a), std::cos(b));
    double hi = std::max(std::cos(a), std::cos(b));
    const double k0 = std::ceil(a / kPi);
    for (double k = k0; k * kPi <= b; k += 1.0) {
        const bool even = std::fmod(std::abs(k), 2.0) == 0.0;
        (even ? hi : lo) = even ? 1.0 : -1.0;
    }
    return {lo, hi};
}

} // namespace

BoundingBox quasi_ball_bounding_box(const QuasiSpace& space, const GroupPoint& y, double r, double inflation) {
    require_radius(r, "quasi_ball_bounding_box");
    const auto& g = space.group();
    const std::size_t n = g.dim();
    GroupPoint lo = y;
    GroupPoint hi = y;
    for (const auto& p : g.planes()) {
        const double rho = std::hypot(y[p.first], y[p.second]);
        const double psi = std::atan2(y[p.second], y[p.first]);
        const double sweep = std::abs(p.rate) * r;
        const auto [c_lo, c_hi] = cos_range(psi - sweep, psi + sweep);
        const auto [s_lo, s_hi] = cos_range(psi - sweep - 0.5 * kPi, psi + sweep - 0.5 * kPi);
        lo[p.first] = rho * c_lo;
        hi[p.first] = rho * c_hi;
        lo[p.second] = rho * s_lo;
        hi[p.second] = rho * s_hi;
    }
    GroupPoint half(n);
    for (const auto& b : g.blocks()) {
        const double w = std::pow(r, b.exponent);
        for (std::size_t i = b.begin; i < b.end; ++i) {
            half[i] = w;
        }
    }
    if (g.family() == Family::HeisenbergH2) {
        // z * p adds (1/2)[z, p] to s; |[z, p]| <= |z_uv| |p_uv| and |z_uv| < r.
        half[4] += 0.5 * r * block_len(y, 0, 4);
    }
    BoundingBox box{GroupPoint(n), GroupPoint(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double mid = 0.5 * (lo[i] + hi[i]);
        const double width = 0.5 * (hi[i] - lo[i]) + half[i];
        box.lower[i] = mid - inflation * width;
        box.upper[i] = mid + inflation * width;
    }
    return box;
}

GroupPoint sample_norm_ball(const QuasiSpace& space, double r, CounterRng& rng) {
    require_radius(r, "sample_norm_ball");
    const auto& g = space.group();
    GroupPoint z(g.dim());
    // every coordinate of a unit-norm point lies in [-1, 1]
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (std::size_t i = 0; i < g.dim(); ++i) {
            z[i] = rng.uniform(-1.0, 1.0);
        }
        if (space.norm_of(z) < 1.0) {
            return dilate(g, r, z);
        }
    }
    throw ResourceError("sample_norm_ball: rejection sampling did not terminate");
}

GroupPoint sample_quasi_ball(const QuasiSpace& space, const GroupPoint& y, double r, CounterRng& rng) {
    const GroupPoint z = sample_norm_ball(space, r, rng);
    const double s = rng.uniform(-r, r);
    return group_product(space.group(), z, rotate(space.group(), s, y));
}

VolumeEstimate ball_volume(const QuasiSpace& space, const GroupPoint& y, double r, const VolumeMethod& method) {
    require_radius(r, "ball_volume");
    const auto& g = space.group();
    if (method.kind == VolumeMethod::Kind::ClosedForm) {
        if (!space.has_closed_form_volume()) {
            throw ConfigurationError("closed-form ball volume is only available on G1 with the max-type norm");
        }
        const double a = g.blocks()[0].exponent;
        const double rho = std::hypot(y[0], y[1]);
        double value = swept_disc_area(std::pow(r, a), std::abs(g.planes()[0].rate) * r, rho);
        for (std::size_t b = 1; b < g.blocks().size(); ++b) {
            value *= 2.0 * std::pow(r, g.blocks()[b].exponent);
        }
        return {value, 1e-12 * value};
    }
    if (method.samples == 0) {
        throw DomainError("ball_volume: Monte Carlo needs at least one sample");
    }
    const BoundingBox box = quasi_ball_bounding_box(space, y, r);
    const std::size_t n = g.dim();
    // Jittered stratification: m^n cells, one uniform point per cell.
    std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(method.samples, 1.0 / n))));
    while (std::pow(static_cast<double>(m + 1), static_cast<double>(n)) <= static_cast<double>(method.samples)) {
        ++m;
    }
    while (m > 1 && std::pow(static_cast<double>(m), static_cast<double>(n)) > static_cast<double>(method.samples)) {
        --m;
    }
    std::size_t cells = 1;
    for (std::size_t i = 0; i < n; ++i) {
        cells *= m;
    }
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (cells + kChunk - 1) / kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    const CounterRng base = CounterRng::stream(method.seed, "quasi_geometry.volume");
    parallel_for(chunks, [&](std::size_t c) {
        CounterRng rng = base.split(c);
        std::size_t count = 0;
        GroupPoint x(n);
        for (std::size_t cell = c * kChunk; cell < std::min(cells, (c + 1) * kChunk); ++cell) {
            std::size_t rest = cell;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t digit = rest % m;
                rest /= m;
                const double u = (static_cast<double>(digit) + rng.uniform()) / static_cast<double>(m);
                x[i] = box.lower[i] + u * (box.upper[i] - box.lower[i]);
            }
            if (quasi_ball_contains(space, y, r, x)) {
                ++count;
            }
        }
        hits[c] = count;
    });
    std::size_t total = 0;
    for (const std::size_t h : hits) {
        total += h;
    }
    const double nn = static_cast<double>(cells);
    const double p = static_cast<double>(total) / nn;
    const double p_err = (static_cast<double>(total) + 0.5) / (nn + 1.0);
    const double vol = box.volume();
    return {vol * p, 3.0 * vol * std::sqrt(p_err * (1.0 - p_err) / nn)};
}

bool GeometryReport::passed() const noexcept {
    return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed; });
}

const Measurement* GeometryReport::find(const std::string& name) const noexcept {
    for (const auto& m : measurements) {
        if (m.name == name) {
            return &m;
        }
    }
    return nullptr;
}

namespace {

GroupPoint random_center(const GroupDescriptor& g, CounterRng& rng, double spread) {
    GroupPoint y(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
        y[i] = rng.normal();
    }
    const double scale = std::exp2(rng.uniform(-spread, spread)) / std::max(y.euclidean(), 1e-300);
    return scale * y;
}

// Values of `sample(i)` for i in [0, 2N) (or [0, N) without the stability pass).
std::vector<double> sample_values(std::size_t count, bool doubled, const std::function<double(std::size_t)>& sample) {
    std::vector<double> values(doubled ? 2 * count : count);
    parallel_for(values.size(), [&](std::size_t i) { values[i] = sample(i); });
    return values;
}

struct SupStats {
    double first = 0.0;
    double all = 0.0;
};

SupStats sup_stats(const std::vector<double>& values, std::size_t count, bool take_min = false) {
    SupStats s{take_min ? kInf : 0.0, take_min ? kInf : 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            continue;
        }
        s.all = take_min ? std::min(s.all, values[i]) : std::max(s.all, values[i]);
        if (i < count) {
            s.first = take_min ? std::min(s.first, values[i]) : std::max(s.first, values[i]);
        }
    }
    return s;
}

struct EngulfingSamples {
    std::vector<double> values;
    std::vector<double> norms;
    std::vector<double> radii;
};

// d(w, x) / t for x in a ball meeting B~_t(y) and probes w in B~_t(y)
EngulfingSamples sample_engulfing(const QuasiSpace& space, const GeometryConfig& config) {
    const auto& g = space.group();
    const std::size_t n = config.engulfing_samples;
    const bool doubled = config.check_stability;
    EngulfingSamples out;
    out.norms.resize(doubled ? 2 * n : n);
    out.radii.resize(out.norms.size());
    const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.engulfing");
    out.values = sample_values(n, doubled, [&](std::size_t i) {
        CounterRng rng = base.split(i);
        const GroupPoint y = random_center(g, rng, config.center_log2_spread);
        const double t = std::exp2(rng.uniform(config.log2_radius_min, config.log2_radius_max));
        const GroupPoint common = sample_quasi_ball(space, y, t, rng);
        const GroupPoint x = sample_quasi_ball(space, common, t, rng);
        auto dist = [&](const GroupPoint& a, const GroupPoint& b) {
            return quasi_dist(space, a, b, config.distance_tolerance, config.distance_method);
        };
        double worst = dist(y, x) / t;
        for (std::size_t k = 0; k < config.engulfing_probes; ++k) {
            worst = std::max(worst, dist(sample_quasi_ball(space, y, t, rng), x) / t);
        }
        out.norms[i] = y.euclidean();
        out.radii[i] = t;
        return worst;
    });
    return out;
}

} // namespace

double measure_engulfing(const QuasiSpace& space, const GeometryConfig& config) {
    const EngulfingSamples e = sample_engulfing(space, config);
    double worst = 0.0;
    for (const double v : e.values) {
        if (!std::isnan(v)) {
            worst = std::max(worst, v);
        }
    }
    return std::max(3.0, worst);
}

GeometryReport verify_space_axioms(const QuasiSpace& space, const GeometryConfig& config) {
    const auto& g = space.group();
    GeometryReport report;
    report.seed = config.seed;
    const bool doubled = config.check_stability;
    const double tol = config.distance_tolerance;
    const bool closed_volume = space.has_closed_form_volume();
    const double lo_r = config.log2_radius_min;
    const double hi_r = config.log2_radius_max;

    auto volume = [&](const GroupPoint& y, double r, std::uint64_t salt) {
        if (closed_volume) {
            return ball_volume(space, y, r, VolumeMethod::closed_form()).value;
        }
        return ball_volume(space, y, r, VolumeMethod::monte_carlo(config.mc_samples, config.seed ^ (salt * 0x9e37u)))
            .value;
    };
    auto dist = [&](const GroupPoint& x, const GroupPoint& y) {
        return quasi_dist(space, x, y, tol, config.distance_method);
    };
    auto record = [&](const std::string& name, const SupStats& s, bool applicable = true, const std::string& note = "") {
        Measurement m{name, s.all, 0.0, true, note};
        if (!applicable) {
            m.value = std::numeric_limits<double>::quiet_NaN();
            m.note = note.empty() ? "not applicable" : note;
            report.measurements.push_back(m);
            return;
        }
        m.drift = doubled ? numerics::relative_drift(s.first, s.all) : 0.0;
        m.passed = std::isfinite(s.all) && std::isfinite(m.drift) && m.drift <= config.stability_tolerance;
        report.measurements.push_back(m);
    };
    auto add_rows = [&](const char* check, const std::vector<double>& values, const std::vector<double>& norms,
                        const std::vector<double>& radii) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            report.rows.add_row({std::string(check), static_cast<long long>(i), norms[i], radii[i], values[i]});
        }
    };

    // doubling
    {
        const std::size_t n = config.doubling_samples;
        const std::size_t total = doubled ? 2 * n : n;
        std::vector<double> norms(total), radii(total);
        const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.doubling");
        const auto values = sample_values(n, doubled, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            const GroupPoint y = random_center(g, rng, config.center_log2_spread);
            const double r = std::exp2(rng.uniform(lo_r, hi_r));
            norms[i] = y.euclidean();
            radii[i] = r;
            return volume(y, 2.0 * r, 2 * i + 1) / volume(y, r, 2 * i);
        });
        add_rows("doubling", values, norms, radii);
        const SupStats s = sup_stats(values, n);
        report.doubling_constant = s.all;
        record("doubling_constant", s);
        report.sample_counts["doubling"] = total;
    }

    // engulfing
    {
        const EngulfingSamples e = sample_engulfing(space, config);
        add_rows("engulfing", e.values, e.norms, e.radii);
        const SupStats s = sup_stats(e.values, config.engulfing_samples);
        report.engulfing_measured = s.all;
        report.engulfing_constant = std::max(3.0, s.all);
        record("engulfing_constant", s);
        report.sample_counts["engulfing"] = e.values.size();
    }

    // quasi-metric axioms
    {
        const std::size_t n = config.triangle_samples;
        const std::size_t total = doubled ? 2 * n : n;
        std::vector<double> norms(total), radii(total), symmetry(total, 0.0), identity(total, 0.0);
        const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.triangle");
        const auto values = sample_values(n, doubled, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            const GroupPoint x = random_center(g, rng, config.center_log2_spread);
            const GroupPoint y = random_center(g, rng, config.center_log2_spread);
            const GroupPoint z = random_center(g, rng, config.center_log2_spread);
            const double dxy = dist(x, y);
            const double dyx = dist(y, x);
            const double dxz = dist(x, z);
            const double dzy = dist(z, y);
            symmetry[i] = std::abs(dxy - dyx);
            identity[i] = dist(x, x);
            norms[i] = x.euclidean();
            radii[i] = dxy;
            return dxy / (dxz + dzy);
        });
        add_rows("quasi_triangle", values, norms, radii);
        const SupStats s = sup_stats(values, n);
        report.quasi_triangle_kappa = s.all;
        record("quasi_triangle_kappa", s);
        report.symmetry_violation = *std::max_element(symmetry.begin(), symmetry.end());
        report.identity_violation = *std::max_element(identity.begin(), identity.end());
        report.measurements.push_back({"quasi_symmetry", report.symmetry_violation, 0.0,
                                       report.symmetry_violation <= 2.0 * tol, "max |d(x,y) - d(y,x)|"});
        report.measurements.push_back(
            {"quasi_identity", report.identity_violation, 0.0, report.identity_violation <= tol, "max d(x,x)"});
        report.sample_counts["triangle"] = total;
    }

    // |(D_{t-s}^-1 x)^-1 (D_t^-1 x)| <= C |D_t^-1 x| (|s|/t)^(1/Gamma)
    {
        const std::size_t n = config.tecnical_samples;
        const std::size_t total = doubled ? 2 * n : n;
        std::vector<double> norms(total), radii(total);
        const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.tecnical");
        const auto values = sample_values(n, doubled, [&](std::size_t i) {
            CounterRng rng = base.split(i);
            const GroupPoint x = random_center(g, rng, config.center_log2_spread);
            const double t = std::exp2(rng.uniform(-4.0, 4.0));
            double s = 0.5 * t * rng.uniform(-1.0, 1.0);
            if (s == 0.0) {
                s = 0.25 * t;
            }
            const GroupPoint a = dilate(g, 1.0 / (t - s), x);
            const GroupPoint b = dilate(g, 1.0 / t, x);
            norms[i] = x.euclidean();
            radii[i] = t;
            return space.norm_of(group_product(g, group_inverse(g, a), b)) /
                   (space.norm_of(b) * std::pow(std::abs(s) / t, 1.0 / g.big_gamma()));
        });
        add_rows("tecnical", values, norms, radii);
        const SupStats s = sup_stats(values, n);
        report.tecnical_constant = s.all;
        record("tecnical_constant", s);
        report.sample_counts["tecnical"] = total;
    }

    // G1 volume growth: vol(B_{2^j r}) >= C 2^{j(Q-a)} vol(B_r)
    {
        const bool applicable = closed_volume;
        if (applicable) {
            const std::size_t n = config.growth_samples;
            const std::size_t total = doubled ? 2 * n : n;
            std::vector<double> norms(total), radii(total);
            const double q = g.homogeneous_dimension();
            const double a = g.blocks()[0].exponent;
            const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.growth");
            const auto values = sample_values(n, doubled, [&](std::size_t i) {
                CounterRng rng = base.split(i);
                const GroupPoint y = random_center(g, rng, config.center_log2_spread);
                const double r = std::exp2(rng.uniform(lo_r, hi_r));
                const double v0 = volume(y, r, 0);
                double worst = kInf;
                for (int j = 1; j <= config.growth_max_j; ++j) {
                    worst = std::min(worst, volume(y, std::ldexp(r, j), 0) / (std::exp2(j * (q - a)) * v0));
                }
                norms[i] = y.euclidean();
                radii[i] = r;
                return worst;
            });
            add_rows("volume_growth", values, norms, radii);
            const SupStats s = sup_stats(values, n, true);
            report.growth_constant = s.all;
            record("growth_constant", s);
            report.growth_check = report.measurements.back().passed && s.all > 0.0;
            report.measurements.back().passed = report.growth_check;
            report.sample_counts["growth"] = total;
        } else {
            record("growth_constant", {}, false, "closed-form volumes needed (G1, max-type norm)");
        }
    }

    // orbit density: int_r^{2r} 1{|x - O_{-t} y| < R t} dt/t <= C1 R^a r^Q / mu(B_r(y)), and the p = 0 tail version
    {
        const bool applicable = closed_volume;
        if (applicable) {
            const std::size_t n = config.dichte_samples;
            const std::size_t total = doubled ? 2 * n : n;
            std::vector<double> norms(total), radii(total), second(total);
            const double q = g.homogeneous_dimension();
            const double a = g.blocks()[0].exponent;
            const CounterRng base = CounterRng::stream(config.seed, "quasi_geometry.dichte");
            const auto values = sample_values(n, doubled, [&](std::size_t i) {
                CounterRng rng = base.split(i);
                const GroupPoint y = random_center(g, rng, config.center_log2_spread);
                const double r = std::exp2(rng.uniform(lo_r, hi_r));
                const double big_r = std::exp2(rng.uniform(0.0, 4.0));
                GroupPoint x(g.dim());
                if (rng.uniform() < 0.5) {
                    x = random_center(g, rng, config.center_log2_spread);
                } else {
                    // near the orbit of y at a time inside [r, 2r]
                    const double t0 = r * rng.uniform(1.0, 2.0);
                    x = group_product(g, sample_norm_ball(space, big_r * t0, rng), rotate(g, -t0, y));
                }
                auto inside = [&](double t) { return space.norm_of(x - rotate(g, -t, y)) < big_r * t; };
                const double mu = volume(y, r, 0);
                // first integral on a fine log-uniform grid
                constexpr int kNodes = 4096;
                double hits = 0.0;
                for (int k = 0; k < kNodes; ++k) {
                    const double t = r * std::exp2((k + 0.5) / kNodes);
                    hits += inside(t) ? 1.0 : 0.0;
                }
                const double first = hits / kNodes * std::log(2.0);
                // tail integral with p = 0: indicator is 1 once R t exceeds the largest possible gap
                double bound = 0.0;
                for (const auto& b : g.blocks()) {
                    double s2 = 0.0;
                    for (std::size_t c = b.begin; c < b.end; ++c) {
                        s2 += x[c] * x[c] + y[c] * y[c];
                    }
                    bound = std::max(bound, root_exponent(2.0 * std::sqrt(s2), b.exponent));
                }
                const double t_full = std::max(r, bound / big_r);
                numerics::CompensatedSum tail;
                if (t_full > r) {
                    // step at most 1% in t and at most 0.01 in absolute t (resolves the 2 pi orbit period)
                    double t = r;
                    while (t < t_full) {
                        const double step = std::min({0.01 * t, 0.01, t_full - t});
                        const double mid = t + 0.5 * step;
                        if (inside(mid)) {
                            tail.add(std::pow(mid, -q - 1.0) * step);
                        }
                        t += step;
                    }
                }
                tail.add(std::pow(t_full, -q) / q);
                norms[i] = y.euclidean();
                radii[i] = r;
                second[i] = tail.value() * mu / std::pow(big_r, a);
                return first * mu / (std::pow(big_r, a) * std::pow(r, q));
            });
            add_rows("dichte_c1", values, norms, radii);
            add_rows("dichte_c2", second, norms, radii);
            const SupStats s1 = sup_stats(values, n);
            const SupStats s2 = sup_stats(second, n);
            report.dichte_c1 = s1.all;
            report.dichte_c2 = s2.all;
            record("dichte_c1", s1);
            record("dichte_c2", s2);
            report.sample_counts["dichte"] = total;
        } else {
            record("dichte_c1", {}, false, "closed-form volumes needed (G1, max-type norm)");
            record("dichte_c2", {}, false, "closed-form volumes needed (G1, max-type norm)");
        }
    }
    return report;
}

VolumeAgreement verify_volume_formula(const QuasiSpace& space, std::size_t cases, std::size_t mc_samples,
                                      std::uint64_t seed) {
    if (!space.has_closed_form_volume()) {
        throw ConfigurationError("verify_volume_formula: no closed-form volume for " + space.group().describe());
    }
    const CounterRng base = CounterRng::stream(seed, "quasi_geometry.volume_formula");
    std::vector<VolumeEstimate> exact(cases);
    std::vector<VolumeEstimate> mc(cases);
    std::vector<GroupPoint> centers(cases);
    std::vector<double> radii(cases);
    for (std::size_t k = 0; k < cases; ++k) {
        CounterRng rng = base.split(k);
        centers[k] = random_point(space.group(), rng, 2.0);
        radii[k] = std::exp2(rng.uniform(-4.0, 2.0));
    }
    // ball_volume parallelises internally
    for (std::size_t k = 0; k < cases; ++k) {
        exact[k] = ball_volume(space, centers[k], radii[k], VolumeMethod::closed_form());
        mc[k] = ball_volume(space, centers[k], radii[k], VolumeMethod::monte_carlo(mc_samples, base.split(cases + k)()));
    }
    VolumeAgreement out;
    out.cases = cases;
    for (std::size_t k = 0; k < cases; ++k) {
        const double gap = std::abs(exact[k].value - mc[k].value);
        const double score = mc[k].error > 0.0 ? gap / mc[k].error : (gap > 0.0 ? kInf : 0.0);
        out.max_score = std::max(out.max_score, score);
        if (gap > mc[k].error) {
            ++out.misses;
        }
        out.rows.add_row({static_cast<long long>(k), space.norm_of(centers[k]), radii[k], exact[k].value,
                          mc[k].value, mc[k].error});
    }
    return out;
}

} // namespace rotadic
