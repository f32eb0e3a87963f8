#include "ucut/shape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "ucut/io.hpp"

namespace ucut {

namespace detail {

int orientation(const Vertex& p, const Vertex& q, const Vertex& r) {
    const double left = (q.x - p.x) * (r.y - p.y);
    const double right = (q.y - p.y) * (r.x - p.x);
    const double det = left - right;
    // Shewchuk's first-stage bound for orient2d evaluated in doubles.
    constexpr double eps = 0x1.0p-53;
    const double bound = (3.0 + 16.0 * eps) * eps * (std::abs(left) + std::abs(right));
    if (det > bound) return 1;
    if (-det > bound) return -1;

    using boost::multiprecision::cpp_rational;
    const cpp_rational px(p.x), py(p.y), qx(q.x), qy(q.y), rx(r.x), ry(r.y);
    const cpp_rational exact = (qx - px) * (ry - py) - (qy - py) * (rx - px);
    return exact > 0 ? 1 : (exact < 0 ? -1 : 0);
}

std::vector<Vertex> monotone_chain(std::span<const Vertex> points, bool upper) {
    std::vector<Vertex> hull;
    hull.reserve(points.size());
    for (const auto& pt : points) {
        while (hull.size() >= 2) {
            const int turn = orientation(hull[hull.size() - 2], hull.back(), pt);
            // Collinear middle points are dropped, so slopes change strictly.
            if ((upper && turn >= 0) || (!upper && turn <= 0)) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(pt);
    }
    return hull;
}

}  // namespace detail

double ConcaveMajorant::operator()(double x) const {
    if (x <= vertices.front().x && vertices.front().x != vertices[1].x) return vertices.front().y;
    auto it = std::upper_bound(vertices.begin(), vertices.end(), x,
                               [](double v, const Vertex& w) { return v < w.x; });
    if (it == vertices.end()) return vertices.back().y;
    if (it == vertices.begin()) return vertices.front().y;
    const auto& lo = *(it - 1);
    const auto& hi = *it;
    if (x == lo.x) return lo.y;
    return lo.y + (hi.y - lo.y) * (x - lo.x) / (hi.x - lo.x);
}

double ConcaveMajorant::left_limit(double x) const {
    if (x <= vertices.front().x) return vertices.front().y;
    auto it = std::lower_bound(vertices.begin(), vertices.end(), x,
                               [](const Vertex& w, double v) { return w.x < v; });
    if (it == vertices.end()) return vertices.back().y;
    const auto& lo = *(it - 1);
    const auto& hi = *it;
    if (x == hi.x) return hi.y;
    return lo.y + (hi.y - lo.y) * (x - lo.x) / (hi.x - lo.x);
}

ConcaveMajorant least_concave_majorant(const StepCdf& cdf, double a, double b) {
    if (!(a < b)) throw Error("majorant support needs a < b");
    // Integer counts keep the hull predicate exact on empirical CDFs.
    const auto n = cdf.sample_size();
    const double scale = n ? static_cast<double>(*n) : 1.0;
    auto y_of = [&](double v) { return n ? std::round(v * scale) : v; };

    std::vector<Vertex> points;
    points.push_back({a, y_of(cdf.left_limit(a))});
    const auto knots = cdf.knots();
    const auto values = cdf.values();
    for (std::size_t j = 0; j < knots.size(); ++j) {
        if (knots[j] < a || knots[j] >= b) continue;
        points.push_back({knots[j], y_of(values[j])});
    }
    points.push_back({b, y_of(cdf(b))});
    if (points.size() >= 2 && points[0].x == points[1].x && points[0].y == points[1].y) {
        points.erase(points.begin());
    }

    ConcaveMajorant out;
    out.vertices = detail::monotone_chain(points, true);
    for (auto& v : out.vertices) v.y /= scale;
    return out;
}

namespace {

void check_samples(std::span<const double> samples, double a, double b) {
    if (samples.empty()) throw Error("empty sample");
    if (!(a < b)) throw Error("support needs a < b");
    for (double x : samples) {
        if (!(x >= a && x <= b)) throw Error("sample outside the support");
    }
}

PiecewiseConstantDensity slopes_to_density(const std::vector<Vertex>& hull, double n_eff,
                                           Monotone monotone) {
    std::vector<double> breaks;
    std::vector<double> heights;
    breaks.reserve(hull.size());
    heights.reserve(hull.size());
    breaks.push_back(hull.front().x);
    for (std::size_t j = 1; j < hull.size(); ++j) {
        const double dx = hull[j].x - hull[j - 1].x;
        double h = (hull[j].y - hull[j - 1].y) / (n_eff * dx);
        // The hull slopes are strictly monotone; rounding may not invert them.
        if (!heights.empty()) {
            h = monotone == Monotone::decreasing ? std::min(h, heights.back())
                                                 : std::max(h, heights.back());
        }
        heights.push_back(h);
        breaks.push_back(hull[j].x);
    }
    return PiecewiseConstantDensity(std::move(breaks), std::move(heights), monotone);
}

}  // namespace

PiecewiseConstantDensity grenander_decreasing(std::span<const double> samples, double a, double b) {
    check_samples(samples, a, b);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto first = std::upper_bound(sorted.begin(), sorted.end(), a);
    if (first == sorted.end()) throw Error("all samples sit at the support start");
    const std::span<const double> kept(&*first, static_cast<std::size_t>(sorted.end() - first));

    std::vector<Vertex> points{{a, 0.0}};
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i + 1 < kept.size() && kept[i + 1] == kept[i]) continue;
        points.push_back({kept[i], static_cast<double>(i + 1)});
    }
    const double n_eff = static_cast<double>(kept.size());
    if (points.back().x < b) points.push_back({b, n_eff});

    return slopes_to_density(detail::monotone_chain(points, true), n_eff, Monotone::decreasing);
}

PiecewiseConstantDensity grenander_increasing(std::span<const double> samples, double a, double b) {
    check_samples(samples, a, b);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto last = std::lower_bound(sorted.begin(), sorted.end(), b);
    if (last == sorted.begin()) throw Error("all samples sit at the support end");
    const std::span<const double> kept(sorted.data(), static_cast<std::size_t>(last - sorted.begin()));

    // Points (x, n * F_n(x-)) at each distinct sample.
    std::vector<Vertex> points{{a, 0.0}};
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i > 0 && kept[i - 1] == kept[i]) continue;
        if (kept[i] == a) continue;
        points.push_back({kept[i], static_cast<double>(i)});
    }
    const double n_eff = static_cast<double>(kept.size());
    points.push_back({b, n_eff});

    return slopes_to_density(detail::monotone_chain(points, false), n_eff, Monotone::increasing);
}

PiecewiseConstantDensity reflect(const PiecewiseConstantDensity& d) {
    const double a = d.lower();
    const double b = d.upper();
    const auto bp = d.breakpoints();
    const auto h = d.heights();
    std::vector<double> breaks(bp.size());
    std::vector<double> heights(h.size());
    for (std::size_t k = 0; k < bp.size(); ++k) breaks[k] = a + b - bp[bp.size() - 1 - k];
    for (std::size_t k = 0; k < h.size(); ++k) heights[k] = h[h.size() - 1 - k];
    breaks.front() = a;
    breaks.back() = b;
    Monotone flipped = d.monotone();
    if (flipped == Monotone::decreasing) {
        flipped = Monotone::increasing;
    } else if (flipped == Monotone::increasing) {
        flipped = Monotone::decreasing;
    }
    return PiecewiseConstantDensity(std::move(breaks), std::move(heights), flipped);
}

PiecewiseConstantDensity histogram_estimate(std::span<const double> samples, int bins) {
    if (samples.empty()) throw Error("empty sample");
    if (bins < 1) throw Error("histogram needs at least one bin");
    const auto L = static_cast<std::size_t>(bins);
    std::vector<double> breaks(L + 1);
    for (std::size_t l = 0; l <= L; ++l) breaks[l] = static_cast<double>(l) / static_cast<double>(L);
    std::vector<double> counts(L, 0.0);
    for (double x : samples) {
        if (!(x >= 0.0 && x <= 1.0)) throw Error("sample outside [0, 1]");
        auto it = std::upper_bound(breaks.begin() + 1, breaks.end(), x);
        auto l = std::min(static_cast<std::size_t>(it - (breaks.begin() + 1)), L - 1);
        counts[l] += 1.0;
    }
    const double scale = static_cast<double>(L) / static_cast<double>(samples.size());
    for (auto& c : counts) c *= scale;
    return PiecewiseConstantDensity(std::move(breaks), std::move(counts), Monotone::none);
}

std::string density_to_csv(const PiecewiseConstantDensity& d) {
    std::ostringstream os;
    os << "left,right,height\n";
    const auto bp = d.breakpoints();
    const auto h = d.heights();
    for (std::size_t k = 0; k < h.size(); ++k) {
        os << format_double(bp[k]) << ',' << format_double(bp[k + 1]) << ','
           << format_double(h[k]) << '\n';
    }
    return os.str();
}

}  // namespace ucut
