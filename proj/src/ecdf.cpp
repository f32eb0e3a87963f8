#include "ucut/ecdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ucut/shape.hpp"

namespace ucut {

StepCdf build_ecdf(std::span<const double> samples) {
    if (samples.empty()) throw Error("empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double x : sorted) {
        if (!(x >= 0.0 && x <= 1.0)) throw Error("sample outside [0, 1]");
    }
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<double> knots;
    std::vector<double> values;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        knots.push_back(sorted[i]);
        values.push_back(static_cast<double>(i + 1) / n);
    }
    return StepCdf(std::move(knots), std::move(values), sorted.size());
}

CdfView as_cdf(const StepCdf& cdf) {
    auto shared = std::make_shared<const StepCdf>(cdf);
    CdfView view;
    view.value = [shared](double x) { return (*shared)(x); };
    view.left_limit = [shared](double x) { return shared->left_limit(x); };
    view.nodes.assign(cdf.knots().begin(), cdf.knots().end());
    view.between = CdfView::Between::constant;
    return view;
}

CdfView as_cdf(const DensitySpec& spec) {
    auto shared = std::make_shared<const DensitySpec>(spec);
    CdfView view;
    view.value = [shared](double x) { return shared->cdf(x); };
    view.left_limit = [shared](double x) { return shared->cdf_left(x); };
    view.nodes = spec.nodes();
    switch (spec.cdf_between_nodes()) {
        case DensitySpec::Between::constant: view.between = CdfView::Between::constant; break;
        case DensitySpec::Between::linear: view.between = CdfView::Between::linear; break;
        case DensitySpec::Between::smooth: view.between = CdfView::Between::smooth; break;
    }
    return view;
}

CdfView as_cdf(const ConcaveMajorant& majorant) {
    auto shared = std::make_shared<const ConcaveMajorant>(majorant);
    CdfView view;
    view.value = [shared](double x) { return (*shared)(x); };
    view.left_limit = [shared](double x) { return shared->left_limit(x); };
    for (const auto& v : majorant.vertices) view.nodes.push_back(v.x);
    view.between = CdfView::Between::linear;
    return view;
}

namespace {

std::vector<double> merged_nodes(const CdfView& f1, const CdfView& f2) {
    std::vector<double> nodes{0.0, 1.0};
    for (double x : f1.nodes) nodes.push_back(x);
    for (double x : f2.nodes) nodes.push_back(x);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    nodes.erase(std::remove_if(nodes.begin(), nodes.end(),
                               [](double x) { return x < 0.0 || x > 1.0; }),
                nodes.end());
    return nodes;
}

bool piecewise_monotone_difference(const CdfView& f1, const CdfView& f2) {
    using B = CdfView::Between;
    if (f1.between == B::constant || f2.between == B::constant) return true;
    return f1.between == B::linear && f2.between == B::linear;
}

bool piecewise_linear_difference(const CdfView& f1, const CdfView& f2) {
    using B = CdfView::Between;
    return f1.between != B::smooth && f2.between != B::smooth;
}

// Maximum of |F1 - F2| strictly inside (lo, hi): coarse scan, then golden section.
double interior_sup(const CdfView& f1, const CdfView& f2, double lo, double hi) {
    auto gap = [&](double x) { return std::abs(f1.value(x) - f2.value(x)); };
    constexpr int kScan = 64;
    const double step = (hi - lo) / kScan;
    int best_i = 1;
    double best = -1.0;
    for (int i = 1; i < kScan; ++i) {
        const double v = gap(lo + step * i);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    double a = lo + step * (best_i - 1);
    double b = lo + step * (best_i + 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = gap(c);
    double fd = gap(d);
    for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gap(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gap(d);
        }
    }
    return std::max({best, fc, fd});
}

// int_0^L |d(t)|^p dt for d linear from d0 to d1.
double linear_power_integral(double d0, double d1, double length, double p) {
    if (length <= 0.0) return 0.0;
    if (d0 * d1 < 0.0) {
        const double a = std::abs(d0);
        const double b = std::abs(d1);
        return length * (std::pow(a, p + 1.0) + std::pow(b, p + 1.0)) / ((p + 1.0) * (a + b));
    }
    const double a = std::abs(d0);
    const double b = std::abs(d1);
    const double spread = std::abs(b - a);
    if (spread <= 1e-9 * std::max(a, b) || spread == 0.0) {
        return length * std::pow(0.5 * (a + b), p);
    }
    return length * (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / ((p + 1.0) * (b - a));
}

}  // namespace

double ks_distance(const CdfView& f1, const CdfView& f2) {
    const auto nodes = merged_nodes(f1, f2);
    double sup = 0.0;
    for (double x : nodes) {
        sup = std::max(sup, std::abs(f1.value(x) - f2.value(x)));
        sup = std::max(sup, std::abs(f1.left_limit(x) - f2.left_limit(x)));
    }
    if (!piecewise_monotone_difference(f1, f2)) {
        for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
            sup = std::max(sup, interior_sup(f1, f2, nodes[j], nodes[j + 1]));
        }
    }
    return sup;
}

double lp_distance(const CdfView& f1, const CdfView& f2, double p) {
    if (std::isinf(p) && p > 0) return ks_distance(f1, f2);
    if (!(p >= 1.0)) throw Error("L_p distance needs p >= 1");
    const auto nodes = merged_nodes(f1, f2);
    const bool exact = piecewise_linear_difference(f1, f2);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
        const double lo = nodes[j];
        const double hi = nodes[j + 1];
        if (exact) {
            const double d0 = f1.value(lo) - f2.value(lo);
            const double d1 = f1.left_limit(hi) - f2.left_limit(hi);
            total += linear_power_integral(d0, d1, hi - lo, p);
        } else {
            auto integrand = [&](double x) { return std::pow(std::abs(f1.value(x) - f2.value(x)), p); };
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi,
                                                                                    15, 1e-10);
        }
    }
    return std::pow(total, 1.0 / p);
}

double dkw_epsilon(std::size_t n, double delta) {
    if (n == 0) throw Error("DKW bound needs n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw Error("DKW confidence level must lie in (0, 1)");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

}  // namespace ucut
