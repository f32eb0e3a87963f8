#include "ucut/mixture.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/random/binomial_distribution.hpp>

namespace ucut {

namespace {

void check_m(std::int64_t m) {
    if (m < 1) throw Error("binomial size m must be positive");
    if (m > kMaxMixtureM) throw Error("m above " + std::to_string(kMaxMixtureM) + " is not supported");
}

double ibeta_at(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

// I_{t1}(a, b) - I_{t0}(a, b), taking the complement when both are near 1.
double ibeta_diff(double a, double b, double t0, double t1) {
    if (t0 <= 0.0 && t1 >= 1.0) return 1.0;
    const double mean = a / (a + b);
    if (t0 > mean) {
        const double c0 = t0 >= 1.0 ? 0.0 : boost::math::ibetac(a, b, t0);
        const double c1 = t1 >= 1.0 ? 0.0 : boost::math::ibetac(a, b, t1);
        return c0 - c1;
    }
    return ibeta_at(a, b, t1) - ibeta_at(a, b, t0);
}

// pmf contribution of c0 + c1*u on [t0, t1].
void add_linear(const LinearPiece& p, std::int64_t m, std::vector<double>& pmf) {
    const double dm = static_cast<double>(m);
    for (std::int64_t k = 0; k <= m; ++k) {
        const double dk = static_cast<double>(k);
        double v = 0.0;
        if (p.c0 != 0.0) v += p.c0 / (dm + 1.0) * ibeta_diff(dk + 1.0, dm - dk + 1.0, p.lo, p.hi);
        if (p.c1 != 0.0) {
            v += p.c1 * (dk + 1.0) / ((dm + 1.0) * (dm + 2.0)) *
                 ibeta_diff(dk + 2.0, dm - dk + 1.0, p.lo, p.hi);
        }
        pmf[static_cast<std::size_t>(k)] += v;
    }
}

// Adds weight * P(X = k | s = u) for every k carrying non-negligible mass.
void add_binomial_row(double u, double weight, std::int64_t m, std::vector<double>& pmf) {
    const double dm = static_cast<double>(m);
    const auto mode = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((dm + 1.0) * u)), 0, m);
    const boost::math::binomial_distribution<double> law(dm, u);
    const double peak = boost::math::pdf(law, static_cast<double>(mode));
    const double odds = u / (1.0 - u);
    constexpr double kCut = 1e-20;
    double term = peak;
    for (std::int64_t k = mode; k <= m; ++k) {
        pmf[static_cast<std::size_t>(k)] += weight * term;
        term *= static_cast<double>(m - k) / static_cast<double>(k + 1) * odds;
        if (term < kCut * peak) break;
    }
    term = peak;
    for (std::int64_t k = mode; k > 0;) {
        term *= static_cast<double>(k) / static_cast<double>(m - k + 1) / odds;
        --k;
        if (term < kCut * peak) break;
        pmf[static_cast<std::size_t>(k)] += weight * term;
    }
}

// pmf contribution of the beta bump weight * Beta((u - lo)/w; alpha, beta)/w.
// Composite 16-point Gauss-Legendre over panels half a kernel sd wide, so
// every binomial kernel is resolved. The two end panels carry the power-law
// factors of the beta density and use a tanh-sinh rule instead, with the
// distance to the singular end computed without cancellation.
void add_beta_bump(const BetaPiece& p, std::int64_t m, std::vector<double>& pmf) {
    if (p.weight == 0.0) return;
    using boost::math::quadrature::gauss;
    const auto& nodes = gauss<double, 16>::abscissa();
    const auto& weights = gauss<double, 16>::weights();
    const double dm = static_cast<double>(m);
    const double width = p.hi - p.lo;
    const double norm = p.weight / boost::math::beta(p.alpha, p.beta);

    // Panel edges in y = (u - lo) / width.
    std::vector<double> edges{0.0};
    while (edges.back() < 1.0) {
        const double u = p.lo + width * edges.back();
        const double h = 0.5 * std::sqrt((u * (1.0 - u) + 1.0 / dm) / dm) / width;
        edges.push_back(std::min(1.0, edges.back() + h));
    }
    if (edges.size() > 2 && 1.0 - edges[edges.size() - 2] < 1e-3 * (edges[1] - edges[0])) {
        edges.erase(edges.end() - 2);
    }
    // The two ends need separate panels.
    if (edges.size() == 2) edges.insert(edges.begin() + 1, 0.5);

    auto density_at = [&](double y, double one_minus_y) {
        return std::pow(y, p.alpha - 1.0) * std::pow(one_minus_y, p.beta - 1.0);
    };
    auto add_y = [&](double y, double w) { add_binomial_row(p.lo + width * y, norm * w, m, pmf); };

    auto gauss_panel = [&](double y0, double y1) {
        const double half = 0.5 * (y1 - y0);
        const double mid = 0.5 * (y1 + y0);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            for (double sign : {1.0, -1.0}) {
                if (sign < 0.0 && nodes[i] == 0.0) continue;
                const double y = mid + sign * half * nodes[i];
                add_y(y, half * weights[i] * density_at(y, 1.0 - y));
            }
        }
    };

    // y = y0 + (y1 - y0)(1 + x)/2 with x = tanh(pi/2 sinh t).
    auto tanh_sinh_panel = [&](double y0, double y1, bool left_singular) {
        constexpr double kStep = 1.0 / 32.0;
        constexpr int kHalfNodes = 160;
        const double len = y1 - y0;
        for (int j = -kHalfNodes; j <= kHalfNodes; ++j) {
            const double t = j * kStep;
            const double s = 0.5 * M_PI * std::sinh(t);
            const double from_lo = len / (1.0 + std::exp(-2.0 * s));
            const double from_hi = len / (1.0 + std::exp(2.0 * s));
            const double cs = std::cosh(s);
            const double w = kStep * 0.5 * len * 0.5 * M_PI * std::cosh(t) / (cs * cs);
            if (w == 0.0 || from_lo == 0.0 || from_hi == 0.0) continue;
            const double y = left_singular ? from_lo : y0 + from_lo;
            const double one_minus_y = left_singular ? 1.0 - y : from_hi;
            add_y(y, w * density_at(y, one_minus_y));
        }
    };

    const std::size_t panels = edges.size() - 1;
    for (std::size_t j = 0; j < panels; ++j) {
        if (j == 0) {
            tanh_sinh_panel(0.0, edges[1], true);
        } else if (j + 1 == panels) {
            tanh_sinh_panel(edges[j], 1.0, false);
        } else {
            gauss_panel(edges[j], edges[j + 1]);
        }
    }
}

}  // namespace

std::vector<double> mixture_pmf(const DensitySpec& f, std::int64_t m) {
    check_m(m);
    const auto size = static_cast<std::size_t>(m) + 1;
    std::vector<double> pmf(size, 0.0);
    if (f.has_atoms()) {
        for (const auto& atom : f.atoms()) {
            if (atom.mass == 0.0) continue;
            const boost::math::binomial_distribution<double> law(static_cast<double>(m), atom.x);
            for (std::size_t k = 0; k < size; ++k) {
                pmf[k] += atom.mass * boost::math::pdf(law, static_cast<double>(k));
            }
        }
        return pmf;
    }
    for (const auto& piece : f.pieces()) {
        if (const auto* lin = std::get_if<LinearPiece>(&piece)) {
            add_linear(*lin, m, pmf);
            continue;
        }
        const auto& b = std::get<BetaPiece>(piece);
        if (b.base != 0.0) add_linear(LinearPiece{b.lo, b.hi, b.base, 0.0}, m, pmf);
        add_beta_bump(b, m, pmf);
    }
    for (auto& p : pmf) p = std::max(p, 0.0);
    return pmf;
}

MixtureLaw::MixtureLaw(const DensitySpec& f, std::int64_t m) : m_(m), pmf_(mixture_pmf(f, m)) {
    // Kahan-compensated running sum.
    cum_.resize(pmf_.size());
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        const double y = pmf_[k] - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
        cum_[k] = sum;
    }
    const double total = cum_.back();
    for (auto& c : cum_) c = std::min(1.0, c / total);
    cum_.back() = 1.0;
}

std::int64_t MixtureLaw::lattice_floor(double x) const {
    if (x < 0.0) return -1;
    if (x >= 1.0) return m_;
    const double dm = static_cast<double>(m_);
    auto k = static_cast<std::int64_t>(std::floor(x * dm));
    k = std::clamp<std::int64_t>(k, 0, m_);
    while (k < m_ && static_cast<double>(k + 1) / dm <= x) ++k;
    while (k >= 0 && static_cast<double>(k) / dm > x) --k;
    return k;
}

double MixtureLaw::operator()(double x) const {
    const auto k = lattice_floor(x);
    return k < 0 ? 0.0 : cum_[static_cast<std::size_t>(k)];
}

double MixtureLaw::left_limit(double x) const {
    auto k = lattice_floor(x);
    if (k >= 0 && static_cast<double>(k) / static_cast<double>(m_) == x) --k;
    return k < 0 ? 0.0 : cum_[static_cast<std::size_t>(k)];
}

StepCdf MixtureLaw::to_step_cdf() const {
    std::vector<double> knots;
    std::vector<double> values;
    const double dm = static_cast<double>(m_);
    for (std::int64_t k = 0; k <= m_; ++k) {
        knots.push_back(static_cast<double>(k) / dm);
        values.push_back(cum_[static_cast<std::size_t>(k)]);
    }
    return StepCdf(std::move(knots), std::move(values));
}

double mixture_cdf(const DensitySpec& f, std::int64_t m, double x) {
    if (x < 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return MixtureLaw(f, m)(x);
}

double deviation_sup(const DensitySpec& f, std::int64_t m, std::optional<Window> window) {
    return deviation_sup(f, MixtureLaw(f, m), window);
}

double deviation_sup(const DensitySpec& f, const MixtureLaw& law, std::optional<Window> window) {
    const Window w = window.value_or(Window{});
    if (!(w.lo <= w.hi)) throw Error("deviation window needs lo <= hi");
    std::vector<double> points{w.lo, w.hi};
    const double dm = static_cast<double>(law.m());
    for (std::int64_t k = 0; k <= law.m(); ++k) {
        const double x = static_cast<double>(k) / dm;
        if (x >= w.lo && x <= w.hi) points.push_back(x);
    }
    for (double x : f.nodes()) {
        if (x >= w.lo && x <= w.hi) points.push_back(x);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    double sup = 0.0;
    for (double x : points) {
        sup = std::max(sup, std::abs(law(x) - f.cdf(x)));
        if (x > w.lo) sup = std::max(sup, std::abs(law.left_limit(x) - f.cdf_left(x)));
    }
    return sup;
}

std::vector<Truth> draw_truth(const DensitySpec& f, std::size_t n, const RngContract& rng,
                              double tau0) {
    if (n < 1) throw Error("sample size n must be positive");
    if (!(tau0 >= 0.0 && tau0 <= 1.0)) throw Error("tau0 must lie in [0, 1]");
    Rng values = rng.engine().split(0);
    Rng labels = rng.engine().split(1);
    std::vector<Truth> out(n);
    const auto& valley = f.valley();
    for (auto& t : out) {
        t.s = f.quantile(values.uniform());
        const double u = labels.uniform();
        if (!valley) {
            t.label = Label::null;
        } else if (t.s <= valley->c_l) {
            t.label = Label::null;
        } else if (t.s > valley->c_r) {
            t.label = Label::alternative;
        } else {
            t.label = u < tau0 ? Label::null : Label::alternative;
        }
    }
    return out;
}

std::vector<std::int64_t> draw_counts(std::span<const Truth> truth, std::int64_t m,
                                      const RngContract& rng) {
    if (m < 1) throw Error("binomial size m must be positive");
    Rng eng = rng.engine().split(2);
    std::vector<std::int64_t> counts;
    counts.reserve(truth.size());
    for (const auto& t : truth) {
        boost::random::binomial_distribution<std::int64_t, double> law(m, t.s);
        counts.push_back(law(eng));
    }
    return counts;
}

ObservationSet sample_binomial_mixture(const DensitySpec& f, std::size_t n, std::int64_t m,
                                       const RngContract& rng, double tau0) {
    auto truth = draw_truth(f, n, rng, tau0);
    auto counts = draw_counts(truth, m, rng);
    return ObservationSet(m, std::move(counts), {}, std::move(truth));
}

ObservationSet sample_direct(const DensitySpec& f, std::size_t n, const RngContract& rng,
                             double tau0) {
    auto truth = draw_truth(f, n, rng, tau0);
    std::vector<double> ratios;
    ratios.reserve(n);
    for (const auto& t : truth) ratios.push_back(t.s);
    return ObservationSet::from_ratios(std::move(ratios), {}, std::move(truth));
}

}  // namespace ucut
