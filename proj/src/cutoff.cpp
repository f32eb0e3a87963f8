#include "ucut/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ucut/io.hpp"
#include "ucut/parallel.hpp"
#include "ucut/shape.hpp"

namespace ucut {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Fraction {
    std::int64_t p;
    std::int64_t q;
};

// Continued-fraction approximation; exact for decimal inputs such as 0.001.
std::optional<Fraction> to_fraction(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) return std::nullopt;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        if (a > 1e12) break;
        const auto ai = static_cast<std::int64_t>(a);
        const std::int64_t p2 = ai * p1 + p0;
        const std::int64_t q2 = ai * q1 + q0;
        if (q2 > 100000000) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <=
            1e-15 * std::max(1.0, x)) {
            return Fraction{p1, q1};
        }
        const double frac = r - a;
        if (frac <= 0.0) break;
        r = 1.0 / frac;
    }
    return std::nullopt;
}

constexpr std::int64_t kExactLimit = std::int64_t{1} << 53;

// {start + j*step : j >= 0} intersected with [start, stop].
std::vector<double> arithmetic_grid(double start, double step, double stop) {
    std::vector<double> out;
    const auto s = to_fraction(start);
    const auto g = to_fraction(step);
    const auto e = to_fraction(stop);
    if (s && g && e) {
        const std::int64_t l1 = std::lcm(s->q, g->q);
        const __int128 l_wide = static_cast<__int128>(l1 / std::gcd(l1, e->q)) * e->q;
        if (l_wide < kExactLimit) {
            const auto l = static_cast<std::int64_t>(l_wide);
            const __int128 a = static_cast<__int128>(s->p) * (l / s->q);
            const __int128 b = static_cast<__int128>(g->p) * (l / g->q);
            const __int128 c = static_cast<__int128>(e->p) * (l / e->q);
            bool exact = true;
            for (__int128 num = a; num <= c; num += b) {
                if (num >= kExactLimit) {
                    exact = false;
                    break;
                }
                out.push_back(static_cast<double>(static_cast<std::int64_t>(num)) /
                              static_cast<double>(l));
            }
            if (exact) return out;
        }
    }
    out.clear();
    for (std::int64_t j = 0;; ++j) {
        const double v = start + static_cast<double>(j) * step;
        if (v > stop) break;
        out.push_back(v);
    }
    return out;
}

// Mass of a density from its lower end to x, and from x to its upper end.
double mass_below(const PiecewiseConstantDensity& d, double x) {
    return d.cdf(x);
}

double mass_above(const PiecewiseConstantDensity& d, double x) {
    const auto bp = d.breakpoints();
    const auto h = d.heights();
    double acc = 0.0;
    for (std::size_t k = h.size(); k-- > 0;) {
        if (bp[k + 1] <= x) break;
        acc += h[k] * (bp[k + 1] - std::max(bp[k], x));
    }
    return acc;
}

double xlogx_term(std::size_t count, double ratio) {
    if (count == 0) return 0.0;
    return static_cast<double>(count) * std::log(ratio);
}

}  // namespace

void UcutConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("gamma must be positive");
    if (!(mu > 0.0 && mu < 1.0)) throw Error("mu must lie in (0, 1)");
    if (!(c_l_max >= 0.0 && c_l_max < mu)) throw Error("c_l_max must lie in [0, mu)");
    if (!(c_r_min > mu && c_r_min <= 1.0)) throw Error("c_r_min must lie in (mu, 1]");
    if (!(d_l >= 0.0) || !(d_r >= 0.0) || !std::isfinite(d_l) || !std::isfinite(d_r)) {
        throw Error("gaps d_l and d_r must be finite and nonnegative");
    }
}

UcutConfig default_config(double mu, double d_l, double d_r, double gamma) {
    UcutConfig c;
    c.mu = mu;
    c.d_l = d_l;
    c.d_r = d_r;
    c.gamma = gamma;
    c.c_l_max = std::max(0.0, mu - 0.05);
    c.c_r_min = std::min(1.0, mu + 0.05);
    return c;
}

MassSplit empirical_masses(std::span<const double> ratios, double x, double y) {
    if (!(x < y)) throw Error("mass split needs x < y");
    if (ratios.empty()) throw Error("empty sample");
    MassSplit out;
    for (double v : ratios) {
        if (v <= x) {
            ++out.n_l;
        } else if (v <= y) {
            ++out.n_mid;
        } else {
            ++out.n_r;
        }
    }
    const double n = static_cast<double>(ratios.size());
    out.alpha_l = static_cast<double>(out.n_l) / n;
    out.alpha_mid = static_cast<double>(out.n_mid) / n;
    out.alpha_r = static_cast<double>(out.n_r) / n;
    return out;
}

MassSplit empirical_masses(const ObservationSet& obs, double x, double y) {
    return empirical_masses(obs.ratios(), x, y);
}

FittedHalves fit_halves(const ObservationSet& obs, double mu) {
    if (!(mu > 0.0 && mu < 1.0)) throw Error("mu must lie in (0, 1)");
    std::vector<double> left;
    std::vector<double> right;
    for (double v : obs.ratios()) (v <= mu ? left : right).push_back(v);
    if (left.empty() || right.empty()) throw Error("empty half; choose different µ");
    const double alpha = static_cast<double>(left.size()) / static_cast<double>(obs.size());
    return FittedHalves{grenander_decreasing(left, 0.0, mu), grenander_increasing(right, mu, 1.0),
                        alpha};
}

GapThresholds gap_thresholds(const ObservationSet& obs, double c_l, double c_r, double mu,
                             double d_l, double d_r) {
    if (!(c_l < mu && mu < c_r)) throw Error("gap thresholds need c_l < mu < c_r");
    const double n = static_cast<double>(obs.size());
    std::size_t n_l_mu = 0, mid_l = 0, mid_r = 0;
    for (double v : obs.ratios()) {
        if (v <= mu) ++n_l_mu;
        if (v > c_l && v <= mu) ++mid_l;
        if (v > mu && v <= c_r) ++mid_r;
    }
    const double alpha_l = static_cast<double>(n_l_mu) / n;
    if (n_l_mu == 0 || n_l_mu == obs.size()) throw Error("degenerate split: all ratios on one side of mu");
    const double alpha_r = 1.0 - alpha_l;
    return GapThresholds{
        (static_cast<double>(mid_l) / n) / (alpha_l * (mu - c_l)) + d_l / alpha_l,
        (static_cast<double>(mid_r) / n) / (alpha_r * (c_r - mu)) + d_r / alpha_r,
    };
}

double simplified_loglik(const ObservationSet& obs, double c_l, double c_r,
                         const PiecewiseConstantDensity& g_l, const PiecewiseConstantDensity& g_r) {
    if (!(c_l < c_r)) throw Error("log-likelihood needs c_l < c_r");
    const auto split = empirical_masses(obs, c_l, c_r);
    const double mass_l = split.n_l > 0 ? mass_below(g_l, c_l) : 1.0;
    const double mass_r = split.n_r > 0 ? mass_above(g_r, c_r) : 1.0;
    if (!(mass_l > 0.0) || !(mass_r > 0.0)) return kNegInf;

    double sum_l = 0.0;
    double sum_r = 0.0;
    for (double v : obs.ratios()) {
        if (v <= c_l) {
            sum_l += std::log(g_l(v));
        } else if (v > c_r) {
            sum_r += std::log(g_r(v));
        }
    }
    const double total = sum_l - xlogx_term(split.n_l, mass_l) + xlogx_term(split.n_l, split.alpha_l) +
                         xlogx_term(split.n_mid, split.alpha_mid / (c_r - c_l)) + sum_r -
                         xlogx_term(split.n_r, mass_r) + xlogx_term(split.n_r, split.alpha_r);
    return std::isnan(total) ? kNegInf : total;
}

std::vector<double> left_grid(const UcutConfig& config) {
    config.validate();
    return arithmetic_grid(0.0, config.gamma, config.c_l_max);
}

std::vector<double> right_grid(const UcutConfig& config) {
    config.validate();
    return arithmetic_grid(config.c_r_min, config.gamma, 1.0);
}

UcutResult ucut(const ObservationSet& obs, const UcutConfig& config, unsigned threads) {
    config.validate();
    auto halves = fit_halves(obs, config.mu);
    const auto cl_grid = left_grid(config);
    const auto cr_grid = right_grid(config);

    std::vector<double> sorted(obs.ratios().begin(), obs.ratios().end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double dn = static_cast<double>(n);
    const auto rank_le = [&](double x) {
        return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
    };
    const std::size_t n_l_mu = rank_le(config.mu);
    const double alpha_l = halves.alpha_l_mu;
    const double alpha_r = 1.0 - alpha_l;

    // prefix[k] = sum of log g_l over the k smallest ratios (all left of mu);
    // suffix[k] = sum of log g_r over ratios from rank k on (right of mu).
    std::vector<double> prefix(n_l_mu + 1, 0.0);
    for (std::size_t i = 0; i < n_l_mu; ++i) prefix[i + 1] = prefix[i] + std::log(halves.g_l(sorted[i]));
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > n_l_mu;) suffix[i] = suffix[i + 1] + std::log(halves.g_r(sorted[i]));

    struct Side {
        std::size_t rank;
        double term;
        bool flag;
    };
    std::vector<Side> left(cl_grid.size());
    for (std::size_t a = 0; a < cl_grid.size(); ++a) {
        const double c = cl_grid[a];
        const std::size_t k = rank_le(c);
        double term = 0.0;
        if (k > 0) {
            const double mass = mass_below(halves.g_l, c);
            term = mass > 0.0 ? prefix[k] - xlogx_term(k, mass) + xlogx_term(k, static_cast<double>(k) / dn)
                              : kNegInf;
        }
        const double d_tilde = (static_cast<double>(n_l_mu - k) / dn) / (alpha_l * (config.mu - c)) +
                               config.d_l / alpha_l;
        left[a] = Side{k, term, halves.g_l(c) >= d_tilde};
    }
    std::vector<Side> right(cr_grid.size());
    for (std::size_t b = 0; b < cr_grid.size(); ++b) {
        const double c = cr_grid[b];
        const std::size_t k = rank_le(c);
        const std::size_t n_r = n - k;
        double term = 0.0;
        if (n_r > 0) {
            const double mass = mass_above(halves.g_r, c);
            term = mass > 0.0 ? suffix[k] - xlogx_term(n_r, mass) + xlogx_term(n_r, static_cast<double>(n_r) / dn)
                              : kNegInf;
        }
        const double d_tilde = (static_cast<double>(k - n_l_mu) / dn) / (alpha_r * (c - config.mu)) +
                               config.d_r / alpha_r;
        right[b] = Side{k, term, halves.g_r(c) >= d_tilde};
    }

    struct RowBest {
        double loglik = kNegInf;
        std::size_t b = 0;
        std::size_t feasible = 0;
    };
    std::vector<RowBest> rows(cl_grid.size());
    parallel_for(cl_grid.size(), threads, [&](std::size_t a) {
        RowBest best;
        const auto& l = left[a];
        if (!l.flag) {
            rows[a] = best;
            return;
        }
        for (std::size_t b = 0; b < cr_grid.size(); ++b) {
            const auto& r = right[b];
            if (!r.flag) continue;
            ++best.feasible;
            const std::size_t n_mid = r.rank - l.rank;
            const double ll = l.term +
                              xlogx_term(n_mid, (static_cast<double>(n_mid) / dn) / (cr_grid[b] - cl_grid[a])) +
                              r.term;
            if (ll > best.loglik) {
                best.loglik = ll;
                best.b = b;
            }
        }
        rows[a] = best;
    });

    UcutResult result{false, 0.0, 1.0, halves.g_l, halves.g_r, alpha_l, kNegInf, {}, 0};
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
        result.feasible_pairs += rows[a].feasible;
        if (rows[a].loglik > result.loglik) {
            result.loglik = rows[a].loglik;
            best_a = a;
            best_b = rows[a].b;
        }
    }
    if (result.loglik > kNegInf) {
        result.feasible = true;
        result.c_l_star = cl_grid[best_a];
        result.c_r_star = cr_grid[best_b];
        result.masses = empirical_masses(sorted, result.c_l_star, result.c_r_star);
    }
    return result;
}

PiecewiseConstantDensity stitched_density(const UcutResult& result) {
    if (!result.feasible) throw Error("no cutoff pair to stitch");
    const double c_l = result.c_l_star;
    const double c_r = result.c_r_star;
    std::vector<double> breaks{0.0};
    std::vector<double> heights;
    if (c_l > 0.0) {
        const double scale = result.masses.n_l > 0 ? result.masses.alpha_l / mass_below(result.g_l, c_l) : 0.0;
        const auto bp = result.g_l.breakpoints();
        const auto h = result.g_l.heights();
        for (std::size_t k = 0; k < h.size() && bp[k] < c_l; ++k) {
            breaks.push_back(std::min(bp[k + 1], c_l));
            heights.push_back(h[k] * scale);
        }
    }
    if (c_r > c_l) {
        breaks.push_back(c_r);
        heights.push_back(result.masses.alpha_mid / (c_r - c_l));
    }
    if (c_r < 1.0) {
        const double scale = result.masses.n_r > 0 ? result.masses.alpha_r / mass_above(result.g_r, c_r) : 0.0;
        const auto bp = result.g_r.breakpoints();
        const auto h = result.g_r.heights();
        for (std::size_t k = 0; k < h.size(); ++k) {
            if (bp[k + 1] <= c_r) continue;
            breaks.push_back(bp[k + 1]);
            heights.push_back(h[k] * scale);
        }
    }
    return PiecewiseConstantDensity(std::move(breaks), std::move(heights), Monotone::none);
}

namespace {

nlohmann::ordered_json density_rows(const PiecewiseConstantDensity& d) {
    auto rows = nlohmann::ordered_json::array();
    const auto bp = d.breakpoints();
    const auto h = d.heights();
    for (std::size_t k = 0; k < h.size(); ++k) rows.push_back({bp[k], bp[k + 1], h[k]});
    return rows;
}

nlohmann::ordered_json finite_or_null(double x) {
    return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string to_json(const UcutResult& result, const UcutConfig& config) {
    nlohmann::ordered_json j;
    j["c_l"] = result.feasible ? finite_or_null(result.c_l_star) : nlohmann::ordered_json(nullptr);
    j["c_r"] = result.feasible ? finite_or_null(result.c_r_star) : nlohmann::ordered_json(nullptr);
    j["alpha_l_mu"] = result.alpha_l_mu;
    j["loglik"] = finite_or_null(result.loglik);
    j["feasible"] = result.feasible;
    j["feasible_pairs"] = result.feasible_pairs;
    j["config"] = {{"mu", config.mu},           {"d_l", config.d_l},
                   {"d_r", config.d_r},         {"c_l_max", config.c_l_max},
                   {"c_r_min", config.c_r_min}, {"gamma", config.gamma}};
    j["g_l"] = density_rows(result.g_l);
    j["g_r"] = density_rows(result.g_r);
    return dump_json(j);
}

}  // namespace ucut
