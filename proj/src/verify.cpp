#include "ucut/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ucut/cutoff.hpp"
#include "ucut/io.hpp"
#include "ucut/parallel.hpp"
#include "ucut/shape.hpp"

namespace ucut {

MRule power_m_rule(double c, double p) {
    if (!(c > 0.0) || !std::isfinite(p)) throw Error("m rule needs c > 0 and finite exponent");
    return [c, p](std::size_t n) -> std::optional<std::int64_t> {
        const double raw = c * std::pow(static_cast<double>(n), p);
        const auto m = static_cast<std::int64_t>(std::ceil(raw * (1.0 - 1e-12)));
        return std::max<std::int64_t>(1, m);
    };
}

MRule infinite_m_rule() {
    return [](std::size_t) -> std::optional<std::int64_t> { return std::nullopt; };
}

namespace {

struct Segment {
    double lo, hi, height;
};

// g as constant segments covering [0, 1]; zero outside its support.
std::vector<Segment> segments_of(const PiecewiseConstantDensity& g) {
    std::vector<Segment> out;
    const auto bp = g.breakpoints();
    const auto h = g.heights();
    if (bp.front() > 0.0) out.push_back({0.0, std::min(bp.front(), 1.0), 0.0});
    for (std::size_t k = 0; k < h.size(); ++k) out.push_back({bp[k], bp[k + 1], h[k]});
    if (bp.back() < 1.0) out.push_back({std::max(bp.back(), 0.0), 1.0, 0.0});
    return out;
}

// Subintervals of [u, v] on which a beta piece's density is monotone.
std::vector<std::pair<double, double>> monotone_branches(const BetaPiece& b, double u, double v) {
    std::vector<std::pair<double, double>> out;
    double turn = -1.0;
    if ((b.alpha > 1.0 && b.beta > 1.0) || (b.alpha < 1.0 && b.beta < 1.0)) {
        turn = b.lo + (b.hi - b.lo) * (b.alpha - 1.0) / (b.alpha + b.beta - 2.0);
    }
    if (turn > u && turn < v) {
        out.emplace_back(u, turn);
        out.emplace_back(turn, v);
    } else {
        out.emplace_back(u, v);
    }
    return out;
}

// Integral over [u, v] of phi(h - f) for the piece f, where phi is |.| or (.)^2.
template <typename Phi>
double piece_integral(const Piece& piece, double h, double u, double v, bool squared, Phi phi) {
    if (!(v > u)) return 0.0;
    if (const auto* lin = std::get_if<LinearPiece>(&piece)) {
        auto d = [&](double x) { return h - lin->c0 - lin->c1 * x; };
        const double du = d(u);
        const double dv = d(v);
        if (squared) return (v - u) * (du * du + du * dv + dv * dv) / 3.0;
        if ((du >= 0.0) == (dv >= 0.0)) return 0.5 * std::abs(du + dv) * (v - u);
        const double r = u + (v - u) * du / (du - dv);
        return 0.5 * std::abs(du) * (r - u) + 0.5 * std::abs(dv) * (v - r);
    }
    if (squared) {
        auto integrand = [&](double x) { return phi(h - piece_pdf(piece, x)); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, u, v, 15, 1e-10);
    }
    // |h - f| through the piece CDF between the points where f crosses h.
    const auto& b = std::get<BetaPiece>(piece);
    std::vector<double> cuts{u};
    for (const auto& [lo, hi] : monotone_branches(b, u, v)) {
        const double flo = piece_pdf(piece, lo) - h;
        const double fhi = piece_pdf(piece, hi) - h;
        if ((flo > 0.0) == (fhi > 0.0)) continue;
        double a = lo, c = hi;
        for (int it = 0; it < 200 && c - a > 1e-15 * std::max(1.0, std::abs(c)); ++it) {
            const double mid = 0.5 * (a + c);
            ((piece_pdf(piece, mid) - h > 0.0) == (flo > 0.0) ? a : c) = mid;
        }
        cuts.push_back(0.5 * (a + c));
    }
    cuts.push_back(v);
    double total = 0.0;
    for (std::size_t j = 1; j < cuts.size(); ++j) {
        const double x0 = cuts[j - 1];
        const double x1 = cuts[j];
        if (!(x1 > x0)) continue;
        total += std::abs(h * (x1 - x0) - (piece_cdf(piece, x1) - piece_cdf(piece, x0)));
    }
    return total;
}

template <typename Phi>
double segment_integral(const PiecewiseConstantDensity& g, const DensitySpec& f, double a, double b,
                        bool squared, Phi phi) {
    if (f.has_atoms()) throw Error("density distance needs an absolutely continuous law");
    double total = 0.0;
    for (const auto& seg : segments_of(g)) {
        for (const auto& piece : f.pieces()) {
            const double u = std::max({seg.lo, piece_lo(piece), a});
            const double v = std::min({seg.hi, piece_hi(piece), b});
            total += piece_integral(piece, seg.height, u, v, squared, phi);
        }
    }
    return total;
}

}  // namespace

double density_l1(const PiecewiseConstantDensity& g, const DensitySpec& f) {
    return segment_integral(g, f, 0.0, 1.0, false, [](double d) { return std::abs(d); });
}

double density_ise(const PiecewiseConstantDensity& g, const DensitySpec& f, double a, double b) {
    return segment_integral(g, f, a, b, true, [](double d) { return d * d; });
}

namespace {

ObservationSet draw(const DensitySpec& f, std::size_t n, std::optional<std::int64_t> m,
                    const RngContract& rng, double tau0 = 0.5) {
    return m ? sample_binomial_mixture(f, n, *m, rng, tau0) : sample_direct(f, n, rng, tau0);
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SlopeFit fit_slope(const std::vector<SummaryRow>& summary, std::size_t reps) {
    SlopeFit fit;
    if (summary.size() < 2) return fit;
    const auto k = static_cast<double>(summary.size());
    double xbar = 0.0;
    double ybar = 0.0;
    for (const auto& row : summary) {
        xbar += std::log(static_cast<double>(row.n));
        ybar += std::log(row.mean);
    }
    xbar /= k;
    ybar /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    double var = 0.0;
    for (const auto& row : summary) {
        const double dx = std::log(static_cast<double>(row.n)) - xbar;
        sxx += dx * dx;
        sxy += dx * (std::log(row.mean) - ybar);
        const double rel = row.sd / row.mean;
        var += dx * dx * rel * rel / static_cast<double>(reps);
    }
    fit.slope = sxy / sxx;
    fit.se = std::sqrt(var) / sxx;
    fit.wide_ci = reps < 5 || 1.96 * fit.se > 0.1;
    return fit;
}

template <typename Replicate>
RateTable run_grid(std::span<const std::size_t> n_grid, const MRule& m_rule, std::size_t reps,
                   const RngContract& rng, unsigned threads, Replicate replicate) {
    if (n_grid.empty() || reps == 0) throw Error("experiment needs a nonempty grid and reps >= 1");
    RateTable table;
    table.replicates.resize(n_grid.size() * reps);
    parallel_for(table.replicates.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / reps;
        const std::size_t r = idx % reps;
        const auto m = m_rule(n_grid[i]);
        table.replicates[idx] = {n_grid[i], m, r, replicate(n_grid[i], m, rng.child(i).child(r))};
    });
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        std::vector<double> values;
        for (std::size_t r = 0; r < reps; ++r) values.push_back(table.replicates[i * reps + r].value);
        table.summary.push_back({n_grid[i], m_rule(n_grid[i]), mean_of(values), sd_of(values)});
    }
    return table;
}

}  // namespace

double grenander_l1_error(const DensitySpec& f, std::size_t n, std::optional<std::int64_t> m,
                          const RngContract& rng) {
    const auto obs = draw(f, n, m, rng);
    return density_l1(grenander_decreasing(obs.ratios(), 0.0, 1.0), f);
}

RateTable rate_l1_grenander(const DensitySpec& f, std::span<const std::size_t> n_grid,
                            const MRule& m_rule, std::size_t reps, const RngContract& rng,
                            unsigned threads) {
    auto table = run_grid(n_grid, m_rule, reps, rng, threads,
                          [&](std::size_t n, std::optional<std::int64_t> m, const RngContract& c) {
                              return grenander_l1_error(f, n, m, c);
                          });
    table.fit = fit_slope(table.summary, reps);
    return table;
}

RateTable flat_fluctuation(std::span<const std::size_t> n_grid, const MRule& m_rule, double t0,
                           std::size_t reps, const RngContract& rng, unsigned threads) {
    if (!(t0 > 0.0 && t0 < 1.0)) throw Error("t0 must lie in (0, 1)");
    const auto f = DensitySpec::uniform();
    auto table = run_grid(n_grid, m_rule, reps, rng, threads,
                          [&](std::size_t n, std::optional<std::int64_t> m, const RngContract& c) {
                              const auto obs = draw(f, n, m, c);
                              return grenander_decreasing(obs.ratios(), 0.0, 1.0)(t0);
                          });
    // The slope is fitted to the spread, not the level.
    std::vector<SummaryRow> spread = table.summary;
    for (auto& row : spread) {
        row.mean = row.sd;
        row.sd = 0.0;
    }
    table.fit = fit_slope(spread, reps);
    table.fit.wide_ci = reps < 30;
    return table;
}

BoundsReport deviation_bounds_report(std::span<const NamedSpec> specs,
                                     std::span<const std::int64_t> m_grid, Window truncation,
                                     unsigned threads) {
    constexpr double kSlack = 1e-12;
    BoundsReport report;
    report.rows.resize(specs.size() * m_grid.size());
    parallel_for(report.rows.size(), threads, [&](std::size_t idx) {
        const auto& named = specs[idx / m_grid.size()];
        const std::int64_t m = m_grid[idx % m_grid.size()];
        const MixtureLaw law(named.spec, m);
        BoundsRow row;
        row.spec = named.name;
        row.m = m;
        row.deviation = deviation_sup(named.spec, law);
        row.lower = named.spec.f_min() / static_cast<double>(m + 1);
        row.upper = named.spec.f_max() * std::sqrt(2.0 * std::numbers::pi / static_cast<double>(m));
        row.truncated = deviation_sup(named.spec, law, truncation);
        row.violation = row.deviation < row.lower - kSlack || row.deviation > row.upper + kSlack;
        report.rows[idx] = row;
    });
    for (const auto& row : report.rows) report.violations += row.violation ? 1 : 0;
    return report;
}

std::vector<NamedSpec> builtin_specs() {
    return {{"uniform", DensitySpec::uniform()},
            {"two_step", DensitySpec::two_step()},
            {"linear_valley", valley_density({})},
            {"beta_valley", beta_valley_density(0.3, 0.9)}};
}

DensitySpec discretized_pmf(const DensitySpec& f, int K) {
    if (K < 1) throw Error("need at least one atom");
    std::vector<Atom> atoms;
    for (int k = 0; k < K; ++k) {
        const double lo = static_cast<double>(k) / K;
        const double hi = static_cast<double>(k + 1) / K;
        atoms.push_back({(k + 0.5) / K, f.cdf(hi) - f.cdf_left(lo)});
    }
    return DensitySpec::point_masses(std::move(atoms));
}

HistogramTable histogram_risk_experiment(const DensitySpec& f, std::span<const std::size_t> n_grid,
                                         double a, std::size_t reps, const RngContract& rng,
                                         const HistogramOptions& options, unsigned threads) {
    if (!(a > 0.0 && a < 0.5)) throw Error("window needs 0 < a < 1/2");
    const MRule m_rule = options.m_rule ? *options.m_rule : power_m_rule(1.0, 2.0 / 3.0);
    HistogramTable table;

    std::vector<int> bins;
    std::vector<double> truth;  // finite_pmf: bin masses
    if (options.mode == HistogramMode::finite_pmf) {
        if (!f.has_atoms()) throw Error("finite-pmf mode needs a point-mass law");
        const int K = static_cast<int>(f.atoms().size());
        truth.assign(static_cast<std::size_t>(K), 0.0);
        for (const auto& atom : f.atoms()) {
            const auto k = std::min(static_cast<int>(atom.x * K), K - 1);
            truth[static_cast<std::size_t>(k)] += atom.mass;
        }
        bins.assign(n_grid.size(), K);
    } else {
        for (auto n : n_grid) {
            bins.push_back(options.bins ? *options.bins
                                        : std::max(1, static_cast<int>(std::lround(
                                                          std::cbrt(static_cast<double>(n))))));
        }
    }

    auto replicate = [&](std::size_t i, std::size_t n, std::optional<std::int64_t> m,
                         const RngContract& c) {
        const auto obs = draw(f, n, m, c);
        const auto hist = histogram_estimate(obs.ratios(), bins[i]);
        if (options.mode == HistogramMode::density) return density_ise(hist, f, a, 1.0 - a);
        const int K = bins[i];
        double sum = 0.0;
        int used = 0;
        const auto h = hist.heights();
        for (int k = 1; k <= K; ++k) {
            if (k < a * K || k > (1.0 - a) * K) continue;
            const double err = h[static_cast<std::size_t>(k - 1)] / K - truth[static_cast<std::size_t>(k - 1)];
            sum += err * err;
            ++used;
        }
        return used ? sum / used : 0.0;
    };

    table.replicates.resize(n_grid.size() * reps);
    parallel_for(table.replicates.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / reps;
        const std::size_t r = idx % reps;
        const auto m = m_rule(n_grid[i]);
        table.replicates[idx] = {n_grid[i], m, r, replicate(i, n_grid[i], m, rng.child(i).child(r))};
    });
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        std::vector<double> values;
        for (std::size_t r = 0; r < reps; ++r) values.push_back(table.replicates[i * reps + r].value);
        table.summary.push_back({n_grid[i], m_rule(n_grid[i]), mean_of(values), sd_of(values)});
    }
    table.bins = std::move(bins);
    return table;
}

SweepKind parse_sweep(const std::string& name) {
    if (name == "m") return SweepKind::m;
    if (name == "width") return SweepKind::width;
    if (name == "gaps") return SweepKind::gaps;
    if (name == "mu") return SweepKind::mu;
    if (name == "kappa") return SweepKind::kappa;
    throw Error("unknown sweep '" + name + "'");
}

const char* to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::m: return "m";
        case SweepKind::width: return "width";
        case SweepKind::gaps: return "gaps";
        case SweepKind::mu: return "mu";
        case SweepKind::kappa: return "kappa";
    }
    return "?";
}

ValleyModel parse_model(const std::string& name) {
    if (name == "linear") return ValleyModel::linear;
    if (name == "beta") return ValleyModel::beta;
    if (name == "unimodal") return ValleyModel::unimodal;
    throw Error("unknown model '" + name + "'");
}

const char* to_string(ValleyModel model) {
    switch (model) {
        case ValleyModel::linear: return "linear";
        case ValleyModel::beta: return "beta";
        case ValleyModel::unimodal: return "unimodal";
    }
    return "?";
}

std::vector<double> default_sweep_values(SweepKind kind) {
    switch (kind) {
        case SweepKind::m: return {1e2, 1e3, 2e3, 5e3, 1e4, std::numeric_limits<double>::infinity()};
        case SweepKind::width: return {0.6, 0.4, 0.2, 0.1, 0.0};
        case SweepKind::gaps: return {0.5, 0.3, 0.2, 0.1, 0.01};
        case SweepKind::mu: return {0.2, 0.35, 0.5, 0.7, 0.85};
        case SweepKind::kappa: return {1.0, 0.9, 0.8, 0.5, 0.2, 0.1, 0.01};
    }
    return {};
}

DensitySpec valley_for(ValleyModel model, const ValleyParams& p) {
    switch (model) {
        case ValleyModel::linear: return valley_density(p);
        case ValleyModel::beta: return beta_valley_density(p.c_l, p.c_r, p.delta_m, p.delta_l, p.delta_r);
        case ValleyModel::unimodal:
            return unimodal_misspec_density(p.c_l, p.c_r, p.delta_m, p.delta_l, p.delta_r);
    }
    throw Error("unknown model");
}

Quantiles quantiles(std::vector<double> values) {
    if (values.empty()) throw Error("quantiles of an empty sample");
    std::sort(values.begin(), values.end());
    auto q = [&](double p) {
        const double h = (static_cast<double>(values.size()) - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {q(0.1), q(0.25), q(0.5), q(0.75), q(0.9)};
}

SensitivityTable ucut_sensitivity_suite(SweepKind sweep, const SensitivityOptions& options,
                                        std::size_t reps, const RngContract& rng, unsigned threads) {
    if (reps == 0) throw Error("reps must be positive");
    const auto values = options.values.empty() ? default_sweep_values(sweep) : options.values;
    SensitivityTable table;
    table.sweep = sweep;
    table.rows.resize(values.size() * reps);

    parallel_for(table.rows.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / reps;
        const std::size_t r = idx % reps;
        const double v = values[i];
        ValleyParams p = options.base;
        std::optional<std::int64_t> m = options.m;
        if (sweep == SweepKind::m) {
            m = std::isinf(v) ? std::nullopt : std::optional<std::int64_t>(std::llround(v));
        }
        double mu = options.mu;
        double kappa = options.kappa;
        switch (sweep) {
            case SweepKind::m: break;
            case SweepKind::width:
                p.c_l = 0.5 - v / 2.0;
                p.c_r = 0.5 + v / 2.0;
                break;
            case SweepKind::gaps:
                p.delta_l = v;
                p.delta_r = v;
                break;
            case SweepKind::mu: mu = v; break;
            case SweepKind::kappa: kappa = v; break;
        }
        const auto f = valley_for(options.model, p);
        const auto shape = *f.valley();
        const auto config = default_config(mu, kappa * shape.gap_l, kappa * shape.gap_r, options.gamma);
        const auto obs = draw(f, options.n, m, rng.child(i).child(r), options.tau0);
        const auto result = ucut(obs, config);

        SensitivityRow row;
        row.value = v;
        row.rep = r;
        row.feasible = result.feasible;
        if (result.feasible) {
            row.c_l = result.c_l_star;
            row.c_r = result.c_r_star;
            row.score = evaluate_cutoff(obs.truth(), obs.ratios(), result.c_r_star);
        }
        table.rows[idx] = row;
    });

    for (std::size_t i = 0; i < values.size(); ++i) {
        SensitivitySummary s;
        s.value = values[i];
        s.reps = reps;
        std::vector<double> c_r;
        std::size_t controlled = 0;
        double power = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto& row = table.rows[i * reps + r];
            if (!row.feasible) continue;
            c_r.push_back(row.c_r);
            controlled += row.score.fdr <= 0.02 ? 1 : 0;
            power += row.score.power.value_or(0.0);
        }
        s.feasible = c_r.size();
        if (!c_r.empty()) {
            s.c_r = quantiles(c_r);
            s.fdr_controlled = static_cast<double>(controlled) / static_cast<double>(c_r.size());
            s.mean_power = power / static_cast<double>(c_r.size());
        }
        table.summary.push_back(s);
    }
    return table;
}

namespace {

std::string m_field(const std::optional<std::int64_t>& m) {
    return m ? std::to_string(*m) : "inf";
}

nlohmann::ordered_json m_json(const std::optional<std::int64_t>& m) {
    return m ? nlohmann::ordered_json(*m) : nlohmann::ordered_json("inf");
}

nlohmann::ordered_json summary_json(const std::vector<SummaryRow>& rows) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        out.push_back({{"n", row.n}, {"m", m_json(row.m)}, {"mean", row.mean}, {"sd", row.sd}});
    }
    return out;
}

std::string value_field(double v) {
    return std::isinf(v) ? "inf" : format_double(v);
}

nlohmann::ordered_json value_json(double v) {
    return std::isinf(v) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(v);
}

}  // namespace

std::string to_csv(const std::vector<ReplicateRow>& rows) {
    std::ostringstream os;
    os << "n,m,rep,value\n";
    for (const auto& row : rows) {
        os << row.n << ',' << m_field(row.m) << ',' << row.rep << ',' << format_double(row.value) << '\n';
    }
    return os.str();
}

std::string to_csv(const BoundsReport& report) {
    std::ostringstream os;
    os << "spec,m,deviation,lower,upper,truncated,violation\n";
    for (const auto& row : report.rows) {
        os << row.spec << ',' << row.m << ',' << format_double(row.deviation) << ','
           << format_double(row.lower) << ',' << format_double(row.upper) << ','
           << format_double(row.truncated) << ',' << (row.violation ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string to_csv(const SensitivityTable& table) {
    std::ostringstream os;
    os << to_string(table.sweep) << ",rep,feasible,c_l,c_r,discoveries,false_discoveries,fdr,power\n";
    for (const auto& row : table.rows) {
        os << value_field(row.value) << ',' << row.rep << ',' << (row.feasible ? 1 : 0) << ',';
        if (row.feasible) {
            os << format_double(row.c_l) << ',' << format_double(row.c_r) << ','
               << row.score.n_discoveries << ',' << row.score.n_false << ','
               << format_double(row.score.fdr) << ','
               << (row.score.power ? format_double(*row.score.power) : "");
        } else {
            os << ",,,,,";
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::ordered_json to_json(const RateTable& table) {
    nlohmann::ordered_json j;
    j["summary"] = summary_json(table.summary);
    j["slope"] = table.fit.slope;
    j["slope_se"] = table.fit.se;
    j["wide_ci"] = table.fit.wide_ci;
    return j;
}

nlohmann::ordered_json to_json(const BoundsReport& report) {
    nlohmann::ordered_json j;
    j["rows"] = report.rows.size();
    j["violations"] = report.violations;
    return j;
}

nlohmann::ordered_json to_json(const HistogramTable& table) {
    nlohmann::ordered_json j;
    j["summary"] = summary_json(table.summary);
    for (std::size_t i = 0; i < table.bins.size(); ++i) j["summary"][i]["bins"] = table.bins[i];
    if (table.summary.size() >= 2) {
        j["risk_ratio_last_first"] = table.summary.back().mean / table.summary.front().mean;
    }
    return j;
}

nlohmann::ordered_json to_json(const SensitivityTable& table) {
    nlohmann::ordered_json j;
    j["sweep"] = to_string(table.sweep);
    auto rows = nlohmann::ordered_json::array();
    for (const auto& s : table.summary) {
        nlohmann::ordered_json row;
        row["value"] = value_json(s.value);
        row["reps"] = s.reps;
        row["feasible"] = s.feasible;
        if (s.c_r) {
            row["c_r"] = {{"q10", s.c_r->q10},
                          {"q25", s.c_r->q25},
                          {"median", s.c_r->median},
                          {"q75", s.c_r->q75},
                          {"q90", s.c_r->q90}};
        } else {
            row["c_r"] = nullptr;
        }
        row["fdr_controlled"] = s.fdr_controlled;
        row["mean_power"] = s.mean_power;
        rows.push_back(row);
    }
    j["summary"] = rows;
    return j;
}

namespace {

class SuiteConfig {
public:
    SuiteConfig(const nlohmann::json& j, std::set<std::string> allowed) : j_(j) {
        if (j_.is_null()) j_ = nlohmann::json::object();
        if (!j_.is_object()) throw Error("suite config must be a JSON object");
        allowed.insert({"seed", "reps"});
        for (const auto& [key, value] : j_.items()) {
            if (!allowed.count(key)) throw Error("unknown config key '" + key + "'");
        }
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw Error("config key '" + key + "' has the wrong type");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const nlohmann::json& at(const std::string& key) const { return j_.at(key); }

private:
    nlohmann::json j_;
};

DensitySpec builtin_by_name(const std::string& name) {
    for (auto& named : builtin_specs()) {
        if (named.name == name) return named.spec;
    }
    throw Error("unknown density '" + name + "'");
}

MRule m_rule_from(const SuiteConfig& cfg, double c, double p) {
    if (!cfg.has("m_rule")) return power_m_rule(c, p);
    const auto& rule = cfg.at("m_rule");
    if (rule.is_string() && rule.get<std::string>() == "inf") return infinite_m_rule();
    if (!rule.is_object()) throw Error("m_rule must be \"inf\" or {\"c\": .., \"p\": ..}");
    return power_m_rule(rule.value("c", c), rule.value("p", p));
}

RngContract contract_from(const SuiteConfig& cfg) {
    return {cfg.get<std::uint64_t>("seed", 0), 0};
}

}  // namespace

SuiteOutput run_suite(const std::string& suite, const nlohmann::json& config, unsigned threads) {
    SuiteOutput out;
    if (suite == "rates") {
        const SuiteConfig cfg(config, {"density", "n_grid", "m_rule", "t0"});
        const auto f = builtin_by_name(cfg.get<std::string>("density", "two_step"));
        const auto n_grid = cfg.get<std::vector<std::size_t>>("n_grid", {1000, 4000, 16000});
        const auto reps = cfg.get<std::size_t>("reps", 30);
        const auto rng = contract_from(cfg);
        if (n_grid.empty()) throw Error("n_grid must be nonempty");

        const auto rates = rate_l1_grenander(f, n_grid, m_rule_from(cfg, 10.0, 2.0 / 3.0), reps,
                                             rng.child(0), threads);
        const std::size_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
        const std::vector<std::size_t> last{n_max};
        const auto coarse = rate_l1_grenander(f, last, power_m_rule(1.0, 1.0 / 3.0), reps,
                                              rng.child(1), threads);
        const auto fine = rate_l1_grenander(f, last, power_m_rule(10.0, 2.0 / 3.0), reps,
                                            rng.child(1), threads);
        const auto flat = flat_fluctuation(n_grid, m_rule_from(cfg, 10.0, 2.0 / 3.0),
                                           cfg.get<double>("t0", 0.5), reps, rng.child(2), threads);

        auto summary = to_json(rates);
        summary["minimal_m"] = {{"n", n_max},
                                {"error_small_m", coarse.summary[0].mean},
                                {"error_large_m", fine.summary[0].mean},
                                {"ratio", coarse.summary[0].mean / fine.summary[0].mean}};
        summary["flat_fluctuation"] = to_json(flat);
        out.files.emplace_back("rates.csv", to_csv(rates.replicates));
        out.files.emplace_back("rates_flat.csv", to_csv(flat.replicates));
        out.files.emplace_back("rates_summary.json", dump_json(summary));
    } else if (suite == "bounds") {
        const SuiteConfig cfg(config, {"m_grid", "window"});
        const auto m_grid = cfg.get<std::vector<std::int64_t>>("m_grid", {10, 100, 1000, 10000});
        const auto window = cfg.get<std::vector<double>>("window", {0.1, 0.9});
        if (window.size() != 2) throw Error("window must be [lo, hi]");
        const auto specs = builtin_specs();
        const auto report = deviation_bounds_report(specs, m_grid, {window[0], window[1]}, threads);
        out.violation = report.violations > 0;
        out.files.emplace_back("bounds.csv", to_csv(report));
        out.files.emplace_back("bounds_summary.json", dump_json(to_json(report)));
    } else if (suite == "histogram") {
        const SuiteConfig cfg(config, {"density", "n_grid", "a", "mode", "bins", "atoms", "m_rule"});
        auto f = builtin_by_name(cfg.get<std::string>("density", "beta_valley"));
        const auto n_grid = cfg.get<std::vector<std::size_t>>("n_grid", {1000, 8000});
        const auto mode = cfg.get<std::string>("mode", "density");
        HistogramOptions options;
        options.m_rule = m_rule_from(cfg, 1.0, 2.0 / 3.0);
        if (mode == "finite_pmf") {
            options.mode = HistogramMode::finite_pmf;
            f = discretized_pmf(f, cfg.get<int>("atoms", 20));
        } else if (mode != "density") {
            throw Error("unknown histogram mode '" + mode + "'");
        }
        if (cfg.has("bins")) options.bins = cfg.get<int>("bins", 1);
        const auto table = histogram_risk_experiment(f, n_grid, cfg.get<double>("a", 0.1),
                                                     cfg.get<std::size_t>("reps", 30),
                                                     contract_from(cfg), options, threads);
        out.files.emplace_back("histogram.csv", to_csv(table.replicates));
        out.files.emplace_back("histogram_summary.json", dump_json(to_json(table)));
    } else if (suite == "sensitivity") {
        const SuiteConfig cfg(config, {"sweep", "model", "n", "m", "mu", "kappa", "gamma", "tau0",
                                       "values", "c_l", "c_r", "delta_m", "delta_l", "delta_r",
                                       "s_l", "s_r"});
        SensitivityOptions options;
        options.model = parse_model(cfg.get<std::string>("model", "linear"));
        ValleyParams& p = options.base;
        p.c_l = cfg.get("c_l", p.c_l);
        p.c_r = cfg.get("c_r", p.c_r);
        p.delta_m = cfg.get("delta_m", p.delta_m);
        p.delta_l = cfg.get("delta_l", p.delta_l);
        p.delta_r = cfg.get("delta_r", p.delta_r);
        p.s_l = cfg.get("s_l", p.s_l);
        p.s_r = cfg.get("s_r", p.s_r);
        options.n = cfg.get<std::size_t>("n", options.n);
        if (cfg.has("m")) {
            const auto& m = cfg.at("m");
            if (m.is_string() && m.get<std::string>() == "inf") {
                options.m.reset();
            } else {
                options.m = cfg.get<std::int64_t>("m", 1000);
            }
        }
        options.mu = cfg.get("mu", options.mu);
        options.kappa = cfg.get("kappa", options.kappa);
        options.gamma = cfg.get("gamma", options.gamma);
        options.tau0 = cfg.get("tau0", options.tau0);
        options.values = cfg.get<std::vector<double>>("values", {});
        const auto sweep = parse_sweep(cfg.get<std::string>("sweep", "kappa"));
        const auto table = ucut_sensitivity_suite(sweep, options, cfg.get<std::size_t>("reps", 30),
                                                  contract_from(cfg), threads);
        out.files.emplace_back("sensitivity.csv", to_csv(table));
        out.files.emplace_back("sensitivity_summary.json", dump_json(to_json(table)));
    } else {
        throw Error("unknown suite '" + suite + "'");
    }
    return out;
}

}  // namespace ucut
