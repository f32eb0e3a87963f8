#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucut/density.hpp"
#include "ucut/mixture.hpp"
#include "ucut/model.hpp"
#include "ucut/rng.hpp"
#include "ucut/simulate.hpp"

namespace ucut {

// Maps n to m; nullopt means m = infinity (the latent s_i are observed).
using MRule = std::function<std::optional<std::int64_t>(std::size_t n)>;

// m = ceil(c * n^p), with a relative slack so exact powers are not bumped up.
MRule power_m_rule(double c, double p);
MRule infinite_m_rule();

// int_0^1 |g(x) - f(x)| dx.
double density_l1(const PiecewiseConstantDensity& g, const DensitySpec& f);
// int_a^b (g(x) - f(x))^2 dx.
double density_ise(const PiecewiseConstantDensity& g, const DensitySpec& f, double a, double b);

// One replicate: L1 error of the decreasing Grenander fit on [0, 1].
double grenander_l1_error(const DensitySpec& f, std::size_t n, std::optional<std::int64_t> m,
                          const RngContract& rng);

struct ReplicateRow {
    std::size_t n = 0;
    std::optional<std::int64_t> m;
    std::size_t rep = 0;
    double value = 0.0;
};

struct SummaryRow {
    std::size_t n = 0;
    std::optional<std::int64_t> m;
    double mean = 0.0;
    double sd = 0.0;
};

// Least-squares slope of log(mean) on log(n). The standard error propagates
// the replicate spread of each mean; wide_ci is set when fewer than 5
// replicates were used or the 95% half-width exceeds 0.1.
struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
    bool wide_ci = true;
};

struct RateTable {
    std::vector<ReplicateRow> replicates;
    std::vector<SummaryRow> summary;
    SlopeFit fit;
};

// Replicate r at grid index i uses rng.child(i).child(r).
RateTable rate_l1_grenander(const DensitySpec& f, std::span<const std::size_t> n_grid,
                            const MRule& m_rule, std::size_t reps, const RngContract& rng,
                            unsigned threads = 1);

// Sample sd of the decreasing Grenander fit at t0 on the uniform density,
// one summary row per n; the slope should be near -1/2.
RateTable flat_fluctuation(std::span<const std::size_t> n_grid, const MRule& m_rule, double t0,
                           std::size_t reps, const RngContract& rng, unsigned threads = 1);

struct NamedSpec {
    std::string name;
    DensitySpec spec;
};

struct BoundsRow {
    std::string spec;
    std::int64_t m = 0;
    double deviation = 0.0;
    double lower = 0.0;  // f_min / (m + 1)
    double upper = 0.0;  // f_max * sqrt(2 pi / m), may be inf
    double truncated = 0.0;  // deviation over the truncation window
    bool violation = false;
};

struct BoundsReport {
    std::vector<BoundsRow> rows;
    std::size_t violations = 0;
};

// Bounds are checked with an absolute slack of 1e-12.
BoundsReport deviation_bounds_report(std::span<const NamedSpec> specs,
                                     std::span<const std::int64_t> m_grid,
                                     Window truncation = {0.1, 0.9}, unsigned threads = 1);

// Uniform, two-step, default linear valley and default beta valley.
std::vector<NamedSpec> builtin_specs();

enum class HistogramMode {
    // Integrated squared error of the density histogram over [a, 1 - a].
    density,
    // Mean squared bin-mass error over bins k with aK <= k <= (1 - a)K, where
    // K is the number of atoms and bin k is centered on (k - 1/2)/K.
    finite_pmf,
};

struct HistogramOptions {
    HistogramMode mode = HistogramMode::density;
    // Default L = round(n^(1/3)) bins and m = ceil(n^(2/3)).
    std::optional<int> bins;
    std::optional<MRule> m_rule;
};

struct HistogramTable {
    std::vector<ReplicateRow> replicates;
    std::vector<SummaryRow> summary;
    std::vector<int> bins;  // per n_grid entry
};

HistogramTable histogram_risk_experiment(const DensitySpec& f, std::span<const std::size_t> n_grid,
                                         double a, std::size_t reps, const RngContract& rng,
                                         const HistogramOptions& options = {},
                                         unsigned threads = 1);

// Atoms at (k - 1/2)/K carrying the mass of f on each bin.
DensitySpec discretized_pmf(const DensitySpec& f, int K);

enum class SweepKind { m, width, gaps, mu, kappa };
enum class ValleyModel { linear, beta, unimodal };

SweepKind parse_sweep(const std::string& name);
const char* to_string(SweepKind kind);
ValleyModel parse_model(const std::string& name);
const char* to_string(ValleyModel model);

// Default sweep values; m = infinity is encoded as +inf.
std::vector<double> default_sweep_values(SweepKind kind);

struct SensitivityOptions {
    ValleyModel model = ValleyModel::linear;
    ValleyParams base;
    std::size_t n = 10000;
    std::optional<std::int64_t> m = 1000;
    double mu = 0.5;
    double kappa = 0.8;
    double gamma = 0.001;
    double tau0 = 0.5;
    // Empty means default_sweep_values.
    std::vector<double> values;
};

DensitySpec valley_for(ValleyModel model, const ValleyParams& p);

struct SensitivityRow {
    double value = 0.0;
    std::size_t rep = 0;
    bool feasible = false;
    double c_l = 0.0;
    double c_r = 0.0;
    CutoffScore score;
};

struct Quantiles {
    double q10, q25, median, q75, q90;
};

// Linear interpolation between order statistics (type 7). Needs a nonempty input.
Quantiles quantiles(std::vector<double> values);

struct SensitivitySummary {
    double value = 0.0;
    std::size_t feasible = 0;
    std::size_t reps = 0;
    std::optional<Quantiles> c_r;
    // Fraction of feasible replicates with FDR <= 0.02.
    double fdr_controlled = 0.0;
    double mean_power = 0.0;
};

struct SensitivityTable {
    SweepKind sweep = SweepKind::kappa;
    std::vector<SensitivityRow> rows;
    std::vector<SensitivitySummary> summary;
};

// Replicate r at value index i uses rng.child(i).child(r). The Ucut search
// bounds are mu -/+ 0.05 and d = kappa times the normalized true gaps.
SensitivityTable ucut_sensitivity_suite(SweepKind sweep, const SensitivityOptions& options,
                                        std::size_t reps, const RngContract& rng,
                                        unsigned threads = 1);

// Tidy CSV renderings and JSON summaries.
std::string to_csv(const std::vector<ReplicateRow>& rows);
std::string to_csv(const BoundsReport& report);
std::string to_csv(const SensitivityTable& table);
nlohmann::ordered_json to_json(const RateTable& table);
nlohmann::ordered_json to_json(const BoundsReport& report);
nlohmann::ordered_json to_json(const HistogramTable& table);
nlohmann::ordered_json to_json(const SensitivityTable& table);

struct SuiteOutput {
    // File name -> contents.
    std::vector<std::pair<std::string, std::string>> files;
    bool violation = false;
};

// Runs a named suite (rates, bounds, histogram, sensitivity) with settings
// read from a JSON object; unknown keys are rejected.
SuiteOutput run_suite(const std::string& suite, const nlohmann::json& config, unsigned threads = 1);

}  // namespace ucut
