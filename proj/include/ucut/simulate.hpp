#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ucut/cutoff.hpp"
#include "ucut/density.hpp"
#include "ucut/model.hpp"
#include "ucut/rng.hpp"

namespace ucut {

// Raised when no feasible answer exists (as opposed to bad input).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Unnormalized linear valley: slope s_l ending at (c_l, delta_m + delta_l),
// flat delta_m on the middle, slope s_r starting at (c_r, delta_m + delta_r).
struct ValleyParams {
    double c_l = 0.3;
    double c_r = 0.9;
    double delta_m = 1.0;
    double delta_l = 0.5;
    double delta_r = 0.5;
    double s_l = -3.0;
    double s_r = 1.0;
};

struct TwoGroupParams {
    double tau0 = 0.5;
};

DensitySpec valley_density(const ValleyParams& p);

// Appendix-style nonlinear valleys. The left and right pieces are the valley
// baseline delta_m + delta_{l,r} plus a scaled beta bump:
//   beta valley:  Beta(0.5, 1.5) * 3/20 on [0, c_l], Beta(2, 0.8) * 1/20 on (c_r, 1]
//   unimodal:     Beta(1.5, 5) * 3 on [0, c_l],       Beta(2.5, 1.5) on (c_r, 1]
// with the bump argument rescaled to each piece.
DensitySpec beta_valley_density(double c_l, double c_r, double delta_m = 1.0, double delta_l = 0.5,
                                double delta_r = 0.5);
DensitySpec unimodal_misspec_density(double c_l, double c_r, double delta_m = 1.0,
                                     double delta_l = 0.5, double delta_r = 0.5);

// Latent values and two-group labels; see draw_truth.
std::vector<Truth> sample_valley(const DensitySpec& f, std::size_t n, const RngContract& rng,
                                 TwoGroupParams two_group = {});

struct CutoffScore {
    std::size_t n_discoveries = 0;
    std::size_t n_false = 0;
    double fdr = 0.0;
    // Unset when there are no alternatives.
    std::optional<double> power;
};

// Discoveries are ratios strictly above the cutoff.
CutoffScore evaluate_cutoff(std::span<const Truth> truth, std::span<const double> ratios, double cutoff);

struct BootstrapSummary {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n_feasible = 0;
    // c_r of each replicate in replicate order; unset when infeasible.
    std::vector<std::optional<double>> replicates;
};

// B subsamples of floor(frac * n) without replacement, replicate b drawn from
// child stream b. Throws InfeasibleError when every replicate is infeasible.
BootstrapSummary bootstrap_cutoff(const ObservationSet& obs, const UcutConfig& config, double frac,
                                  std::size_t B, const RngContract& rng, unsigned threads = 1);

}  // namespace ucut
