#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ucut/model.hpp"

namespace ucut {

struct UcutConfig {
    double mu = 0.5;
    double d_l = 0.1;
    double d_r = 0.01;
    double c_l_max = 0.45;
    double c_r_min = 0.55;
    double gamma = 0.001;

    // Throws unless 0 <= c_l_max < mu < c_r_min <= 1, gamma > 0, d_l, d_r >= 0.
    void validate() const;
};

// Suggested search bounds: mu -/+ 0.05, clipped to [0, 1].
UcutConfig default_config(double mu, double d_l, double d_r, double gamma = 0.001);

struct MassSplit {
    std::size_t n_l = 0, n_mid = 0, n_r = 0;
    double alpha_l = 0.0, alpha_mid = 0.0, alpha_r = 0.0;
};

// Left counts ratios <= x, middle (x, y], right > y.
MassSplit empirical_masses(std::span<const double> ratios, double x, double y);
MassSplit empirical_masses(const ObservationSet& obs, double x, double y);

struct FittedHalves {
    PiecewiseConstantDensity g_l;  // decreasing on [0, mu]
    PiecewiseConstantDensity g_r;  // increasing on [mu, 1]
    double alpha_l_mu;
};

// Ratios <= mu go left, ratios > mu go right.
FittedHalves fit_halves(const ObservationSet& obs, double mu);

struct GapThresholds {
    double d_l_tilde;
    double d_r_tilde;
};

GapThresholds gap_thresholds(const ObservationSet& obs, double c_l, double c_r, double mu,
                             double d_l, double d_r);

// Simplified log-likelihood with the halves renormalized to [0, c_l] and
// (c_r, 1]. Returns -inf when a region with samples has no fitted mass.
double simplified_loglik(const ObservationSet& obs, double c_l, double c_r,
                         const PiecewiseConstantDensity& g_l, const PiecewiseConstantDensity& g_r);

struct UcutResult {
    bool feasible = false;
    double c_l_star = 0.0;
    double c_r_star = 1.0;
    PiecewiseConstantDensity g_l;
    PiecewiseConstantDensity g_r;
    double alpha_l_mu = 0.0;
    double loglik = 0.0;
    // Empirical masses at the chosen pair.
    MassSplit masses;
    std::size_t feasible_pairs = 0;
};

// Grid points as exact rationals rounded once to double.
std::vector<double> left_grid(const UcutConfig& config);
std::vector<double> right_grid(const UcutConfig& config);

// Algorithm 1. The pair search is split across `threads` workers by c_l row;
// the first maximum in (c_l, c_r) loop order wins, as in a sequential scan.
UcutResult ucut(const ObservationSet& obs, const UcutConfig& config, unsigned threads = 1);

// Alpha_l * g_l / G_l(c_l) on [0, c_l], flat middle, alpha_r * g_r / (1 - G_r(c_r))
// on (c_r, 1]. Requires a feasible result.
PiecewiseConstantDensity stitched_density(const UcutResult& result);

// {c_l, c_r, alpha_l_mu, loglik, feasible, g_l: [[l, r, h], ...], g_r: [...]}
std::string to_json(const UcutResult& result, const UcutConfig& config);

}  // namespace ucut
