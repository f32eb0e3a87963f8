#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ucut/density.hpp"
#include "ucut/model.hpp"
#include "ucut/rng.hpp"

namespace ucut {

inline constexpr std::int64_t kMaxMixtureM = 100000;

// pmf[k] = P(X = k) for s ~ f, X | s ~ Binomial(m, s), k = 0..m.
std::vector<double> mixture_pmf(const DensitySpec& f, std::int64_t m);

// Law of the ratio X/m: a step CDF on the lattice {k/m}.
class MixtureLaw {
public:
    MixtureLaw(const DensitySpec& f, std::int64_t m);

    std::int64_t m() const { return m_; }
    const std::vector<double>& pmf() const { return pmf_; }
    // cum[k] = P(X <= k).
    const std::vector<double>& cumulative() const { return cum_; }

    double operator()(double x) const;
    double left_limit(double x) const;
    // Largest k with k/m <= x, or -1.
    std::int64_t lattice_floor(double x) const;

    StepCdf to_step_cdf() const;

private:
    std::int64_t m_;
    std::vector<double> pmf_;
    std::vector<double> cum_;
};

double mixture_cdf(const DensitySpec& f, std::int64_t m, double x);

struct Window {
    double lo = 0.0;
    double hi = 1.0;
};

// sup over x in the window of |F^(m)(x) - F(x)|, by enumeration of every
// lattice point, every node of f and the window ends, each at x and x-.
double deviation_sup(const DensitySpec& f, std::int64_t m, std::optional<Window> window = std::nullopt);
double deviation_sup(const DensitySpec& f, const MixtureLaw& law,
                     std::optional<Window> window = std::nullopt);

// Latent s_i by inverse CDF on child stream 0. For valley densities the
// labels are null left of c_l, alternative right of c_r, and null with
// probability tau0 in the middle (child stream 1); other densities get null
// labels throughout. Only the labels depend on tau0.
std::vector<Truth> draw_truth(const DensitySpec& f, std::size_t n, const RngContract& rng,
                              double tau0 = 0.5);

// X_i ~ Binomial(m, s_i) on child stream 2.
std::vector<std::int64_t> draw_counts(std::span<const Truth> truth, std::int64_t m,
                                      const RngContract& rng);

ObservationSet sample_binomial_mixture(const DensitySpec& f, std::size_t n, std::int64_t m,
                                       const RngContract& rng, double tau0 = 0.5);

// The m = infinity limit: ratios are the latent s_i themselves.
ObservationSet sample_direct(const DensitySpec& f, std::size_t n, const RngContract& rng,
                             double tau0 = 0.5);

}  // namespace ucut
