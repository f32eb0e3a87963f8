#include "ucut/simulate.hpp"

#include <cmath>
#include <numeric>

#include "ucut/mixture.hpp"
#include "ucut/parallel.hpp"

namespace ucut {

namespace {

void check_cutoffs(double c_l, double c_r) {
    if (!(c_l > 0.0 && c_r < 1.0 && c_l <= c_r)) throw Error("cutoffs need 0 < c_l <= c_r < 1");
}

void check_heights(double delta_m, double delta_l, double delta_r) {
    if (!(delta_m > 0.0)) throw Error("flat height delta_m must be positive");
    if (!(delta_l >= 0.0 && delta_r >= 0.0)) throw Error("gaps delta_l, delta_r must be nonnegative");
}

std::vector<Piece> with_middle(Piece left, double c_l, double c_r, double delta_m, Piece right) {
    std::vector<Piece> pieces{std::move(left)};
    if (c_r > c_l) pieces.push_back(LinearPiece{c_l, c_r, delta_m, 0.0});
    pieces.push_back(std::move(right));
    return pieces;
}

DensitySpec bump_valley(DensityKind kind, double c_l, double c_r, double delta_m, double delta_l,
                        double delta_r, double w_l, double a_l, double b_l, double w_r, double a_r,
                        double b_r) {
    check_cutoffs(c_l, c_r);
    check_heights(delta_m, delta_l, delta_r);
    return DensitySpec::from_pieces(
        kind,
        with_middle(BetaPiece{0.0, c_l, delta_m + delta_l, w_l, a_l, b_l}, c_l, c_r, delta_m,
                    BetaPiece{c_r, 1.0, delta_m + delta_r, w_r, a_r, b_r}),
        ValleyShape{c_l, c_r, delta_l, delta_r});
}

}  // namespace

DensitySpec valley_density(const ValleyParams& p) {
    check_cutoffs(p.c_l, p.c_r);
    check_heights(p.delta_m, p.delta_l, p.delta_r);
    const double top_l = p.delta_m + p.delta_l;
    const double top_r = p.delta_m + p.delta_r;
    const double at_zero = top_l - p.s_l * p.c_l;
    const double at_one = top_r + p.s_r * (1.0 - p.c_r);
    if (!(at_zero > 0.0)) throw Error("valley density is nonpositive near 0; slope s_l too steep");
    if (!(at_one > 0.0)) throw Error("valley density is nonpositive near 1; slope s_r too steep");
    return DensitySpec::from_pieces(
        DensityKind::linear_valley,
        with_middle(LinearPiece{0.0, p.c_l, top_l - p.s_l * p.c_l, p.s_l}, p.c_l, p.c_r, p.delta_m,
                    LinearPiece{p.c_r, 1.0, top_r - p.s_r * p.c_r, p.s_r}),
        ValleyShape{p.c_l, p.c_r, p.delta_l, p.delta_r});
}

DensitySpec beta_valley_density(double c_l, double c_r, double delta_m, double delta_l, double delta_r) {
    return bump_valley(DensityKind::beta_valley, c_l, c_r, delta_m, delta_l, delta_r, 3.0 / 20.0, 0.5,
                       1.5, 1.0 / 20.0, 2.0, 0.8);
}

DensitySpec unimodal_misspec_density(double c_l, double c_r, double delta_m, double delta_l,
                                     double delta_r) {
    return bump_valley(DensityKind::unimodal_misspec, c_l, c_r, delta_m, delta_l, delta_r, 3.0, 1.5,
                       5.0, 1.0, 2.5, 1.5);
}

std::vector<Truth> sample_valley(const DensitySpec& f, std::size_t n, const RngContract& rng,
                                 TwoGroupParams two_group) {
    if (!f.valley()) throw Error("sample_valley needs a valley density");
    return draw_truth(f, n, rng, two_group.tau0);
}

CutoffScore evaluate_cutoff(std::span<const Truth> truth, std::span<const double> ratios, double cutoff) {
    if (truth.size() != ratios.size()) throw Error("truth and ratios differ in length");
    if (truth.empty()) throw Error("no truth to score against");
    CutoffScore score;
    std::size_t n_alt = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool alt = truth[i].label == Label::alternative;
        n_alt += alt ? 1 : 0;
        if (ratios[i] > cutoff) {
            ++score.n_discoveries;
            if (alt) {
                ++hits;
            } else {
                ++score.n_false;
            }
        }
    }
    score.fdr = static_cast<double>(score.n_false) /
                static_cast<double>(std::max<std::size_t>(1, score.n_discoveries));
    if (n_alt > 0) score.power = static_cast<double>(hits) / static_cast<double>(n_alt);
    return score;
}

BootstrapSummary bootstrap_cutoff(const ObservationSet& obs, const UcutConfig& config, double frac,
                                  std::size_t B, const RngContract& rng, unsigned threads) {
    if (!(frac > 0.0 && frac <= 1.0)) throw Error("bootstrap fraction must lie in (0, 1]");
    if (B < 2) throw Error("bootstrap needs B >= 2");
    config.validate();
    const std::size_t n = obs.size();
    const auto size = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n)));
    if (size < 1) throw Error("bootstrap subsample is empty");

    BootstrapSummary out;
    out.replicates.resize(B);
    parallel_for(B, threads, [&](std::size_t b) {
        Rng eng = rng.engine().split(b);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // Partial Fisher-Yates: the first `size` slots form the subsample.
        for (std::size_t i = 0; i < size && i + 1 < n; ++i) {
            const auto j = i + static_cast<std::size_t>(eng.below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(size);
        try {
            const auto result = ucut(obs.subset(idx), config);
            if (result.feasible) out.replicates[b] = result.c_r_star;
        } catch (const Error&) {
            // A subsample with an empty half counts as infeasible.
        }
    });

    double sum = 0.0;
    for (const auto& r : out.replicates) {
        if (r) {
            sum += *r;
            ++out.n_feasible;
        }
    }
    if (out.n_feasible == 0) throw InfeasibleError("all bootstrap replicates are infeasible");
    out.mean = sum / static_cast<double>(out.n_feasible);
    if (out.n_feasible > 1) {
        double ss = 0.0;
        for (const auto& r : out.replicates) {
            if (r) ss += (*r - out.mean) * (*r - out.mean);
        }
        out.sd = std::sqrt(ss / static_cast<double>(out.n_feasible - 1));
    }
    return out;
}

}  // namespace ucut
