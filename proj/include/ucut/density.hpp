#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ucut {

enum class DensityKind {
    uniform,
    two_step,
    point_mass_list,
    linear_valley,
    beta_valley,
    unimodal_misspec,
};

const char* to_string(DensityKind kind);

// f(u) = c0 + c1*u on [lo, hi].
struct LinearPiece {
    double lo, hi;
    double c0, c1;
};

// f(u) = base + weight * Beta((u-lo)/(hi-lo); alpha, beta) / (hi-lo) on [lo, hi].
struct BetaPiece {
    double lo, hi;
    double base;
    double weight;
    double alpha, beta;
};

using Piece = std::variant<LinearPiece, BetaPiece>;

struct Atom {
    double x;
    double mass;
};

// Cutoffs and normalized density gaps of a valley-shaped density.
struct ValleyShape {
    double c_l, c_r;
    double gap_l, gap_r;  // delta / Z
};

// Analytic ground-truth law on [0, 1]: absolutely continuous pieces that tile
// [0, 1], or a finite list of atoms. Stored normalized; z() is the factor the
// unnormalized construction was divided by.
class DensitySpec {
public:
    static DensitySpec uniform();
    // 1.8 on [0, 1/2], 0.2 on (1/2, 1].
    static DensitySpec two_step();
    static DensitySpec point_masses(std::vector<Atom> atoms);
    // Pieces must tile [0, 1] in order and be nonnegative; they are divided by
    // their total mass.
    static DensitySpec from_pieces(DensityKind kind, std::vector<Piece> pieces,
                                   std::optional<ValleyShape> unnormalized_valley = std::nullopt);

    DensityKind kind() const { return kind_; }
    double z() const { return z_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    bool has_atoms() const { return !atoms_.empty(); }
    const std::optional<ValleyShape>& valley() const { return valley_; }

    // Density; at a piece boundary the right piece is used (the last piece at 1).
    double pdf(double x) const;
    double pdf_left(double x) const;
    double cdf(double x) const;
    double cdf_left(double x) const;
    // Generalized inverse inf{x : F(x) >= p}.
    double quantile(double p) const;

    // Infimum / supremum of the density over [0, 1]; supremum may be +inf.
    double f_min() const;
    double f_max() const;

    // Piece boundaries and atom locations, sorted, including 0 and 1.
    std::vector<double> nodes() const;

    // How the CDF behaves strictly between consecutive nodes.
    enum class Between { constant, linear, smooth };
    Between cdf_between_nodes() const;

    std::string describe() const;

private:
    DensitySpec() = default;

    DensityKind kind_ = DensityKind::uniform;
    double z_ = 1.0;
    std::vector<Piece> pieces_;
    std::vector<double> piece_mass_before_;
    std::vector<Atom> atoms_;
    std::optional<ValleyShape> valley_;
};

// Mass of a piece between its lower end and x (clamped to the piece).
double piece_cdf(const Piece& piece, double x);
double piece_pdf(const Piece& piece, double x);
double piece_lo(const Piece& piece);
double piece_hi(const Piece& piece);

}  // namespace ucut
