#include "ucut/density.hpp"

#include "ucut/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

namespace ucut {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Beta(alpha, beta) density on [0, 1] including the endpoint limits.
double beta_pdf(double a, double b, double y) {
    if (y <= 0.0) {
        if (a < 1.0) return kInf;
        return a == 1.0 ? b : 0.0;
    }
    if (y >= 1.0) {
        if (b < 1.0) return kInf;
        return b == 1.0 ? a : 0.0;
    }
    return boost::math::ibeta_derivative(a, b, y);
}

double beta_pdf_sup(double a, double b) {
    if (a < 1.0 || b < 1.0) return kInf;
    if (a == 1.0 && b == 1.0) return 1.0;
    return beta_pdf(a, b, (a - 1.0) / (a + b - 2.0));
}

double beta_pdf_inf(double a, double b) {
    if (a < 1.0 && b < 1.0) return beta_pdf(a, b, (a - 1.0) / (a + b - 2.0));
    return std::min(beta_pdf(a, b, 0.0), beta_pdf(a, b, 1.0));
}

double piece_mass(const Piece& p) {
    return piece_cdf(p, piece_hi(p));
}

Piece scaled(const Piece& p, double factor) {
    if (auto* lin = std::get_if<LinearPiece>(&p)) {
        return LinearPiece{lin->lo, lin->hi, lin->c0 * factor, lin->c1 * factor};
    }
    const auto& b = std::get<BetaPiece>(p);
    return BetaPiece{b.lo, b.hi, b.base * factor, b.weight * factor, b.alpha, b.beta};
}

double piece_inf(const Piece& p) {
    if (auto* lin = std::get_if<LinearPiece>(&p)) {
        return std::min(lin->c0 + lin->c1 * lin->lo, lin->c0 + lin->c1 * lin->hi);
    }
    const auto& b = std::get<BetaPiece>(p);
    return b.base + b.weight * beta_pdf_inf(b.alpha, b.beta) / (b.hi - b.lo);
}

double piece_sup(const Piece& p) {
    if (auto* lin = std::get_if<LinearPiece>(&p)) {
        return std::max(lin->c0 + lin->c1 * lin->lo, lin->c0 + lin->c1 * lin->hi);
    }
    const auto& b = std::get<BetaPiece>(p);
    if (b.weight == 0.0) return b.base;
    return b.base + b.weight * beta_pdf_sup(b.alpha, b.beta) / (b.hi - b.lo);
}

// Smallest x in the piece with piece_cdf(x) >= target.
double piece_quantile(const Piece& p, double target) {
    if (auto* lin = std::get_if<LinearPiece>(&p)) {
        // f0*t + c1*t^2/2 = target, t = x - lo; root in the cancellation-free form.
        const double f0 = lin->c0 + lin->c1 * lin->lo;
        const double disc = std::max(0.0, f0 * f0 + 2.0 * lin->c1 * target);
        const double denom = f0 + std::sqrt(disc);
        const double t = denom > 0.0 ? 2.0 * target / denom : 0.0;
        return std::clamp(lin->lo + t, lin->lo, lin->hi);
    }
    double lo = piece_lo(p);
    double hi = piece_hi(p);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (piece_cdf(p, mid) >= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace

const char* to_string(DensityKind kind) {
    switch (kind) {
        case DensityKind::uniform: return "uniform";
        case DensityKind::two_step: return "two-step";
        case DensityKind::point_mass_list: return "point-mass-list";
        case DensityKind::linear_valley: return "linear-valley";
        case DensityKind::beta_valley: return "beta-valley";
        case DensityKind::unimodal_misspec: return "unimodal-misspec";
    }
    return "unknown";
}

double piece_lo(const Piece& p) {
    return std::visit([](const auto& q) { return q.lo; }, p);
}

double piece_hi(const Piece& p) {
    return std::visit([](const auto& q) { return q.hi; }, p);
}

double piece_pdf(const Piece& p, double x) {
    if (auto* lin = std::get_if<LinearPiece>(&p)) return lin->c0 + lin->c1 * x;
    const auto& b = std::get<BetaPiece>(p);
    const double width = b.hi - b.lo;
    if (b.weight == 0.0) return b.base;
    return b.base + b.weight * beta_pdf(b.alpha, b.beta, (x - b.lo) / width) / width;
}

double piece_cdf(const Piece& p, double x) {
    const double lo = piece_lo(p);
    const double hi = piece_hi(p);
    x = std::clamp(x, lo, hi);
    if (auto* lin = std::get_if<LinearPiece>(&p)) {
        return (x - lo) * (lin->c0 + 0.5 * lin->c1 * (x + lo));
    }
    const auto& b = std::get<BetaPiece>(p);
    const double y = (x - lo) / (hi - lo);
    double acc = b.base * (x - lo);
    if (b.weight != 0.0 && y > 0.0) {
        acc += b.weight * (y >= 1.0 ? 1.0 : boost::math::ibeta(b.alpha, b.beta, y));
    }
    return acc;
}

DensitySpec DensitySpec::uniform() {
    return from_pieces(DensityKind::uniform, {LinearPiece{0.0, 1.0, 1.0, 0.0}});
}

DensitySpec DensitySpec::two_step() {
    return from_pieces(DensityKind::two_step,
                       {LinearPiece{0.0, 0.5, 1.8, 0.0}, LinearPiece{0.5, 1.0, 0.2, 0.0}});
}

DensitySpec DensitySpec::point_masses(std::vector<Atom> atoms) {
    if (atoms.empty()) throw Error("point-mass list is empty");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    double total = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        const auto& a = atoms[j];
        if (!(a.x >= 0.0 && a.x <= 1.0)) throw Error("atom location outside [0, 1]");
        if (!(a.mass >= 0.0)) throw Error("atom mass must be nonnegative");
        if (j > 0 && atoms[j - 1].x == a.x) throw Error("duplicate atom location");
        total += a.mass;
    }
    if (!(total > 0.0)) throw Error("point-mass list has zero total mass");
    DensitySpec spec;
    spec.kind_ = DensityKind::point_mass_list;
    spec.z_ = total;
    for (auto& a : atoms) a.mass /= total;
    spec.atoms_ = std::move(atoms);
    return spec;
}

DensitySpec DensitySpec::from_pieces(DensityKind kind, std::vector<Piece> pieces,
                                     std::optional<ValleyShape> unnormalized_valley) {
    if (pieces.empty()) throw Error("density needs at least one piece");
    if (piece_lo(pieces.front()) != 0.0 || piece_hi(pieces.back()) != 1.0) {
        throw Error("density pieces must cover [0, 1]");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        if (!(piece_hi(pieces[j]) > piece_lo(pieces[j]))) throw Error("empty density piece");
        if (j > 0 && piece_lo(pieces[j]) != piece_hi(pieces[j - 1])) {
            throw Error("density pieces must be contiguous");
        }
        if (!(piece_inf(pieces[j]) >= 0.0)) {
            throw Error("density is negative on [" + std::to_string(piece_lo(pieces[j])) +
                        ", " + std::to_string(piece_hi(pieces[j])) + "]");
        }
        total += piece_mass(pieces[j]);
    }
    if (!(total > 0.0)) throw Error("density has zero mass");
    DensitySpec spec;
    spec.kind_ = kind;
    spec.z_ = total;
    double before = 0.0;
    for (const auto& p : pieces) {
        spec.pieces_.push_back(scaled(p, 1.0 / total));
        spec.piece_mass_before_.push_back(before);
        before += piece_mass(spec.pieces_.back());
    }
    spec.piece_mass_before_.push_back(1.0);
    if (unnormalized_valley) {
        auto v = *unnormalized_valley;
        v.gap_l /= total;
        v.gap_r /= total;
        spec.valley_ = v;
    }
    return spec;
}

double DensitySpec::pdf(double x) const {
    if (has_atoms() || x < 0.0 || x > 1.0) return 0.0;
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const Piece& p) { return v < piece_lo(p); });
    const auto j = std::max<std::ptrdiff_t>(0, (it - pieces_.begin()) - 1);
    return piece_pdf(pieces_[static_cast<std::size_t>(j)], x);
}

double DensitySpec::pdf_left(double x) const {
    if (has_atoms() || x <= 0.0 || x > 1.0) return 0.0;
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                               [](const Piece& p, double v) { return piece_lo(p) < v; });
    const auto j = std::max<std::ptrdiff_t>(0, (it - pieces_.begin()) - 1);
    return piece_pdf(pieces_[static_cast<std::size_t>(j)], x);
}

double DensitySpec::cdf(double x) const {
    if (x < 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (has_atoms()) {
        double acc = 0.0;
        for (const auto& a : atoms_) {
            if (a.x <= x) acc += a.mass;
        }
        return std::min(acc, 1.0);
    }
    for (std::size_t j = 0; j < pieces_.size(); ++j) {
        if (x <= piece_hi(pieces_[j])) {
            return std::min(1.0, piece_mass_before_[j] + piece_cdf(pieces_[j], x));
        }
    }
    return 1.0;
}

double DensitySpec::cdf_left(double x) const {
    if (!has_atoms()) return x <= 0.0 ? 0.0 : cdf(x);
    if (x <= 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& a : atoms_) {
        if (a.x < x) acc += a.mass;
    }
    return std::min(acc, 1.0);
}

double DensitySpec::quantile(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    if (has_atoms()) {
        double acc = 0.0;
        for (const auto& a : atoms_) {
            acc += a.mass;
            if (acc >= p && a.mass > 0.0) return a.x;
        }
        return atoms_.back().x;
    }
    auto it = std::lower_bound(piece_mass_before_.begin() + 1, piece_mass_before_.end(), p);
    auto j = static_cast<std::size_t>(it - (piece_mass_before_.begin() + 1));
    j = std::min(j, pieces_.size() - 1);
    return piece_quantile(pieces_[j], p - piece_mass_before_[j]);
}

double DensitySpec::f_min() const {
    if (has_atoms()) return 0.0;
    double v = kInf;
    for (const auto& p : pieces_) v = std::min(v, piece_inf(p));
    return v;
}

double DensitySpec::f_max() const {
    if (has_atoms()) return kInf;
    double v = 0.0;
    for (const auto& p : pieces_) v = std::max(v, piece_sup(p));
    return v;
}

std::vector<double> DensitySpec::nodes() const {
    std::vector<double> out{0.0, 1.0};
    for (const auto& p : pieces_) {
        out.push_back(piece_lo(p));
        out.push_back(piece_hi(p));
    }
    for (const auto& a : atoms_) out.push_back(a.x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DensitySpec::Between DensitySpec::cdf_between_nodes() const {
    if (has_atoms()) return Between::constant;
    for (const auto& p : pieces_) {
        auto* lin = std::get_if<LinearPiece>(&p);
        if (lin == nullptr || lin->c1 != 0.0) return Between::smooth;
    }
    return Between::linear;
}

std::string DensitySpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind_) << " Z=" << z_;
    if (valley_) {
        os << " c_l=" << valley_->c_l << " c_r=" << valley_->c_r << " gap_l=" << valley_->gap_l
           << " gap_r=" << valley_->gap_r;
    }
    return os.str();
}

}  // namespace ucut
