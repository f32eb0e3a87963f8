#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucut {

// All recoverable failures (bad input, violated preconditions) are reported
// with this exception type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Label { null, alternative };

const char* to_string(Label label);
Label label_from_string(const std::string& s);

// Ground truth attached to simulated observations.
struct Truth {
    double s = 0.0;
    Label label = Label::null;
};

// n binomial observations X_i ~ Binomial(m, s_i) sharing one trial count m.
//
// Counts are the primary representation; ratios are derived once as
// double(X_i)/double(m), i.e. the correctly rounded value of the rational
// X_i/m. Two ratios (or a ratio and a grid point built the same way) compare
// in the same order as the underlying rationals.
//
// Ratio-only sets (CFR tables without counts) carry no m and no counts.
class ObservationSet {
public:
    ObservationSet(std::int64_t m, std::vector<std::int64_t> counts,
                   std::vector<std::string> ids = {}, std::vector<Truth> truth = {});

    static ObservationSet from_ratios(std::vector<double> ratios,
                                      std::vector<std::string> ids = {},
                                      std::vector<Truth> truth = {});

    std::size_t size() const { return ratios_.size(); }
    bool has_counts() const { return m_.has_value(); }
    std::optional<std::int64_t> m() const { return m_; }

    std::span<const std::int64_t> counts() const { return counts_; }
    std::span<const double> ratios() const { return ratios_; }
    std::span<const std::string> ids() const { return ids_; }
    std::span<const Truth> truth() const { return truth_; }
    bool has_ids() const { return !ids_.empty(); }
    bool has_truth() const { return !truth_.empty(); }

    // Identifier of observation i; falls back to its zero-based index.
    std::string id(std::size_t i) const;

    // #{i : ratio_i == x}. Not used by the estimators.
    std::size_t multiplicity(double x) const;

    // Observations at the given indices, in that order.
    ObservationSet subset(std::span<const std::size_t> indices) const;

private:
    ObservationSet() = default;
    void check_side_lengths() const;

    std::optional<std::int64_t> m_;
    std::vector<std::int64_t> counts_;
    std::vector<double> ratios_;
    std::vector<std::string> ids_;
    std::vector<Truth> truth_;
};

std::vector<double> derive_ratios(const ObservationSet& obs);

// Right-continuous step CDF. values[j] = F(knots[j]); F = 0 left of the first
// knot. sample_size is set when the CDF is an empirical one, in which case
// values[j]*sample_size are integer counts.
class StepCdf {
public:
    StepCdf(std::vector<double> knots, std::vector<double> values,
            std::optional<std::size_t> sample_size = std::nullopt);

    double operator()(double x) const;
    double left_limit(double x) const;

    std::span<const double> knots() const { return knots_; }
    std::span<const double> values() const { return values_; }
    std::optional<std::size_t> sample_size() const { return sample_size_; }

    // Integer counts behind an empirical CDF.
    std::vector<std::int64_t> cumulative_counts() const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
    std::optional<std::size_t> sample_size_;
};

enum class Monotone { none, decreasing, increasing };

// Piecewise-constant density on [breakpoints.front(), breakpoints.back()].
//
// Interval membership at interior breakpoints follows the monotone flag:
//   decreasing  -> intervals are (t_{k-1}, t_k], the support start maps to the first
//   increasing  -> intervals are [t_{k-1}, t_k), the support end maps to the last
//   none        -> histogram bins [t_{k-1}, t_k), the last bin closed
// Adjacent intervals of a monotone density never share a height.
class PiecewiseConstantDensity {
public:
    PiecewiseConstantDensity(std::vector<double> breakpoints, std::vector<double> heights,
                             Monotone monotone);

    double lower() const { return breakpoints_.front(); }
    double upper() const { return breakpoints_.back(); }
    std::span<const double> breakpoints() const { return breakpoints_; }
    std::span<const double> heights() const { return heights_; }
    Monotone monotone() const { return monotone_; }
    std::size_t pieces() const { return heights_.size(); }

    // Index of the interval holding x, per the convention above.
    std::size_t interval_of(double x) const;
    double operator()(double x) const;

    // Integral of the density from lower() to x (clamped to the support).
    double cdf(double x) const;
    double mass() const;

private:
    std::vector<double> breakpoints_;
    std::vector<double> heights_;
    Monotone monotone_;
};

double eval_density(const PiecewiseConstantDensity& d, double x);

}  // namespace ucut
