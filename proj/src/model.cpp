#include "ucut/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ucut {

const char* to_string(Label label) {
    return label == Label::null ? "null" : "alternative";
}

Label label_from_string(const std::string& s) {
    if (s == "null" || s == "0") return Label::null;
    if (s == "alternative" || s == "alt" || s == "1") return Label::alternative;
    throw Error("unknown label '" + s + "'");
}

ObservationSet::ObservationSet(std::int64_t m, std::vector<std::int64_t> counts,
                               std::vector<std::string> ids, std::vector<Truth> truth)
    : m_(m), counts_(std::move(counts)), ids_(std::move(ids)), truth_(std::move(truth)) {
    if (m < 1) throw Error("binomial size m must be positive");
    if (counts_.empty()) throw Error("empty observation set");
    ratios_.reserve(counts_.size());
    const double dm = static_cast<double>(m);
    for (auto x : counts_) {
        if (x < 0 || x > m) {
            throw Error("count " + std::to_string(x) + " outside [0, " + std::to_string(m) + "]");
        }
        ratios_.push_back(static_cast<double>(x) / dm);
    }
    check_side_lengths();
}

ObservationSet ObservationSet::from_ratios(std::vector<double> ratios, std::vector<std::string> ids,
                                           std::vector<Truth> truth) {
    if (ratios.empty()) throw Error("empty observation set");
    for (double r : ratios) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error("ratio outside [0, 1]");
    }
    ObservationSet obs;
    obs.ratios_ = std::move(ratios);
    obs.ids_ = std::move(ids);
    obs.truth_ = std::move(truth);
    obs.check_side_lengths();
    return obs;
}

void ObservationSet::check_side_lengths() const {
    if (!ids_.empty() && ids_.size() != ratios_.size()) {
        throw Error("ids and counts differ in length");
    }
    if (!truth_.empty() && truth_.size() != ratios_.size()) {
        throw Error("truth and counts differ in length");
    }
}

std::string ObservationSet::id(std::size_t i) const {
    return ids_.empty() ? std::to_string(i) : ids_[i];
}

std::size_t ObservationSet::multiplicity(double x) const {
    return static_cast<std::size_t>(std::count(ratios_.begin(), ratios_.end(), x));
}

ObservationSet ObservationSet::subset(std::span<const std::size_t> indices) const {
    std::vector<std::string> ids;
    std::vector<Truth> truth;
    if (has_ids()) {
        ids.reserve(indices.size());
        for (auto i : indices) ids.push_back(ids_[i]);
    }
    if (has_truth()) {
        truth.reserve(indices.size());
        for (auto i : indices) truth.push_back(truth_[i]);
    }
    if (m_) {
        std::vector<std::int64_t> counts;
        counts.reserve(indices.size());
        for (auto i : indices) counts.push_back(counts_[i]);
        return ObservationSet(*m_, std::move(counts), std::move(ids), std::move(truth));
    }
    std::vector<double> ratios;
    ratios.reserve(indices.size());
    for (auto i : indices) ratios.push_back(ratios_[i]);
    return from_ratios(std::move(ratios), std::move(ids), std::move(truth));
}

std::vector<double> derive_ratios(const ObservationSet& obs) {
    return {obs.ratios().begin(), obs.ratios().end()};
}

StepCdf::StepCdf(std::vector<double> knots, std::vector<double> values,
                 std::optional<std::size_t> sample_size)
    : knots_(std::move(knots)), values_(std::move(values)), sample_size_(sample_size) {
    if (knots_.empty() || knots_.size() != values_.size()) {
        throw Error("step CDF needs matching, nonempty knots and values");
    }
    for (std::size_t j = 1; j < knots_.size(); ++j) {
        if (!(knots_[j] > knots_[j - 1])) throw Error("step CDF knots must increase strictly");
        if (values_[j] < values_[j - 1]) throw Error("step CDF values must not decrease");
    }
    if (values_.front() < 0.0 || values_.back() != 1.0) {
        throw Error("step CDF values must lie in [0, 1] and end at 1");
    }
}

double StepCdf::operator()(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    if (it == knots_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepCdf::left_limit(double x) const {
    auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
    if (it == knots_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

std::vector<std::int64_t> StepCdf::cumulative_counts() const {
    if (!sample_size_) throw Error("not an empirical CDF");
    std::vector<std::int64_t> out;
    out.reserve(values_.size());
    const double n = static_cast<double>(*sample_size_);
    for (double v : values_) out.push_back(std::llround(v * n));
    return out;
}

PiecewiseConstantDensity::PiecewiseConstantDensity(std::vector<double> breakpoints,
                                                   std::vector<double> heights,
                                                   Monotone monotone)
    : monotone_(monotone) {
    if (breakpoints.size() < 2 || heights.size() + 1 != breakpoints.size()) {
        throw Error("density needs K heights and K+1 breakpoints");
    }
    for (std::size_t k = 0; k < heights.size(); ++k) {
        if (!(breakpoints[k + 1] > breakpoints[k])) {
            throw Error("density breakpoints must increase strictly");
        }
        if (!(heights[k] >= 0.0) || !std::isfinite(heights[k])) {
            throw Error("density heights must be finite and nonnegative");
        }
    }
    // Monotone densities are kept canonical: neighbours never share a height.
    breakpoints_.push_back(breakpoints.front());
    for (std::size_t k = 0; k < heights.size(); ++k) {
        if (monotone_ != Monotone::none && !heights_.empty() && heights_.back() == heights[k]) {
            breakpoints_.back() = breakpoints[k + 1];
            continue;
        }
        heights_.push_back(heights[k]);
        breakpoints_.push_back(breakpoints[k + 1]);
    }
    for (std::size_t k = 1; k < heights_.size(); ++k) {
        if (monotone_ == Monotone::decreasing && heights_[k] > heights_[k - 1]) {
            throw Error("decreasing density has an increasing step");
        }
        if (monotone_ == Monotone::increasing && heights_[k] < heights_[k - 1]) {
            throw Error("increasing density has a decreasing step");
        }
    }
}

std::size_t PiecewiseConstantDensity::interval_of(double x) const {
    if (!(x >= lower() && x <= upper())) {
        throw Error("point " + std::to_string(x) + " outside density support");
    }
    const auto first = breakpoints_.begin() + 1;
    auto it = monotone_ == Monotone::decreasing ? std::lower_bound(first, breakpoints_.end(), x)
                                                : std::upper_bound(first, breakpoints_.end(), x);
    auto k = static_cast<std::size_t>(it - first);
    return std::min(k, heights_.size() - 1);
}

double PiecewiseConstantDensity::operator()(double x) const {
    return heights_[interval_of(x)];
}

double PiecewiseConstantDensity::cdf(double x) const {
    if (x <= lower()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < heights_.size(); ++k) {
        const double lo = breakpoints_[k];
        const double hi = breakpoints_[k + 1];
        if (x >= hi) {
            acc += heights_[k] * (hi - lo);
        } else {
            acc += heights_[k] * (x - lo);
            break;
        }
    }
    return acc;
}

double PiecewiseConstantDensity::mass() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < heights_.size(); ++k) {
        acc += heights_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
    }
    return acc;
}

double eval_density(const PiecewiseConstantDensity& d, double x) {
    return d(x);
}

}  // namespace ucut
