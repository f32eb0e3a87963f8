#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ucut/density.hpp"
#include "ucut/model.hpp"

namespace ucut {

struct ConcaveMajorant;

StepCdf build_ecdf(std::span<const double> samples);

// A CDF on [0, 1] as seen by the distance routines: right-continuous value,
// left limit, and the nodes between which its shape is known.
struct CdfView {
    enum class Between { constant, linear, smooth };

    std::function<double(double)> value;
    std::function<double(double)> left_limit;
    std::vector<double> nodes;
    Between between = Between::smooth;
};

CdfView as_cdf(const StepCdf& cdf);
CdfView as_cdf(const DensitySpec& spec);
CdfView as_cdf(const ConcaveMajorant& majorant);

// sup_x |F1(x) - F2(x)| over [0, 1]. Exact (candidate enumeration over both
// node sets, at each node and its left limit) unless both sides are nonlinear
// between nodes; then each gap between nodes is also scanned and refined.
double ks_distance(const CdfView& f1, const CdfView& f2);

template <typename A, typename B>
double ks_distance(const A& f1, const B& f2) {
    return ks_distance(as_cdf(f1), as_cdf(f2));
}

// (int_0^1 |F1 - F2|^p dx)^(1/p), p >= 1; p = inf gives ks_distance.
// Closed form when both sides are piecewise linear/constant, otherwise
// adaptive Gauss-Kronrod per node interval at 1e-10 absolute tolerance.
double lp_distance(const CdfView& f1, const CdfView& f2, double p);

template <typename A, typename B>
double lp_distance(const A& f1, const B& f2, double p) {
    return lp_distance(as_cdf(f1), as_cdf(f2), p);
}

// Half-width eps with P[sup |F_n - F| > eps] <= delta by DKW (Massart constant).
double dkw_epsilon(std::size_t n, double delta);

}  // namespace ucut
