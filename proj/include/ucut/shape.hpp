#pragma once

#include <span>
#include <vector>

#include "ucut/model.hpp"

namespace ucut {

struct Vertex {
    double x;
    double y;
};

// Piecewise-linear function through the vertices (x strictly increasing
// except for a possible vertical first edge at the support start).
struct ConcaveMajorant {
    std::vector<Vertex> vertices;

    double operator()(double x) const;
    double left_limit(double x) const;
};

// Least concave majorant of F on [a, b], anchored at (a, F(a-)) and (b, F(b)).
// Slopes strictly decrease; the majorant touches F at every interior vertex.
ConcaveMajorant least_concave_majorant(const StepCdf& cdf, double a, double b);

// Grenander estimator: left derivative of the least concave majorant of the
// empirical CDF of the samples on [a, b].
//
// Samples equal to a form a vertical first edge of the majorant, i.e. an atom
// the step density cannot carry. They are left out of the slope computation
// and the density is renormalized over the remaining samples; the density at a
// is the first height.
PiecewiseConstantDensity grenander_decreasing(std::span<const double> samples, double a, double b);

// Increasing counterpart: the right derivative of the greatest convex minorant
// of x -> F_n(x-) anchored at (a, 0) and (b, 1), which equals the decreasing
// estimator of the reflected samples, reflected back. Samples equal to b are
// handled like samples at a above.
PiecewiseConstantDensity grenander_increasing(std::span<const double> samples, double a, double b);

// Reflection x -> a + b - x of a density on [a, b], swapping the monotone flag.
PiecewiseConstantDensity reflect(const PiecewiseConstantDensity& d);

// Equal-width histogram on [0, 1] with L bins, B_l = [(l-1)/L, l/L), last bin closed.
PiecewiseConstantDensity histogram_estimate(std::span<const double> samples, int bins);

// Writes `left,right,height` rows.
std::string density_to_csv(const PiecewiseConstantDensity& d);

namespace detail {

// Sign of the orientation determinant of (p, q, r): > 0 when r lies to the
// left of p->q. Exact for any finite double inputs.
int orientation(const Vertex& p, const Vertex& q, const Vertex& r);

// Upper (concave) or lower (convex) hull of points sorted by x with distinct x.
std::vector<Vertex> monotone_chain(std::span<const Vertex> points, bool upper);

}  // namespace detail

}  // namespace ucut
