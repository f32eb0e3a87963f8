#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ucut/density.hpp"
#include "ucut/simulate.hpp"

using namespace ucut;

namespace {

// Integral of the pdf over [a, b], split at the spec's nodes.
double integrate_pdf(const DensitySpec& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double total = 0.0;
    auto nodes = f.nodes();
    double lo = a;
    for (double node : nodes) {
        if (node <= lo || node > b) continue;
        total += ts.integrate([&](double x) { return f.pdf(x); }, lo, node);
        lo = node;
    }
    if (lo < b) total += ts.integrate([&](double x) { return f.pdf(x); }, lo, b);
    return total;
}

}  // namespace

TEST_CASE("linear valley normalization constant from trapezoid areas") {
    const ValleyParams p;
    // Left trapezoid runs from 2.4 at 0 down to 1.5 at 0.3; right from 1.5 at 0.9 to 1.6 at 1.
    const double left = 0.5 * (2.4 + 1.5) * 0.3;
    const double middle = 1.0 * 0.6;
    const double right = 0.5 * (1.5 + 1.6) * 0.1;
    CHECK(left == doctest::Approx(0.585).epsilon(1e-14));
    CHECK(right == doctest::Approx(0.155).epsilon(1e-14));
    const double Z = left + middle + right;

    const auto f = valley_density(p);
    CHECK(f.z() == doctest::Approx(1.34).epsilon(1e-14));
    CHECK(f.z() == doctest::Approx(Z).epsilon(1e-14));
    REQUIRE(f.valley());
    CHECK(f.valley()->gap_l == doctest::Approx(0.5 / 1.34).epsilon(1e-14));
    CHECK(f.valley()->gap_l == doctest::Approx(0.37313).epsilon(1e-5));
    CHECK(f.valley()->gap_r == doctest::Approx(0.5 / 1.34).epsilon(1e-14));
    CHECK(f.pdf(0.0) == doctest::Approx(2.4 / 1.34).epsilon(1e-14));
    CHECK(f.kind() == DensityKind::linear_valley);
}

TEST_CASE("linear valley with vanishing gaps and slopes tends to uniform") {
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        ValleyParams p;
        p.delta_l = p.delta_r = 0.0;
        p.s_l = -eps;
        p.s_r = eps;
        const auto f = valley_density(p);
        CHECK(f.z() == doctest::Approx(1.0).epsilon(2 * eps));
        for (double x : {0.0, 0.1, 0.5, 0.95, 1.0}) {
            CHECK(std::abs(f.pdf(x) - 1.0) <= 2 * eps);
            CHECK(std::abs(f.cdf(x) - x) <= 2 * eps);
        }
    }
}

TEST_CASE("normalized gaps equal the jumps of the normalized density") {
    std::vector<DensitySpec> specs{valley_density({}), beta_valley_density(0.3, 0.9),
                                   unimodal_misspec_density(0.3, 0.9)};
    ValleyParams q;
    q.c_l = 0.2;
    q.c_r = 0.7;
    q.delta_l = 0.9;
    q.delta_r = 0.1;
    q.s_l = -2.0;
    q.s_r = 4.0;
    specs.push_back(valley_density(q));
    for (const auto& f : specs) {
        const auto v = *f.valley();
        CHECK(std::abs((f.pdf_left(v.c_l) - f.pdf(v.c_l)) - v.gap_l) <= 1e-12);
        CHECK(std::abs((f.pdf(v.c_r) - f.pdf_left(v.c_r)) - v.gap_r) <= 1e-12);
    }
}

TEST_CASE("steep left slope gives a nonpositive density") {
    ValleyParams p;
    p.s_l = 10.0;  // positive slope, so the left piece falls below zero at 0
    CHECK_THROWS_AS(valley_density(p), Error);
    ValleyParams r;
    r.s_r = -20.0;
    CHECK_THROWS_AS(valley_density(r), Error);
    ValleyParams c;
    c.c_l = 0.9;
    c.c_r = 0.3;
    CHECK_THROWS_AS(valley_density(c), Error);
}

TEST_CASE("beta valley decreases on the left piece") {
    const auto f = beta_valley_density(0.3, 0.9);
    double prev = f.pdf(1e-9);
    for (int k = 1; k <= 300; ++k) {
        const double x = 0.3 * k / 300.0;
        const double y = f.pdf_left(x);
        CHECK(y < prev);
        prev = y;
    }
    CHECK(std::isinf(f.f_max()));
    CHECK(f.kind() == DensityKind::beta_valley);
}

TEST_CASE("unimodal misspecification has an interior mode on the left") {
    const double c_l = 0.3;
    const auto f = unimodal_misspec_density(c_l, 0.9);
    const double mode = 0.5 / 4.5 * c_l;
    CHECK(f.pdf(mode) > f.pdf(mode - 1e-3));
    CHECK(f.pdf(mode) > f.pdf(mode + 1e-3));
    CHECK(f.pdf(mode) > f.pdf(1e-6));
    CHECK(f.pdf(mode) > f.pdf_left(c_l));
}

TEST_CASE("nonlinear valleys integrate to one") {
    for (const auto& f : {beta_valley_density(0.3, 0.9), unimodal_misspec_density(0.3, 0.9),
                          beta_valley_density(0.2, 0.6, 2.0, 0.1, 1.0)}) {
        CHECK(std::abs(integrate_pdf(f, 0.0, 1.0) - 1.0) <= 1e-10);
        CHECK(std::abs(f.cdf(1.0) - 1.0) <= 1e-12);
        CHECK(f.cdf(0.0) == 0.0);
        // The closed-form CDF agrees with quadrature of the pdf.
        for (double x : {0.05, 0.3, 0.5, 0.9, 0.95}) {
            CHECK(std::abs(f.cdf(x) - integrate_pdf(f, 0.0, x)) <= 1e-10);
        }
    }
}

TEST_CASE("uniform and two-step basics") {
    const auto u = DensitySpec::uniform();
    CHECK(u.cdf(0.25) == doctest::Approx(0.25));
    CHECK(u.f_min() == 1.0);
    CHECK(u.f_max() == 1.0);
    const auto t = DensitySpec::two_step();
    CHECK(t.pdf(0.25) == doctest::Approx(1.8));
    CHECK(t.pdf(0.75) == doctest::Approx(0.2));
    CHECK(t.cdf(0.5) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(t.f_min() == doctest::Approx(0.2));
    CHECK(t.f_max() == doctest::Approx(1.8));
}

TEST_CASE("quantile inverts the CDF") {
    for (const auto& f : {valley_density({}), beta_valley_density(0.3, 0.9), DensitySpec::two_step(),
                          unimodal_misspec_density(0.3, 0.9)}) {
        for (int k = 1; k < 50; ++k) {
            const double p = k / 50.0;
            CHECK(std::abs(f.cdf(f.quantile(p)) - p) <= 1e-11);
        }
    }
}

TEST_CASE("point masses") {
    const auto f = DensitySpec::point_masses({{0.2, 1.0}, {0.7, 3.0}});
    CHECK(f.has_atoms());
    CHECK(f.cdf(0.2) == doctest::Approx(0.25));
    CHECK(f.cdf_left(0.2) == 0.0);
    CHECK(f.cdf(0.69) == doctest::Approx(0.25));
    CHECK(f.cdf(0.7) == doctest::Approx(1.0));
    CHECK(f.quantile(0.25) == 0.2);
    CHECK(f.quantile(0.26) == 0.7);
    CHECK_THROWS_AS(DensitySpec::point_masses({}), Error);
    CHECK_THROWS_AS(DensitySpec::point_masses({{1.5, 1.0}}), Error);
    CHECK_THROWS_AS(DensitySpec::point_masses({{0.5, 0.0}}), Error);
}

TEST_CASE("pieces must tile the unit interval") {
    CHECK_THROWS_AS(DensitySpec::from_pieces(DensityKind::linear_valley, {LinearPiece{0.0, 0.5, 1.0, 0.0}}),
                    Error);
    CHECK_THROWS_AS(DensitySpec::from_pieces(DensityKind::linear_valley,
                                             {LinearPiece{0.0, 0.4, 1.0, 0.0},
                                              LinearPiece{0.5, 1.0, 1.0, 0.0}}),
                    Error);
    CHECK_THROWS_AS(DensitySpec::from_pieces(DensityKind::linear_valley, {LinearPiece{0.0, 1.0, 1.0, -2.0}}),
                    Error);
}
