#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"
#include "fbmin/homogeneous.hpp"

using namespace fbmin;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

// First eigenvalue of the second-difference matrix with n interior nodes on (0, theta).
double discrete_eigenvalue(double theta, std::size_t n) {
    const double h = theta / static_cast<double>(n + 1);
    const double s = std::sin(kPi * h / (2.0 * theta));
    return 4.0 * s * s / (h * h);
}

}  // namespace

TEST_CASE("arc eigenvalue examples") {
    CHECK(arc_first_eigenvalue(kPi, 256) == Approx(discrete_eigenvalue(kPi, 256)).epsilon(1e-10));
    CHECK(arc_first_eigenvalue(kPi, 2048) == Approx(1.0).epsilon(1e-6));
    CHECK(arc_first_eigenvalue(kPi / 2.0, 2048) == Approx(4.0).epsilon(1e-6));
    const double near_full = 2.0 * kPi - 1e-3;
    CHECK(arc_first_eigenvalue(near_full, 2048) == Approx(std::pow(kPi / near_full, 2)).epsilon(1e-6));
    CHECK(arc_first_eigenvalue(near_full, 2048) < 0.26);
}

TEST_CASE("arc eigenvector is the positive sine profile") {
    const ArcEigen e = arc_eigenpair(kPi, 255);
    REQUIRE(e.eigenvector.size() == 255);
    double mx = 0.0;
    for (std::size_t i = 0; i < 255; ++i) {
        CHECK(e.eigenvector[i] > 0.0);
        mx = std::max(mx, e.eigenvector[i]);
        const double angle = kPi * static_cast<double>(i + 1) / 256.0;
        CHECK(e.eigenvector[i] == Approx(std::sin(angle)).epsilon(1e-6));
    }
    CHECK(mx == Approx(1.0));
}

TEST_CASE("arc eigenvalue converges at second order") {
    const double theta = 2.0;
    const double exact = std::pow(kPi / theta, 2);
    const double e1 = std::abs(arc_first_eigenvalue(theta, 63) - exact);
    const double e2 = std::abs(arc_first_eigenvalue(theta, 127) - exact);
    const double e3 = std::abs(arc_first_eigenvalue(theta, 255) - exact);
    CHECK(e1 / e2 == Approx(4.0).epsilon(0.02));
    CHECK(e2 / e3 == Approx(4.0).epsilon(0.02));
}

TEST_CASE("arc eigen errors") {
    CHECK_THROWS_AS(arc_first_eigenvalue(0.0, 64), DomainError);
    CHECK_THROWS_AS(arc_first_eigenvalue(2.0 * kPi, 64), DomainError);
    CHECK_THROWS_AS(arc_first_eigenvalue(1.0, 8), DomainError);
}

TEST_CASE("homogeneous classification selects the half-plane") {
    const HomogeneousClassification c = classify_homogeneous_2d();
    CHECK(c.theta_star == Approx(kPi).epsilon(1e-6));
    CHECK(c.lambda_at_pi == Approx(1.0).epsilon(1e-6));
    CHECK(c.lambda_at_full < 1.0);
    CHECK(c.full_circle_excluded);
    CHECK(c.monotone);
    CHECK(c.ground_state_positive);
    CHECK(c.ground_state_error < 1e-6);
    REQUIRE(c.sweep_theta.size() == c.sweep_lambda.size());
    for (std::size_t k = 1; k < c.sweep_lambda.size(); ++k) CHECK(c.sweep_lambda[k] < c.sweep_lambda[k - 1]);
}

TEST_CASE("half-plane fields") {
    const GridSpec g = make_grid({-1.0, 1.0, -1.0, 1.0}, 65, 65);
    const VectorField u = halfplane_field(HalfPlaneSpec{}, g);
    CHECK(u(0, g.index(48, 10)) == Approx(0.5));
    CHECK(u(0, g.index(10, 10)) == 0.0);

    const VectorField two = halfplane_field(HalfPlaneSpec{2.0, {0.0, -1.0}, {0.6, 0.8}}, g);
    const std::size_t k = g.index(20, 8);  // y = -0.75
    CHECK(two(1, k) / two(0, k) == Approx(4.0 / 3.0));
    CHECK(two.norm_at(k) == Approx(1.5));

    CHECK(evaluate_J(u, WeightField::constant(g, 1.0)).total == Approx(4.0).epsilon(1e-12));

    CHECK_THROWS_AS(halfplane_field(HalfPlaneSpec{1.0, {1.0, 1.0}, {1.0}}, g), DomainError);
    CHECK_THROWS_AS(halfplane_field(HalfPlaneSpec{1.0, {1.0, 0.0}, {0.5, 0.5}}, g), DomainError);
    CHECK_THROWS_AS(halfplane_field(HalfPlaneSpec{0.0, {1.0, 0.0}, {1.0}}, g), DomainError);
    CHECK_THROWS_AS(halfplane_field(HalfPlaneSpec{1.0, {1.0, 0.0}, {}}, g), DomainError);
}
