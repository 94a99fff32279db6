#include <doctest.h>

#include <cmath>
#include <random>

#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"

using namespace fbmin;
using doctest::Approx;

namespace {

const Box kSquare{-1.0, 1.0, -1.0, 1.0};

VectorField sample(const GridSpec& g, std::vector<std::function<double(Vec2)>> fs) {
    std::vector<ScalarField> comps;
    for (auto& f : fs) comps.push_back(ScalarField::sample(g, f));
    return VectorField(std::move(comps));
}

VectorField random_field(const GridSpec& g, std::size_t m, std::mt19937_64& rng, double zero_fraction) {
    std::uniform_real_distribution<double> val(0.0, 2.0), coin(0.0, 1.0);
    VectorField u(g, m);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t k = 0; k < g.node_count(); ++k) u(c, k) = coin(rng) < zero_fraction ? 0.0 : val(rng);
    return u;
}

}  // namespace

TEST_CASE("dirichlet energy examples") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    CHECK(dirichlet_energy(VectorField(g, 2)) == 0.0);
    const Vec2 a{0.7, -1.3};
    const auto lin = sample(g, {[&](Vec2 p) { return dot(a, p) + 3.0; }});
    CHECK(dirichlet_energy(lin) == Approx(dot(a, a) * 4.0).epsilon(1e-12));
    const auto plus = sample(g, {[](Vec2 p) { return std::max(p.x, 0.0); }, [](Vec2) { return 0.0; }});
    CHECK(std::abs(dirichlet_energy(plus) - 2.0) <= 2.0 * g.h());
}

TEST_CASE("volume term and J examples") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const WeightField q = WeightField::constant(g, 1.0);
    CHECK(volume_term(VectorField(g, 2), q) == 0.0);
    CHECK(volume_term(VectorField(g, 2, 1.0), q) == Approx(4.0).epsilon(1e-14));
    const auto plus = sample(g, {[](Vec2 p) { return std::max(p.x, 0.0); }, [](Vec2) { return 0.0; }});
    // Half the box plus the column of cells touching x = h.
    CHECK(std::abs(volume_term(plus, q) - 2.0) <= 2.0 * g.h() + 1e-12);

    const EnergyBreakdown zero = evaluate_J(VectorField(g, 2), q);
    CHECK(zero.total == 0.0);
    const EnergyBreakdown e = evaluate_J(plus, q);
    CHECK(std::abs(e.total - 4.0) <= 4.0 * g.h());
    CHECK(e.total == e.dirichlet + e.volume);
    const EnergyBreakdown ones = evaluate_J(VectorField(g, 2, 1.0), q);
    CHECK(ones.total == Approx(4.0).epsilon(1e-14));
    CHECK(ones.dirichlet == 0.0);
}

TEST_CASE("volume term rejects a mismatched weight grid") {
    const GridSpec g = make_grid(kSquare, 9, 9);
    const GridSpec other = make_grid(kSquare, 11, 11);
    CHECK_THROWS_AS(evaluate_J(VectorField(g, 1), WeightField::constant(other, 1.0)), DomainError);
}

TEST_CASE("smoothed functional examples") {
    const GridSpec g = make_grid(kSquare, 33, 33);
    const WeightField q = WeightField::constant(g, 1.0);
    const double eps = 0.05;
    const EnergyBreakdown z = evaluate_J_smoothed(VectorField(g, 2), q, eps);
    CHECK(z.dirichlet == 0.0);
    CHECK(z.volume == 0.0);
    VectorField sat(g, 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) sat(0, k) = eps;
    CHECK(evaluate_J_smoothed(sat, q, eps).total == Approx(4.0).epsilon(1e-14));
    VectorField half(g, 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) half(0, k) = eps / 2.0;
    CHECK(evaluate_J_smoothed(half, q, eps).total == Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(evaluate_J_smoothed(half, q, 0.0), DomainError);
    CHECK(smoothed_indicator(0.0, eps) == 0.0);
    CHECK(smoothed_indicator(2.0 * eps, eps) == 1.0);
}

TEST_CASE("J is nonnegative and bounds the smoothed functional") {
    const GridSpec g = make_grid(kSquare, 17, 17);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> qv(0.5, 2.0);
    const WeightField q(ScalarField::sample(g, [&](Vec2) { return qv(rng); }), 0.5, 2.0);
    for (int t = 0; t < 20; ++t) {
        const VectorField u = random_field(g, 2, rng, 0.4);
        const double j = evaluate_J(u, q).total;
        CHECK(j >= 0.0);
        for (double eps : {1.0, 0.1, 1e-3})
            CHECK(evaluate_J_smoothed(u, q, eps).total <= dirichlet_energy(u) + volume_term(u, q) + 1e-12);
    }
}

TEST_CASE("metric d examples, symmetry and triangle inequality") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const double c = 1.7;
    const VectorField zero(g, 1), cst(g, 1, c);
    CHECK(metric_d(cst, cst) == 0.0);
    CHECK(metric_d(zero, cst) == Approx(2.0 * c + 4.0).epsilon(1e-13));

    const GridSpec s = make_grid(kSquare, 13, 11);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const VectorField u = random_field(s, 2, rng, 0.3);
        const VectorField v = random_field(s, 2, rng, 0.3);
        const VectorField w = random_field(s, 2, rng, 0.3);
        CHECK(metric_d(u, v) == metric_d(v, u));
        CHECK(metric_d(u, w) <= metric_d(u, v) + metric_d(v, w) + 1e-12);
    }
}

TEST_CASE("psi_rho examples") {
    const double rho = 0.2;
    CHECK(psi_rho({rho, 0.0}, rho) == 0.0);
    CHECK(psi_rho({0.05, 0.0}, rho) == 0.0);
    CHECK(psi_rho({0.0, 1.0}, rho) == Approx(1.0).epsilon(1e-15));
    const double s = std::sqrt(rho);
    CHECK(psi_rho({s / std::sqrt(2.0), s / std::sqrt(2.0)}, rho) == Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(psi_rho({0.5, 0.0}, 1.0), DomainError);
    CHECK_THROWS_AS(psi_rho({0.5, 0.0}, 0.0), DomainError);
}

TEST_CASE("smoothed gradient matches central differences at random nodes") {
    const GridSpec g = make_grid(kSquare, 21, 21);
    const WeightField q(ScalarField::sample(g, [](Vec2 p) { return 1.0 + 0.3 * p.x * p.x; }), 1.0, 1.3);
    const double eps = 0.2;
    // Smooth fields with |u| well inside (0, eps) or above it, away from kinks.
    const auto u = sample(g, {[](Vec2 p) { return 0.6 + 0.2 * std::sin(2 * p.x) * std::cos(p.y); },
                              [](Vec2 p) { return 0.03 + 0.01 * std::cos(3 * p.y + p.x); }});
    const auto small = sample(g, {[](Vec2 p) { return 0.05 + 0.02 * std::sin(2 * p.x + p.y); },
                                  [](Vec2 p) { return 0.04 + 0.01 * std::cos(3 * p.y); }});
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> node(0, g.node_count() - 1), comp(0, 1);
    for (const VectorField* f : {&u, &small}) {
        const VectorField grad = smoothed_gradient(*f, q, eps);
        int checked = 0;
        while (checked < 50) {
            const std::size_t k = node(rng), c = comp(rng);
            const double step = 1e-6;
            VectorField a = *f, b = *f;
            a(c, k) += step;
            b(c, k) -= step;
            const double fd = (evaluate_J_smoothed(a, q, eps).total - evaluate_J_smoothed(b, q, eps).total) / (2 * step);
            const double an = grad(c, k);
            CHECK(std::abs(fd - an) <= 1e-5 * std::max(std::abs(fd), 1e-3));
            ++checked;
        }
    }
}

TEST_CASE("h1 norm of a constant") {
    const GridSpec g = make_grid(kSquare, 9, 9);
    CHECK(h1_norm(VectorField(g, 1, 3.0)) == Approx(6.0).epsilon(1e-14));
}
