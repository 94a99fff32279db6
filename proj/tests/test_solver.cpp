#include <doctest.h>

#include <cmath>
#include <random>

#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"
#include "fbmin/homogeneous.hpp"
#include "fbmin/solver.hpp"

using namespace fbmin;
using doctest::Approx;

namespace {

const Box kSquare{-1.0, 1.0, -1.0, 1.0};

BoundaryData constant_data(const GridSpec& g, std::size_t m, double v) {
    std::vector<std::function<double(Vec2)>> f(m, [v](Vec2) { return v; });
    return BoundaryData::from_functions(g, f);
}

BoundaryData random_boundary(const GridSpec& g, std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> val(0.0, 3.0);
    BoundaryData b(g, m);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t k = 0; k < g.node_count(); ++k)
            if (g.is_boundary(k)) b.set(c, k, val(rng));
    return b;
}

Mask interior_mask(const GridSpec& g) {
    Mask m(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) m.set(k, !g.is_boundary(k));
    return m;
}

void check_admissible(const VectorField& u, const BoundaryData& g) {
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t k = 0; k < u.grid().node_count(); ++k) {
            REQUIRE(u(c, k) >= 0.0);
            if (u.grid().is_boundary(k)) REQUIRE(u(c, k) == g(c, k));
        }
}

void check_trace(const Solution& s, const WeightField& q) {
    for (const auto& r : s.trace) CHECK(r.j_after <= r.j_before);
    for (std::size_t k = 1; k < s.trace.size(); ++k)
        if (s.trace[k].eps == 0.0 && s.trace[k - 1].eps == 0.0) CHECK(s.trace[k].j_before <= s.trace[k - 1].j_after + 1e-12);
    CHECK(std::abs(evaluate_J(s.u, q, s.positivity_tol).total - s.energy.total) <= 1e-9 * std::max(1.0, s.energy.total));
}

}  // namespace

TEST_CASE("harmonic_replace reproduces constants and affine data") {
    const GridSpec g = make_grid(kSquare, 17, 17);
    const VectorField one = harmonic_replace(VectorField(g, 1), interior_mask(g), constant_data(g, 1, 1.0));
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(one(0, k) == Approx(1.0).epsilon(1e-9));

    const BoundaryData lin = BoundaryData::from_functions(g, {[](Vec2 p) { return p.x + 1.0; }});
    const VectorField u = harmonic_replace(VectorField(g, 1), interior_mask(g), lin, 1e-13);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(std::abs(u(0, k) - (g.node(k).x + 1.0)) <= 1e-10);
}

TEST_CASE("harmonic_replace lowers the Dirichlet energy and is idempotent") {
    const GridSpec g = make_grid(kSquare, 21, 21);
    std::mt19937_64 rng(2);
    const BoundaryData b = random_boundary(g, 2, rng);
    std::uniform_real_distribution<double> val(0.0, 3.0), coin(0.0, 1.0);
    VectorField u(g, 2);
    Mask mask(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        mask.set(k, coin(rng) < 0.7);
        for (std::size_t c = 0; c < 2; ++c) u(c, k) = g.is_boundary(k) ? b(c, k) : (mask[k] ? val(rng) : 0.0);
    }
    const double tol = 1e-12;
    const VectorField v = harmonic_replace(u, mask, b, tol);
    CHECK(dirichlet_energy(v) <= dirichlet_energy(u));
    const VectorField w = harmonic_replace(v, mask, b, tol);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(std::abs(w(c, k) - v(c, k)) <= 1e-9);
}

TEST_CASE("descent_step keeps fixed points and nonnegativity") {
    const GridSpec g = make_grid(kSquare, 17, 17);
    const WeightField q = WeightField::constant(g, 1.0);
    const BoundaryData zero = constant_data(g, 1, 0.0);
    const DescentResult fixed = descent_step(VectorField(g, 1), q, zero, 0.1, StepRule{});
    CHECK_FALSE(fixed.accepted);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(fixed.u(0, k) == 0.0);

    // Harmonic with the full mask for tiny data: the spurious positivity costs volume.
    const BoundaryData small = constant_data(g, 1, 1e-3);
    const VectorField wide = harmonic_replace(VectorField(g, 1), interior_mask(g), small);
    const double eps = 0.01;
    const DescentResult step = descent_step(wide, q, small, eps, StepRule{});
    CHECK(step.accepted);
    CHECK(step.j_after < step.j_before);
    CHECK(evaluate_J_smoothed(step.u, q, eps).total < evaluate_J_smoothed(wide, q, eps).total);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(step.u(0, k) >= 0.0);
}

TEST_CASE("truncation_move rejects on zero and nondegenerate fields, accepts films") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const WeightField q = WeightField::constant(g, 1.0);
    const TruncationResult none = truncation_move(VectorField(g, 1), q, {0.0, 0.0}, 0.25, 0.5);
    CHECK_FALSE(none.accepted);

    const double r = 0.25, rho = 0.5, delta = 1e-4;
    VectorField film(g, 1);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (norm(g.node(k)) <= rho * r) film(0, k) = delta;
    const TruncationResult t = truncation_move(film, q, {0.0, 0.0}, r, rho);
    CHECK(t.accepted);
    CHECK(t.delta_j < 0.0);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (norm(g.node(k)) <= rho * r) CHECK(t.candidate(0, k) == 0.0);

    const GridSpec fine = make_grid(kSquare, 513, 513);
    const VectorField hp = halfplane_field(HalfPlaneSpec{}, fine);
    const WeightField qf = WeightField::constant(fine, 1.0);
    for (double rr : {8.0 * fine.h(), 16.0 * fine.h(), 0.1}) CHECK_FALSE(truncation_move(hp, qf, {0.0, 0.0}, rr, rho).accepted);

    CHECK_THROWS_AS(truncation_move(hp, qf, {0.95, 0.0}, 0.1, rho), DomainError);
}

TEST_CASE("flip_polish removes a spurious positive node and returns to the oracle optimum") {
    const GridSpec g = make_grid(kSquare, 6, 6);  // 4x4 interior
    const WeightField q = WeightField::constant(g, 1.0);
    const BoundaryData b = constant_data(g, 1, 1e-3);
    const Solution oracle = brute_force_minimize(g, q, b);
    VectorField bumped = oracle.u;
    bumped(0, g.index(2, 2)) = 1e-3;
    REQUIRE(evaluate_J(bumped, q).total > oracle.energy.total);
    const Solution s = flip_polish(bumped, q, b, 3);
    CHECK(s.mask.count() < positivity_mask(bumped, positivity_tolerance(b)).count());
    for (const auto& r : s.trace) CHECK(r.j_after < r.j_before);
    CHECK(s.energy.total == Approx(oracle.energy.total).epsilon(1e-9));

    // Already optimal: nothing moves.
    const Solution again = flip_polish(s.u, q, b, 3);
    CHECK(again.trace.empty());
    CHECK(again.mask == s.mask);
}

TEST_CASE("minimize: zero data and high data") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const WeightField q = WeightField::constant(g, 1.0);
    const Solution z = minimize(g, q, constant_data(g, 2, 0.0), SolverConfig{});
    CHECK(z.energy.total == 0.0);
    CHECK(z.u.max_abs() == 0.0);

    const BoundaryData ten = constant_data(g, 1, 10.0);
    const Solution s = minimize(g, q, ten, SolverConfig{});
    CHECK(s.energy.total == Approx(4.0).epsilon(1e-9));
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(s.u(0, k) == Approx(10.0).epsilon(1e-9));
    check_admissible(s.u, ten);
    check_trace(s, q);
}

TEST_CASE("minimize on the two-component example") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const WeightField q = WeightField::constant(g, 1.0);
    const BoundaryData b = BoundaryData::from_functions(
        g, {[](Vec2 p) { return std::max(-p.y, 0.0); }, [](Vec2 p) { return std::max(p.x, 0.0); }});
    const Solution s = minimize(g, q, b, SolverConfig{});
    check_admissible(s.u, b);
    check_trace(s, q);
    // Common zero set in the upper-left corner region, positivity near the lower right.
    CHECK_FALSE(s.mask[g.index(8, 56)]);
    CHECK(s.u(0, g.index(8, 56)) == 0.0);
    CHECK(s.u(1, g.index(8, 56)) == 0.0);
    CHECK(s.mask[g.index(48, 16)]);
    CHECK(s.u(0, g.index(48, 16)) > 0.0);
    CHECK(s.u(1, g.index(48, 16)) > 0.0);
    // Discrete subharmonicity of every component.
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t j = 1; j + 1 < g.ny(); ++j)
            for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
                const double mean = 0.25 * (s.u(c, g.index(i + 1, j)) + s.u(c, g.index(i - 1, j)) +
                                            s.u(c, g.index(i, j + 1)) + s.u(c, g.index(i, j - 1)));
                CHECK(mean >= s.u(c, g.index(i, j)) - 1e-8);
            }
}

TEST_CASE("minimize is deterministic") {
    const GridSpec g = make_grid(kSquare, 33, 33);
    const WeightField q = WeightField::constant(g, 1.0);
    std::mt19937_64 rng(9);
    const BoundaryData b = random_boundary(g, 2, rng);
    const Solution a = minimize(g, q, b, SolverConfig{});
    const Solution c = minimize(g, q, b, SolverConfig{});
    CHECK(a.energy.total == c.energy.total);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(a.u(0, k) == c.u(0, k));
    CHECK(a.trace.size() == c.trace.size());
}

TEST_CASE("brute force examples") {
    const GridSpec g = make_grid(kSquare, 6, 6);
    const WeightField q = WeightField::constant(g, 1.0);
    const Solution z = brute_force_minimize(g, q, constant_data(g, 1, 0.0));
    CHECK(z.energy.total == 0.0);
    const Solution ten = brute_force_minimize(g, q, constant_data(g, 1, 10.0));
    CHECK(ten.mask.count() == g.node_count());
    const GridSpec big = make_grid(kSquare, 8, 8);  // 36 interior nodes
    CHECK_THROWS_AS(brute_force_minimize(big, WeightField::constant(big, 1.0), constant_data(big, 1, 1.0)), DomainError);
}

TEST_CASE("minimize agrees with the oracle on random small instances") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 16; ++t) {
        const std::size_t n = t % 2 == 0 ? 5 : 6;
        const GridSpec g = make_grid(kSquare, n, n);
        const WeightField q = WeightField::constant(g, 1.0);
        const BoundaryData b = random_boundary(g, 1 + t % 2, rng);
        const Solution s = minimize(g, q, b, SolverConfig{});
        const Solution o = brute_force_minimize(g, q, b);
        CHECK(o.energy.total <= s.energy.total + 1e-9);
        CHECK(s.energy.total <= o.energy.total * (1.0 + 1e-9) + 1e-12);
        check_admissible(s.u, b);
    }
}

TEST_CASE("solver configuration validation") {
    const GridSpec g = make_grid(kSquare, 33, 33);
    SolverConfig c;
    c.eps_schedule = {0.5, 0.6};
    CHECK_THROWS_AS(c.validate(g), DomainError);
    c.eps_schedule = {0.5, 0.25};
    CHECK_THROWS_AS(c.validate(g), DomainError);  // last eps above h
    c.eps_schedule = {0.5, g.h()};
    CHECK_NOTHROW(c.validate(g));
    c.step.backtrack = 1.0;
    CHECK_THROWS_AS(c.validate(g), DomainError);
}
