#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "fbmin/error.hpp"
#include "fbmin/grid.hpp"
#include "fbmin/io.hpp"

using namespace fbmin;
using doctest::Approx;

namespace {
const Box kSquare{-1.0, 1.0, -1.0, 1.0};
}

TEST_CASE("make_grid spacing and corners") {
    const GridSpec g = make_grid(kSquare, 3, 3);
    CHECK(g.hx() == 1.0);
    CHECK(g.hy() == 1.0);
    CHECK(g.node(1, 1).x == 0.0);
    CHECK(g.node(1, 1).y == 0.0);

    const GridSpec f = make_grid(kSquare, 257, 257);
    CHECK(f.hx() == 1.0 / 128.0);
    CHECK(f.hy() == 1.0 / 128.0);

    const GridSpec r = make_grid({0.0, 1.0, 0.0, 2.0}, 3, 5);
    CHECK(r.hx() == 0.5);
    CHECK(r.hy() == 0.5);
}

TEST_CASE("make_grid reproduces the box corners exactly") {
    const Box b{-0.3, 0.7, 1.1, 2.9};
    const GridSpec g = make_grid(b, 37, 53);
    CHECK(g.node(0, 0).x == b.ax);
    CHECK(g.node(0, 0).y == b.ay);
    CHECK(g.node(36, 52).x == b.bx);
    CHECK(g.node(36, 52).y == b.by);
}

TEST_CASE("make_grid rejects degenerate input") {
    CHECK_THROWS_AS(make_grid(kSquare, 2, 5), DomainError);
    CHECK_THROWS_AS(make_grid({0.0, 0.0, 0.0, 1.0}, 5, 5), DomainError);
    CHECK_THROWS_AS(make_grid({1.0, 0.0, 0.0, 1.0}, 5, 5), DomainError);
}

TEST_CASE("interpolate reproduces constants, affine and bilinear fields") {
    const GridSpec g = make_grid(kSquare, 9, 9);
    CHECK(interpolate(ScalarField(g, 5.0), {0.123, -0.77}) == Approx(5.0).epsilon(1e-15));
    const auto x1 = ScalarField::sample(g, [](Vec2 p) { return p.x; });
    CHECK(interpolate(x1, {0.3, 0.7}) == Approx(0.3).epsilon(1e-14));

    const GridSpec fig = make_grid(kSquare, 257, 257);
    const auto xy = ScalarField::sample(fig, [](Vec2 p) { return p.x * p.y; });
    CHECK(interpolate(xy, {0.5, 0.5}) == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("interpolate is exact on per-axis affine fields at random probes") {
    const GridSpec g = make_grid({-0.5, 1.5, -2.0, 1.0}, 17, 23);
    auto f = [](Vec2 p) { return 1.5 - 2.0 * p.x + 0.25 * p.y + 3.0 * p.x * p.y; };
    const auto field = ScalarField::sample(g, f);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-0.5, 1.5), uy(-2.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Vec2 p{ux(rng), uy(rng)};
        CHECK(std::abs(interpolate(field, p) - f(p)) <= 1e-12);
    }
}

TEST_CASE("interpolate rejects points outside the box") {
    const GridSpec g = make_grid(kSquare, 5, 5);
    CHECK_THROWS_AS(interpolate(ScalarField(g), {1.5, 0.0}), DomainError);
}

TEST_CASE("cell_gradient on affine, constant and kinked fields") {
    const GridSpec g = make_grid(kSquare, 9, 9);
    const auto x1 = ScalarField::sample(g, [](Vec2 p) { return p.x; });
    for (std::size_t j = 0; j + 1 < g.ny(); ++j)
        for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
            const Vec2 d = cell_gradient(x1, i, j);
            CHECK(d.x == Approx(1.0).epsilon(1e-13));
            CHECK(std::abs(d.y) <= 1e-13);
        }
    const Vec2 z = cell_gradient(ScalarField(g, 3.0), 2, 5);
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);

    // h = 0.5, the middle cell spans [-0.25, 0.25] and straddles the kink.
    const GridSpec k = make_grid({-0.75, 0.25, 0.0, 1.0}, 3, 3);
    const auto plus = ScalarField::sample(k, [](Vec2 p) { return std::max(p.x, 0.0); });
    CHECK(cell_gradient(plus, 0, 0).x == 0.0);
    CHECK(cell_gradient(plus, 1, 0).x == Approx(0.5).epsilon(1e-15));
    CHECK(cell_gradient(plus, 1, 0).y == 0.0);
    CHECK_THROWS_AS(cell_gradient(plus, 2, 0), DomainError);
}

TEST_CASE("cell_gradient is linear") {
    const GridSpec g = make_grid(kSquare, 11, 7);
    const auto a = ScalarField::sample(g, [](Vec2 p) { return std::sin(3 * p.x) * p.y; });
    const auto b = ScalarField::sample(g, [](Vec2 p) { return std::exp(p.x - p.y); });
    ScalarField s(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) s[k] = a[k] + b[k];
    for (std::size_t j = 0; j + 1 < g.ny(); ++j)
        for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
            const Vec2 da = cell_gradient(a, i, j), db = cell_gradient(b, i, j), ds = cell_gradient(s, i, j);
            CHECK(std::abs(ds.x - da.x - db.x) <= 1e-12);
            CHECK(std::abs(ds.y - da.y - db.y) <= 1e-12);
        }
}

TEST_CASE("sphere_average examples") {
    const GridSpec g = make_grid(kSquare, 129, 129);
    CHECK(sphere_average(ScalarField(g, 3.0), {0.1, -0.2}, 0.5, 64) == Approx(3.0).epsilon(1e-15));
    const auto x1 = ScalarField::sample(g, [](Vec2 p) { return p.x; });
    CHECK(std::abs(sphere_average(x1, {0.0, 0.0}, 0.5, 64)) <= 1e-14);
    const auto plus = ScalarField::sample(g, [](Vec2 p) { return std::max(p.x, 0.0); });
    const double r = 0.5;
    CHECK(sphere_average(plus, {0.0, 0.0}, r, 512) == Approx(r / std::numbers::pi).epsilon(1e-3));
    CHECK_THROWS_AS(sphere_average(plus, {0.8, 0.0}, 0.5, 64), DomainError);
    CHECK_THROWS_AS(sphere_average(plus, {0.0, 0.0}, 0.5, 4), DomainError);
}

TEST_CASE("ball_integrate examples") {
    const GridSpec g = make_grid(kSquare, 129, 129);
    const double h = g.h();
    for (double r : {0.1, 0.25, 0.5, 0.9}) {
        const double area = ball_integrate(ScalarField(g, 1.0), {0.013, -0.02}, r);
        CHECK(std::abs(area - std::numbers::pi * r * r) <= 2.0 * h / r * std::numbers::pi * r * r);
        // Exact cut-cell areas make the constant case exact to round-off.
        CHECK(area == Approx(std::numbers::pi * r * r).epsilon(1e-12));
    }
    CHECK(ball_integrate(ScalarField(g, 0.0), {0.0, 0.0}, 0.5) == 0.0);
    const auto half = ScalarField::sample(g, [](Vec2 p) { return p.x > 0.0 ? 1.0 : 0.0; });
    const double r = 0.5;
    CHECK(std::abs(ball_integrate(half, {0.0, 0.0}, r) - std::numbers::pi * r * r / 2.0) <= 2.0 * h * r);
    CHECK_THROWS_AS(ball_integrate(half, {0.9, 0.0}, 0.5), DomainError);
}

TEST_CASE("rect_disk_area against closed forms") {
    const double r = 1.0;
    CHECK(rect_disk_area(-2.0, 2.0, -2.0, 2.0, r) == Approx(std::numbers::pi).epsilon(1e-14));
    CHECK(rect_disk_area(0.0, 2.0, 0.0, 2.0, r) == Approx(std::numbers::pi / 4.0).epsilon(1e-14));
    CHECK(rect_disk_area(-0.1, 0.1, -0.1, 0.1, r) == Approx(0.04).epsilon(1e-14));
    CHECK(rect_disk_area(2.0, 3.0, 0.0, 1.0, r) == 0.0);
    // Strip 0 <= x <= 1/2 of the unit disk: r^2 asin(1/2) + (1/2) sqrt(3)/2.
    CHECK(rect_disk_area(0.0, 0.5, -2.0, 2.0, r) ==
          Approx(std::asin(0.5) + 0.5 * std::sqrt(3.0) / 2.0).epsilon(1e-13));
}

TEST_CASE("positivity tolerance and mask") {
    CHECK(positivity_tolerance(0.5) == kPositivityRelTol);
    CHECK(positivity_tolerance(30.0) == Approx(30.0 * kPositivityRelTol));
    const GridSpec g = make_grid(kSquare, 5, 5);
    VectorField u(g, 2);
    u(0, 7) = 2e-10;
    u(1, 8) = 5e-11;
    const Mask m = positivity_mask(u, 1e-10);
    CHECK(m[7]);
    CHECK_FALSE(m[8]);
    CHECK(m.count() == 1);
}

TEST_CASE("weight and boundary data validation") {
    const GridSpec g = make_grid(kSquare, 5, 5);
    CHECK_THROWS_AS(WeightField(ScalarField(g, 1.0), 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(WeightField(ScalarField(g, 2.0), 0.5, 1.0), DomainError);
    BoundaryData b(g, 1);
    CHECK_THROWS_AS(b.set(0, g.index(2, 2), 1.0), DomainError);
    CHECK_THROWS_AS(b.set(0, g.index(0, 2), -1.0), DomainError);
    CHECK(positivity_tolerance(b) == kPositivityRelTol);
}

TEST_CASE("csv and fbm round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "fbmin_test_io";
    std::filesystem::create_directories(dir);
    const GridSpec g = make_grid({-1.0, 2.0, 0.5, 1.5}, 7, 4);
    const auto f = ScalarField::sample(g, [](Vec2 p) { return std::exp(p.x) * std::cos(p.y) / 3.0; });
    io::write_fbm(f, dir / "f.fbm");
    const ScalarField b = io::read_fbm(dir / "f.fbm");
    CHECK(b.grid() == g);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(b[k] == f[k]);
    io::write_csv(f, dir / "f.csv");
    const ScalarField c = io::read_csv(dir / "f.csv");
    CHECK(c.grid() == g);
    for (std::size_t k = 0; k < g.node_count(); ++k) CHECK(c[k] == f[k]);
    CHECK(std::filesystem::file_size(dir / "f.fbm") == 4 + 8 + 32 + 8 * g.node_count());
}

TEST_CASE("pgm mask export marks positive nodes 255, top row first") {
    const auto dir = std::filesystem::temp_directory_path() / "fbmin_test_io";
    std::filesystem::create_directories(dir);
    const GridSpec g = make_grid(kSquare, 4, 3);
    Mask m(g);
    m.set(g.index(1, 2), true);  // top row
    io::write_pgm(m, dir / "m.pgm");
    std::size_t w = 0, h = 0;
    const auto px = io::read_pgm(dir / "m.pgm", w, h);
    CHECK(w == 4);
    CHECK(h == 3);
    CHECK(px[1] == 255);
    CHECK(px[0] == 0);
    CHECK(std::count(px.begin(), px.end(), 255) == 1);
}
