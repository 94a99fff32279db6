#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fbmin/error.hpp"
#include "fbmin/hodograph.hpp"
#include "fbmin/homogeneous.hpp"
#include "fbmin/io.hpp"

using namespace fbmin;
using doctest::Approx;

namespace {

const Box kSquare{-1.0, 1.0, -1.0, 1.0};
const Box kWindow{-0.5, 0.5, -0.1, 0.5};

HodographOptions options_with(std::size_t nodes) {
    HodographOptions o;
    o.tangential_nodes = nodes;
    o.level_nodes = nodes;
    return o;
}

}  // namespace

TEST_CASE("half-plane inverse map is linear in the level") {
    const GridSpec g = make_grid(kSquare, 129, 129);
    const double q0 = 1.5;
    const VectorField u = halfplane_field(HalfPlaneSpec{q0, {0.0, 1.0}, {1.0}}, g);
    const HodographPatch patch = hodograph_transform(u, kWindow, options_with(17));
    CHECK(patch.options.level_max == Approx(0.9 * 0.5 * q0));
    CHECK(patch.roundtrip_error <= 1e-10);
    for (std::size_t k = 0; k < patch.ygrid.node_count(); ++k) {
        CHECK(patch.v1[k] == Approx(patch.ygrid.node(k).y / q0).epsilon(1e-10));
        CHECK(patch.dv1_dy[k] == Approx(1.0 / q0).epsilon(1e-9));
        CHECK(std::abs(patch.dv1_dt[k]) <= 1e-9);
    }
    CHECK(operator_residual(patch).max_abs <= 1e-10);
    CHECK(fb_bc_residual(patch, [q0](Vec2) { return q0; }).max <= 1e-10);

    const EllipticityReport e = ellipticity_margin(patch);
    CHECK(e.margin == Approx(1.0).epsilon(1e-9));
    CHECK(e.flatness_ok);

    const ChainRuleResidual cr = chain_rule_residual(patch, u);
    CHECK(cr.normal <= 1e-9);
    CHECK(cr.tangential <= 1e-9);

    const Vec2 p = patch.physical(0.25, 0.1);
    CHECK(p == Vec2{0.25, 0.1});
}

TEST_CASE("ellipticity margin for Q = 1 and Q = 2") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    for (double q0 : {1.0, 2.0}) {
        const VectorField u = halfplane_field(HalfPlaneSpec{q0, {0.0, 1.0}, {1.0}}, g);
        const HodographPatch patch = hodograph_transform(u, kWindow, options_with(9));
        CHECK(ellipticity_margin(patch).margin == Approx(1.0).epsilon(1e-9));
    }
    // Q = 1/2 gives a = 1/4.
    const VectorField soft = halfplane_field(HalfPlaneSpec{0.5, {0.0, 1.0}, {1.0}}, g);
    CHECK(ellipticity_margin(hodograph_transform(soft, kWindow, options_with(9))).margin == Approx(0.25).epsilon(1e-9));
}

TEST_CASE("tilted affine profile along the x axis") {
    const GridSpec g = make_grid(kSquare, 129, 129);
    VectorField u(g, 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const Vec2 p = g.node(k);
        const double s = std::max(0.0, -p.x + 0.2 * p.y);  // positive towards -x
        u(0, k) = 0.8 * s;
        u(1, k) = 0.6 * s;
    }
    HodographOptions o = options_with(17);
    o.normal_axis = 0;
    o.orientation = -1;
    // An oblique kink is only resolved to O(h); stay a few cells above it.
    o.level_min = 0.1;
    const HodographPatch patch = hodograph_transform(u, {-0.5, 0.2, -0.4, 0.4}, o);
    CHECK(operator_residual(patch).max_abs <= 1e-8);
    for (std::size_t k = 0; k < patch.ygrid.node_count(); ++k) {
        const Vec2 node = patch.ygrid.node(k);
        CHECK(patch.v1[k] == Approx(node.y / 0.8 - 0.2 * node.x).epsilon(1e-9));
        CHECK(patch.dv1_dt[k] == Approx(-0.2).epsilon(1e-8));
        CHECK(patch.companions[0][k] == Approx(0.75 * node.y).epsilon(1e-9));
    }
    const EllipticityReport e = ellipticity_margin(patch);
    CHECK(e.margin > 0.0);
    CHECK(e.max_tangential_slope == Approx(0.2).epsilon(1e-8));
    CHECK(e.flatness_ok);
    CHECK_FALSE(ellipticity_margin(patch, 0.1).flatness_ok);
    const ChainRuleResidual cr = chain_rule_residual(patch, u);
    CHECK(cr.normal <= 1e-8);
    CHECK(cr.tangential <= 1e-8);
    CHECK(patch.physical(0.1, 0.3) == Vec2{-0.3, 0.1});
}

TEST_CASE("free boundary condition detects a wrong scale") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    const VectorField two = halfplane_field(HalfPlaneSpec{1.0, {0.0, 1.0}, {0.6, 0.8}}, g);
    const HodographPatch patch = hodograph_transform(two, kWindow, options_with(9));
    CHECK(fb_bc_residual(patch, WeightField::constant(g, 1.0)).max <= 1e-9);
    const BoundaryResidual wrong = fb_bc_residual(patch, WeightField::constant(g, 2.0));
    CHECK(wrong.max == Approx(0.75).epsilon(1e-9));
    CHECK(wrong.t.size() == 9);

    HodographOptions lifted = options_with(9);
    lifted.level_min = 0.05;
    CHECK_THROWS_AS(fb_bc_residual(hodograph_transform(two, kWindow, lifted), WeightField::constant(g, 1.0)),
                    DomainError);
}

TEST_CASE("transform errors") {
    const GridSpec g = make_grid(kSquare, 65, 65);
    VectorField bent(g, 1);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const double y = g.node(k).y;
        bent(0, k) = std::max(0.0, y * (1.0 - 2.0 * y));  // decreases beyond y = 1/4
    }
    CHECK_THROWS_AS(hodograph_transform(bent, kWindow, options_with(9)), DomainError);

    const VectorField hp = halfplane_field(HalfPlaneSpec{1.0, {0.0, 1.0}, {1.0}}, g);
    CHECK_THROWS_AS(hodograph_transform(hp, {-0.5, 0.5, 0.1, 0.5}, options_with(9)), DomainError);  // bottom above 0
    CHECK_THROWS_AS(hodograph_transform(hp, {-0.5, 0.5, -0.1, 1.5}, options_with(9)), DomainError);
    HodographOptions bad = options_with(9);
    bad.lead = 1;
    CHECK_THROWS_AS(hodograph_transform(hp, kWindow, bad), DomainError);
    bad = options_with(3);
    CHECK_THROWS_AS(hodograph_transform(hp, kWindow, bad), DomainError);
    bad = options_with(9);
    bad.level_max = 0.7;
    CHECK_THROWS_AS(hodograph_transform(hp, kWindow, bad), DomainError);
}

TEST_CASE("patch derivatives are exact on quadratics") {
    const GridSpec g = make_grid({0.0, 1.0, 0.0, 2.0}, 9, 11);
    const ScalarField f = ScalarField::sample(g, [](Vec2 p) { return 1.0 + p.x * p.x - 3.0 * p.x * p.y + 0.5 * p.y * p.y; });
    const PatchDerivatives d = patch_derivatives(f);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const Vec2 p = g.node(k);
        CHECK(d.dt[k] == Approx(2.0 * p.x - 3.0 * p.y).epsilon(1e-9));
        CHECK(d.dy[k] == Approx(-3.0 * p.x + p.y).epsilon(1e-9));
        CHECK(d.dtt[k] == Approx(2.0).epsilon(1e-8));
        CHECK(d.dyy[k] == Approx(1.0).epsilon(1e-8));
        CHECK(d.dty[k] == Approx(-3.0).epsilon(1e-8));
    }
    CHECK_THROWS_AS(patch_derivatives(ScalarField(make_grid({0.0, 1.0, 0.0, 1.0}, 3, 9))), DomainError);
}

TEST_CASE("flat patch selection on a half-plane") {
    const GridSpec g = make_grid(kSquare, 129, 129);
    const VectorField u = halfplane_field(HalfPlaneSpec{1.0, {0.0, -1.0}, {1.0}}, g);
    const FlatPatch fp = choose_flat_patch(u, 1e-12, 0.25, 0.3);
    CHECK(fp.sigma <= 2.0 * g.h() / 0.25);
    CHECK(fp.options.normal_axis == 1);
    CHECK(fp.options.orientation == -1);
    const HodographPatch patch = hodograph_transform(u, fp.window, fp.options);
    CHECK(operator_residual(patch).max_abs <= 1e-9);
}

TEST_CASE("patch export") {
    const auto dir = std::filesystem::temp_directory_path() / "fbmin_patch_export";
    std::filesystem::remove_all(dir);
    const GridSpec g = make_grid(kSquare, 65, 65);
    const VectorField u = halfplane_field(HalfPlaneSpec{1.0, {0.0, 1.0}, {0.6, 0.8}}, g);
    const HodographPatch patch = hodograph_transform(u, kWindow, options_with(9));
    export_patch(patch, dir, "p");
    for (const char* f : {"p_v1.fbm", "p_v2.fbm", "p_residual1.fbm", "p_residual2.fbm"})
        CHECK(std::filesystem::exists(dir / f));
    const ScalarField back = io::read_fbm(dir / "p_v1.fbm");
    for (std::size_t k = 0; k < back.grid().node_count(); ++k) CHECK(back[k] == patch.v1[k]);
    std::filesystem::remove_all(dir);
}
