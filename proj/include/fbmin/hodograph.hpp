#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fbmin/diagnostics.hpp"
#include "fbmin/grid.hpp"

namespace fbmin {

/**
 * Partial hodograph transform of a field near a flat piece of free boundary.
 *
 * Local coordinates: t runs along the tangential axis, s = orientation * (normal
 * axis coordinate) so that the lead component increases with s. The transform
 * trades s for the level y = u_lead, and v1(t, y) is the s where u_lead(t, s) = y.
 */
struct HodographOptions {
    std::size_t lead = 0;        ///< component used as the new coordinate
    int normal_axis = 1;         ///< 0: x, 1: y
    int orientation = 1;         ///< +1 when u_lead grows with the normal coordinate
    std::size_t tangential_nodes = 33;
    std::size_t level_nodes = 33;
    double level_min = 0.0;      ///< lowest level; 0 puts the free boundary on the bottom row
    double level_max = 0.0;      ///< 0 picks 0.9 * smallest column maximum
    /// Catmull-Rom interpolation of the source wherever its 4x4 stencil is
    /// inside the domain and positive; bilinear elsewhere.
    bool cubic = true;
};

struct HodographPatch {
    Box window;
    HodographOptions options;
    GridSpec ygrid;                       ///< x: tangential coordinate t, y: level
    ScalarField v1;                       ///< local normal coordinate s
    std::vector<ScalarField> companions;  ///< the other components along the inverse map
    ScalarField dv1_dt;
    ScalarField dv1_dy;
    double root_tolerance = 0.0;  ///< bisection bound on |y - u_lead(t, v1)|
    double roundtrip_error = 0.0;  ///< measured max |y - u_lead(t, v1)|

    /// Physical point of local coordinates (t, s).
    Vec2 physical(double t, double s) const;
};

HodographPatch hodograph_transform(const VectorField& u, const Box& window, const HodographOptions& options = {});

/// First and second differences on a patch grid, second order up to the edges.
struct PatchDerivatives {
    ScalarField dt, dy, dtt, dyy, dty;
};
PatchDerivatives patch_derivatives(const ScalarField& f);

struct OperatorResidual {
    ScalarField lead;                     ///< L(v1) v1 on interior nodes, 0 on the edge
    std::vector<ScalarField> companions;  ///< L(v1) v_k
    double max_abs = 0.0;
};

/// L(v1) f = a f_yy + f_tt - 2 (v1_t / v1_y) f_ty, a = (1 + v1_t^2) / v1_y^2.
OperatorResidual operator_residual(const HodographPatch& patch);

struct BoundaryResidual {
    std::vector<double> t;
    std::vector<double> residual;  ///< |Q^2 - a (1 + sum (v_k)_y^2)| / Q^2 per column
    double max = 0.0;
};

/// Free-boundary condition along the bottom row; requires level_min == 0.
BoundaryResidual fb_bc_residual(const HodographPatch& patch, const std::function<double(Vec2)>& q);
BoundaryResidual fb_bc_residual(const HodographPatch& patch, const WeightField& q);

struct EllipticityReport {
    double margin = 0.0;              ///< min smallest eigenvalue of [[a, -v1_t/v1_y], [-v1_t/v1_y, 1]]
    double max_tangential_slope = 0.0;  ///< max |v1_t|
    bool flatness_ok = true;          ///< max |v1_t| <= slope_limit
};
EllipticityReport ellipticity_margin(const HodographPatch& patch, double slope_limit = 1.0);

struct ChainRuleResidual {
    double normal = 0.0;      ///< max |1 - d_s u_lead * v1_y|
    double tangential = 0.0;  ///< max |d_t u_lead + d_s u_lead * v1_t|
};

/// Chain-rule identities at interior patch nodes, u derivatives by central
/// differences of the interpolant with step `step` (<= 0 means the source h).
ChainRuleResidual chain_rule_residual(const HodographPatch& patch, const VectorField& u, double step = 0.0);

struct FlatPatch {
    Vec2 point;          ///< interface point the window is centred on
    double sigma = 1.0;  ///< its flatness at radius half_width
    Box window;
    HodographOptions options;
};

/**
 * Window around the flattest of up to `candidates` interface points: normal
 * axis and orientation from the interface normal, lead component the largest
 * one `depth`/2 inside. The window spans half_width to both sides, half_width
 * into the zero set and depth into the positivity set.
 */
FlatPatch choose_flat_patch(const VectorField& u, double tol, double half_width, double depth,
                            std::size_t candidates = 9);

struct RefinementStudy {
    FlatPatch patch;
    std::vector<std::size_t> nodes;         ///< nodes per axis of each y-grid
    std::vector<double> operator_max;       ///< max |L(v1) v_k| over components per y-grid
    std::vector<double> ellipticity;        ///< margin per y-grid
    double ratio() const;                   ///< first over last operator_max
};

/**
 * Operator residual on the flattest patch (half width 16h, depth 40h) for
 * y-grid spacings 4h and 2h. Levels start at 8 h Q so that the interpolation
 * stencils stay off the interface; the y-grid stays at least twice as coarse
 * as the source, below which interpolation noise dominates.
 */
RefinementStudy hodograph_refinement_study(const VectorField& u, const WeightField& q, double tol);

/// v1, companions and operator residuals as .fbm files on the patch grid.
void export_patch(const HodographPatch& patch, const std::filesystem::path& dir, const std::string& stem);

}  // namespace fbmin
