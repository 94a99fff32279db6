#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbmin/grid.hpp"

namespace fbmin {

/**
 * Interface between positive and zero nodes of a mask.
 *
 * One point per grid edge whose end nodes differ, at the edge midpoint.
 * Normals point from the positivity set into the zero set. `weights` is the
 * length element carried by each point: the spacing between parallel edges
 * times |normal . edge direction|, which integrates straight lines exactly.
 * `polyline` is the length of the marching-squares curve through the points.
 */
struct FreeBoundary {
    std::vector<Vec2> points;
    std::vector<Vec2> normals;
    std::vector<double> weights;
    std::vector<std::size_t> positive_node;  ///< positive end of each edge
    std::vector<std::size_t> zero_node;      ///< zero end of each edge
    std::vector<Vec2> crossing;              ///< unit edge direction, positive end to zero end
    double polyline = 0.0;
    double h = 0.0;

    std::size_t size() const { return points.size(); }
    double length() const;
};

/// Throws NoFreeBoundary when the mask is constant. fit_radius <= 0 means 4h.
FreeBoundary extract_free_boundary(const Mask& mask, double fit_radius = 0.0);

/// Least-squares line through the interface points within fit_radius of p.
/// Throws DomainError with fewer than 4 such points.
Vec2 estimate_normal(const FreeBoundary& fb, Vec2 p, double fit_radius);

/// Distance from p to the nearest free-boundary point of the mask (infinity when none).
double distance_to_free_boundary(const Mask& mask, Vec2 p);

/// Up to `count` interface points whose ball of radius `radius` lies in the
/// domain, spread along the interface (quantiles of the x-sorted candidates).
std::vector<std::size_t> select_fb_points(const FreeBoundary& fb, const GridSpec& grid, double radius,
                                          std::size_t count);

/// Dyadic radii r_min * 2^k up to r_max (both inclusive when they fit).
std::vector<double> dyadic_radii(double r_min, double r_max);

// ---------------------------------------------------------------------------

struct ScalingRow {
    double r = 0.0;
    std::vector<double> sphere_avg_over_r;  ///< per component
    double sup_over_r = 0.0;
    double zero_density = 0.0;
    double lipschitz = 0.0;  ///< max edge quotient |u(a)-u(b)|/|a-b| in B_{r/3}
};

struct ScalingReport {
    Vec2 x;
    std::vector<ScalingRow> rows;
    double sup_min = 0.0, sup_max = 0.0;
    double density_min = 0.0, density_max = 0.0;
    double lipschitz_max = 0.0;
    double avg_max = 0.0;  ///< largest sphere average / r over components and radii
};

/// Growth, nondegeneracy, density and Lipschitz quotients around an interface point.
ScalingReport scaling_report(const VectorField& u, double tol, Vec2 x, const std::vector<double>& radii);

/// sup of |u| over the closed ball: nodes inside plus a refined scan of the circle.
double ball_sup(const VectorField& u, Vec2 x, double r);

struct FlatnessResult {
    double sigma = 1.0;
    Vec2 normal{0.0, 0.0};  ///< zero when no interface is found in the ball
};

/// Smallest sigma in [0,1] with every node of B_rho(x) beyond sigma*rho along
/// the outer normal in the zero set.
FlatnessResult flatness(const VectorField& u, double tol, Vec2 x, double rho);

// ---------------------------------------------------------------------------

struct FbConditionPoint {
    Vec2 point;
    Vec2 normal;
    bool skipped = false;  ///< a probe left the domain
    double slope = 0.0;
    double residual = 0.0;  ///< |slope - Q| / Q
    std::vector<double> component_slopes;
    double squared_residual = 0.0;  ///< |sum slope_i^2 - Q^2| / Q^2
};

struct FbConditionReport {
    std::vector<FbConditionPoint> points;
    double median = 0.0;
    double max = 0.0;
    double squared_median = 0.0;
    std::size_t skipped = 0;
};

/**
 * Inner slope of |u| at every interface point: |u| sampled at offsets
 * {2h,4h,8h} along the inward normal, fitted by a line with free intercept.
 */
FbConditionReport fb_condition_residual(const VectorField& u, const WeightField& q, const FreeBoundary& fb);

struct WeightTraceReport {
    std::size_t samples = 0;
    double normalization_error = 0.0;  ///< max |sum w_i^2 - 1|
    double min_weight = 0.0;
    double holder_quarter = 0.0;  ///< seminorm with exponent 1/4
    double holder_half = 0.0;     ///< seminorm with exponent 1/2
    std::vector<double> mean_weight;
};

/// w_i = u_i/|u| on the positive nodes of B_r(center).
WeightTraceReport weight_traces(const VectorField& u, double tol, Vec2 center, double radius,
                                std::uint64_t seed = 1, std::size_t pairs = 4000);

// ---------------------------------------------------------------------------

struct WeissCurve {
    Vec2 center;
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> tolerance;  ///< C h / r with C = 2 q_max^2

    /// Largest drop W(r_k) - W(r_{k+1}) over consecutive radii (<= 0 when monotone).
    double max_drop() const;
};

/// W(r) = r^-2 int_{B_r}(|grad u|^2 + Q^2 chi) - r^-3 int_{dB_r} |u|^2.
double weiss_value(const VectorField& u, const WeightField& q, double tol, Vec2 x, double r);
WeissCurve weiss_curve(const VectorField& u, const WeightField& q, double tol, Vec2 x, const std::vector<double>& radii);

// ---------------------------------------------------------------------------

/// Smooth vector field with its Jacobian (row j = gradient of component j).
struct TestVectorField {
    std::function<Vec2(Vec2)> value;
    std::function<std::array<double, 4>(Vec2)> jacobian;  ///< {d1 P1, d2 P1, d1 P2, d2 P2}
    Vec2 support_center;
    double support_radius = 0.0;
};

/// Smooth scalar test function with gradient.
struct TestFunction {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;
    Vec2 support_center;
    double support_radius = 0.0;
};

/// (1 - |y-c|^2/R^2)^2 on B_R(c), zero outside.
TestFunction bump_function(Vec2 center, double radius);
/// bump_function times a constant direction.
TestVectorField bump_vector_field(Vec2 center, double radius, Vec2 direction);

struct IdentityTerm {
    double residual = 0.0;   ///< |lhs - rhs| / magnitude (0 when magnitude is 0)
    double lhs = 0.0;
    double rhs = 0.0;
    double magnitude = 0.0;
};

struct IdentityResiduals {
    IdentityTerm energy;
    IdentityTerm pohozaev;
    IdentityTerm domain_variation;
};

/**
 * Energy identity and Pohozaev identity on B_r(x), domain variation with the
 * test field psi. The free-boundary measure enters as -Q^2 (. nu) weighted
 * over the interface points.
 */
IdentityResiduals identity_residuals(const VectorField& u, const WeightField& q, double tol, Vec2 x, double r,
                                     const TestVectorField& psi);

struct MeasureResidual {
    double residual = 0.0;  ///< max_i |lhs_i - rhs_i| / normalization (raw when normalization is 0)
    std::vector<double> lhs;  ///< -int grad u_i . grad phi
    std::vector<double> rhs;  ///< sum over interface of w_i Q phi weight
    double normalization = 0.0;
};

MeasureResidual measure_residual(const VectorField& u, const WeightField& q, double tol, const TestFunction& phi);

// ---------------------------------------------------------------------------

struct NtaRow {
    double r = 0.0;
    double best_m = 0.0;  ///< r / (largest ball radius reachable inside the positive part of B_r)
    Vec2 corkscrew;
    bool corkscrew_pass = false;
    double complement_density = 0.0;
    bool density_pass = false;
};

struct NtaReport {
    Vec2 x;
    double m = 0.0;
    double density_floor = 0.0;
    std::vector<NtaRow> rows;
    bool pass() const;
};

/// Euclidean distance from every node to the nearest node outside the mask.
std::vector<double> distance_to_zero_set(const Mask& mask);

NtaReport nta_check(const Mask& mask, Vec2 x, const std::vector<double>& radii, double m, double density_floor);

}  // namespace fbmin
