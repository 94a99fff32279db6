#pragma once

#include <vector>

#include "fbmin/grid.hpp"

namespace fbmin {

/// Q0 * (x . nu)^+ * e with |nu| = |e| = 1 and e >= 0.
struct HalfPlaneSpec {
    double q0 = 1.0;
    Vec2 nu{1.0, 0.0};
    std::vector<double> e{1.0};

    /// Throws DomainError unless q0 > 0, |nu| = 1, |e| = 1 and e >= 0 (to 1e-12).
    void validate() const;
};

/// u_i(x) = e_i Q0 (x . nu)^+, sampled at the nodes.
VectorField halfplane_field(const HalfPlaneSpec& spec, const GridSpec& grid);

struct ArcEigen {
    double lambda = 0.0;
    std::vector<double> eigenvector;  ///< interior nodes, positive, unit max
    std::size_t iterations = 0;
};

/// Smallest Dirichlet eigenvalue of -d^2/dphi^2 on (0, theta), n_nodes interior nodes.
ArcEigen arc_eigenpair(double theta, std::size_t n_nodes);
double arc_first_eigenvalue(double theta, std::size_t n_nodes);

struct HomogeneousClassification {
    double theta_star = 0.0;        ///< root of lambda_1(theta) = 1
    double lambda_at_pi = 0.0;
    double lambda_at_full = 0.0;    ///< lambda_1 just below 2 pi
    bool full_circle_excluded = false;
    bool monotone = false;          ///< lambda_1 strictly decreasing on the sweep
    std::vector<double> sweep_theta;
    std::vector<double> sweep_lambda;
    bool ground_state_positive = false;
    double ground_state_error = 0.0;  ///< max |v - sin| at theta_star, both normalised to unit max
    std::size_t n_nodes = 0;
};

/// Opening angle of the only connected positivity cone of a first-order homogeneous minimizer in the plane.
HomogeneousClassification classify_homogeneous_2d(std::size_t n_nodes = 2048);

}  // namespace fbmin
