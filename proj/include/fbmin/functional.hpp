#pragma once

#include <vector>

#include "fbmin/grid.hpp"

namespace fbmin {

/// The two terms of J and their sum.
struct EnergyBreakdown {
    double dirichlet = 0.0;
    double volume = 0.0;
    double total = 0.0;
};

/**
 * Per-cell Dirichlet density of one component.
 *
 * Each axis uses the mean of the squared forward differences along the
 * cell's two edges in that direction. Summed over cells this is the
 * edge-based (trapezoidal) quadrature of |grad u|^2, whose minimizer for
 * fixed boundary values is exactly the 5-point discrete harmonic function.
 */
double cell_dirichlet_density(const ScalarField& f, std::size_t ci, std::size_t cj);

/// Sum over components of the cell densities, one value per cell.
std::vector<double> dirichlet_density(const VectorField& u);

/// True when any corner of cell (ci, cj) has |u| > tol.
bool cell_positive(const VectorField& u, std::size_t ci, std::size_t cj, double tol);

/// One 0/1 value per cell: any corner positive.
std::vector<double> positive_cells(const VectorField& u, double tol);

double dirichlet_energy(const VectorField& u);

/// Sum over positive cells of (corner-mean Q)^2 * area.
double volume_term(const VectorField& u, const WeightField& q, double tol = kPositivityRelTol);

EnergyBreakdown evaluate_J(const VectorField& u, const WeightField& q, double tol = kPositivityRelTol);

/// beta_eps(t) = min(1, t / eps).
double smoothed_indicator(double t, double eps);

/// Dirichlet energy plus sum of Qbar^2 * beta_eps(|u at cell centre|) * area.
EnergyBreakdown evaluate_J_smoothed(const VectorField& u, const WeightField& q, double eps);

/**
 * Gradient of evaluate_J_smoothed with respect to every node value.
 *
 * Where a cell has zero centre value the one-sided derivative in the positive
 * direction is used, i.e. each corner component sees +Qbar^2*area/(4 eps).
 */
VectorField smoothed_gradient(const VectorField& u, const WeightField& q, double eps);

/// Discrete H^1 norm: sqrt(sum values^2 * dA + sum |grad|^2 * dA), all components.
double h1_norm(const VectorField& u);

/// H^1 distance plus area of the symmetric difference of the positivity sets.
double metric_d(const VectorField& u, const VectorField& v, double tol = kPositivityRelTol);

/**
 * Logarithmic barrier used by the nondegeneracy competitor:
 * (ln|x| - ln rho)^+ / (0 - ln rho). Zero on |x| <= rho, one on |x| = 1,
 * harmonic in between.
 */
double psi_rho(Vec2 x, double rho);

}  // namespace fbmin
