#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fbmin/grid.hpp"

namespace fbmin {

struct LaplaceStats {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

/**
 * 5-point discrete Laplace equation on the nodes listed in `free_nodes`
 * (all interior), every other node held at its current value.
 *
 * Conjugate gradients warm-started from `values`. Stops when the residual
 * drops below rel_tol times the norm of the fixed-node forcing. Throws
 * SolveError when max_iter is reached first.
 */
LaplaceStats solve_laplace_cg(const GridSpec& grid, std::span<const std::size_t> free_nodes, std::span<double> values,
                              double rel_tol, std::size_t max_iter);

/// Same system solved by dense Cholesky, every component of u at once.
/// Meant for small node sets (local windows, exhaustive search).
void solve_laplace_dense(const GridSpec& grid, std::span<const std::size_t> free_nodes, VectorField& u);

/// Max over free nodes of |5-point residual|, scaled like the CG residual.
double laplace_residual(const GridSpec& grid, std::span<const std::size_t> free_nodes, std::span<const double> values);

}  // namespace fbmin
