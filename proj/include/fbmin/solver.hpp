#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbmin/functional.hpp"
#include "fbmin/grid.hpp"

namespace fbmin {

enum class MoveKind { descent, harmonic, truncation, flip };

const char* to_string(MoveKind kind);

/// One accepted move. `eps` is the smoothing parameter of the objective the
/// move was judged on; eps == 0 means the exact functional J.
struct IterationRecord {
    std::size_t iteration = 0;
    MoveKind kind = MoveKind::descent;
    double j_before = 0.0;
    double j_after = 0.0;
    double d_moved = 0.0;
    double eps = 0.0;
};

/// Backtracking rule of the projected descent. initial_step <= 0 selects
/// 1/L with L the largest eigenvalue bound of the Dirichlet Hessian.
struct StepRule {
    double initial_step = 0.0;
    double backtrack = 0.5;
    double c_dec = 1e-4;
    double min_step = 1e-12;
};

struct SolverConfig {
    /// Strictly decreasing; the last entry must be <= h. Empty: automatic.
    std::vector<double> eps_schedule;
    std::size_t max_outer = 40;         ///< descent/harmonic cycles per eps stage
    std::size_t descent_per_cycle = 8;  ///< projected descent steps per cycle
    StepRule step;
    double harmonic_tol = 1e-10;
    std::size_t flip_radius = 3;  ///< half-width (in cells) of the local re-solve window
    std::uint64_t seed = 1;
    bool multilevel = true;        ///< start from the solution on the 2x coarser grid when possible
    std::size_t polish_rounds = 8; ///< truncation/flip/harmonic rounds of the exact phase
    double truncation_rho = 0.5;

    /// Throws DomainError on an invalid configuration.
    void validate(const GridSpec& grid) const;
};

struct Solution {
    VectorField u;
    Mask mask;
    EnergyBreakdown energy;
    std::vector<IterationRecord> trace;
    double positivity_tol = kPositivityRelTol;
};

/// Nodes where the 5-point stencil is solved: interior nodes inside `mask`.
/// Every other node keeps its value, boundary nodes are reset to g.
VectorField harmonic_replace(const VectorField& u, const Mask& mask, const BoundaryData& g, double tol = 1e-10);

struct DescentResult {
    VectorField u;
    bool accepted = false;
    double step = 0.0;  ///< accepted step length (0 when rejected)
    double j_before = 0.0;
    double j_after = 0.0;
};

/// One projected-gradient step on evaluate_J_smoothed with Armijo backtracking
/// from `step` (<= 0: rule.initial_step or the automatic 1/L).
DescentResult descent_step(const VectorField& u, const WeightField& q, const BoundaryData& g, double eps,
                           const StepRule& rule, double step = 0.0);

/// Largest-eigenvalue bound of the Hessian of the discrete Dirichlet energy.
double dirichlet_lipschitz(const GridSpec& grid);

struct TruncationResult {
    VectorField candidate;
    bool accepted = false;
    double delta_j = 0.0;  ///< J(candidate) - J(u)
};

/**
 * Competitor min(u_i, r M psi_rho((y - x) / r)) on B_r(x), u elsewhere, with
 * M = sup_{B_r(x)} |u| / r. Accepted iff J strictly decreases.
 */
TruncationResult truncation_move(const VectorField& u, const WeightField& q, Vec2 x, double r, double rho,
                                 double tol = kPositivityRelTol);

/**
 * Exact local search on the positivity set. Single interface nodes are
 * toggled, the window of half-width `radius` around the node is re-solved
 * harmonically and the toggle kept iff J strictly decreases (a tie keeps a
 * toggle that shrinks the positivity set). Visiting order is shuffled from
 * `seed`.
 */
Solution flip_polish(const VectorField& u, const WeightField& q, const BoundaryData& g, std::size_t radius,
                     std::uint64_t seed = 1, double tol = -1.0);

/// epsilon-continuation descent, harmonic replacement, truncation sweeps and
/// flip polishing. Deterministic for a given configuration.
Solution minimize(const GridSpec& grid, const WeightField& q, const BoundaryData& g, const SolverConfig& config);

/// Largest interior accepted by brute_force_minimize.
inline constexpr std::size_t kBruteForceMaxInterior = 25;

/// Exhaustive search over positivity sets of the interior nodes, each filled
/// harmonically. Ties go to the smaller positivity set, then lexicographic.
Solution brute_force_minimize(const GridSpec& grid, const WeightField& q, const BoundaryData& g);

/// Exact J restricted to cells [ci0, ci1] x [cj0, cj1] (inclusive, clipped).
double local_energy(const VectorField& u, const WeightField& q, double tol, long ci0, long ci1, long cj0, long cj1);

}  // namespace fbmin
