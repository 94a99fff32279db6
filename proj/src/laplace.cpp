#include "fbmin/laplace.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "fbmin/error.hpp"

namespace fbmin {

namespace {

struct Stencil {
    double wx, wy, diag;
};

Stencil stencil(const GridSpec& g) {
    const double wx = g.hy() / g.hx();
    const double wy = g.hx() / g.hy();
    return {wx, wy, 2.0 * (wx + wy)};
}

// sum_nb w (x_nb - x_k)
double neighbour_balance(const GridSpec& g, const Stencil& s, std::span<const double> x, std::size_t k) {
    const std::size_t nx = g.nx();
    return s.wx * (x[k - 1] + x[k + 1]) + s.wy * (x[k - nx] + x[k + nx]) - s.diag * x[k];
}

void require_interior(const GridSpec& g, std::span<const std::size_t> free_nodes) {
    for (std::size_t k : free_nodes)
        if (k >= g.node_count() || g.is_boundary(k)) throw DomainError("Laplace solve on a boundary node");
}

}  // namespace

double laplace_residual(const GridSpec& grid, std::span<const std::size_t> free_nodes, std::span<const double> values) {
    const Stencil s = stencil(grid);
    double r = 0.0;
    for (std::size_t k : free_nodes) r = std::max(r, std::abs(neighbour_balance(grid, s, values, k)));
    return r;
}

LaplaceStats solve_laplace_cg(const GridSpec& grid, std::span<const std::size_t> free_nodes, std::span<double> values,
                              double rel_tol, std::size_t max_iter) {
    require_interior(grid, free_nodes);
    LaplaceStats stats;
    if (free_nodes.empty()) return stats;
    const Stencil s = stencil(grid);
    const std::size_t n = grid.node_count();
    const std::size_t nx = grid.nx();

    std::vector<std::uint8_t> is_free(n, 0);
    for (std::size_t k : free_nodes) is_free[k] = 1;

    // Norm of the forcing from fixed neighbours.
    double bnorm2 = 0.0;
    for (std::size_t k : free_nodes) {
        double b = 0.0;
        if (!is_free[k - 1]) b += s.wx * values[k - 1];
        if (!is_free[k + 1]) b += s.wx * values[k + 1];
        if (!is_free[k - nx]) b += s.wy * values[k - nx];
        if (!is_free[k + nx]) b += s.wy * values[k + nx];
        bnorm2 += b * b;
    }
    const double target = rel_tol * std::max(std::sqrt(bnorm2), 1e-300);

    std::vector<double> r(n, 0.0), p(n, 0.0), ap(n, 0.0);
    double rr = 0.0;
    for (std::size_t k : free_nodes) {
        r[k] = neighbour_balance(grid, s, values, k);
        p[k] = r[k];
        rr += r[k] * r[k];
    }
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (std::sqrt(rr) <= target) {
            stats.iterations = it;
            stats.relative_residual = std::sqrt(rr) / std::max(std::sqrt(bnorm2), 1e-300);
            return stats;
        }
        double pap = 0.0;
        for (std::size_t k : free_nodes) {
            ap[k] = s.diag * p[k] - s.wx * (p[k - 1] + p[k + 1]) - s.wy * (p[k - nx] + p[k + nx]);
            pap += p[k] * ap[k];
        }
        if (!(pap > 0.0)) break;
        const double alpha = rr / pap;
        double rr_new = 0.0;
        for (std::size_t k : free_nodes) {
            values[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            rr_new += r[k] * r[k];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t k : free_nodes) p[k] = r[k] + beta * p[k];
    }
    // Recompute the true residual before giving up.
    double true_rr = 0.0;
    for (std::size_t k : free_nodes) {
        const double v = neighbour_balance(grid, s, values, k);
        true_rr += v * v;
    }
    if (std::sqrt(true_rr) <= target) {
        stats.iterations = max_iter;
        stats.relative_residual = std::sqrt(true_rr) / std::max(std::sqrt(bnorm2), 1e-300);
        return stats;
    }
    throw SolveError("harmonic solve did not reach tolerance (relative residual " +
                     std::to_string(std::sqrt(true_rr) / std::max(std::sqrt(bnorm2), 1e-300)) + ")");
}

void solve_laplace_dense(const GridSpec& grid, std::span<const std::size_t> free_nodes, VectorField& u) {
    require_interior(grid, free_nodes);
    const std::size_t n = free_nodes.size();
    if (n == 0) return;
    const Stencil s = stencil(grid);
    const std::size_t nx = grid.nx();
    std::unordered_map<std::size_t, std::size_t> slot;
    slot.reserve(n * 2);
    for (std::size_t a = 0; a < n; ++a) slot.emplace(free_nodes[a], a);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(u.m()));
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t k = free_nodes[a];
        const auto ia = static_cast<Eigen::Index>(a);
        A(ia, ia) = s.diag;
        const std::pair<std::size_t, double> nbs[4] = {{k - 1, s.wx}, {k + 1, s.wx}, {k - nx, s.wy}, {k + nx, s.wy}};
        for (const auto& [nb, w] : nbs) {
            if (auto it = slot.find(nb); it != slot.end()) {
                A(ia, static_cast<Eigen::Index>(it->second)) = -w;
            } else {
                for (std::size_t c = 0; c < u.m(); ++c) B(ia, static_cast<Eigen::Index>(c)) += w * u(c, nb);
            }
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw SolveError("dense Laplace factorisation failed");
    const Eigen::MatrixXd X = llt.solve(B);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t c = 0; c < u.m(); ++c) u(c, free_nodes[a]) = X(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
}

}  // namespace fbmin
