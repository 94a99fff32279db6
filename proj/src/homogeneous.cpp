#include "fbmin/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fbmin/error.hpp"

namespace fbmin {

void HalfPlaneSpec::validate() const {
    if (!(q0 > 0.0) || !std::isfinite(q0)) throw DomainError("half-plane Q0 must be positive");
    if (std::abs(norm(nu) - 1.0) > 1e-12) throw DomainError("half-plane direction must be a unit vector");
    if (e.empty()) throw DomainError("half-plane weights need at least one component");
    double s = 0.0;
    for (double v : e) {
        if (v < -1e-12) throw DomainError("half-plane weights must be nonnegative");
        s += v * v;
    }
    if (std::abs(std::sqrt(s) - 1.0) > 1e-12) throw DomainError("half-plane weights must have unit length");
}

VectorField halfplane_field(const HalfPlaneSpec& spec, const GridSpec& grid) {
    spec.validate();
    VectorField u(grid, spec.e.size());
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        const double t = std::max(0.0, dot(grid.node(k), spec.nu));
        for (std::size_t c = 0; c < spec.e.size(); ++c) u(c, k) = std::max(0.0, spec.e[c]) * spec.q0 * t;
    }
    return u;
}

namespace {

// Solves the constant tridiagonal system (2 I - T) x = b / h^2 scaled, in place.
void thomas_solve(std::size_t n, double diag, double off, std::vector<double>& rhs, std::vector<double>& work) {
    work.resize(n);
    double denom = diag;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        work[i - 1] = off / denom;
        denom = diag - off * work[i - 1];
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= work[i] * rhs[i + 1];
}

}  // namespace

ArcEigen arc_eigenpair(double theta, std::size_t n_nodes) {
    if (!(theta > 0.0) || !(theta < 2.0 * std::numbers::pi)) throw DomainError("arc angle must lie in (0, 2 pi)");
    if (n_nodes < 16) throw DomainError("arc eigenproblem needs at least 16 nodes");
    const double h = theta / static_cast<double>(n_nodes + 1);
    const double diag = 2.0 / (h * h), off = -1.0 / (h * h);
    std::vector<double> x(n_nodes), y, work;
    for (std::size_t i = 0; i < n_nodes; ++i) x[i] = 1.0;  // positive start, not orthogonal to the ground state
    ArcEigen out;
    double lambda_prev = 0.0;
    constexpr std::size_t kIterations = 200;
    for (std::size_t it = 0; it < kIterations; ++it) {
        y = x;
        thomas_solve(n_nodes, diag, off, y, work);
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n_nodes; ++i) x[i] = y[i] / nrm;
        // Rayleigh quotient x^T A x.
        double num = 0.0;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            double ax = diag * x[i];
            if (i > 0) ax += off * x[i - 1];
            if (i + 1 < n_nodes) ax += off * x[i + 1];
            num += x[i] * ax;
        }
        out.lambda = num;
        out.iterations = it + 1;
        if (it > 0 && std::abs(num - lambda_prev) <= 1e-12 * std::abs(num)) break;
        lambda_prev = num;
    }
    const double mx = *std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (double& v : x) v /= mx;
    out.eigenvector = std::move(x);
    return out;
}

double arc_first_eigenvalue(double theta, std::size_t n_nodes) { return arc_eigenpair(theta, n_nodes).lambda; }

HomogeneousClassification classify_homogeneous_2d(std::size_t n_nodes) {
    constexpr double pi = std::numbers::pi;
    HomogeneousClassification res;
    res.n_nodes = n_nodes;
    // lambda_1 - 1 changes sign on [pi/2, 3 pi/2].
    double lo = 0.5 * pi, hi = 1.5 * pi;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (arc_first_eigenvalue(mid, n_nodes) > 1.0) lo = mid;
        else hi = mid;
    }
    res.theta_star = 0.5 * (lo + hi);
    res.lambda_at_pi = arc_first_eigenvalue(pi, n_nodes);
    res.lambda_at_full = arc_first_eigenvalue(2.0 * pi * (1.0 - 1e-9), n_nodes);
    // A punctured disk would need lambda_1 = 1 on the full circle.
    res.full_circle_excluded = std::abs(res.lambda_at_full - 1.0) > 0.5;

    constexpr std::size_t kSweep = 32;
    res.monotone = true;
    for (std::size_t k = 0; k < kSweep; ++k) {
        const double theta = 2.0 * pi * (static_cast<double>(k) + 0.5) / static_cast<double>(kSweep);
        res.sweep_theta.push_back(theta);
        res.sweep_lambda.push_back(arc_first_eigenvalue(theta, n_nodes));
        if (k > 0 && !(res.sweep_lambda[k] < res.sweep_lambda[k - 1])) res.monotone = false;
    }

    const ArcEigen ground = arc_eigenpair(res.theta_star, n_nodes);
    res.ground_state_positive = std::all_of(ground.eigenvector.begin(), ground.eigenvector.end(), [](double v) { return v > 0.0; });
    const double h = res.theta_star / static_cast<double>(n_nodes + 1);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double s = std::sin(pi * static_cast<double>(i + 1) * h / res.theta_star);
        res.ground_state_error = std::max(res.ground_state_error, std::abs(ground.eigenvector[i] - s));
    }
    return res;
}

}  // namespace fbmin
