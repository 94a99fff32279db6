#include "fbmin/functional.hpp"

#include <cmath>

#include "fbmin/error.hpp"

namespace fbmin {

double cell_dirichlet_density(const ScalarField& f, std::size_t ci, std::size_t cj) {
    const auto& g = f.grid();
    const double f00 = f.at(ci, cj), f10 = f.at(ci + 1, cj);
    const double f01 = f.at(ci, cj + 1), f11 = f.at(ci + 1, cj + 1);
    const double dxb = f10 - f00, dxt = f11 - f01;
    const double dyl = f01 - f00, dyr = f11 - f10;
    return 0.5 * (dxb * dxb + dxt * dxt) / (g.hx() * g.hx()) + 0.5 * (dyl * dyl + dyr * dyr) / (g.hy() * g.hy());
}

std::vector<double> dirichlet_density(const VectorField& u) {
    const auto& g = u.grid();
    std::vector<double> out(g.cell_count(), 0.0);
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
            for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci)
                out[g.cell_index(ci, cj)] += cell_dirichlet_density(u.component(c), ci, cj);
    return out;
}

bool cell_positive(const VectorField& u, std::size_t ci, std::size_t cj, double tol) {
    const auto& g = u.grid();
    return u.norm_at(g.index(ci, cj)) > tol || u.norm_at(g.index(ci + 1, cj)) > tol ||
           u.norm_at(g.index(ci, cj + 1)) > tol || u.norm_at(g.index(ci + 1, cj + 1)) > tol;
}

std::vector<double> positive_cells(const VectorField& u, double tol) {
    const auto& g = u.grid();
    const Mask pos = positivity_mask(u, tol);
    std::vector<double> out(g.cell_count(), 0.0);
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci)
            out[g.cell_index(ci, cj)] = (pos[g.index(ci, cj)] || pos[g.index(ci + 1, cj)] ||
                                         pos[g.index(ci, cj + 1)] || pos[g.index(ci + 1, cj + 1)])
                                            ? 1.0
                                            : 0.0;
    return out;
}

double dirichlet_energy(const VectorField& u) {
    double s = 0.0;
    for (double d : dirichlet_density(u)) s += d;
    return s * u.grid().cell_area();
}

double volume_term(const VectorField& u, const WeightField& q, double tol) {
    require_same_grid(u.grid(), q.grid(), "volume_term");
    const auto& g = u.grid();
    const auto pos = positive_cells(u, tol);
    double s = 0.0;
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci) {
            if (pos[g.cell_index(ci, cj)] == 0.0) continue;
            const double qm = q.cell_mean(ci, cj);
            s += qm * qm;
        }
    return s * g.cell_area();
}

EnergyBreakdown evaluate_J(const VectorField& u, const WeightField& q, double tol) {
    require_same_grid(u.grid(), q.grid(), "evaluate_J");
    EnergyBreakdown e;
    e.dirichlet = dirichlet_energy(u);
    e.volume = volume_term(u, q, tol);
    e.total = e.dirichlet + e.volume;
    return e;
}

double smoothed_indicator(double t, double eps) { return t >= eps ? 1.0 : t / eps; }

namespace {

// |u| at the centre of cell (ci, cj) and the centre vector itself.
double cell_center_value(const VectorField& u, std::size_t ci, std::size_t cj, std::vector<double>& centre) {
    const auto& g = u.grid();
    const std::size_t k00 = g.index(ci, cj), k10 = g.index(ci + 1, cj);
    const std::size_t k01 = g.index(ci, cj + 1), k11 = g.index(ci + 1, cj + 1);
    double n2 = 0.0;
    for (std::size_t c = 0; c < u.m(); ++c) {
        centre[c] = 0.25 * (u(c, k00) + u(c, k10) + u(c, k01) + u(c, k11));
        n2 += centre[c] * centre[c];
    }
    return std::sqrt(n2);
}

void require_eps(double eps) {
    if (!(eps > 0.0)) throw DomainError("smoothing parameter eps must be positive");
}

}  // namespace

EnergyBreakdown evaluate_J_smoothed(const VectorField& u, const WeightField& q, double eps) {
    require_eps(eps);
    require_same_grid(u.grid(), q.grid(), "evaluate_J_smoothed");
    const auto& g = u.grid();
    std::vector<double> centre(u.m());
    double vol = 0.0;
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci) {
            const double t = cell_center_value(u, ci, cj, centre);
            if (t <= 0.0) continue;
            const double qm = q.cell_mean(ci, cj);
            vol += qm * qm * smoothed_indicator(t, eps);
        }
    EnergyBreakdown e;
    e.dirichlet = dirichlet_energy(u);
    e.volume = vol * g.cell_area();
    e.total = e.dirichlet + e.volume;
    return e;
}

VectorField smoothed_gradient(const VectorField& u, const WeightField& q, double eps) {
    require_eps(eps);
    require_same_grid(u.grid(), q.grid(), "smoothed_gradient");
    const auto& g = u.grid();
    const double wx = g.hy() / g.hx();
    const double wy = g.hx() / g.hy();
    VectorField grad(g, u.m());
    // Dirichlet part: E = sum over edges of weight * diff^2, interior edges
    // carrying weight w and boundary edges w/2.
    for (std::size_t c = 0; c < u.m(); ++c) {
        const auto& f = u.component(c);
        auto& gr = grad.component(c);
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double w = (j == 0 || j + 1 == g.ny()) ? 0.5 * wx : wx;
            for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
                const double d = 2.0 * w * (f.at(i + 1, j) - f.at(i, j));
                gr.at(i + 1, j) += d;
                gr.at(i, j) -= d;
            }
        }
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const double w = (i == 0 || i + 1 == g.nx()) ? 0.5 * wy : wy;
            for (std::size_t j = 0; j + 1 < g.ny(); ++j) {
                const double d = 2.0 * w * (f.at(i, j + 1) - f.at(i, j));
                gr.at(i, j + 1) += d;
                gr.at(i, j) -= d;
            }
        }
    }
    // Volume part.
    std::vector<double> centre(u.m());
    const double area = g.cell_area();
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci) {
            const double t = cell_center_value(u, ci, cj, centre);
            if (t >= eps) continue;
            const double qm = q.cell_mean(ci, cj);
            const double scale = qm * qm * area / eps * 0.25;
            const std::size_t ks[4] = {g.index(ci, cj), g.index(ci + 1, cj), g.index(ci, cj + 1),
                                       g.index(ci + 1, cj + 1)};
            for (std::size_t c = 0; c < u.m(); ++c) {
                const double dir = t > 0.0 ? centre[c] / t : 1.0;
                for (std::size_t k : ks) grad(c, k) += scale * dir;
            }
        }
    return grad;
}

double h1_norm(const VectorField& u) {
    const auto& g = u.grid();
    // Trapezoidal node weights: exact for constants.
    double s = 0.0;
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const double wj = (j == 0 || j + 1 == g.ny()) ? 0.5 : 1.0;
            for (std::size_t i = 0; i < g.nx(); ++i) {
                const double wi = (i == 0 || i + 1 == g.nx()) ? 0.5 : 1.0;
                const double v = u(c, g.index(i, j));
                s += wi * wj * v * v;
            }
        }
    s *= g.cell_area();
    s += dirichlet_energy(u);
    return std::sqrt(s);
}

double metric_d(const VectorField& u, const VectorField& v, double tol) {
    require_same_grid(u.grid(), v.grid(), "metric_d");
    if (u.m() != v.m()) throw DomainError("metric_d: component count mismatch");
    const auto& g = u.grid();
    VectorField diff(g, u.m());
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t k = 0; k < g.node_count(); ++k) diff(c, k) = u(c, k) - v(c, k);
    const auto pu = positive_cells(u, tol);
    const auto pv = positive_cells(v, tol);
    double sym = 0.0;
    for (std::size_t k = 0; k < pu.size(); ++k) sym += std::abs(pu[k] - pv[k]);
    return h1_norm(diff) + sym * g.cell_area();
}

double psi_rho(Vec2 x, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("psi_rho needs 0 < rho < 1");
    const double r = norm(x);
    if (r <= rho) return 0.0;
    return (std::log(r) - std::log(rho)) / (-std::log(rho));
}

}  // namespace fbmin
