#include "fbmin/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"

namespace fbmin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNoPoint = static_cast<std::size_t>(-1);

std::size_t sphere_sample_count(const GridSpec& g, double r) {
    const double n = std::ceil(8.0 * 2.0 * std::numbers::pi * r / g.h());
    return std::max<std::size_t>(64, static_cast<std::size_t>(n));
}

void require_ball(const GridSpec& g, Vec2 x, double r) {
    if (!(r > 0.0) || !g.contains_disk(x, r)) throw DomainError("ball exits the domain");
}

void require_min_radius(const GridSpec& g, double r) {
    if (r < 4.0 * g.h() * (1.0 - 1e-12)) throw DomainError("radius below 4h");
}

// Smallest-eigenvalue eigenvector of [[a, b], [b, c]].
Vec2 minor_axis(double a, double b, double c) {
    const double lam = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const Vec2 v1{lam - c, b}, v2{b, lam - a};
    const Vec2 v = norm(v1) >= norm(v2) ? v1 : v2;
    if (norm(v) <= 1e-300) return a <= c ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    return normalized(v);
}

std::vector<double> zero_cell_indicator(const GridSpec& g, const Mask& mask) {
    std::vector<double> out(g.cell_count(), 0.0);
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci) {
            const bool pos = mask[g.index(ci, cj)] || mask[g.index(ci + 1, cj)] || mask[g.index(ci, cj + 1)] ||
                             mask[g.index(ci + 1, cj + 1)];
            out[g.cell_index(ci, cj)] = pos ? 0.0 : 1.0;
        }
    return out;
}

double interpolated_norm(const VectorField& u, Vec2 p, std::vector<double>& buf) {
    interpolate(u, p, buf);
    double s = 0.0;
    for (double v : buf) s += v * v;
    return std::sqrt(s);
}

// Gradient of component values at p by central differences of the interpolant.
void interpolated_gradients(const VectorField& u, Vec2 p, double d, std::vector<Vec2>& out, std::vector<double>& a,
                            std::vector<double>& b) {
    out.assign(u.m(), Vec2{});
    interpolate(u, p + Vec2{d, 0.0}, a);
    interpolate(u, p - Vec2{d, 0.0}, b);
    for (std::size_t c = 0; c < u.m(); ++c) out[c].x = (a[c] - b[c]) / (2.0 * d);
    interpolate(u, p + Vec2{0.0, d}, a);
    interpolate(u, p - Vec2{0.0, d}, b);
    for (std::size_t c = 0; c < u.m(); ++c) out[c].y = (a[c] - b[c]) / (2.0 * d);
}

// Cells whose closed square meets B_r(c).
template <typename F>
void for_cells_near(const GridSpec& g, Vec2 c, double r, F&& f) {
    const auto& b = g.box();
    const long i0 = std::max(0L, static_cast<long>(std::floor((c.x - r - b.ax) / g.hx())) - 1);
    const long i1 = std::min(static_cast<long>(g.nx()) - 2, static_cast<long>(std::ceil((c.x + r - b.ax) / g.hx())) + 1);
    const long j0 = std::max(0L, static_cast<long>(std::floor((c.y - r - b.ay) / g.hy())) - 1);
    const long j1 = std::min(static_cast<long>(g.ny()) - 2, static_cast<long>(std::ceil((c.y + r - b.ay) / g.hy())) + 1);
    for (long j = j0; j <= j1; ++j)
        for (long i = i0; i <= i1; ++i) f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

template <typename F>
void for_nodes_in_ball(const GridSpec& g, Vec2 c, double r, F&& f) {
    const auto& b = g.box();
    const long i0 = std::max(0L, static_cast<long>(std::floor((c.x - r - b.ax) / g.hx())));
    const long i1 = std::min(static_cast<long>(g.nx()) - 1, static_cast<long>(std::ceil((c.x + r - b.ax) / g.hx())));
    const long j0 = std::max(0L, static_cast<long>(std::floor((c.y - r - b.ay) / g.hy())));
    const long j1 = std::min(static_cast<long>(g.ny()) - 1, static_cast<long>(std::ceil((c.y + r - b.ay) / g.hy())));
    for (long j = j0; j <= j1; ++j)
        for (long i = i0; i <= i1; ++i) {
            const std::size_t k = g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (norm(g.node(k) - c) <= r * (1.0 + 1e-12)) f(k);
        }
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
        m = 0.5 * (m + lo);
    }
    return m;
}

// Slope of the least-squares line through (t_k, v_k).
double fitted_slope(const double* t, const double* v, std::size_t n) {
    double tm = 0.0, vm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        tm += t[k];
        vm += v[k];
    }
    tm /= static_cast<double>(n);
    vm /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        num += (t[k] - tm) * (v[k] - vm);
        den += (t[k] - tm) * (t[k] - tm);
    }
    return num / den;
}

FreeBoundary free_boundary_or_empty(const Mask& mask) {
    if (mask.all_equal()) {
        FreeBoundary fb;
        fb.h = mask.grid().h();
        return fb;
    }
    return extract_free_boundary(mask);
}

}  // namespace

// ---------------------------------------------------------------------------

double FreeBoundary::length() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

FreeBoundary extract_free_boundary(const Mask& mask, double fit_radius) {
    const auto& g = mask.grid();
    if (mask.all_equal()) throw NoFreeBoundary("mask is constant");
    FreeBoundary fb;
    fb.h = g.h();
    const std::size_t nx = g.nx(), ny = g.ny();
    std::vector<std::size_t> hidx((nx - 1) * ny, kNoPoint), vidx(nx * (ny - 1), kNoPoint);
    auto add = [&](std::size_t a, std::size_t b) {
        const bool pa = mask[a];
        fb.positive_node.push_back(pa ? a : b);
        fb.zero_node.push_back(pa ? b : a);
        fb.points.push_back(0.5 * (g.node(a) + g.node(b)));
        fb.crossing.push_back(normalized(pa ? g.node(b) - g.node(a) : g.node(a) - g.node(b)));
        fb.weights.push_back(0.0);
        return fb.points.size() - 1;
    };
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const std::size_t a = g.index(i, j), b = g.index(i + 1, j);
            if (mask[a] != mask[b]) hidx[j * (nx - 1) + i] = add(a, b);
        }
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t a = g.index(i, j), b = g.index(i, j + 1);
            if (mask[a] != mask[b]) vidx[j * nx + i] = add(a, b);
        }

    auto segment = [&](std::size_t p, std::size_t q) { fb.polyline += norm(fb.points[p] - fb.points[q]); };
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const std::size_t bottom = hidx[j * (nx - 1) + i], top = hidx[(j + 1) * (nx - 1) + i];
            const std::size_t left = vidx[j * nx + i], right = vidx[j * nx + i + 1];
            std::size_t cut[4];
            std::size_t n = 0;
            for (std::size_t e : {bottom, right, top, left})
                if (e != kNoPoint) cut[n++] = e;
            if (n == 2) {
                segment(cut[0], cut[1]);
            } else if (n == 4) {
                // Saddle: keep the positive diagonal connected.
                if (mask[g.index(i, j)]) {
                    segment(bottom, right);
                    segment(left, top);
                } else {
                    segment(bottom, left);
                    segment(right, top);
                }
            }
        }

    const double radius = fit_radius > 0.0 ? fit_radius : 4.0 * fb.h;
    fb.normals.resize(fb.size());
    for (std::size_t k = 0; k < fb.size(); ++k) {
        try {
            fb.normals[k] = estimate_normal(fb, fb.points[k], radius);
        } catch (const DomainError&) {
            fb.normals[k] = fb.crossing[k];
        }
        // Spacing between parallel edges times |nu . edge|: sums to the length of any straight line.
        const bool horizontal = std::abs(fb.crossing[k].x) > 0.5;
        fb.weights[k] = (horizontal ? g.hy() : g.hx()) * std::abs(dot(fb.normals[k], fb.crossing[k]));
    }
    return fb;
}

Vec2 estimate_normal(const FreeBoundary& fb, Vec2 p, double fit_radius) {
    std::vector<std::size_t> near;
    for (std::size_t k = 0; k < fb.size(); ++k)
        if (norm(fb.points[k] - p) <= fit_radius * (1.0 + 1e-12)) near.push_back(k);
    if (near.size() < 4) throw DomainError("too few interface points for a normal fit");
    Vec2 mean{};
    for (std::size_t k : near) mean += fb.points[k];
    mean *= 1.0 / static_cast<double>(near.size());
    double a = 0.0, b = 0.0, c = 0.0;
    Vec2 outward{};
    for (std::size_t k : near) {
        const Vec2 d = fb.points[k] - mean;
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
        outward += fb.crossing[k];
    }
    Vec2 nu = minor_axis(a, b, c);
    if (dot(nu, outward) < 0.0) nu = -1.0 * nu;
    return nu;
}

double distance_to_free_boundary(const Mask& mask, Vec2 p) {
    const auto& g = mask.grid();
    double best = kInf;
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            if (i + 1 < g.nx() && mask[k] != mask[g.index(i + 1, j)])
                best = std::min(best, norm(0.5 * (g.node(k) + g.node(i + 1, j)) - p));
            if (j + 1 < g.ny() && mask[k] != mask[g.index(i, j + 1)])
                best = std::min(best, norm(0.5 * (g.node(k) + g.node(i, j + 1)) - p));
        }
    return best;
}

std::vector<std::size_t> select_fb_points(const FreeBoundary& fb, const GridSpec& grid, double radius,
                                          std::size_t count) {
    std::vector<std::size_t> cand;
    for (std::size_t k = 0; k < fb.size(); ++k)
        if (grid.contains_disk(fb.points[k], radius)) cand.push_back(k);
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        const Vec2 pa = fb.points[a], pb = fb.points[b];
        return pa.x != pb.x ? pa.x < pb.x : pa.y < pb.y;
    });
    std::vector<std::size_t> out;
    if (cand.empty() || count == 0) return out;
    for (std::size_t q = 0; q < count; ++q) {
        const auto pos = static_cast<std::size_t>((static_cast<double>(q) + 0.5) * static_cast<double>(cand.size()) /
                                                  static_cast<double>(count));
        const std::size_t k = cand[std::min(pos, cand.size() - 1)];
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

std::vector<double> dyadic_radii(double r_min, double r_max) {
    if (!(r_min > 0.0) || r_max < r_min) throw DomainError("invalid radius range");
    std::vector<double> out;
    for (double r = r_min; r <= r_max * (1.0 + 1e-12); r *= 2.0) out.push_back(r);
    return out;
}

// ---------------------------------------------------------------------------

double ball_sup(const VectorField& u, Vec2 x, double r) {
    const auto& g = u.grid();
    require_ball(g, x, r);
    double best = 0.0;
    for_nodes_in_ball(g, x, r, [&](std::size_t k) { best = std::max(best, u.norm_at(k)); });
    std::vector<double> buf(u.m());
    auto on_circle = [&](double t) { return interpolated_norm(u, x + r * Vec2{std::cos(t), std::sin(t)}, buf); };
    const std::size_t n = 4 * sphere_sample_count(g, r);
    const double dt = 2.0 * std::numbers::pi / static_cast<double>(n);
    double t_best = 0.0, v_best = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = on_circle(static_cast<double>(k) * dt);
        if (v > v_best) {
            v_best = v;
            t_best = static_cast<double>(k) * dt;
        }
    }
    // Golden-section refinement around the best sample.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = t_best - dt, b = t_best + dt;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = on_circle(c), fd = on_circle(d);
    for (int it = 0; it < 80; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = on_circle(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = on_circle(d);
        }
    }
    return std::max({best, v_best, fc, fd});
}

ScalingReport scaling_report(const VectorField& u, double tol, Vec2 x, const std::vector<double>& radii) {
    const auto& g = u.grid();
    if (radii.empty()) throw DomainError("no radii given");
    const Mask mask = positivity_mask(u, tol);
    if (mask.all_equal()) throw NoFreeBoundary("no interface point near the requested center");
    if (distance_to_free_boundary(mask, x) > g.h() * (1.0 + 1e-9))
        throw DomainError("center is not within h of the free boundary");
    const auto zero_cells = zero_cell_indicator(g, mask);

    ScalingReport rep;
    rep.x = x;
    for (double r : radii) {
        require_min_radius(g, r);
        require_ball(g, x, r);
        ScalingRow row;
        row.r = r;
        const std::size_t n = sphere_sample_count(g, r);
        for (std::size_t c = 0; c < u.m(); ++c) row.sphere_avg_over_r.push_back(sphere_average(u.component(c), x, r, n) / r);
        row.sup_over_r = ball_sup(u, x, r) / r;
        row.zero_density = ball_integrate_cells(g, zero_cells, x, r) / (std::numbers::pi * r * r);
        double lip = 0.0;
        const double r3 = r / 3.0;
        for_nodes_in_ball(g, x, r3, [&](std::size_t k) {
            const std::size_t i = k % g.nx(), j = k / g.nx();
            const std::size_t nbs[2] = {i + 1 < g.nx() ? g.index(i + 1, j) : k, j + 1 < g.ny() ? g.index(i, j + 1) : k};
            for (std::size_t nb : nbs) {
                if (nb == k || norm(g.node(nb) - x) > r3 * (1.0 + 1e-12)) continue;
                double d2 = 0.0;
                for (std::size_t c = 0; c < u.m(); ++c) d2 += (u(c, k) - u(c, nb)) * (u(c, k) - u(c, nb));
                lip = std::max(lip, std::sqrt(d2) / norm(g.node(nb) - g.node(k)));
            }
        });
        row.lipschitz = lip;
        rep.rows.push_back(std::move(row));
    }
    rep.sup_min = rep.sup_max = rep.rows.front().sup_over_r;
    rep.density_min = rep.density_max = rep.rows.front().zero_density;
    for (const auto& row : rep.rows) {
        rep.sup_min = std::min(rep.sup_min, row.sup_over_r);
        rep.sup_max = std::max(rep.sup_max, row.sup_over_r);
        rep.density_min = std::min(rep.density_min, row.zero_density);
        rep.density_max = std::max(rep.density_max, row.zero_density);
        rep.lipschitz_max = std::max(rep.lipschitz_max, row.lipschitz);
        for (double a : row.sphere_avg_over_r) rep.avg_max = std::max(rep.avg_max, a);
    }
    return rep;
}

FlatnessResult flatness(const VectorField& u, double tol, Vec2 x, double rho) {
    const auto& g = u.grid();
    require_ball(g, x, rho);
    const Mask mask = positivity_mask(u, tol);
    FlatnessResult res;
    if (mask.all_equal()) return res;
    const FreeBoundary fb = extract_free_boundary(mask);
    try {
        res.normal = estimate_normal(fb, x, rho);
    } catch (const DomainError&) {
        return res;
    }
    double sigma = 0.0;
    for_nodes_in_ball(g, x, rho, [&](std::size_t k) {
        if (mask[k]) sigma = std::max(sigma, dot(g.node(k) - x, res.normal) / rho);
    });
    res.sigma = std::min(1.0, sigma);
    return res;
}

// ---------------------------------------------------------------------------

FbConditionReport fb_condition_residual(const VectorField& u, const WeightField& q, const FreeBoundary& fb) {
    const auto& g = u.grid();
    require_same_grid(g, q.grid(), "fb_condition_residual");
    if (fb.size() == 0) throw NoFreeBoundary();
    const double h = g.h();
    const double offsets[3] = {2.0 * h, 4.0 * h, 8.0 * h};
    FbConditionReport rep;
    std::vector<double> buf(u.m()), residuals, squared;
    std::vector<double> values(3), comp(3 * u.m());
    for (std::size_t k = 0; k < fb.size(); ++k) {
        FbConditionPoint pt;
        pt.point = fb.points[k];
        pt.normal = fb.normals[k];
        for (std::size_t a = 0; a < 3 && !pt.skipped; ++a) {
            const Vec2 y = pt.point - offsets[a] * pt.normal;
            if (!g.contains(y)) {
                pt.skipped = true;
                break;
            }
            values[a] = interpolated_norm(u, y, buf);
            for (std::size_t c = 0; c < u.m(); ++c) comp[c * 3 + a] = buf[c];
        }
        if (pt.skipped) {
            ++rep.skipped;
            rep.points.push_back(std::move(pt));
            continue;
        }
        const double qp = q.at(pt.point);
        pt.slope = fitted_slope(offsets, values.data(), 3);
        pt.residual = std::abs(pt.slope - qp) / qp;
        double s2 = 0.0;
        for (std::size_t c = 0; c < u.m(); ++c) {
            const double s = fitted_slope(offsets, comp.data() + 3 * c, 3);
            pt.component_slopes.push_back(s);
            s2 += s * s;
        }
        pt.squared_residual = std::abs(s2 - qp * qp) / (qp * qp);
        residuals.push_back(pt.residual);
        squared.push_back(pt.squared_residual);
        rep.max = std::max(rep.max, pt.residual);
        rep.points.push_back(std::move(pt));
    }
    rep.median = median_of(residuals);
    rep.squared_median = median_of(squared);
    return rep;
}

WeightTraceReport weight_traces(const VectorField& u, double tol, Vec2 center, double radius, std::uint64_t seed,
                                std::size_t pairs) {
    const auto& g = u.grid();
    std::vector<std::size_t> nodes;
    for_nodes_in_ball(g, center, radius, [&](std::size_t k) {
        if (u.norm_at(k) > tol) nodes.push_back(k);
    });
    if (nodes.empty()) throw DomainError("region lies in the zero set");
    const std::size_t m = u.m();
    std::vector<double> w(nodes.size() * m);
    WeightTraceReport rep;
    rep.samples = nodes.size();
    rep.min_weight = kInf;
    rep.mean_weight.assign(m, 0.0);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double n = u.norm_at(nodes[a]);
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const double v = u(c, nodes[a]) / n;
            w[a * m + c] = v;
            s += v * v;
            rep.min_weight = std::min(rep.min_weight, v);
            rep.mean_weight[c] += v;
        }
        rep.normalization_error = std::max(rep.normalization_error, std::abs(s - 1.0));
    }
    for (double& v : rep.mean_weight) v /= static_cast<double>(nodes.size());
    if (nodes.size() > 1) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
        for (std::size_t t = 0; t < pairs; ++t) {
            const std::size_t a = pick(rng), b = pick(rng);
            if (a == b) continue;
            double diff = 0.0;
            for (std::size_t c = 0; c < m; ++c) diff = std::max(diff, std::abs(w[a * m + c] - w[b * m + c]));
            const double d = norm(g.node(nodes[a]) - g.node(nodes[b]));
            rep.holder_quarter = std::max(rep.holder_quarter, diff / std::pow(d, 0.25));
            rep.holder_half = std::max(rep.holder_half, diff / std::sqrt(d));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

double WeissCurve::max_drop() const {
    double drop = -kInf;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) drop = std::max(drop, values[k] - values[k + 1]);
    return values.size() < 2 ? 0.0 : drop;
}

namespace {

std::vector<double> weiss_density(const VectorField& u, const WeightField& q, double tol) {
    const auto& g = u.grid();
    auto dens = dirichlet_density(u);
    const auto pos = positive_cells(u, tol);
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci) {
            const std::size_t c = g.cell_index(ci, cj);
            if (pos[c] == 0.0) continue;
            const double qm = q.cell_mean(ci, cj);
            dens[c] += qm * qm;
        }
    return dens;
}

double weiss_from_density(const VectorField& u, std::span<const double> dens, Vec2 x, double r) {
    const auto& g = u.grid();
    require_ball(g, x, r);
    const double bulk = ball_integrate_cells(g, dens, x, r);
    const std::size_t n = sphere_sample_count(g, r);
    std::vector<double> buf(u.m());
    double s = 0.0;
    for (const Vec2& p : sphere_points(g, x, r, n)) {
        const double v = interpolated_norm(u, p, buf);
        s += v * v;
    }
    const double sphere = 2.0 * std::numbers::pi * r * s / static_cast<double>(n);
    return bulk / (r * r) - sphere / (r * r * r);
}

}  // namespace

double weiss_value(const VectorField& u, const WeightField& q, double tol, Vec2 x, double r) {
    require_same_grid(u.grid(), q.grid(), "weiss_value");
    const auto dens = weiss_density(u, q, tol);
    return weiss_from_density(u, dens, x, r);
}

WeissCurve weiss_curve(const VectorField& u, const WeightField& q, double tol, Vec2 x, const std::vector<double>& radii) {
    const auto& g = u.grid();
    require_same_grid(g, q.grid(), "weiss_curve");
    for (std::size_t k = 0; k < radii.size(); ++k) {
        require_min_radius(g, radii[k]);
        require_ball(g, x, radii[k]);
        if (k > 0 && !(radii[k] > radii[k - 1])) throw DomainError("radii must be strictly increasing");
    }
    const auto dens = weiss_density(u, q, tol);
    WeissCurve curve;
    curve.center = x;
    curve.radii = radii;
    const double c = 2.0 * q.q_max() * q.q_max();
    for (double r : radii) {
        curve.values.push_back(weiss_from_density(u, dens, x, r));
        curve.tolerance.push_back(c * g.h() / r);
    }
    return curve;
}

// ---------------------------------------------------------------------------

TestFunction bump_function(Vec2 center, double radius) {
    if (!(radius > 0.0)) throw DomainError("bump radius must be positive");
    TestFunction f;
    f.support_center = center;
    f.support_radius = radius;
    const double r2 = radius * radius;
    f.value = [=](Vec2 p) {
        const double s = 1.0 - (p - center).x * (p - center).x / r2 - (p - center).y * (p - center).y / r2;
        return s > 0.0 ? s * s : 0.0;
    };
    f.gradient = [=](Vec2 p) {
        const Vec2 d = p - center;
        const double s = 1.0 - dot(d, d) / r2;
        if (s <= 0.0) return Vec2{};
        return (-4.0 * s / r2) * d;
    };
    return f;
}

TestVectorField bump_vector_field(Vec2 center, double radius, Vec2 direction) {
    const TestFunction b = bump_function(center, radius);
    TestVectorField f;
    f.support_center = center;
    f.support_radius = radius;
    f.value = [=](Vec2 p) { return b.value(p) * direction; };
    f.jacobian = [=](Vec2 p) {
        const Vec2 gr = b.gradient(p);
        return std::array<double, 4>{direction.x * gr.x, direction.x * gr.y, direction.y * gr.x, direction.y * gr.y};
    };
    return f;
}

namespace {

IdentityTerm make_term(double lhs, double rhs, double magnitude) {
    IdentityTerm t;
    t.lhs = lhs;
    t.rhs = rhs;
    t.magnitude = magnitude;
    t.residual = magnitude > 0.0 ? std::abs(lhs - rhs) / magnitude : 0.0;
    return t;
}

}  // namespace

IdentityResiduals identity_residuals(const VectorField& u, const WeightField& q, double tol, Vec2 x, double r,
                                     const TestVectorField& psi) {
    const auto& g = u.grid();
    require_same_grid(g, q.grid(), "identity_residuals");
    const double h = g.h();
    const double d = 0.5 * h;
    require_ball(g, x, r + 2.0 * d);
    if (psi.value && psi.support_radius > 0.0) require_ball(g, psi.support_center, psi.support_radius);

    const Mask mask = positivity_mask(u, tol);
    const FreeBoundary fb = free_boundary_or_empty(mask);
    const auto dens = dirichlet_density(u);
    const double grad2 = ball_integrate_cells(g, dens, x, r);

    // Sphere quantities.
    const std::size_t n = sphere_sample_count(g, r);
    std::vector<double> a(u.m()), b(u.m()), val(u.m());
    std::vector<Vec2> grads;
    double flux = 0.0, tang = 0.0;
    for (const Vec2& p : sphere_points(g, x, r, n)) {
        const Vec2 e = normalized(p - x);
        interpolate(u, p, val);
        interpolated_gradients(u, p, d, grads, a, b);
        for (std::size_t c = 0; c < u.m(); ++c) {
            const double dr = dot(grads[c], e);
            flux += val[c] * dr;
            tang += dot(grads[c], grads[c]) - 2.0 * dr * dr;
        }
    }
    const double ds = 2.0 * std::numbers::pi * r / static_cast<double>(n);
    flux *= ds;
    tang *= ds;

    IdentityResiduals res;
    res.energy = make_term(grad2, flux, std::abs(grad2) > 0.0 ? std::abs(grad2) : std::abs(flux));

    // Free-boundary measure against the position field y - x on B_r(x).
    double fb_position = 0.0;
    for (std::size_t k = 0; k < fb.size(); ++k) {
        if (norm(fb.points[k] - x) >= r) continue;
        const double qp = q.at(fb.points[k]);
        fb_position -= qp * qp * dot(fb.points[k] - x, fb.normals[k]) * fb.weights[k];
    }
    const double poh_lhs = 2.0 * grad2;
    const double poh_rhs = 2.0 * grad2 + r * tang + fb_position;
    res.pohozaev = make_term(poh_lhs, poh_rhs, std::abs(poh_lhs) > 0.0 ? std::abs(poh_lhs) : std::abs(poh_rhs));

    // Domain variation.
    double bulk = 0.0, fb_term = 0.0;
    if (psi.value && psi.support_radius > 0.0) {
        for_cells_near(g, psi.support_center, psi.support_radius, [&](std::size_t ci, std::size_t cj) {
            const Vec2 p = g.cell_center(ci, cj);
            const auto jac = psi.jacobian(p);
            const double div = jac[0] + jac[3];
            for (std::size_t c = 0; c < u.m(); ++c) {
                const Vec2 gr = cell_gradient(u.component(c), ci, cj);
                const double quad = gr.x * (jac[0] * gr.x + jac[1] * gr.y) + gr.y * (jac[2] * gr.x + jac[3] * gr.y);
                bulk += 2.0 * quad - dot(gr, gr) * div;
            }
        });
        bulk *= g.cell_area();
        for (std::size_t k = 0; k < fb.size(); ++k) {
            const double qp = q.at(fb.points[k]);
            fb_term -= qp * qp * dot(psi.value(fb.points[k]), fb.normals[k]) * fb.weights[k];
        }
    }
    res.domain_variation = make_term(bulk + fb_term, 0.0, std::abs(bulk) + std::abs(fb_term));
    return res;
}

MeasureResidual measure_residual(const VectorField& u, const WeightField& q, double tol, const TestFunction& phi) {
    const auto& g = u.grid();
    require_same_grid(g, q.grid(), "measure_residual");
    require_ball(g, phi.support_center, phi.support_radius);
    const Mask mask = positivity_mask(u, tol);
    const FreeBoundary fb = free_boundary_or_empty(mask);
    MeasureResidual res;
    res.lhs.assign(u.m(), 0.0);
    res.rhs.assign(u.m(), 0.0);
    for_cells_near(g, phi.support_center, phi.support_radius, [&](std::size_t ci, std::size_t cj) {
        const Vec2 gp = phi.gradient(g.cell_center(ci, cj));
        if (gp.x == 0.0 && gp.y == 0.0) return;
        for (std::size_t c = 0; c < u.m(); ++c) res.lhs[c] -= dot(cell_gradient(u.component(c), ci, cj), gp);
    });
    for (double& v : res.lhs) v *= g.cell_area();

    std::vector<double> buf(u.m());
    for (std::size_t k = 0; k < fb.size(); ++k) {
        const Vec2 p = fb.points[k];
        const double f = phi.value(p);
        if (f == 0.0) continue;
        const double qp = q.at(p);
        // Weights read slightly inside the positivity set.
        const Vec2 probe = p - 2.0 * g.h() * fb.normals[k];
        double n = 0.0;
        if (g.contains(probe)) n = interpolated_norm(u, probe, buf);
        if (!(n > tol)) {
            for (std::size_t c = 0; c < u.m(); ++c) buf[c] = u(c, fb.positive_node[k]);
            n = u.norm_at(fb.positive_node[k]);
        }
        for (std::size_t c = 0; c < u.m(); ++c) res.rhs[c] += buf[c] / n * qp * f * fb.weights[k];
        res.normalization += qp * std::abs(f) * fb.weights[k];
    }
    double worst = 0.0;
    for (std::size_t c = 0; c < u.m(); ++c) worst = std::max(worst, std::abs(res.lhs[c] - res.rhs[c]));
    res.residual = res.normalization > 0.0 ? worst / res.normalization : worst;
    return res;
}

// ---------------------------------------------------------------------------

namespace {

// Squared distance transform of a sampled function along one line (lower envelope of parabolas).
void distance_transform_1d(const std::vector<double>& f, std::vector<double>& d, double spacing) {
    const std::size_t n = f.size();
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    std::size_t first = n;
    for (std::size_t q = 0; q < n; ++q)
        if (std::isfinite(f[q])) {
            first = q;
            break;
        }
    d.assign(n, kInf);
    if (first == n) return;
    v[0] = first;
    z[0] = -kInf;
    z[1] = kInf;
    auto pos = [&](std::size_t q) { return static_cast<double>(q) * spacing; };
    for (std::size_t q = first + 1; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        double s;
        while (true) {
            const std::size_t p = v[k];
            s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < pos(q)) ++k;
        const double dq = pos(q) - pos(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::vector<double> distance_to_zero_set(const Mask& mask) {
    const auto& g = mask.grid();
    const std::size_t nx = g.nx(), ny = g.ny();
    std::vector<double> sq(g.node_count());
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = mask[k] ? kInf : 0.0;
    std::vector<double> line, out;
    line.resize(nx);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) line[i] = sq[g.index(i, j)];
        distance_transform_1d(line, out, g.hx());
        for (std::size_t i = 0; i < nx; ++i) sq[g.index(i, j)] = out[i];
    }
    line.resize(ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) line[j] = sq[g.index(i, j)];
        distance_transform_1d(line, out, g.hy());
        for (std::size_t j = 0; j < ny; ++j) sq[g.index(i, j)] = out[j];
    }
    for (double& v : sq) v = std::sqrt(v);
    return sq;
}

bool NtaReport::pass() const {
    for (const auto& row : rows)
        if (!row.corkscrew_pass || !row.density_pass) return false;
    return !rows.empty();
}

NtaReport nta_check(const Mask& mask, Vec2 x, const std::vector<double>& radii, double m, double density_floor) {
    const auto& g = mask.grid();
    if (!(m > 1.0)) throw DomainError("corkscrew parameter must exceed 1");
    if (!mask.all_equal() && distance_to_free_boundary(mask, x) > g.h() * (1.0 + 1e-9))
        throw DomainError("center is not within h of the free boundary");
    const auto dist = distance_to_zero_set(mask);
    const auto zero_cells = zero_cell_indicator(g, mask);
    NtaReport rep;
    rep.x = x;
    rep.m = m;
    rep.density_floor = density_floor;
    for (double r : radii) {
        require_min_radius(g, r);
        require_ball(g, x, r);
        NtaRow row;
        row.r = r;
        double best = 0.0;
        for_nodes_in_ball(g, x, r, [&](std::size_t k) {
            if (!mask[k]) return;
            const double s = std::min(dist[k], r - norm(g.node(k) - x));
            if (s > best) {
                best = s;
                row.corkscrew = g.node(k);
            }
        });
        row.best_m = best > 0.0 ? r / best : kInf;
        row.corkscrew_pass = best > r / m;
        row.complement_density = ball_integrate_cells(g, zero_cells, x, r) / (std::numbers::pi * r * r);
        row.density_pass = row.complement_density >= density_floor;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace fbmin
