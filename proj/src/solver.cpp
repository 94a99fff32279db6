#include "fbmin/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fbmin/error.hpp"
#include "fbmin/laplace.hpp"

namespace fbmin {

const char* to_string(MoveKind kind) {
    switch (kind) {
        case MoveKind::descent: return "descent";
        case MoveKind::harmonic: return "harmonic";
        case MoveKind::truncation: return "truncation";
        case MoveKind::flip: return "flip";
    }
    return "unknown";
}

void SolverConfig::validate(const GridSpec& grid) const {
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        if (!(eps_schedule[k] > 0.0)) throw DomainError("eps schedule entries must be positive");
        if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1])) {
            throw DomainError("eps schedule must be strictly decreasing");
        }
    }
    if (!eps_schedule.empty() && eps_schedule.back() > grid.h() * (1 + 1e-12)) {
        throw DomainError("last eps must not exceed the grid spacing");
    }
    if (!(step.backtrack > 0.0 && step.backtrack < 1.0)) throw DomainError("backtracking factor must lie in (0,1)");
    if (!(step.c_dec > 0.0 && step.c_dec < 1.0)) throw DomainError("sufficient-decrease constant must lie in (0,1)");
    if (!(harmonic_tol > 0.0)) throw DomainError("harmonic tolerance must be positive");
    if (flip_radius < 1) throw DomainError("flip radius must be at least one cell");
    if (!(truncation_rho > 0.0 && truncation_rho < 1.0)) throw DomainError("truncation rho must lie in (0,1)");
}

namespace {

constexpr std::size_t kDenseLimit = 256;
constexpr std::size_t kSmallInterior = 400;

void pin_boundary(VectorField& u, const BoundaryData& g) {
    const auto& grid = u.grid();
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t k = 0; k < grid.node_count(); ++k)
            if (grid.is_boundary(k)) u(c, k) = g(c, k);
}

void clamp_nonnegative(VectorField& u) {
    for (std::size_t c = 0; c < u.m(); ++c)
        for (double& v : u.component(c).values()) v = std::max(v, 0.0);
}

void require_finite(const VectorField& u, const char* stage) {
    for (std::size_t c = 0; c < u.m(); ++c) u.component(c).require_finite(stage);
}

void require_compatible(const GridSpec& grid, const WeightField& q, const BoundaryData& g) {
    require_same_grid(grid, q.grid(), "weight field");
    require_same_grid(grid, g.grid(), "boundary data");
}

std::vector<std::size_t> interior_nodes(const GridSpec& grid) {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j + 1 < grid.ny(); ++j)
        for (std::size_t i = 1; i + 1 < grid.nx(); ++i) out.push_back(grid.index(i, j));
    return out;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

VectorField zero_interior(const GridSpec& grid, const BoundaryData& g) {
    VectorField u(grid, g.m());
    pin_boundary(u, g);
    return u;
}

}  // namespace

// ---------------------------------------------------------------------------

VectorField harmonic_replace(const VectorField& u, const Mask& mask, const BoundaryData& g, double tol) {
    const auto& grid = u.grid();
    require_same_grid(grid, mask.grid(), "harmonic_replace mask");
    require_same_grid(grid, g.grid(), "harmonic_replace boundary");
    if (g.m() != u.m()) throw DomainError("harmonic_replace: component count mismatch");
    VectorField out = u;
    pin_boundary(out, g);
    std::vector<std::size_t> free;
    for (std::size_t k : interior_nodes(grid))
        if (mask[k]) free.push_back(k);
    if (free.size() <= kDenseLimit) {
        solve_laplace_dense(grid, free, out);
    } else {
        const std::size_t max_iter = 60 * std::max(grid.nx(), grid.ny()) + 500;
        for (std::size_t c = 0; c < out.m(); ++c) solve_laplace_cg(grid, free, out.component(c).values(), tol, max_iter);
    }
    clamp_nonnegative(out);
    require_finite(out, "harmonic_replace");
    return out;
}

double dirichlet_lipschitz(const GridSpec& grid) {
    // Hessian = 2 L_w, lambda_max(L_w) <= 2 * max weighted degree.
    const double wx = grid.hy() / grid.hx();
    const double wy = grid.hx() / grid.hy();
    return 2.0 * 2.0 * 2.0 * (wx + wy);
}

DescentResult descent_step(const VectorField& u, const WeightField& q, const BoundaryData& g, double eps,
                           const StepRule& rule, double step) {
    const auto& grid = u.grid();
    require_compatible(grid, q, g);
    VectorField base = u;
    pin_boundary(base, g);
    const double j0 = evaluate_J_smoothed(base, q, eps).total;
    VectorField grad = smoothed_gradient(base, q, eps);

    double pn2 = 0.0;
    for (std::size_t c = 0; c < base.m(); ++c)
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            double& gk = grad(c, k);
            if (grid.is_boundary(k) || (base(c, k) <= 0.0 && gk > 0.0)) gk = 0.0;
            pn2 += gk * gk;
        }

    DescentResult res{base, false, 0.0, j0, j0};
    if (pn2 == 0.0) return res;

    double tau = step > 0.0 ? step : (rule.initial_step > 0.0 ? rule.initial_step : 1.0 / dirichlet_lipschitz(grid));
    const double tau_min = rule.min_step * (rule.initial_step > 0.0 ? rule.initial_step : 1.0 / dirichlet_lipschitz(grid));
    VectorField cand = base;
    while (tau >= tau_min) {
        for (std::size_t c = 0; c < base.m(); ++c)
            for (std::size_t k = 0; k < grid.node_count(); ++k)
                cand(c, k) = std::max(0.0, base(c, k) - tau * grad(c, k));
        const double j1 = evaluate_J_smoothed(cand, q, eps).total;
        if (std::isfinite(j1) && j1 <= j0 - rule.c_dec * tau * pn2) {
            res.u = std::move(cand);
            res.accepted = true;
            res.step = tau;
            res.j_after = j1;
            return res;
        }
        tau *= rule.backtrack;
    }
    return res;
}

double local_energy(const VectorField& u, const WeightField& q, double tol, long ci0, long ci1, long cj0, long cj1) {
    const auto& g = u.grid();
    ci0 = std::max(ci0, 0L);
    cj0 = std::max(cj0, 0L);
    ci1 = std::min(ci1, static_cast<long>(g.nx()) - 2);
    cj1 = std::min(cj1, static_cast<long>(g.ny()) - 2);
    double s = 0.0;
    for (long cj = cj0; cj <= cj1; ++cj)
        for (long ci = ci0; ci <= ci1; ++ci) {
            const auto i = static_cast<std::size_t>(ci), j = static_cast<std::size_t>(cj);
            double d = 0.0;
            for (std::size_t c = 0; c < u.m(); ++c) d += cell_dirichlet_density(u.component(c), i, j);
            if (cell_positive(u, i, j, tol)) {
                const double qm = q.cell_mean(i, j);
                d += qm * qm;
            }
            s += d;
        }
    return s * g.cell_area();
}

TruncationResult truncation_move(const VectorField& u, const WeightField& q, Vec2 x, double r, double rho,
                                 double tol) {
    const auto& g = u.grid();
    require_same_grid(g, q.grid(), "truncation_move");
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("truncation needs 0 < rho < 1");
    if (!(r > 0.0) || !g.contains_disk(x, r)) throw DomainError("truncation ball exits the domain");

    const long i0 = std::max(0L, static_cast<long>(std::floor((x.x - r - g.box().ax) / g.hx())));
    const long i1 = std::min(static_cast<long>(g.nx()) - 1, static_cast<long>(std::ceil((x.x + r - g.box().ax) / g.hx())));
    const long j0 = std::max(0L, static_cast<long>(std::floor((x.y - r - g.box().ay) / g.hy())));
    const long j1 = std::min(static_cast<long>(g.ny()) - 1, static_cast<long>(std::ceil((x.y + r - g.box().ay) / g.hy())));

    std::vector<std::size_t> ball;
    double sup = 0.0;
    for (long j = j0; j <= j1; ++j)
        for (long i = i0; i <= i1; ++i) {
            const std::size_t k = g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (norm(g.node(k) - x) >= r) continue;
            sup = std::max(sup, u.norm_at(k));
            if (!g.is_boundary(k)) ball.push_back(k);
        }
    TruncationResult res{u, false, 0.0};
    const double scale = sup;  // r * M with M = sup / r
    bool changed = false;
    for (std::size_t k : ball) {
        const double cap = scale * psi_rho((1.0 / r) * (g.node(k) - x), rho);
        for (std::size_t c = 0; c < u.m(); ++c) {
            if (u(c, k) > cap) {
                res.candidate(c, k) = cap;
                changed = true;
            }
        }
    }
    if (!changed) return res;
    const double before = local_energy(u, q, tol, i0 - 1, i1, j0 - 1, j1);
    const double after = local_energy(res.candidate, q, tol, i0 - 1, i1, j0 - 1, j1);
    res.delta_j = after - before;
    res.accepted = res.delta_j < -1e-13 * std::max(1.0, before);
    return res;
}

// ---------------------------------------------------------------------------

namespace {

// Local toggle machinery shared by flip_polish.
class FlipSearch {
public:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    FlipSearch(VectorField& u, const WeightField& q, double tol, std::size_t radius)
        : u_(u), q_(q), g_(u.grid()), tol_(tol), radius_(static_cast<long>(radius)) {}

    // Tries to toggle node k (and k2 when given). Returns true, keeping the
    // change, when accepted.
    bool try_toggle(std::size_t k, IterationRecord& rec, std::size_t k2 = kNone) {
        const long ka = static_cast<long>(k % g_.nx()), kb = static_cast<long>(k / g_.nx());
        const long la = k2 == kNone ? ka : static_cast<long>(k2 % g_.nx());
        const long lb = k2 == kNone ? kb : static_cast<long>(k2 / g_.nx());
        const long i0 = std::max(0L, std::min(ka, la) - radius_);
        const long i1 = std::min(static_cast<long>(g_.nx()) - 1, std::max(ka, la) + radius_);
        const long j0 = std::max(0L, std::min(kb, lb) - radius_);
        const long j1 = std::min(static_cast<long>(g_.ny()) - 1, std::max(kb, lb) + radius_);

        window_.clear();
        for (long j = j0; j <= j1; ++j)
            for (long i = i0; i <= i1; ++i) window_.push_back(g_.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
        backup_.assign(window_.size() * u_.m(), 0.0);
        for (std::size_t a = 0; a < window_.size(); ++a)
            for (std::size_t c = 0; c < u_.m(); ++c) backup_[a * u_.m() + c] = u_(c, window_[a]);

        std::size_t pos_before = 0;
        for (std::size_t w : window_) pos_before += u_.norm_at(w) > tol_ ? 1 : 0;

        const double before = local_energy(u_, q_, tol_, i0 - 1, i1, j0 - 1, j1);

        free_.clear();
        for (std::size_t w : window_) {
            if (g_.is_boundary(w)) continue;
            const bool was = u_.norm_at(w) > tol_;
            const bool positive = (w == k || w == k2) ? !was : was;
            if (positive) free_.push_back(w);
            else if (was)
                for (std::size_t c = 0; c < u_.m(); ++c) u_(c, w) = 0.0;
        }
        solve_laplace_dense(g_, free_, u_);
        for (std::size_t w : free_)
            for (std::size_t c = 0; c < u_.m(); ++c) u_(c, w) = std::max(0.0, u_(c, w));

        std::size_t pos_after = 0;
        for (std::size_t w : window_) pos_after += u_.norm_at(w) > tol_ ? 1 : 0;
        const double after = local_energy(u_, q_, tol_, i0 - 1, i1, j0 - 1, j1);
        const double delta = after - before;
        const double tie = 1e-13 * std::max(1.0, std::abs(before));
        const bool accept = (delta < -tie) || (std::abs(delta) <= tie && pos_after < pos_before);
        if (!accept) {
            restore();
            return false;
        }
        rec.kind = MoveKind::flip;
        rec.j_after = rec.j_before + delta;
        rec.d_moved = local_distance(i0, i1, j0, j1);
        return true;
    }

private:
    void restore() {
        for (std::size_t a = 0; a < window_.size(); ++a)
            for (std::size_t c = 0; c < u_.m(); ++c) u_(c, window_[a]) = backup_[a * u_.m() + c];
    }

    // metric_d between the current field and the backup, both differing only
    // inside the window.
    double local_distance(long i0, long i1, long j0, long j1) {
        const std::size_t m = u_.m();
        auto old_value = [&](std::size_t c, long i, long j) {
            if (i < i0 || i > i1 || j < j0 || j > j1) return u_(c, g_.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            const std::size_t a = static_cast<std::size_t>((j - j0) * (i1 - i0 + 1) + (i - i0));
            return backup_[a * m + c];
        };
        auto diff = [&](std::size_t c, long i, long j) {
            return u_(c, g_.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) - old_value(c, i, j);
        };
        const long nx = static_cast<long>(g_.nx()), ny = static_cast<long>(g_.ny());
        double l2 = 0.0, grad = 0.0, sym = 0.0;
        for (long j = j0; j <= j1; ++j)
            for (long i = i0; i <= i1; ++i) {
                const double w = ((i == 0 || i == nx - 1) ? 0.5 : 1.0) * ((j == 0 || j == ny - 1) ? 0.5 : 1.0);
                for (std::size_t c = 0; c < m; ++c) l2 += w * diff(c, i, j) * diff(c, i, j);
            }
        for (long cj = std::max(0L, j0 - 1); cj <= std::min(ny - 2, j1); ++cj)
            for (long ci = std::max(0L, i0 - 1); ci <= std::min(nx - 2, i1); ++ci) {
                bool pos_new = false, pos_old = false;
                for (int dj = 0; dj < 2; ++dj)
                    for (int di = 0; di < 2; ++di) {
                        double n_new = 0.0, n_old = 0.0;
                        for (std::size_t c = 0; c < m; ++c) {
                            const double vn = u_(c, g_.index(static_cast<std::size_t>(ci + di), static_cast<std::size_t>(cj + dj)));
                            const double vo = old_value(c, ci + di, cj + dj);
                            n_new += vn * vn;
                            n_old += vo * vo;
                        }
                        pos_new = pos_new || std::sqrt(n_new) > tol_;
                        pos_old = pos_old || std::sqrt(n_old) > tol_;
                    }
                sym += pos_new != pos_old ? 1.0 : 0.0;
                for (std::size_t c = 0; c < m; ++c) {
                    const double d00 = diff(c, ci, cj), d10 = diff(c, ci + 1, cj);
                    const double d01 = diff(c, ci, cj + 1), d11 = diff(c, ci + 1, cj + 1);
                    const double a = d10 - d00, b = d11 - d01, e = d01 - d00, f = d11 - d10;
                    grad += 0.5 * (a * a + b * b) / (g_.hx() * g_.hx()) + 0.5 * (e * e + f * f) / (g_.hy() * g_.hy());
                }
            }
        const double area = g_.cell_area();
        return std::sqrt((l2 + grad) * area) + sym * area;
    }

    VectorField& u_;
    const WeightField& q_;
    const GridSpec& g_;
    double tol_;
    long radius_;
    std::vector<std::size_t> window_;
    std::vector<std::size_t> free_;
    std::vector<double> backup_;
};

std::vector<std::size_t> flip_candidates(const VectorField& u, double tol) {
    const auto& g = u.grid();
    const auto interior = interior_nodes(g);
    if (interior.size() <= 64) return interior;
    const Mask pos = positivity_mask(u, tol);
    std::vector<std::size_t> out;
    for (std::size_t k : interior) {
        const std::size_t i = k % g.nx(), j = k / g.nx();
        bool interface = false;
        for (int dj = -1; dj <= 1 && !interface; ++dj)
            for (int di = -1; di <= 1; ++di) {
                const std::size_t n = g.index(i + di, j + dj);
                if (pos[n] != pos[k]) {
                    interface = true;
                    break;
                }
            }
        if (interface) out.push_back(k);
    }
    return out;
}

}  // namespace

Solution flip_polish(const VectorField& u, const WeightField& q, const BoundaryData& g, std::size_t radius,
                     std::uint64_t seed, double tol) {
    const auto& grid = u.grid();
    require_compatible(grid, q, g);
    if (tol < 0.0) tol = positivity_tolerance(g);
    Solution sol;
    sol.positivity_tol = tol;
    sol.u = u;
    pin_boundary(sol.u, g);
    double j = evaluate_J(sol.u, q, tol).total;
    std::mt19937_64 rng(seed);
    FlipSearch search(sol.u, q, tol, std::max<std::size_t>(radius, 1));
    constexpr std::size_t kMaxPasses = 200;
    for (std::size_t pass = 0; pass < kMaxPasses; ++pass) {
        auto cands = flip_candidates(sol.u, tol);
        seeded_shuffle(cands, rng);
        bool any = false;
        for (std::size_t k : cands) {
            IterationRecord rec;
            rec.j_before = j;
            if (search.try_toggle(k, rec)) {
                rec.iteration = sol.trace.size();
                sol.trace.push_back(rec);
                j = rec.j_after;
                any = true;
            }
        }
        if (any) continue;
        // Single toggles are exhausted: try adjacent pairs.
        for (std::size_t k : cands) {
            const std::size_t i = k % grid.nx(), jj = k / grid.nx();
            const std::size_t nbrs[3] = {grid.index(i + 1, jj), grid.index(i, jj + 1), grid.index(i + 1, jj + 1)};
            for (std::size_t k2 : nbrs) {
                if (grid.is_boundary(k2)) continue;
                IterationRecord rec;
                rec.j_before = j;
                if (search.try_toggle(k, rec, k2)) {
                    rec.iteration = sol.trace.size();
                    sol.trace.push_back(rec);
                    j = rec.j_after;
                    any = true;
                }
            }
        }
        if (!any) break;
    }
    sol.mask = positivity_mask(sol.u, tol);
    sol.energy = evaluate_J(sol.u, q, tol);
    return sol;
}

// ---------------------------------------------------------------------------

namespace {

class Minimizer {
public:
    Minimizer(const GridSpec& grid, const WeightField& q, const BoundaryData& g, const SolverConfig& cfg)
        : grid_(grid), q_(q), g_(g), cfg_(cfg), tol_(positivity_tolerance(g)) {}

    Solution run(const VectorField* initial, bool finest) {
        VectorField u = initial ? *initial : harmonic_replace(zero_interior(grid_, g_), Mask(grid_, true), g_, cfg_.harmonic_tol);
        pin_boundary(u, g_);
        clamp_nonnegative(u);

        std::vector<IterationRecord> trace;
        u = continuation(std::move(u), schedule(initial != nullptr, finest), trace);
        Solution best = exact_phase(std::move(u), std::move(trace));

        if (interior_nodes(grid_).size() <= kSmallInterior) {
            // Alternative starting sets for small problems: everything positive, nothing positive.
            const VectorField starts[2] = {
                harmonic_replace(zero_interior(grid_, g_), Mask(grid_, true), g_, cfg_.harmonic_tol),
                zero_interior(grid_, g_)};
            for (const auto& s : starts) {
                Solution alt = exact_phase(s, {});
                if (better(alt, best)) best = std::move(alt);
            }
        }
        best.mask = positivity_mask(best.u, tol_);
        best.energy = evaluate_J(best.u, q_, tol_);
        best.positivity_tol = tol_;
        for (std::size_t k = 0; k < best.trace.size(); ++k) best.trace[k].iteration = k;
        return best;
    }

private:
    bool better(const Solution& a, const Solution& b) const {
        const double tie = 1e-12 * std::max(1.0, std::abs(b.energy.total));
        if (a.energy.total < b.energy.total - tie) return true;
        if (a.energy.total > b.energy.total + tie) return false;
        return a.mask.count() < b.mask.count();
    }

    std::vector<double> schedule(bool warm, bool finest) const {
        if (finest && !cfg_.eps_schedule.empty()) return cfg_.eps_schedule;
        const double h = grid_.h();
        if (warm) return {4.0 * h, 2.0 * h, h};
        std::vector<double> out;
        double eps = std::max(0.5 * g_.max_value(), 2.0 * h);
        while (eps > h) {
            out.push_back(eps);
            eps *= 0.5;
        }
        out.push_back(std::min(eps, h));
        return out;
    }

    void record(std::vector<IterationRecord>& trace, MoveKind kind, double jb, double ja, const VectorField& before,
                const VectorField& after, double eps) const {
        IterationRecord rec;
        rec.iteration = trace.size();
        rec.kind = kind;
        rec.j_before = jb;
        rec.j_after = ja;
        rec.d_moved = metric_d(before, after, tol_);
        rec.eps = eps;
        trace.push_back(rec);
    }

    Mask saturated_mask(const VectorField& u, double eps) const {
        Mask out(grid_);
        for (std::size_t k : interior_nodes(grid_)) {
            const std::size_t i = k % grid_.nx(), j = k / grid_.nx();
            bool ok = true;
            for (int dj = -1; dj <= 1 && ok; ++dj)
                for (int di = -1; di <= 1; ++di)
                    if (u.norm_at(grid_.index(i + di, j + dj)) < eps) {
                        ok = false;
                        break;
                    }
            out.set(k, ok);
        }
        return out;
    }

    VectorField continuation(VectorField u, const std::vector<double>& eps_list, std::vector<IterationRecord>& trace) {
        const double tau_max = 2.0 / dirichlet_lipschitz(grid_);
        for (double eps : eps_list) {
            double tau = cfg_.step.initial_step > 0.0 ? cfg_.step.initial_step : 1.0 / dirichlet_lipschitz(grid_);
            for (std::size_t cycle = 0; cycle < cfg_.max_outer; ++cycle) {
                const double j_cycle = evaluate_J_smoothed(u, q_, eps).total;
                for (std::size_t s = 0; s < cfg_.descent_per_cycle; ++s) {
                    DescentResult res = descent_step(u, q_, g_, eps, cfg_.step, tau);
                    if (!res.accepted) break;
                    record(trace, MoveKind::descent, res.j_before, res.j_after, u, res.u, eps);
                    u = std::move(res.u);
                    tau = std::min(2.0 * res.step, tau_max);
                }
                const Mask sat = saturated_mask(u, eps);
                if (sat.count() > 0) {
                    VectorField cand = harmonic_replace(u, sat, g_, std::max(cfg_.harmonic_tol, 1e-6));
                    const double jb = evaluate_J_smoothed(u, q_, eps).total;
                    const double ja = evaluate_J_smoothed(cand, q_, eps).total;
                    if (ja < jb) {
                        record(trace, MoveKind::harmonic, jb, ja, u, cand, eps);
                        u = std::move(cand);
                    }
                }
                const double j_now = evaluate_J_smoothed(u, q_, eps).total;
                if (j_cycle - j_now <= 1e-9 * std::max(1.0, j_cycle)) break;
            }
            require_finite(u, "epsilon continuation");
        }
        return u;
    }

    // Harmonic replacement on the current positivity set; kept when J does not increase.
    double harmonic_on_positivity(VectorField& u, double j, std::vector<IterationRecord>& trace) const {
        VectorField cand = harmonic_replace(u, positivity_mask(u, tol_), g_, cfg_.harmonic_tol);
        const double jc = evaluate_J(cand, q_, tol_).total;
        if (jc <= j) {
            record(trace, MoveKind::harmonic, j, jc, u, cand, 0.0);
            u = std::move(cand);
            return jc;
        }
        return j;
    }

    bool truncation_sweep(VectorField& u, double& j, std::vector<IterationRecord>& trace) const {
        const double h = std::min(grid_.hx(), grid_.hy());
        bool any = false;
        for (double mult : {8.0, 16.0, 32.0}) {
            const double r = mult * h;
            const double spacing = 8.0 * h;
            const auto& b = grid_.box();
            for (double cy = b.ay + spacing; cy <= b.by - spacing + 1e-12; cy += spacing)
                for (double cx = b.ax + spacing; cx <= b.bx - spacing + 1e-12; cx += spacing) {
                    const Vec2 x{cx, cy};
                    if (!grid_.contains_disk(x, r)) continue;
                    TruncationResult t = truncation_move(u, q_, x, r, cfg_.truncation_rho, tol_);
                    if (!t.accepted) continue;
                    IterationRecord rec;
                    rec.iteration = trace.size();
                    rec.kind = MoveKind::truncation;
                    rec.j_before = j;
                    rec.j_after = j + t.delta_j;
                    rec.d_moved = metric_d(u, t.candidate, tol_);
                    trace.push_back(rec);
                    j = rec.j_after;
                    u = std::move(t.candidate);
                    any = true;
                }
        }
        return any;
    }

    Solution exact_phase(VectorField u, std::vector<IterationRecord> trace) const {
        double j = evaluate_J(u, q_, tol_).total;
        j = harmonic_on_positivity(u, j, trace);
        for (std::size_t round = 0; round < cfg_.polish_rounds; ++round) {
            bool changed = truncation_sweep(u, j, trace);
            if (changed) j = harmonic_on_positivity(u, j, trace);

            Solution fp = flip_polish(u, q_, g_, cfg_.flip_radius, cfg_.seed + round, tol_);
            if (!fp.trace.empty()) {
                changed = true;
                for (auto rec : fp.trace) {
                    rec.iteration = trace.size();
                    trace.push_back(rec);
                }
                u = std::move(fp.u);
                j = fp.energy.total;
            }
            j = harmonic_on_positivity(u, j, trace);
            if (!changed) break;
        }
        require_finite(u, "exact phase");
        Solution sol;
        sol.u = std::move(u);
        sol.mask = positivity_mask(sol.u, tol_);
        sol.energy = evaluate_J(sol.u, q_, tol_);
        sol.trace = std::move(trace);
        sol.positivity_tol = tol_;
        return sol;
    }

    const GridSpec& grid_;
    const WeightField& q_;
    const BoundaryData& g_;
    const SolverConfig& cfg_;
    double tol_;
};

bool coarsenable(const GridSpec& g) {
    return (g.nx() - 1) % 2 == 0 && (g.ny() - 1) % 2 == 0 && (g.nx() - 1) / 2 + 1 >= 33 && (g.ny() - 1) / 2 + 1 >= 33;
}

GridSpec coarsen(const GridSpec& g) { return GridSpec(g.box(), (g.nx() - 1) / 2 + 1, (g.ny() - 1) / 2 + 1); }

WeightField restrict_weight(const WeightField& q, const GridSpec& coarse) {
    const auto& fine = q.grid();
    ScalarField v(coarse);
    for (std::size_t j = 0; j < coarse.ny(); ++j)
        for (std::size_t i = 0; i < coarse.nx(); ++i) v.at(i, j) = q.field().at(2 * i, 2 * j);
    (void)fine;
    return WeightField(std::move(v), q.q_min(), q.q_max());
}

BoundaryData restrict_boundary(const BoundaryData& g, const GridSpec& coarse) {
    BoundaryData out(coarse, g.m());
    const auto& fine = g.grid();
    for (std::size_t c = 0; c < g.m(); ++c)
        for (std::size_t k = 0; k < coarse.node_count(); ++k) {
            if (!coarse.is_boundary(k)) continue;
            const std::size_t i = k % coarse.nx(), j = k / coarse.nx();
            out.set(c, k, g(c, fine.index(2 * i, 2 * j)));
        }
    return out;
}

VectorField prolong(const VectorField& coarse, const GridSpec& fine) {
    VectorField out(fine, coarse.m());
    std::vector<double> vals(coarse.m());
    for (std::size_t k = 0; k < fine.node_count(); ++k) {
        interpolate(coarse, fine.node(k), vals);
        for (std::size_t c = 0; c < coarse.m(); ++c) out(c, k) = vals[c];
    }
    return out;
}

Solution minimize_level(const GridSpec& grid, const WeightField& q, const BoundaryData& g, const SolverConfig& cfg,
                        bool finest) {
    if (cfg.multilevel && coarsenable(grid)) {
        const GridSpec coarse = coarsen(grid);
        const WeightField qc = restrict_weight(q, coarse);
        const BoundaryData gc = restrict_boundary(g, coarse);
        const Solution cs = minimize_level(coarse, qc, gc, cfg, false);
        const VectorField init = prolong(cs.u, grid);
        return Minimizer(grid, q, g, cfg).run(&init, finest);
    }
    return Minimizer(grid, q, g, cfg).run(nullptr, finest);
}

}  // namespace

Solution minimize(const GridSpec& grid, const WeightField& q, const BoundaryData& g, const SolverConfig& config) {
    require_compatible(grid, q, g);
    config.validate(grid);
    const double tol = positivity_tolerance(g);
    if (g.identically_zero()) {
        Solution sol;
        sol.u = VectorField(grid, g.m());
        sol.mask = Mask(grid);
        sol.energy = evaluate_J(sol.u, q, tol);
        sol.positivity_tol = tol;
        return sol;
    }
    return minimize_level(grid, q, g, config, true);
}

// ---------------------------------------------------------------------------

Solution brute_force_minimize(const GridSpec& grid, const WeightField& q, const BoundaryData& g) {
    require_compatible(grid, q, g);
    const auto interior = interior_nodes(grid);
    const std::size_t n = interior.size();
    if (n > kBruteForceMaxInterior) {
        throw DomainError("brute force limited to " + std::to_string(kBruteForceMaxInterior) + " interior nodes, got " +
                          std::to_string(n));
    }
    const double tol = positivity_tolerance(g);
    const VectorField base = zero_interior(grid, g);

    Solution best;
    best.positivity_tol = tol;
    bool have = false;
    std::vector<std::uint8_t> best_flags;
    std::vector<std::size_t> free;
    free.reserve(n);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        free.clear();
        for (std::size_t a = 0; a < n; ++a)
            if (bits >> a & 1U) free.push_back(interior[a]);
        VectorField u = base;
        solve_laplace_dense(grid, free, u);
        clamp_nonnegative(u);
        const EnergyBreakdown e = evaluate_J(u, q, tol);
        std::vector<std::uint8_t> flags(n);
        std::size_t count = 0;
        for (std::size_t a = 0; a < n; ++a) {
            flags[a] = u.norm_at(interior[a]) > tol ? 1 : 0;
            count += flags[a];
        }
        bool take = !have;
        if (have) {
            const double tie = 1e-12 * std::max(1.0, std::abs(best.energy.total));
            if (e.total < best.energy.total - tie) {
                take = true;
            } else if (e.total <= best.energy.total + tie) {
                const std::size_t best_count = static_cast<std::size_t>(std::count(best_flags.begin(), best_flags.end(), 1));
                take = count < best_count ||
                       (count == best_count && std::lexicographical_compare(flags.begin(), flags.end(), best_flags.begin(),
                                                                            best_flags.end()));
            }
        }
        if (take) {
            have = true;
            best.u = std::move(u);
            best.energy = e;
            best_flags = std::move(flags);
        }
    }
    best.mask = positivity_mask(best.u, tol);
    return best;
}

}  // namespace fbmin
