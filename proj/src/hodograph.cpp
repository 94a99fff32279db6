#include "fbmin/hodograph.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fbmin/error.hpp"
#include "fbmin/io.hpp"

namespace fbmin {

namespace {

constexpr int kBisectionSteps = 60;

struct Frame {
    int axis = 1;
    int orientation = 1;

    Vec2 physical(double t, double s) const {
        const double n = orientation * s;
        return axis == 1 ? Vec2{t, n} : Vec2{n, t};
    }
};

// Normal-axis range of the window, in s.
std::pair<double, double> s_range(const Box& w, const Frame& f) {
    const double c0 = f.axis == 1 ? w.ay : w.ax;
    const double c1 = f.axis == 1 ? w.by : w.bx;
    return f.orientation > 0 ? std::pair{c0, c1} : std::pair{-c1, -c0};
}

std::pair<double, double> t_range(const Box& w, const Frame& f) {
    return f.axis == 1 ? std::pair{w.ax, w.bx} : std::pair{w.ay, w.by};
}

// Source grid lines crossing the column, in increasing s, endpoints included.
std::vector<double> column_samples(const GridSpec& g, const Frame& f, double s0, double s1) {
    std::vector<double> s{s0, s1};
    const std::size_t n = f.axis == 1 ? g.ny() : g.nx();
    for (std::size_t k = 0; k < n; ++k) {
        const double c = f.orientation * (f.axis == 1 ? g.y(k) : g.x(k));
        if (c > s0 && c < s1) s.push_back(c);
    }
    std::sort(s.begin(), s.end());
    const std::size_t lines = s.size();
    for (std::size_t k = 0; k + 1 < lines; ++k) s.push_back(0.5 * (s[k] + s[k + 1]));
    std::sort(s.begin(), s.end());
    return s;
}

double first_diff(const ScalarField& f, std::size_t i, std::size_t j, bool along_t) {
    const auto& g = f.grid();
    const std::size_t n = along_t ? g.nx() : g.ny();
    const std::size_t k = along_t ? i : j;
    const double h = along_t ? g.hx() : g.hy();
    auto at = [&](std::size_t kk) { return along_t ? f.at(kk, j) : f.at(i, kk); };
    if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (k + 1 == n) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

double second_diff(const ScalarField& f, std::size_t i, std::size_t j, bool along_t) {
    const auto& g = f.grid();
    const std::size_t n = along_t ? g.nx() : g.ny();
    const std::size_t k = along_t ? i : j;
    const double h = along_t ? g.hx() : g.hy();
    auto at = [&](std::size_t kk) { return along_t ? f.at(kk, j) : f.at(i, kk); };
    if (k == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h);
    if (k + 1 == n) return (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / (h * h);
    return (at(k + 1) - 2.0 * at(k) + at(k - 1)) / (h * h);
}

// Catmull-Rom weights for nodes -1, 0, 1, 2 at offset t in [0, 1].
std::array<double, 4> cubic_weights(double t) {
    const double t2 = t * t, t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2)};
}

// Falls back to bilinear when the stencil leaves the grid or meets a node <= floor.
double interpolate_smooth(const ScalarField& f, Vec2 p, double floor) {
    const auto& g = f.grid();
    const double fx = (p.x - g.box().ax) / g.hx(), fy = (p.y - g.box().ay) / g.hy();
    const double ix = std::floor(fx), iy = std::floor(fy);
    if (ix < 1.0 || iy < 1.0 || ix + 2.0 > static_cast<double>(g.nx() - 1) || iy + 2.0 > static_cast<double>(g.ny() - 1))
        return interpolate(f, p);
    const auto i0 = static_cast<std::size_t>(ix) - 1, j0 = static_cast<std::size_t>(iy) - 1;
    const auto wx = cubic_weights(fx - ix), wy = cubic_weights(fy - iy);
    double sum = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
        double row = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            const double v = f.at(i0 + a, j0 + b);
            if (v <= floor) return interpolate(f, p);
            row += wx[a] * v;
        }
        sum += wy[b] * row;
    }
    return sum;
}

double apply_operator(const PatchDerivatives& v, const PatchDerivatives& f, std::size_t k) {
    const double p = v.dt[k], q = v.dy[k];
    const double a = (1.0 + p * p) / (q * q);
    return a * f.dyy[k] + f.dtt[k] - 2.0 * (p / q) * f.dty[k];
}

}  // namespace

Vec2 HodographPatch::physical(double t, double s) const {
    return Frame{options.normal_axis, options.orientation}.physical(t, s);
}

HodographPatch hodograph_transform(const VectorField& u, const Box& window, const HodographOptions& options) {
    const auto& g = u.grid();
    if (options.lead >= u.m()) throw DomainError("lead component out of range");
    if (options.normal_axis != 0 && options.normal_axis != 1) throw DomainError("normal axis must be 0 or 1");
    if (options.orientation != 1 && options.orientation != -1) throw DomainError("orientation must be +1 or -1");
    if (options.tangential_nodes < 4 || options.level_nodes < 4)
        throw DomainError("patch needs at least 4 nodes per axis");
    if (!(window.bx > window.ax && window.by > window.ay)) throw DomainError("degenerate hodograph window");
    if (!g.contains({window.ax, window.ay}) || !g.contains({window.bx, window.by}))
        throw DomainError("hodograph window exits the domain");
    if (!(options.level_min >= 0.0)) throw DomainError("lowest level must be nonnegative");

    const Frame fr{options.normal_axis, options.orientation};
    const auto [s0, s1] = s_range(window, fr);
    const auto [t0, t1] = t_range(window, fr);
    const ScalarField& lead = u.component(options.lead);
    const double scale = std::max(1.0, u.max_abs());
    const double ptol = kPositivityRelTol * scale;
    auto sample = [&](const ScalarField& f, Vec2 p) {
        return options.cubic ? interpolate_smooth(f, p, ptol) : interpolate(f, p);
    };
    auto value = [&](double t, double s) { return sample(lead, fr.physical(t, s)); };
    const std::vector<double> samples = column_samples(g, fr, s0, s1);
    const std::size_t nt = options.tangential_nodes;
    std::vector<double> ts(nt);
    double min_column_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nt; ++i) {
        ts[i] = i + 1 == nt ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(nt - 1);
        double prev = value(ts[i], samples.front());
        if (prev > options.level_min + ptol)
            throw DomainError("window bottom lies above the lowest level at t = " + std::to_string(ts[i]));
        double col_max = prev;
        for (std::size_t k = 1; k < samples.size(); ++k) {
            const double cur = value(ts[i], samples[k]);
            if (prev > ptol && !(cur > prev))
                throw DomainError("lead component is not strictly increasing along the column at t = " +
                                  std::to_string(ts[i]));
            col_max = std::max(col_max, cur);
            prev = cur;
        }
        min_column_max = std::min(min_column_max, col_max);
    }
    const double level_max = options.level_max > 0.0 ? options.level_max : 0.9 * min_column_max;
    if (!(level_max > options.level_min)) throw DomainError("empty level range");
    if (level_max >= min_column_max) throw DomainError("level exceeds the maximum of a column");

    HodographPatch patch;
    patch.window = window;
    patch.options = options;
    patch.options.level_max = level_max;
    patch.ygrid = make_grid({t0, t1, options.level_min, level_max}, nt, options.level_nodes);
    patch.v1 = ScalarField(patch.ygrid);
    patch.root_tolerance = 1e-12 * scale;
    for (std::size_t j = 0; j < patch.ygrid.ny(); ++j) {
        const double level = patch.ygrid.y(j);
        for (std::size_t i = 0; i < nt; ++i) {
            double lo = s0, hi = s1;
            for (int it = 0; it < kBisectionSteps; ++it) {
                const double mid = 0.5 * (lo + hi);
                (value(ts[i], mid) > level ? hi : lo) = mid;
            }
            const double s = 0.5 * (lo + hi);
            patch.v1.at(i, j) = s;
            patch.roundtrip_error = std::max(patch.roundtrip_error, std::abs(value(ts[i], s) - level));
        }
    }
    for (std::size_t c = 0; c < u.m(); ++c) {
        if (c == options.lead) continue;
        ScalarField vk(patch.ygrid);
        for (std::size_t k = 0; k < patch.ygrid.node_count(); ++k)
            vk[k] = sample(u.component(c), fr.physical(patch.ygrid.node(k).x, patch.v1[k]));
        patch.companions.push_back(std::move(vk));
    }
    const PatchDerivatives d = patch_derivatives(patch.v1);
    patch.dv1_dt = d.dt;
    patch.dv1_dy = d.dy;
    for (std::size_t k = 0; k < patch.ygrid.node_count(); ++k)
        if (!(patch.dv1_dy[k] > 0.0)) throw DomainError("inverse map is not increasing in the level");
    return patch;
}

PatchDerivatives patch_derivatives(const ScalarField& f) {
    const auto& g = f.grid();
    if (g.nx() < 4 || g.ny() < 4) throw DomainError("patch needs at least 4 nodes per axis");
    PatchDerivatives d{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            d.dt.at(i, j) = first_diff(f, i, j, true);
            d.dy.at(i, j) = first_diff(f, i, j, false);
            d.dtt.at(i, j) = second_diff(f, i, j, true);
            d.dyy.at(i, j) = second_diff(f, i, j, false);
        }
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) d.dty.at(i, j) = first_diff(d.dy, i, j, true);
    return d;
}

OperatorResidual operator_residual(const HodographPatch& patch) {
    const auto& g = patch.ygrid;
    if (g.nx() < 3 || g.ny() < 3) throw DomainError("patch too small for the operator residual");
    const PatchDerivatives dv = patch_derivatives(patch.v1);
    OperatorResidual out;
    auto fill = [&](const ScalarField& f) {
        const PatchDerivatives df = &f == &patch.v1 ? dv : patch_derivatives(f);
        ScalarField r(g);
        for (std::size_t j = 1; j + 1 < g.ny(); ++j)
            for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
                const std::size_t k = g.index(i, j);
                r[k] = apply_operator(dv, df, k);
                out.max_abs = std::max(out.max_abs, std::abs(r[k]));
            }
        return r;
    };
    out.lead = fill(patch.v1);
    for (const auto& vk : patch.companions) out.companions.push_back(fill(vk));
    return out;
}

BoundaryResidual fb_bc_residual(const HodographPatch& patch, const std::function<double(Vec2)>& q) {
    if (patch.options.level_min != 0.0) throw DomainError("patch has no free-boundary row");
    const auto& g = patch.ygrid;
    std::vector<ScalarField> dk;
    for (const auto& vk : patch.companions) dk.push_back(patch_derivatives(vk).dy);
    BoundaryResidual out;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const std::size_t k = g.index(i, 0);
        const double p = patch.dv1_dt[k], s = patch.dv1_dy[k];
        double extra = 1.0;
        for (const auto& d : dk) extra += d[k] * d[k];
        const double rhs = (1.0 + p * p) / (s * s) * extra;
        const double qv = q(patch.physical(g.x(i), patch.v1[k]));
        if (!(qv > 0.0)) throw DomainError("weight must be positive on the free boundary");
        const double r = std::abs(qv * qv - rhs) / (qv * qv);
        out.t.push_back(g.x(i));
        out.residual.push_back(r);
        out.max = std::max(out.max, r);
    }
    return out;
}

BoundaryResidual fb_bc_residual(const HodographPatch& patch, const WeightField& q) {
    return fb_bc_residual(patch, [&q](Vec2 p) { return q.at(p); });
}

EllipticityReport ellipticity_margin(const HodographPatch& patch, double slope_limit) {
    EllipticityReport out;
    out.margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < patch.ygrid.node_count(); ++k) {
        const double p = patch.dv1_dt[k], q = patch.dv1_dy[k];
        const double a = (1.0 + p * p) / (q * q), b = -p / q;
        const double lam = 0.5 * (a + 1.0) - std::hypot(0.5 * (a - 1.0), b);
        out.margin = std::min(out.margin, lam);
        out.max_tangential_slope = std::max(out.max_tangential_slope, std::abs(p));
    }
    out.flatness_ok = out.max_tangential_slope <= slope_limit && out.margin > 0.0;
    return out;
}

ChainRuleResidual chain_rule_residual(const HodographPatch& patch, const VectorField& u, double step) {
    const auto& src = u.grid();
    const double d = step > 0.0 ? step : src.h();
    const ScalarField& lead = u.component(patch.options.lead);
    const double ptol = kPositivityRelTol * std::max(1.0, u.max_abs());
    auto f = [&](Vec2 q) { return patch.options.cubic ? interpolate_smooth(lead, q, ptol) : interpolate(lead, q); };
    const int axis = patch.options.normal_axis;
    const Vec2 en = axis == 1 ? Vec2{0.0, 1.0} : Vec2{1.0, 0.0};
    const Vec2 et = axis == 1 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const auto& g = patch.ygrid;
    ChainRuleResidual out;
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
        for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            const Vec2 p = patch.physical(g.x(i), patch.v1[k]);
            if (!src.contains(p + d * en) || !src.contains(p - d * en) || !src.contains(p + d * et) ||
                !src.contains(p - d * et))
                continue;
            const double du_s =
                patch.options.orientation * (f(p + d * en) - f(p - d * en)) / (2.0 * d);
            const double du_t = (f(p + d * et) - f(p - d * et)) / (2.0 * d);
            out.normal = std::max(out.normal, std::abs(1.0 - du_s * patch.dv1_dy[k]));
            out.tangential = std::max(out.tangential, std::abs(du_t + du_s * patch.dv1_dt[k]));
        }
    return out;
}

FlatPatch choose_flat_patch(const VectorField& u, double tol, double half_width, double depth,
                            std::size_t candidates) {
    const auto& g = u.grid();
    if (!(half_width > 0.0 && depth > 0.0)) throw DomainError("patch extents must be positive");
    const Mask mask = positivity_mask(u, tol);
    const FreeBoundary fb = extract_free_boundary(mask);
    const auto picks = select_fb_points(fb, g, std::hypot(half_width, depth), candidates);
    if (picks.empty()) throw DomainError("no interface point admits a patch inside the domain");
    FlatPatch best;
    bool found = false;
    for (std::size_t k : picks) {
        const Vec2 x = fb.points[k];
        const double sigma = flatness(u, tol, x, half_width).sigma;
        if (!found || sigma < best.sigma) {
            best.point = x;
            best.sigma = sigma;
            const Vec2 nu = fb.normals[k];
            best.options.normal_axis = std::abs(nu.y) >= std::abs(nu.x) ? 1 : 0;
            const double nu_n = best.options.normal_axis == 1 ? nu.y : nu.x;
            best.options.orientation = nu_n > 0.0 ? -1 : 1;
            found = true;
        }
    }
    const int axis = best.options.normal_axis;
    const double pn = axis == 1 ? best.point.y : best.point.x;
    const double pt = axis == 1 ? best.point.x : best.point.y;
    // Positive side of the normal coordinate is where the lead component grows.
    const double lo = best.options.orientation > 0 ? pn - half_width : pn - depth;
    const double hi = best.options.orientation > 0 ? pn + depth : pn + half_width;
    best.window = axis == 1 ? Box{pt - half_width, pt + half_width, lo, hi} : Box{lo, hi, pt - half_width, pt + half_width};
    const Vec2 inner = Frame{axis, best.options.orientation}.physical(
        pt, best.options.orientation * pn + 0.5 * depth);
    if (!g.contains(inner)) throw DomainError("patch exits the domain");
    std::vector<double> vals(u.m());
    interpolate(u, inner, vals);
    best.options.lead = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    return best;
}

double RefinementStudy::ratio() const {
    if (operator_max.size() < 2 || !(operator_max.back() > 0.0)) return 0.0;
    return operator_max.front() / operator_max.back();
}

RefinementStudy hodograph_refinement_study(const VectorField& u, const WeightField& q, double tol) {
    const double h = u.grid().h();
    RefinementStudy study;
    study.patch = choose_flat_patch(u, tol, 16.0 * h, 40.0 * h);
    for (std::size_t n : {9, 17}) {
        HodographOptions o = study.patch.options;
        o.tangential_nodes = n;
        o.level_nodes = n;
        o.level_min = 8.0 * h * q.at(study.patch.point);
        const HodographPatch p = hodograph_transform(u, study.patch.window, o);
        study.nodes.push_back(n);
        study.operator_max.push_back(operator_residual(p).max_abs);
        study.ellipticity.push_back(ellipticity_margin(p).margin);
    }
    return study;
}

void export_patch(const HodographPatch& patch, const std::filesystem::path& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    io::write_fbm(patch.v1, dir / (stem + "_v1.fbm"));
    for (std::size_t c = 0; c < patch.companions.size(); ++c)
        io::write_fbm(patch.companions[c], dir / (stem + "_v" + std::to_string(c + 2) + ".fbm"));
    const OperatorResidual r = operator_residual(patch);
    io::write_fbm(r.lead, dir / (stem + "_residual1.fbm"));
    for (std::size_t c = 0; c < r.companions.size(); ++c)
        io::write_fbm(r.companions[c], dir / (stem + "_residual" + std::to_string(c + 2) + ".fbm"));
}

}  // namespace fbmin
