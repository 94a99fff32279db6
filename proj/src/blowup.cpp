#include "fbmin/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>
#include <json.hpp>

#include "fbmin/diagnostics.hpp"
#include "fbmin/error.hpp"
#include "fbmin/io.hpp"

namespace fbmin {

double lipschitz_bound(const VectorField& u) {
    const auto& g = u.grid();
    double lip = 0.0;
    for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            double dx = 0.0, dy = 0.0;
            for (std::size_t c = 0; c < u.m(); ++c) {
                if (i + 1 < g.nx()) dx += std::pow(u(c, g.index(i + 1, j)) - u(c, k), 2);
                if (j + 1 < g.ny()) dy += std::pow(u(c, g.index(i, j + 1)) - u(c, k), 2);
            }
            lip = std::max({lip, std::sqrt(dx) / g.hx(), std::sqrt(dy) / g.hy()});
        }
    return lip;
}

BlowupFrame rescale(const VectorField& u, Vec2 x, double r, const GridSpec& target) {
    return rescale(u, x, r, target, lipschitz_bound(u));
}

BlowupFrame rescale(const VectorField& u, Vec2 x, double r, const GridSpec& target, double lipschitz) {
    const auto& src = u.grid();
    if (!(r > 0.0)) throw DomainError("rescaling radius must be positive");
    const Box& t = target.box();
    for (Vec2 corner : {Vec2{t.ax, t.ay}, Vec2{t.bx, t.ay}, Vec2{t.ax, t.by}, Vec2{t.bx, t.by}})
        if (!src.contains(x + r * corner)) throw DomainError("rescaled window exits the domain");
    BlowupFrame f;
    f.center = x;
    f.radius = r;
    f.field = VectorField(target, u.m());
    std::vector<double> buf(u.m());
    for (std::size_t k = 0; k < target.node_count(); ++k) {
        interpolate(u, x + r * target.node(k), buf);
        for (std::size_t c = 0; c < u.m(); ++c) f.field(c, k) = buf[c] / r;
    }
    f.tolerance = std::sqrt(2.0) * src.h() * lipschitz / r;
    return f;
}

BlowupSequence blowup_sequence(const VectorField& u, double tol, Vec2 x, const std::vector<double>& radii,
                               const GridSpec& target) {
    if (radii.size() < 2) throw DomainError("a blowup sequence needs at least two radii");
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (!(radii[k] < radii[k - 1])) throw DomainError("blowup radii must be strictly decreasing");
    const Mask mask = positivity_mask(u, tol);
    if (mask.all_equal()) throw NoFreeBoundary();
    if (distance_to_free_boundary(mask, x) > u.grid().h() * (1.0 + 1e-9))
        throw DomainError("center is not within h of the free boundary");
    const double lip = lipschitz_bound(u);
    BlowupSequence seq;
    for (double r : radii) seq.frames.push_back(rescale(u, x, r, target, lip));
    for (std::size_t k = 0; k + 1 < seq.frames.size(); ++k) {
        double d = 0.0;
        const auto& a = seq.frames[k].field;
        const auto& b = seq.frames[k + 1].field;
        for (std::size_t c = 0; c < a.m(); ++c)
            for (std::size_t n = 0; n < target.node_count(); ++n) d = std::max(d, std::abs(a(c, n) - b(c, n)));
        seq.distances.push_back(d);
    }
    return seq;
}

namespace {

struct FitData {
    std::vector<Vec2> y;
    std::vector<double> vals;  // node-major, m per node
    std::size_t m = 0;
};

// Best e for a fixed direction and its squared misfit.
double misfit_for(const FitData& d, double q, Vec2 nu, std::vector<double>& e) {
    const std::size_t m = d.m;
    e.assign(m, 0.0);
    double tt = 0.0;
    for (std::size_t a = 0; a < d.y.size(); ++a) {
        const double t = std::max(0.0, dot(nu, d.y[a]));
        tt += t * t;
        for (std::size_t c = 0; c < m; ++c) e[c] += d.vals[a * m + c] * t;
    }
    double en = 0.0;
    for (double& v : e) {
        v = std::max(0.0, v);
        en += v * v;
    }
    en = std::sqrt(en);
    if (en > 0.0) {
        for (double& v : e) v /= en;
    } else {
        e.assign(m, 0.0);
        e[0] = 1.0;
    }
    (void)tt;
    double s = 0.0;
    for (std::size_t a = 0; a < d.y.size(); ++a) {
        const double t = q * std::max(0.0, dot(nu, d.y[a]));
        for (std::size_t c = 0; c < m; ++c) s += std::pow(d.vals[a * m + c] - t * e[c], 2);
    }
    return s;
}

double sup_misfit(const FitData& d, double q, Vec2 nu, const std::vector<double>& e) {
    double s = 0.0;
    for (std::size_t a = 0; a < d.y.size(); ++a) {
        const double t = q * std::max(0.0, dot(nu, d.y[a]));
        for (std::size_t c = 0; c < d.m; ++c) s = std::max(s, std::abs(d.vals[a * d.m + c] - t * e[c]));
    }
    return s;
}

Vec2 direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

RegularFit classify_regular(const BlowupFrame& frame, double q) { return classify_regular(frame.field, q); }

RegularFit classify_regular(const VectorField& frame, double q) {
    if (!(q > 0.0)) throw DomainError("profile slope must be positive");
    const auto& g = frame.grid();
    for (std::size_t c = 0; c < frame.m(); ++c) frame.component(c).require_finite("blowup frame");
    if (frame.max_abs() == 0.0) throw DomainError("frame is identically zero: direction undefined");
    FitData d;
    d.m = frame.m();
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        const Vec2 y = g.node(k);
        if (norm(y) > 1.0 + 1e-12) continue;
        d.y.push_back(y);
        for (std::size_t c = 0; c < d.m; ++c) d.vals.push_back(frame(c, k));
    }
    if (d.y.empty()) throw DomainError("frame grid has no nodes in the unit ball");

    constexpr std::size_t kAngles = 1024;
    const double step = 2.0 * std::numbers::pi / kAngles;
    std::vector<double> e;
    double best_angle = 0.0, best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kAngles; ++k) {
        const double s = misfit_for(d, q, direction(static_cast<double>(k) * step), e);
        if (s < best) {  // strict: ties keep the smallest angle
            best = s;
            best_angle = static_cast<double>(k) * step;
        }
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best_angle - step, b = best_angle + step;
    double c = b - phi * (b - a), dd = a + phi * (b - a);
    double fc = misfit_for(d, q, direction(c), e), fd = misfit_for(d, q, direction(dd), e);
    for (int it = 0; it < 100; ++it) {
        if (fc <= fd) {
            b = dd;
            dd = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = misfit_for(d, q, direction(c), e);
        } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + phi * (b - a);
            fd = misfit_for(d, q, direction(dd), e);
        }
    }
    RegularFit fit;
    double angle = fc <= fd ? c : dd;
    if (std::min(fc, fd) > best) angle = best_angle;
    fit.nu = direction(angle);
    double s2 = misfit_for(d, q, fit.nu, fit.e);

    // Polish: linear fit on the nodes clearly inside the positive side, then
    // the rank-one factor of the fitted gradient matrix.
    {
        const double margin = 2.0 * g.h();
        std::vector<std::size_t> active;
        for (std::size_t n = 0; n < d.y.size(); ++n)
            if (dot(fit.nu, d.y[n]) > margin) active.push_back(n);
        if (active.size() >= 3) {
            Eigen::MatrixXd Y(static_cast<Eigen::Index>(active.size()), 2);
            Eigen::MatrixXd V(static_cast<Eigen::Index>(active.size()), static_cast<Eigen::Index>(d.m));
            for (std::size_t r = 0; r < active.size(); ++r) {
                const auto ri = static_cast<Eigen::Index>(r);
                Y(ri, 0) = d.y[active[r]].x;
                Y(ri, 1) = d.y[active[r]].y;
                for (std::size_t cc = 0; cc < d.m; ++cc) V(ri, static_cast<Eigen::Index>(cc)) = d.vals[active[r] * d.m + cc];
            }
            const Eigen::MatrixXd A = Y.colPivHouseholderQr().solve(V).transpose();  // m x 2
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
            Eigen::VectorXd ev = svd.matrixU().col(0);
            Eigen::Vector2d nv = svd.matrixV().col(0);
            if (ev.sum() < 0.0) {
                ev = -ev;
                nv = -nv;
            }
            const Vec2 nu2 = normalized(Vec2{nv(0), nv(1)});
            std::vector<double> e2;
            const double s2b = misfit_for(d, q, nu2, e2);
            if (s2b < s2) {
                fit.nu = nu2;
                fit.e = e2;
                s2 = s2b;
            }
        }
    }
    fit.l2_misfit = std::sqrt(s2 / static_cast<double>(d.y.size() * d.m));
    fit.residual = sup_misfit(d, q, fit.nu, fit.e);
    return fit;
}

void export_frame(const BlowupFrame& frame, const std::filesystem::path& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    for (std::size_t c = 0; c < frame.field.m(); ++c)
        io::write_fbm(frame.field.component(c), dir / (stem + "_u" + std::to_string(c + 1) + ".fbm"));
    nlohmann::json j;
    j["x"] = {frame.center.x, frame.center.y};
    j["r"] = frame.radius;
    j["tolerance"] = frame.tolerance;
    std::ofstream out(dir / (stem + ".json"));
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write " + (dir / (stem + ".json")).string());
}

}  // namespace fbmin
