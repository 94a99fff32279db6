#include "fbmin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fbmin/error.hpp"

namespace fbmin {

namespace {

constexpr double kBoxSlack = 1e-12;

double box_scale(const Box& b) {
    return std::max({1.0, std::abs(b.ax), std::abs(b.bx), std::abs(b.ay), std::abs(b.by)});
}

}  // namespace

GridSpec::GridSpec(Box box, std::size_t nx, std::size_t ny) : box_(box), nx_(nx), ny_(ny) {
    if (nx < 3 || ny < 3) {
        throw DomainError("grid needs at least 3 nodes per axis, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
    }
    if (!(box.bx > box.ax) || !(box.by > box.ay) || !std::isfinite(box.ax) || !std::isfinite(box.bx) ||
        !std::isfinite(box.ay) || !std::isfinite(box.by)) {
        throw DomainError("degenerate box");
    }
    hx_ = (box.bx - box.ax) / static_cast<double>(nx - 1);
    hy_ = (box.by - box.ay) / static_cast<double>(ny - 1);
}

bool GridSpec::contains(Vec2 p) const {
    const double s = kBoxSlack * box_scale(box_);
    return p.x >= box_.ax - s && p.x <= box_.bx + s && p.y >= box_.ay - s && p.y <= box_.by + s;
}

bool GridSpec::contains_disk(Vec2 c, double r) const {
    const double s = kBoxSlack * box_scale(box_);
    return c.x - r >= box_.ax - s && c.x + r <= box_.bx + s && c.y - r >= box_.ay - s && c.y + r <= box_.by + s;
}

GridSpec make_grid(Box box, std::size_t nx, std::size_t ny) { return GridSpec(box, nx, ny); }

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw DomainError(std::string("grid mismatch in ") + what);
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridSpec grid, double fill) : grid_(grid), values_(grid.node_count(), fill) {}

ScalarField::ScalarField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.node_count()) {
        throw DomainError("field has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_.node_count()) + " nodes");
    }
    require_finite("ScalarField");
}

ScalarField ScalarField::sample(const GridSpec& grid, const std::function<double(Vec2)>& f) {
    std::vector<double> v(grid.node_count());
    for (std::size_t j = 0; j < grid.ny(); ++j)
        for (std::size_t i = 0; i < grid.nx(); ++i) v[grid.index(i, j)] = f(grid.node(i, j));
    return ScalarField(grid, std::move(v));
}

void ScalarField::require_finite(const char* what) const {
    for (double v : values_) {
        if (!std::isfinite(v)) throw SolveError(std::string("non-finite value in ") + what);
    }
}

// ---------------------------------------------------------------------------

VectorField::VectorField(GridSpec grid, std::size_t m, double fill) : grid_(grid) {
    if (m == 0) throw DomainError("vector field needs at least one component");
    comps_.assign(m, ScalarField(grid, fill));
}

VectorField::VectorField(std::vector<ScalarField> components) : comps_(std::move(components)) {
    if (comps_.empty()) throw DomainError("vector field needs at least one component");
    grid_ = comps_.front().grid();
    for (const auto& c : comps_) require_same_grid(grid_, c.grid(), "VectorField");
}

double VectorField::norm2_at(std::size_t k) const {
    double s = 0.0;
    for (const auto& c : comps_) s += c[k] * c[k];
    return s;
}

double VectorField::norm_at(std::size_t k) const { return std::sqrt(norm2_at(k)); }

ScalarField VectorField::norm_field() const {
    ScalarField out(grid_);
    for (std::size_t k = 0; k < grid_.node_count(); ++k) out[k] = norm_at(k);
    return out;
}

ScalarField VectorField::sum_field() const {
    ScalarField out(grid_);
    for (const auto& c : comps_)
        for (std::size_t k = 0; k < grid_.node_count(); ++k) out[k] += c[k];
    return out;
}

bool VectorField::nonnegative() const {
    for (const auto& c : comps_)
        for (double v : c.values())
            if (!(v >= 0.0)) return false;
    return true;
}

double VectorField::max_abs() const {
    double m = 0.0;
    for (const auto& c : comps_)
        for (double v : c.values()) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------

Mask::Mask(GridSpec grid, bool fill) : grid_(grid), flags_(grid.node_count(), fill ? 1 : 0) {}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

bool Mask::all_equal() const {
    return std::adjacent_find(flags_.begin(), flags_.end(), std::not_equal_to<>()) == flags_.end();
}

// ---------------------------------------------------------------------------

WeightField::WeightField(ScalarField values, double q_min, double q_max)
    : values_(std::move(values)), q_min_(q_min), q_max_(q_max) {
    if (!(q_min > 0.0) || !(q_max >= q_min)) throw DomainError("weight bounds must satisfy 0 < q_min <= q_max");
    for (double v : values_.values()) {
        if (!(v >= q_min * (1 - 1e-12) && v <= q_max * (1 + 1e-12))) {
            throw DomainError("weight value " + std::to_string(v) + " outside [q_min, q_max]");
        }
    }
}

WeightField WeightField::constant(const GridSpec& grid, double q) { return WeightField(ScalarField(grid, q), q, q); }

double WeightField::cell_mean(std::size_t ci, std::size_t cj) const {
    const auto& g = values_.grid();
    return 0.25 * (values_[g.index(ci, cj)] + values_[g.index(ci + 1, cj)] + values_[g.index(ci, cj + 1)] +
                   values_[g.index(ci + 1, cj + 1)]);
}

double WeightField::at(Vec2 p) const { return interpolate(values_, p); }

// ---------------------------------------------------------------------------

BoundaryData::BoundaryData(GridSpec grid, std::size_t m) : grid_(grid) {
    if (m == 0) throw DomainError("boundary data needs at least one component");
    values_.assign(m, std::vector<double>(grid.node_count(), 0.0));
}

BoundaryData BoundaryData::from_functions(const GridSpec& grid, const std::vector<std::function<double(Vec2)>>& g) {
    BoundaryData out(grid, g.size());
    for (std::size_t c = 0; c < g.size(); ++c)
        for (std::size_t k = 0; k < grid.node_count(); ++k)
            if (grid.is_boundary(k)) out.set(c, k, g[c](grid.node(k)));
    return out;
}

BoundaryData BoundaryData::from_field(const VectorField& u) {
    BoundaryData out(u.grid(), u.m());
    for (std::size_t c = 0; c < u.m(); ++c)
        for (std::size_t k = 0; k < u.grid().node_count(); ++k)
            if (u.grid().is_boundary(k)) out.set(c, k, u(c, k));
    return out;
}

void BoundaryData::set(std::size_t c, std::size_t k, double v) {
    if (!grid_.is_boundary(k)) throw DomainError("boundary data set on an interior node");
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("boundary data must be finite and nonnegative");
    values_[c][k] = v;
}

double BoundaryData::max_value() const {
    double m = 0.0;
    for (const auto& comp : values_)
        for (double v : comp) m = std::max(m, v);
    return m;
}

double positivity_tolerance(double data_scale) { return kPositivityRelTol * std::max(1.0, data_scale); }

double positivity_tolerance(const BoundaryData& g) { return positivity_tolerance(g.max_value()); }

Mask positivity_mask(const VectorField& u, double tol) {
    Mask out(u.grid());
    for (std::size_t k = 0; k < u.grid().node_count(); ++k) out.set(k, u.norm_at(k) > tol);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Locator {
    std::size_t i, j;
    double s, t;
};

Locator locate(const GridSpec& g, Vec2 p) {
    if (!g.contains(p)) throw DomainError("point outside the grid box");
    const double fx = (p.x - g.box().ax) / g.hx();
    const double fy = (p.y - g.box().ay) / g.hy();
    const auto ci = static_cast<std::size_t>(std::clamp(std::floor(fx), 0.0, static_cast<double>(g.nx() - 2)));
    const auto cj = static_cast<std::size_t>(std::clamp(std::floor(fy), 0.0, static_cast<double>(g.ny() - 2)));
    return {ci, cj, (p.x - g.x(ci)) / g.hx(), (p.y - g.y(cj)) / g.hy()};
}

double bilinear(const ScalarField& f, const Locator& l) {
    const double f00 = f.at(l.i, l.j), f10 = f.at(l.i + 1, l.j);
    const double f01 = f.at(l.i, l.j + 1), f11 = f.at(l.i + 1, l.j + 1);
    return (1 - l.t) * ((1 - l.s) * f00 + l.s * f10) + l.t * ((1 - l.s) * f01 + l.s * f11);
}

}  // namespace

double interpolate(const ScalarField& f, Vec2 p) { return bilinear(f, locate(f.grid(), p)); }

void interpolate(const VectorField& u, Vec2 p, std::span<double> out) {
    const Locator l = locate(u.grid(), p);
    for (std::size_t c = 0; c < u.m(); ++c) out[c] = bilinear(u.component(c), l);
}

Vec2 cell_gradient(const ScalarField& f, std::size_t ci, std::size_t cj) {
    const auto& g = f.grid();
    if (ci + 1 >= g.nx() || cj + 1 >= g.ny()) throw DomainError("cell index out of range");
    const double f00 = f.at(ci, cj), f10 = f.at(ci + 1, cj);
    const double f01 = f.at(ci, cj + 1), f11 = f.at(ci + 1, cj + 1);
    return {0.5 * ((f10 - f00) + (f11 - f01)) / g.hx(), 0.5 * ((f01 - f00) + (f11 - f10)) / g.hy()};
}

std::vector<Vec2> sphere_points(const GridSpec& grid, Vec2 center, double radius, std::size_t n_samples) {
    if (n_samples < 8) throw DomainError("sphere quadrature needs at least 8 samples");
    if (!(radius > 0.0)) throw DomainError("sphere radius must be positive");
    if (!grid.contains_disk(center, radius)) throw DomainError("circle exits the domain");
    std::vector<Vec2> pts(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_samples);
        pts[k] = {center.x + radius * std::cos(th), center.y + radius * std::sin(th)};
    }
    return pts;
}

double sphere_average(const ScalarField& f, Vec2 center, double radius, std::size_t n_samples) {
    double s = 0.0;
    for (Vec2 p : sphere_points(f.grid(), center, radius, n_samples)) s += interpolate(f, p);
    return s / static_cast<double>(n_samples);
}

namespace {

// Integral of sqrt(r^2 - x^2).
double half_chord_integral(double x, double r) {
    const double t = std::clamp(x / r, -1.0, 1.0);
    return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(t));
}

}  // namespace

double rect_disk_area(double x0, double x1, double y0, double y1, double r) {
    const double a = std::max(x0, -r), b = std::min(x1, r);
    if (!(a < b) || !(y0 < y1)) return 0.0;
    std::vector<double> cuts{a, b};
    for (double y : {y0, y1})
        if (std::abs(y) < r) {
            const double c = std::sqrt(r * r - y * y);
            for (double x : {-c, c})
                if (x > a && x < b) cuts.push_back(x);
        }
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = cuts[k + 1];
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi);
        const double s = std::sqrt(std::max(0.0, r * r - mid * mid));
        const bool top_clipped = s > y1;   // upper limit y1 instead of s
        const bool bot_clipped = -s < y0;  // lower limit y0 instead of -s
        const double len = (top_clipped ? y1 : s) - (bot_clipped ? y0 : -s);
        if (len <= 0.0) continue;
        const double chord = half_chord_integral(hi, r) - half_chord_integral(lo, r);
        const double w = hi - lo;
        area += (top_clipped ? y1 * w : chord) - (bot_clipped ? y0 * w : -chord);
    }
    return std::max(0.0, area);
}

std::vector<CellWeight> ball_cells(const GridSpec& grid, Vec2 center, double radius) {
    if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
    if (!grid.contains_disk(center, radius)) throw DomainError("ball exits the domain");
    const double r2 = radius * radius;
    const auto& b = grid.box();
    const auto lo_i = static_cast<std::size_t>(std::max(0.0, std::floor((center.x - radius - b.ax) / grid.hx())));
    const auto lo_j = static_cast<std::size_t>(std::max(0.0, std::floor((center.y - radius - b.ay) / grid.hy())));
    const auto hi_i = std::min(grid.nx() - 2,
                               static_cast<std::size_t>(std::max(0.0, std::ceil((center.x + radius - b.ax) / grid.hx()))));
    const auto hi_j = std::min(grid.ny() - 2,
                               static_cast<std::size_t>(std::max(0.0, std::ceil((center.y + radius - b.ay) / grid.hy()))));
    std::vector<CellWeight> out;
    for (std::size_t cj = lo_j; cj <= hi_j; ++cj) {
        const double y0 = grid.y(cj), y1 = grid.y(cj + 1);
        for (std::size_t ci = lo_i; ci <= hi_i; ++ci) {
            const double x0 = grid.x(ci), x1 = grid.x(ci + 1);
            // Nearest and farthest points of the cell to the center.
            const double nx = std::clamp(center.x, x0, x1) - center.x;
            const double ny = std::clamp(center.y, y0, y1) - center.y;
            if (nx * nx + ny * ny >= r2) continue;
            const double fx = std::max(std::abs(x0 - center.x), std::abs(x1 - center.x));
            const double fy = std::max(std::abs(y0 - center.y), std::abs(y1 - center.y));
            double frac = 1.0;
            if (fx * fx + fy * fy > r2) {
                frac = rect_disk_area(x0 - center.x, x1 - center.x, y0 - center.y, y1 - center.y, radius) /
                       ((x1 - x0) * (y1 - y0));
                if (frac <= 0.0) continue;
                frac = std::min(frac, 1.0);
            }
            out.push_back({grid.cell_index(ci, cj), frac});
        }
    }
    return out;
}

double ball_integrate_cells(const GridSpec& grid, std::span<const double> cell_values, Vec2 center, double radius) {
    if (cell_values.size() != grid.cell_count()) throw DomainError("cell field size mismatch");
    double s = 0.0;
    for (const auto& cw : ball_cells(grid, center, radius)) s += cw.fraction * cell_values[cw.cell];
    return s * grid.cell_area();
}

std::vector<double> cell_means(const ScalarField& f) {
    const auto& g = f.grid();
    std::vector<double> out(g.cell_count());
    for (std::size_t cj = 0; cj + 1 < g.ny(); ++cj)
        for (std::size_t ci = 0; ci + 1 < g.nx(); ++ci)
            out[g.cell_index(ci, cj)] =
                0.25 * (f.at(ci, cj) + f.at(ci + 1, cj) + f.at(ci, cj + 1) + f.at(ci + 1, cj + 1));
    return out;
}

double ball_integrate(const ScalarField& f, Vec2 center, double radius) {
    const auto means = cell_means(f);
    return ball_integrate_cells(f.grid(), means, center, radius);
}

}  // namespace fbmin
