#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fbmin/vec2.hpp"

namespace fbmin {

/// Axis-aligned rectangle [ax,bx] x [ay,by].
struct Box {
    double ax = 0.0;
    double bx = 0.0;
    double ay = 0.0;
    double by = 0.0;

    friend bool operator==(const Box&, const Box&) = default;
};

/**
 * Node-centred uniform grid on a box.
 *
 * Nodes are numbered row-major: index(i, j) = j * nx + i, with i along x and
 * j along y. Cell (i, j) has corners (i, j), (i+1, j), (i, j+1), (i+1, j+1).
 * Corner nodes reproduce the box corners exactly.
 */
class GridSpec {
public:
    GridSpec() = default;
    GridSpec(Box box, std::size_t nx, std::size_t ny);

    const Box& box() const { return box_; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double h() const { return hx_ > hy_ ? hx_ : hy_; }
    double cell_area() const { return hx_ * hy_; }

    std::size_t node_count() const { return nx_ * ny_; }
    std::size_t cell_count() const { return (nx_ - 1) * (ny_ - 1); }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
    std::size_t cell_index(std::size_t i, std::size_t j) const { return j * (nx_ - 1) + i; }

    double x(std::size_t i) const { return i + 1 == nx_ ? box_.bx : box_.ax + static_cast<double>(i) * hx_; }
    double y(std::size_t j) const { return j + 1 == ny_ ? box_.by : box_.ay + static_cast<double>(j) * hy_; }
    Vec2 node(std::size_t i, std::size_t j) const { return {x(i), y(j)}; }
    Vec2 node(std::size_t k) const { return node(k % nx_, k / nx_); }
    Vec2 cell_center(std::size_t ci, std::size_t cj) const {
        return {box_.ax + (static_cast<double>(ci) + 0.5) * hx_, box_.ay + (static_cast<double>(cj) + 0.5) * hy_};
    }

    bool is_boundary(std::size_t i, std::size_t j) const {
        return i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_;
    }
    bool is_boundary(std::size_t k) const { return is_boundary(k % nx_, k / nx_); }

    /// True when p lies in the closed box, up to a relative slack of 1e-12.
    bool contains(Vec2 p) const;
    /// True when the closed disk B_r(c) lies in the closed box.
    bool contains_disk(Vec2 c, double r) const;

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.box_ == b.box_ && a.nx_ == b.nx_ && a.ny_ == b.ny_;
    }

private:
    Box box_{};
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    double hx_ = 0.0;
    double hy_ = 0.0;
};

/// Validating factory: box must be non-degenerate, at least 3 nodes per axis.
GridSpec make_grid(Box box, std::size_t nx, std::size_t ny);

/// Throws DomainError unless both grids are identical.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

/// One real value per node, row-major.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridSpec grid, double fill = 0.0);
    ScalarField(GridSpec grid, std::vector<double> values);

    static ScalarField sample(const GridSpec& grid, const std::function<double(Vec2)>& f);

    const GridSpec& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }
    double at(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }
    double& at(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }

    /// Throws SolveError if any value is NaN or infinite.
    void require_finite(const char* what) const;

private:
    GridSpec grid_{};
    std::vector<double> values_;
};

/// m nonnegative (when admissible) scalar components on a shared grid.
class VectorField {
public:
    VectorField() = default;
    VectorField(GridSpec grid, std::size_t m, double fill = 0.0);
    explicit VectorField(std::vector<ScalarField> components);

    const GridSpec& grid() const { return grid_; }
    std::size_t m() const { return comps_.size(); }
    const ScalarField& component(std::size_t c) const { return comps_[c]; }
    ScalarField& component(std::size_t c) { return comps_[c]; }
    double operator()(std::size_t c, std::size_t k) const { return comps_[c][k]; }
    double& operator()(std::size_t c, std::size_t k) { return comps_[c][k]; }

    /// Euclidean length |u| at node k.
    double norm_at(std::size_t k) const;
    double norm2_at(std::size_t k) const;
    ScalarField norm_field() const;
    ScalarField sum_field() const;

    /// Every component value is >= 0.
    bool nonnegative() const;
    double max_abs() const;

private:
    GridSpec grid_{};
    std::vector<ScalarField> comps_;
};

/// Boolean per node.
class Mask {
public:
    Mask() = default;
    explicit Mask(GridSpec grid, bool fill = false);

    const GridSpec& grid() const { return grid_; }
    bool operator[](std::size_t k) const { return flags_[k] != 0; }
    void set(std::size_t k, bool v) { flags_[k] = v ? 1 : 0; }
    std::size_t count() const;
    bool all_equal() const;
    std::span<const std::uint8_t> flags() const { return flags_; }

    friend bool operator==(const Mask& a, const Mask& b) { return a.grid_ == b.grid_ && a.flags_ == b.flags_; }

private:
    GridSpec grid_{};
    std::vector<std::uint8_t> flags_;
};

/// The coefficient Q with recorded bounds 0 < q_min <= Q <= q_max.
class WeightField {
public:
    WeightField() = default;
    WeightField(ScalarField values, double q_min, double q_max);
    static WeightField constant(const GridSpec& grid, double q);

    const GridSpec& grid() const { return values_.grid(); }
    const ScalarField& field() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    /// Average of Q over the four corners of cell (ci, cj).
    double cell_mean(std::size_t ci, std::size_t cj) const;
    double at(Vec2 p) const;

private:
    ScalarField values_{};
    double q_min_ = 0.0;
    double q_max_ = 0.0;
};

/// Nonnegative Dirichlet data for m components; only boundary nodes carry data.
class BoundaryData {
public:
    BoundaryData() = default;
    BoundaryData(GridSpec grid, std::size_t m);
    static BoundaryData from_functions(const GridSpec& grid,
                                       const std::vector<std::function<double(Vec2)>>& g);
    /// Boundary values of an existing field.
    static BoundaryData from_field(const VectorField& u);

    const GridSpec& grid() const { return grid_; }
    std::size_t m() const { return values_.size(); }
    double operator()(std::size_t c, std::size_t k) const { return values_[c][k]; }
    void set(std::size_t c, std::size_t k, double v);
    double max_value() const;
    bool identically_zero() const { return max_value() <= 0.0; }

private:
    GridSpec grid_{};
    std::vector<std::vector<double>> values_;
};

inline constexpr double kPositivityRelTol = 1e-10;

/// Positivity threshold 1e-10 * max(1, max boundary datum).
double positivity_tolerance(const BoundaryData& g);
double positivity_tolerance(double data_scale);

/// Nodes where |u| > tol.
Mask positivity_mask(const VectorField& u, double tol);

/// Bilinear interpolation; exact on fields affine along each axis.
double interpolate(const ScalarField& f, Vec2 p);
/// Bilinear interpolation of every component at once.
void interpolate(const VectorField& u, Vec2 p, std::span<double> out);

/// Forward differences along each axis, averaged over the cell's two node pairs.
Vec2 cell_gradient(const ScalarField& f, std::size_t ci, std::size_t cj);

/// Mean of interpolated values at n equally spaced points of the circle.
double sphere_average(const ScalarField& f, Vec2 center, double radius, std::size_t n_samples);
/// The sample points used by sphere_average.
std::vector<Vec2> sphere_points(const GridSpec& grid, Vec2 center, double radius, std::size_t n_samples);

/// A cell with its covered fraction.
struct CellWeight {
    std::size_t cell = 0;
    double fraction = 0.0;
};

/// Area of [x0,x1] x [y0,y1] inside the disk of radius r about the origin.
double rect_disk_area(double x0, double x1, double y0, double y1, double r);

/// Cells meeting B_r(c), weighted by the exactly computed covered fraction.
std::vector<CellWeight> ball_cells(const GridSpec& grid, Vec2 center, double radius);

/// Integral over B_r(c) of a per-cell quantity (cell_values has one value per cell).
double ball_integrate_cells(const GridSpec& grid, std::span<const double> cell_values, Vec2 center,
                            double radius);
/// Integral over B_r(c) of a node field, cells contributing their corner average.
double ball_integrate(const ScalarField& f, Vec2 center, double radius);

/// Corner average of a node field per cell.
std::vector<double> cell_means(const ScalarField& f);

}  // namespace fbmin
