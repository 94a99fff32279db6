#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbmin/grid.hpp"
#include "fbmin/report.hpp"
#include "fbmin/solver.hpp"

namespace fbmin::cli {

/**
 * Everything one run needs. Built by parse_config from a key-value file:
 *
 *   # comment
 *   name = "figure1"
 *   [grid]
 *   box = [-1.0, 1.0, -1.0, 1.0]
 *   nodes = [257, 257]          # or a single integer
 *   [solver.step]
 *   backtrack = 0.5
 *
 * Keys may also be written dotted at top level (solver.seed = 3). Values are
 * numbers, true/false, "strings" and single-line [arrays] of those.
 */
struct RunConfig {
    std::string name = "run";
    Box box{-1.0, 1.0, -1.0, 1.0};
    std::size_t nx = 129, ny = 129;
    std::size_t m = 2;

    std::string weight_kind = "constant";  ///< constant | radial | field
    double weight_value = 1.0;             ///< constant value, or value at the centre for radial
    double weight_slope = 0.0;             ///< radial: Q = value + slope * |x - centre|
    Vec2 weight_center{0.0, 0.0};
    std::filesystem::path weight_file;
    double weight_q_min = 0.0;  ///< 0: taken from the values
    double weight_q_max = 0.0;

    std::string boundary = "figure1";  ///< figure1 | constant | zero | halfplane | tabulated
    std::vector<double> boundary_values;
    std::vector<std::filesystem::path> boundary_files;
    double halfplane_q0 = 1.0;
    Vec2 halfplane_nu{1.0, 0.0};
    std::vector<double> halfplane_e;

    SolverConfig solver;
    std::filesystem::path output_dir = "fbmin-out";
    std::vector<std::string> checks = available_checks();
    CheckSettings settings;
};

/// Throws ConfigError with the line of a syntax error or unknown key, or with
/// every violated invariant (one per line).
RunConfig parse_config(const std::filesystem::path& path);
/// Relative file names resolve against base_dir.
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir);

/// The two-component example on (-1,1)^2: Q = 1, g1 = max(-y, 0), g2 = max(x, 0).
RunConfig figure1_config(std::size_t resolution);

GridSpec build_grid(const RunConfig& cfg);
WeightField build_weight(const RunConfig& cfg, const GridSpec& grid);
BoundaryData build_boundary(const RunConfig& cfg, const GridSpec& grid);

}  // namespace fbmin::cli
