#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fbmin/error.hpp"

using namespace fbmin;
using namespace fbmin::cli;

int main(int argc, char** argv) {
    CLI::App app{"Minimizer and free-boundary diagnostics for the vector one-phase problem"};
    app.require_subcommand(1);

    std::string solve_cfg;
    auto* solve = app.add_subcommand("solve", "minimize J for a configuration and write the solution");
    solve->add_option("config", solve_cfg, "configuration file")->required();

    std::string diag_cfg, diag_solution, diag_checks = "all", diag_out;
    auto* diagnose = app.add_subcommand("diagnose", "run diagnostics on a stored solution");
    diagnose->add_option("config", diag_cfg, "configuration file")->required();
    diagnose->add_option("--solution", diag_solution, "directory holding u1.fbm, u2.fbm, ...")->required();
    diagnose->add_option("--checks", diag_checks, "comma-separated checks, or 'all'");
    diagnose->add_option("--out", diag_out, "report directory (default: the solution directory)");

    std::size_t fig_resolution = 257;
    std::uint64_t fig_seed = 1;
    std::string fig_out = "figure1";
    auto* figure1 = app.add_subcommand("figure1", "solve and diagnose the two-component example");
    figure1->add_option("--resolution", fig_resolution, "nodes per axis")->check(CLI::Range(3, 1 << 14));
    figure1->add_option("--seed", fig_seed, "solver seed");
    figure1->add_option("--out", fig_out, "output directory");

    std::string hom_out;
    auto* homogeneous = app.add_subcommand("homogeneous", "classify homogeneous positivity cones in the plane");
    homogeneous->add_option("--out", hom_out, "also write the JSON record here");

    std::string hod_cfg, hod_window, hod_solution, hod_out;
    int hod_axis = -1, hod_orientation = 0;
    long hod_lead = -1;
    HodographRequest req;
    auto* hodograph = app.add_subcommand("hodograph", "partial hodograph transform of a stored solution");
    hodograph->add_option("config", hod_cfg, "configuration file")->required();
    hodograph->add_option("--window", hod_window, "ax,bx,ay,by")->required();
    hodograph->add_option("--solution", hod_solution, "solution directory (default: output.dir of the config)");
    hodograph->add_option("--out", hod_out, "output directory (default: <solution>/hodograph)");
    hodograph->add_option("--axis", hod_axis, "normal axis: 0 for x, 1 for y")->check(CLI::Range(0, 1));
    hodograph->add_option("--orientation", hod_orientation, "+1 or -1")->check(CLI::IsMember({-1, 1}));
    hodograph->add_option("--lead", hod_lead, "lead component, 1-based")->check(CLI::PositiveNumber);
    hodograph->add_option("--nodes", req.nodes, "patch nodes per axis")->check(CLI::Range(4, 4097));
    hodograph->add_option("--level-min", req.level_min, "lowest level of the patch")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        thread_cap();
        if (*solve) return cmd_solve(parse_config(solve_cfg));
        if (*diagnose) {
            const RunConfig cfg = parse_config(diag_cfg);
            std::vector<std::string> checks;
            try {
                checks = parse_check_list(diag_checks);
            } catch (const DomainError& e) {
                throw ConfigError(e.what());
            }
            return cmd_diagnose(cfg, diag_solution, checks, diag_out.empty() ? diag_solution : diag_out);
        }
        if (*figure1) return cmd_figure1(fig_resolution, fig_out, fig_seed);
        if (*homogeneous) return cmd_homogeneous(hom_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(hom_out));
        if (*hodograph) {
            const RunConfig cfg = parse_config(hod_cfg);
            req.window = parse_box(hod_window);
            if (hod_axis >= 0) req.axis = hod_axis;
            if (hod_orientation != 0) req.orientation = hod_orientation;
            if (hod_lead > 0) req.lead = static_cast<std::size_t>(hod_lead - 1);
            const std::filesystem::path sol = hod_solution.empty() ? cfg.output_dir : std::filesystem::path(hod_solution);
            return cmd_hodograph(cfg, sol, req, hod_out.empty() ? sol / "hodograph" : std::filesystem::path(hod_out));
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kConfigError;
}
