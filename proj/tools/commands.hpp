#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace fbmin::cli {

/// Stable exit codes.
enum ExitCode : int { kOk = 0, kConfigError = 1, kFailure = 2 };

/// Solves and writes u<i>, norm and sum fields (.fbm and .csv), PGM panels,
/// mask.pgm, trace.csv and summary.json into cfg.output_dir.
int cmd_solve(const RunConfig& cfg);

/// Reads u<i>.fbm from solution_dir, writes report.json and weiss_<k>.csv
/// into out_dir. Returns kOk iff every hard check passes.
int cmd_diagnose(const RunConfig& cfg, const std::filesystem::path& solution_dir,
                 const std::vector<std::string>& checks, const std::filesystem::path& out_dir);

/// cmd_solve followed by the full diagnostics on the two-component example.
int cmd_figure1(std::size_t resolution, const std::filesystem::path& out_dir, std::uint64_t seed = 1);

/// Classification of homogeneous cones; JSON on stdout and, when given, in out_file.
int cmd_homogeneous(const std::optional<std::filesystem::path>& out_file);

struct HodographRequest {
    Box window;
    std::optional<int> axis;
    std::optional<int> orientation;
    std::optional<std::size_t> lead;
    std::size_t nodes = 17;
    double level_min = 0.0;
};

/// Transform of the stored solution on a window; writes the patch fields and hodograph.json.
int cmd_hodograph(const RunConfig& cfg, const std::filesystem::path& solution_dir, const HodographRequest& req,
                  const std::filesystem::path& out_dir);

/// Parses "ax,bx,ay,by".
Box parse_box(const std::string& text);

/// FBMIN_THREADS: unset gives the hardware count; anything but a positive integer is an error.
std::size_t thread_cap();

}  // namespace fbmin::cli
