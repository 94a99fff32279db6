#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fbmin/diagnostics.hpp"
#include "fbmin/grid.hpp"

namespace fbmin {

inline constexpr const char* kReportSchema = "fbmin-report/1";

/// Thresholds of the hard assertions and sampling of the interface checks.
struct CheckSettings {
    std::size_t points = 5;         ///< interface points tested
    double r_max = 0.25;            ///< largest dyadic radius
    double r_min_cells = 8.0;       ///< smallest radius in units of h
    double growth_ratio_max = 10.0; ///< bound on C / c of sup_{B_r} |u| / r
    double density_floor = 0.05;    ///< zero-set density floor
    double weiss_slack_cells = 5.0; ///< allowed Weiss drop in units of h
    double fb_median_max = 0.15;    ///< median relative slope error
    double nta_m = 4.0;             ///< corkscrew parameter
    double flat_rho = 0.125;        ///< flatness radius
    std::size_t blowup_nodes = 65;  ///< target grid nodes per axis
};

struct CheckRecord {
    std::string name;      ///< check identifier, e.g. "weiss"
    std::string property;  ///< the property verified, in words
    std::string status;    ///< "pass", "fail" or "info"
    nlohmann::json data = nlohmann::json::object();
};

struct DiagnosticsReport {
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<CheckRecord> records;
    /// Weiss curves of the "weiss" check, kept for CSV export.
    std::vector<WeissCurve> weiss_curves;

    bool passed() const;
    std::vector<std::string> failed() const;
    nlohmann::json to_json() const;
    /// Sorted keys, two-space indent, trailing newline.
    std::string dump() const;
};

/// Canonical order of the available checks (admissibility always runs first).
const std::vector<std::string>& available_checks();

/// Throws DomainError naming an unknown check.
std::vector<std::string> parse_check_list(const std::string& comma_separated);

/**
 * Runs `checks` on u. `boundary`, when given, is compared with the boundary
 * values of u by the admissibility check. A check whose preconditions fail
 * (no interface, balls leaving the domain) is recorded as failed with the
 * reason in data["error"].
 */
DiagnosticsReport run_diagnostics(const VectorField& u, const WeightField& q, double tol,
                                  const std::vector<std::string>& checks, const CheckSettings& settings = {},
                                  const BoundaryData* boundary = nullptr);

}  // namespace fbmin
