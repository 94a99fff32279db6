#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"
#include "fbmin/hodograph.hpp"
#include "fbmin/homogeneous.hpp"
#include "fbmin/io.hpp"
#include "fbmin/report.hpp"
#include "fbmin/solver.hpp"

namespace fbmin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

void write_fields(const VectorField& u, const fs::path& dir) {
    auto put = [&](const ScalarField& f, const std::string& stem) {
        io::write_fbm(f, dir / (stem + ".fbm"));
        io::write_csv(f, dir / (stem + ".csv"));
        io::write_pgm(f, dir / (stem + ".pgm"));
    };
    for (std::size_t c = 0; c < u.m(); ++c) put(u.component(c), "u" + std::to_string(c + 1));
    put(u.norm_field(), "norm");
    put(u.sum_field(), "sum");
}

void write_trace(const std::vector<IterationRecord>& trace, const fs::path& path) {
    std::ostringstream s;
    s << "iter,kind,J_before,J_after,d_moved,eps\n";
    for (const auto& r : trace)
        s << r.iteration << ',' << to_string(r.kind) << ',' << fmt(r.j_before) << ',' << fmt(r.j_after) << ','
          << fmt(r.d_moved) << ',' << fmt(r.eps) << '\n';
    write_text(path, s.str());
}

json grid_json(const GridSpec& g) {
    return {{"box", {g.box().ax, g.box().bx, g.box().ay, g.box().by}}, {"nodes", {g.nx(), g.ny()}}};
}

json summary_json(const RunConfig& cfg, const Solution& s) {
    json j;
    j["schema"] = "fbmin-summary/1";
    j["name"] = cfg.name;
    j["grid"] = grid_json(s.u.grid());
    j["components"] = s.u.m();
    j["boundary"] = cfg.boundary;
    j["seed"] = cfg.solver.seed;
    j["J"] = {{"dirichlet", s.energy.dirichlet}, {"volume", s.energy.volume}, {"total", s.energy.total}};
    j["positive_nodes"] = s.mask.count();
    j["positivity_tolerance"] = s.positivity_tol;
    std::map<std::string, std::size_t> kinds;
    double d_total = 0.0, d_max = 0.0;
    for (const auto& r : s.trace) {
        ++kinds[to_string(r.kind)];
        d_total += r.d_moved;
        d_max = std::max(d_max, r.d_moved);
    }
    j["iterations"] = s.trace.size();
    j["moves"] = kinds;
    j["d_moved"] = {{"max", d_max}, {"total", d_total}};
    return j;
}

void write_json(const json& j, const fs::path& path) { write_text(path, j.dump(2) + "\n"); }

VectorField read_solution(const fs::path& dir, std::size_t m) {
    std::vector<ScalarField> comps;
    for (std::size_t c = 0; c < m; ++c) {
        const fs::path p = dir / ("u" + std::to_string(c + 1) + ".fbm");
        if (!fs::exists(p)) throw ConfigError("solution file not found: " + p.string());
        comps.push_back(io::read_fbm(p));
    }
    try {
        return VectorField(std::move(comps));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("solution components disagree: ") + e.what());
    }
}

RunConfig with_grid_of(RunConfig cfg, const GridSpec& g) {
    cfg.box = g.box();
    cfg.nx = g.nx();
    cfg.ny = g.ny();
    return cfg;
}

int diagnose_field(const RunConfig& cfg, const VectorField& u, const std::vector<std::string>& checks,
                   const fs::path& out_dir, const std::string& source) {
    const GridSpec& g = u.grid();
    const WeightField q = build_weight(cfg, g);
    const BoundaryData b = build_boundary(cfg, g);
    DiagnosticsReport rep = run_diagnostics(u, q, positivity_tolerance(b), checks, cfg.settings, &b);
    rep.provenance["name"] = cfg.name;
    rep.provenance["source"] = source;
    fs::create_directories(out_dir);
    write_text(out_dir / "report.json", rep.dump());
    for (std::size_t k = 0; k < rep.weiss_curves.size(); ++k) {
        const WeissCurve& w = rep.weiss_curves[k];
        std::ostringstream s;
        s << "r,W,tol\n";
        for (std::size_t i = 0; i < w.radii.size(); ++i)
            s << fmt(w.radii[i]) << ',' << fmt(w.values[i]) << ',' << fmt(w.tolerance[i]) << '\n';
        write_text(out_dir / ("weiss_" + std::to_string(k + 1) + ".csv"), s.str());
    }
    for (const auto& r : rep.records) {
        std::cout << std::left << std::setw(16) << r.name << r.status;
        for (const char* key : {"error", "skipped"})
            if (r.data.contains(key)) std::cout << "  (" << r.data[key].get<std::string>() << ")";
        std::cout << '\n';
    }
    if (!rep.passed()) {
        std::cerr << "failed checks:";
        for (const auto& f : rep.failed()) std::cerr << ' ' << f;
        std::cerr << '\n';
        return kFailure;
    }
    return kOk;
}

}  // namespace

int cmd_solve(const RunConfig& cfg) {
    const GridSpec g = build_grid(cfg);
    const WeightField q = build_weight(cfg, g);
    const BoundaryData b = build_boundary(cfg, g);
    fs::create_directories(cfg.output_dir);
    Solution s;
    try {
        s = minimize(g, q, b, cfg.solver);
    } catch (const SolveError& e) {
        json j;
        j["schema"] = "fbmin-summary/1";
        j["name"] = cfg.name;
        j["error"] = e.what();
        write_json(j, cfg.output_dir / "summary.json");
        std::cerr << "solver failed: " << e.what() << '\n';
        return kFailure;
    }
    write_fields(s.u, cfg.output_dir);
    io::write_pgm(s.mask, cfg.output_dir / "mask.pgm");
    write_trace(s.trace, cfg.output_dir / "trace.csv");
    write_json(summary_json(cfg, s), cfg.output_dir / "summary.json");
    std::cout << "J = " << fmt(s.energy.total) << " (" << s.trace.size() << " moves) -> " << cfg.output_dir.string() << '\n';
    return kOk;
}

int cmd_diagnose(const RunConfig& cfg, const fs::path& solution_dir, const std::vector<std::string>& checks,
                 const fs::path& out_dir) {
    const VectorField u = read_solution(solution_dir, cfg.m);
    return diagnose_field(with_grid_of(cfg, u.grid()), u, checks, out_dir, solution_dir.filename().string());
}

int cmd_figure1(std::size_t resolution, const fs::path& out_dir, std::uint64_t seed) {
    RunConfig cfg = figure1_config(resolution);
    cfg.output_dir = out_dir;
    cfg.solver.seed = seed;
    const int rc = cmd_solve(cfg);
    if (rc != kOk) return rc;
    const VectorField u = read_solution(out_dir, cfg.m);
    return diagnose_field(cfg, u, available_checks(), out_dir, "figure1");
}

int cmd_homogeneous(const std::optional<fs::path>& out_file) {
    const HomogeneousClassification c = classify_homogeneous_2d();
    json j;
    j["schema"] = "fbmin-homogeneous/1";
    j["theta_star"] = c.theta_star;
    j["theta_star_minus_pi"] = c.theta_star - std::acos(-1.0);
    j["lambda_at_pi"] = c.lambda_at_pi;
    j["lambda_near_full_circle"] = c.lambda_at_full;
    j["full_circle_excluded"] = c.full_circle_excluded;
    j["monotone"] = c.monotone;
    j["sweep"] = {{"theta", c.sweep_theta}, {"lambda", c.sweep_lambda}};
    j["ground_state_positive"] = c.ground_state_positive;
    j["ground_state_error"] = c.ground_state_error;
    j["nodes"] = c.n_nodes;
    const bool ok = std::abs(c.theta_star - std::acos(-1.0)) <= 1e-6 && c.monotone && c.full_circle_excluded &&
                    c.ground_state_positive;
    j["verdict"] = ok ? "the half-plane is the only connected positivity cone" : "classification inconclusive";
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (out_file) {
        if (out_file->has_parent_path()) fs::create_directories(out_file->parent_path());
        write_text(*out_file, text);
    }
    return ok ? kOk : kFailure;
}

int cmd_hodograph(const RunConfig& cfg, const fs::path& solution_dir, const HodographRequest& req,
                  const fs::path& out_dir) {
    const VectorField u = read_solution(solution_dir, cfg.m);
    const RunConfig run = with_grid_of(cfg, u.grid());
    const WeightField q = build_weight(run, u.grid());
    const double tol = positivity_tolerance(build_boundary(run, u.grid()));

    HodographOptions o;
    o.tangential_nodes = o.level_nodes = req.nodes;
    o.level_min = req.level_min;
    if (!req.axis || !req.orientation || !req.lead) {
        // Orientation from the interface normals inside the window.
        const Mask mask = positivity_mask(u, tol);
        if (mask.all_equal()) throw NoFreeBoundary();
        const FreeBoundary fb = extract_free_boundary(mask);
        Vec2 sum{0.0, 0.0};
        for (std::size_t k = 0; k < fb.size(); ++k) {
            const Vec2 p = fb.points[k];
            if (p.x >= req.window.ax && p.x <= req.window.bx && p.y >= req.window.ay && p.y <= req.window.by)
                sum = sum + fb.normals[k];
        }
        if (norm(sum) == 0.0) throw DomainError("no free boundary inside the window");
        const int axis = std::abs(sum.y) >= std::abs(sum.x) ? 1 : 0;
        o.normal_axis = req.axis.value_or(axis);
        const double s = o.normal_axis == 1 ? sum.y : sum.x;
        o.orientation = req.orientation.value_or(s > 0.0 ? -1 : 1);
        const Vec2 mid{0.5 * (req.window.ax + req.window.bx), 0.5 * (req.window.ay + req.window.by)};
        std::vector<double> vals(u.m());
        interpolate(u, mid, vals);
        o.lead = req.lead.value_or(static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin()));
    } else {
        o.normal_axis = *req.axis;
        o.orientation = *req.orientation;
        o.lead = *req.lead;
    }
    const HodographPatch p = hodograph_transform(u, req.window, o);
    const OperatorResidual r = operator_residual(p);
    const EllipticityReport e = ellipticity_margin(p);
    const ChainRuleResidual cr = chain_rule_residual(p, u);
    fs::create_directories(out_dir);
    export_patch(p, out_dir, "patch");
    json j;
    j["schema"] = "fbmin-hodograph/1";
    j["window"] = {req.window.ax, req.window.bx, req.window.ay, req.window.by};
    j["normal_axis"] = o.normal_axis;
    j["orientation"] = o.orientation;
    j["lead"] = o.lead;
    j["nodes"] = req.nodes;
    j["levels"] = {p.options.level_min, p.options.level_max};
    j["operator_max"] = r.max_abs;
    j["roundtrip_error"] = p.roundtrip_error;
    j["ellipticity_margin"] = e.margin;
    j["max_tangential_slope"] = e.max_tangential_slope;
    j["flatness_ok"] = e.flatness_ok;
    j["chain_rule"] = {{"normal", cr.normal}, {"tangential", cr.tangential}};
    if (p.options.level_min == 0.0) {
        const BoundaryResidual bc = fb_bc_residual(p, q);
        j["fb_bc_max"] = bc.max;
        j["fb_bc"] = bc.residual;
    }
    write_json(j, out_dir / "hodograph.json");
    std::cout << j.dump(2) << '\n';
    return e.margin > 0.0 ? kOk : kFailure;
}

Box parse_box(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw ConfigError("");
        } catch (const std::exception&) {
            throw ConfigError("window must be 'ax,bx,ay,by', got '" + text + "'");
        }
    }
    if (v.size() != 4 || !(v[1] > v[0]) || !(v[3] > v[2])) throw ConfigError("window must be 'ax,bx,ay,by' with ax < bx, ay < by");
    return {v[0], v[1], v[2], v[3]};
}

std::size_t thread_cap() {
    const char* env = std::getenv("FBMIN_THREADS");
    if (!env) return std::max(1u, std::thread::hardware_concurrency());
    const std::string s(env);
    std::size_t used = 0;
    long long n = 0;
    try {
        n = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || n < 1) throw ConfigError("FBMIN_THREADS must be a positive integer, got '" + s + "'");
    return static_cast<std::size_t>(n);
}

}  // namespace fbmin::cli
