#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "fbmin/error.hpp"
#include "fbmin/homogeneous.hpp"
#include "fbmin/io.hpp"

using namespace fbmin;
using namespace fbmin::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fbmin_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text, ".");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kHalfPlaneConfig = R"(
name = "halfplane"
[grid]
box = [-1.0, 1.0, -1.0, 1.0]
nodes = 129
[problem]
m = 1
[boundary]
preset = "halfplane"
q0 = 1.0
nu = [1.0, 0.0]
e = [1.0]
)";

void write_halfplane(const fs::path& dir, const RunConfig& cfg) {
    const GridSpec g = build_grid(cfg);
    const VectorField u = halfplane_field(HalfPlaneSpec{}, g);
    io::write_fbm(u.component(0), dir / "u1.fbm");
}

}  // namespace

TEST_CASE("config parsing of a minimal two-component run") {
    const RunConfig c = parse_config_text(R"(
# the two-component example
name = "small"
grid.nodes = [33, 33]
solver.seed = 7
[solver.step]
backtrack = 0.25
[diagnostics]
checks = ["weiss", "traces"]
)",
                                          ".");
    CHECK(c.name == "small");
    CHECK(c.nx == 33);
    CHECK(c.ny == 33);
    CHECK(c.m == 2);
    CHECK(c.boundary == "figure1");
    CHECK(c.solver.seed == 7);
    CHECK(c.solver.step.backtrack == 0.25);
    CHECK(c.checks == std::vector<std::string>{"weiss", "traces"});
    CHECK(parse_config_text("diagnostics.checks = [\"all\"]\n", ".").checks == available_checks());

    const RunConfig fig = figure1_config(65);
    const GridSpec g = build_grid(fig);
    CHECK(g.nx() == 65);
    const BoundaryData b = build_boundary(fig, g);
    CHECK(b(0, g.index(32, 0)) == doctest::Approx(1.0));  // g1 = max(-y, 0) at y = -1
    CHECK(b(1, g.index(64, 32)) == doctest::Approx(1.0)); // g2 = max(x, 0) at x = 1
    CHECK(build_weight(fig, g).q_min() == 1.0);
}

TEST_CASE("config errors name the key") {
    CHECK(config_error("foo = 1\n").find("unknown key 'foo'") != std::string::npos);
    CHECK(config_error("[weight]\nq_min = 0\n").find("Q_min must be positive (weight.q_min)") != std::string::npos);
    CHECK(config_error("name = \n").find("line 1") != std::string::npos);
    CHECK(config_error("[grid]\nnodes = [2, 2]\n") != "");
    CHECK(config_error("[diagnostics]\nchecks = [\"nope\"]\n") != "");
    // Every violation is reported, not just the first.
    const std::string both = config_error("[grid]\nnodes = 1\n[weight]\nq_min = -1\n");
    CHECK(both.find("grid") != std::string::npos);
    CHECK(both.find("weight.q_min") != std::string::npos);
    CHECK_THROWS_AS(parse_config("/nonexistent/fbmin.toml"), ConfigError);
}

TEST_CASE("box parsing") {
    const Box b = parse_box("-0.5,0.5,0,1");
    CHECK(b.ax == -0.5);
    CHECK(b.by == 1.0);
    CHECK_THROWS(parse_box("1,2,3"));
    CHECK_THROWS(parse_box("a,b,c,d"));
}

TEST_CASE("solve with zero data writes a zero solution") {
    const fs::path dir = fresh_dir("zero");
    RunConfig c = parse_config_text("grid.nodes = 17\nboundary.preset = \"zero\"\n", ".");
    c.output_dir = dir;
    CHECK(cmd_solve(c) == kOk);
    std::ifstream in(dir / "summary.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["schema"] == "fbmin-summary/1");
    CHECK(j["J"]["total"].get<double>() == 0.0);
    for (const char* f : {"u1.fbm", "u2.fbm", "u1.csv", "norm.fbm", "sum.fbm", "mask.pgm", "trace.csv"})
        CHECK(fs::exists(dir / f));
    CHECK(io::read_fbm(dir / "u1.fbm").grid().nx() == 17);
    fs::remove_all(dir);
}

TEST_CASE("diagnose accepts an exact half-plane") {
    const fs::path dir = fresh_dir("hp_ok");
    RunConfig c = parse_config_text(kHalfPlaneConfig, ".");
    write_halfplane(dir, c);
    CHECK(cmd_diagnose(c, dir, available_checks(), dir) == kOk);
    std::ifstream in(dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["schema"] == "fbmin-report/1");
    for (const auto& rec : j["checks"]) CHECK(rec["status"] != "fail");
    fs::remove_all(dir);
}

TEST_CASE("diagnose rejects a negative value and names admissibility") {
    const fs::path dir = fresh_dir("hp_neg");
    RunConfig c = parse_config_text(kHalfPlaneConfig, ".");
    const GridSpec g = build_grid(c);
    VectorField u = halfplane_field(HalfPlaneSpec{}, g);
    u(0, g.index(100, 64)) = -0.25;
    io::write_fbm(u.component(0), dir / "u1.fbm");
    CHECK(cmd_diagnose(c, dir, {"admissibility"}, dir) == kFailure);
    std::ifstream in(dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    bool named = false;
    for (const auto& rec : j["checks"])
        if (rec["name"] == "admissibility") named = rec["status"] == "fail";
    CHECK(named);
    fs::remove_all(dir);
}

TEST_CASE("diagnose of a field without free boundary fails") {
    const fs::path dir = fresh_dir("const");
    RunConfig c = parse_config_text("grid.nodes = 33\nproblem.m = 1\nboundary.preset = \"constant\"\nboundary.values = [2.0]\n", ".");
    io::write_fbm(ScalarField(build_grid(c), 2.0), dir / "u1.fbm");
    CHECK(cmd_diagnose(c, dir, {"scaling", "weiss"}, dir) == kFailure);
    const std::string report = slurp(dir / "report.json");
    CHECK(report.find("no free boundary") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("diagnose reports are deterministic") {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    RunConfig c = parse_config_text(kHalfPlaneConfig, ".");
    write_halfplane(a, c);
    write_halfplane(b, c);
    cmd_diagnose(c, a, available_checks(), a);
    cmd_diagnose(c, b, available_checks(), b);
    // The provenance names the solution directory.
    auto strip = [](std::string s) {
        for (const std::string tag : {"det_a", "det_b"})
            for (auto p = s.find(tag); p != std::string::npos; p = s.find(tag)) s.replace(p, tag.size(), "det_x");
        return s;
    };
    CHECK(strip(slurp(a / "report.json")) == strip(slurp(b / "report.json")));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("missing solution files are configuration errors") {
    const fs::path dir = fresh_dir("missing");
    RunConfig c = parse_config_text(kHalfPlaneConfig, ".");
    CHECK_THROWS_AS(cmd_diagnose(c, dir, available_checks(), dir), ConfigError);
    fs::remove_all(dir);
}
