#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "fbmin/error.hpp"
#include "fbmin/homogeneous.hpp"
#include "fbmin/io.hpp"

namespace fbmin::cli {

namespace {

using Scalar = std::variant<double, bool, std::string>;

struct Value {
    std::vector<Scalar> items;
    bool is_array = false;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'; });
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && in_string) {
            ++i;
            continue;
        }
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

class ValueParser {
public:
    ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

    Value parse() {
        Value v;
        v.line = line_;
        skip();
        if (peek() == '[') {
            ++pos_;
            v.is_array = true;
            skip();
            if (peek() == ']') {
                ++pos_;
            } else {
                while (true) {
                    v.items.push_back(scalar());
                    skip();
                    if (peek() == ',') {
                        ++pos_;
                        skip();
                        if (peek() == ']') {
                            ++pos_;
                            break;
                        }
                        continue;
                    }
                    if (peek() == ']') {
                        ++pos_;
                        break;
                    }
                    fail("expected ',' or ']' in array");
                }
            }
        } else {
            v.items.push_back(scalar());
        }
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing characters '" + s_.substr(pos_) + "'");
        return v;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, line_); }

    Scalar scalar() {
        if (peek() == '"') {
            ++pos_;
            std::string out;
            while (pos_ < s_.size() && s_[pos_] != '"') {
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
                    const char e = s_[++pos_];
                    out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                } else {
                    out += s_[pos_];
                }
                ++pos_;
            }
            if (peek() != '"') fail("unterminated string");
            ++pos_;
            return out;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
        const std::string tok = s_.substr(start, pos_ - start);
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (tok.empty()) fail("missing value");
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(tok, &used);
        } catch (const std::exception&) {
            fail("cannot parse value '" + tok + "'");
        }
        if (used != tok.size() || !std::isfinite(d)) fail("cannot parse value '" + tok + "'");
        return d;
    }

    std::string s_;
    std::size_t pos_ = 0;
    int line_;
};

using Table = std::map<std::string, Value>;

Table parse_table(const std::string& text) {
    Table table;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string l = trim(strip_comment(raw));
        if (l.empty()) continue;
        if (l.front() == '[') {
            if (l.back() != ']') throw ConfigError("malformed section header", line);
            section = trim(l.substr(1, l.size() - 2));
            if (!valid_key(section)) throw ConfigError("invalid section name '" + section + "'", line);
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        const std::string key = trim(l.substr(0, eq));
        if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line);
        const std::string full = section.empty() ? key : section + "." + key;
        if (table.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
        table[full] = ValueParser(trim(l.substr(eq + 1)), line).parse();
    }
    return table;
}

// Typed access to the table; every read key is marked as known.
class Reader {
public:
    explicit Reader(const Table& t) : t_(t) {}

    bool has(const std::string& k) const { return t_.count(k) != 0; }

    double number(const std::string& k, double fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        if (v->is_array || !std::holds_alternative<double>(v->items[0])) throw ConfigError(k + " must be a number", v->line);
        return std::get<double>(v->items[0]);
    }

    std::size_t count(const std::string& k, std::size_t fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        const double d = number(k, 0.0);
        if (d < 0.0 || d != std::floor(d) || d > 1e15) throw ConfigError(k + " must be a nonnegative integer", v->line);
        return static_cast<std::size_t>(d);
    }

    bool flag(const std::string& k, bool fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        if (v->is_array || !std::holds_alternative<bool>(v->items[0])) throw ConfigError(k + " must be true or false", v->line);
        return std::get<bool>(v->items[0]);
    }

    std::string text(const std::string& k, const std::string& fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        if (v->is_array || !std::holds_alternative<std::string>(v->items[0]))
            throw ConfigError(k + " must be a string", v->line);
        return std::get<std::string>(v->items[0]);
    }

    std::vector<double> numbers(const std::string& k, std::vector<double> fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& s : v->items) {
            if (!std::holds_alternative<double>(s)) throw ConfigError(k + " must hold numbers", v->line);
            out.push_back(std::get<double>(s));
        }
        return out;
    }

    std::vector<std::string> texts(const std::string& k, std::vector<std::string> fallback) {
        const Value* v = get(k);
        if (!v) return fallback;
        std::vector<std::string> out;
        for (const auto& s : v->items) {
            if (!std::holds_alternative<std::string>(s)) throw ConfigError(k + " must hold strings", v->line);
            out.push_back(std::get<std::string>(s));
        }
        return out;
    }

    int line(const std::string& k) const { return has(k) ? t_.at(k).line : 0; }

    void reject_unknown() const {
        for (const auto& [k, v] : t_)
            if (!known_.count(k)) throw ConfigError("unknown key '" + k + "'", v.line);
    }

private:
    const Value* get(const std::string& k) {
        known_.insert(k);
        const auto it = t_.find(k);
        return it == t_.end() ? nullptr : &it->second;
    }

    const Table& t_;
    std::set<std::string> known_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ScalarField read_field(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw ConfigError("file not found: " + p.string());
    try {
        return p.extension() == ".csv" ? io::read_csv(p) : io::read_fbm(p);
    } catch (const Error& e) {
        throw ConfigError("cannot read " + p.string() + ": " + e.what());
    }
}

void validate(const RunConfig& c, std::vector<std::string>& errors) {
    if (!(c.box.bx > c.box.ax) || !(c.box.by > c.box.ay)) errors.push_back("grid.box must satisfy ax < bx and ay < by");
    if (c.nx < 3 || c.ny < 3) errors.push_back("grid.nodes must be at least 3 per axis");
    if (c.m < 1) errors.push_back("problem.m must be at least 1");
    if (c.weight_kind != "constant" && c.weight_kind != "radial" && c.weight_kind != "field")
        errors.push_back("weight.kind must be constant, radial or field");
    if (c.weight_kind != "field" && !(c.weight_value > 0.0)) errors.push_back("Q_min must be positive (weight.value)");
    if (c.weight_q_min < 0.0 || (c.weight_q_min == 0.0 && c.weight_q_max != 0.0))
        errors.push_back("Q_min must be positive (weight.q_min)");
    if (c.weight_q_max != 0.0 && c.weight_q_max < c.weight_q_min) errors.push_back("weight.q_max must be >= weight.q_min");
    if (c.weight_kind == "field" && c.weight_file.empty()) errors.push_back("weight.file is required for kind = field");
    if (c.weight_kind == "radial") {
        const double far = std::max({std::hypot(c.box.ax - c.weight_center.x, c.box.ay - c.weight_center.y),
                                     std::hypot(c.box.bx - c.weight_center.x, c.box.ay - c.weight_center.y),
                                     std::hypot(c.box.ax - c.weight_center.x, c.box.by - c.weight_center.y),
                                     std::hypot(c.box.bx - c.weight_center.x, c.box.by - c.weight_center.y)});
        if (!(c.weight_value + std::min(0.0, c.weight_slope) * far > 0.0))
            errors.push_back("Q_min must be positive: radial weight vanishes inside the box");
    }
    const std::set<std::string> presets{"figure1", "constant", "zero", "halfplane", "tabulated"};
    if (!presets.count(c.boundary)) errors.push_back("boundary.preset must be one of figure1, constant, zero, halfplane, tabulated");
    if (c.boundary == "figure1" && c.m != 2) errors.push_back("boundary.preset = figure1 needs problem.m = 2");
    if (c.boundary == "constant") {
        if (c.boundary_values.size() != c.m) errors.push_back("boundary.values needs one value per component");
        for (double v : c.boundary_values)
            if (!(v >= 0.0)) errors.push_back("boundary.values must be nonnegative");
    }
    if (c.boundary == "tabulated" && c.boundary_files.size() != c.m)
        errors.push_back("boundary.files needs one file per component");
    if (c.boundary == "halfplane") {
        HalfPlaneSpec spec{c.halfplane_q0, c.halfplane_nu, c.halfplane_e};
        if (c.halfplane_e.size() != c.m) errors.push_back("boundary.e needs one weight per component");
        try {
            spec.validate();
        } catch (const DomainError& e) {
            errors.push_back(std::string("boundary half-plane: ") + e.what());
        }
    }
    try {
        c.solver.validate(make_grid(c.box, std::max<std::size_t>(c.nx, 3), std::max<std::size_t>(c.ny, 3)));
    } catch (const DomainError& e) {
        errors.push_back(std::string("solver: ") + e.what());
    }
    for (const auto& name : c.checks) {
        const auto& all = available_checks();
        if (std::find(all.begin(), all.end(), name) == all.end()) errors.push_back("unknown check '" + name + "'");
    }
    const auto& s = c.settings;
    if (s.points == 0) errors.push_back("diagnostics.points must be positive");
    if (!(s.r_max > 0.0) || !(s.r_min_cells > 0.0)) errors.push_back("diagnostics radii must be positive");
    if (!(s.growth_ratio_max >= 1.0)) errors.push_back("diagnostics.growth_ratio_max must be >= 1");
    if (!(s.density_floor >= 0.0 && s.density_floor <= 1.0)) errors.push_back("diagnostics.density_floor must lie in [0, 1]");
    if (!(s.nta_m > 0.0)) errors.push_back("diagnostics.nta_m must be positive");
    if (!(s.flat_rho > 0.0)) errors.push_back("diagnostics.flat_rho must be positive");
    if (s.blowup_nodes < 5) errors.push_back("diagnostics.blowup_nodes must be at least 5");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    const Table table = parse_table(text);
    Reader r(table);
    RunConfig c;
    c.name = r.text("name", c.name);

    const auto box = r.numbers("grid.box", {c.box.ax, c.box.bx, c.box.ay, c.box.by});
    if (box.size() != 4) throw ConfigError("grid.box needs 4 numbers", r.line("grid.box"));
    c.box = {box[0], box[1], box[2], box[3]};
    if (r.has("grid.nodes")) {
        const auto n = r.numbers("grid.nodes", {});
        if (n.size() != 1 && n.size() != 2) throw ConfigError("grid.nodes needs 1 or 2 integers", r.line("grid.nodes"));
        for (double v : n)
            if (v < 0.0 || v != std::floor(v)) throw ConfigError("grid.nodes must hold integers", r.line("grid.nodes"));
        c.nx = static_cast<std::size_t>(n[0]);
        c.ny = static_cast<std::size_t>(n.back());
    }
    c.m = r.count("problem.m", c.m);

    c.weight_kind = r.text("weight.kind", c.weight_kind);
    c.weight_value = r.number("weight.value", c.weight_value);
    c.weight_slope = r.number("weight.slope", c.weight_slope);
    const auto wc = r.numbers("weight.center", {0.0, 0.0});
    if (wc.size() != 2) throw ConfigError("weight.center needs 2 numbers", r.line("weight.center"));
    c.weight_center = {wc[0], wc[1]};
    if (r.has("weight.file")) c.weight_file = resolve(base_dir, r.text("weight.file", ""));
    // 0 means "from the values" internally, so an explicit nonpositive bound is flagged here.
    const bool q_min_bad = r.has("weight.q_min") && !(r.number("weight.q_min", 0.0) > 0.0);
    c.weight_q_min = r.number("weight.q_min", 0.0);
    c.weight_q_max = r.number("weight.q_max", 0.0);

    c.boundary = r.text("boundary.preset", c.boundary);
    c.boundary_values = r.numbers("boundary.values", {});
    for (const auto& f : r.texts("boundary.files", {})) c.boundary_files.push_back(resolve(base_dir, f));
    c.halfplane_q0 = r.number("boundary.q0", c.halfplane_q0);
    const auto nu = r.numbers("boundary.nu", {1.0, 0.0});
    if (nu.size() != 2) throw ConfigError("boundary.nu needs 2 numbers", r.line("boundary.nu"));
    c.halfplane_nu = {nu[0], nu[1]};
    c.halfplane_e = r.numbers("boundary.e", std::vector<double>(c.m, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(c.m, 1)))));

    auto& s = c.solver;
    s.eps_schedule = r.numbers("solver.eps_schedule", s.eps_schedule);
    s.max_outer = r.count("solver.max_outer", s.max_outer);
    s.descent_per_cycle = r.count("solver.descent_per_cycle", s.descent_per_cycle);
    s.harmonic_tol = r.number("solver.harmonic_tol", s.harmonic_tol);
    s.flip_radius = r.count("solver.flip_radius", s.flip_radius);
    s.seed = r.count("solver.seed", s.seed);
    s.multilevel = r.flag("solver.multilevel", s.multilevel);
    s.polish_rounds = r.count("solver.polish_rounds", s.polish_rounds);
    s.truncation_rho = r.number("solver.truncation_rho", s.truncation_rho);
    s.step.initial_step = r.number("solver.step.initial", s.step.initial_step);
    s.step.backtrack = r.number("solver.step.backtrack", s.step.backtrack);
    s.step.c_dec = r.number("solver.step.c_dec", s.step.c_dec);
    s.step.min_step = r.number("solver.step.min_step", s.step.min_step);

    c.output_dir = resolve(base_dir, r.text("output.dir", c.output_dir.string()));

    c.checks = r.texts("diagnostics.checks", c.checks);
    if (std::find(c.checks.begin(), c.checks.end(), "all") != c.checks.end()) c.checks = available_checks();
    auto& d = c.settings;
    d.points = r.count("diagnostics.points", d.points);
    d.r_max = r.number("diagnostics.r_max", d.r_max);
    d.r_min_cells = r.number("diagnostics.r_min_cells", d.r_min_cells);
    d.growth_ratio_max = r.number("diagnostics.growth_ratio_max", d.growth_ratio_max);
    d.density_floor = r.number("diagnostics.density_floor", d.density_floor);
    d.weiss_slack_cells = r.number("diagnostics.weiss_slack_cells", d.weiss_slack_cells);
    d.fb_median_max = r.number("diagnostics.fb_median_max", d.fb_median_max);
    d.nta_m = r.number("diagnostics.nta_m", d.nta_m);
    d.flat_rho = r.number("diagnostics.flat_rho", d.flat_rho);
    d.blowup_nodes = r.count("diagnostics.blowup_nodes", d.blowup_nodes);

    r.reject_unknown();

    std::vector<std::string> errors;
    validate(c, errors);
    if (q_min_bad && std::find(errors.begin(), errors.end(), "Q_min must be positive (weight.q_min)") == errors.end())
        errors.push_back("Q_min must be positive (weight.q_min)");
    for (const auto& f : c.boundary_files)
        if (c.boundary == "tabulated" && !std::filesystem::exists(f)) errors.push_back("file not found: " + f.string());
    if (c.weight_kind == "field" && !c.weight_file.empty() && !std::filesystem::exists(c.weight_file))
        errors.push_back("file not found: " + c.weight_file.string());
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config_text(ss.str(), path.parent_path());
    if (!c.name.empty() && c.name == "run") c.name = path.stem().string();
    return c;
}

RunConfig figure1_config(std::size_t resolution) {
    RunConfig c;
    c.name = "figure1";
    c.nx = c.ny = resolution;
    c.m = 2;
    c.boundary = "figure1";
    c.output_dir = "figure1";
    std::vector<std::string> errors;
    validate(c, errors);
    if (!errors.empty()) throw ConfigError(errors.front());
    return c;
}

GridSpec build_grid(const RunConfig& cfg) { return make_grid(cfg.box, cfg.nx, cfg.ny); }

WeightField build_weight(const RunConfig& cfg, const GridSpec& grid) {
    ScalarField values(grid);
    if (cfg.weight_kind == "constant") {
        values = ScalarField(grid, cfg.weight_value);
    } else if (cfg.weight_kind == "radial") {
        values = ScalarField::sample(grid, [&](Vec2 p) { return cfg.weight_value + cfg.weight_slope * norm(p - cfg.weight_center); });
    } else {
        values = read_field(cfg.weight_file);
        if (!(values.grid() == grid)) throw ConfigError("weight.file grid differs from the run grid");
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double v : values.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo > 0.0)) throw ConfigError("Q_min must be positive: weight has nonpositive values");
    const double q_min = cfg.weight_q_min > 0.0 ? cfg.weight_q_min : lo;
    const double q_max = cfg.weight_q_max > 0.0 ? cfg.weight_q_max : hi;
    if (lo < q_min || hi > q_max) throw ConfigError("weight values leave [weight.q_min, weight.q_max]");
    return WeightField(values, q_min, q_max);
}

BoundaryData build_boundary(const RunConfig& cfg, const GridSpec& grid) {
    std::vector<std::function<double(Vec2)>> g;
    if (cfg.boundary == "figure1") {
        g = {[](Vec2 p) { return std::max(-p.y, 0.0); }, [](Vec2 p) { return std::max(p.x, 0.0); }};
    } else if (cfg.boundary == "constant") {
        for (double v : cfg.boundary_values) g.push_back([v](Vec2) { return v; });
    } else if (cfg.boundary == "zero") {
        g.assign(cfg.m, [](Vec2) { return 0.0; });
    } else if (cfg.boundary == "halfplane") {
        const HalfPlaneSpec spec{cfg.halfplane_q0, cfg.halfplane_nu, cfg.halfplane_e};
        return BoundaryData::from_field(halfplane_field(spec, grid));
    } else {
        std::vector<ScalarField> comps;
        for (const auto& f : cfg.boundary_files) {
            comps.push_back(read_field(f));
            if (!(comps.back().grid() == grid)) throw ConfigError(f.string() + ": grid differs from the run grid");
            for (double v : comps.back().values())
                if (!(v >= 0.0)) throw ConfigError(f.string() + ": boundary values must be nonnegative");
        }
        return BoundaryData::from_field(VectorField(std::move(comps)));
    }
    return BoundaryData::from_functions(grid, g);
}

}  // namespace fbmin::cli
