#include "fbmin/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbmin/blowup.hpp"
#include "fbmin/error.hpp"
#include "fbmin/functional.hpp"
#include "fbmin/hodograph.hpp"

namespace fbmin {

using nlohmann::json;

namespace {

json vec(Vec2 p) { return json::array({p.x, p.y}); }

// NaN and infinities have no JSON form; they are reported as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

struct Context {
    const VectorField& u;
    const WeightField& q;
    double tol;
    const CheckSettings& s;
    Mask mask;
    std::optional<FreeBoundary> fb;
    std::vector<Vec2> points;
    std::vector<Vec2> normals;
    std::vector<double> radii;
    std::string fb_error;
};

void prepare_interface(Context& c) {
    const auto& g = c.u.grid();
    c.mask = positivity_mask(c.u, c.tol);
    if (c.mask.all_equal()) {
        c.fb_error = "no free boundary";
        return;
    }
    c.fb = extract_free_boundary(c.mask);
    const double h = g.h();
    if (c.s.r_min_cells * h <= c.s.r_max) c.radii = dyadic_radii(c.s.r_min_cells * h, c.s.r_max);
    if (c.radii.empty()) {
        c.fb_error = "no dyadic radius between the smallest radius and r_max";
        return;
    }
    for (std::size_t k : select_fb_points(*c.fb, g, c.radii.back() + h, c.s.points)) {
        c.points.push_back(c.fb->points[k]);
        c.normals.push_back(c.fb->normals[k]);
    }
    if (c.points.empty()) c.fb_error = "no interface point admits the tested balls inside the domain";
}

bool interface_ready(const Context& c, CheckRecord& r) {
    if (c.fb_error.empty()) return true;
    r.status = "fail";
    r.data["error"] = c.fb_error;
    return false;
}

void check_admissibility(const Context& c, const BoundaryData* boundary, CheckRecord& r) {
    r.property = "componentwise nonnegative, finite field matching the boundary data";
    const auto& g = c.u.grid();
    double min_value = 0.0, boundary_error = 0.0;
    std::size_t non_finite = 0, negative = 0;
    for (std::size_t comp = 0; comp < c.u.m(); ++comp)
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            const double v = c.u(comp, k);
            if (!std::isfinite(v)) {
                ++non_finite;
                continue;
            }
            if (v < 0.0) ++negative;
            min_value = std::min(min_value, v);
            if (boundary && g.is_boundary(k)) boundary_error = std::max(boundary_error, std::abs(v - (*boundary)(comp, k)));
        }
    r.data["min_value"] = min_value;
    r.data["negative_values"] = negative;
    r.data["non_finite_values"] = non_finite;
    if (boundary) r.data["boundary_error"] = boundary_error;
    const bool ok = negative == 0 && non_finite == 0 && boundary_error == 0.0;
    r.status = ok ? "pass" : "fail";
}

void check_scaling(const Context& c, CheckRecord& r) {
    r.property = "linear growth, nondegeneracy and positive zero-set density at interface points";
    if (!interface_ready(c, r)) return;
    json rows = json::array();
    double c_lo = std::numeric_limits<double>::infinity(), c_hi = 0.0, dens = 1.0;
    for (Vec2 x : c.points) {
        const ScalingReport s = scaling_report(c.u, c.tol, x, c.radii);
        json pt;
        pt["x"] = vec(x);
        std::vector<double> radii, sup, density, lip;
        for (const auto& row : s.rows) {
            radii.push_back(row.r);
            sup.push_back(row.sup_over_r);
            density.push_back(row.zero_density);
            lip.push_back(row.lipschitz);
        }
        pt["r"] = nums(radii);
        pt["sup_over_r"] = nums(sup);
        pt["zero_density"] = nums(density);
        pt["lipschitz"] = nums(lip);
        pt["sphere_average_max"] = num(s.avg_max);
        rows.push_back(pt);
        c_lo = std::min(c_lo, s.sup_min);
        c_hi = std::max(c_hi, s.sup_max);
        dens = std::min(dens, s.density_min);
    }
    const double ratio = c_lo > 0.0 ? c_hi / c_lo : std::numeric_limits<double>::infinity();
    r.data["points"] = rows;
    r.data["growth_c"] = num(c_lo);
    r.data["growth_C"] = num(c_hi);
    r.data["growth_ratio"] = num(ratio);
    r.data["growth_ratio_max"] = c.s.growth_ratio_max;
    r.data["density_min"] = dens;
    r.data["density_floor"] = c.s.density_floor;
    const bool growth = c_lo > 0.0 && std::isfinite(c_hi) && ratio <= c.s.growth_ratio_max;
    const bool density = dens >= c.s.density_floor;
    r.data["growth_pass"] = growth;
    r.data["density_pass"] = density;
    r.status = growth && density ? "pass" : "fail";
}

void check_weiss(const Context& c, CheckRecord& r, std::vector<WeissCurve>& curves) {
    r.property = "almost monotonicity of the Weiss energy in the radius";
    if (!interface_ready(c, r)) return;
    const double slack = c.s.weiss_slack_cells * c.u.grid().h();
    const bool constant_q = c.q.q_min() == c.q.q_max();
    json rows = json::array();
    double worst = -std::numeric_limits<double>::infinity();
    for (Vec2 x : c.points) {
        WeissCurve w = weiss_curve(c.u, c.q, c.tol, x, c.radii);
        json pt;
        pt["x"] = vec(x);
        pt["r"] = nums(w.radii);
        pt["W"] = nums(w.values);
        pt["tolerance"] = nums(w.tolerance);
        pt["max_drop"] = num(w.max_drop());
        worst = std::max(worst, w.max_drop());
        rows.push_back(pt);
        curves.push_back(std::move(w));
    }
    r.data["points"] = rows;
    r.data["max_drop"] = num(worst);
    r.data["allowed_drop"] = slack;
    r.data["constant_weight"] = constant_q;
    if (!constant_q) {
        r.status = "info";
        return;
    }
    r.status = worst <= slack ? "pass" : "fail";
}

void check_fb_condition(const Context& c, CheckRecord& r) {
    r.property = "inner normal slope of |u| equals Q on the free boundary";
    if (c.mask.all_equal()) {
        r.status = "fail";
        r.data["error"] = "no free boundary";
        return;
    }
    const FbConditionReport f = fb_condition_residual(c.u, c.q, *c.fb);
    r.data["points"] = f.points.size();
    r.data["skipped_points"] = f.skipped;
    r.data["median"] = num(f.median);
    r.data["max"] = num(f.max);
    r.data["squared_median"] = num(f.squared_median);
    r.data["median_max"] = c.s.fb_median_max;
    r.status = f.points.size() > f.skipped && f.median <= c.s.fb_median_max ? "pass" : "fail";
}

void check_traces(const Context& c, CheckRecord& r) {
    r.property = "weight traces u_i/|u| are nonnegative with unit Euclidean sum of squares";
    const Box& b = c.u.grid().box();
    const Vec2 center{0.5 * (b.ax + b.bx), 0.5 * (b.ay + b.by)};
    const double radius = 0.5 * std::hypot(b.bx - b.ax, b.by - b.ay);
    const WeightTraceReport w = weight_traces(c.u, c.tol, center, radius);
    r.data["samples"] = w.samples;
    r.data["normalization_error"] = num(w.normalization_error);
    r.data["min_weight"] = num(w.min_weight);
    r.data["holder_quarter"] = num(w.holder_quarter);
    r.data["holder_half"] = num(w.holder_half);
    r.data["mean_weight"] = nums(w.mean_weight);
    if (w.samples == 0) {
        r.status = "info";
        return;
    }
    r.status = w.normalization_error <= 1e-9 && w.min_weight >= 0.0 ? "pass" : "fail";
}

void check_identities(const Context& c, CheckRecord& r) {
    r.property = "energy identity, Pohozaev identity, domain variation and interface measure";
    if (!interface_ready(c, r)) return;
    const double radius = 0.5 * c.radii.back();
    json rows = json::array();
    for (std::size_t k = 0; k < c.points.size(); ++k) {
        const Vec2 x = c.points[k];
        const IdentityResiduals id =
            identity_residuals(c.u, c.q, c.tol, x, radius, bump_vector_field(x, radius, c.normals[k]));
        const MeasureResidual m = measure_residual(c.u, c.q, c.tol, bump_function(x, radius));
        json pt;
        pt["x"] = vec(x);
        pt["r"] = radius;
        pt["energy"] = num(id.energy.residual);
        pt["pohozaev"] = num(id.pohozaev.residual);
        pt["domain_variation"] = num(id.domain_variation.residual);
        pt["measure"] = num(m.residual);
        rows.push_back(pt);
    }
    r.data["points"] = rows;
    r.status = "info";
}

void check_nta(const Context& c, CheckRecord& r) {
    r.property = "corkscrew and uniform complement density of the positivity set";
    if (!interface_ready(c, r)) return;
    json rows = json::array();
    bool ok = true;
    double best_m = 0.0;
    for (Vec2 x : c.points) {
        const NtaReport n = nta_check(c.mask, x, c.radii, c.s.nta_m, c.s.density_floor);
        json pt;
        pt["x"] = vec(x);
        std::vector<double> m, dens;
        for (const auto& row : n.rows) {
            m.push_back(row.best_m);
            dens.push_back(row.complement_density);
            best_m = std::max(best_m, row.best_m);
        }
        pt["best_m"] = nums(m);
        pt["complement_density"] = nums(dens);
        pt["pass"] = n.pass();
        ok = ok && n.pass();
        rows.push_back(pt);
    }
    r.data["points"] = rows;
    r.data["m"] = c.s.nta_m;
    r.data["largest_best_m"] = num(best_m);
    r.data["density_floor"] = c.s.density_floor;
    r.status = ok ? "pass" : "fail";
}

void check_flatness(const Context& c, CheckRecord& r) {
    r.property = "flatness of the free boundary at interface points";
    if (!interface_ready(c, r)) return;
    json rows = json::array();
    for (Vec2 x : c.points) {
        const FlatnessResult f = flatness(c.u, c.tol, x, c.s.flat_rho);
        json pt;
        pt["x"] = vec(x);
        pt["sigma"] = num(f.sigma);
        pt["normal"] = vec(f.normal);
        rows.push_back(pt);
    }
    r.data["points"] = rows;
    r.data["rho"] = c.s.flat_rho;
    r.status = "info";
}

void check_blowup(const Context& c, CheckRecord& r) {
    r.property = "blowups at the flattest interface point approach a half-plane profile";
    if (!interface_ready(c, r)) return;
    std::size_t flat = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.points.size(); ++k) {
        const double s = flatness(c.u, c.tol, c.points[k], c.s.flat_rho).sigma;
        if (s < best) {
            best = s;
            flat = k;
        }
    }
    const Vec2 x = c.points[flat];
    // The target box reaches r * sqrt(2) from x; the tested balls of radius r_max fit.
    const double r_lo = c.s.r_min_cells * c.u.grid().h(), r_hi = c.radii.back() / std::sqrt(2.0);
    std::vector<double> radii;
    if (r_lo <= r_hi) radii = dyadic_radii(r_lo, r_hi);
    std::reverse(radii.begin(), radii.end());
    r.data["x"] = vec(x);
    if (radii.size() < 2) {
        r.status = "info";
        r.data["skipped"] = "grid too coarse for two blowup radii";
        return;
    }
    const GridSpec target = make_grid({-1.0, 1.0, -1.0, 1.0}, c.s.blowup_nodes, c.s.blowup_nodes);
    const BlowupSequence seq = blowup_sequence(c.u, c.tol, x, radii, target);
    std::vector<double> residual, tolerance;
    json last;
    for (const auto& frame : seq.frames) {
        const RegularFit fit = classify_regular(frame, c.q.at(x));
        residual.push_back(fit.residual);
        tolerance.push_back(frame.tolerance);
        last["nu"] = vec(fit.nu);
        last["e"] = nums(fit.e);
    }
    r.data["r"] = nums(radii);
    r.data["residual"] = nums(residual);
    r.data["interpolation_tolerance"] = nums(tolerance);
    r.data["distances"] = nums(seq.distances);
    r.data["finest_fit"] = last;
    r.status = "info";
}

void check_hodograph(const Context& c, CheckRecord& r) {
    r.property = "hodograph system residual and ellipticity on the flattest patch";
    if (c.mask.all_equal()) {
        r.status = "fail";
        r.data["error"] = "no free boundary";
        return;
    }
    try {
        const RefinementStudy st = hodograph_refinement_study(c.u, c.q, c.tol);
        r.data["x"] = vec(st.patch.point);
        r.data["window"] = json::array({st.patch.window.ax, st.patch.window.bx, st.patch.window.ay, st.patch.window.by});
        r.data["lead"] = st.patch.options.lead;
        r.data["nodes"] = st.nodes;
        r.data["operator_max"] = nums(st.operator_max);
        r.data["ellipticity"] = nums(st.ellipticity);
        r.data["refinement_ratio"] = num(st.ratio());
        const bool ok = std::all_of(st.ellipticity.begin(), st.ellipticity.end(), [](double m) { return m > 0.0; });
        r.status = ok ? "pass" : "fail";
    } catch (const DomainError& e) {
        // The patch does not fit the domain or the lead component is not monotone there.
        r.status = "info";
        r.data["skipped"] = e.what();
    }
}

}  // namespace

bool DiagnosticsReport::passed() const { return failed().empty(); }

std::vector<std::string> DiagnosticsReport::failed() const {
    std::vector<std::string> out;
    for (const auto& r : records)
        if (r.status == "fail") out.push_back(r.name);
    return out;
}

json DiagnosticsReport::to_json() const {
    json j;
    j["schema"] = kReportSchema;
    j["provenance"] = provenance;
    json checks = json::array();
    for (const auto& r : records) {
        json rec;
        rec["name"] = r.name;
        rec["property"] = r.property;
        rec["status"] = r.status;
        rec["data"] = r.data;
        checks.push_back(rec);
    }
    j["checks"] = checks;
    j["failed"] = failed();
    j["passed"] = passed();
    return j;
}

std::string DiagnosticsReport::dump() const { return to_json().dump(2) + "\n"; }

const std::vector<std::string>& available_checks() {
    static const std::vector<std::string> names{"admissibility", "scaling",  "weiss",    "fb-condition",
                                                "traces",        "identities", "nta",    "flatness",
                                                "blowup-classify", "hodograph"};
    return names;
}

std::vector<std::string> parse_check_list(const std::string& comma_separated) {
    std::vector<std::string> out;
    std::stringstream ss(comma_separated);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        if (item == "all") {
            out = available_checks();
            return out;
        }
        const auto& all = available_checks();
        if (std::find(all.begin(), all.end(), item) == all.end()) throw DomainError("unknown check '" + item + "'");
        if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
    }
    return out;
}

DiagnosticsReport run_diagnostics(const VectorField& u, const WeightField& q, double tol,
                                  const std::vector<std::string>& checks, const CheckSettings& settings,
                                  const BoundaryData* boundary) {
    require_same_grid(u.grid(), q.grid(), "weight");
    DiagnosticsReport report;
    const auto& g = u.grid();
    report.provenance["box"] = json::array({g.box().ax, g.box().bx, g.box().ay, g.box().by});
    report.provenance["nodes"] = json::array({g.nx(), g.ny()});
    report.provenance["components"] = u.m();
    report.provenance["positivity_tolerance"] = tol;
    report.provenance["q_min"] = q.q_min();
    report.provenance["q_max"] = q.q_max();

    Context c{u, q, tol, settings, {}, std::nullopt, {}, {}, {}, {}};
    CheckRecord adm{"admissibility", "", "", json::object()};
    check_admissibility(c, boundary, adm);
    report.records.push_back(adm);
    if (adm.status == "pass") {
        const EnergyBreakdown e = evaluate_J(u, q, tol);
        report.provenance["J"] = e.total;
        report.provenance["dirichlet"] = e.dirichlet;
        report.provenance["volume"] = e.volume;
    }

    std::vector<std::string> todo;
    for (const auto& name : available_checks())
        if (name != "admissibility" && std::find(checks.begin(), checks.end(), name) != checks.end())
            todo.push_back(name);
    if (todo.empty()) return report;
    if (adm.status != "pass") {
        for (const auto& name : todo)
            report.records.push_back({name, "", "fail", json{{"error", "field is not admissible"}}});
        return report;
    }
    prepare_interface(c);
    for (const auto& name : todo) {
        CheckRecord r{name, "", "", json::object()};
        try {
            if (name == "scaling") check_scaling(c, r);
            else if (name == "weiss") check_weiss(c, r, report.weiss_curves);
            else if (name == "fb-condition") check_fb_condition(c, r);
            else if (name == "traces") check_traces(c, r);
            else if (name == "identities") check_identities(c, r);
            else if (name == "nta") check_nta(c, r);
            else if (name == "flatness") check_flatness(c, r);
            else if (name == "blowup-classify") check_blowup(c, r);
            else if (name == "hodograph") check_hodograph(c, r);
        } catch (const Error& e) {
            r.status = "fail";
            r.data["error"] = e.what();
        }
        report.records.push_back(std::move(r));
    }
    return report;
}

}  // namespace fbmin
