#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcob/error.hpp"
#include "mcob/io.hpp"
#include "mcob/line_models.hpp"
#include "mcob/oracle.hpp"
#include "mcob/oscillation.hpp"
#include "mcob/sphere_model.hpp"

namespace mcob::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { Ok = 0, ChecksFailed = 1, ConfigError = 2, SolverError = 3 };

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Bad configuration: unknown key, wrong type, missing or invalid value.
class ConfigProblem : public Error {
public:
    explicit ConfigProblem(const std::string& what) : Error(ErrorKind::RejectedInput, what) {}
};

/// Strict view of a JSON object: every key must be read before finish().
class ConfigObject {
public:
    ConfigObject(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigProblem(where_ + ": expected an object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    template <class T>
    std::optional<T> optional(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return convert<T>(key);
    }

    template <class T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigProblem(where_ + "." + key + ": required field is missing");
        return convert<T>(key);
    }

    json raw(const std::string& key) {
        used_.insert(key);
        return j_.value(key, json());
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigProblem(where_ + "." + it.key() + ": unknown key");
    }

    const std::string& where() const noexcept { return where_; }

private:
    template <class T>
    T convert(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigProblem(where_ + "." + key + ": wrong type");
        }
    }

    json j_;
    std::string where_;
    std::set<std::string> used_;
};

inline json load_config(const std::optional<fs::path>& path) {
    if (!path) return json::object();
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw ConfigProblem("cannot read config " + path->string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigProblem(path->string() + ": " + e.what());
    }
}

inline void positive(const std::string& where, const std::string& key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigProblem(where + "." + key + ": must be positive");
}

/// Probe times from "probes" (explicit list) or "probe_count" (log-spaced in [probe_min, t_end])
/// or "probe_interval" (uniform in (t0, t_end]).
inline std::vector<double> read_probes(ConfigObject& c, double t0, double t_end) {
    std::vector<double> p;
    if (c.has("probes")) {
        p = c.require<std::vector<double>>("probes");
        if (p.empty()) throw ConfigProblem(c.where() + ".probes: probe list is empty");
    } else if (c.has("probe_interval")) {
        const double dt = c.require<double>("probe_interval");
        positive(c.where(), "probe_interval", dt);
        const auto n = static_cast<long>(std::floor((t_end - t0) / dt + 1e-9));
        for (long k = 1; k <= n; ++k) p.push_back(t0 + static_cast<double>(k) * dt);
    } else if (c.has("probe_count")) {
        const int n = c.require<int>("probe_count");
        const double lo = c.require<double>("probe_min");
        if (n < 1) throw ConfigProblem(c.where() + ".probe_count: must be at least 1");
        positive(c.where(), "probe_min", lo);
        p = log_spaced(lo, t_end, static_cast<std::size_t>(n));
    } else {
        throw ConfigProblem(c.where() + ": one of probes, probe_interval, probe_count is required");
    }
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (double t : p)
        if (!(t >= t0 && t <= t_end)) throw ConfigProblem(c.where() + ".probes: probe outside the run interval");
    return p;
}

inline TimeSchedule read_schedule(ConfigObject& c, TimeSchedule def) {
    TimeSchedule s = def;
    s.dt = c.get("dt", s.dt);
    s.growth = c.get("growth", s.growth);
    s.dt_max = c.get("dt_max", s.dt_max);
    positive(c.where(), "dt", s.dt);
    if (s.growth < 0.0) throw ConfigProblem(c.where() + ".growth: must be nonnegative");
    return s;
}

/// Output bookkeeping shared by all subcommands.
struct RunOutput {
    fs::path dir;
    json manifest;
    std::vector<std::string> files;

    RunOutput(fs::path d, std::string kind, json config) : dir(std::move(d)) {
        fs::create_directories(dir);
        manifest = {{"artifact", "mcob"}, {"version", kVersion}, {"kind", std::move(kind)}, {"config", std::move(config)}};
    }

    fs::path file(const std::string& name) {
        files.push_back(name);
        return dir / name;
    }

    void snapshots(const std::vector<StepResult>& snaps, const std::string& prefix = "u_") {
        json list = json::array();
        for (const auto& s : snaps) {
            const std::string name = prefix + io::format(s.t) + ".csv";
            io::write_field_csv(file(name), s.field);
            list.push_back({{"t", s.t}, {"file", name}, {"positivity_threshold", s.field.positivity_threshold()}});
        }
        manifest[prefix == "u_" ? "snapshots" : "reference_snapshots"] = list;
    }

    void plot_data(const std::vector<StepResult>& snaps) {
        std::vector<std::vector<double>> rows;
        for (const auto& s : snaps)
            for (std::size_t i = 0; i < s.field.size(); ++i) rows.push_back({s.t, s.field.grid().x(i), s.field[i]});
        io::write_csv(file("plot_u_long.csv"), {"t", "x", "u"}, rows);
    }

    void finish(const json& checks, bool passed) {
        manifest["checks"] = checks;
        manifest["passed"] = passed;
        manifest["outputs"] = files;
        io::write_json(dir / "manifest.json", manifest);
    }
};

inline json check_entry(const std::string& name, double value, double bound, bool ok) {
    return {{"name", name}, {"value", value}, {"bound", bound}, {"passed", ok}};
}

inline bool all_passed(const json& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const json& c) { return c.at("passed").get<bool>(); });
}

// ---------------------------------------------------------------------------

struct SphereRunConfig {
    SphereSetup setup;
    double dt = 1e-5;
    double t_end = 0.1;
    std::vector<double> probes;
    NonlocalOptions nonlocal;
};

inline SphereRunConfig parse_sphere(const json& j) {
    ConfigObject c(j, "config");
    SphereRunConfig r;
    r.setup = sphere_preset(c.get<std::string>("preset", "assumption-3.1-default"));
    r.setup.gamma = c.get("gamma", r.setup.gamma);
    r.setup.g_left = c.get("g_left", r.setup.g_left);
    r.setup.g_right = c.get("g_right", r.setup.g_right);
    r.setup.n_cells = c.get<std::size_t>("n_cells", r.setup.n_cells);
    if (auto a = c.optional<double>("amplitude")) r.setup.amplitude = *a;
    r.dt = c.get("dt", r.dt);
    r.t_end = c.get("t_end", r.t_end);
    positive("config", "dt", r.dt);
    positive("config", "t_end", r.t_end);
    if (r.setup.n_cells < 2) throw ConfigProblem("config.n_cells: at least 2 cells are required");
    r.nonlocal.lambda_tolerance = c.get("lambda_tolerance", r.nonlocal.lambda_tolerance);
    r.probes = read_probes(c, 0.0, r.t_end);
    c.finish();
    return r;
}

inline json sphere_config_json(const SphereRunConfig& r) {
    json j{{"gamma", r.setup.gamma}, {"g_left", r.setup.g_left}, {"g_right", r.setup.g_right},
           {"n_cells", r.setup.n_cells}, {"amplitude", r.setup.amplitude.value_or(r.setup.compatible_amplitude())},
           {"dt", r.dt}, {"t_end", r.t_end}, {"probes", r.probes}, {"lambda_tolerance", r.nonlocal.lambda_tolerance}};
    return j;
}

inline int run_sphere(const json& config, const fs::path& out_dir, bool plot) {
    const SphereRunConfig r = parse_sphere(config);
    const Field1D u0 = r.setup.initial();
    const Stimulus g = r.setup.stimulus();
    const NonlocalRun res = solve_sphere(u0, g, r.t_end, r.dt, r.probes, r.nonlocal);
    RunOutput out(out_dir, "sphere", sphere_config_json(r));
    io::write_trace_csv(out.file("trace.csv"), res.run.trace);
    out.snapshots(res.run.snapshots);
    if (plot) out.plot_data(res.run.snapshots);

    json checks = json::array();
    const double m0 = res.run.trace.rows.front().mass;
    double mass_dev = 0.0;
    for (const auto& row : res.run.trace.rows) mass_dev = std::max(mass_dev, std::abs(row.mass / m0 - 1.0));
    checks.push_back(check_entry("mass-conservation", mass_dev, 1e-6, mass_dev <= 1e-6));
    double sup = 0.0;
    for (const auto& s : res.run.snapshots) sup = std::max(sup, s.field.max_value());
    const auto mono = monotonicity_check(res.run.snapshots, 1e-8 * sup);
    checks.push_back(check_entry("monotonicity", mono.worst_slope, -1e-8 * sup, mono.monotone));
    checks.push_back(check_entry("side-condition", res.log.max_side_condition, 1e-6, res.log.max_side_condition <= 1e-6));
    const double h = u0.grid().h();
    const auto nd = nondegeneracy_report(u0, g, res.run.trace, res.run.snapshots, 2.0 * h);
    checks.push_back(check_entry("front-bound", nd.p_bound_margin, 0.0, nd.p_bound_margin >= 0.0));
    if (nd.hypotheses_met)
        checks.push_back(check_entry("front-separation", nd.separation_margin, 0.0, nd.separation_margin >= 0.0));
    const bool ok = all_passed(checks);
    out.manifest["constants"] = {{"mass", nd.mass}, {"sup_norm", nd.sup_norm}, {"c0", nd.c0}, {"delta0", nd.delta0}};
    out.finish(checks, ok);
    return ok ? Ok : ChecksFailed;
}

// ---------------------------------------------------------------------------

inline DiracOptions parse_dirac(const json& j, std::optional<double> lambda_override) {
    ConfigObject c(j, "config");
    DiracOptions o;
    o.lambda = c.get("lambda", 1.0);
    if (lambda_override) o.lambda = *lambda_override;
    positive("config", "lambda", o.lambda);
    o.bootstrap.delta_t = c.get("delta_t", 1e-6);
    o.bootstrap.radius = c.get("radius", 6.0);
    o.bootstrap.n_cells = c.get<std::size_t>("n_cells", 4000);
    o.t_end = c.get("t_end", 1e-2);
    positive("config", "delta_t", o.bootstrap.delta_t);
    positive("config", "radius", o.bootstrap.radius);
    positive("config", "t_end", o.t_end);
    if (o.t_end <= o.bootstrap.delta_t) throw ConfigProblem("config.t_end: must exceed delta_t");
    o.schedule = read_schedule(c, TimeSchedule{1e-8, 0.01, 1e-4});
    o.probes = read_probes(c, o.bootstrap.delta_t, o.t_end);
    c.finish();
    return o;
}

inline json dirac_config_json(const DiracOptions& o) {
    return {{"lambda", o.lambda}, {"delta_t", o.bootstrap.delta_t}, {"radius", o.bootstrap.radius},
            {"n_cells", o.bootstrap.n_cells}, {"t_end", o.t_end}, {"dt", o.schedule.dt},
            {"growth", o.schedule.growth}, {"dt_max", std::isfinite(o.schedule.dt_max) ? json(o.schedule.dt_max) : json()},
            {"probes", o.probes}};
}

inline int run_dirac(const json& config, std::optional<double> lambda, const fs::path& out_dir, bool plot) {
    const DiracOptions o = parse_dirac(config, lambda);
    const DiracRun run = solve_dirac(o);
    const EvolveResult heat = heat_reference(o);
    RunOutput out(out_dir, "dirac", dirac_config_json(o));
    io::write_trace_csv(out.file("trace.csv"), run.run.trace);
    out.snapshots(run.run.snapshots);
    out.snapshots(heat.snapshots, "phi_");
    if (plot) out.plot_data(run.run.snapshots);
    const SupportEnvelope env = support_envelope(run.run.snapshots);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < env.times.size(); ++k) rows.push_back({env.times[k], env.ell[k], env.L[k], env.reference[k]});
    io::write_csv(out.file("envelope.csv"), {"t", "ell", "L", "ref_sqrt6tlog"}, rows);

    RunBundle bundle;
    bundle.dirac = DiracBundle{run.run.snapshots, heat.snapshots, o.bootstrap.delta_t, o.lambda};
    const auto cert = certify_inequalities(bundle);
    json checks = json::array();
    for (const auto& e : cert.entries) checks.push_back(check_entry(e.name, e.worst_margin, 0.0, e.passed));
    if (run.extinction_step_time) out.manifest["extinct_by"] = *run.extinction_step_time;
    const bool ok = all_passed(checks);
    out.finish(checks, ok);
    return ok ? Ok : ChecksFailed;
}

// ---------------------------------------------------------------------------

struct CompositeRunConfig {
    CompositeSpec spec;
    double t_end = 1e-3;
    TimeSchedule schedule{1e-6, 0.0};
    std::vector<double> probes;
    std::optional<fs::path> hierarchy;
    double eta = 1.0;
};

inline CompositeRunConfig parse_composite(const json& j, const fs::path& base) {
    ConfigObject c(j, "config");
    CompositeRunConfig r;
    r.spec.n_cells = c.get<std::size_t>("n_cells", r.spec.n_cells);
    r.spec.left_amplitude = c.get("left_amplitude", r.spec.left_amplitude);
    r.spec.eta = r.eta = c.get("eta", 1.0);
    positive("config", "eta", r.eta);
    positive("config", "left_amplitude", r.spec.left_amplitude);
    if (c.has("atoms")) {
        for (const auto& a : c.require<std::vector<std::vector<double>>>("atoms")) {
            if (a.size() != 2) throw ConfigProblem("config.atoms: each atom is [x, mass]");
            r.spec.atoms.push_back({a[0], a[1]});
        }
    }
    if (auto h = c.optional<std::string>("hierarchy")) {
        fs::path p(*h);
        r.hierarchy = p.is_absolute() ? p : base / p;
    }
    const std::string mode = c.get<std::string>("regularization", "hat");
    if (mode == "hat") r.spec.regularization = AtomRegularization::NearestNodeHat;
    else if (mode == "heat") r.spec.regularization = AtomRegularization::HeatKernel;
    else throw ConfigProblem("config.regularization: expected hat or heat");
    r.spec.mollify_time = c.get("mollify_time", 0.0);
    r.t_end = c.get("t_end", r.t_end);
    positive("config", "t_end", r.t_end);
    r.schedule = read_schedule(c, r.schedule);
    r.probes = read_probes(c, 0.0, r.t_end);
    c.finish();
    return r;
}

inline json hierarchy_to_json(const AtomHierarchy& h);
inline AtomHierarchy hierarchy_from_json(const json& j);

inline int run_composite(const json& config, const fs::path& base, const fs::path& out_dir, bool plot) {
    CompositeRunConfig r = parse_composite(config, base);
    json resolved = config;
    if (r.hierarchy) {
        const AtomHierarchy h = hierarchy_from_json(io::read_json(*r.hierarchy));
        const Embedding e = embed_into_composite(h, r.eta, r.spec.n_cells);
        for (const auto& a : e.spec.atoms) r.spec.atoms.push_back(a);
        resolved["embedding"] = {{"f_plus", e.f_plus}, {"lambda0", e.lambda0}, {"t_n", e.t_n}, {"t_tilde_n", e.t_tilde_n},
                                 {"f_range", {e.f_min, e.f_max}}};
    }
    const CompositeRun run = solve_composite(r.spec, r.t_end, r.schedule, r.probes);
    RunOutput out(out_dir, "composite", resolved);
    io::write_trace_csv(out.file("trace.csv"), run.nonlocal.run.trace);
    io::write_trace_csv(out.file("trace_left.csv"), run.left);
    io::write_trace_csv(out.file("trace_right.csv"), run.right);
    out.snapshots(run.nonlocal.run.snapshots);
    if (plot) out.plot_data(run.nonlocal.run.snapshots);
    RunBundle bundle;
    bundle.composite = CompositeBundle{run.nonlocal.run.snapshots, run.lambdas};
    const auto cert = certify_inequalities(bundle);
    json checks = json::array();
    for (const auto& e : cert.entries) checks.push_back(check_entry(e.name, e.worst_margin, 0.0, e.passed));
    const bool ok = all_passed(checks);
    out.finish(checks, ok);
    return ok ? Ok : ChecksFailed;
}

// ---------------------------------------------------------------------------

inline json calibration_to_json(const BuildingBlockCalibration& c) {
    return {{"d", c.d}, {"T_star", c.T_star}, {"T_star_unit", c.T_star_unit}, {"T1", c.T1}, {"d1", c.d1},
            {"T1_tilde", c.T1_tilde}, {"C1", c.C1}, {"kappa", c.kappa}};
}

inline BuildingBlockCalibration calibration_from_json(const json& j) {
    ConfigObject c(j, "calibration");
    BuildingBlockCalibration b;
    b.d = c.require<double>("d");
    b.T_star = c.require<double>("T_star");
    b.T_star_unit = c.get("T_star_unit", b.T_star);
    b.T1 = c.require<double>("T1");
    b.d1 = c.require<double>("d1");
    b.T1_tilde = c.require<double>("T1_tilde");
    b.C1 = c.require<double>("C1");
    b.kappa = c.get("kappa", 0.0);
    c.finish();
    return b;
}

inline json hierarchy_to_json(const AtomHierarchy& h) {
    json levels = json::array();
    for (const auto& L : h.levels) {
        json atoms = json::array();
        for (const auto& a : L.atoms) atoms.push_back({{"x", a.x}, {"lineage", a.lineage}});
        levels.push_back({{"theta", L.theta}, {"index_max", L.index_max}, {"surviving", L.surviving},
                          {"weight", L.weight}, {"t_n", L.t_n}, {"t_tilde_n", L.t_tilde_n}, {"atoms", atoms}});
    }
    json gates = json::array();
    for (const auto& g : h.gates)
        gates.push_back({{"gate", g.gate}, {"level", g.level}, {"value", g.value}, {"bound", g.bound}, {"passed", g.ok}});
    return {{"artifact", "mcob"}, {"version", kVersion}, {"calibration", calibration_to_json(h.calibration)},
            {"thetas", h.thetas()}, {"total_mass", h.total_mass}, {"gates", gates}, {"levels", levels}};
}

/// Rebuilds the hierarchy from its calibration and scales; the stored atoms must agree.
inline AtomHierarchy hierarchy_from_json(const json& j) {
    if (!j.is_object() || !j.contains("calibration") || !j.contains("thetas"))
        throw ConfigProblem("hierarchy: calibration and thetas are required");
    const auto calib = calibration_from_json(j.at("calibration"));
    const auto thetas = j.at("thetas").get<std::vector<double>>();
    AtomHierarchy h = build_hierarchy(calib, thetas);
    if (j.contains("levels")) {
        const auto& levels = j.at("levels");
        if (levels.size() != h.levels.size()) throw Error(ErrorKind::Inconsistency, "hierarchy levels disagree");
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (levels[k].at("atoms").size() != h.levels[k].atoms.size())
                throw Error(ErrorKind::Inconsistency, "hierarchy atoms disagree at level " + std::to_string(k + 1));
    }
    return h;
}

inline CalibrationOptions parse_calibration(ConfigObject& c) {
    CalibrationOptions o;
    o.kappa = c.get("kappa", o.kappa);
    o.bootstrap.delta_t = c.get("delta_t", o.bootstrap.delta_t);
    o.bootstrap.radius = c.get("radius", o.bootstrap.radius);
    o.bootstrap.n_cells = c.get<std::size_t>("n_cells", o.bootstrap.n_cells);
    o.t_end = c.get("t_end", o.t_end);
    o.n_probes = c.get<std::size_t>("n_probes", o.n_probes);
    o.schedule = read_schedule(c, o.schedule);
    return o;
}

inline int run_build_oscillation(const json& config, int levels, const fs::path& out_file) {
    ConfigObject c(config, "config");
    const CalibrationOptions opt = parse_calibration(c);
    const double margin = c.get("margin", 0.9);
    std::optional<std::vector<double>> thetas = c.optional<std::vector<double>>("thetas");
    json calib_json = c.raw("calibration");
    c.finish();
    if (levels < 1 || levels > 3) throw ConfigProblem("--levels: must be 1, 2 or 3");
    const BuildingBlockCalibration calib =
        calib_json.is_null() ? calibrate_block(opt) : calibration_from_json(calib_json);
    const std::vector<double> th = thetas ? *thetas : select_thetas(calib, levels, margin);
    const AtomHierarchy h = build_hierarchy(calib, th);
    io::write_json(out_file, hierarchy_to_json(h));
    return Ok;
}

inline int run_run_oscillation(const json& config, const fs::path& hierarchy_file, const fs::path& out_dir,
                               bool plot) {
    ConfigObject c(config, "config");
    OscillationPlan plan;
    plan.lambda = c.get("lambda", plan.lambda);
    plan.x_min = c.get("x_min", plan.x_min);
    plan.x_max = c.get("x_max", plan.x_max);
    plan.cells_per_scale = c.get("cells_per_scale", plan.cells_per_scale);
    plan.n_cells = c.get<std::size_t>("n_cells", plan.n_cells);
    plan.growth = c.get("growth", plan.growth);
    plan.extra_probes = c.get<std::size_t>("extra_probes", plan.extra_probes);
    c.finish();
    const AtomHierarchy h = hierarchy_from_json(io::read_json(hierarchy_file));
    const OscillationReport rep = run_oscillation(h, plan);
    json resolved{{"hierarchy", hierarchy_file.filename().string()}, {"lambda", plan.lambda}, {"x_min", plan.x_min},
                  {"x_max", plan.x_max}, {"cells_per_scale", plan.cells_per_scale}, {"n_cells", rep.n_cells},
                  {"growth", plan.growth}, {"extra_probes", plan.extra_probes}};
    RunOutput out(out_dir, "oscillation", resolved);
    std::vector<std::vector<double>> rows;
    json checks = json::array();
    for (const auto& l : rep.levels) {
        rows.push_back({static_cast<double>(l.n), l.t_n, l.measure_tn, l.t_tilde_n, l.measure_ttilde_n, l.threshold_hi,
                        l.threshold_lo});
        checks.push_back(check_entry("ratio-level-" + std::to_string(l.n), l.measure_tn, 2.0 * l.measure_ttilde_n, l.ratio_ok));
        checks.push_back(check_entry("count-level-" + std::to_string(l.n), l.measure_tn, 0.8 * l.predicted, l.count_ok));
    }
    checks.push_back(check_entry("non-overlap", static_cast<double>(rep.overlaps.size()), 0.0, rep.overlaps.empty()));
    io::write_csv(out.file("report.csv"),
                  {"n", "t_n", "measure_tn", "t_tilde_n", "measure_ttilde_n", "threshold_hi", "threshold_lo"}, rows);
    if (plot) {
        std::vector<std::vector<double>> pm;
        for (std::size_t k = 0; k < rep.probe_times.size(); ++k) pm.push_back({rep.probe_times[k], rep.probe_measures[k]});
        io::write_csv(out.file("plot_measure.csv"), {"t", "support_measure"}, pm);
    }
    const bool ok = all_passed(checks);
    out.finish(checks, ok);
    return ok ? Ok : ChecksFailed;
}

// ---------------------------------------------------------------------------

inline std::vector<StepResult> load_snapshots(const fs::path& dir, const json& list) {
    std::vector<StepResult> out;
    for (const auto& s : list) {
        StepResult r{s.at("t").get<double>(),
                     io::read_field_csv(dir / s.at("file").get<std::string>(), s.at("positivity_threshold").get<double>()),
                     {}, 0.0, 0, false};
        r.active_set = detect_support(r.field);
        out.push_back(std::move(r));
    }
    return out;
}

inline json report_to_json(const CertificationReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries)
        entries.push_back({{"name", e.name}, {"inequality", e.statement}, {"worst_margin", e.worst_margin},
                           {"evaluations", e.evaluations}, {"passed", e.passed}});
    return {{"passed", rep.passed()}, {"entries", entries}};
}

/// Re-evaluates the inequalities of a finished run from its files.
inline int run_verify(const fs::path& bundle_dir, std::ostream& os) {
    const fs::path mpath = bundle_dir / "manifest.json";
    if (!fs::exists(mpath)) throw ConfigProblem("missing input: " + mpath.string());
    const json m = io::read_json(mpath);
    const std::string kind = m.at("kind").get<std::string>();
    auto need = [&](const char* key) -> const json& {
        if (!m.contains(key)) throw ConfigProblem(std::string("missing input: manifest lacks ") + key);
        return m.at(key);
    };
    auto need_file = [&](const std::string& name) {
        const fs::path p = bundle_dir / name;
        if (!fs::exists(p)) throw ConfigProblem("missing input: " + p.string());
        return p;
    };
    RunBundle b;
    if (kind == "sphere") {
        const SphereRunConfig r = parse_sphere(need("config"));
        b.sphere = SphereBundle{r.setup.initial(), r.setup.stimulus(), io::read_trace_csv(need_file("trace.csv")),
                                load_snapshots(bundle_dir, need("snapshots"))};
    } else if (kind == "dirac") {
        const json& cfg = need("config");
        b.dirac = DiracBundle{load_snapshots(bundle_dir, need("snapshots")),
                              load_snapshots(bundle_dir, need("reference_snapshots")),
                              cfg.at("delta_t").get<double>(), cfg.at("lambda").get<double>()};
    } else if (kind == "composite") {
        auto snaps = load_snapshots(bundle_dir, need("snapshots"));
        const auto trace = io::read_trace_csv(need_file("trace.csv"));
        std::vector<double> lambdas;
        for (const auto& s : snaps) {
            auto it = std::find_if(trace.rows.begin(), trace.rows.end(), [&](const TraceRow& r) { return r.t == s.t; });
            if (it == trace.rows.end()) throw ConfigProblem("missing input: trace row at t = " + io::format(s.t));
            lambdas.push_back(it->lambda);
        }
        b.composite = CompositeBundle{std::move(snaps), std::move(lambdas)};
    } else {
        throw ConfigProblem("verify: no inequalities apply to run kind '" + kind + "'");
    }
    const CertificationReport rep = certify_inequalities(b);
    const json j = report_to_json(rep);
    io::write_json(bundle_dir / "verify.json", j);
    os << j.dump(2) << '\n';
    return rep.passed() ? Ok : ChecksFailed;
}

/// Maps an exception to the documented exit code and prints a one-line diagnostic.
inline int report_error(const std::exception& e, std::ostream& err) {
    if (const auto* c = dynamic_cast<const ConfigProblem*>(&e)) {
        err << "config error: " << c->what() << '\n';
        return ConfigError;
    }
    if (const auto* m = dynamic_cast<const Error*>(&e)) {
        if (m->kind() == ErrorKind::RejectedInput) {
            err << "config error: " << m->what() << '\n';
            return ConfigError;
        }
        err << "solver error [" << to_string(m->kind()) << "]: " << m->what() << '\n';
        return SolverError;
    }
    err << "solver error: " << e.what() << '\n';
    return SolverError;
}

}  // namespace mcob::cli
