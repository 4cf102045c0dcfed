#include "cvi/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cvi {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

double as_real(const json& j, const std::string& where) {
    if (!j.is_number()) {
        throw ConfigError(where + ": expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(where + ": must be finite");
    }
    return v;
}

double as_positive(const json& j, const std::string& where) {
    const double v = as_real(j, where);
    if (!(v > 0.0)) {
        throw ConfigError(where + ": must be positive");
    }
    return v;
}

std::uint64_t as_unsigned(const json& j, const std::string& where) {
    if (!j.is_number_unsigned()) {
        throw ConfigError(where + ": expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) {
        throw ConfigError(where + ": expected true or false");
    }
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string()) {
        throw ConfigError(where + ": expected a string");
    }
    return j.get<std::string>();
}

std::vector<double> as_reals(const json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ConfigError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_real(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

void parse_overrides(const json& j, CatalogOverrides& o) {
    const std::string where = "problem.overrides";
    require_object(j, where);
    check_keys(j, {"horizon", "x0", "i0", "sigma", "drift", "rewards", "intensity", "costs"}, where);
    if (j.contains("horizon")) o.horizon = as_positive(j["horizon"], where + ".horizon");
    if (j.contains("x0")) o.x0 = as_real(j["x0"], where + ".x0");
    if (j.contains("i0")) {
        const auto v = as_unsigned(j["i0"], where + ".i0");
        if (v < 1) throw ConfigError(where + ".i0: regime labels start at 1");
        o.i0 = static_cast<long>(v);
    }
    if (j.contains("sigma")) o.sigma = as_reals(j["sigma"], where + ".sigma");
    if (j.contains("drift")) o.drift = as_reals(j["drift"], where + ".drift");
    if (j.contains("rewards")) o.rewards = as_reals(j["rewards"], where + ".rewards");
    if (j.contains("intensity")) o.intensity = as_reals(j["intensity"], where + ".intensity");
    if (j.contains("costs")) {
        const auto& c = j["costs"];
        if (!c.is_array()) throw ConfigError(where + ".costs: expected a matrix");
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < c.size(); ++i) {
            rows.push_back(as_reals(c[i], where + ".costs[" + std::to_string(i) + "]"));
        }
        o.costs = std::move(rows);
    }
}

void parse_basis(const json& j, BasisSpec& b) {
    const std::string where = "scheme.basis";
    require_object(j, where);
    check_keys(j, {"kind", "degree", "knots", "stratify_by_regime", "standardize"}, where);
    if (j.contains("kind")) {
        const auto kind = as_string(j["kind"], where + ".kind");
        if (kind == "polynomial") {
            b.kind = BasisKind::polynomial;
        } else if (kind == "piecewise_linear") {
            b.kind = BasisKind::piecewise_linear;
            b.degree = 8;
        } else {
            throw ConfigError(where + ".kind: expected \"polynomial\" or \"piecewise_linear\"");
        }
    }
    if (j.contains("degree")) {
        if (b.kind != BasisKind::polynomial) throw ConfigError(where + ".degree: only for polynomial bases");
        b.degree = static_cast<int>(std::min<std::uint64_t>(as_unsigned(j["degree"], where + ".degree"), 16));
    }
    if (j.contains("knots")) {
        if (b.kind != BasisKind::piecewise_linear) throw ConfigError(where + ".knots: only for piecewise_linear bases");
        const auto k = as_unsigned(j["knots"], where + ".knots");
        if (k < 2 || k > 4096) throw ConfigError(where + ".knots: must lie in [2, 4096]");
        b.degree = static_cast<int>(k);
    }
    if (j.contains("stratify_by_regime")) b.stratify_by_regime = as_bool(j["stratify_by_regime"], where + ".stratify_by_regime");
    if (j.contains("standardize")) b.standardize = as_bool(j["standardize"], where + ".standardize");
}

void parse_scheme(const json& j, SchemeConfig& s) {
    const std::string where = "scheme";
    require_object(j, where);
    check_keys(j, {"h", "n", "paths", "basis", "ridge", "clip_to_growth_bound", "mode", "min_stratum_samples"}, where);
    if (j.contains("h")) s.h = as_positive(j["h"], where + ".h");
    if (j.contains("n")) s.n = as_unsigned(j["n"], where + ".n");
    if (j.contains("paths")) {
        s.paths = as_unsigned(j["paths"], where + ".paths");
        if (s.paths < 1) throw ConfigError(where + ".paths: must be at least 1");
    }
    if (j.contains("basis")) parse_basis(j["basis"], s.basis);
    if (j.contains("ridge")) {
        const double r = as_real(j["ridge"], where + ".ridge");
        if (r < 0.0) throw ConfigError(where + ".ridge: must be nonnegative");
        s.ridge = r;
    }
    if (j.contains("clip_to_growth_bound")) s.clip_to_growth_bound = as_bool(j["clip_to_growth_bound"], where + ".clip_to_growth_bound");
    if (j.contains("mode")) {
        const auto mode = as_string(j["mode"], where + ".mode");
        if (mode == "regression") {
            s.mode = ExpectationMode::regression;
        } else if (mode == "exact") {
            s.mode = ExpectationMode::exact;
        } else {
            throw ConfigError(where + ".mode: expected \"regression\" or \"exact\"");
        }
    }
    if (j.contains("min_stratum_samples")) s.min_stratum_samples = as_unsigned(j["min_stratum_samples"], where + ".min_stratum_samples");
}

void parse_ladder(const json& j, RunConfig& c) {
    const std::string where = "ladder";
    require_object(j, where);
    check_keys(j, {"schedule", "engine"}, where);
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        if (!s.is_array() || s.empty()) throw ConfigError(where + ".schedule: expected a nonempty array");
        c.ladder_schedule.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            c.ladder_schedule.push_back(as_unsigned(s[i], where + ".schedule[" + std::to_string(i) + "]"));
            if (i > 0 && c.ladder_schedule[i] <= c.ladder_schedule[i - 1]) {
                throw ConfigError(where + ".schedule: must be strictly increasing");
            }
        }
    }
    if (j.contains("engine")) {
        const auto e = as_string(j["engine"], where + ".engine");
        if (e == "monte_carlo") {
            c.ladder_engine = LadderEngine::monte_carlo;
        } else if (e == "lattice") {
            c.ladder_engine = LadderEngine::lattice;
        } else {
            throw ConfigError(where + ".engine: expected \"monte_carlo\" or \"lattice\"");
        }
    }
}

void parse_fd(const json& j, FdConfig& fd) {
    const std::string where = "oracle.fd";
    require_object(j, where);
    check_keys(j, {"intervals", "x_min", "x_max", "dt", "mode", "n", "facelift", "theta"}, where);
    if (j.contains("intervals")) {
        fd.intervals = as_unsigned(j["intervals"], where + ".intervals");
        if (fd.intervals < 3) throw ConfigError(where + ".intervals: must be at least 3");
    }
    if (j.contains("x_min")) fd.x_min = as_real(j["x_min"], where + ".x_min");
    if (j.contains("x_max")) fd.x_max = as_real(j["x_max"], where + ".x_max");
    if (fd.x_min && fd.x_max && !(*fd.x_min < *fd.x_max)) throw ConfigError(where + ": x_min must be below x_max");
    if (j.contains("dt")) fd.dt = as_positive(j["dt"], where + ".dt");
    if (j.contains("mode")) {
        const auto mode = as_string(j["mode"], where + ".mode");
        if (mode == "projection") {
            fd.mode = FdMode::projection;
        } else if (mode == "penalized") {
            fd.mode = FdMode::penalized;
        } else {
            throw ConfigError(where + ".mode: expected \"projection\" or \"penalized\"");
        }
    }
    if (j.contains("n")) fd.n = as_unsigned(j["n"], where + ".n");
    if (j.contains("facelift")) fd.facelift = as_bool(j["facelift"], where + ".facelift");
    if (j.contains("theta")) {
        fd.theta = as_real(j["theta"], where + ".theta");
        if (fd.theta < 0.0 || fd.theta > 1.0) throw ConfigError(where + ".theta: must lie in [0, 1]");
    }
}

void parse_oracle(const json& j, RunConfig& c) {
    const std::string where = "oracle";
    require_object(j, where);
    check_keys(j, {"engine", "fd", "lattice"}, where);
    if (j.contains("engine")) {
        const auto e = as_string(j["engine"], where + ".engine");
        if (e == "fd") {
            c.oracle_engine = OracleEngine::fd;
        } else if (e == "lattice") {
            c.oracle_engine = OracleEngine::lattice;
        } else {
            throw ConfigError(where + ".engine: expected \"fd\" or \"lattice\"");
        }
    }
    if (j.contains("fd")) parse_fd(j["fd"], c.fd);
    if (j.contains("lattice")) {
        const auto& l = j["lattice"];
        require_object(l, where + ".lattice");
        check_keys(l, {"h", "max_nodes"}, where + ".lattice");
        if (l.contains("h")) c.lattice.h = as_positive(l["h"], where + ".lattice.h");
        if (l.contains("max_nodes")) c.lattice.max_nodes = as_unsigned(l["max_nodes"], where + ".lattice.max_nodes");
    }
}

void parse_outputs(const json& j, OutputOptions& o) {
    const std::string where = "outputs";
    require_object(j, where);
    check_keys(j, {"dir", "dump_paths", "dump_steps", "dump_regression"}, where);
    if (j.contains("dir")) o.dir = as_string(j["dir"], where + ".dir");
    if (j.contains("dump_paths")) o.dump_paths = as_bool(j["dump_paths"], where + ".dump_paths");
    if (j.contains("dump_steps")) o.dump_steps = as_bool(j["dump_steps"], where + ".dump_steps");
    if (j.contains("dump_regression")) o.dump_regression = as_bool(j["dump_regression"], where + ".dump_regression");
}

// ---------------------------------------------------------------- writing

// nlohmann writes NaN and infinities as null; keep that explicit.
json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json reals(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(real(x));
    return out;
}

const char* mode_name(ExpectationMode m) { return m == ExpectationMode::exact ? "exact" : "regression"; }

json basis_to_json(const BasisSpec& b) {
    json j;
    if (b.kind == BasisKind::polynomial) {
        j["kind"] = "polynomial";
        j["degree"] = b.degree;
    } else {
        j["kind"] = "piecewise_linear";
        j["knots"] = b.degree;
    }
    j["stratify_by_regime"] = b.stratify_by_regime;
    j["standardize"] = b.standardize;
    return j;
}

json fd_to_json(const FdConfig& fd) {
    json j;
    j["intervals"] = fd.intervals;
    j["x_min"] = fd.x_min ? json(*fd.x_min) : json(nullptr);
    j["x_max"] = fd.x_max ? json(*fd.x_max) : json(nullptr);
    j["dt"] = fd.dt;
    j["mode"] = fd.mode == FdMode::projection ? "projection" : "penalized";
    j["n"] = fd.n;
    j["facelift"] = fd.facelift;
    j["theta"] = fd.theta;
    return j;
}

json steps_to_json(const std::vector<StepDiagnostics>& steps) {
    json j;
    std::vector<double> time, vmean, vmax, pmean, skor;
    json fallback = json::array();
    for (const auto& s : steps) {
        time.push_back(s.time);
        vmean.push_back(s.violation_mean);
        vmax.push_back(s.violation_max);
        pmean.push_back(s.penalty_mean);
        skor.push_back(s.skorohod);
        fallback.push_back(s.fallback_strata);
    }
    j["time"] = reals(time);
    j["violation_mean"] = reals(vmean);
    j["violation_max"] = reals(vmax);
    j["penalty_mean"] = reals(pmean);
    j["skorohod"] = reals(skor);
    j["fallback_strata"] = std::move(fallback);
    return j;
}

// Shortest round-trip text, matching the JSON writer.
std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    return json(v).dump();
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    require_object(doc, "config");
    check_keys(doc, {"problem", "seed", "scheme", "ladder", "oracle", "validate", "outputs"}, "config");
    RunConfig c;
    // Defaults suited to the catalog's switching problems.
    c.scheme.n = 64;
    c.scheme.paths = 50000;
    c.scheme.basis.degree = 1;

    if (!doc.contains("problem")) {
        throw ConfigError("config: missing 'problem'");
    }
    const auto& p = doc["problem"];
    if (p.is_string()) {
        c.problem = p.get<std::string>();
    } else {
        require_object(p, "problem");
        check_keys(p, {"name", "overrides"}, "problem");
        if (!p.contains("name")) throw ConfigError("problem: missing 'name'");
        c.problem = as_string(p["name"], "problem.name");
        if (p.contains("overrides")) parse_overrides(p["overrides"], c.overrides);
    }
    if (doc.contains("seed")) c.seed = as_unsigned(doc["seed"], "seed");
    if (doc.contains("scheme")) parse_scheme(doc["scheme"], c.scheme);
    if (doc.contains("ladder")) parse_ladder(doc["ladder"], c);
    if (doc.contains("oracle")) parse_oracle(doc["oracle"], c);
    if (doc.contains("validate")) {
        const auto& v = doc["validate"];
        require_object(v, "validate");
        check_keys(v, {"samples"}, "validate");
        if (v.contains("samples")) {
            c.validate_samples = as_unsigned(v["samples"], "validate.samples");
            if (c.validate_samples < 1) throw ConfigError("validate.samples: must be at least 1");
        }
    }
    if (doc.contains("outputs")) parse_outputs(doc["outputs"], c.outputs);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return parse_run_config(doc);
}

json scheme_to_json(const SchemeConfig& s) {
    json j;
    j["h"] = s.h;
    j["n"] = s.n;
    j["paths"] = s.paths;
    j["basis"] = basis_to_json(s.basis);
    j["ridge"] = s.ridge ? json(*s.ridge) : json("default");
    j["clip_to_growth_bound"] = s.clip_to_growth_bound;
    j["seed"] = s.seed;
    j["mode"] = mode_name(s.mode);
    j["min_stratum_samples"] = s.min_stratum_samples ? json(*s.min_stratum_samples) : json("basis_size");
    // workers is deliberately absent: results do not depend on it.
    return j;
}

json result_to_json(const SolveResult& r) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "solve_result";
    j["problem"] = r.problem;
    j["config"] = scheme_to_json(r.config);
    j["y0"] = real(r.y0);
    j["terminal_mean"] = real(r.terminal_mean);
    j["terminal_std_error"] = real(r.terminal_std_error);
    j["violation_mean"] = real(r.violation_mean);
    j["violation_std_error"] = real(r.violation_std_error);
    j["skorohod_residual"] = real(skorohod_residual(r));
    double vmax = 0.0;
    for (const auto& s : r.steps) vmax = std::max(vmax, s.violation_max);
    j["violation_max"] = real(vmax);
    j["steps"] = steps_to_json(r.steps);
    return j;
}

json ladder_to_json(const LadderReport& r, LadderEngine engine) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "ladder";
    j["problem"] = r.problem;
    j["engine"] = engine == LadderEngine::lattice ? "lattice" : "monte_carlo";
    j["schedule"] = r.schedule;
    j["y0"] = reals(r.y0);
    j["violation"] = reals(r.violation);
    j["violation_std_error"] = reals(r.violation_std_error);
    j["skorohod"] = reals(r.skorohod);
    j["y0_nondecreasing"] = json(std::vector<bool>(r.y0_nondecreasing));
    j["violation_nonincreasing"] = json(std::vector<bool>(r.violation_nonincreasing));
    j["monotone"] = r.monotone();
    return j;
}

json validation_to_json(const ValidationReport& r) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "validation";
    j["problem"] = r.problem;
    j["sample_count"] = r.sample_count;
    j["seed"] = r.seed;
    j["warning_count"] = r.warning_count();
    json checks = json::array();
    for (const auto& c : r.checks) {
        json e;
        e["name"] = c.name;
        e["status"] = c.status == CheckStatus::pass ? "pass" : "warn";
        e["detail"] = c.detail;
        e["value"] = c.value ? real(*c.value) : json(nullptr);
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    return j;
}

json compare_to_json(const CompareReport& r, const FdConfig& fd) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "compare";
    j["t"] = r.t;
    j["regime"] = r.regime.label();
    j["x"] = r.x;
    j["solver_value"] = real(r.solver_value);
    j["oracle_value"] = real(r.oracle_value);
    j["abs_gap"] = real(r.abs_gap);
    j["rel_gap"] = real(r.rel_gap);
    j["oracle"] = fd_to_json(fd);
    return j;
}

json grid_to_json(const GridSolution& g, const FdConfig& fd, const ProblemSpec& spec) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "grid";
    j["problem"] = spec.name;
    j["engine"] = "fd";
    j["config"] = fd_to_json(fd);
    j["regimes"] = g.regimes;
    j["time_points"] = g.times.size();
    j["space_points"] = g.x.size();
    j["x_min"] = g.x.empty() ? json(nullptr) : json(g.x.front());
    j["x_max"] = g.x.empty() ? json(nullptr) : json(g.x.back());
    json v0 = json::array();
    for (std::size_t i = 0; i < g.regimes; ++i) {
        v0.push_back(real(g.interpolate(RegimeIndex(i), 0.0, spec.initial_state[0])));
    }
    j["x0"] = spec.initial_state[0];
    j["i0"] = spec.initial_regime.label();
    j["value_at_x0"] = std::move(v0);
    return j;
}

json lattice_to_json(const LatticeSolution& s) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "lattice";
    j["n"] = s.n;
    j["h"] = s.chain.h;
    j["steps"] = s.chain.steps;
    j["node_count"] = s.chain.node_count();
    j["y0"] = real(s.y0);
    j["violation_mean"] = real(s.violation_mean);
    j["skorohod"] = real(s.skorohod);
    j["diagnostics"] = steps_to_json(s.steps);
    return j;
}

json paths_summary_to_json(const PathBundle& b, const std::string& problem, std::uint64_t seed) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "paths";
    j["problem"] = problem;
    j["seed"] = seed;
    j["paths"] = b.path_count();
    j["steps"] = b.steps;
    j["horizon"] = b.horizon;
    j["dim"] = b.dim;
    j["nodes"] = b.time.size();
    j["atoms"] = b.atom_time.size();
    const std::size_t N = b.path_count();
    std::vector<double> mean(b.dim, 0.0);
    std::vector<double> occupancy(b.regimes, 0.0);
    for (std::size_t p = 0; p < N; ++p) {
        const auto x = b.state_at(p, b.steps);
        for (std::size_t c = 0; c < b.dim; ++c) mean[c] += x[c] / static_cast<double>(N);
        occupancy[b.regime_at(p, b.steps).index()] += 1.0 / static_cast<double>(N);
    }
    j["terminal_state_mean"] = reals(mean);
    j["terminal_regime_frequency"] = reals(occupancy);
    return j;
}

void write_paths_csv(std::ostream& out, const PathBundle& b) {
    out << "path,s_l,regime";
    for (std::size_t c = 0; c < b.dim; ++c) out << ",x_" << c + 1;
    out << '\n';
    for (std::size_t p = 0; p < b.path_count(); ++p) {
        for (std::size_t l = b.node_begin[p]; l < b.node_begin[p + 1]; ++l) {
            out << p << ',' << num(b.time[l]) << ',' << b.regime[l] + 1;
            for (std::size_t c = 0; c < b.dim; ++c) out << ',' << num(b.state[l * b.dim + c]);
            out << '\n';
        }
    }
}

void write_steps_csv(std::ostream& out, const SolveResult& r, std::size_t dim, std::size_t regimes) {
    out << "step,time,path,y";
    for (std::size_t c = 0; c < dim; ++c) out << ",z_" << c + 1;
    for (std::size_t j = 0; j < regimes; ++j) out << ",u_" << j + 1;
    out << ",penalty_mass\n";
    for (std::size_t k = 0; k < r.estimates.size(); ++k) {
        const auto& e = r.estimates[k];
        for (std::size_t p = 0; p < e.y.size(); ++p) {
            out << k << ',' << num(r.steps[k].time) << ',' << p << ',' << num(e.y[p]);
            for (std::size_t c = 0; c < dim; ++c) out << ',' << num(e.z[p * dim + c]);
            for (std::size_t j = 0; j < regimes; ++j) out << ',' << num(e.u[p * regimes + j]);
            out << ',' << num(e.penalty_mass[p]) << '\n';
        }
    }
}

void write_regression_csv(std::ostream& out, const SolveResult& r) {
    out << "step,time,target,stratum,sample_count,gram_condition,residual_mse,ridge,rank_deficient,pooled_fallback\n";
    auto emit = [&](std::size_t k, const std::string& target, const RegressionFit& fit) {
        for (std::size_t s = 0; s < fit.strata.size(); ++s) {
            const auto& st = fit.strata[s];
            out << k << ',' << num(r.steps[k].time) << ',' << target << ',';
            out << (fit.basis.stratify_by_regime ? std::to_string(s + 1) : std::string("pooled")) << ',';
            if (!st) {
                out << "0,,,,,absent\n";
                continue;
            }
            out << st->fit.sample_count << ',' << num(st->fit.gram_condition) << ',' << num(st->fit.residual_mse)
                << ',' << num(st->fit.ridge) << ',' << (st->fit.rank_deficient ? 1 : 0) << ','
                << (st->pooled_fallback ? 1 : 0) << '\n';
        }
    };
    for (std::size_t k = 0; k < r.fits.size(); ++k) {
        const auto& f = r.fits[k];
        emit(k, "y", f.y);
        for (std::size_t c = 0; c < f.z.size(); ++c) emit(k, "z_" + std::to_string(c + 1), f.z[c]);
        for (std::size_t j = 0; j < f.u.size(); ++j) emit(k, "u_" + std::to_string(j + 1), f.u[j]);
    }
}

void write_grid_csv(std::ostream& out, const GridSolution& g, std::size_t time_stride) {
    out << "t,x,regime,value\n";
    const std::size_t stride = std::max<std::size_t>(time_stride, 1);
    for (std::size_t k = 0; k < g.times.size(); ++k) {
        if (k % stride != 0 && k + 1 != g.times.size()) {
            continue;
        }
        for (std::size_t i = 0; i < g.regimes; ++i) {
            for (std::size_t j = 0; j < g.x.size(); ++j) {
                out << num(g.times[k]) << ',' << num(g.x[j]) << ',' << i + 1 << ',' << num(g.at(i, k, j)) << '\n';
            }
        }
    }
}

}  // namespace cvi
