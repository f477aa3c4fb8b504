#include "pqproj/cli/run.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "pqproj/catalog.hpp"
#include "pqproj/cli/report.hpp"
#include "pqproj/sampling.hpp"

namespace pqproj::cli {

namespace {

using Clock = std::chrono::steady_clock;

/// Bad flag values found after parsing; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string scene;
    int samples = 1000;
    std::uint64_t seed = 42;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, bool sampling = true) {
    sub->add_option("scene", c.scene, "Scene file (JSON)")->required();
    if (sampling) {
        sub->add_option("--samples", c.samples, "Number of stratified sample points")->capture_default_str();
        sub->add_option("--seed", c.seed, "Sampling seed")->capture_default_str();
    }
    sub->add_option("--out", c.out, "Write the JSON report to this file");
}

void emit(const Json& report, const std::string& path, std::ostream& out) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        out << text;
        return;
    }
    write_file_atomic(path, text);
    out << report.value("command", "") << ": exit " << report.value("exit_code", -1) << ", report written to " << path
        << "\n";
}

std::string joined(const std::vector<Violation>& vs) {
    std::string s;
    for (const auto& v : vs) s += "  " + v.check + ": " + v.message + "\n";
    return s;
}

/// Reads and validates the scene. Returns the exit code when the command cannot proceed.
struct Loaded {
    SceneSpec spec;
    ValidationResult validation;
};

std::variant<Loaded, int> load(const std::string& command, const Common& c, std::ostream& out, std::ostream& err,
                               Clock::time_point started) {
    Loaded l;
    l.spec = read_scene_file(c.scene);
    ValidationOptions vo;
    vo.samples = c.samples;
    vo.seed = c.seed;
    l.validation = validate_scene(l.spec, vo);
    if (l.validation.has_input_error()) {
        err << "invalid scene '" << c.scene << "':\n" << joined(l.validation.violations);
        return static_cast<int>(kInvalidInput);
    }
    if (!l.validation.ok()) {
        Json r = report_header(command, l.spec, c.seed);
        r["validation"] = to_json(l.validation);
        finish_report(r, kCheckFailed, started);
        emit(r, c.out, out);
        err << "scene '" << c.scene << "' fails the algebraic conditions:\n" << joined(l.validation.violations);
        return static_cast<int>(kCheckFailed);
    }
    return l;
}

GeodesicState initial_state(const std::vector<double>& x0, const std::vector<double>& v0, int m) {
    if (static_cast<int>(x0.size()) != m || static_cast<int>(v0.size()) != m)
        throw UsageError("--x0 and --v0 need " + std::to_string(m) + " components each");
    return {Eigen::Map<const Vector>(x0.data(), m), Eigen::Map<const Vector>(v0.data(), m)};
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* b = s.data();
    const auto* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw UsageError("not a number: '" + std::string(s) + "'");
    return v;
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw UsageError("--pairs entries look like t:s, got '" + item + "'");
        out.emplace_back(parse_double(std::string_view(item).substr(0, colon)),
                         parse_double(std::string_view(item).substr(colon + 1)));
    }
    if (out.empty()) throw UsageError("--pairs is empty");
    return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Common& c, std::ostream& out, std::ostream& err) {
    const auto started = Clock::now();
    const SceneSpec spec = read_scene_file(c.scene);
    ValidationOptions vo;
    vo.samples = c.samples;
    vo.seed = c.seed;
    const ValidationResult vr = validate_scene(spec, vo);
    if (vr.has_input_error()) {
        err << "invalid scene '" << c.scene << "':\n" << joined(vr.violations);
        return kInvalidInput;
    }
    const int code = vr.ok() ? kPassed : kCheckFailed;
    Json r = report_header("validate", spec, c.seed);
    r["thresholds"] = Json{{"relative", vo.tolerance}, {"min_eigenvalue", vo.min_eigenvalue}};
    r["validation"] = to_json(vr);
    finish_report(r, code, started);
    emit(r, c.out, out);
    if (code != kPassed) err << joined(vr.violations);
    return code;
}

int cmd_residuals(const Common& c, const std::string& eq_name, double tol, std::ostream& out, std::ostream& err) {
    const auto started = Clock::now();
    const auto eq = parse_equation(eq_name);
    if (!eq) throw UsageError("unknown equation '" + eq_name + "'");
    auto loaded = load("residuals", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    const ResidualReport rep = residual_report(*l.validation.scene, *eq, SampleOptions{c.samples, c.seed}, tol);
    const int code = rep.passed ? kPassed : kCheckFailed;
    Json r = report_header("residuals", l.spec, c.seed);
    r["thresholds"] = Json{{"max_relative", tol}};
    r["results"] = to_json(rep);
    r["passed"] = rep.passed;
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

int cmd_spectrum(const Common& c, int grid, bool covariant, std::ostream& out, std::ostream& err) {
    const auto started = Clock::now();
    auto loaded = load("spectrum", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    const PQScene& scene = *l.validation.scene;
    const int per_axis = grid > 0 ? grid : default_grid(scene.dimension(), c.samples);

    const DimensionLemmaReport dim = lemma_dim_check(scene, grid_path(scene.chart(), per_axis));
    Json r = report_header("spectrum", l.spec, c.seed);
    r["grid"] = per_axis;
    r["multiplicity_lemma"] = to_json(dim);
    bool ok = dim.passed;
    EigenvectorLemmaOptions eo;
    eo.covariant_identity = covariant;
    try {
        const auto rep = lemma_eigenvectors_check(scene, stratified_samples(scene.chart(), c.samples, c.seed), eo);
        r["eigenvector_lemma"] = to_json(rep);
        ok = ok && rep.passed;
    } catch (const ClusteredEigenvalueError& e) {
        r["eigenvector_lemma"] = Json{{"skipped", true}, {"reason", e.what()}};
    }
    const int code = ok ? kPassed : kCheckFailed;
    r["passed"] = ok;
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

struct FlowArgs {
    std::vector<double> x0, v0;
    double T = 1.0;
    double h = 1e-3;
    std::string csv;
};

void add_flow(CLI::App* sub, FlowArgs& f) {
    sub->add_option("--x0", f.x0, "Initial point, comma separated")->delimiter(',')->required();
    sub->add_option("--v0", f.v0, "Initial velocity, comma separated")->delimiter(',')->required();
    sub->add_option("--T", f.T, "Duration")->capture_default_str();
    sub->add_option("--h", f.h, "RK4 step")->capture_default_str();
    sub->add_option("--csv", f.csv, "Write the trajectory as CSV");
}

constexpr double kEnergyBudgetPerUnitTime = 1e-8;

int cmd_geodesic(const Common& c, const FlowArgs& f, const std::vector<double>& ts, std::ostream& out,
                 std::ostream& err) {
    const auto started = Clock::now();
    auto loaded = load("geodesic", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    const PQScene& scene = *l.validation.scene;
    const Trajectory traj =
        integrate_geodesic(scene.g(), scene.chart(), initial_state(f.x0, f.v0, scene.dimension()), f.T, f.h);

    std::vector<double> energy;
    std::vector<std::vector<double>> columns(ts.size());
    for (const auto& s : traj.samples) {
        const Matrix G = scene.g().value_at(s.state.x);
        energy.push_back(s.state.v.dot(G * s.state.v));
        if (!ts.empty()) {
            const Matrix A = compute_A(G, scene.gbar().value_at(s.state.x), scene.epsilon());
            for (std::size_t j = 0; j < ts.size(); ++j)
                columns[j].push_back(quadratic_integral(G, A, scene.epsilon(), ts[j], s.state.v).value);
        }
    }
    double drift = 0.0;
    for (double e : energy) drift = std::max(drift, std::abs(e - energy.front()));
    const double rel = drift / std::max(std::abs(energy.front()), std::numeric_limits<double>::epsilon());
    const double budget = kEnergyBudgetPerUnitTime * std::max(traj.duration(), 0.0);
    const bool ok = rel <= budget;

    std::vector<std::string> names;
    Json cols = Json::array();
    for (std::size_t j = 0; j < ts.size(); ++j) {
        names.push_back("F_t" + std::to_string(j + 1));
        cols.push_back(Json{{"column", names.back()}, {"t", ts[j]}});
    }
    if (!f.csv.empty()) write_file_atomic(f.csv, trajectory_csv(traj, names, columns));

    Json r = report_header("geodesic", l.spec, std::nullopt);
    r["thresholds"] = Json{{"energy_drift_per_unit_time", kEnergyBudgetPerUnitTime}};
    r["results"] = Json{{"step", f.h},
                        {"requested_duration", f.T},
                        {"duration", traj.duration()},
                        {"samples", traj.samples.size()},
                        {"termination", traj.termination == Termination::left_domain ? "left_domain" : "time_elapsed"},
                        {"final_point", to_json(traj.samples.back().state.x)},
                        {"energy_relative_drift", rel},
                        {"energy_budget", budget},
                        {"csv_columns", cols}};
    r["passed"] = ok;
    const int code = ok ? kPassed : kCheckFailed;
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

int cmd_integrals(const Common& c, const FlowArgs& f, const std::vector<double>& ts, const std::vector<double>& reg,
                  bool diagnostic, bool probe, std::ostream& out, std::ostream& err) {
    const auto started = Clock::now();
    if (!reg.empty() && reg.size() != 2) throw UsageError("--regularized takes c,k");
    if (ts.empty() && reg.empty()) throw UsageError("give at least one --t value or --regularized c,k");
    auto loaded = load("integrals", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    const PQScene& scene = *l.validation.scene;

    std::vector<IntegralSpec> specs;
    for (double t : ts) specs.push_back({t, false, 1, ExponentMode::normal});
    int k = 0;
    if (!reg.empty()) {
        k = static_cast<int>(std::lround(reg[1]));
        if (k < 1 || static_cast<double>(k) != reg[1]) throw UsageError("regularization order k must be a positive integer");
        specs.push_back({reg[0], true, k, diagnostic ? ExponentMode::diagnostic : ExponentMode::normal});
    }
    const Trajectory traj =
        integrate_geodesic(scene.g(), scene.chart(), initial_state(f.x0, f.v0, scene.dimension()), f.T, f.h);
    const DriftOptions drift;
    const ConservationReport rep = conservation_report(scene, traj, specs, drift);

    if (!f.csv.empty()) {
        std::vector<std::string> names;
        std::vector<std::vector<double>> cols;
        for (std::size_t j = 0; j < rep.series.size(); ++j) {
            names.push_back("F_t" + std::to_string(j + 1));
            cols.push_back(rep.series[j].values);
        }
        write_file_atomic(f.csv, trajectory_csv(traj, names, cols));
    }

    Json r = report_header("integrals", l.spec, std::nullopt);
    r["thresholds"] = Json{{"drift_per_unit_time", drift.budget_per_unit_time},
                           {"regularized_drift_per_unit_time", drift.regularized_budget_per_unit_time},
                           {"spectrum_proximity", kSpectrumProximity},
                           {"shift_condition_limit", kShiftConditionLimit},
                           {"cluster_separation", kClusterSeparation}};
    r["step"] = f.h;
    r["termination"] = traj.termination == Termination::left_domain ? "left_domain" : "time_elapsed";
    r["results"] = to_json(rep);
    if (probe && !reg.empty()) {
        const auto p = probe_approach(scene, traj, reg[0], k, specs.back().mode);
        r["probe"] = p ? to_json(*p) : Json(nullptr);
    }
    r["passed"] = rep.passed;
    const int code = rep.passed ? kPassed : kCheckFailed;
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

int cmd_brackets(const Common& c, const std::string& pairs_text, int phase_samples, double tol, std::ostream& out,
                 std::ostream& err) {
    const auto started = Clock::now();
    const auto pairs = parse_pairs(pairs_text);
    if (phase_samples < 1) throw UsageError("--phase-samples must be positive");
    auto loaded = load("brackets", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    const PQScene& scene = *l.validation.scene;
    const int m = scene.dimension();

    const auto xs = stratified_samples(scene.chart(), phase_samples, c.seed);
    UniformSource momenta(c.seed + 1);
    std::vector<Vector> ps;
    for (int n = 0; n < phase_samples; ++n) {
        Vector p(m);
        for (int i = 0; i < m; ++i) p[i] = momenta.next(-1.0, 1.0);
        ps.push_back(p);
    }

    bool ok = true;
    Json results = Json::array();
    const BracketOptions bo;
    for (const auto& [t, s] : pairs) {
        double worst = 0.0;
        double worst_abs = 0.0;
        for (int n = 0; n < phase_samples; ++n) {
            const BracketValue b = poisson_bracket_at(scene, t, s, xs[static_cast<std::size_t>(n)],
                                                      ps[static_cast<std::size_t>(n)], bo);
            worst = std::max(worst, b.relative());
            worst_abs = std::max(worst_abs, std::abs(b.value));
        }
        const bool pass = worst <= tol;
        ok = ok && pass;
        results.push_back(Json{{"t", t}, {"s", s}, {"max_relative", worst}, {"max_abs", worst_abs}, {"passed", pass}});
    }
    Json r = report_header("brackets", l.spec, c.seed);
    r["thresholds"] = Json{{"max_relative", tol}, {"fd_rel_step", bo.fd_rel_step}, {"separation", bo.separation}};
    r["phase_samples"] = phase_samples;
    r["results"] = results;
    r["passed"] = ok;
    const int code = ok ? kPassed : kCheckFailed;
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

int cmd_classify(const Common& c, int grid, std::ostream& out, std::ostream& err) {
    const auto started = Clock::now();
    auto loaded = load("classify", c, out, err, started);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& l = std::get<Loaded>(loaded);
    ClassifyOptions co;
    co.sampling = {c.samples, c.seed};
    co.grid = grid;
    const Classification cl = classify_pair(*l.validation.scene, co);
    const int code = cl.verdict == Verdict::inconsistent ? kCheckFailed : kPassed;
    Json r = report_header("classify", l.spec, c.seed);
    r["thresholds"] = Json{{"residual", co.residual_tol},
                           {"affine", co.affine_tol},
                           {"p_lambda", co.p_lambda_tol},
                           {"epsilon_integer", co.epsilon_integer_tol},
                           {"constant_branch_rel", co.dimension.const_rel_tol},
                           {"crossing_rel", co.dimension.crossing_rel_tol},
                           {"rank_rel", co.dimension.rank_rel_tol}};
    r["results"] = to_json(cl);
    r["verdict"] = cl.label();
    finish_report(r, code, started);
    emit(r, c.out, out);
    return code;
}

struct CatalogArgs {
    std::string name;
    bool list = false;
    std::string out;
    int m = 2;
    double c = 4.0;
    std::string X = "x+3";
    std::string Y = "y";
    std::vector<double> lo, hi;
    std::vector<double> C{1, 0, 0, 0, 2, 0, 0, 0, 3};
    double lambda = 2.0;
    int samples = 1000;
    std::uint64_t seed = 42;
};

const std::vector<std::string> kCatalogNames{"affine", "dini", "sphere", "cp1", "dini_corrupted", "cp1_even_eps",
                                             "eps_one"};

int cmd_catalog(const CatalogArgs& a, std::ostream& out, std::ostream& err) {
    if (a.list) {
        for (const auto& n : kCatalogNames) out << n << "\n";
        return kPassed;
    }
    if (a.name.empty()) throw UsageError("catalog needs an entry name (see --list)");
    if (a.out.empty()) throw UsageError("catalog needs --out (use - for standard output)");
    if (std::find(kCatalogNames.begin(), kCatalogNames.end(), a.name) == kCatalogNames.end())
        throw UsageError("unknown catalog entry '" + a.name + "'");
    const bool has_box = !a.lo.empty() || !a.hi.empty();
    const Box box{a.lo, a.hi};
    GateOptions gate;
    gate.sampling = {a.samples, a.seed};

    SceneSpec spec;
    try {
        if (a.name == "affine") {
            spec = make_affine_pair(a.m, a.c, gate).scene.spec();
        } else if (a.name == "dini") {
            spec = (has_box ? make_dini_pair(a.X, a.Y, box, gate) : make_dini_pair(a.X, a.Y, Box{{0, 1}, {1, 2}}, gate))
                       .scene.spec();
        } else if (a.name == "sphere") {
            if (a.C.size() != 9) throw UsageError("--C takes 9 numbers (row major)");
            const Matrix C = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(a.C.data());
            spec = (has_box ? make_sphere_projective_pair(C, box, gate) : make_sphere_projective_pair(C, gate))
                       .scene.spec();
        } else if (a.name == "cp1") {
            spec = (has_box ? make_cp1_hprojective_pair(a.lambda, box, gate) : make_cp1_hprojective_pair(a.lambda, gate))
                       .scene.spec();
        } else if (a.name == "eps_one") {
            spec = excluded_epsilon_scene();
        } else {
            for (const auto& n : negative_catalog())
                if (n.name == a.name) spec = n.spec;
        }
    } catch (const GateError& e) {
        err << e.what() << "\n";
        return kCheckFailed;
    }
    const std::string text = serialize_scene(spec);
    if (a.out == "-") out << text;
    else write_file_atomic(a.out, text);
    return kPassed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pqproj: numerical checks for pairs of metrics with a (P, Q, eps) structure", "pqproj"};
    // -h is taken by the step-size flag of the flow subcommands.
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());

    Common common;
    std::string eq = "main";
    double tol = kDefaultResidualTolerance;
    int grid = 0;
    bool covariant = false;
    FlowArgs flow;
    std::vector<double> ts, reg;
    bool diagnostic = false, probe = false;
    std::string pairs;
    int phase_samples = 100;
    double bracket_tol = 1e-5;
    CatalogArgs cat;

    auto* validate = app.add_subcommand("validate", "Check the algebraic conditions on P, Q, eps and both metrics");
    add_common(validate, common);

    auto* residuals = app.add_subcommand("residuals", "Residual of a defining equation at sampled points");
    add_common(residuals, common);
    residuals->add_option("--eq", eq, "main | pqproj | projective | hprojective | conditions")->capture_default_str();
    residuals->add_option("--tol", tol, "Pass threshold on the max relative residual")->capture_default_str();

    auto* spectrum = app.add_subcommand("spectrum", "Eigenvalue branches and the multiplicity and gradient lemmas");
    add_common(spectrum, common);
    spectrum->add_option("--grid", grid, "Cells per axis of the tracing grid (default: about --samples points)");
    spectrum->add_flag("--covariant", covariant, "Also check the covariant eigenvector identity");

    auto* geodesic = app.add_subcommand("geodesic", "Integrate a geodesic with RK4");
    add_common(geodesic, common, false);
    add_flow(geodesic, flow);
    geodesic->add_option("--t", ts, "F_t values to record as CSV columns")->delimiter(',');

    auto* integrals = app.add_subcommand("integrals", "Conservation of F_t along a geodesic");
    add_common(integrals, common, false);
    add_flow(integrals, flow);
    integrals->add_option("--t", ts, "Parameters t, comma separated")->delimiter(',');
    integrals->add_option("--regularized", reg, "Regularized integral c,k")->delimiter(',');
    integrals->add_flag("--diagnostic", diagnostic, "Evaluate the regularized integral for any exponent");
    integrals->add_flag("--probe", probe, "Sample the regularized integral approaching its hypersurface");

    auto* brackets = app.add_subcommand("brackets", "Poisson brackets {F_t, F_s} at random phase points");
    add_common(brackets, common);
    brackets->add_option("--pairs", pairs, "Pairs t1:s1,t2:s2,...")->required();
    brackets->add_option("--phase-samples", phase_samples, "Number of phase points")->capture_default_str();
    brackets->add_option("--tol", bracket_tol, "Pass threshold relative to the gradient scale")->capture_default_str();

    auto* classify = app.add_subcommand("classify", "Classify the pair");
    add_common(classify, common);
    classify->add_option("--grid", grid, "Cells per axis of the tracing grid");

    auto* catalog = app.add_subcommand("catalog", "Emit a constructed scene");
    catalog->add_option("name", cat.name, "Entry name");
    catalog->add_flag("--list", cat.list, "List entry names");
    catalog->add_option("--out", cat.out, "Scene file to write, - for standard output");
    catalog->add_option("--m", cat.m, "affine: dimension")->capture_default_str();
    catalog->add_option("--c", cat.c, "affine: gbar = c g")->capture_default_str();
    catalog->add_option("--X", cat.X, "dini: X(x)")->capture_default_str();
    catalog->add_option("--Y", cat.Y, "dini: Y(y)")->capture_default_str();
    catalog->add_option("--lo", cat.lo, "Lower box corner")->delimiter(',');
    catalog->add_option("--hi", cat.hi, "Upper box corner")->delimiter(',');
    catalog->add_option("--C", cat.C, "sphere: 3x3 form, row major")->delimiter(',');
    catalog->add_option("--lambda", cat.lambda, "cp1: scaling factor")->capture_default_str();
    catalog->add_option("--samples", cat.samples, "Gate samples")->capture_default_str();
    catalog->add_option("--seed", cat.seed, "Gate seed")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kPassed;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kInvalidInput;
    }

    try {
        if (*validate) return cmd_validate(common, out, err);
        if (*residuals) return cmd_residuals(common, eq, tol, out, err);
        if (*spectrum) return cmd_spectrum(common, grid, covariant, out, err);
        if (*geodesic) return cmd_geodesic(common, flow, ts, out, err);
        if (*integrals) return cmd_integrals(common, flow, ts, reg, diagnostic, probe, out, err);
        if (*brackets) return cmd_brackets(common, pairs, phase_samples, bracket_tol, out, err);
        if (*classify) return cmd_classify(common, grid, out, err);
        if (*catalog) return cmd_catalog(cat, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInvalidInput;
    }
    return kInvalidInput;
}

}  // namespace pqproj::cli
