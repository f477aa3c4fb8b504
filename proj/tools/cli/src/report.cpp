#include "pqproj/cli/report.hpp"

#include <charconv>
#include <ctime>

namespace pqproj::cli {

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string shortest(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, end) : "nan";
}

Json optional_point(const std::optional<Vector>& p) { return p ? to_json(*p) : Json(nullptr); }

}  // namespace

std::string tool_version() {
#ifdef PQPROJ_VERSION
    return PQPROJ_VERSION;
#else
    return "unknown";
#endif
}

Json report_header(const std::string& command, const SceneSpec& spec, std::optional<std::uint64_t> seed) {
    Json r;
    r["tool"] = "pqproj";
    r["version"] = tool_version();
    r["command"] = command;
    r["scene"] = Json{{"name", spec.name}, {"digest", scene_digest(spec)}, {"epsilon", spec.epsilon}};
    r["seed"] = seed ? Json(*seed) : Json(nullptr);
    return r;
}

void finish_report(Json& report, int exit_code, std::chrono::steady_clock::time_point started) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report["exit_code"] = exit_code;
    report["wall_clock"] = Json{{"timestamp", utc_timestamp()}, {"elapsed_seconds", elapsed}};
}

Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Json to_json(const ValidationResult& r) {
    Json j;
    j["ok"] = r.ok();
    j["input_error"] = r.has_input_error();
    j["samples"] = r.options.samples;
    j["seed"] = r.options.seed;
    Json conds = Json::array();
    for (const auto& c : r.conditions)
        conds.push_back(Json{{"check", c.check}, {"max_relative", c.max_relative}, {"tolerance", c.tolerance},
                             {"passed", c.passed}});
    j["conditions"] = conds;
    Json viol = Json::array();
    for (const auto& v : r.violations)
        viol.push_back(Json{{"check", v.check}, {"message", v.message}, {"input_error", v.input_error},
                            {"worst_point", optional_point(v.worst_point)}, {"worst_value", v.worst_value}});
    j["violations"] = viol;
    return j;
}

Json to_json(const ResidualReport& r) {
    Json j;
    j["equation"] = std::string(to_string(r.equation));
    j["samples"] = r.samples.size();
    j["max_relative"] = r.max_relative;
    j["mean_relative"] = r.mean_relative;
    j["tolerance"] = r.tolerance;
    j["passed"] = r.passed;
    if (!r.samples.empty()) {
        const auto& w = r.samples[r.worst];
        j["worst"] = Json{{"point", to_json(w.point)}, {"residual", w.residual}, {"scale", w.scale}};
    }
    return j;
}

Json to_json(const EigenvectorLemmaReport& r) {
    Json j;
    j["points_total"] = r.points_total;
    j["points_checked"] = r.points_checked;
    j["vacuous"] = r.vacuous;
    j["max_orthogonality"] = r.max_orthogonality;
    j["orthogonality_failures"] = r.orthogonality_failures;
    j["max_eigenspace"] = r.max_eigenspace;
    j["eigenspace_failures"] = r.eigenspace_failures;
    if (r.options.covariant_identity) {
        j["max_covariant_defect"] = r.max_covariant_defect;
        j["covariant_failures"] = r.covariant_failures;
    }
    j["thresholds"] = Json{{"orthogonality", r.options.orthogonality_tol},
                           {"eigenspace", r.options.eigenspace_tol},
                           {"simple_gap", r.options.simple_gap},
                           {"covariant", r.options.covariant_identity ? Json(r.options.covariant_tol) : Json(nullptr)}};
    j["passed"] = r.passed;
    return j;
}

Json to_json(const DimensionLemmaReport& r) {
    Json j;
    j["points_total"] = r.points_total;
    j["points_used"] = r.points_used;
    j["points_skipped"] = r.points_skipped;
    j["max_distinct_eigenvalues"] = r.max_distinct_eigenvalues;
    j["expected_multiplicity"] = r.expected_multiplicity;
    Json branches = Json::array();
    for (const auto& b : r.branches)
        branches.push_back(Json{{"index", b.index},
                                {"min", b.min},
                                {"max", b.max},
                                {"variation", b.variation},
                                {"constant", b.constant},
                                {"multiplicity_min", b.multiplicity_min},
                                {"multiplicity_max", b.multiplicity_max},
                                {"multiplicity_failures", b.multiplicity_failures}});
    j["branches"] = branches;
    if (r.eigenspace_checks) {
        j["odd_eigenspaces"] = r.odd_eigenspaces;
        j["rank_failures"] = r.rank_failures;
        j["min_rank_ratio"] = r.min_rank_ratio;
    }
    j["thresholds"] = Json{{"cluster_rel", r.options.spectrum.cluster_rel_tol},
                           {"crossing_rel", r.options.crossing_rel_tol},
                           {"constant_rel", r.options.const_rel_tol},
                           {"rank_rel", r.options.rank_rel_tol},
                           {"constant_abs", r.const_tolerance},
                           {"cluster_abs", r.cluster_tolerance}};
    j["vacuous"] = r.vacuous;
    j["passed"] = r.passed;
    return j;
}

Json to_json(const Classification& c) {
    Json j;
    j["verdict"] = c.label();
    Json ev = Json::array();
    for (const auto& e : c.evidence)
        ev.push_back(Json{{"name", e.name}, {"passed", e.passed}, {"value", e.value}, {"threshold", e.threshold},
                          {"detail", e.detail}});
    j["evidence"] = ev;
    return j;
}

Json to_json(const ConservationReport& r) {
    Json j;
    j["duration"] = r.duration;
    j["samples"] = r.energies.size();
    j["energy_relative_drift"] = r.energy_relative_drift;
    Json series = Json::array();
    for (const auto& s : r.series) {
        Json e{{"t", s.spec.t}, {"regularized", s.spec.regularized}};
        if (s.spec.regularized) {
            e["k"] = s.spec.k;
            e["mode"] = s.spec.mode == ExponentMode::diagnostic ? "diagnostic" : "normal";
            e["side_changes"] = s.side_changes;
        }
        e["initial_value"] = s.values.empty() ? Json(nullptr) : Json(s.values.front());
        e["max_drift"] = s.max_drift;
        e["scale"] = s.scale;
        e["relative_drift"] = s.relative_drift;
        e["budget"] = s.budget;
        e["passed"] = s.passed;
        series.push_back(std::move(e));
    }
    j["integrals"] = series;
    j["passed"] = r.passed;
    return j;
}

Json to_json(const ApproachProbe& p) {
    Json j;
    j["crossing_time"] = p.crossing_time;
    j["far_value"] = p.far_value;
    Json rows = Json::array();
    for (std::size_t i = 0; i < p.values.size(); ++i)
        rows.push_back(Json{{"time_to_crossing", p.time_to_crossing[i]}, {"rho_gap", p.rho_gap[i]},
                            {"value", p.values[i]}});
    j["approach"] = rows;
    return j;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& column_names,
                           const std::vector<std::vector<double>>& columns) {
    std::string out = "t";
    const int m = traj.samples.empty() ? 0 : static_cast<int>(traj.samples.front().state.x.size());
    for (int i = 1; i <= m; ++i) out += ",x" + std::to_string(i);
    for (int i = 1; i <= m; ++i) out += ",v" + std::to_string(i);
    for (const auto& n : column_names) out += "," + n;
    out += "\n";
    for (std::size_t n = 0; n < traj.samples.size(); ++n) {
        const auto& s = traj.samples[n];
        out += shortest(s.time);
        for (int i = 0; i < m; ++i) out += "," + shortest(s.state.x[i]);
        for (int i = 0; i < m; ++i) out += "," + shortest(s.state.v[i]);
        for (const auto& c : columns) out += "," + shortest(c[n]);
        out += "\n";
    }
    return out;
}

}  // namespace pqproj::cli
