#include "pqproj/pq_struct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pqproj/error.hpp"
#include "pqproj/sampling.hpp"

namespace pqproj {

struct SceneBuilder {
    static PQScene make(SceneSpec spec, ChartDomain chart, MetricField g, MetricField gbar, TensorField11 P,
                        TensorField11 Q) {
        return PQScene(std::move(spec), std::move(chart), std::move(g), std::move(gbar), std::move(P), std::move(Q));
    }
};

namespace {

constexpr double kEpsFloor = std::numeric_limits<double>::epsilon();

void require_admissible_epsilon(double epsilon) {
    if (epsilon == 1.0) throw std::invalid_argument("epsilon must differ from 1");
}

std::string field_label(const char* field, std::size_t i, std::size_t j) {
    return std::string(field) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

std::vector<std::vector<ScalarExpr>> parse_matrix(const ExprMatrix& text, const char* field, int m,
                                                  const std::vector<std::string>& coords,
                                                  std::vector<Violation>& out) {
    std::vector<std::vector<ScalarExpr>> exprs;
    if (static_cast<int>(text.size()) != m) {
        out.push_back({std::string(field) + "_shape",
                       std::string(field) + " must have " + std::to_string(m) + " rows", true, {}, 0.0});
        return exprs;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (static_cast<int>(text[i].size()) != m) {
            out.push_back({std::string(field) + "_shape",
                           std::string(field) + " row " + std::to_string(i) + " must have " + std::to_string(m) +
                               " entries",
                           true, {}, 0.0});
            return {};
        }
        std::vector<ScalarExpr> row;
        for (std::size_t j = 0; j < text[i].size(); ++j) {
            try {
                row.push_back(parse_expr(text[i][j], coords));
            } catch (const ParseError& e) {
                out.push_back({"parse", field_label(field, i, j) + ": " + e.what(), true, {}, 0.0});
                return {};
            }
        }
        exprs.push_back(std::move(row));
    }
    return exprs;
}

struct Defect {
    double residual = 0.0;
    double scale = 0.0;
    double relative() const { return residual / std::max(scale, kEpsFloor); }
};

struct NamedDefect {
    const char* name;
    Defect defect;
};

// Algebraic conditions on P, Q and their commutation with A at one point.
std::vector<NamedDefect> condition_defects(const Matrix& G, const Matrix& Gbar, const Matrix& A, const Matrix& P,
                                           const Matrix& Q, double epsilon) {
    const auto skew = [](const Matrix& metric, const Matrix& T) {
        const Matrix gt = metric * T;
        return Defect{frobenius(gt + gt.transpose()), frobenius(gt)};
    };
    const auto commutator = [](const Matrix& a, const Matrix& b) {
        return Defect{frobenius(a * b - b * a), std::max(frobenius(a * b), frobenius(b * a))};
    };
    const Matrix id = Matrix::Identity(P.rows(), P.cols());
    const Matrix pq = P * Q;
    return {
        {"skew_g_P", skew(G, P)},
        {"skew_g_Q", skew(G, Q)},
        {"skew_gbar_P", skew(Gbar, P)},
        {"skew_gbar_Q", skew(Gbar, Q)},
        {"PQ_eps_identity", Defect{frobenius(pq - epsilon * id), std::max(frobenius(pq), std::abs(epsilon) * frobenius(id))}},
        {"commute_A_P", commutator(A, P)},
        {"commute_A_Q", commutator(A, Q)},
    };
}

// Shared by the full and projective forms: (nabla_X A)Y against the right-hand side.
ResidualSample pde_like_residual(const PairPoint& p, bool with_pq) {
    const int m = p.A.rows();
    const Matrix& G = p.g.value;
    const Matrix& A = p.A.value;
    const Vector& L = p.lambda;
    const Vector GL = G * L;
    const Vector PL = p.P * L;
    const Vector GPL = G * PL;
    const Matrix GQ = G * p.Q;

    ResidualSample out;
    out.point = p.x;
    for (int i = 0; i < m; ++i) {
        const Matrix gi = p.gamma.slice(i);
        const Matrix dA = p.A.partials[static_cast<std::size_t>(i)];
        const Matrix left_turn = gi * A;
        const Matrix right_turn = A * gi;
        const Matrix nabla = dA + left_turn - right_turn;
        const Vector ei = Vector::Unit(m, i);
        const Vector Qei = p.Q.col(i);
        for (int k = 0; k < m; ++k) {
            const Vector lhs = nabla.col(k);
            const Vector t1 = G(k, i) * L;
            const Vector t2 = GL[k] * ei;
            Vector rhs = t1 + t2;
            double scale = std::max({dA.col(k).norm(), left_turn.col(k).norm(), right_turn.col(k).norm(), t1.norm(),
                                     t2.norm()});
            if (with_pq) {
                const Vector t3 = GQ(k, i) * PL;
                const Vector t4 = GPL[k] * Qei;
                rhs += t3 + t4;
                scale = std::max({scale, t3.norm(), t4.norm()});
            }
            out.residual = std::max(out.residual, (lhs - rhs).norm());
            out.scale = std::max(out.scale, scale);
        }
    }
    return out;
}

ResidualSample connection_residual(const PairPoint& p, const Matrix& P, const Matrix& Q) {
    const int m = p.A.rows();
    const Vector phi = phi_from_lambda(p.g.value, p.A.value, p.lambda);
    // phi_p[i] = Phi(P e_i)
    const Vector phi_p = P.transpose() * phi;
    ResidualSample out;
    out.point = p.x;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Vector gb(m), ga(m);
            for (int k = 0; k < m; ++k) {
                gb[k] = p.gamma_bar(k, i, j);
                ga[k] = p.gamma(k, i, j);
            }
            const Vector t1 = phi[i] * Vector::Unit(m, j);
            const Vector t2 = phi[j] * Vector::Unit(m, i);
            const Vector t3 = phi_p[i] * Q.col(j);
            const Vector t4 = phi_p[j] * Q.col(i);
            const Vector defect = (gb - ga) - (t1 + t2 - t3 - t4);
            out.residual = std::max(out.residual, defect.norm());
            out.scale = std::max({out.scale, gb.norm(), ga.norm(), t1.norm(), t2.norm(), t3.norm(), t4.norm()});
        }
    }
    return out;
}

}  // namespace

double frobenius(const Matrix& m) { return m.size() == 0 ? 0.0 : m.norm(); }

ExprMatrix zero_expr_matrix(int m) {
    return ExprMatrix(static_cast<std::size_t>(m), std::vector<std::string>(static_cast<std::size_t>(m), "0"));
}

bool ValidationResult::has_input_error() const {
    return std::any_of(violations.begin(), violations.end(), [](const Violation& v) { return v.input_error; });
}

ValidationResult validate_scene(const SceneSpec& spec, const ValidationOptions& options) {
    ValidationResult result;
    result.options = options;
    auto& out = result.violations;
    const int m = spec.dimension();

    std::optional<ChartDomain> chart;
    try {
        if (static_cast<int>(spec.lo.size()) != m || static_cast<int>(spec.hi.size()) != m)
            throw std::invalid_argument("domain bounds do not match the number of coordinates");
        chart.emplace(spec.coords, Eigen::Map<const Vector>(spec.lo.data(), m),
                      Eigen::Map<const Vector>(spec.hi.data(), m));
    } catch (const std::invalid_argument& e) {
        out.push_back({"chart", e.what(), true, {}, 0.0});
        return result;
    }

    if (!std::isfinite(spec.epsilon)) {
        out.push_back({"epsilon_exclusion", "epsilon must be a finite real number", true, {}, spec.epsilon});
    } else if (spec.epsilon == 1.0 || spec.epsilon == static_cast<double>(m + 1)) {
        std::ostringstream msg;
        msg << "epsilon must differ from 1 and m+1 = " << (m + 1) << " (got " << spec.epsilon << ")";
        out.push_back({"epsilon_exclusion", msg.str(), true, {}, spec.epsilon});
    }

    std::vector<std::vector<ScalarExpr>> g_e, gbar_e, p_e, q_e;
    try {
        g_e = parse_matrix(spec.g, "g", m, spec.coords, out);
        gbar_e = parse_matrix(spec.gbar, "gbar", m, spec.coords, out);
        p_e = parse_matrix(spec.P, "P", m, spec.coords, out);
        q_e = parse_matrix(spec.Q, "Q", m, spec.coords, out);
    } catch (const std::invalid_argument& e) {
        out.push_back({"coords", e.what(), true, {}, 0.0});
    }
    if (!out.empty()) return result;

    MetricField g, gbar;
    TensorField11 P, Q;
    try {
        g = MetricField::from_components(g_e);
        gbar = MetricField::from_components(gbar_e);
        P = TensorField11::from_components(p_e);
        Q = TensorField11::from_components(q_e);
    } catch (const std::invalid_argument& e) {
        out.push_back({"metric_symmetry", e.what(), true, {}, 0.0});
        return result;
    }

    struct Worst {
        double value = 0.0;
        Vector point;
    };
    std::vector<std::pair<std::string, Worst>> worst;

    const auto points = stratified_samples(*chart, options.samples, options.seed);
    for (const Vector& x : points) {
        Matrix G, Gbar, Pv, Qv;
        try {
            G = g.value_at(x);
            Gbar = gbar.value_at(x);
            Pv = P.value_at(x);
            Qv = Q.value_at(x);
        } catch (const DomainError& e) {
            out.push_back({"evaluation", e.what(), true, x, 0.0});
            return result;
        }
        const double lg = min_symmetric_eigenvalue(G);
        const double lgb = min_symmetric_eigenvalue(Gbar);
        if (!(lg > options.min_eigenvalue)) {
            out.push_back({"metric_g_positive", "g is not positive definite at a sample point", true, x, lg});
            return result;
        }
        if (!(lgb > options.min_eigenvalue)) {
            out.push_back({"metric_gbar_positive", "gbar is not positive definite at a sample point", true, x, lgb});
            return result;
        }
        const Matrix A = compute_A(G, Gbar, spec.epsilon);
        for (const auto& [name, d] : condition_defects(G, Gbar, A, Pv, Qv, spec.epsilon)) {
            auto it = std::find_if(worst.begin(), worst.end(), [&](const auto& w) { return w.first == name; });
            if (it == worst.end()) {
                worst.emplace_back(name, Worst{d.relative(), x});
            } else if (d.relative() > it->second.value) {
                it->second = Worst{d.relative(), x};
            }
        }
    }

    for (const auto& [name, w] : worst) {
        const bool passed = w.value <= options.tolerance;
        result.conditions.push_back({name, w.value, options.tolerance, passed});
        if (!passed) {
            std::ostringstream msg;
            msg << name << ": max relative defect " << w.value << " exceeds " << options.tolerance;
            out.push_back({name, msg.str(), false, w.point, w.value});
        }
    }
    if (out.empty())
        result.scene.emplace(SceneBuilder::make(spec, *chart, std::move(g), std::move(gbar), std::move(P), std::move(Q)));
    return result;
}

PQScene require_valid_scene(const SceneSpec& spec, const ValidationOptions& options) {
    ValidationResult r = validate_scene(spec, options);
    if (!r.ok()) {
        std::string msg = "scene '" + spec.name + "' failed validation:";
        for (const auto& v : r.violations) msg += "\n  " + v.check + ": " + v.message;
        throw std::invalid_argument(msg);
    }
    return std::move(*r.scene);
}

Matrix compute_A(const Matrix& g, const Matrix& gbar, double epsilon) {
    const auto m = static_cast<double>(g.rows());
    Eigen::LLT<Matrix> llt(gbar);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("compute_A: gbar is not positive definite");
    const double ratio = gbar.determinant() / g.determinant();
    if (!(ratio > 0.0)) throw SingularMatrixError("compute_A: metric determinants must be positive");
    return std::pow(ratio, 1.0 / (m + 1.0 - epsilon)) * llt.solve(g);
}

MatrixJet compute_A(const MatrixJet& g, const MatrixJet& gbar, double epsilon) {
    const auto m = static_cast<double>(g.rows());
    const Jet det_g = determinant(g);
    const Jet det_gbar = determinant(gbar);
    Jet ratio;
    ratio.value = det_gbar.value / det_g.value;
    ratio.gradient = (det_gbar.gradient - ratio.value * det_g.gradient) / det_g.value;
    const Jet factor = power(ratio, 1.0 / (m + 1.0 - epsilon));
    return factor * (inverse(gbar) * g);
}

Matrix compute_A_at(const PQScene& scene, const Vector& x) {
    return compute_A(scene.g().value_at(x), scene.gbar().value_at(x), scene.epsilon());
}

Vector lambda_from(const Matrix& g, const MatrixJet& A, double epsilon) {
    require_admissible_epsilon(epsilon);
    return gradient(g, trace(A).gradient) / (2.0 * (1.0 - epsilon));
}

Vector lambda_at(const PQScene& scene, const Vector& x) {
    const MatrixJet g = scene.g().jet_at(x);
    const MatrixJet A = compute_A(g, scene.gbar().jet_at(x), scene.epsilon());
    return lambda_from(g.value, A, scene.epsilon());
}

Vector phi_from_lambda(const Matrix& g, const Matrix& A, const Vector& lambda) {
    Eigen::PartialPivLU<Matrix> lu(A);
    if (!(lu.rcond() > 1e-14)) throw SingularMatrixError("phi_from_lambda: A is singular");
    return -g * lu.solve(lambda);
}

Vector phi_from_lambda_at(const PQScene& scene, const Vector& x) {
    const PairPoint p = evaluate_pair(scene, x);
    return phi_from_lambda(p.g.value, p.A.value, p.lambda);
}

PairPoint evaluate_pair(const PQScene& scene, const Vector& x) {
    PairPoint p;
    p.x = x;
    p.epsilon = scene.epsilon();
    p.g = scene.g().jet_at(x);
    p.gbar = scene.gbar().jet_at(x);
    p.A = compute_A(p.g, p.gbar, p.epsilon);
    p.P = scene.P().value_at(x);
    p.Q = scene.Q().value_at(x);
    p.gamma = christoffel(p.g);
    p.gamma_bar = christoffel(p.gbar);
    p.lambda = lambda_from(p.g.value, p.A, p.epsilon);
    return p;
}

std::string_view to_string(Equation eq) {
    switch (eq) {
        case Equation::conditions: return "conditions";
        case Equation::pqproj: return "pqproj";
        case Equation::main: return "main";
        case Equation::projective: return "projective";
        case Equation::hprojective: return "hprojective";
    }
    return "?";
}

std::optional<Equation> parse_equation(std::string_view name) {
    for (Equation e : {Equation::conditions, Equation::pqproj, Equation::main, Equation::projective,
                       Equation::hprojective})
        if (to_string(e) == name) return e;
    return std::nullopt;
}

double ResidualSample::relative() const { return residual / std::max(scale, kEpsFloor); }

ResidualSample pde_residual(const PairPoint& p) { return pde_like_residual(p, true); }

ResidualSample projective_residual(const PairPoint& p) { return pde_like_residual(p, false); }

ResidualSample connection_diff_residual(const PairPoint& p) { return connection_residual(p, p.P, p.Q); }

ResidualSample hprojective_residual(const PairPoint& p) {
    if (frobenius(p.P - p.Q) > 1e-12 * (1.0 + frobenius(p.P)))
        throw std::invalid_argument("hprojective residual needs P == Q");
    return connection_residual(p, p.P, p.P);
}

ResidualSample conditions_residual(const PairPoint& p) {
    ResidualSample out;
    out.point = p.x;
    double worst = -1.0;
    for (const auto& [name, d] : condition_defects(p.g.value, p.gbar.value, p.A.value, p.P, p.Q, p.epsilon)) {
        if (d.relative() > worst) {
            worst = d.relative();
            out.residual = d.residual;
            out.scale = d.scale;
        }
    }
    return out;
}

ResidualSample residual_at(const PQScene& scene, Equation eq, const Vector& x) {
    const PairPoint p = evaluate_pair(scene, x);
    switch (eq) {
        case Equation::conditions: return conditions_residual(p);
        case Equation::pqproj: return connection_diff_residual(p);
        case Equation::main: return pde_residual(p);
        case Equation::projective: return projective_residual(p);
        case Equation::hprojective: return hprojective_residual(p);
    }
    throw std::logic_error("unknown equation");
}

ResidualReport residual_report(const PQScene& scene, Equation eq, const std::vector<Vector>& points,
                               double tolerance) {
    if (points.empty()) throw std::invalid_argument("residual_report: no sample points");
    ResidualReport r;
    r.equation = eq;
    r.tolerance = tolerance;
    r.samples.reserve(points.size());
    double sum = 0.0;
    for (const Vector& x : points) {
        r.samples.push_back(residual_at(scene, eq, x));
        const double rel = r.samples.back().relative();
        sum += rel;
        if (rel > r.max_relative || r.samples.size() == 1) {
            r.max_relative = rel;
            r.worst = r.samples.size() - 1;
        }
    }
    r.mean_relative = sum / static_cast<double>(points.size());
    r.passed = r.max_relative <= tolerance;
    return r;
}

ResidualReport residual_report(const PQScene& scene, Equation eq, const SampleOptions& sampling, double tolerance) {
    return residual_report(scene, eq, stratified_samples(scene.chart(), sampling.samples, sampling.seed), tolerance);
}

Matrix reconstruct_gbar(const Matrix& g, const Matrix& A, double epsilon) {
    require_admissible_epsilon(epsilon);
    if (Eigen::LLT<Matrix>(g).info() != Eigen::Success)
        throw SingularMatrixError("reconstruct_gbar: metric is not positive definite");
    const Matrix ga = g * A;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (ga + ga.transpose()), g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SingularMatrixError("reconstruct_gbar: metric is not positive definite");
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw DomainError("reconstruct_gbar: A must be positive (all eigenvalues > 0)");
    const double det = es.eigenvalues().prod();
    const Matrix gbar = std::pow(det, -1.0 / (1.0 - epsilon)) * (g * checked_inverse(A, "reconstruct_gbar"));
    return 0.5 * (gbar + gbar.transpose());
}

MatrixFieldFn reconstruct_gbar(MatrixFieldFn g, MatrixFieldFn A, double epsilon) {
    require_admissible_epsilon(epsilon);
    return [g = std::move(g), A = std::move(A), epsilon](const Vector& x) { return reconstruct_gbar(g(x), A(x), epsilon); };
}

}  // namespace pqproj
