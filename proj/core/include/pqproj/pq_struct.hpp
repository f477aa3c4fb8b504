#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pqproj/geometry.hpp"

namespace pqproj {

using ExprMatrix = std::vector<std::vector<std::string>>;

/// Unvalidated scene description: every field is still text.
struct SceneSpec {
    std::string name;
    std::string notes;
    std::vector<std::string> coords;
    std::vector<double> lo;
    std::vector<double> hi;
    double epsilon = 0.0;
    ExprMatrix g;
    ExprMatrix gbar;
    ExprMatrix P;
    ExprMatrix Q;

    int dimension() const { return static_cast<int>(coords.size()); }
};

/// m x m matrix of "0" strings.
ExprMatrix zero_expr_matrix(int m);

/// A pair of metrics with the (P, Q, epsilon) structure, validated at sample points.
/// Only validate_scene creates these.
class PQScene {
public:
    const SceneSpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    const ChartDomain& chart() const { return chart_; }
    int dimension() const { return chart_.dimension(); }
    double epsilon() const { return spec_.epsilon; }
    const MetricField& g() const { return g_; }
    const MetricField& gbar() const { return gbar_; }
    const TensorField11& P() const { return P_; }
    const TensorField11& Q() const { return Q_; }

private:
    PQScene(SceneSpec spec, ChartDomain chart, MetricField g, MetricField gbar, TensorField11 P, TensorField11 Q)
        : spec_(std::move(spec)), chart_(std::move(chart)), g_(std::move(g)), gbar_(std::move(gbar)),
          P_(std::move(P)), Q_(std::move(Q)) {}
    friend struct SceneBuilder;

    SceneSpec spec_;
    ChartDomain chart_;
    MetricField g_;
    MetricField gbar_;
    TensorField11 P_;
    TensorField11 Q_;
};

struct ValidationOptions {
    int samples = 1000;
    std::uint64_t seed = 42;
    /// Relative tolerance for the algebraic conditions.
    double tolerance = 1e-9;
    /// Smallest admissible metric eigenvalue.
    double min_eigenvalue = 1e-12;
};

/// One failed condition. Input errors (bad text, excluded epsilon, a metric
/// that is not positive definite) make the scene unusable; the others are
/// sampled algebraic conditions.
struct Violation {
    std::string check;
    std::string message;
    bool input_error = false;
    std::optional<Vector> worst_point;
    double worst_value = 0.0;
};

struct ConditionStat {
    std::string check;
    double max_relative = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

struct ValidationResult {
    std::optional<PQScene> scene;
    std::vector<Violation> violations;
    std::vector<ConditionStat> conditions;
    ValidationOptions options;

    bool ok() const { return scene.has_value() && violations.empty(); }
    bool has_input_error() const;
};

/// Parses every expression and checks, at stratified sample points, that
/// P and Q are skew for both metrics, PQ = epsilon Id, both metrics are
/// positive definite, A commutes with P and Q, and epsilon is neither 1 nor m+1.
ValidationResult validate_scene(const SceneSpec& spec, const ValidationOptions& options = {});

/// Like validate_scene but throws std::invalid_argument listing the violations.
PQScene require_valid_scene(const SceneSpec& spec, const ValidationOptions& options = {});

// ---------------------------------------------------------------------------
// A-tensor, Lambda and Phi

/// (det gbar / det g)^(1/(m+1-eps)) gbar^-1 g.
Matrix compute_A(const Matrix& g, const Matrix& gbar, double epsilon);
MatrixJet compute_A(const MatrixJet& g, const MatrixJet& gbar, double epsilon);
Matrix compute_A_at(const PQScene& scene, const Vector& x);

/// grad(trace A) / (2 (1 - eps)) with trace A differentiated through its construction.
Vector lambda_from(const Matrix& g, const MatrixJet& A, double epsilon);
Vector lambda_at(const PQScene& scene, const Vector& x);

/// Phi = -g A^-1 Lambda, as covector components Phi_i.
/// Throws SingularMatrixError for a singular A.
Vector phi_from_lambda(const Matrix& g, const Matrix& A, const Vector& lambda);
Vector phi_from_lambda_at(const PQScene& scene, const Vector& x);

/// Everything the residuals need at one point, evaluated once.
struct PairPoint {
    Vector x;
    double epsilon = 0.0;
    MatrixJet g;
    MatrixJet gbar;
    MatrixJet A;
    Matrix P;
    Matrix Q;
    Christoffel gamma;
    Christoffel gamma_bar;
    Vector lambda;
};

PairPoint evaluate_pair(const PQScene& scene, const Vector& x);

// ---------------------------------------------------------------------------
// Residuals

enum class Equation { conditions, pqproj, main, projective, hprojective };

std::string_view to_string(Equation eq);
std::optional<Equation> parse_equation(std::string_view name);

struct ResidualSample {
    Vector point;
    double residual = 0.0;
    double scale = 0.0;

    /// residual / max(scale, machine epsilon).
    double relative() const;
};

struct ResidualReport {
    Equation equation = Equation::main;
    std::vector<ResidualSample> samples;
    double max_relative = 0.0;
    double mean_relative = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    /// Index into samples of the worst point.
    std::size_t worst = 0;
};

/// (nabla_X A)Y against g(Y,X)L + g(Y,L)X + g(Y,QX)PL + g(Y,PL)QX over coordinate basis pairs.
ResidualSample pde_residual(const PairPoint& p);
/// The P = Q = 0 specialisation (nabla_X A)Y = g(Y,X)L + g(Y,L)X.
ResidualSample projective_residual(const PairPoint& p);
/// Christoffel difference against Phi(X)Y + Phi(Y)X - Phi(PX)QY - Phi(PY)QX.
ResidualSample connection_diff_residual(const PairPoint& p);
/// The P = Q = J form of the connection difference. Throws std::invalid_argument unless P == Q.
ResidualSample hprojective_residual(const PairPoint& p);
/// Worst of the algebraic conditions (skewness, PQ = eps Id, [A,P] = [A,Q] = 0).
ResidualSample conditions_residual(const PairPoint& p);

ResidualSample residual_at(const PQScene& scene, Equation eq, const Vector& x);
inline ResidualSample pde_residual_at(const PQScene& s, const Vector& x) { return residual_at(s, Equation::main, x); }
inline ResidualSample projective_residual_at(const PQScene& s, const Vector& x) {
    return residual_at(s, Equation::projective, x);
}
inline ResidualSample connection_diff_residual_at(const PQScene& s, const Vector& x) {
    return residual_at(s, Equation::pqproj, x);
}

constexpr double kDefaultResidualTolerance = 1e-7;

struct SampleOptions {
    int samples = 1000;
    std::uint64_t seed = 42;
};

ResidualReport residual_report(const PQScene& scene, Equation eq, const std::vector<Vector>& points,
                               double tolerance = kDefaultResidualTolerance);
ResidualReport residual_report(const PQScene& scene, Equation eq, const SampleOptions& sampling = {},
                               double tolerance = kDefaultResidualTolerance);

// ---------------------------------------------------------------------------
// Reconstruction

/// (det A)^(-1/(1-eps)) g A^-1. Throws DomainError when A has a non-positive
/// eigenvalue and std::invalid_argument for eps = 1.
Matrix reconstruct_gbar(const Matrix& g, const Matrix& A, double epsilon);

using MatrixFieldFn = std::function<Matrix(const Vector&)>;
MatrixFieldFn reconstruct_gbar(MatrixFieldFn g, MatrixFieldFn A, double epsilon);

/// Frobenius norm of a matrix with zero-size guard.
double frobenius(const Matrix& m);

}  // namespace pqproj
