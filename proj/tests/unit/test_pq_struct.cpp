#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pqproj/catalog.hpp"
#include "pqproj/sampling.hpp"

using namespace pqproj;

namespace {

SceneSpec dini_spec() { return make_dini_pair().scene.spec(); }

bool has_violation(const ValidationResult& r, const std::string& check) {
    return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.check == check; });
}

Vector pt(double x, double y) { return (Vector(2) << x, y).finished(); }

}  // namespace

TEST(Validation, AcceptsCatalogScenes) {
    for (const auto& e : standard_catalog()) {
        const ValidationResult r = validate_scene(e.scene.spec());
        EXPECT_TRUE(r.ok()) << e.name;
        EXPECT_FALSE(r.conditions.empty());
    }
}

TEST(Validation, RejectsExcludedEpsilon) {
    SceneSpec s = dini_spec();
    for (double eps : {1.0, 3.0, std::nan("")}) {
        s.epsilon = eps;
        const ValidationResult r = validate_scene(s);
        EXPECT_FALSE(r.ok());
        EXPECT_TRUE(r.has_input_error());
        EXPECT_TRUE(has_violation(r, "epsilon_exclusion")) << eps;
    }
    EXPECT_THROW(require_valid_scene(excluded_epsilon_scene()), std::invalid_argument);
}

TEST(Validation, InputErrors) {
    SceneSpec s = dini_spec();
    s.g[0][0] = "x +";
    EXPECT_TRUE(has_violation(validate_scene(s), "parse"));

    s = dini_spec();
    s.g[0][0] = "-(x + 3 - y)";
    EXPECT_TRUE(has_violation(validate_scene(s), "metric_g_positive"));

    s = dini_spec();
    s.gbar[1][1] = "log(y - 5)";
    EXPECT_TRUE(has_violation(validate_scene(s), "evaluation"));

    s = dini_spec();
    s.g[0][1] = "x";
    EXPECT_TRUE(validate_scene(s).has_input_error());

    s = dini_spec();
    s.hi[0] = s.lo[0];
    EXPECT_TRUE(has_violation(validate_scene(s), "chart"));

    s = dini_spec();
    s.P = {{"0"}};
    EXPECT_TRUE(validate_scene(s).has_input_error());
}

TEST(Validation, AlgebraicConditionsAreNotInputErrors) {
    SceneSpec s = dini_spec();
    s.P = {{"1", "0"}, {"0", "1"}};  // not skew
    ValidationResult r = validate_scene(s);
    EXPECT_FALSE(r.ok());
    EXPECT_FALSE(r.has_input_error());
    EXPECT_TRUE(has_violation(r, "skew_g_P"));
    EXPECT_TRUE(has_violation(r, "PQ_eps_identity") || has_violation(r, "skew_gbar_P"));

    s = make_cp1_hprojective_pair().scene.spec();
    s.epsilon = -2.0;  // P Q = -Id no longer matches
    r = validate_scene(s);
    EXPECT_TRUE(has_violation(r, "PQ_eps_identity"));
}

TEST(AField, AffineClosedForms) {
    const auto a2 = make_affine_pair(2, 4.0);
    const auto a3 = make_affine_pair(3, 2.0);
    const Matrix A2 = compute_A_at(a2.scene, a2.scene.chart().center());
    const Matrix A3 = compute_A_at(a3.scene, a3.scene.chart().center());
    EXPECT_LE((A2 - std::pow(2.0, -2.0 / 3.0) * Matrix::Identity(2, 2)).norm(), 1e-15);
    EXPECT_LE((A3 - std::pow(2.0, -0.25) * Matrix::Identity(3, 3)).norm(), 1e-15);
    EXPECT_LE(lambda_at(a3.scene, a3.scene.chart().center()).norm(), 1e-15);
}

TEST(AField, DiniClosedForms) {
    // X = x + 3, Y = y: A = diag(X, Y), Phi = (-1/(2X), -1/(2Y)).
    const auto d = make_dini_pair();
    for (const Vector& x : stratified_samples(d.scene.chart(), 50, 9)) {
        const double X = x[0] + 3.0, Y = x[1];
        const Matrix A = compute_A_at(d.scene, x);
        EXPECT_LE((A - Vector((Vector(2) << X, Y).finished()).asDiagonal().toDenseMatrix()).norm(), 1e-13 * X);
        const Vector phi = phi_from_lambda_at(d.scene, x);
        EXPECT_NEAR(phi[0], -1.0 / (2 * X), 1e-14);
        EXPECT_NEAR(phi[1], -1.0 / (2 * Y), 1e-14);
        const Vector L = lambda_at(d.scene, x);
        EXPECT_NEAR(L[0], 1.0 / (2 * (X - Y)), 1e-14);
        EXPECT_NEAR(L[1], 1.0 / (2 * (X - Y)), 1e-14);
    }
}

TEST(AFieldProperty, JetMatchesPlainAndDifferences) {
    for (const auto& e : standard_catalog())
        for (const Vector& x : stratified_samples(e.scene.chart(), 20, 17)) {
            const PairPoint p = evaluate_pair(e.scene, x);
            const Matrix plain = oracle::a_field(e.scene)(x);
            EXPECT_LE((p.A.value - plain).norm(), 1e-12 * (1 + plain.norm())) << e.name;
            const auto fd = oracle::fd_partials(oracle::a_field(e.scene), x, 1e-5);
            for (int i = 0; i < e.scene.dimension(); ++i)
                EXPECT_LE((p.A.partials[i] - fd[i]).norm(), 1e-7 * (1 + plain.norm())) << e.name;
            const Vector L = oracle::fd_lambda(e.scene, x);
            EXPECT_LE((p.lambda - L).norm(), 1e-7 * (1 + L.norm())) << e.name;
        }
}

TEST(AFieldProperty, ScalingGbarRescalesA) {
    // gbar -> s gbar multiplies A by s^(m/(m+1-eps) - 1).
    const auto d = make_dini_pair();
    const Vector x = pt(0.4, 1.3);
    const Matrix g = d.scene.g().value_at(x), gb = d.scene.gbar().value_at(x);
    for (double eps : {0.0, -1.0, -3.0, 0.5})
        for (double s : {0.5, 2.0, 7.0}) {
            const double factor = std::pow(s, 2.0 / (3.0 - eps) - 1.0);
            EXPECT_LE((compute_A(g, s * gb, eps) - factor * compute_A(g, gb, eps)).norm(), 1e-13);
        }
}

TEST(Residuals, CatalogScenesSatisfyTheirGates) {
    for (const auto& e : standard_catalog())
        for (Equation eq : e.gates) {
            const ResidualReport r = residual_report(e.scene, eq, SampleOptions{200, 3});
            EXPECT_TRUE(r.passed) << e.name << " " << to_string(eq) << " " << r.max_relative;
            EXPECT_EQ(r.samples.size(), 200u);
        }
}

TEST(ResidualsProperty, AgreeWithDifferencedOracle) {
    // Catalog scenes: both the library residual and the fully differenced
    // residual vanish. Negative controls: both are large.
    for (const auto& e : standard_catalog())
        for (const Vector& x : stratified_samples(e.scene.chart(), 10, 21)) {
            EXPECT_LE(oracle::fd_pde_defect(e.scene, x, true), 1e-6) << e.name;
            EXPECT_LE(oracle::fd_connection_defect(e.scene, x), 1e-6) << e.name;
        }
    for (const auto& n : negative_catalog()) {
        const ValidationResult v = validate_scene(n.spec);
        ASSERT_TRUE(v.scene) << n.name;
        double lib = 0.0, fd = 0.0;
        for (const Vector& x : stratified_samples(v.scene->chart(), 10, 21)) {
            lib = std::max(lib, residual_at(*v.scene, Equation::main, x).relative());
            fd = std::max(fd, oracle::fd_pde_defect(*v.scene, x, true));
        }
        EXPECT_GT(lib, 1e-3) << n.name;
        EXPECT_GT(fd, 1e-3) << n.name;
    }
}

TEST(Residuals, ProjectiveFormDistinguishesCp1) {
    const auto cp1 = make_cp1_hprojective_pair();
    EXPECT_FALSE(residual_report(cp1.scene, Equation::projective, SampleOptions{100, 1}).passed);
    EXPECT_TRUE(residual_report(cp1.scene, Equation::hprojective, SampleOptions{100, 1}).passed);
    const auto negatives = negative_catalog();
    const auto even = std::find_if(negatives.begin(), negatives.end(), [](const auto& n) { return n.name == "cp1_even_eps"; });
    ASSERT_NE(even, negatives.end());
    const PQScene unequal = require_valid_scene(even->spec);
    EXPECT_THROW(residual_at(unequal, Equation::hprojective, unequal.chart().center()), std::invalid_argument);
}

TEST(Residuals, ReportsAreDeterministic) {
    const auto d = make_dini_pair();
    const auto a = residual_report(d.scene, Equation::main, SampleOptions{100, 5});
    const auto b = residual_report(d.scene, Equation::main, SampleOptions{100, 5});
    EXPECT_EQ(a.max_relative, b.max_relative);
    EXPECT_EQ(a.worst, b.worst);
    EXPECT_EQ(a.samples[a.worst].point, b.samples[b.worst].point);
}

TEST(Residuals, EquationNames) {
    for (Equation eq : {Equation::conditions, Equation::pqproj, Equation::main, Equation::projective,
                        Equation::hprojective})
        EXPECT_EQ(parse_equation(to_string(eq)), eq);
    EXPECT_FALSE(parse_equation("nonsense"));
}

TEST(Reconstruction, RoundTripsCatalogAFields) {
    for (const auto& e : standard_catalog())
        for (const Vector& x : stratified_samples(e.scene.chart(), 50, 8)) {
            const Matrix g = e.scene.g().value_at(x);
            const Matrix A = compute_A_at(e.scene, x);
            const Matrix back = compute_A(g, reconstruct_gbar(g, A, e.scene.epsilon()), e.scene.epsilon());
            EXPECT_LE((back - A).norm() / A.norm(), 1e-10) << e.name;
        }
}

TEST(ReconstructionProperty, RecoversGbarUpToRoundoff) {
    const auto d = make_dini_pair();
    const Vector x = pt(0.5, 1.5);
    const Matrix g = d.scene.g().value_at(x), gb = d.scene.gbar().value_at(x);
    EXPECT_LE((reconstruct_gbar(g, compute_A(g, gb, 0.0), 0.0) - gb).norm() / gb.norm(), 1e-13);
    const auto field = reconstruct_gbar([&](const Vector& y) { return d.scene.g().value_at(y); },
                                        [&](const Vector& y) { return compute_A_at(d.scene, y); }, 0.0);
    EXPECT_LE((field(x) - gb).norm() / gb.norm(), 1e-13);
}

TEST(Reconstruction, Errors) {
    const Matrix g = Matrix::Identity(2, 2);
    EXPECT_THROW(reconstruct_gbar(g, (Matrix(2, 2) << 1, 0, 0, -1).finished(), 0.0), DomainError);
    EXPECT_THROW(reconstruct_gbar(g, Matrix::Identity(2, 2), 1.0), std::invalid_argument);
    EXPECT_THROW(compute_A(g, -g, 0.0), SingularMatrixError);
    EXPECT_THROW(reconstruct_gbar(Matrix(-g), Matrix(Matrix::Identity(2, 2)), 0.0), SingularMatrixError);
    EXPECT_THROW(phi_from_lambda(g, Matrix::Zero(2, 2), Vector::Ones(2)), SingularMatrixError);
}
