#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pqproj/catalog.hpp"
#include "pqproj/geometry.hpp"
#include "pqproj/sampling.hpp"

using namespace pqproj;

namespace {

const std::vector<std::string> kXY{"x", "y"};

MetricField metric(const ExprMatrix& text, const std::vector<std::string>& coords = kXY) {
    std::vector<std::vector<ScalarExpr>> comps;
    for (const auto& row : text) {
        comps.emplace_back();
        for (const auto& t : row) comps.back().push_back(parse_expr(t, coords));
    }
    return MetricField::from_components(comps);
}

ChartDomain unit_box() { return ChartDomain(kXY, Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)); }

// Upper half-plane metric (dx^2 + dy^2)/y^2 and a metric with cross terms.
const ExprMatrix kHyperbolic{{"1/y^2", "0"}, {"0", "1/y^2"}};
const ExprMatrix kSkewed{{"2 + sin(x*y)", "x/3"}, {"x/3", "1 + y^2"}};

}  // namespace

TEST(Linalg, MatrixJetProductAndInverseMatchDifferences) {
    const MetricField g = metric(kSkewed);
    const Vector x = (Vector(2) << 0.4, -0.7).finished();
    const MatrixJet j = g.jet_at(x);
    const auto fd_inv = oracle::fd_partials([&](const Vector& y) { Matrix m = g.value_at(y).inverse(); return m; }, x);
    const MatrixJet inv = inverse(j);
    const auto fd_sq = oracle::fd_partials([&](const Vector& y) { Matrix m = g.value_at(y) * g.value_at(y); return m; }, x);
    const MatrixJet sq = j * j;
    const Vector fd_det = oracle::fd_gradient([&](const Vector& y) { return g.value_at(y).determinant(); }, x);
    const Jet det = determinant(j);
    for (int i = 0; i < 2; ++i) {
        EXPECT_LE((inv.partials[i] - fd_inv[i]).norm(), 1e-8);
        EXPECT_LE((sq.partials[i] - fd_sq[i]).norm(), 1e-8);
        EXPECT_NEAR(det.gradient[i], fd_det[i], 1e-8);
    }
    EXPECT_NEAR(trace(j).value, g.value_at(x).trace(), 1e-15);
    const Jet p = power(det, 0.3);
    EXPECT_NEAR(p.gradient[0], 0.3 * std::pow(det.value, -0.7) * det.gradient[0], 1e-13);
}

TEST(Linalg, Guards) {
    EXPECT_THROW(inverse(MatrixJet::constant(Matrix::Zero(2, 2), 2)), SingularMatrixError);
    EXPECT_THROW(checked_inverse((Matrix(2, 2) << 1, 1, 1, 1).finished(), "test"), SingularMatrixError);
    EXPECT_THROW(spd_solve((Matrix(2, 2) << 1, 0, 0, -1).finished(), Vector::Ones(2)), SingularMatrixError);
    EXPECT_NEAR(min_symmetric_eigenvalue((Matrix(2, 2) << 2, 1, 1, 2).finished()), 1.0, 1e-15);
    EXPECT_THROW(power(Jet::constant(-1.0, 2), 0.5), std::exception);
}

TEST(Geometry, ChartDomainValidation) {
    EXPECT_THROW(ChartDomain({"x"}, Vector::Zero(1), Vector::Ones(1)), std::invalid_argument);
    EXPECT_THROW(ChartDomain({"x", "x"}, Vector::Zero(2), Vector::Ones(2)), std::invalid_argument);
    EXPECT_THROW(ChartDomain(kXY, Vector::Ones(2), Vector::Zero(2)), std::invalid_argument);
    const ChartDomain d = unit_box();
    EXPECT_TRUE(d.contains(Vector::Zero(2)));
    EXPECT_FALSE(d.contains(Vector::Constant(2, 1.5)));
    EXPECT_DOUBLE_EQ(d.scale(), 2.0);
}

TEST(Geometry, MetricRejectsAsymmetricComponents) {
    EXPECT_THROW(metric({{"1", "x"}, {"y", "1"}}), std::invalid_argument);
    EXPECT_THROW(metric({{"1", "0"}}), std::invalid_argument);
}

TEST(Geometry, HyperbolicChristoffelClosedForm) {
    // Gamma^x_xy = -1/y, Gamma^y_xx = 1/y, Gamma^y_yy = -1/y.
    const Vector x = (Vector(2) << 0.3, 2.0).finished();
    const Christoffel c = christoffel_at(metric(kHyperbolic), x);
    EXPECT_NEAR(c(0, 0, 1), -0.5, 1e-15);
    EXPECT_NEAR(c(0, 1, 0), -0.5, 1e-15);
    EXPECT_NEAR(c(1, 0, 0), 0.5, 1e-15);
    EXPECT_NEAR(c(1, 1, 1), -0.5, 1e-15);
    EXPECT_NEAR(c(0, 0, 0), 0.0, 1e-15);
}

TEST(GeometryProperty, ChristoffelSymmetricAndMatchesDifferences) {
    const MetricField g = metric(kSkewed);
    for (const Vector& x : stratified_samples(unit_box(), 50, 3)) {
        const Christoffel c = christoffel_at(g, x);
        const auto fd = oracle::fd_christoffel([&](const Vector& y) { return g.value_at(y); }, x);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    EXPECT_EQ(c(k, i, j), c(k, j, i));
                    EXPECT_NEAR(c(k, i, j), fd[k](i, j), 1e-8);
                }
    }
}

TEST(GeometryProperty, MetricIsParallel) {
    // nabla g = 0: d_i g_jk = Gamma^l_ij g_lk + Gamma^l_ik g_jl.
    for (const auto& entry : standard_catalog()) {
        const auto& g = entry.scene.g();
        const int m = g.dimension();
        for (const Vector& x : stratified_samples(entry.scene.chart(), 20, 5)) {
            const MatrixJet j = g.jet_at(x);
            const Christoffel c = christoffel(j);
            for (int i = 0; i < m; ++i) {
                const Matrix s = c.slice(i);
                const Matrix defect = j.partials[i] - s.transpose() * j.value - j.value * s;
                EXPECT_LE(defect.norm(), 1e-9 * (1.0 + j.partials[i].norm())) << entry.name;
            }
        }
    }
}

TEST(GeometryProperty, CovariantDerivativeOfIdentityVanishes) {
    const MetricField g = metric(kSkewed);
    const Vector x = (Vector(2) << 0.2, 0.5).finished();
    const auto nabla = covariant_derivative(MatrixJet::constant(Matrix::Identity(2, 2), 2), christoffel_at(g, x));
    for (const auto& n : nabla) EXPECT_LE(n.norm(), 1e-15);
}

TEST(Geometry, GradientRaisesIndex) {
    const Matrix g = (Matrix(2, 2) << 2, 0, 0, 4).finished();
    const Vector d = (Vector(2) << 1, 1).finished();
    EXPECT_TRUE(gradient(g, d).isApprox((Vector(2) << 0.5, 0.25).finished()));
}

TEST(Geodesic, EnergyDriftWithinBudget) {
    const MetricField g = metric(kSkewed);
    const GeodesicState init{Vector::Zero(2), (Vector(2) << 0.3, 0.2).finished()};
    const Trajectory t = integrate_geodesic(g, unit_box(), init, 1.0, 1e-3);
    ASSERT_EQ(t.termination, Termination::time_elapsed);
    EXPECT_EQ(t.samples.size(), 1001u);
    EXPECT_NEAR(t.duration(), 1.0, 1e-12);
    const double e0 = kinetic_energy(g, t.samples.front().state);
    double drift = 0.0;
    for (const auto& s : t.samples) drift = std::max(drift, std::abs(kinetic_energy(g, s.state) - e0) / e0);
    EXPECT_LE(drift, 1e-8 * t.duration());
}

TEST(Geodesic, StraightLinesInFlatMetric) {
    const MetricField g = metric({{"1", "0"}, {"0", "1"}});
    const GeodesicState init{Vector::Zero(2), (Vector(2) << 0.25, -0.5).finished()};
    const Trajectory t = integrate_geodesic(g, unit_box(), init, 1.0, 0.01);
    EXPECT_LE((t.samples.back().state.x - Vector((Vector(2) << 0.25, -0.5).finished())).norm(), 1e-13);
}

TEST(Geodesic, StopsAtBoxBoundary) {
    const MetricField g = metric({{"1", "0"}, {"0", "1"}});
    const GeodesicState init{Vector::Zero(2), (Vector(2) << 2.0, 0.0).finished()};
    const Trajectory t = integrate_geodesic(g, unit_box(), init, 1.0, 0.01);
    EXPECT_EQ(t.termination, Termination::left_domain);
    EXPECT_TRUE(unit_box().contains(t.samples.back().state.x));
    EXPECT_NEAR(t.duration(), 0.5, 0.011);
}

TEST(Geodesic, RejectsBadArguments) {
    const MetricField g = metric({{"1", "0"}, {"0", "1"}});
    const GeodesicState init{Vector::Zero(2), Vector::Ones(2)};
    EXPECT_THROW(integrate_geodesic(g, unit_box(), init, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(integrate_geodesic(g, unit_box(), init, -1.0, 0.1), std::invalid_argument);
    const GeodesicState outside{Vector::Constant(2, 3.0), Vector::Ones(2)};
    EXPECT_THROW(integrate_geodesic(g, unit_box(), outside, 1.0, 0.1), std::invalid_argument);
}
