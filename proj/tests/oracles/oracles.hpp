#pragma once

// Reference computations for the tests. Everything here avoids the code paths
// it checks: derivatives are central differences of plain values, integrals
// use LU solves instead of eigenframes, eigenvalues come from the
// non-symmetric solver on A itself.

#include <functional>
#include <vector>

#include "pqproj/catalog.hpp"
#include "pqproj/pq_struct.hpp"

namespace oracle {

using pqproj::Matrix;
using pqproj::Vector;

using ScalarFn = std::function<double(const Vector&)>;
using MatrixFn = std::function<Matrix(const Vector&)>;

Vector fd_gradient(const ScalarFn& f, const Vector& x, double h = 1e-6);
std::vector<Matrix> fd_partials(const MatrixFn& f, const Vector& x, double h = 1e-6);

/// Fourth-order central differences, for gradients that must agree to 1e-7.
Vector fd_gradient4(const ScalarFn& f, const Vector& x, double h);

/// Gamma^k_ij from differenced metric values; element [k](i, j).
std::vector<Matrix> fd_christoffel(const MatrixFn& metric, const Vector& x, double h = 1e-5);

/// A from plain metric values: (det gbar / det g)^(1/(m+1-eps)) gbar^-1 g.
Matrix a_tensor(const Matrix& g, const Matrix& gbar, double epsilon);
MatrixFn a_field(const pqproj::PQScene& scene);

/// Lambda = g^-1 d(tr A) / (2 (1 - eps)) with tr A differenced.
Vector fd_lambda(const pqproj::PQScene& scene, const Vector& x, double h = 1e-5);

/// Max over basis pairs of |(nabla_i A) e_k - rhs| / scale with everything differenced.
/// with_pq selects the full right-hand side or its projective truncation.
double fd_pde_defect(const pqproj::PQScene& scene, const Vector& x, bool with_pq, double h = 1e-5);

/// Max over basis pairs of |(Gamma_bar - Gamma)(e_i, e_j) - Phi-terms| / scale, differenced.
double fd_connection_defect(const pqproj::PQScene& scene, const Vector& x, double h = 1e-5);

/// Real eigenvalues of A (any basis), ascending.
Vector eigenvalues(const Matrix& A);

/// |det(A - t)|^(1/(1-eps)) X^T G (A - t)^-1 X by LU.
double direct_integral(const Matrix& g, const Matrix& A, double epsilon, double t, const Vector& X);

/// sgn(rho - c) |det(A - c)|^(1/k) G (A - c)^-1, symmetrised.
Matrix singular_tensor(const Matrix& g, const Matrix& A, double rho, double c, int k);

/// {F_t, F_s} in canonical coordinates with every derivative differenced.
double fd_bracket(const pqproj::PQScene& scene, double t, double s, const Vector& x, const Vector& p,
                  double h = 1e-5);

/// Scene with g = Id and A = diag(a, b) in the plane, eps = 0:
/// gbar = diag(1/(a^2 b), 1/(a b^2)).
pqproj::SceneSpec diagonal_a_scene(const std::string& a, const std::string& b, std::vector<double> lo,
                                   std::vector<double> hi);

/// One expression text of a catalog scene with the chart it lives on.
struct CorpusItem {
    std::string origin;  ///< scene/field[i][j]
    std::string text;
    std::vector<std::string> coords;
    std::vector<double> lo;
    std::vector<double> hi;
};

/// Every metric and structure component of the standard and negative catalogs.
std::vector<CorpusItem> expression_corpus();

/// max_i |jet_i - fd_i| / (|jet|_inf + |f| / L), L the largest box side.
/// fd is the fourth-order difference at step 1e-3 L.
double jet_fd_disagreement(const pqproj::ScalarExpr& e, const Vector& x, double box_scale);

}  // namespace oracle
