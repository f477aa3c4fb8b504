#pragma once

#include <vector>

#include "pqproj/jet.hpp"

namespace pqproj {

/// A matrix-valued field at one point: its value and one partial-derivative
/// matrix per chart coordinate.
struct MatrixJet {
    Matrix value;
    std::vector<Matrix> partials;

    int dimension() const { return static_cast<int>(partials.size()); }
    int rows() const { return static_cast<int>(value.rows()); }

    static MatrixJet constant(const Matrix& value, int dimension);

    /// Directional derivative sum_i w_i * partials[i].
    Matrix directional(const Vector& w) const;
};

MatrixJet operator*(const MatrixJet& a, const MatrixJet& b);
MatrixJet operator*(const Jet& s, const MatrixJet& a);
MatrixJet operator+(const MatrixJet& a, const MatrixJet& b);

/// d(M^-1) = -M^-1 dM M^-1. Throws SingularMatrixError when M is numerically singular.
MatrixJet inverse(const MatrixJet& m);

/// d det M = det M * tr(M^-1 dM).
Jet determinant(const MatrixJet& m);

Jet trace(const MatrixJet& m);

/// s^p for a positive scalar jet.
Jet power(const Jet& s, double p);

/// Inverse with a conditioning guard (reciprocal condition number below 1e-14 is singular).
Matrix checked_inverse(const Matrix& m, const char* what);

/// Solves G x = b for a symmetric positive-definite G.
/// Throws SingularMatrixError when the Cholesky factorisation fails.
Vector spd_solve(const Matrix& g, const Vector& b);

/// Smallest eigenvalue of a symmetric matrix.
double min_symmetric_eigenvalue(const Matrix& m);

}  // namespace pqproj
