#include "pqproj/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pqproj/error.hpp"

namespace pqproj {

MatrixJet MatrixJet::constant(const Matrix& value, int dimension) {
    MatrixJet j;
    j.value = value;
    j.partials.assign(static_cast<std::size_t>(dimension), Matrix::Zero(value.rows(), value.cols()));
    return j;
}

Matrix MatrixJet::directional(const Vector& w) const {
    Matrix d = Matrix::Zero(value.rows(), value.cols());
    for (int i = 0; i < dimension(); ++i) d += w[i] * partials[static_cast<std::size_t>(i)];
    return d;
}

MatrixJet operator*(const MatrixJet& a, const MatrixJet& b) {
    MatrixJet r;
    r.value = a.value * b.value;
    r.partials.resize(a.partials.size());
    for (std::size_t i = 0; i < a.partials.size(); ++i)
        r.partials[i] = a.partials[i] * b.value + a.value * b.partials[i];
    return r;
}

MatrixJet operator*(const Jet& s, const MatrixJet& a) {
    MatrixJet r;
    r.value = s.value * a.value;
    r.partials.resize(a.partials.size());
    for (std::size_t i = 0; i < a.partials.size(); ++i)
        r.partials[i] = s.gradient[static_cast<Eigen::Index>(i)] * a.value + s.value * a.partials[i];
    return r;
}

MatrixJet operator+(const MatrixJet& a, const MatrixJet& b) {
    MatrixJet r;
    r.value = a.value + b.value;
    r.partials.resize(a.partials.size());
    for (std::size_t i = 0; i < a.partials.size(); ++i) r.partials[i] = a.partials[i] + b.partials[i];
    return r;
}

Matrix checked_inverse(const Matrix& m, const char* what) {
    Eigen::PartialPivLU<Matrix> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw SingularMatrixError(std::string(what) + ": matrix is numerically singular");
    return lu.inverse();
}

MatrixJet inverse(const MatrixJet& m) {
    MatrixJet r;
    r.value = checked_inverse(m.value, "inverse");
    r.partials.resize(m.partials.size());
    for (std::size_t i = 0; i < m.partials.size(); ++i) r.partials[i] = -r.value * m.partials[i] * r.value;
    return r;
}

Jet determinant(const MatrixJet& m) {
    Jet d;
    d.value = m.value.determinant();
    d.gradient.resize(m.dimension());
    const Matrix inv = checked_inverse(m.value, "determinant derivative");
    for (int i = 0; i < m.dimension(); ++i)
        d.gradient[i] = d.value * (inv * m.partials[static_cast<std::size_t>(i)]).trace();
    return d;
}

Jet trace(const MatrixJet& m) {
    Jet t;
    t.value = m.value.trace();
    t.gradient.resize(m.dimension());
    for (int i = 0; i < m.dimension(); ++i) t.gradient[i] = m.partials[static_cast<std::size_t>(i)].trace();
    return t;
}

Jet power(const Jet& s, double p) {
    if (!(s.value > 0.0)) throw DomainError("power of a non-positive scalar field");
    Jet r;
    r.value = std::pow(s.value, p);
    r.gradient = (p * std::pow(s.value, p - 1.0)) * s.gradient;
    return r;
}

Vector spd_solve(const Matrix& g, const Vector& b) {
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("metric is not positive definite");
    return llt.solve(b);
}

double min_symmetric_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace pqproj
