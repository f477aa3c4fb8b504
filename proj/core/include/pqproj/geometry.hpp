#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pqproj/expr.hpp"
#include "pqproj/linalg.hpp"

namespace pqproj {

/// A single coordinate chart restricted to a closed box.
class ChartDomain {
public:
    /// Throws std::invalid_argument unless m >= 2, the names are distinct
    /// identifiers and lo_i < hi_i on every axis.
    ChartDomain(std::vector<std::string> coords, Vector lo, Vector hi);

    int dimension() const { return static_cast<int>(coords_.size()); }
    const std::vector<std::string>& coords() const { return coords_; }
    const Vector& lo() const { return lo_; }
    const Vector& hi() const { return hi_; }

    bool contains(const Vector& x) const;
    Vector center() const { return 0.5 * (lo_ + hi_); }
    /// Largest side length of the box.
    double scale() const { return (hi_ - lo_).maxCoeff(); }

private:
    std::vector<std::string> coords_;
    Vector lo_;
    Vector hi_;
};

/// Riemannian metric given by expression components g_ij.
/// Only the upper triangle is stored; g_ji refers to the same expression.
class MetricField {
public:
    MetricField() = default;

    /// Builds from a full m x m component array. Throws std::invalid_argument
    /// when the array is not square or g_ij and g_ji differ structurally.
    static MetricField from_components(const std::vector<std::vector<ScalarExpr>>& components);

    int dimension() const { return m_; }
    const ScalarExpr& component(int i, int j) const;

    Matrix value_at(const Vector& x) const;
    MatrixJet jet_at(const Vector& x) const;

private:
    int m_ = 0;
    std::vector<ScalarExpr> upper_;
};

/// (1,1)-tensor field with mixed components T^i_j (row i, column j).
class TensorField11 {
public:
    TensorField11() = default;

    static TensorField11 from_components(const std::vector<std::vector<ScalarExpr>>& components);

    int dimension() const { return m_; }
    const ScalarExpr& component(int i, int j) const { return comps_[static_cast<std::size_t>(i * m_ + j)]; }
    bool is_zero() const;

    Matrix value_at(const Vector& x) const;
    MatrixJet jet_at(const Vector& x) const;

private:
    int m_ = 0;
    std::vector<ScalarExpr> comps_;
};

/// Christoffel symbols of the Levi-Civita connection, Gamma^k_ij.
class Christoffel {
public:
    explicit Christoffel(int m = 0) : m_(m), data_(static_cast<std::size_t>(m * m * m), 0.0) {}

    int dimension() const { return m_; }
    double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }
    double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }

    /// Vector Gamma(X, Y)^k = Gamma^k_ij X^i Y^j.
    Vector contract(const Vector& x, const Vector& y) const;
    /// Matrix (Gamma_i)^k_l = Gamma^k_il for a fixed lower index i.
    Matrix slice(int i) const;
    double max_abs() const;

private:
    std::size_t index(int k, int i, int j) const { return static_cast<std::size_t>((k * m_ + i) * m_ + j); }

    int m_;
    std::vector<double> data_;
};

/// Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
/// Throws SingularMatrixError when the metric is not positive definite.
Christoffel christoffel(const MatrixJet& metric);
Christoffel christoffel_at(const MetricField& g, const Vector& x);

/// (nabla_i T)^j_k = d_i T^j_k + Gamma^j_il T^l_k - Gamma^l_ik T^j_l.
/// Result element i is the matrix (nabla_i T) with rows j and columns k.
std::vector<Matrix> covariant_derivative(const MatrixJet& tensor, const Christoffel& gamma);
std::vector<Matrix> cov_deriv_11_at(const TensorField11& t, const MetricField& g, const Vector& x);

/// g^ij df_j.
Vector gradient(const Matrix& metric, const Vector& differential);

using ScalarJetFn = std::function<Jet(const Vector&)>;
Vector grad_scalar_at(const MetricField& g, const ScalarJetFn& f, const Vector& x);

struct GeodesicState {
    Vector x;
    Vector v;
};

enum class Termination { time_elapsed, left_domain };

struct TrajectorySample {
    double time = 0.0;
    GeodesicState state;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double step = 0.0;
    Termination termination = Termination::time_elapsed;

    double duration() const { return samples.empty() ? 0.0 : samples.back().time - samples.front().time; }
};

/// Acceleration -Gamma^k_ij v^i v^j of the geodesic equation.
Vector geodesic_acceleration(const MetricField& g, const GeodesicState& s);

/// One classical Runge-Kutta step of size h.
GeodesicState rk4_step(const MetricField& g, const GeodesicState& s, double h);

/// Fixed-step RK4 integration from `init` for `duration` time units.
/// Stops at the last sample inside `domain` when the path leaves the box.
/// Throws std::invalid_argument for h <= 0, a negative duration or a start
/// outside the box; DomainError when the state becomes non-finite.
Trajectory integrate_geodesic(const MetricField& g, const ChartDomain& domain, const GeodesicState& init,
                              double duration, double h);

/// g(v, v).
double kinetic_energy(const MetricField& g, const GeodesicState& s);

}  // namespace pqproj
