#include "pqproj/geometry.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "pqproj/error.hpp"

namespace pqproj {

ChartDomain::ChartDomain(std::vector<std::string> coords, Vector lo, Vector hi)
    : coords_(std::move(coords)), lo_(std::move(lo)), hi_(std::move(hi)) {
    const auto m = static_cast<Eigen::Index>(coords_.size());
    if (m < 2) throw std::invalid_argument("chart dimension must be at least 2");
    if (lo_.size() != m || hi_.size() != m)
        throw std::invalid_argument("domain bounds do not match the number of coordinates");
    std::set<std::string> seen(coords_.begin(), coords_.end());
    if (static_cast<Eigen::Index>(seen.size()) != m) throw std::invalid_argument("coordinate names must be distinct");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || !(lo_[i] < hi_[i]))
            throw std::invalid_argument("domain interval for '" + coords_[static_cast<std::size_t>(i)] +
                                        "' must satisfy lo < hi");
    }
}

bool ChartDomain::contains(const Vector& x) const {
    if (x.size() != lo_.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] >= lo_[i] && x[i] <= hi_[i])) return false;
    return true;
}

MetricField MetricField::from_components(const std::vector<std::vector<ScalarExpr>>& components) {
    const int m = static_cast<int>(components.size());
    if (m == 0) throw std::invalid_argument("metric has no components");
    MetricField g;
    g.m_ = m;
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(components[static_cast<std::size_t>(i)].size()) != m)
            throw std::invalid_argument("metric component array is not square");
    }
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const auto& a = components[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const auto& b = components[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            if (!(a == b))
                throw std::invalid_argument("metric components g_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                            " and g_" + std::to_string(j + 1) + std::to_string(i + 1) + " differ");
            g.upper_.push_back(a);
        }
    }
    return g;
}

const ScalarExpr& MetricField::component(int i, int j) const {
    if (i > j) std::swap(i, j);
    // Row i of the upper triangle starts after i rows of decreasing length.
    const int offset = i * m_ - i * (i - 1) / 2;
    return upper_[static_cast<std::size_t>(offset + (j - i))];
}

Matrix MetricField::value_at(const Vector& x) const {
    Matrix g(m_, m_);
    for (int i = 0; i < m_; ++i)
        for (int j = i; j < m_; ++j) g(i, j) = g(j, i) = eval(component(i, j), x);
    return g;
}

MatrixJet MetricField::jet_at(const Vector& x) const {
    MatrixJet r = MatrixJet::constant(Matrix::Zero(m_, m_), m_);
    for (int i = 0; i < m_; ++i) {
        for (int j = i; j < m_; ++j) {
            const Jet c = eval_jet(component(i, j), x);
            r.value(i, j) = r.value(j, i) = c.value;
            for (int k = 0; k < m_; ++k) r.partials[static_cast<std::size_t>(k)](i, j) =
                r.partials[static_cast<std::size_t>(k)](j, i) = c.gradient[k];
        }
    }
    return r;
}

TensorField11 TensorField11::from_components(const std::vector<std::vector<ScalarExpr>>& components) {
    const int m = static_cast<int>(components.size());
    if (m == 0) throw std::invalid_argument("tensor has no components");
    TensorField11 t;
    t.m_ = m;
    for (const auto& row : components) {
        if (static_cast<int>(row.size()) != m) throw std::invalid_argument("tensor component array is not square");
        t.comps_.insert(t.comps_.end(), row.begin(), row.end());
    }
    return t;
}

bool TensorField11::is_zero() const {
    for (const auto& c : comps_) {
        const auto& root = c.root();
        if (root.kind != ScalarExpr::Node::Kind::number || root.number != 0.0) return false;
    }
    return true;
}

Matrix TensorField11::value_at(const Vector& x) const {
    Matrix t(m_, m_);
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) t(i, j) = eval(component(i, j), x);
    return t;
}

MatrixJet TensorField11::jet_at(const Vector& x) const {
    MatrixJet r = MatrixJet::constant(Matrix::Zero(m_, m_), m_);
    for (int i = 0; i < m_; ++i) {
        for (int j = 0; j < m_; ++j) {
            const Jet c = eval_jet(component(i, j), x);
            r.value(i, j) = c.value;
            for (int k = 0; k < m_; ++k) r.partials[static_cast<std::size_t>(k)](i, j) = c.gradient[k];
        }
    }
    return r;
}

Vector Christoffel::contract(const Vector& x, const Vector& y) const {
    Vector r = Vector::Zero(m_);
    for (int k = 0; k < m_; ++k)
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) r[k] += (*this)(k, i, j) * x[i] * y[j];
    return r;
}

Matrix Christoffel::slice(int i) const {
    Matrix s(m_, m_);
    for (int k = 0; k < m_; ++k)
        for (int l = 0; l < m_; ++l) s(k, l) = (*this)(k, i, l);
    return s;
}

double Christoffel::max_abs() const {
    double r = 0.0;
    for (double d : data_) r = std::max(r, std::abs(d));
    return r;
}

Christoffel christoffel(const MatrixJet& metric) {
    const int m = metric.rows();
    Eigen::LLT<Matrix> llt(metric.value);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("christoffel: metric is not positive definite");
    const Matrix inv = llt.solve(Matrix::Identity(m, m));

    // First-kind symbols [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij).
    std::vector<double> first(static_cast<std::size_t>(m * m * m));
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            for (int l = 0; l < m; ++l) {
                const double v = 0.5 * (metric.partials[static_cast<std::size_t>(i)](j, l) +
                                        metric.partials[static_cast<std::size_t>(j)](i, l) -
                                        metric.partials[static_cast<std::size_t>(l)](i, j));
                first[static_cast<std::size_t>((i * m + j) * m + l)] = v;
                first[static_cast<std::size_t>((j * m + i) * m + l)] = v;
            }

    Christoffel gamma(m);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                double s = 0.0;
                for (int l = 0; l < m; ++l) s += inv(k, l) * first[static_cast<std::size_t>((i * m + j) * m + l)];
                gamma(k, i, j) = s;
                gamma(k, j, i) = s;
            }
    return gamma;
}

Christoffel christoffel_at(const MetricField& g, const Vector& x) { return christoffel(g.jet_at(x)); }

std::vector<Matrix> covariant_derivative(const MatrixJet& tensor, const Christoffel& gamma) {
    const int m = tensor.rows();
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const Matrix gi = gamma.slice(i);  // (Gamma_i)^j_l
        out.push_back(tensor.partials[static_cast<std::size_t>(i)] + gi * tensor.value - tensor.value * gi);
    }
    return out;
}

std::vector<Matrix> cov_deriv_11_at(const TensorField11& t, const MetricField& g, const Vector& x) {
    return covariant_derivative(t.jet_at(x), christoffel_at(g, x));
}

Vector gradient(const Matrix& metric, const Vector& differential) { return spd_solve(metric, differential); }

Vector grad_scalar_at(const MetricField& g, const ScalarJetFn& f, const Vector& x) {
    const Jet j = f(x);
    if (j.gradient.size() != g.dimension()) throw std::invalid_argument("grad_scalar_at: jet dimension mismatch");
    return gradient(g.value_at(x), j.gradient);
}

Vector geodesic_acceleration(const MetricField& g, const GeodesicState& s) {
    return -christoffel_at(g, s.x).contract(s.v, s.v);
}

GeodesicState rk4_step(const MetricField& g, const GeodesicState& s, double h) {
    const Vector k1x = s.v;
    const Vector k1v = geodesic_acceleration(g, s);
    const GeodesicState s2{s.x + 0.5 * h * k1x, s.v + 0.5 * h * k1v};
    const Vector k2x = s2.v;
    const Vector k2v = geodesic_acceleration(g, s2);
    const GeodesicState s3{s.x + 0.5 * h * k2x, s.v + 0.5 * h * k2v};
    const Vector k3x = s3.v;
    const Vector k3v = geodesic_acceleration(g, s3);
    const GeodesicState s4{s.x + h * k3x, s.v + h * k3v};
    const Vector k4x = s4.v;
    const Vector k4v = geodesic_acceleration(g, s4);
    return GeodesicState{s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
                         s.v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

Trajectory integrate_geodesic(const MetricField& g, const ChartDomain& domain, const GeodesicState& init,
                              double duration, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("integrate_geodesic: step must be positive");
    if (!(duration >= 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("integrate_geodesic: duration must be non-negative");
    if (init.x.size() != domain.dimension() || init.v.size() != domain.dimension())
        throw std::invalid_argument("integrate_geodesic: state dimension mismatch");
    if (!domain.contains(init.x)) throw std::invalid_argument("integrate_geodesic: initial point outside the domain");
    if (!init.v.allFinite()) throw DomainError("integrate_geodesic: non-finite initial velocity");

    Trajectory traj;
    traj.step = h;
    traj.samples.push_back({0.0, init});

    const auto full_steps = static_cast<long>(std::floor(duration / h + 1e-9));
    const double remainder = duration - static_cast<double>(full_steps) * h;
    const long total = full_steps + (remainder > 1e-12 * h ? 1 : 0);

    GeodesicState s = init;
    for (long n = 1; n <= total; ++n) {
        const bool last_partial = n > full_steps;
        const double step = last_partial ? remainder : h;
        GeodesicState next = rk4_step(g, s, step);
        if (!next.x.allFinite() || !next.v.allFinite())
            throw DomainError("integrate_geodesic: state became non-finite");
        if (!domain.contains(next.x)) {
            traj.termination = Termination::left_domain;
            return traj;
        }
        s = std::move(next);
        traj.samples.push_back({last_partial ? duration : static_cast<double>(n) * h, s});
    }
    return traj;
}

double kinetic_energy(const MetricField& g, const GeodesicState& s) { return s.v.dot(g.value_at(s.x) * s.v); }

}  // namespace pqproj
