#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace oracle {

Vector fd_gradient(const ScalarFn& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

Vector fd_gradient4(const ScalarFn& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto at = [&](double d) {
            Vector y = x;
            y[i] += d;
            return f(y);
        };
        g[i] = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    }
    return g;
}

std::vector<Matrix> fd_partials(const MatrixFn& f, const Vector& x, double h) {
    std::vector<Matrix> out;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        out.push_back((f(xp) - f(xm)) / (2.0 * h));
    }
    return out;
}

std::vector<Matrix> fd_christoffel(const MatrixFn& metric, const Vector& x, double h) {
    const auto m = x.size();
    const Matrix ginv = metric(x).inverse();
    const auto d = fd_partials(metric, x, h);
    std::vector<Matrix> gamma(static_cast<std::size_t>(m), Matrix::Zero(m, m));
    for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                double s = 0.0;
                for (Eigen::Index l = 0; l < m; ++l)
                    s += 0.5 * ginv(k, l) *
                         (d[static_cast<std::size_t>(i)](j, l) + d[static_cast<std::size_t>(j)](i, l) -
                          d[static_cast<std::size_t>(l)](i, j));
                gamma[static_cast<std::size_t>(k)](i, j) = s;
            }
    return gamma;
}

Matrix a_tensor(const Matrix& g, const Matrix& gbar, double epsilon) {
    const double m = static_cast<double>(g.rows());
    return std::pow(gbar.determinant() / g.determinant(), 1.0 / (m + 1.0 - epsilon)) * gbar.inverse() * g;
}

MatrixFn a_field(const pqproj::PQScene& scene) {
    return [&scene](const Vector& x) {
        return a_tensor(scene.g().value_at(x), scene.gbar().value_at(x), scene.epsilon());
    };
}

Vector fd_lambda(const pqproj::PQScene& scene, const Vector& x, double h) {
    const MatrixFn A = a_field(scene);
    const Vector dtr = fd_gradient([&](const Vector& y) { return A(y).trace(); }, x, h);
    return scene.g().value_at(x).inverse() * dtr / (2.0 * (1.0 - scene.epsilon()));
}

double fd_pde_defect(const pqproj::PQScene& scene, const Vector& x, bool with_pq, double h) {
    const auto m = x.size();
    const MatrixFn A = a_field(scene);
    const MatrixFn G = [&scene](const Vector& y) { return scene.g().value_at(y); };
    const Matrix a = A(x);
    const Matrix g = G(x);
    const auto dA = fd_partials(A, x, h);
    const auto gamma = fd_christoffel(G, x, h);
    const Vector L = fd_lambda(scene, x, h);
    const Matrix P = scene.P().value_at(x);
    const Matrix Q = scene.Q().value_at(x);
    const Vector PL = P * L;

    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        // (Gamma_i)^k_l = Gamma^k_il
        Matrix gi(m, m);
        for (Eigen::Index k = 0; k < m; ++k)
            for (Eigen::Index l = 0; l < m; ++l) gi(k, l) = gamma[static_cast<std::size_t>(k)](i, l);
        const Matrix nabla = dA[static_cast<std::size_t>(i)] + gi * a - a * gi;
        const Vector X = Vector::Unit(m, i);
        for (Eigen::Index k = 0; k < m; ++k) {
            const Vector Y = Vector::Unit(m, k);
            Vector rhs = Y.dot(g * X) * L + Y.dot(g * L) * X;
            double scale = std::max({(dA[static_cast<std::size_t>(i)] * Y).norm(), (gi * a * Y).norm(),
                                     (a * gi * Y).norm(), rhs.norm()});
            if (with_pq) {
                const Vector extra = Y.dot(g * Q * X) * PL + Y.dot(g * PL) * (Q * X);
                rhs += extra;
                scale = std::max(scale, extra.norm());
            }
            worst = std::max(worst, (nabla * Y - rhs).norm() / std::max(scale, 1e-300));
        }
    }
    return worst;
}

double fd_connection_defect(const pqproj::PQScene& scene, const Vector& x, double h) {
    const auto m = x.size();
    const MatrixFn G = [&scene](const Vector& y) { return scene.g().value_at(y); };
    const MatrixFn Gb = [&scene](const Vector& y) { return scene.gbar().value_at(y); };
    const auto gamma = fd_christoffel(G, x, h);
    const auto gamma_bar = fd_christoffel(Gb, x, h);
    const Matrix a = a_field(scene)(x);
    const Vector phi = -G(x) * a.inverse() * fd_lambda(scene, x, h);
    const Matrix P = scene.P().value_at(x);
    const Matrix Q = scene.Q().value_at(x);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const Vector X = Vector::Unit(m, i), Y = Vector::Unit(m, j);
            Vector diff(m);
            for (Eigen::Index k = 0; k < m; ++k)
                diff[k] = gamma_bar[static_cast<std::size_t>(k)](i, j) - gamma[static_cast<std::size_t>(k)](i, j);
            const Vector rhs = phi.dot(X) * Y + phi.dot(Y) * X - phi.dot(P * X) * (Q * Y) - phi.dot(P * Y) * (Q * X);
            double scale = std::max({diff.norm(), rhs.norm(), 1e-300});
            for (Eigen::Index k = 0; k < m; ++k)
                scale = std::max({scale, std::abs(gamma[static_cast<std::size_t>(k)](i, j)),
                                  std::abs(gamma_bar[static_cast<std::size_t>(k)](i, j))});
            worst = std::max(worst, (diff - rhs).norm() / scale);
        }
    return worst;
}

Vector eigenvalues(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, false);
    Vector ev = es.eigenvalues().real();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

double direct_integral(const Matrix& g, const Matrix& A, double epsilon, double t, const Vector& X) {
    const Matrix shifted = A - t * Matrix::Identity(A.rows(), A.cols());
    Eigen::FullPivLU<Matrix> lu(shifted);
    return std::pow(std::abs(lu.determinant()), 1.0 / (1.0 - epsilon)) * X.dot(g * lu.solve(X));
}

Matrix singular_tensor(const Matrix& g, const Matrix& A, double rho, double c, int k) {
    const Matrix shifted = A - c * Matrix::Identity(A.rows(), A.cols());
    Eigen::FullPivLU<Matrix> lu(shifted);
    const double sgn = rho < c ? -1.0 : 1.0;
    const Matrix T = sgn * std::pow(std::abs(lu.determinant()), 1.0 / k) * g * lu.inverse();
    return 0.5 * (T + T.transpose());
}

double fd_bracket(const pqproj::PQScene& scene, double t, double s, const Vector& x, const Vector& p, double h) {
    const auto m = x.size();
    auto F = [&](double param, const Vector& y, const Vector& q) {
        const Matrix g = scene.g().value_at(y);
        const Matrix a = a_tensor(g, scene.gbar().value_at(y), scene.epsilon());
        return direct_integral(g, a, scene.epsilon(), param, g.inverse() * q);
    };
    double out = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        Vector xp = x, xm = x, pp = p, pm = p;
        xp[i] += h;
        xm[i] -= h;
        pp[i] += h;
        pm[i] -= h;
        const double dxt = (F(t, xp, p) - F(t, xm, p)) / (2 * h);
        const double dxs = (F(s, xp, p) - F(s, xm, p)) / (2 * h);
        const double dpt = (F(t, x, pp) - F(t, x, pm)) / (2 * h);
        const double dps = (F(s, x, pp) - F(s, x, pm)) / (2 * h);
        out += dxt * dps - dpt * dxs;
    }
    return out;
}

pqproj::SceneSpec diagonal_a_scene(const std::string& a, const std::string& b, std::vector<double> lo,
                                   std::vector<double> hi) {
    pqproj::SceneSpec s;
    s.name = "diagonal_a";
    s.coords = {"x", "y"};
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    s.epsilon = 0.0;
    s.g = {{"1", "0"}, {"0", "1"}};
    s.gbar = {{"1/((" + a + ")^2*(" + b + "))", "0"}, {"0", "1/((" + a + ")*(" + b + ")^2)"}};
    s.P = pqproj::zero_expr_matrix(2);
    s.Q = pqproj::zero_expr_matrix(2);
    return s;
}

std::vector<CorpusItem> expression_corpus() {
    std::vector<CorpusItem> out;
    auto add = [&out](const pqproj::SceneSpec& s) {
        const std::pair<const char*, const pqproj::ExprMatrix*> fields[] = {
            {"g", &s.g}, {"gbar", &s.gbar}, {"P", &s.P}, {"Q", &s.Q}};
        for (const auto& [label, mat] : fields)
            for (std::size_t i = 0; i < mat->size(); ++i)
                for (std::size_t j = 0; j < (*mat)[i].size(); ++j)
                    out.push_back({s.name + "/" + label + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                   (*mat)[i][j], s.coords, s.lo, s.hi});
    };
    for (const auto& e : pqproj::standard_catalog()) add(e.scene.spec());
    for (const auto& n : pqproj::negative_catalog()) add(n.spec);
    return out;
}

double jet_fd_disagreement(const pqproj::ScalarExpr& e, const Vector& x, double box_scale) {
    const pqproj::Jet jet = pqproj::eval_jet(e, x);
    const Vector fd = fd_gradient4([&e](const Vector& y) { return pqproj::eval(e, y); }, x, 1e-3 * box_scale);
    const double scale = jet.gradient.cwiseAbs().maxCoeff() + std::abs(jet.value) / box_scale;
    if (scale == 0.0) return (jet.gradient - fd).cwiseAbs().maxCoeff();
    return (jet.gradient - fd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oracle
