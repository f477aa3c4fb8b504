#include "pqproj/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pqproj/error.hpp"
#include "pqproj/sampling.hpp"

namespace pqproj {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Smallest distance from eigenvalue `i` to any other eigenvalue.
double neighbour_gap(const Vector& ev, int i) {
    double gap = std::numeric_limits<double>::infinity();
    if (i > 0) gap = std::min(gap, ev[i] - ev[i - 1]);
    if (i + 1 < ev.size()) gap = std::min(gap, ev[i + 1] - ev[i]);
    return gap;
}

// d(GA) along coordinate i, symmetrised: G A is symmetric for g-self-adjoint A.
Matrix d_ga(const MatrixJet& g, const MatrixJet& A, int i) {
    const auto k = static_cast<std::size_t>(i);
    return symmetric_part(g.partials[k] * A.value + g.value * A.partials[k]);
}

// Differential of the eigenvalue with eigenvector v (V^T G V = 1).
Vector eigenvalue_differential(const MatrixJet& g, const MatrixJet& A, double mu, const Vector& v) {
    const int m = g.rows();
    Vector d(m);
    for (int i = 0; i < m; ++i)
        d[i] = v.dot((d_ga(g, A, i) - mu * g.partials[static_cast<std::size_t>(i)]) * v);
    return d;
}

double g_norm(const Matrix& G, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(G * v))); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

int Spectrum::cluster_of(int index) const {
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (int member : clusters[c].members)
            if (member == index) return static_cast<int>(c);
    throw std::out_of_range("Spectrum::cluster_of: index out of range");
}

Spectrum decompose(const Matrix& g, const Matrix& A, const SpectrumOptions& options) {
    // The generalized solver does not report a failed Cholesky factor of g.
    if (Eigen::LLT<Matrix>(g).info() != Eigen::Success)
        throw SingularMatrixError("decompose: metric is not positive definite");
    const Matrix K = symmetric_part(g * A);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(K, g);
    if (solver.info() != Eigen::Success)
        throw SingularMatrixError("decompose: metric is not positive definite");
    Spectrum s;
    s.eigenvalues = solver.eigenvalues();
    s.eigenvectors = solver.eigenvectors();
    s.radius = s.eigenvalues.size() == 0 ? 0.0 : s.eigenvalues.cwiseAbs().maxCoeff();
    s.cluster_tolerance = options.cluster_rel_tol * (1.0 + s.radius);

    const int m = s.size();
    for (int i = 0; i < m; ++i) {
        if (i == 0 || s.eigenvalues[i] - s.eigenvalues[i - 1] > s.cluster_tolerance) s.clusters.push_back({});
        s.clusters.back().members.push_back(i);
    }
    for (auto& c : s.clusters) {
        c.multiplicity = static_cast<int>(c.members.size());
        double sum = 0.0;
        for (int i : c.members) sum += s.eigenvalues[i];
        c.value = sum / c.multiplicity;
    }
    return s;
}

Spectrum eigen_at(const PQScene& scene, const Vector& x, const SpectrumOptions& options) {
    return decompose(scene.g().value_at(x), compute_A_at(scene, x), options);
}

Vector eigenvalue_gradient(const MatrixJet& g, const MatrixJet& A, int branch, double simple_gap) {
    const Spectrum s = decompose(g.value, A.value);
    if (branch < 0 || branch >= s.size()) throw std::out_of_range("eigenvalue_gradient: branch index out of range");
    const double gap = neighbour_gap(s.eigenvalues, branch);
    if (!(gap > simple_gap))
        throw ClusteredEigenvalueError("eigenvalue " + fmt(s.eigenvalues[branch]) + " is within " + fmt(gap) +
                                       " of another eigenvalue; its gradient is not defined");
    const Vector v = s.eigenvectors.col(branch);
    const Vector d = eigenvalue_differential(g, A, s.eigenvalues[branch], v) / v.dot(g.value * v);
    return gradient(g.value, d);
}

Vector eigenvalue_gradient_at(const PQScene& scene, const Vector& x, int branch, double simple_gap) {
    const MatrixJet g = scene.g().jet_at(x);
    const MatrixJet A = compute_A(g, scene.gbar().jet_at(x), scene.epsilon());
    return eigenvalue_gradient(g, A, branch, simple_gap);
}

// ---------------------------------------------------------------------------

namespace {

// Defect of (A - mu) nabla_X Y = X(mu)Y - g(Y,X)L - g(Y,L)X - g(Y,QX)PL - g(Y,PL)QX
// for the g-normalised eigenvector field Y of the simple eigenvalue `i`, over
// coordinate fields X. Returns the worst defect relative to its largest term.
double covariant_identity_defect(const PairPoint& p, const Spectrum& s, int i) {
    const int m = p.g.rows();
    const Matrix& G = p.g.value;
    const double mu = s.eigenvalues[i];
    const Vector y = s.eigenvectors.col(i);
    const Vector L = p.lambda;
    const Vector PL = p.P * L;
    const Vector dmu = eigenvalue_differential(p.g, p.A, mu, y);
    const Matrix shifted = p.A.value - mu * Matrix::Identity(m, m);

    double worst = 0.0;
    for (int a = 0; a < m; ++a) {
        const auto ka = static_cast<std::size_t>(a);
        const Matrix dK = d_ga(p.g, p.A, a);
        const Matrix& dG = p.g.partials[ka];
        // Eigenvector derivative: resolvent on the complement plus the
        // normalisation term along y itself.
        Vector dy = -0.5 * y.dot(dG * y) * y;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const Vector vj = s.eigenvectors.col(j);
            dy += (vj.dot((dK - mu * dG) * y) / (mu - s.eigenvalues[j])) * vj;
        }
        const Vector nabla = dy + p.gamma.slice(a) * y;
        const Vector ea = Vector::Unit(m, a);
        const Vector lhs = shifted * nabla;
        const Vector t0 = dmu[a] * y;
        const Vector t1 = (y.dot(G * ea)) * L;
        const Vector t2 = (y.dot(G * L)) * ea;
        const Vector t3 = (y.dot(G * p.Q.col(a))) * PL;
        const Vector t4 = (y.dot(G * PL)) * p.Q.col(a);
        const Vector defect = lhs - (t0 - t1 - t2 - t3 - t4);
        const double scale = std::max({lhs.norm(), t0.norm(), t1.norm(), t2.norm(), t3.norm(), t4.norm(),
                                       std::numeric_limits<double>::epsilon()});
        worst = std::max(worst, defect.norm() / scale);
    }
    return worst;
}

}  // namespace

EigenvectorLemmaReport lemma_eigenvectors_check(const PQScene& scene, const std::vector<Vector>& points,
                                                const EigenvectorLemmaOptions& options) {
    EigenvectorLemmaReport r;
    r.options = options;
    r.points_total = static_cast<int>(points.size());
    double max_lambda_ratio = 0.0;

    for (const Vector& x : points) {
        const PairPoint p = evaluate_pair(scene, x);
        const Matrix& G = p.g.value;
        const Spectrum s = decompose(G, p.A.value, options.spectrum);
        const int m = s.size();

        std::vector<int> simple;
        for (int i = 0; i < m; ++i)
            if (neighbour_gap(s.eigenvalues, i) > options.simple_gap) simple.push_back(i);
        if (simple.empty()) {
            max_lambda_ratio = std::max(max_lambda_ratio, g_norm(G, p.lambda) / (1.0 + s.radius));
            continue;
        }
        ++r.points_checked;

        std::vector<Vector> grads(static_cast<std::size_t>(m));
        double grad_max = 0.0;
        for (int i : simple) {
            const Vector v = s.eigenvectors.col(i);
            grads[static_cast<std::size_t>(i)] =
                gradient(G, eigenvalue_differential(p.g, p.A, s.eigenvalues[i], v));
            grad_max = std::max(grad_max, g_norm(G, grads[static_cast<std::size_t>(i)]));
        }
        // Check (a) is relative to the largest gradient at the point; check (b)
        // to the gradient itself, floored so that constant branches (whose
        // computed gradient is pure roundoff) do not register.
        const double scale_a = 1.0 + grad_max;
        const double floor_b = 1e-8 * scale_a;

        bool orth_fail = false;
        bool eig_fail = false;
        bool cov_fail = false;
        for (int i : simple) {
            const Vector& gi = grads[static_cast<std::size_t>(i)];
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                const double rel = std::abs(gi.dot(G * s.eigenvectors.col(j))) / scale_a;
                r.max_orthogonality = std::max(r.max_orthogonality, rel);
                if (rel > options.orthogonality_tol) orth_fail = true;
            }
            const Vector shifted = p.A.value * gi - s.eigenvalues[i] * gi;
            const double rel_b = g_norm(G, shifted) / (std::max(g_norm(G, gi), floor_b) * (1.0 + s.radius));
            r.max_eigenspace = std::max(r.max_eigenspace, rel_b);
            if (rel_b > options.eigenspace_tol) eig_fail = true;

            if (options.covariant_identity) {
                const double d = covariant_identity_defect(p, s, i);
                r.max_covariant_defect = std::max(r.max_covariant_defect, d);
                if (d > options.covariant_tol) cov_fail = true;
            }
        }
        r.orthogonality_failures += orth_fail ? 1 : 0;
        r.eigenspace_failures += eig_fail ? 1 : 0;
        r.covariant_failures += cov_fail ? 1 : 0;
    }

    if (r.points_checked == 0) {
        if (max_lambda_ratio > 1e-8)
            throw ClusteredEigenvalueError(
                "lemma_eigenvectors_check: no sample has a simple eigenvalue, so the gradient checks cannot run");
        r.vacuous = true;
        r.passed = true;
        return r;
    }
    r.passed = r.orthogonality_failures == 0 && r.eigenspace_failures == 0 && r.covariant_failures == 0;
    return r;
}

// ---------------------------------------------------------------------------

EigenvalueTrace trace_branches(const PQScene& scene, const std::vector<Vector>& path,
                               const DimensionLemmaOptions& options) {
    EigenvalueTrace t;
    t.points = path;
    const int m = scene.dimension();
    t.branches.resize(static_cast<std::size_t>(m));
    for (int b = 0; b < m; ++b) {
        auto& br = t.branches[static_cast<std::size_t>(b)];
        br.index = b;
        br.min = std::numeric_limits<double>::infinity();
        br.max = -std::numeric_limits<double>::infinity();
        br.multiplicity_min = std::numeric_limits<int>::max();
        br.multiplicity_max = 0;
    }
    for (const Vector& x : path) {
        Spectrum s = eigen_at(scene, x, options.spectrum);
        const double cross = options.crossing_rel_tol * (1.0 + s.radius);
        bool ambiguous = false;
        for (int i = 1; i < s.size(); ++i) {
            const double gap = s.eigenvalues[i] - s.eigenvalues[i - 1];
            if (gap > s.cluster_tolerance && gap <= cross) ambiguous = true;
        }
        t.skipped.push_back(ambiguous);
        if (!ambiguous) {
            for (int b = 0; b < m; ++b) {
                auto& br = t.branches[static_cast<std::size_t>(b)];
                br.min = std::min(br.min, s.eigenvalues[b]);
                br.max = std::max(br.max, s.eigenvalues[b]);
                const int mult = s.clusters[static_cast<std::size_t>(s.cluster_of(b))].multiplicity;
                br.multiplicity_min = std::min(br.multiplicity_min, mult);
                br.multiplicity_max = std::max(br.multiplicity_max, mult);
            }
        }
        t.spectra.push_back(std::move(s));
    }
    double radius = 0.0;
    for (std::size_t n = 0; n < t.spectra.size(); ++n)
        if (!t.skipped[n]) radius = std::max(radius, t.spectra[n].radius);
    const double tol = options.const_rel_tol * (1.0 + radius);
    for (auto& br : t.branches) {
        if (br.max < br.min) {  // every sample skipped
            br.min = br.max = 0.0;
            br.multiplicity_min = br.multiplicity_max = 0;
            continue;
        }
        br.variation = br.max - br.min;
        br.constant = br.variation <= tol;
    }
    return t;
}

DimensionLemmaReport lemma_dim_check(const PQScene& scene, const std::vector<Vector>& path,
                                     const DimensionLemmaOptions& options) {
    DimensionLemmaReport r;
    r.options = options;
    r.points_total = static_cast<int>(path.size());
    r.expected_multiplicity = 1.0 - scene.epsilon();
    r.eigenspace_checks = scene.epsilon() != 0.0;

    EigenvalueTrace t = trace_branches(scene, path, options);
    double radius = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();

    for (std::size_t n = 0; n < t.spectra.size(); ++n) {
        if (t.skipped[n]) {
            ++r.points_skipped;
            continue;
        }
        ++r.points_used;
        const Spectrum& s = t.spectra[n];
        radius = std::max(radius, s.radius);
        r.cluster_tolerance = std::max(r.cluster_tolerance, s.cluster_tolerance);
        r.max_distinct_eigenvalues = std::max(r.max_distinct_eigenvalues, static_cast<int>(s.clusters.size()));

        if (r.eigenspace_checks) {
            const Vector& x = path[n];
            const Matrix G = scene.g().value_at(x);
            const Matrix W = s.eigenvectors.transpose() * G * scene.P().value_at(x) * s.eigenvectors;
            const double scale = std::max(W.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(W).singularValues()[0], kTiny);
            for (const Cluster& c : s.clusters) {
                if (c.multiplicity % 2 != 0) ++r.odd_eigenspaces;
                Matrix block(c.multiplicity, c.multiplicity);
                for (int a = 0; a < c.multiplicity; ++a)
                    for (int b = 0; b < c.multiplicity; ++b)
                        block(a, b) = W(c.members[static_cast<std::size_t>(a)], c.members[static_cast<std::size_t>(b)]);
                const Vector sv = Eigen::JacobiSVD<Matrix>(block).singularValues();
                const double ratio = sv[sv.size() - 1] / scale;
                min_ratio = std::min(min_ratio, ratio);
                if (!(ratio > options.rank_rel_tol)) ++r.rank_failures;
            }
        }
    }
    r.const_tolerance = options.const_rel_tol * (1.0 + radius);
    r.min_rank_ratio = r.eigenspace_checks && std::isfinite(min_ratio) ? min_ratio : 0.0;

    // Multiplicity of each non-constant branch at every used sample.
    for (auto& br : t.branches) {
        if (!br.constant) {
            for (std::size_t n = 0; n < t.spectra.size(); ++n) {
                if (t.skipped[n]) continue;
                const Spectrum& s = t.spectra[n];
                const int mult = s.clusters[static_cast<std::size_t>(s.cluster_of(br.index))].multiplicity;
                if (std::abs(mult - r.expected_multiplicity) > 1e-9) ++br.multiplicity_failures;
            }
        }
        r.branches.push_back(br);
    }

    if (r.points_used == 0) {
        r.vacuous = true;
        r.passed = false;
        return r;
    }
    bool ok = r.odd_eigenspaces == 0 && r.rank_failures == 0;
    for (const auto& br : r.branches) ok = ok && br.multiplicity_failures == 0;
    r.passed = ok;
    return r;
}

// ---------------------------------------------------------------------------

std::string verdict_label(Verdict v, double epsilon) {
    switch (v) {
        case Verdict::affine: return "affine";
        case Verdict::projective_eps0: return "projective_eps0";
        case Verdict::pq_eps_class: {
            std::ostringstream os;
            os << "pq_eps_class(" << static_cast<long long>(std::llround(epsilon)) << ")";
            return os.str();
        }
        case Verdict::inconsistent: return "inconsistent";
    }
    return "inconsistent";
}

std::string Classification::label() const { return verdict_label(verdict, epsilon); }

int default_grid(int dimension, int samples) {
    const double per = std::pow(static_cast<double>(std::max(samples, 1)), 1.0 / std::max(dimension, 1));
    return std::max(4, static_cast<int>(std::lround(per)));
}

namespace {

// |Lambda|_g against the size roundoff can give it: Lambda is built from
// logarithmic derivatives of both metrics scaled by A.
double lambda_ratio(const PairPoint& p) {
    double dlog = 0.0;
    const Matrix ginv = p.g.value.inverse();
    const Matrix gbinv = p.gbar.value.inverse();
    for (std::size_t i = 0; i < p.g.partials.size(); ++i)
        dlog = std::max({dlog, (ginv * p.g.partials[i]).norm(), (gbinv * p.gbar.partials[i]).norm()});
    const double scale = (1.0 + p.A.value.norm()) * (1.0 + dlog);
    return g_norm(p.g.value, p.lambda) / scale;
}

}  // namespace

Classification classify_pair(const PQScene& scene, const ClassifyOptions& options) {
    Classification c;
    c.epsilon = scene.epsilon();
    const auto points = stratified_samples(scene.chart(), options.sampling.samples, options.sampling.seed);

    const ResidualReport pde = residual_report(scene, Equation::main, points, options.residual_tol);
    c.evidence.push_back({"pde_residual", pde.passed, pde.max_relative, options.residual_tol,
                          "max relative residual of the main equation"});

    double lambda_max = 0.0;
    double p_lambda_max = 0.0;
    for (const Vector& x : points) {
        const PairPoint p = evaluate_pair(scene, x);
        lambda_max = std::max(lambda_max, lambda_ratio(p));
        const double ln = g_norm(p.g.value, p.lambda);
        const double denom = std::max(frobenius(p.P) * ln, kTiny);
        p_lambda_max = std::max(p_lambda_max, ln == 0.0 ? 0.0 : g_norm(p.g.value, p.P * p.lambda) / denom);
    }
    const bool lambda_zero = lambda_max <= options.affine_tol;
    c.evidence.push_back({"lambda_vanishes", lambda_zero, lambda_max, options.affine_tol,
                          "max |Lambda|_g relative to its roundoff scale"});

    const int grid = options.grid > 0 ? options.grid : default_grid(scene.dimension(), options.sampling.samples);
    const DimensionLemmaReport dim = lemma_dim_check(scene, grid_path(scene.chart(), grid), options.dimension);
    bool all_constant = dim.points_used > 0;
    for (const auto& br : dim.branches) all_constant = all_constant && br.constant;
    c.evidence.push_back({"branches_constant", all_constant, 0.0, dim.const_tolerance,
                          "every eigenvalue branch is constant along the grid path"});

    if (!pde.passed) {
        c.verdict = Verdict::inconsistent;
        return c;
    }
    if (lambda_zero || all_constant) {
        c.verdict = lambda_zero && all_constant ? Verdict::affine : Verdict::inconsistent;
        return c;
    }

    const std::string dim_detail = "non-constant branches have multiplicity " + fmt(dim.expected_multiplicity) +
                                   " (" + std::to_string(dim.points_used) + " samples used, " +
                                   std::to_string(dim.points_skipped) + " skipped)";
    if (std::abs(c.epsilon) <= options.epsilon_integer_tol) {
        const bool p_ok = p_lambda_max <= options.p_lambda_tol;
        c.evidence.push_back({"p_lambda_vanishes", p_ok, p_lambda_max, options.p_lambda_tol,
                              "max |P Lambda|_g / (|P| |Lambda|_g)"});
        const ResidualReport proj = residual_report(scene, Equation::projective, points, options.residual_tol);
        c.evidence.push_back({"projective_residual", proj.passed, proj.max_relative, options.residual_tol,
                              "max relative residual of the projective equation"});
        c.evidence.push_back({"multiplicity_lemma", dim.passed, dim.expected_multiplicity, 0.0, dim_detail});
        c.verdict = p_ok && proj.passed && dim.passed ? Verdict::projective_eps0 : Verdict::inconsistent;
        return c;
    }

    const double nearest = std::round(c.epsilon);
    const bool odd_negative = std::abs(c.epsilon - nearest) <= options.epsilon_integer_tol && nearest < 0.0 &&
                              static_cast<long long>(nearest) % 2 != 0;
    c.evidence.push_back({"epsilon_odd_negative", odd_negative, c.epsilon, options.epsilon_integer_tol,
                          "eps is an odd negative integer"});
    c.evidence.push_back({"multiplicity_lemma", dim.passed, dim.expected_multiplicity, 0.0, dim_detail});
    c.verdict = odd_negative && dim.passed ? Verdict::pq_eps_class : Verdict::inconsistent;
    return c;
}

}  // namespace pqproj
