#pragma once

#include <string>
#include <vector>

#include "pqproj/pq_struct.hpp"

namespace pqproj {

struct SpectrumOptions {
    /// Adjacent eigenvalues closer than cluster_rel_tol * (1 + spectral radius)
    /// belong to one cluster.
    double cluster_rel_tol = 1e-7;
};

struct Cluster {
    double value = 0.0;
    int multiplicity = 0;
    std::vector<int> members;
};

/// Eigenstructure of a g-self-adjoint (1,1)-tensor at one point.
struct Spectrum {
    Vector eigenvalues;    ///< ascending
    Matrix eigenvectors;   ///< columns, g-orthonormal: V^T G V = Id
    std::vector<Cluster> clusters;
    double radius = 0.0;   ///< max |eigenvalue|
    double cluster_tolerance = 0.0;

    int cluster_of(int index) const;
    int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Solves (G A) v = mu G v. Throws SingularMatrixError when G is not positive definite.
Spectrum decompose(const Matrix& g, const Matrix& A, const SpectrumOptions& options = {});
Spectrum eigen_at(const PQScene& scene, const Vector& x, const SpectrumOptions& options = {});

constexpr double kDefaultSimpleGap = 1e-5;

/// g-gradient of the eigenvalue with ascending index `branch`, from the
/// first-order perturbation formula d mu = v^T (d(GA) - mu dG) v / v^T G v.
/// Throws ClusteredEigenvalueError when a neighbour is within `simple_gap`.
Vector eigenvalue_gradient(const MatrixJet& g, const MatrixJet& A, int branch, double simple_gap = kDefaultSimpleGap);
Vector eigenvalue_gradient_at(const PQScene& scene, const Vector& x, int branch,
                              double simple_gap = kDefaultSimpleGap);

// ---------------------------------------------------------------------------
// Gradient / eigenvector lemma

struct EigenvectorLemmaOptions {
    double orthogonality_tol = 1e-7;
    double eigenspace_tol = 1e-6;
    double simple_gap = kDefaultSimpleGap;
    /// Also evaluate the covariant identity
    /// (A - mu)nabla_X Y = X(mu)Y - g(Y,X)L - g(Y,L)X - g(Y,QX)PL - g(Y,PL)QX
    /// for g-normalised eigenvector fields Y and coordinate fields X.
    bool covariant_identity = false;
    double covariant_tol = 1e-7;
    SpectrumOptions spectrum;
};

struct EigenvectorLemmaReport {
    int points_total = 0;
    int points_checked = 0;   ///< points with at least one simple eigenvalue
    double max_orthogonality = 0.0;  ///< max |g(grad mu_i, v_j)| / scale
    double max_eigenspace = 0.0;     ///< max |(A - mu_i) grad mu_i| / (|grad mu_i| (1 + radius))
    int orthogonality_failures = 0;
    int eigenspace_failures = 0;     ///< points where check (b) fails
    double max_covariant_defect = 0.0;
    int covariant_failures = 0;
    bool vacuous = false;
    bool passed = false;
    EigenvectorLemmaOptions options;
};

/// (a) grad mu_i is g-orthogonal to the other eigenvectors; (b) grad mu_i lies in
/// ker(A - mu_i). Only simple eigenvalues are checked. When no sample has a
/// simple eigenvalue the check passes vacuously if Lambda vanishes everywhere
/// and throws ClusteredEigenvalueError otherwise.
EigenvectorLemmaReport lemma_eigenvectors_check(const PQScene& scene, const std::vector<Vector>& points,
                                                const EigenvectorLemmaOptions& options = {});

// ---------------------------------------------------------------------------
// Multiplicity lemma and eigenvalue branches

struct DimensionLemmaOptions {
    SpectrumOptions spectrum;
    /// Branch is constant when max - min <= const_rel_tol * (1 + spectral radius).
    double const_rel_tol = 1e-6;
    /// Samples whose adjacent eigenvalue gaps fall between the cluster
    /// tolerance and crossing_rel_tol * (1 + radius) are ambiguous and skipped.
    double crossing_rel_tol = 1e-4;
    /// Restricted g(P.,.) has full rank when sigma_min > rank_rel_tol * scale.
    double rank_rel_tol = 1e-8;
};

struct BranchSummary {
    int index = 0;
    double min = 0.0;
    double max = 0.0;
    double variation = 0.0;
    bool constant = true;
    int multiplicity_min = 0;
    int multiplicity_max = 0;
    int multiplicity_failures = 0;
};

struct DimensionLemmaReport {
    int points_total = 0;
    int points_used = 0;
    int points_skipped = 0;
    int max_distinct_eigenvalues = 0;
    double expected_multiplicity = 1.0;  ///< 1 - eps
    std::vector<BranchSummary> branches;
    bool eigenspace_checks = false;      ///< eps != 0: even dimension and rank of g(P.,.)
    int odd_eigenspaces = 0;
    int rank_failures = 0;
    double min_rank_ratio = 0.0;         ///< min sigma_min / scale over eigenspaces
    double const_tolerance = 0.0;
    double cluster_tolerance = 0.0;
    bool vacuous = false;
    bool passed = false;
    DimensionLemmaOptions options;
};

/// Follows the sorted eigenvalue branches along `path` (consecutive points
/// should be neighbours) and checks that every non-constant branch has
/// multiplicity 1 - eps; for eps != 0 also that every eigenspace is even
/// dimensional with g(P.,.) non-degenerate on it.
DimensionLemmaReport lemma_dim_check(const PQScene& scene, const std::vector<Vector>& path,
                                     const DimensionLemmaOptions& options = {});

/// Per-point spectra along a path with branch statistics.
struct EigenvalueTrace {
    std::vector<Vector> points;
    std::vector<Spectrum> spectra;
    std::vector<bool> skipped;
    std::vector<BranchSummary> branches;
};

EigenvalueTrace trace_branches(const PQScene& scene, const std::vector<Vector>& path,
                               const DimensionLemmaOptions& options = {});

// ---------------------------------------------------------------------------
// Classification

enum class Verdict { affine, projective_eps0, pq_eps_class, inconsistent };

struct Evidence {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Classification {
    Verdict verdict = Verdict::inconsistent;
    double epsilon = 0.0;
    std::vector<Evidence> evidence;

    std::string label() const;
};

std::string verdict_label(Verdict v, double epsilon);

struct ClassifyOptions {
    SampleOptions sampling;
    /// Cells per axis of the branch-tracing grid; 0 picks about sampling.samples points.
    int grid = 0;
    double residual_tol = kDefaultResidualTolerance;
    double affine_tol = 1e-8;
    double p_lambda_tol = 1e-8;
    double epsilon_integer_tol = 1e-9;
    DimensionLemmaOptions dimension;
};

/// affine when Lambda vanishes at every sample; for eps = 0 projective_eps0
/// when P Lambda = 0 and the projective residual passes; otherwise
/// pq_eps_class(eps) when eps is an odd negative integer and the multiplicity
/// lemma holds. Any failed expectation yields inconsistent.
Classification classify_pair(const PQScene& scene, const ClassifyOptions& options = {});

int default_grid(int dimension, int samples);

}  // namespace pqproj
