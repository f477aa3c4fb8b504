#pragma once

#include <optional>
#include <vector>

#include "pqproj/spectra.hpp"

namespace pqproj {

/// Closer than this to the spectrum of A, F_t refuses to evaluate.
constexpr double kSpectrumProximity = 1e-8;
/// Largest admissible max|mu - t| / min|mu - t|.
constexpr double kShiftConditionLimit = 1e12;
/// Eigenvalues outside the c-cluster must stay this far from c.
constexpr double kClusterSeparation = 1e-6;

struct IntegralValue {
    double value = 0.0;
    /// Sum of the absolute eigenframe contributions; the scale of roundoff in value.
    double magnitude = 0.0;
};

/// F_t(X) = |det(A - t)|^(1/(1-eps)) g((A - t)^-1 X, X).
/// Throws SpectrumProximityError when t is within 1e-8 of the spectrum or
/// A - t is worse conditioned than 1e12, std::invalid_argument for eps = 1.
IntegralValue quadratic_integral(const Matrix& g, const Matrix& A, double epsilon, double t, const Vector& X);

enum class ExponentMode { normal, diagnostic };

/// Eigenframe form of the smooth part of F_c near the hypersurface where an
/// eigenvalue cluster rho crosses c: T = prod_{j outside} |mu_j - c|^(1/k) *
/// sum_j w_j (G v_j)(G v_j)^T with w_j = 1 inside the cluster and
/// (rho - c)/(mu_j - c) outside.
struct RegularizedTensor {
    Matrix T;                 ///< covariant components T_ij
    double rho = 0.0;         ///< value of the c-cluster
    int multiplicity = 0;     ///< size of the c-cluster
    double det_abs = 0.0;     ///< |det(A - c)|
    double prefactor = 0.0;
    Spectrum spectrum;
};

/// Throws SpectrumProximityError when an eigenvalue outside the c-cluster is
/// within 1e-6 of c, std::invalid_argument when the cluster is larger than k
/// (allowed in diagnostic mode) or k < 1.
RegularizedTensor regularized_tensor(const Matrix& g, const Matrix& A, double c, int k,
                                     ExponentMode mode = ExponentMode::normal);

struct RegularizedValue {
    double value = 0.0;       ///< f_c T(X, X) with f_c = sgn(rho - c) |det(A - c)|^(1/(1-eps) - 1/k)
    double magnitude = 0.0;
    double side = 1.0;        ///< sgn(rho - c), +1 on the hypersurface itself
    double smooth = 0.0;      ///< side * value; continuous across the hypersurface when the exponent is 0
    double exponent = 0.0;    ///< 1/(1-eps) - 1/k
    double tensor_value = 0.0;  ///< T(X, X)
};

/// Regularized integral F_c. In normal mode the exponent 1/(1-eps) - 1/k must
/// vanish; diagnostic mode evaluates any exponent and any cluster size.
RegularizedValue regularized_integral(const Matrix& g, const Matrix& A, double epsilon, double c, int k,
                                      const Vector& X, ExponentMode mode = ExponentMode::normal);

/// One member of the family of integrals to monitor.
struct IntegralSpec {
    double t = 0.0;
    bool regularized = false;
    int k = 1;                ///< regularization order, used when regularized
    ExponentMode mode = ExponentMode::normal;
};

struct DriftOptions {
    double budget_per_unit_time = 1e-6;
    double regularized_budget_per_unit_time = 1e-5;
};

struct IntegralSeries {
    IntegralSpec spec;
    /// F_t for plain members, sgn(rho - c) F_c for regularized ones.
    std::vector<double> values;
    std::vector<double> magnitudes;
    double max_drift = 0.0;
    double scale = 0.0;
    double relative_drift = 0.0;
    double budget = 0.0;
    int side_changes = 0;     ///< crossings of the hypersurface rho = c
    bool passed = false;
};

struct ConservationReport {
    std::vector<IntegralSeries> series;
    std::vector<double> energies;
    double energy_relative_drift = 0.0;
    double duration = 0.0;
    bool passed = false;
};

/// Evaluates every integral along the trajectory. Drift is max |F(s) - F(0)|
/// relative to the largest magnitude seen, and must stay under budget * duration.
ConservationReport conservation_report(const PQScene& scene, const Trajectory& traj,
                                       const std::vector<IntegralSpec>& specs, const DriftOptions& options = {});

struct BracketOptions {
    /// Central-difference step in x, relative to the largest side of the chart box.
    double fd_rel_step = 1e-6;
    /// t and s must be this far from the spectrum at x.
    double separation = 1e-6;
};

struct BracketValue {
    double value = 0.0;
    /// |dF_t| |dF_s| over the full (x, p) gradients.
    double scale = 0.0;
    double relative() const;
};

/// Canonical Poisson bracket {F_t, F_s} of the momentum forms
/// F_t(x, p) = |det(A - t)|^(1/(1-eps)) p^T (A - t)^-1 g^-1 p. p-derivatives are
/// exact, x-derivatives central differences. t == s returns exactly 0.
BracketValue poisson_bracket_at(const PQScene& scene, double t, double s, const Vector& x, const Vector& p,
                                const BracketOptions& options = {});

/// F_c on a geodesic as it approaches the hypersurface rho = c.
struct ApproachProbe {
    double crossing_time = 0.0;
    std::vector<double> time_to_crossing;
    std::vector<double> rho_gap;      ///< |rho - c|
    std::vector<double> values;       ///< F_c
    double far_value = 0.0;           ///< F_c at the start of the trajectory
};

/// Locates the first time the cluster nearest c crosses c (bisection on RK4
/// sub-steps) and evaluates F_c at `count` times 10^-j closer to it.
/// Returns nullopt when the trajectory never crosses.
std::optional<ApproachProbe> probe_approach(const PQScene& scene, const Trajectory& traj, double c, int k,
                                            ExponentMode mode, int count = 10);

}  // namespace pqproj
