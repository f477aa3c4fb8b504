#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pqproj/error.hpp"
#include "pqproj/spectra.hpp"

namespace pqproj {

/// A constructed scene that passed its defining residual gates.
struct CatalogEntry {
    std::string name;
    PQScene scene;
    Verdict expected = Verdict::inconsistent;
    std::string provenance;
    /// Parameter choice collapses the pair to an affine one.
    bool degenerate = false;
    std::vector<Equation> gates;
    std::vector<ResidualReport> gate_reports;
    /// Closed-form A-field when the construction starts from one.
    std::optional<ExprMatrix> a_field;
};

/// A construction whose defining residual failed; carries the failing reports.
class GateError : public Error {
public:
    GateError(const std::string& message, std::vector<ResidualReport> reports)
        : Error(message), reports_(std::move(reports)) {}
    const std::vector<ResidualReport>& reports() const noexcept { return reports_; }

private:
    std::vector<ResidualReport> reports_;
};

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct GateOptions {
    SampleOptions sampling;
    double tolerance = kDefaultResidualTolerance;
};

/// Validates the scene, runs every gate residual and throws GateError when any fails.
CatalogEntry admit(SceneSpec spec, std::vector<Equation> gates, Verdict expected, std::string provenance,
                   const GateOptions& options = {});

/// g = Id, gbar = c g on the unit box, P = Q = 0, eps = 0.
CatalogEntry make_affine_pair(int m, double c, const GateOptions& options = {});

/// g = (X - Y)(dx^2 + dy^2), gbar = (1/Y - 1/X)(dx^2/X + dy^2/Y). Throws
/// std::invalid_argument unless X depends on x only, Y on y only and X > Y > 0 on the box.
CatalogEntry make_dini_pair(const std::string& X, const std::string& Y, const Box& box,
                            const GateOptions& options = {});
CatalogEntry make_dini_pair(const GateOptions& options = {});

/// Round sphere in the stereographic chart with A the tangential restriction of
/// the constant form C, gbar reconstructed from A with eps = 0.
CatalogEntry make_sphere_projective_pair(const Matrix& C, const Box& box, const GateOptions& options = {});
CatalogEntry make_sphere_projective_pair(const Matrix& C, const GateOptions& options = {});
Box default_sphere_box();

/// Fubini-Study metric of CP^1 and its pullback under z -> lambda z, P = Q = J, eps = -1.
/// Throws std::invalid_argument for lambda < 1; lambda = 1 is the degenerate affine pair.
CatalogEntry make_cp1_hprojective_pair(double lambda, const Box& box, const GateOptions& options = {});
CatalogEntry make_cp1_hprojective_pair(double lambda = 2.0, const GateOptions& options = {});

/// Entries covering the affine, eps = 0 and eps = -1 regimes.
std::vector<CatalogEntry> standard_catalog(const GateOptions& options = {});

/// A deliberately broken scene and the gate it must fail.
struct NegativeEntry {
    std::string name;
    SceneSpec spec;
    Equation failing_gate = Equation::main;
    std::string description;
};

/// Dini pair with gbar_11 scaled by (1 + y/100); CP^1 metrics claiming eps = -2 with P = J, Q = 2J.
std::vector<NegativeEntry> negative_catalog();

/// Scene with eps = 1, which validation must reject.
SceneSpec excluded_epsilon_scene();

}  // namespace pqproj
