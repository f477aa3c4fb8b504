#include "pqproj/integrals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pqproj/error.hpp"

namespace pqproj {

namespace {

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

void require_epsilon(double epsilon) {
    if (epsilon == 1.0) throw std::invalid_argument("integrals are undefined for eps = 1");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

// Distance-ordered: the eigenvalue nearest c, signed.
double nearest_gap(const Spectrum& s, double c) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.size(); ++i) {
        const double d = s.eigenvalues[i] - c;
        if (std::abs(d) < std::abs(best)) best = d;
    }
    return best;
}

}  // namespace

IntegralValue quadratic_integral(const Matrix& g, const Matrix& A, double epsilon, double t, const Vector& X) {
    require_epsilon(epsilon);
    const Spectrum s = decompose(g, A);
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = 0.0;
    for (int i = 0; i < s.size(); ++i) {
        const double d = std::abs(s.eigenvalues[i] - t);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (!(dmin > kSpectrumProximity))
        throw SpectrumProximityError("t = " + fmt(t) + " lies within " + fmt(kSpectrumProximity) +
                                     " of the spectrum of A; use the regularized integral");
    if (dmax / dmin > kShiftConditionLimit)
        throw SpectrumProximityError("A - t is too ill-conditioned at t = " + fmt(t) +
                                     "; use the regularized integral");

    // X = sum u_a v_a with V^T G V = Id, so g((A - t)^-1 X, X) = sum u_a^2 / (mu_a - t).
    const Vector u = s.eigenvectors.transpose() * g * X;
    double det_abs = 1.0;
    double quad = 0.0;
    double quad_abs = 0.0;
    for (int i = 0; i < s.size(); ++i) {
        const double d = s.eigenvalues[i] - t;
        det_abs *= std::abs(d);
        quad += u[i] * u[i] / d;
        quad_abs += u[i] * u[i] / std::abs(d);
    }
    const double f = std::pow(det_abs, 1.0 / (1.0 - epsilon));
    return {f * quad, f * quad_abs};
}

RegularizedTensor regularized_tensor(const Matrix& g, const Matrix& A, double c, int k, ExponentMode mode) {
    if (k < 1) throw std::invalid_argument("regularization order k must be at least 1");
    RegularizedTensor r;
    r.spectrum = decompose(g, A);
    const Spectrum& s = r.spectrum;

    std::size_t near = 0;
    for (std::size_t i = 1; i < s.clusters.size(); ++i)
        if (std::abs(s.clusters[i].value - c) < std::abs(s.clusters[near].value - c)) near = i;
    const Cluster& cl = s.clusters[near];
    r.rho = cl.value;
    r.multiplicity = cl.multiplicity;
    if (mode == ExponentMode::normal && cl.multiplicity > k)
        throw std::invalid_argument("eigenvalue cluster near c has multiplicity " + std::to_string(cl.multiplicity) +
                                    " > k = " + std::to_string(k));

    const int m = s.size();
    std::vector<bool> inside(static_cast<std::size_t>(m), false);
    for (int i : cl.members) inside[static_cast<std::size_t>(i)] = true;

    r.prefactor = 1.0;
    r.det_abs = 1.0;
    for (int i = 0; i < m; ++i) {
        const double d = std::abs(s.eigenvalues[i] - c);
        r.det_abs *= d;
        if (inside[static_cast<std::size_t>(i)]) continue;
        if (!(d > kClusterSeparation))
            throw SpectrumProximityError("eigenvalue " + fmt(s.eigenvalues[i]) + " outside the c-cluster is within " +
                                         fmt(kClusterSeparation) + " of c = " + fmt(c));
        r.prefactor *= std::pow(d, 1.0 / k);
    }

    const Matrix GV = g * s.eigenvectors;
    r.T = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const double w = inside[static_cast<std::size_t>(i)] ? 1.0 : (r.rho - c) / (s.eigenvalues[i] - c);
        r.T += w * GV.col(i) * GV.col(i).transpose();
    }
    r.T *= r.prefactor;
    return r;
}

RegularizedValue regularized_integral(const Matrix& g, const Matrix& A, double epsilon, double c, int k,
                                      const Vector& X, ExponentMode mode) {
    require_epsilon(epsilon);
    if (k < 1) throw std::invalid_argument("regularization order k must be at least 1");
    RegularizedValue out;
    out.exponent = 1.0 / (1.0 - epsilon) - 1.0 / k;
    if (mode == ExponentMode::normal && std::abs(out.exponent) > 1e-12)
        throw std::invalid_argument("exponent 1/(1-eps) - 1/k = " + fmt(out.exponent) +
                                    " is nonzero; use diagnostic mode to evaluate it anyway");
    if (mode == ExponentMode::normal) out.exponent = 0.0;

    const RegularizedTensor rt = regularized_tensor(g, A, c, k, mode);
    out.side = sign_of(rt.rho - c);
    const double f = out.exponent == 0.0 ? out.side : out.side * std::pow(rt.det_abs, out.exponent);
    out.tensor_value = X.dot(rt.T * X);
    out.value = f * out.tensor_value;
    out.smooth = out.side * out.value;

    const Vector u = rt.spectrum.eigenvectors.transpose() * g * X;
    double mag = 0.0;
    for (int i = 0; i < rt.spectrum.size(); ++i) {
        const double d = rt.spectrum.eigenvalues[i] - c;
        const bool inside = std::abs(rt.spectrum.eigenvalues[i] - rt.rho) <= rt.spectrum.cluster_tolerance;
        const double w = inside ? 1.0 : (rt.rho - c) / d;
        mag += std::abs(w) * u[i] * u[i];
    }
    out.magnitude = std::abs(f) * rt.prefactor * mag;
    return out;
}

ConservationReport conservation_report(const PQScene& scene, const Trajectory& traj,
                                       const std::vector<IntegralSpec>& specs, const DriftOptions& options) {
    ConservationReport rep;
    rep.duration = traj.duration();
    const double eps = scene.epsilon();
    rep.series.resize(specs.size());
    for (std::size_t j = 0; j < specs.size(); ++j) rep.series[j].spec = specs[j];

    std::vector<double> last_side(specs.size(), 0.0);
    for (const auto& sample : traj.samples) {
        const Vector& x = sample.state.x;
        const Vector& v = sample.state.v;
        const Matrix G = scene.g().value_at(x);
        const Matrix A = compute_A(G, scene.gbar().value_at(x), eps);
        rep.energies.push_back(v.dot(G * v));
        for (std::size_t j = 0; j < specs.size(); ++j) {
            auto& ser = rep.series[j];
            const IntegralSpec& sp = specs[j];
            if (sp.regularized) {
                const RegularizedValue rv = regularized_integral(G, A, eps, sp.t, sp.k, v, sp.mode);
                ser.values.push_back(rv.smooth);
                ser.magnitudes.push_back(rv.magnitude);
                if (last_side[j] != 0.0 && rv.side != last_side[j]) ++ser.side_changes;
                last_side[j] = rv.side;
            } else {
                const IntegralValue iv = quadratic_integral(G, A, eps, sp.t, v);
                ser.values.push_back(iv.value);
                ser.magnitudes.push_back(iv.magnitude);
            }
        }
    }

    rep.passed = true;
    for (auto& ser : rep.series) {
        for (std::size_t n = 0; n < ser.values.size(); ++n) {
            ser.max_drift = std::max(ser.max_drift, std::abs(ser.values[n] - ser.values.front()));
            ser.scale = std::max(ser.scale, ser.magnitudes[n]);
        }
        ser.relative_drift = ser.max_drift / std::max(ser.scale, kMachineEps);
        const double rate = ser.spec.regularized ? options.regularized_budget_per_unit_time
                                                 : options.budget_per_unit_time;
        ser.budget = rate * rep.duration;
        ser.passed = ser.relative_drift <= ser.budget;
        rep.passed = rep.passed && ser.passed;
    }
    if (!rep.energies.empty()) {
        double drift = 0.0;
        for (double e : rep.energies) drift = std::max(drift, std::abs(e - rep.energies.front()));
        rep.energy_relative_drift = drift / std::max(std::abs(rep.energies.front()), kMachineEps);
    }
    return rep;
}

double BracketValue::relative() const { return std::abs(value) / std::max(scale, kMachineEps); }

namespace {

// Symmetric M with F_t(x, p) = p^T M p.
Matrix momentum_form(const PQScene& scene, const Vector& x, double t, double separation) {
    const double eps = scene.epsilon();
    const Matrix G = scene.g().value_at(x);
    const Matrix A = compute_A(G, scene.gbar().value_at(x), eps);
    const Spectrum s = decompose(G, A);
    const int m = s.size();
    double det_abs = 1.0;
    for (int i = 0; i < m; ++i) {
        const double d = std::abs(s.eigenvalues[i] - t);
        if (!(d > separation))
            throw SpectrumProximityError("bracket parameter " + fmt(t) + " is within " + fmt(separation) +
                                         " of the spectrum of A");
        det_abs *= d;
    }
    // (A - t)^-1 G^-1 = V diag(1/(mu - t)) V^T since A = V diag(mu) V^T G and V^T G V = Id.
    Matrix M = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        M += (1.0 / (s.eigenvalues[i] - t)) * s.eigenvectors.col(i) * s.eigenvectors.col(i).transpose();
    return std::pow(det_abs, 1.0 / (1.0 - eps)) * M;
}

}  // namespace

BracketValue poisson_bracket_at(const PQScene& scene, double t, double s, const Vector& x, const Vector& p,
                                const BracketOptions& options) {
    require_epsilon(scene.epsilon());
    const int m = scene.dimension();
    if (x.size() != m || p.size() != m) throw std::invalid_argument("poisson_bracket_at: dimension mismatch");
    const double h = options.fd_rel_step * scene.chart().scale();

    auto grads = [&](double param, Vector& dx, Vector& dp) {
        const Matrix M = momentum_form(scene, x, param, options.separation);
        dp = 2.0 * M * p;
        dx.resize(m);
        for (int i = 0; i < m; ++i) {
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fp = p.dot(momentum_form(scene, xp, param, options.separation) * p);
            const double fm = p.dot(momentum_form(scene, xm, param, options.separation) * p);
            dx[i] = (fp - fm) / (2.0 * h);
        }
    };
    Vector dxt, dpt, dxs, dps;
    grads(t, dxt, dpt);
    BracketValue b;
    if (t == s) {
        const double n = std::sqrt(dxt.squaredNorm() + dpt.squaredNorm());
        b.scale = n * n;
        return b;
    }
    grads(s, dxs, dps);
    b.value = dxt.dot(dps) - dpt.dot(dxs);
    b.scale = std::sqrt(dxt.squaredNorm() + dpt.squaredNorm()) * std::sqrt(dxs.squaredNorm() + dps.squaredNorm());
    return b;
}

std::optional<ApproachProbe> probe_approach(const PQScene& scene, const Trajectory& traj, double c, int k,
                                            ExponentMode mode, int count) {
    if (traj.samples.size() < 2 || count < 1) return std::nullopt;
    const MetricField& g = scene.g();
    const double eps = scene.epsilon();
    auto gap_at = [&](const Vector& x) { return nearest_gap(eigen_at(scene, x), c); };

    const double side0 = sign_of(gap_at(traj.samples.front().state.x));
    std::size_t n = 1;
    while (n < traj.samples.size() && sign_of(gap_at(traj.samples[n].state.x)) == side0) ++n;
    if (n == traj.samples.size()) return std::nullopt;

    // Single RK4 step of variable length from a base sample up to ten steps
    // back: the probes then approach the crossing of the same curve the
    // bisection located.
    std::size_t base = n - 1 >= 9 ? n - 10 : 0;
    auto state_at = [&](std::size_t b, double tau) { return rk4_step(g, traj.samples[b].state, tau); };
    double span = traj.samples[n].time - traj.samples[base].time;
    if (sign_of(gap_at(state_at(base, span).x)) == side0) {
        base = n - 1;
        span = traj.samples[n].time - traj.samples[base].time;
    }
    double lo = 0.0, hi = span;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * span; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sign_of(gap_at(state_at(base, mid).x)) == side0) lo = mid;
        else hi = mid;
    }

    ApproachProbe probe;
    probe.crossing_time = traj.samples[base].time + lo;
    const auto& s0 = traj.samples.front().state;
    probe.far_value = regularized_integral(g.value_at(s0.x), compute_A_at(scene, s0.x), eps, c, k, s0.v, mode).value;
    for (int j = 0; j < count; ++j) {
        const double delta = lo * std::pow(10.0, -j);
        const GeodesicState st = state_at(base, lo - delta);
        const Matrix G = g.value_at(st.x);
        const Matrix A = compute_A(G, scene.gbar().value_at(st.x), eps);
        probe.time_to_crossing.push_back(delta);
        probe.rho_gap.push_back(std::abs(nearest_gap(decompose(G, A), c)));
        probe.values.push_back(regularized_integral(G, A, eps, c, k, st.v, mode).value);
    }
    return probe;
}

}  // namespace pqproj
