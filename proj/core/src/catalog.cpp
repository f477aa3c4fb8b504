#include "pqproj/catalog.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pqproj/sampling.hpp"

namespace pqproj {

namespace {

const std::vector<std::string> kPlaneCoords{"x", "y"};

std::string num(double v) { return format_number(v); }

std::vector<std::string> default_coords(int m) {
    std::vector<std::string> c;
    if (m <= 3) {
        const char* names[] = {"x", "y", "z"};
        for (int i = 0; i < m; ++i) c.emplace_back(names[i]);
        return c;
    }
    for (int i = 1; i <= m; ++i) c.push_back("x" + std::to_string(i));
    return c;
}

ExprMatrix diagonal(const std::vector<std::string>& entries) {
    ExprMatrix out = zero_expr_matrix(static_cast<int>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) out[i][i] = entries[i];
    return out;
}

ExprMatrix complex_structure(double scale) {
    return {{"0", num(-scale)}, {num(scale), "0"}};
}

SceneSpec plane_scene(std::string name, const Box& box, double epsilon) {
    SceneSpec s;
    s.name = std::move(name);
    s.coords = kPlaneCoords;
    s.lo = box.lo;
    s.hi = box.hi;
    s.epsilon = epsilon;
    s.P = zero_expr_matrix(2);
    s.Q = zero_expr_matrix(2);
    return s;
}

void require_plane_box(const Box& box) {
    if (box.lo.size() != 2 || box.hi.size() != 2) throw std::invalid_argument("box must have two axes");
}

struct DiniText {
    std::string X, Y;
};

DiniText dini_text(const std::string& X, const std::string& Y) {
    // Re-formatting through the parser keeps the generated text canonical.
    return {parse_expr(X, kPlaneCoords).format(), parse_expr(Y, kPlaneCoords).format()};
}

ExprMatrix dini_g(const DiniText& d) { return diagonal({"(" + d.X + ") - (" + d.Y + ")", "(" + d.X + ") - (" + d.Y + ")"}); }

ExprMatrix dini_gbar(const DiniText& d) {
    const std::string f = "(1/(" + d.Y + ") - 1/(" + d.X + "))";
    return diagonal({f + "/(" + d.X + ")", f + "/(" + d.Y + ")"});
}

std::string cp1_conformal_factor(double lambda) {
    const double l2 = lambda * lambda;
    if (l2 == 1.0) return "4/(1 + x^2 + y^2)^2";
    return num(4.0 * l2) + "/(1 + " + num(l2) + "*(x^2 + y^2))^2";
}

}  // namespace

CatalogEntry admit(SceneSpec spec, std::vector<Equation> gates, Verdict expected, std::string provenance,
                   const GateOptions& options) {
    PQScene scene = require_valid_scene(spec);
    std::vector<ResidualReport> reports;
    bool ok = true;
    std::ostringstream msg;
    msg << "scene '" << spec.name << "' failed its gates:";
    for (Equation eq : gates) {
        reports.push_back(residual_report(scene, eq, options.sampling, options.tolerance));
        const auto& r = reports.back();
        if (!r.passed) {
            ok = false;
            msg << " " << to_string(eq) << " max relative residual " << r.max_relative << " > " << r.tolerance << ";";
        }
    }
    if (!ok) throw GateError(msg.str(), std::move(reports));
    return CatalogEntry{spec.name, std::move(scene), expected, std::move(provenance), false, std::move(gates),
                        std::move(reports), std::nullopt};
}

CatalogEntry make_affine_pair(int m, double c, const GateOptions& options) {
    if (m < 2) throw std::invalid_argument("make_affine_pair: m must be at least 2");
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("make_affine_pair: c must be positive");
    SceneSpec s;
    s.name = "affine";
    s.notes = "constant multiple of the Euclidean metric";
    s.coords = default_coords(m);
    s.lo.assign(static_cast<std::size_t>(m), 0.0);
    s.hi.assign(static_cast<std::size_t>(m), 1.0);
    s.epsilon = 0.0;
    s.g = diagonal(std::vector<std::string>(static_cast<std::size_t>(m), "1"));
    s.gbar = diagonal(std::vector<std::string>(static_cast<std::size_t>(m), num(c)));
    s.P = zero_expr_matrix(m);
    s.Q = zero_expr_matrix(m);
    CatalogEntry e = admit(std::move(s), {Equation::main, Equation::pqproj}, Verdict::affine,
                           "gbar = c g share the Levi-Civita connection", options);
    const double a = std::pow(c, -1.0 / (m + 1.0));
    e.a_field = diagonal(std::vector<std::string>(static_cast<std::size_t>(m), num(a)));
    return e;
}

CatalogEntry make_dini_pair(const std::string& X, const std::string& Y, const Box& box, const GateOptions& options) {
    require_plane_box(box);
    const ScalarExpr xe = parse_expr(X, kPlaneCoords);
    const ScalarExpr ye = parse_expr(Y, kPlaneCoords);
    if (xe.uses_coordinate(1)) throw std::invalid_argument("make_dini_pair: X must depend on x only");
    if (ye.uses_coordinate(0)) throw std::invalid_argument("make_dini_pair: Y must depend on y only");

    const ChartDomain chart(kPlaneCoords, Eigen::Map<const Vector>(box.lo.data(), 2),
                            Eigen::Map<const Vector>(box.hi.data(), 2));
    std::vector<Vector> points = stratified_samples(chart, 1000, 42);
    for (int corner = 0; corner < 4; ++corner)
        points.push_back(Vector{{corner & 1 ? box.hi[0] : box.lo[0], corner & 2 ? box.hi[1] : box.lo[1]}});
    for (const Vector& p : points) {
        const double xv = eval(xe, p);
        const double yv = eval(ye, p);
        if (!(xv > yv && yv > 0.0)) {
            std::ostringstream msg;
            msg << "make_dini_pair: X > Y > 0 fails at (" << p[0] << ", " << p[1] << "): X = " << xv << ", Y = " << yv;
            throw std::invalid_argument(msg.str());
        }
    }

    const DiniText d{xe.format(), ye.format()};
    SceneSpec s = plane_scene("dini", box, 0.0);
    s.notes = "Dini pair with X = " + d.X + ", Y = " + d.Y;
    s.g = dini_g(d);
    s.gbar = dini_gbar(d);
    CatalogEntry e = admit(std::move(s), {Equation::projective, Equation::main, Equation::pqproj},
                           Verdict::projective_eps0, "classical Dini / Levi-Civita normal form in dimension two",
                           options);
    e.a_field = diagonal({d.X, d.Y});
    return e;
}

CatalogEntry make_dini_pair(const GateOptions& options) {
    return make_dini_pair("x+3", "y", Box{{0.0, 1.0}, {1.0, 2.0}}, options);
}

Box default_sphere_box() { return Box{{-0.3, 0.2}, {0.3, 0.7}}; }

CatalogEntry make_sphere_projective_pair(const Matrix& C, const Box& box, const GateOptions& options) {
    require_plane_box(box);
    if (C.rows() != 3 || C.cols() != 3) throw std::invalid_argument("make_sphere_projective_pair: C must be 3x3");
    if ((C - C.transpose()).norm() > 0.0) throw std::invalid_argument("make_sphere_projective_pair: C must be symmetric");
    if (!(min_symmetric_eigenvalue(C) > 0.0))
        throw std::invalid_argument("make_sphere_projective_pair: C must be positive definite");

    // Columns of s^2 times the Jacobian of the inverse stereographic projection
    // (x, y) -> (2x, 2y, x^2 + y^2 - 1) / s with s = 1 + x^2 + y^2.
    const std::string sq = "(1 + x^2 + y^2)";
    const std::vector<std::vector<std::string>> k{{"2*(1 - x^2 + y^2)", "(-4)*x*y", "4*x"},
                                                  {"(-4)*x*y", "2*(1 + x^2 - y^2)", "4*y"}};
    auto form = [&](int a, int b) {
        std::string out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (C(i, j) == 0.0) continue;
                if (!out.empty()) out += " + ";
                out += num(C(i, j)) + "*(" + k[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] + ")*(" +
                       k[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)] + ")";
            }
        return "(" + out + ")";
    };
    // N = K^T C K; A = N / (4 s^2) is the tangential part of C in chart components.
    const std::string n11 = form(0, 0), n12 = form(0, 1), n22 = form(1, 1);
    const std::string det = "(" + n11 + "*" + n22 + " - " + n12 + "*" + n12 + ")";
    const std::string pre = "256*" + sq + "^4/" + det + "^2";

    SceneSpec s = plane_scene("sphere", box, 0.0);
    std::ostringstream notes;
    notes << "round sphere, stereographic chart, C = [";
    for (int i = 0; i < 9; ++i) notes << (i ? " " : "") << C(i / 3, i % 3);
    notes << "]";
    s.notes = notes.str();
    const std::string conf = "4/" + sq + "^2";
    s.g = diagonal({conf, conf});
    // gbar = (det A)^-1 g A^-1 = 256 s^4 adj(N) / det(N)^2.
    s.gbar = {{pre + "*" + n22, "(-" + pre + ")*" + n12}, {"(-" + pre + ")*" + n12, pre + "*" + n11}};

    const double mean = C.trace() / 3.0;
    const bool degenerate = (C - mean * Matrix::Identity(3, 3)).norm() <= 1e-12 * C.norm();
    CatalogEntry e = admit(std::move(s), {Equation::projective, Equation::main, Equation::pqproj},
                           degenerate ? Verdict::affine : Verdict::projective_eps0,
                           "restriction of a constant quadratic form to the round sphere", options);
    e.degenerate = degenerate;
    const std::string den = "/(4*" + sq + "^2)";
    e.a_field = ExprMatrix{{n11 + den, n12 + den}, {n12 + den, n22 + den}};
    return e;
}

CatalogEntry make_sphere_projective_pair(const Matrix& C, const GateOptions& options) {
    return make_sphere_projective_pair(C, default_sphere_box(), options);
}

CatalogEntry make_cp1_hprojective_pair(double lambda, const Box& box, const GateOptions& options) {
    require_plane_box(box);
    if (!(lambda >= 1.0) || !std::isfinite(lambda))
        throw std::invalid_argument("make_cp1_hprojective_pair: lambda must be at least 1");
    SceneSpec s = plane_scene("cp1", box, -1.0);
    s.notes = "Fubini-Study metric and its pullback under z -> " + num(lambda) + " z";
    const std::string g = cp1_conformal_factor(1.0);
    const std::string gb = cp1_conformal_factor(lambda);
    s.g = diagonal({g, g});
    s.gbar = diagonal({gb, gb});
    s.P = complex_structure(1.0);
    s.Q = complex_structure(1.0);
    const bool degenerate = lambda == 1.0;
    CatalogEntry e = admit(std::move(s), {Equation::pqproj, Equation::main, Equation::hprojective},
                           degenerate ? Verdict::affine : Verdict::pq_eps_class,
                           "holomorphic scaling of the Fubini-Study metric", options);
    e.degenerate = degenerate;
    const double l2 = lambda * lambda;
    const std::string a = "(1 + " + num(l2) + "*(x^2 + y^2))/(" + num(lambda) + "*(1 + x^2 + y^2))";
    e.a_field = diagonal({a, a});
    return e;
}

CatalogEntry make_cp1_hprojective_pair(double lambda, const GateOptions& options) {
    return make_cp1_hprojective_pair(lambda, Box{{-0.5, -0.5}, {0.5, 0.5}}, options);
}

std::vector<CatalogEntry> standard_catalog(const GateOptions& options) {
    std::vector<CatalogEntry> out;
    out.push_back(make_affine_pair(2, 4.0, options));
    out.push_back(make_affine_pair(3, 2.0, options));
    out.push_back(make_dini_pair(options));
    out.push_back(make_sphere_projective_pair(Vector{{1.0, 2.0, 3.0}}.asDiagonal().toDenseMatrix(), options));
    out.back().name = "sphere_123";
    out.push_back(make_sphere_projective_pair(Vector{{1.0, 1.0, 2.0}}.asDiagonal().toDenseMatrix(), options));
    out.back().name = "sphere_112";
    out.push_back(make_cp1_hprojective_pair(2.0, options));
    out[0].name = "affine_2";
    out[1].name = "affine_3";
    return out;
}

std::vector<NegativeEntry> negative_catalog() {
    std::vector<NegativeEntry> out;

    const DiniText d = dini_text("x+3", "y");
    SceneSpec dini = plane_scene("dini_corrupted", Box{{0.0, 1.0}, {1.0, 2.0}}, 0.0);
    dini.g = dini_g(d);
    dini.gbar = dini_gbar(d);
    dini.gbar[0][0] = "(" + dini.gbar[0][0] + ")*(1 + 0.01*y)";
    dini.notes = "Dini pair with gbar_11 scaled by 1 + y/100";
    out.push_back({dini.name, dini, Equation::main,
                   "non-conformal one-percent perturbation of gbar; the main equation must fail"});

    SceneSpec even = plane_scene("cp1_even_eps", Box{{-0.5, -0.5}, {0.5, 0.5}}, -2.0);
    even.g = diagonal({cp1_conformal_factor(1.0), cp1_conformal_factor(1.0)});
    even.gbar = diagonal({cp1_conformal_factor(2.0), cp1_conformal_factor(2.0)});
    even.P = complex_structure(1.0);
    even.Q = complex_structure(2.0);
    even.notes = "CP^1 pair with P = J, Q = 2J claiming eps = -2";
    out.push_back({even.name, even, Equation::main,
                   "algebraic conditions hold but an even negative eps admits no non-affine solution"});
    return out;
}

SceneSpec excluded_epsilon_scene() {
    const DiniText d = dini_text("x+3", "y");
    SceneSpec s = plane_scene("eps_one", Box{{0.0, 1.0}, {1.0, 2.0}}, 1.0);
    s.g = dini_g(d);
    s.gbar = dini_gbar(d);
    s.notes = "eps = 1 is excluded";
    return s;
}

}  // namespace pqproj
