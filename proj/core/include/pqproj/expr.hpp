#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pqproj/error.hpp"
#include "pqproj/jet.hpp"

namespace pqproj {

/// The closed set of elementary functions understood by the expression grammar.
enum class Func { sin, cos, tan, exp, log, sqrt, abs, atan };

std::string_view func_name(Func f);

/// Immutable expression tree over the coordinates of a chart.
///
/// Grammar (precedence ^ > unary minus > * / > + -, ^ right-associative):
///
///     expr   := term (('+'|'-') term)* ;
///     term   := factor (('*'|'/') factor)* ;
///     factor := '-' factor | power ;
///     power  := atom ('^' factor)? ;
///     atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')' ;
///
/// Values are cheap to copy; the tree and its compiled evaluation tape are
/// shared between copies and never mutated, so one expression may be
/// evaluated from several threads at once.
class ScalarExpr {
public:
    struct Node {
        enum class Kind { number, coordinate, negate, add, subtract, multiply, divide, power, call };

        Kind kind = Kind::number;
        double number = 0.0;
        int coordinate = -1;
        Func func = Func::sin;
        std::shared_ptr<const Node> lhs;  // operand of negate/call, left of binary
        std::shared_ptr<const Node> rhs;
    };
    struct Impl;

    ScalarExpr() = default;

    /// Number of chart coordinates the expression is defined over.
    int dimension() const;
    const std::vector<std::string>& coords() const;

    /// Text that parses back to a structurally identical tree.
    std::string format() const;

    /// True when coordinate `index` occurs anywhere in the tree.
    bool uses_coordinate(int index) const;
    bool is_constant() const;

    /// Number of nodes in the tree.
    std::size_t size() const;

    const Node& root() const;

    /// Structural equality: same tree shape, operators, bit-identical literals
    /// and the same coordinate list.
    friend bool operator==(const ScalarExpr& a, const ScalarExpr& b);

private:
    explicit ScalarExpr(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    friend ScalarExpr parse_expr(std::string_view, std::span<const std::string>);
    friend double eval(const ScalarExpr&, std::span<const double>);
    friend Jet eval_jet(const ScalarExpr&, std::span<const double>);

    std::shared_ptr<const Impl> impl_;
};

/// Parses `text` over the coordinate names `coords`.
/// Throws ParseError for syntax errors, unknown identifiers and arity
/// mismatches; std::invalid_argument when `coords` is empty, has duplicates,
/// or shadows a function name.
ScalarExpr parse_expr(std::string_view text, std::span<const std::string> coords);

inline ScalarExpr parse_expr(std::string_view text, const std::vector<std::string>& coords) {
    return parse_expr(text, std::span<const std::string>(coords));
}

/// Plain evaluation. Throws DomainError on non-finite intermediate results.
double eval(const ScalarExpr& e, std::span<const double> point);

inline double eval(const ScalarExpr& e, const Vector& point) {
    return eval(e, std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
}

/// Value and exact first derivatives by forward-mode propagation, seeding
/// one direction per coordinate.
Jet eval_jet(const ScalarExpr& e, std::span<const double> point);

inline Jet eval_jet(const ScalarExpr& e, const Vector& point) {
    return eval_jet(e, std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
}

/// Formats a double so that parse_expr reads back the identical value.
/// Negative values are wrapped as "(-v)".
std::string format_number(double value);

}  // namespace pqproj
