#include "pqproj/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pqproj {

namespace {

using Node = ScalarExpr::Node;
using Kind = Node::Kind;
using NodePtr = std::shared_ptr<const Node>;

constexpr std::array<std::pair<std::string_view, Func>, 8> kFunctions{{
    {"sin", Func::sin},
    {"cos", Func::cos},
    {"tan", Func::tan},
    {"exp", Func::exp},
    {"log", Func::log},
    {"sqrt", Func::sqrt},
    {"abs", Func::abs},
    {"atan", Func::atan},
}};

const Func* lookup_function(std::string_view name) {
    for (const auto& [n, f] : kFunctions)
        if (n == name) return &f;
    return nullptr;
}

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::number;
    n->number = v;
    return n;
}

NodePtr make_unary(Kind kind, NodePtr operand, Func f = Func::sin) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->func = f;
    n->lhs = std::move(operand);
    return n;
}

NodePtr make_binary(Kind kind, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

// Recursive-descent parser; one token of lookahead over the raw text.
class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> coords) : text_(text), coords_(coords) {}

    NodePtr parse() {
        skip_space();
        if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
        NodePtr e = parse_expr();
        skip_space();
        if (pos_ != text_.size()) fail_unexpected();
        return e;
    }

private:
    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_space();
            if (accept('+'))
                lhs = make_binary(Kind::add, lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary(Kind::subtract, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            skip_space();
            if (accept('*'))
                lhs = make_binary(Kind::multiply, lhs, parse_factor());
            else if (accept('/'))
                lhs = make_binary(Kind::divide, lhs, parse_factor());
            else
                return lhs;
        }
    }

    NodePtr parse_factor() {
        skip_space();
        if (accept('-')) return make_unary(Kind::negate, parse_factor());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        skip_space();
        if (accept('^')) return make_binary(Kind::power, base, parse_factor());
        return base;
    }

    NodePtr parse_atom() {
        skip_space();
        if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (is_digit(c) || c == '.') return parse_number();
        if (is_ident_start(c)) return parse_identifier();
        if (accept('(')) {
            NodePtr inner = parse_expr();
            expect_close();
            return inner;
        }
        fail_unexpected();
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
        }
        if (pos_ - start == 1 && text_[start] == '.') throw ParseError("malformed number", start);
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p >= text_.size() || !is_digit(text_[p])) throw ParseError("malformed exponent in number", pos_);
            while (p < text_.size() && is_digit(text_[p])) ++p;
            pos_ = p;
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || !std::isfinite(value))
            throw ParseError("number out of range", start);
        return make_number(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        skip_space();
        const bool call = pos_ < text_.size() && text_[pos_] == '(';

        if (const Func* f = lookup_function(name)) {
            if (!call)
                throw ParseError("function '" + std::string(name) + "' expects exactly one argument", start);
            ++pos_;
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ')')
                throw ParseError("function '" + std::string(name) + "' expects exactly one argument", start);
            NodePtr arg = parse_expr();
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ',')
                throw ParseError("function '" + std::string(name) + "' expects exactly one argument", start);
            expect_close();
            return make_unary(Kind::call, arg, *f);
        }
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (coords_[i] == name) {
                if (call) throw ParseError("coordinate '" + std::string(name) + "' is not a function", start);
                auto n = std::make_shared<Node>();
                n->kind = Kind::coordinate;
                n->coordinate = static_cast<int>(i);
                return n;
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    void expect_close() {
        skip_space();
        if (!accept(')')) {
            if (pos_ == text_.size()) throw ParseError("expected ')' but input ended", pos_);
            throw ParseError("expected ')'", pos_);
        }
    }

    [[noreturn]] void fail_unexpected() {
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    std::string_view text_;
    std::span<const std::string> coords_;
    std::size_t pos_ = 0;
};

// Flattened post-order program; operands refer to earlier slots.
struct Instr {
    Kind kind;
    int a = -1;
    int b = -1;
    double number = 0.0;
    int coordinate = -1;
    Func func = Func::sin;
};

int compile(const Node& n, std::vector<Instr>& tape) {
    Instr ins{n.kind};
    switch (n.kind) {
        case Kind::number: ins.number = n.number; break;
        case Kind::coordinate: ins.coordinate = n.coordinate; break;
        case Kind::negate:
        case Kind::call:
            ins.a = compile(*n.lhs, tape);
            ins.func = n.func;
            break;
        default:
            ins.a = compile(*n.lhs, tape);
            ins.b = compile(*n.rhs, tape);
            break;
    }
    tape.push_back(ins);
    return static_cast<int>(tape.size()) - 1;
}

int precedence(const Node& n) {
    switch (n.kind) {
        case Kind::add:
        case Kind::subtract: return 1;
        case Kind::multiply:
        case Kind::divide: return 2;
        case Kind::negate: return 3;
        case Kind::power: return 4;
        default: return 5;
    }
}

void format_node(const Node& n, const std::vector<std::string>& coords, std::string& out);

void format_child(const Node& child, int min_prec, const std::vector<std::string>& coords, std::string& out) {
    const bool wrap = precedence(child) < min_prec;
    if (wrap) out += '(';
    format_node(child, coords, out);
    if (wrap) out += ')';
}

void format_node(const Node& n, const std::vector<std::string>& coords, std::string& out) {
    switch (n.kind) {
        case Kind::number: out += format_number(n.number); return;
        case Kind::coordinate: out += coords[static_cast<std::size_t>(n.coordinate)]; return;
        case Kind::negate:
            out += '-';
            format_child(*n.lhs, 3, coords, out);
            return;
        case Kind::call:
            out += func_name(n.func);
            out += '(';
            format_node(*n.lhs, coords, out);
            out += ')';
            return;
        case Kind::power:
            format_child(*n.lhs, 5, coords, out);
            out += '^';
            format_child(*n.rhs, 3, coords, out);
            return;
        default: break;
    }
    const int p = precedence(n);
    format_child(*n.lhs, p, coords, out);
    switch (n.kind) {
        case Kind::add: out += " + "; break;
        case Kind::subtract: out += " - "; break;
        case Kind::multiply: out += '*'; break;
        default: out += '/'; break;
    }
    format_child(*n.rhs, p + 1, coords, out);
}

bool same_tree(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Kind::number: return a.number == b.number;
        case Kind::coordinate: return a.coordinate == b.coordinate;
        case Kind::call: return a.func == b.func && same_tree(*a.lhs, *b.lhs);
        case Kind::negate: return same_tree(*a.lhs, *b.lhs);
        default: return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
    }
}

[[noreturn]] void domain_fail(const char* what) { throw DomainError(std::string("expression evaluation: ") + what); }

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) domain_fail(what);
}

double apply_func(Func f, double x) {
    switch (f) {
        case Func::sin: return std::sin(x);
        case Func::cos: return std::cos(x);
        case Func::tan: return std::tan(x);
        case Func::exp: return std::exp(x);
        case Func::log:
            if (!(x > 0.0)) domain_fail("log of a non-positive argument");
            return std::log(x);
        case Func::sqrt:
            if (x < 0.0) domain_fail("sqrt of a negative argument");
            return std::sqrt(x);
        case Func::abs: return std::abs(x);
        case Func::atan: return std::atan(x);
    }
    return 0.0;
}

// d f(x) / dx
double func_derivative(Func f, double x, double fx) {
    switch (f) {
        case Func::sin: return std::cos(x);
        case Func::cos: return -std::sin(x);
        case Func::tan: return 1.0 + fx * fx;
        case Func::exp: return fx;
        case Func::log: return 1.0 / x;
        case Func::sqrt: return 0.5 / fx;
        case Func::abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        case Func::atan: return 1.0 / (1.0 + x * x);
    }
    return 0.0;
}

void check_point(const ScalarExpr& e, std::size_t n) {
    if (static_cast<int>(n) != e.dimension())
        throw std::invalid_argument("expression evaluation: point has " + std::to_string(n) +
                                    " coordinates, chart has " + std::to_string(e.dimension()));
}

}  // namespace

struct ScalarExpr::Impl {
    std::shared_ptr<const Node> root;
    std::vector<std::string> coords;
    std::vector<Instr> tape;
};

std::string_view func_name(Func f) {
    for (const auto& [n, g] : kFunctions)
        if (g == f) return n;
    return "?";
}

std::string format_number(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("format_number: non-finite value");
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::abs(value));
    std::string s(buf.data(), ptr);
    if (std::signbit(value) && value != 0.0) return "(-" + s + ")";
    return s;
}

int ScalarExpr::dimension() const { return impl_ ? static_cast<int>(impl_->coords.size()) : 0; }

const std::vector<std::string>& ScalarExpr::coords() const {
    static const std::vector<std::string> empty;
    return impl_ ? impl_->coords : empty;
}

std::string ScalarExpr::format() const {
    if (!impl_) return {};
    std::string out;
    format_node(*impl_->root, impl_->coords, out);
    return out;
}

bool ScalarExpr::uses_coordinate(int index) const {
    if (!impl_) return false;
    for (const Instr& ins : impl_->tape)
        if (ins.kind == Kind::coordinate && ins.coordinate == index) return true;
    return false;
}

bool ScalarExpr::is_constant() const {
    if (!impl_) return true;
    for (const Instr& ins : impl_->tape)
        if (ins.kind == Kind::coordinate) return false;
    return true;
}

std::size_t ScalarExpr::size() const { return impl_ ? impl_->tape.size() : 0; }

const ScalarExpr::Node& ScalarExpr::root() const {
    if (!impl_) throw std::logic_error("ScalarExpr::root on an empty expression");
    return *impl_->root;
}

bool operator==(const ScalarExpr& a, const ScalarExpr& b) {
    if (!a.impl_ || !b.impl_) return !a.impl_ && !b.impl_;
    return a.impl_->coords == b.impl_->coords && same_tree(*a.impl_->root, *b.impl_->root);
}

ScalarExpr parse_expr(std::string_view text, std::span<const std::string> coords) {
    if (coords.empty()) throw std::invalid_argument("parse_expr: coordinate list is empty");
    std::set<std::string> seen;
    for (const auto& c : coords) {
        if (c.empty() || !is_ident_start(c.front()))
            throw std::invalid_argument("parse_expr: invalid coordinate name '" + c + "'");
        for (char ch : c)
            if (!is_ident_char(ch)) throw std::invalid_argument("parse_expr: invalid coordinate name '" + c + "'");
        if (lookup_function(c)) throw std::invalid_argument("parse_expr: coordinate '" + c + "' shadows a function");
        if (!seen.insert(c).second) throw std::invalid_argument("parse_expr: duplicate coordinate '" + c + "'");
    }
    auto impl = std::make_shared<ScalarExpr::Impl>();
    impl->coords.assign(coords.begin(), coords.end());
    impl->root = Parser(text, coords).parse();
    compile(*impl->root, impl->tape);
    return ScalarExpr(std::move(impl));
}

double eval(const ScalarExpr& e, std::span<const double> point) {
    if (!e.impl_) throw std::logic_error("eval on an empty expression");
    check_point(e, point.size());
    const auto& tape = e.impl_->tape;
    std::vector<double> v(tape.size());
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Instr& ins = tape[i];
        double r = 0.0;
        switch (ins.kind) {
            case Kind::number: r = ins.number; break;
            case Kind::coordinate: r = point[static_cast<std::size_t>(ins.coordinate)]; break;
            case Kind::negate: r = -v[ins.a]; break;
            case Kind::add: r = v[ins.a] + v[ins.b]; break;
            case Kind::subtract: r = v[ins.a] - v[ins.b]; break;
            case Kind::multiply: r = v[ins.a] * v[ins.b]; break;
            case Kind::divide: r = v[ins.a] / v[ins.b]; break;
            case Kind::power: r = std::pow(v[ins.a], v[ins.b]); break;
            case Kind::call: r = apply_func(ins.func, v[ins.a]); break;
        }
        check_finite(r, "non-finite intermediate value");
        v[i] = r;
    }
    return v.back();
}

Jet eval_jet(const ScalarExpr& e, std::span<const double> point) {
    if (!e.impl_) throw std::logic_error("eval_jet on an empty expression");
    check_point(e, point.size());
    const auto& tape = e.impl_->tape;
    const std::size_t m = point.size();
    std::vector<double> v(tape.size());
    std::vector<double> g(tape.size() * m, 0.0);

    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Instr& ins = tape[i];
        double* gi = &g[i * m];
        const double* ga = ins.a >= 0 ? &g[static_cast<std::size_t>(ins.a) * m] : nullptr;
        const double* gb = ins.b >= 0 ? &g[static_cast<std::size_t>(ins.b) * m] : nullptr;
        const double a = ins.a >= 0 ? v[ins.a] : 0.0;
        const double b = ins.b >= 0 ? v[ins.b] : 0.0;
        double r = 0.0;
        switch (ins.kind) {
            case Kind::number: r = ins.number; break;
            case Kind::coordinate:
                r = point[static_cast<std::size_t>(ins.coordinate)];
                gi[ins.coordinate] = 1.0;
                break;
            case Kind::negate:
                r = -a;
                for (std::size_t k = 0; k < m; ++k) gi[k] = -ga[k];
                break;
            case Kind::add:
                r = a + b;
                for (std::size_t k = 0; k < m; ++k) gi[k] = ga[k] + gb[k];
                break;
            case Kind::subtract:
                r = a - b;
                for (std::size_t k = 0; k < m; ++k) gi[k] = ga[k] - gb[k];
                break;
            case Kind::multiply:
                r = a * b;
                for (std::size_t k = 0; k < m; ++k) gi[k] = ga[k] * b + a * gb[k];
                break;
            case Kind::divide:
                r = a / b;
                for (std::size_t k = 0; k < m; ++k) gi[k] = (ga[k] - r * gb[k]) / b;
                break;
            case Kind::power: {
                r = std::pow(a, b);
                bool exponent_varies = false;
                for (std::size_t k = 0; k < m; ++k) exponent_varies = exponent_varies || gb[k] != 0.0;
                const double dbase = b == 0.0 ? 0.0 : b * std::pow(a, b - 1.0);
                double dexp = 0.0;
                if (exponent_varies) {
                    if (!(a > 0.0)) domain_fail("power with a varying exponent needs a positive base");
                    dexp = r * std::log(a);
                }
                for (std::size_t k = 0; k < m; ++k) gi[k] = dbase * ga[k] + dexp * gb[k];
                break;
            }
            case Kind::call: {
                r = apply_func(ins.func, a);
                const double d = func_derivative(ins.func, a, r);
                for (std::size_t k = 0; k < m; ++k) gi[k] = d * ga[k];
                break;
            }
        }
        check_finite(r, "non-finite intermediate value");
        for (std::size_t k = 0; k < m; ++k) check_finite(gi[k], "non-finite derivative");
        v[i] = r;
    }
    Jet out;
    out.value = v.back();
    out.gradient = Eigen::Map<const Vector>(&g[(tape.size() - 1) * m], static_cast<Eigen::Index>(m));
    return out;
}

}  // namespace pqproj
