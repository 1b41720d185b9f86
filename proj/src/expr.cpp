#include "hyperstab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <utility>

namespace hyperstab::expr {

std::string VarRef::str() const {
    if (index == 0) return name;
    return name + "[" + std::to_string(index) + "]";
}

VariableContext VariableContext::for_role(Role role, int dimension) {
    VariableContext c;
    c.role_ = role;
    c.max_index_ = dimension;
    switch (role) {
    case Role::coefficient:
    case Role::initial:
        c.plain_ = {"x"};
        break;
    case Role::source:
        c.plain_ = {"x"};
        c.indexed_ = {"u", "I"};
        break;
    case Role::boundary:
        c.indexed_ = {"out"};
        break;
    case Role::disturbance_interior:
        c.plain_ = {"t", "x"};
        break;
    case Role::disturbance_boundary:
        c.plain_ = {"t"};
        break;
    }
    return c;
}

bool VariableContext::permits(const VarRef& v) const {
    if (v.index == 0) {
        return v.name == "pi" || v.name == "e" || plain_.contains(v.name);
    }
    if (v.index < 1) return false;
    if (max_index_ > 0 && v.index > max_index_) return false;
    return indexed_.contains(v.name);
}

ParseError::ParseError(std::string message, std::size_t position)
    : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
      position_(position) {}

DomainError::DomainError(std::string message, std::string subexpression)
    : std::runtime_error(message + " in '" + subexpression + "'"),
      subexpression_(std::move(subexpression)) {}

const char* function_name(Function f) {
    switch (f) {
    case Function::sin: return "sin";
    case Function::cos: return "cos";
    case Function::tan: return "tan";
    case Function::tanh: return "tanh";
    case Function::exp: return "exp";
    case Function::sqrt: return "sqrt";
    case Function::abs: return "abs";
    case Function::min: return "min";
    case Function::max: return "max";
    case Function::sign: return "sign";
    }
    return "?";
}

int function_arity(Function f) {
    return (f == Function::min || f == Function::max) ? 2 : 1;
}

namespace {

std::optional<Function> lookup_function(std::string_view name) {
    static constexpr Function all[] = {Function::sin,  Function::cos, Function::tan,
                                       Function::tanh, Function::exp, Function::sqrt,
                                       Function::abs,  Function::min, Function::max,
                                       Function::sign};
    for (Function f : all) {
        if (name == function_name(f)) return f;
    }
    return std::nullopt;
}

Slot slot_for(const std::string& name, int index) {
    if (index == 0) {
        if (name == "x") return Slot::x;
        if (name == "t") return Slot::t;
        if (name == "pi") return Slot::pi;
        if (name == "e") return Slot::e;
        return Slot::none;
    }
    if (name == "u") return Slot::u;
    if (name == "I") return Slot::integral;
    if (name == "out") return Slot::out;
    return Slot::none;
}

enum class Tok { number, ident, integer_index, plus, minus, star, slash, caret, lparen, rparen,
                 lbracket, rbracket, comma, end };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;
    double value = 0.0;
};

const char* describe(Tok t) {
    switch (t) {
    case Tok::number: return "number";
    case Tok::ident: return "identifier";
    case Tok::integer_index: return "integer";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::caret: return "'^'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::end: return "end of input";
    }
    return "?";
}

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (is_digit(c)) {
            while (i < s.size() && is_digit(s[i])) ++i;
            bool integral = true;
            if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
                integral = false;
                ++i;
                while (i < s.size() && is_digit(s[i])) ++i;
            } else if (i < s.size() && s[i] == '.') {
                throw ParseError("expected digits after '.'", i + 1);
            }
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && is_digit(s[j])) {
                    integral = false;
                    i = j;
                    while (i < s.size() && is_digit(s[i])) ++i;
                }
            }
            Token t{Tok::number, start, std::string(s.substr(start, i - start))};
            t.value = std::strtod(t.text.c_str(), nullptr);
            if (integral) t.kind = Tok::integer_index;
            out.push_back(std::move(t));
            continue;
        }
        if (is_letter(c)) {
            while (i < s.size() && (is_letter(s[i]) || is_digit(s[i]) || s[i] == '_')) ++i;
            out.push_back({Tok::ident, start, std::string(s.substr(start, i - start))});
            continue;
        }
        Tok k;
        switch (c) {
        case '+': k = Tok::plus; break;
        case '-': k = Tok::minus; break;
        case '*': k = Tok::star; break;
        case '/': k = Tok::slash; break;
        case '^': k = Tok::caret; break;
        case '(': k = Tok::lparen; break;
        case ')': k = Tok::rparen; break;
        case '[': k = Tok::lbracket; break;
        case ']': k = Tok::rbracket; break;
        case ',': k = Tok::comma; break;
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        out.push_back({k, start, std::string(1, c)});
        ++i;
    }
    out.push_back({Tok::end, s.size(), ""});
    return out;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(a), std::move(b)};
    return n;
}

class Parser {
public:
    Parser(std::string_view src, const VariableContext& ctx) : toks_(tokenize(src)), ctx_(ctx) {}

    NodePtr parse() {
        NodePtr root = expr();
        if (peek().kind != Tok::end) fail("expected operator or end of input");
        return root;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const VariableContext& ctx_;

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& what) const {
        const Token& t = peek();
        std::string found = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
        throw ParseError(what + ", found " + found, t.pos);
    }

    void expect(Tok k) {
        if (peek().kind != k) fail(std::string("expected ") + describe(k));
        ++pos_;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            NodeKind k = next().kind == Tok::plus ? NodeKind::add : NodeKind::sub;
            lhs = make_binary(k, lhs, term());
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = factor();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            NodeKind k = next().kind == Tok::star ? NodeKind::mul : NodeKind::div;
            lhs = make_binary(k, lhs, factor());
        }
        return lhs;
    }

    NodePtr factor() {
        if (peek().kind == Tok::minus) {
            ++pos_;
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::negate;
            n->args = {factor()};
            return n;
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (peek().kind == Tok::caret) {
            ++pos_;
            return make_binary(NodeKind::pow, base, factor());
        }
        return base;
    }

    NodePtr atom() {
        const Token& t = peek();
        if (t.kind == Tok::number || t.kind == Tok::integer_index) {
            ++pos_;
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::number;
            n->value = t.value;
            return n;
        }
        if (t.kind == Tok::lparen) {
            ++pos_;
            NodePtr inner = expr();
            expect(Tok::rparen);
            return inner;
        }
        if (t.kind != Tok::ident) fail("expected number, identifier or '('");

        const Token id = next();
        if (peek().kind == Tok::lparen) return call(id);

        auto n = std::make_shared<Node>();
        n->name = id.text;
        if (peek().kind == Tok::lbracket) {
            ++pos_;
            if (peek().kind != Tok::integer_index) fail("expected integer index");
            const Token& idx = next();
            expect(Tok::rbracket);
            if (idx.value < 1.0) {
                throw ParseError("index of '" + id.text + "' must be >= 1", idx.pos);
            }
            if (idx.value > 1e6) throw ParseError("index too large", idx.pos);
            n->kind = NodeKind::indexed;
            n->index = static_cast<int>(idx.value);
        } else {
            n->kind = NodeKind::variable;
        }
        VarRef ref{n->name, n->index};
        if (!ctx_.permits(ref)) {
            throw ParseError("unknown variable '" + ref.str() + "'", id.pos);
        }
        n->slot = slot_for(n->name, n->index);
        return n;
    }

    NodePtr call(const Token& id) {
        auto f = lookup_function(id.text);
        if (!f) throw ParseError("unknown function '" + id.text + "'", id.pos);
        expect(Tok::lparen);
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::call;
        n->name = id.text;
        n->fn = *f;
        n->args.push_back(expr());
        if (peek().kind == Tok::comma) {
            ++pos_;
            n->args.push_back(expr());
        }
        expect(Tok::rparen);
        if (static_cast<int>(n->args.size()) != function_arity(*f)) {
            throw ParseError("function '" + id.text + "' takes " +
                                 std::to_string(function_arity(*f)) + " argument(s), got " +
                                 std::to_string(n->args.size()),
                             id.pos);
        }
        return n;
    }
};

template <class Lookup>
double eval_node(const Node& n, const Lookup& lookup) {
    switch (n.kind) {
    case NodeKind::number:
        return n.value;
    case NodeKind::variable:
    case NodeKind::indexed:
        return lookup(n);
    case NodeKind::negate:
        return -eval_node(*n.args[0], lookup);
    case NodeKind::add:
        return eval_node(*n.args[0], lookup) + eval_node(*n.args[1], lookup);
    case NodeKind::sub:
        return eval_node(*n.args[0], lookup) - eval_node(*n.args[1], lookup);
    case NodeKind::mul:
        return eval_node(*n.args[0], lookup) * eval_node(*n.args[1], lookup);
    case NodeKind::div: {
        double den = eval_node(*n.args[1], lookup);
        if (den == 0.0) {
            throw DomainError("division by zero", to_string(std::make_shared<Node>(n)));
        }
        return eval_node(*n.args[0], lookup) / den;
    }
    case NodeKind::pow: {
        double b = eval_node(*n.args[0], lookup);
        double x = eval_node(*n.args[1], lookup);
        if (b == 0.0 && x < 0.0) {
            throw DomainError("zero raised to a negative power",
                              to_string(std::make_shared<Node>(n)));
        }
        if (b < 0.0 && x != std::trunc(x)) {
            throw DomainError("negative base with non-integer exponent",
                              to_string(std::make_shared<Node>(n)));
        }
        return std::pow(b, x);
    }
    case NodeKind::call: {
        double a = eval_node(*n.args[0], lookup);
        switch (n.fn) {
        case Function::sin: return std::sin(a);
        case Function::cos: return std::cos(a);
        case Function::tan: return std::tan(a);
        case Function::tanh: return std::tanh(a);
        case Function::exp: return std::exp(a);
        case Function::sqrt:
            if (a < 0.0) {
                throw DomainError("sqrt of negative value",
                                  to_string(std::make_shared<Node>(n)));
            }
            return std::sqrt(a);
        case Function::abs: return std::fabs(a);
        case Function::sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case Function::min: return std::min(a, eval_node(*n.args[1], lookup));
        case Function::max: return std::max(a, eval_node(*n.args[1], lookup));
        }
        break;
    }
    }
    return 0.0;
}

double indexed_at(std::span<const double> values, int index, const Node& n) {
    if (index < 1 || static_cast<std::size_t>(index) > values.size()) {
        throw std::out_of_range("no binding for '" + VarRef{n.name, n.index}.str() + "'");
    }
    return values[static_cast<std::size_t>(index - 1)];
}

void collect(const Node& n, std::set<VarRef>& out) {
    if (n.kind == NodeKind::variable || n.kind == NodeKind::indexed) {
        if (!(n.kind == NodeKind::variable && (n.name == "pi" || n.name == "e"))) {
            out.insert({n.name, n.index});
        }
    }
    for (const auto& a : n.args) collect(*a, out);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Expression::Expression(NodePtr root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {
    if (source_.empty() && root_) source_ = to_string(root_);
}

Expression Expression::parse(std::string_view source, const VariableContext& context) {
    Parser p(source, context);
    return Expression(p.parse(), std::string(source));
}

Expression Expression::constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::number;
    n->value = value;
    return Expression(n);
}

double Expression::evaluate(const Scope& scope) const {
    return eval_node(*root_, [&scope](const Node& n) -> double {
        switch (n.slot) {
        case Slot::x: return scope.x;
        case Slot::t: return scope.t;
        case Slot::pi: return std::numbers::pi;
        case Slot::e: return std::numbers::e;
        case Slot::u: return indexed_at(scope.u, n.index, n);
        case Slot::integral: return indexed_at(scope.integrals, n.index, n);
        case Slot::out: return indexed_at(scope.out, n.index, n);
        case Slot::none: break;
        }
        throw std::out_of_range("no binding for '" + VarRef{n.name, n.index}.str() + "'");
    });
}

double Expression::evaluate(const Bindings& bindings) const {
    return eval_node(*root_, [&bindings](const Node& n) -> double {
        auto it = bindings.find(VarRef{n.name, n.index});
        if (it != bindings.end()) return it->second;
        if (n.slot == Slot::pi) return std::numbers::pi;
        if (n.slot == Slot::e) return std::numbers::e;
        throw std::out_of_range("no binding for '" + VarRef{n.name, n.index}.str() + "'");
    });
}

std::set<VarRef> Expression::free_variables() const {
    std::set<VarRef> out;
    if (root_) collect(*root_, out);
    return out;
}

bool Expression::uses(std::string_view family) const {
    for (const auto& v : free_variables()) {
        if (v.name == family) return true;
    }
    return false;
}

Expression parse_expression(std::string_view source, const VariableContext& context) {
    return Expression::parse(source, context);
}

double evaluate(const Expression& e, const Bindings& bindings) { return e.evaluate(bindings); }

std::set<VarRef> free_variables(const Expression& e) { return e.free_variables(); }

std::string to_string(const NodePtr& node) {
    const Node& n = *node;
    switch (n.kind) {
    case NodeKind::number: return format_number(n.value);
    case NodeKind::variable: return n.name;
    case NodeKind::indexed: return n.name + "[" + std::to_string(n.index) + "]";
    case NodeKind::negate: return "(-(" + to_string(n.args[0]) + "))";
    case NodeKind::call: {
        std::string s = std::string(function_name(n.fn)) + "(" + to_string(n.args[0]);
        if (n.args.size() > 1) s += ", " + to_string(n.args[1]);
        return s + ")";
    }
    default: break;
    }
    const char* op = "?";
    switch (n.kind) {
    case NodeKind::add: op = " + "; break;
    case NodeKind::sub: op = " - "; break;
    case NodeKind::mul: op = " * "; break;
    case NodeKind::div: op = " / "; break;
    case NodeKind::pow: op = " ^ "; break;
    default: break;
    }
    return "(" + to_string(n.args[0]) + op + to_string(n.args[1]) + ")";
}

std::string to_string(const Expression& e) { return to_string(e.root()); }

bool same_structure(const NodePtr& a, const NodePtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case NodeKind::number:
        if (a->value != b->value) return false;
        break;
    case NodeKind::variable:
        if (a->name != b->name) return false;
        break;
    case NodeKind::indexed:
        if (a->name != b->name || a->index != b->index) return false;
        break;
    case NodeKind::call:
        if (a->fn != b->fn) return false;
        break;
    default:
        break;
    }
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!same_structure(a->args[i], b->args[i])) return false;
    }
    return true;
}

}  // namespace hyperstab::expr
