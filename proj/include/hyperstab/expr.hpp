#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/// Closed-form expression language used by system, weight and disturbance
/// files. Grammar:
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | power
///   power  := atom ('^' factor)?
///   atom   := NUMBER | IDENT | IDENT '[' INT ']' | IDENT '(' expr (',' expr)? ')' | '(' expr ')'
///
/// `-x^2` is `-(x^2)` and `2^3^2` is `2^(3^2)`. `pi` and `e` are always bound.
namespace hyperstab::expr {

/// Which part of a system description an expression belongs to; fixes the
/// set of free variables it may use.
enum class Role {
    coefficient,           // {x}
    source,                // {x, u[j], I[j]}
    boundary,              // {out[j]}
    disturbance_interior,  // {t, x}
    disturbance_boundary,  // {t}
    initial,               // {x}
};

/// A variable occurrence: plain (`x`, index 0) or indexed (`u[2]`).
struct VarRef {
    std::string name;
    int index = 0;

    auto operator<=>(const VarRef&) const = default;
    std::string str() const;
};

class VariableContext {
public:
    /// `dimension` bounds the indices of u[j], I[j], out[j] (0 = unbounded).
    static VariableContext for_role(Role role, int dimension = 0);

    bool permits(const VarRef& v) const;
    Role role() const { return role_; }

private:
    Role role_ = Role::coefficient;
    std::set<std::string> plain_;
    std::set<std::string> indexed_;
    int max_index_ = 0;
};

enum class NodeKind { number, variable, indexed, negate, add, sub, mul, div, pow, call };
enum class Function { sin, cos, tan, tanh, exp, sqrt, abs, min, max, sign };

/// Resolved variable slot so evaluation does not compare strings.
enum class Slot { none, x, t, u, integral, out, pi, e };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::number;
    double value = 0.0;        // number
    std::string name;          // variable / indexed / call
    int index = 0;             // indexed (1-based)
    Slot slot = Slot::none;
    Function fn = Function::sin;
    std::vector<NodePtr> args; // operands or call arguments
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t position);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class DomainError : public std::runtime_error {
public:
    DomainError(std::string message, std::string subexpression);
    const std::string& subexpression() const { return subexpression_; }

private:
    std::string subexpression_;
};

/// Fast binding frame for numeric kernels. Index j of u/integrals/out is
/// read at position j-1.
struct Scope {
    double x = 0.0;
    double t = 0.0;
    std::span<const double> u{};
    std::span<const double> integrals{};
    std::span<const double> out{};
};

using Bindings = std::map<VarRef, double>;

/// Immutable parsed expression. Cheap to copy (shared tree).
class Expression {
public:
    Expression() = default;
    explicit Expression(NodePtr root, std::string source = {});

    static Expression parse(std::string_view source, const VariableContext& context);
    static Expression constant(double value);

    const NodePtr& root() const { return root_; }
    const std::string& source() const { return source_; }

    double evaluate(const Scope& scope) const;
    double evaluate(const Bindings& bindings) const;

    std::set<VarRef> free_variables() const;
    bool uses(std::string_view family) const;

private:
    NodePtr root_;
    std::string source_;
};

Expression parse_expression(std::string_view source, const VariableContext& context);
double evaluate(const Expression& e, const Bindings& bindings);
std::set<VarRef> free_variables(const Expression& e);

/// Fully parenthesised rendering that re-parses to the same tree.
std::string to_string(const NodePtr& node);
std::string to_string(const Expression& e);

/// Structural equality (number literals compared exactly).
bool same_structure(const NodePtr& a, const NodePtr& b);

const char* function_name(Function f);
int function_arity(Function f);

}  // namespace hyperstab::expr
