#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "hyperstab/expr.hpp"

using namespace hyperstab::expr;

namespace {

const VariableContext source_ctx = VariableContext::for_role(Role::source, 2);
const VariableContext coeff_ctx = VariableContext::for_role(Role::coefficient);

double eval(const std::string& text, Bindings b, const VariableContext& ctx = coeff_ctx) {
    return parse_expression(text, ctx).evaluate(b);
}

/// Random well-formed expression over x, u[1], u[2] for round-trip tests.
std::string random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    auto sub = [&] { return random_expr(rng, depth - 1); };
    static const char* fns[] = {"sin", "cos", "tanh", "exp", "abs", "sign"};
    switch (pick(rng)) {
    case 0: return std::to_string(std::uniform_int_distribution<int>(0, 9)(rng)) + ".25";
    case 1: return "x";
    case 2: return "u[" + std::to_string(std::uniform_int_distribution<int>(1, 2)(rng)) + "]";
    case 3: return "(" + sub() + " + " + sub() + ")";
    case 4: return sub() + " - " + sub();
    case 5: return sub() + " * " + sub();
    case 6: return "-" + sub();
    case 7: return "(" + sub() + ")^2";
    case 8: return std::string(fns[std::uniform_int_distribution<int>(0, 5)(rng)]) + "(" + sub() + ")";
    default: return "max(" + sub() + ", " + sub() + ")";
    }
}

}  // namespace

TEST_CASE("parse builds the expected tree") {
    const auto e = parse_expression("0.25*sin(I[2])", source_ctx);
    const auto& r = *e.root();
    CHECK(r.kind == NodeKind::mul);
    CHECK(r.args[0]->kind == NodeKind::number);
    CHECK(r.args[0]->value == 0.25);
    CHECK(r.args[1]->kind == NodeKind::call);
    CHECK(r.args[1]->fn == Function::sin);
    const auto& arg = *r.args[1]->args[0];
    CHECK(arg.kind == NodeKind::indexed);
    CHECK(arg.name == "I");
    CHECK(arg.index == 2);
}

TEST_CASE("variables outside the role context are rejected") {
    CHECK_THROWS_AS(parse_expression("sqrt(L+1.5-x)", coeff_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("u[1]", coeff_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("out[1]", source_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("u[3]", source_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("x", VariableContext::for_role(Role::disturbance_boundary, 2)),
                    ParseError);
    CHECK_NOTHROW(parse_expression("t*x", VariableContext::for_role(Role::disturbance_interior, 2)));
    CHECK_NOTHROW(parse_expression("tanh(out[2])", VariableContext::for_role(Role::boundary, 2)));
    CHECK_NOTHROW(parse_expression("pi*e", VariableContext::for_role(Role::boundary, 2)));
}

TEST_CASE("precedence and associativity") {
    CHECK(eval("-x^2", {{{"x", 0}, 2.0}}) == -4.0);
    CHECK(parse_expression("-x^2", coeff_ctx).root()->kind == NodeKind::negate);
    CHECK(eval("2^3^2", {}) == 512.0);
    CHECK(eval("2*x+1", {{{"x", 0}, 3.0}}) == 7.0);
    CHECK(eval("8/4/2", {}) == 1.0);
    CHECK(eval("1-2-3", {}) == -4.0);
    CHECK(eval("2^-1", {}) == 0.5);
    CHECK(eval("3e-2 + 1E+1", {}) == doctest::Approx(10.03).epsilon(1e-15));
    CHECK(eval("min(2, 3) + max(2, 3)", {}) == 5.0);
    CHECK(eval("sign(-3) + sign(0) + abs(-2)", {}) == 1.0);
}

TEST_CASE("syntax errors carry a position inside the input") {
    const std::string bad[] = {"", "1+", "(x", "x)", "sin x", "u[0]", "u[1.5]", "3..2", "x y", "*2"};
    for (const auto& s : bad) {
        CAPTURE(s);
        try {
            parse_expression(s, source_ctx);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.position() <= s.size());
        }
    }
}

TEST_CASE("unknown function and arity mismatch") {
    CHECK_THROWS_AS(parse_expression("log(x)", coeff_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("min(x)", coeff_ctx), ParseError);
    CHECK_THROWS_AS(parse_expression("sin(x, x)", coeff_ctx), ParseError);
    CHECK(function_arity(Function::max) == 2);
    CHECK(function_arity(Function::tanh) == 1);
}

TEST_CASE("evaluation with bindings and domain errors") {
    CHECK(eval("sin(I[1])", {{{"I", 1}, 0.0}}, source_ctx) == 0.0);
    CHECK_THROWS_AS(eval("sqrt(1.5-x)", {{{"x", 0}, 2.0}}), DomainError);
    CHECK_THROWS_AS(eval("1/(x-2)", {{{"x", 0}, 2.0}}), DomainError);
    CHECK_THROWS_AS(eval("0^(-1)", {}), DomainError);
    try {
        eval("1 + sqrt(x - 3)", {{{"x", 0}, 1.0}});
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(e.subexpression().find("sqrt") != std::string::npos);
    }
    CHECK_THROWS_AS(eval("x + 1", {}), std::out_of_range);
}

TEST_CASE("scope evaluation matches binding evaluation") {
    const auto e = parse_expression("x*u[1] - 0.5*sin(I[2]) + u[2]^2", source_ctx);
    const double u[] = {0.3, -1.2};
    const double I[] = {0.7, 2.1};
    const Scope sc{.x = 0.4, .u = u, .integrals = I};
    const Bindings b = {{{"x", 0}, 0.4}, {{"u", 1}, 0.3}, {{"u", 2}, -1.2}, {{"I", 1}, 0.7}, {{"I", 2}, 2.1}};
    CHECK(e.evaluate(sc) == e.evaluate(b));
}

TEST_CASE("free variables") {
    using Set = std::set<VarRef>;
    CHECK(free_variables(parse_expression("0.25*sin(I[2])", source_ctx)) == Set{{"I", 2}});
    CHECK(free_variables(parse_expression("3.14", source_ctx)).empty());
    CHECK(free_variables(parse_expression("u[1]+u[2]*x", source_ctx)) ==
          Set{{"u", 1}, {"u", 2}, {"x", 0}});
    CHECK(free_variables(parse_expression("pi*x", source_ctx)) == Set{{"x", 0}});
}

TEST_CASE("print/parse round trip over random trees") {
    std::mt19937_64 rng(42);
    for (int k = 0; k < 500; ++k) {
        const std::string text = random_expr(rng, 4);
        CAPTURE(text);
        const auto a = parse_expression(text, source_ctx);
        const auto b = parse_expression(to_string(a), source_ctx);
        CHECK(same_structure(a.root(), b.root()));
    }
}

TEST_CASE("evaluation is pure") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 200; ++k) {
        const auto e = parse_expression(random_expr(rng, 4), source_ctx);
        const Bindings b = {{{"x", 0}, 0.37}, {{"u", 1}, -0.8}, {{"u", 2}, 1.3}};
        double first = 0.0;
        bool ok = true;
        try {
            first = e.evaluate(b);
        } catch (const DomainError&) {
            ok = false;
        }
        if (!ok) continue;
        const double second = e.evaluate(b);
        CHECK(std::memcmp(&first, &second, sizeof(double)) == 0);
    }
}

TEST_CASE("single-token corruption parses or reports an in-range position") {
    const std::string valid = "0.25*sin(I[2]) + max(u[1], -x^2)/(1+x)";
    const std::vector<std::string> tokens = {"+", "-", "*", "/", "^", "(", ")", "[", "]", ",",
                                             "1", "x", "u", "sin", " ", "."};
    std::mt19937_64 rng(3);
    for (int k = 0; k < 300; ++k) {
        std::string s = valid;
        const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
        const auto& tok = tokens[std::uniform_int_distribution<std::size_t>(0, tokens.size() - 1)(rng)];
        if (k % 2 == 0) {
            s.replace(pos, 1, tok);
        } else {
            s.insert(pos, tok);
        }
        CAPTURE(s);
        try {
            parse_expression(s, source_ctx);
        } catch (const ParseError& e) {
            CHECK(e.position() <= s.size());
        }
    }
}
