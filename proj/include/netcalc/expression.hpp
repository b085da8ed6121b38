#pragma once

// Tiny arithmetic expression language:
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom ('^' unary)?          (right associative)
//   atom   := number | identifier | identifier '(' expr ')' | '(' expr ')'
//
// Identifiers are variables (j, i, x, ...) or the constants pi and e. The functions
// sqrt, exp, log, sin, cos, abs are available for integrands; sequence tails only
// accept the closed forms recognized by sequence.hpp.

#include <netcalc/error.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };
    Kind kind;
    double number = 0.0;
    std::string name;  // variable or function name
    ExprPtr lhs;
    ExprPtr rhs;

    bool depends_on(const std::string& var) const {
        if (kind == Kind::variable) return name == var;
        return (lhs && lhs->depends_on(var)) || (rhs && rhs->depends_on(var));
    }
    bool is_constant() const {
        if (kind == Kind::variable) return false;
        return (!lhs || lhs->is_constant()) && (!rhs || rhs->is_constant());
    }
};

using Bindings = std::map<std::string, double>;

inline double evaluate(const Expr& e, const Bindings& vars) {
    switch (e.kind) {
        case Expr::Kind::number: return e.number;
        case Expr::Kind::variable: {
            auto it = vars.find(e.name);
            if (it == vars.end()) throw DomainError("unbound variable '" + e.name + "'");
            return it->second;
        }
        case Expr::Kind::negate: return -evaluate(*e.lhs, vars);
        case Expr::Kind::add: return evaluate(*e.lhs, vars) + evaluate(*e.rhs, vars);
        case Expr::Kind::sub: return evaluate(*e.lhs, vars) - evaluate(*e.rhs, vars);
        case Expr::Kind::mul: return evaluate(*e.lhs, vars) * evaluate(*e.rhs, vars);
        case Expr::Kind::div: return evaluate(*e.lhs, vars) / evaluate(*e.rhs, vars);
        case Expr::Kind::pow: {
            const double base = evaluate(*e.lhs, vars);
            const double expo = evaluate(*e.rhs, vars);
            // (-1)^n for integral n without going through pow's domain rules.
            if (base < 0.0 && std::nearbyint(expo) == expo) {
                const double mag = std::pow(-base, expo);
                return (std::fmod(std::fabs(expo), 2.0) == 1.0) ? -mag : mag;
            }
            return std::pow(base, expo);
        }
        case Expr::Kind::call: {
            const double a = evaluate(*e.lhs, vars);
            if (e.name == "sqrt") return std::sqrt(a);
            if (e.name == "exp") return std::exp(a);
            if (e.name == "log") return std::log(a);
            if (e.name == "sin") return std::sin(a);
            if (e.name == "cos") return std::cos(a);
            if (e.name == "abs") return std::fabs(a);
            throw DomainError("unknown function '" + e.name + "'");
        }
    }
    return 0.0;
}

inline double evaluate_constant(const Expr& e) { return evaluate(e, {}); }

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class ExprParser {
public:
    ExprParser(std::string text, std::size_t line, std::size_t column)
        : text_(std::move(text)), line_(line), column_(column) {}

    ExprPtr parse() {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column_ + pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static ExprPtr node(Expr::Kind k, ExprPtr l = nullptr, ExprPtr r = nullptr) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }

    ExprPtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = node(Expr::Kind::add, lhs, parse_term());
            else if (eat('-')) lhs = node(Expr::Kind::sub, lhs, parse_term());
            else return lhs;
        }
    }
    ExprPtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            if (eat('*')) lhs = node(Expr::Kind::mul, lhs, parse_unary());
            else if (eat('/')) lhs = node(Expr::Kind::div, lhs, parse_unary());
            else return lhs;
        }
    }
    ExprPtr parse_unary() {
        if (eat('-')) return node(Expr::Kind::negate, parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }
    ExprPtr parse_power() {
        auto base = parse_atom();
        if (eat('^')) return node(Expr::Kind::pow, base, parse_unary());
        return base;
    }
    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::number;
            e->number = v;
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name = text_.substr(start, pos_ - start);
            if (eat('(')) {
                auto arg = parse_expr();
                if (!eat(')')) fail("expected ')' after function argument");
                auto e = node(Expr::Kind::call, arg);
                std::const_pointer_cast<Expr>(e)->name = std::move(name);
                return e;
            }
            auto e = std::make_shared<Expr>();
            if (name == "pi" || name == "e") {
                e->kind = Expr::Kind::number;
                e->number = name == "pi" ? M_PI : M_E;
                e->name = name;
            } else {
                e->kind = Expr::Kind::variable;
                e->name = std::move(name);
            }
            return e;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_;
    std::size_t column_;
};

}  // namespace detail

/// Parse `text`; errors report positions relative to (line, column) of the text's origin.
inline ExprPtr parse_expression(const std::string& text, std::size_t line = 1, std::size_t column = 1) {
    return detail::ExprParser(text, line, column).parse();
}

/// A parsed expression that remembers its source text (used for round-tripping specs).
struct Formula {
    std::string text;
    ExprPtr expr;

    static Formula parse(const std::string& text, std::size_t line = 1, std::size_t column = 1) {
        return {text, parse_expression(text, line, column)};
    }
    double operator()(const Bindings& vars) const { return evaluate(*expr, vars); }
    friend bool operator==(const Formula& a, const Formula& b) { return a.text == b.text; }
};

}  // namespace netcalc
