#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <system_error>

#include "ncbf/error.hpp"
#include "ncbf/linalg.hpp"

namespace ncbf {

enum class ExprOp { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Sqrt, Abs, Min, Max };

/// Immutable expression tree over the state variables x_0 .. x_{n-1}.
/// Nodes are shared, so copies are cheap.
class Expr {
    struct Node {
        ExprOp op = ExprOp::Const;
        double value = 0.0; // Const
        int index = 0;      // Var: variable index; Pow: exponent
        std::shared_ptr<const Node> a;
        std::shared_ptr<const Node> b;
    };

public:
    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v)
    {
        if (!std::isfinite(v)) {
            throw DomainError("Expr: non-finite constant");
        }
        return Expr(Node{ExprOp::Const, v, 0, nullptr, nullptr});
    }

    static Expr variable(int k)
    {
        if (k < 0) {
            throw DimensionError("Expr: negative variable index");
        }
        return Expr(Node{ExprOp::Var, 0.0, k, nullptr, nullptr});
    }

    static Expr unary(ExprOp op, const Expr& a)
    {
        if (op != ExprOp::Neg && op != ExprOp::Sin && op != ExprOp::Cos && op != ExprOp::Sqrt && op != ExprOp::Abs) {
            throw PreconditionError("Expr::unary: not a unary operator");
        }
        return Expr(Node{op, 0.0, 0, a.node_, nullptr});
    }

    static Expr binary(ExprOp op, const Expr& a, const Expr& b)
    {
        if (op != ExprOp::Add && op != ExprOp::Sub && op != ExprOp::Mul && op != ExprOp::Div && op != ExprOp::Min &&
            op != ExprOp::Max) {
            throw PreconditionError("Expr::binary: not a binary operator");
        }
        return Expr(Node{op, 0.0, 0, a.node_, b.node_});
    }

    static Expr power(const Expr& base, int exponent) { return Expr(Node{ExprOp::Pow, 0.0, exponent, base.node_, nullptr}); }

    ExprOp op() const { return node_->op; }
    double value() const { return node_->value; }
    int var() const { return node_->index; }
    int exponent() const { return node_->index; }
    Expr lhs() const { return Expr(node_->a); }
    Expr rhs() const { return Expr(node_->b); }

    int arity() const
    {
        switch (op()) {
        case ExprOp::Const:
        case ExprOp::Var: return 0;
        case ExprOp::Neg:
        case ExprOp::Pow:
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Sqrt:
        case ExprOp::Abs: return 1;
        default: return 2;
        }
    }

    bool is_constant() const { return op() == ExprOp::Const; }

    /// Largest variable index referenced, or -1 when there is none.
    int max_variable() const
    {
        if (op() == ExprOp::Var) {
            return var();
        }
        int best = -1;
        if (node_->a) {
            best = std::max(best, lhs().max_variable());
        }
        if (node_->b) {
            best = std::max(best, rhs().max_variable());
        }
        return best;
    }

    friend bool operator==(const Expr& x, const Expr& y) { return same(x.node_.get(), y.node_.get()); }

    /// Evaluates the tree with the arithmetic of ExprArith<T>.
    template <typename T, typename Vars>
    T eval_as(const Vars& vars) const;

    /// Point evaluation. Division by zero, sqrt of a negative and non-finite
    /// results raise DomainError.
    double eval(const Vector& x) const;

    /// Text form accepted back by the parser. Variables print as x1, x2, ...
    std::string to_string() const
    {
        std::string out;
        print(out, *node_);
        return out;
    }

private:
    explicit Expr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static bool same(const Node* a, const Node* b)
    {
        if (a == b) {
            return true;
        }
        if (a == nullptr || b == nullptr) {
            return false;
        }
        if (a->op != b->op) {
            return false;
        }
        switch (a->op) {
        case ExprOp::Const: return a->value == b->value;
        case ExprOp::Var:
        case ExprOp::Pow:
            if (a->index != b->index) {
                return false;
            }
            break;
        default: break;
        }
        return same(a->a.get(), b->a.get()) && same(a->b.get(), b->b.get());
    }

    // Binding strength used for minimal parenthesization. A negative literal
    // prints with a leading minus and binds like negation.
    static int precedence(const Node& n)
    {
        if (n.op == ExprOp::Const && std::signbit(n.value)) {
            return 3;
        }
        switch (n.op) {
        case ExprOp::Add:
        case ExprOp::Sub: return 1;
        case ExprOp::Mul:
        case ExprOp::Div: return 2;
        case ExprOp::Neg: return 3;
        case ExprOp::Pow: return 4;
        default: return 5;
        }
    }

    static void print_number(std::string& out, double v)
    {
        std::array<char, 32> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        out.append(buf.data(), res.ptr);
    }

    static void print_child(std::string& out, const Node& child, int min_prec)
    {
        if (precedence(child) < min_prec) {
            out.push_back('(');
            print(out, child);
            out.push_back(')');
        } else {
            print(out, child);
        }
    }

    static void print(std::string& out, const Node& n)
    {
        switch (n.op) {
        case ExprOp::Const:
            print_number(out, n.value);
            return;
        case ExprOp::Var: out += "x" + std::to_string(n.index + 1); return;
        case ExprOp::Neg:
            out.push_back('-');
            // "-3" would read back as a negative literal.
            print_child(out, *n.a, n.a->op == ExprOp::Const ? 6 : 3);
            return;
        case ExprOp::Pow:
            print_child(out, *n.a, 5);
            out += "^" + std::to_string(n.index);
            return;
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Sqrt:
        case ExprOp::Abs:
            out += function_name(n.op);
            out.push_back('(');
            print(out, *n.a);
            out.push_back(')');
            return;
        case ExprOp::Min:
        case ExprOp::Max:
            out += function_name(n.op);
            out.push_back('(');
            print(out, *n.a);
            out += ", ";
            print(out, *n.b);
            out.push_back(')');
            return;
        default: {
            const int p = precedence(n);
            print_child(out, *n.a, p);
            out += n.op == ExprOp::Add ? " + " : n.op == ExprOp::Sub ? " - " : n.op == ExprOp::Mul ? "*" : "/";
            print_child(out, *n.b, p + 1);
            return;
        }
        }
    }

public:
    static const char* function_name(ExprOp op)
    {
        switch (op) {
        case ExprOp::Sin: return "sin";
        case ExprOp::Cos: return "cos";
        case ExprOp::Sqrt: return "sqrt";
        case ExprOp::Abs: return "abs";
        case ExprOp::Min: return "min";
        case ExprOp::Max: return "max";
        default: return "";
        }
    }

private:
    template <typename T, typename Vars>
    static T walk(const Node& n, const Vars& vars);

    std::shared_ptr<const Node> node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(ExprOp::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(ExprOp::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(ExprOp::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(ExprOp::Div, a, b); }
inline Expr operator-(const Expr& a) { return Expr::unary(ExprOp::Neg, a); }

/// Arithmetic used by Expr::eval_as. Specialized for double here and for
/// Interval in boundprop.
template <typename T>
struct ExprArith;

template <>
struct ExprArith<double> {
    static double constant(double v) { return v; }
    static double neg(double a) { return -a; }
    static double add(double a, double b) { return a + b; }
    static double sub(double a, double b) { return a - b; }
    static double mul(double a, double b) { return a * b; }
    static double div(double a, double b)
    {
        if (b == 0.0) {
            throw DomainError("division by zero");
        }
        return a / b;
    }
    static double pow(double a, int k)
    {
        if (k < 0 && a == 0.0) {
            throw DomainError("negative power of zero");
        }
        double r = 1.0;
        const int e = k < 0 ? -k : k;
        for (int i = 0; i < e; ++i) {
            r *= a;
        }
        return k < 0 ? 1.0 / r : r;
    }
    static double sin(double a) { return std::sin(a); }
    static double cos(double a) { return std::cos(a); }
    static double sqrt(double a)
    {
        if (a < 0.0) {
            throw DomainError("sqrt of a negative value");
        }
        return std::sqrt(a);
    }
    static double abs(double a) { return std::abs(a); }
    static double min(double a, double b) { return std::min(a, b); }
    static double max(double a, double b) { return std::max(a, b); }
};

template <typename T, typename Vars>
T Expr::walk(const Node& n, const Vars& vars)
{
    using A = ExprArith<T>;
    switch (n.op) {
    case ExprOp::Const: return A::constant(n.value);
    case ExprOp::Var:
        if (n.index >= static_cast<int>(vars.size())) {
            throw DimensionError("Expr: variable x" + std::to_string(n.index + 1) + " out of range");
        }
        return vars[n.index];
    case ExprOp::Neg: return A::neg(walk<T>(*n.a, vars));
    case ExprOp::Add: return A::add(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    case ExprOp::Sub: return A::sub(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    case ExprOp::Mul: return A::mul(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    case ExprOp::Div: return A::div(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    case ExprOp::Pow: return A::pow(walk<T>(*n.a, vars), n.index);
    case ExprOp::Sin: return A::sin(walk<T>(*n.a, vars));
    case ExprOp::Cos: return A::cos(walk<T>(*n.a, vars));
    case ExprOp::Sqrt: return A::sqrt(walk<T>(*n.a, vars));
    case ExprOp::Abs: return A::abs(walk<T>(*n.a, vars));
    case ExprOp::Min: return A::min(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    case ExprOp::Max: return A::max(walk<T>(*n.a, vars), walk<T>(*n.b, vars));
    }
    throw PreconditionError("Expr: corrupt node");
}

template <typename T, typename Vars>
T Expr::eval_as(const Vars& vars) const
{
    return walk<T>(*node_, vars);
}

inline double Expr::eval(const Vector& x) const
{
    const double v = walk<double>(*node_, x);
    if (!std::isfinite(v)) {
        throw DomainError("expression evaluated to a non-finite value");
    }
    return v;
}

/// Affine form a^T x + c of an expression over n variables, when the tree is
/// affine (constants may scale and divide affine subtrees).
inline std::optional<std::pair<Vector, double>> as_affine(const Expr& e, int n)
{
    using Form = std::pair<Vector, double>;
    auto constant_form = [n](double c) { return Form{Vector::Zero(n), c}; };
    auto is_const = [](const Form& f) { return f.first.isZero(0.0); };
    switch (e.op()) {
    case ExprOp::Const: return constant_form(e.value());
    case ExprOp::Var: {
        if (e.var() >= n) {
            return std::nullopt;
        }
        Form f = constant_form(0.0);
        f.first[e.var()] = 1.0;
        return f;
    }
    case ExprOp::Neg: {
        auto a = as_affine(e.lhs(), n);
        if (!a) {
            return std::nullopt;
        }
        return Form{-a->first, -a->second};
    }
    case ExprOp::Add:
    case ExprOp::Sub: {
        auto a = as_affine(e.lhs(), n);
        auto b = as_affine(e.rhs(), n);
        if (!a || !b) {
            return std::nullopt;
        }
        const double s = e.op() == ExprOp::Add ? 1.0 : -1.0;
        return Form{a->first + s * b->first, a->second + s * b->second};
    }
    case ExprOp::Mul: {
        auto a = as_affine(e.lhs(), n);
        auto b = as_affine(e.rhs(), n);
        if (!a || !b) {
            return std::nullopt;
        }
        if (is_const(*a)) {
            return Form{a->second * b->first, a->second * b->second};
        }
        if (is_const(*b)) {
            return Form{b->second * a->first, b->second * a->second};
        }
        return std::nullopt;
    }
    case ExprOp::Div: {
        auto a = as_affine(e.lhs(), n);
        auto b = as_affine(e.rhs(), n);
        if (!a || !b || !is_const(*b) || b->second == 0.0) {
            return std::nullopt;
        }
        return Form{a->first / b->second, a->second / b->second};
    }
    case ExprOp::Pow: {
        if (e.exponent() == 0) {
            return constant_form(1.0);
        }
        auto a = as_affine(e.lhs(), n);
        if (!a) {
            return std::nullopt;
        }
        if (e.exponent() == 1) {
            return a;
        }
        if (is_const(*a)) {
            return constant_form(ExprArith<double>::pow(a->second, e.exponent()));
        }
        return std::nullopt;
    }
    default: {
        // Functions of constants fold; anything else is nonlinear.
        if (e.max_variable() >= 0) {
            return std::nullopt;
        }
        return constant_form(e.eval(Vector::Zero(std::max(n, 1))));
    }
    }
}

} // namespace ncbf
