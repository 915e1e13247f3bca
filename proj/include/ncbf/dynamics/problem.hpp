#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncbf/box.hpp"
#include "ncbf/dynamics/expr.hpp"

namespace ncbf {

/// Control-affine system xdot = f(x) + g(x) u with safe set {h >= 0}, input
/// polytope U = {u : A u <= c} (or all of R^m) and a state-space box.
struct SafetyProblem {
    std::string name;
    int n = 0;
    int m = 0;
    std::vector<std::string> state_names; // empty means x1 .. xn
    std::vector<Expr> f;                  // n entries
    std::vector<std::vector<Expr>> g;     // n rows of m entries
    Expr h;
    Matrix input_A; // p x m
    Vector input_c; // p
    bool unbounded_input = false;
    HyperCube state_box;
    std::optional<HyperCube> initial_box; // metadata only

    /// Checks the shape and domain invariants; throws on violation.
    void validate() const
    {
        if (n <= 0 || m < 0) {
            throw DimensionError("SafetyProblem: need n > 0 and m >= 0");
        }
        if (static_cast<int>(f.size()) != n || static_cast<int>(g.size()) != n) {
            throw DimensionError("SafetyProblem: f and g must have n rows");
        }
        for (const auto& row : g) {
            if (static_cast<int>(row.size()) != m) {
                throw DimensionError("SafetyProblem: g must have m columns");
            }
        }
        if (state_box.dim() != n) {
            throw DimensionError("SafetyProblem: state box dimension differs from n");
        }
        for (int k = 0; k < n; ++k) {
            if (!(state_box.lo[k] < state_box.hi[k])) {
                throw PreconditionError("SafetyProblem: empty state box on axis " + std::to_string(k + 1));
            }
        }
        if (initial_box && initial_box->dim() != n) {
            throw DimensionError("SafetyProblem: initial box dimension differs from n");
        }
        if (input_A.rows() != input_c.size() || (input_A.rows() > 0 && input_A.cols() != m)) {
            throw DimensionError("SafetyProblem: input constraint shapes do not match");
        }
        if (unbounded_input && input_A.rows() > 0) {
            throw PreconditionError("SafetyProblem: unbounded input with constraint rows");
        }
        auto check_vars = [this](const Expr& e, const std::string& what) {
            if (e.max_variable() >= n) {
                throw DimensionError(what + " references x" + std::to_string(e.max_variable() + 1) + " but n = " +
                                     std::to_string(n));
            }
        };
        for (int k = 0; k < n; ++k) {
            check_vars(f[static_cast<std::size_t>(k)], "f" + std::to_string(k + 1));
            for (int j = 0; j < m; ++j) {
                check_vars(g[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)], "g");
            }
        }
        check_vars(h, "h");
    }

    const Expr& f_expr(int k) const { return f.at(static_cast<std::size_t>(k)); }
    const Expr& g_expr(int k, int j) const { return g.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(j)); }

    std::string state_name(int k) const
    {
        return state_names.empty() ? "x" + std::to_string(k + 1) : state_names.at(static_cast<std::size_t>(k));
    }

    friend bool operator==(const SafetyProblem& a, const SafetyProblem& b)
    {
        return a.name == b.name && a.n == b.n && a.m == b.m && a.state_names == b.state_names && a.f == b.f &&
               a.g == b.g && a.h == b.h && same_entries(a.input_A, b.input_A) && same_entries(a.input_c, b.input_c) &&
               a.unbounded_input == b.unbounded_input && a.state_box == b.state_box && a.initial_box == b.initial_box;
    }
};

inline Vector eval_f(const SafetyProblem& p, const Vector& x)
{
    require_size(x, p.n, "eval_f");
    Vector out(p.n);
    for (int k = 0; k < p.n; ++k) {
        out[k] = p.f_expr(k).eval(x);
    }
    return out;
}

inline Matrix eval_g(const SafetyProblem& p, const Vector& x)
{
    require_size(x, p.n, "eval_g");
    Matrix out(p.n, p.m);
    for (int k = 0; k < p.n; ++k) {
        for (int j = 0; j < p.m; ++j) {
            out(k, j) = p.g_expr(k, j).eval(x);
        }
    }
    return out;
}

inline double eval_h(const SafetyProblem& p, const Vector& x)
{
    require_size(x, p.n, "eval_h");
    return p.h.eval(x);
}

/// G when every entry of g is a constant expression.
inline std::optional<Matrix> is_constant_g(const SafetyProblem& p)
{
    Matrix out(p.n, p.m);
    for (int k = 0; k < p.n; ++k) {
        for (int j = 0; j < p.m; ++j) {
            const Expr& e = p.g_expr(k, j);
            if (!e.is_constant()) {
                return std::nullopt;
            }
            out(k, j) = e.value();
        }
    }
    return out;
}

/// f(x) = F x + f0 when every entry of f is affine.
struct AffineDrift {
    Matrix F;
    Vector f0;
};

inline std::optional<AffineDrift> affine_f(const SafetyProblem& p)
{
    AffineDrift out{Matrix::Zero(p.n, p.n), Vector::Zero(p.n)};
    for (int k = 0; k < p.n; ++k) {
        auto form = as_affine(p.f_expr(k), p.n);
        if (!form) {
            return std::nullopt;
        }
        out.F.row(k) = form->first.transpose();
        out.f0[k] = form->second;
    }
    return out;
}

/// U = {0} for m = 0, R^m when unbounded, {u : A u <= c} otherwise.
inline bool input_admissible(const SafetyProblem& p, const Vector& u, double tol = 1e-9)
{
    require_size(u, p.m, "input_admissible");
    if (p.unbounded_input || p.input_A.rows() == 0) {
        return true;
    }
    return ((p.input_A * u - p.input_c).array() <= tol).all();
}

} // namespace ncbf
