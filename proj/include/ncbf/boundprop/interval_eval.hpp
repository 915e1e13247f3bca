#pragma once

#include <vector>

#include "ncbf/box.hpp"
#include "ncbf/dynamics/problem.hpp"
#include "ncbf/interval.hpp"

namespace ncbf {

template <>
struct ExprArith<Interval> {
    static Interval constant(double v) { return Interval(v); }
    static Interval neg(const Interval& a) { return -a; }
    static Interval add(const Interval& a, const Interval& b) { return a + b; }
    static Interval sub(const Interval& a, const Interval& b) { return a - b; }
    static Interval mul(const Interval& a, const Interval& b) { return a * b; }
    static Interval div(const Interval& a, const Interval& b) { return a / b; }
    static Interval pow(const Interval& a, int k) { return ipow(a, k); }
    static Interval sin(const Interval& a) { return ncbf::sin(a); }
    static Interval cos(const Interval& a) { return ncbf::cos(a); }
    static Interval sqrt(const Interval& a) { return ncbf::sqrt(a); }
    static Interval abs(const Interval& a) { return ncbf::abs(a); }
    static Interval min(const Interval& a, const Interval& b) { return ncbf::min(a, b); }
    static Interval max(const Interval& a, const Interval& b) { return ncbf::max(a, b); }
};

/// Enclosure of e over the box. Throws DomainError when a division or sqrt
/// argument cannot be excluded from its bad set over the box.
inline Interval interval_eval(const Expr& e, const HyperCube& box)
{
    const std::vector<Interval> vars = box.intervals();
    return e.eval_as<Interval>(vars);
}

/// Interval image of f, one entry per state.
inline std::vector<Interval> interval_f(const SafetyProblem& p, const HyperCube& box)
{
    const std::vector<Interval> vars = box.intervals();
    std::vector<Interval> out(static_cast<std::size_t>(p.n));
    for (int k = 0; k < p.n; ++k) {
        out[static_cast<std::size_t>(k)] = p.f_expr(k).eval_as<Interval>(vars);
    }
    return out;
}

/// Interval image of g, row-major n x m.
inline std::vector<std::vector<Interval>> interval_g(const SafetyProblem& p, const HyperCube& box)
{
    const std::vector<Interval> vars = box.intervals();
    std::vector<std::vector<Interval>> out(static_cast<std::size_t>(p.n),
                                           std::vector<Interval>(static_cast<std::size_t>(p.m)));
    for (int k = 0; k < p.n; ++k) {
        for (int j = 0; j < p.m; ++j) {
            out[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = p.g_expr(k, j).eval_as<Interval>(vars);
        }
    }
    return out;
}

} // namespace ncbf
