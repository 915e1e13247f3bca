#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/boundprop/interval_eval.hpp"
#include "ncbf/box.hpp"
#include "ncbf/dynamics/expr.hpp"
#include "ncbf/feasolver/lp.hpp"

namespace ncbf {

enum class BoxVerdict { Pruned, Feasible, Undecided };

/// What a classifier learned about one box. `refined` (optional) is a
/// sub-box known to contain every feasible point of the box.
struct BoxDecision {
    BoxVerdict verdict = BoxVerdict::Undecided;
    Vector witness;
    std::optional<HyperCube> refined;

    static BoxDecision pruned() { return {BoxVerdict::Pruned, {}, {}}; }
    static BoxDecision feasible(Vector x) { return {BoxVerdict::Feasible, std::move(x), {}}; }
};

struct BnbLimits {
    double min_box_width = 1e-9;
    std::size_t max_nodes = 2'000'000;
};

enum class BnbStatus { Feasible, InfeasibleCertified, Inconclusive };

inline std::string to_string(BnbStatus s)
{
    switch (s) {
    case BnbStatus::Feasible:
        return "feasible";
    case BnbStatus::InfeasibleCertified:
        return "infeasible_certified";
    case BnbStatus::Inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

struct BnbOutcome {
    BnbStatus status = BnbStatus::InfeasibleCertified;
    Vector witness;
    std::size_t nodes = 0;
    std::optional<HyperCube> unresolved; // first box left undecided
    std::string reason;
};

/// Depth-first branch and bound. Boxes are bisected along the axis that is
/// widest relative to the root box. Search stops at the first feasible box;
/// undecided boxes below the width limit, or hitting the node limit, make
/// the outcome inconclusive.
template <typename Classify>
BnbOutcome branch_and_bound(const HyperCube& root, Classify&& classify, const BnbLimits& limits = {})
{
    BnbOutcome out;
    const Vector root_width = root.hi - root.lo;
    std::vector<HyperCube> stack{root};
    while (!stack.empty()) {
        if (out.nodes >= limits.max_nodes) {
            out.status = BnbStatus::Inconclusive;
            out.reason = "node limit reached";
            if (!out.unresolved) {
                out.unresolved = stack.back();
            }
            return out;
        }
        HyperCube box = std::move(stack.back());
        stack.pop_back();
        ++out.nodes;
        BoxDecision d = classify(static_cast<const HyperCube&>(box));
        if (d.verdict == BoxVerdict::Pruned) {
            continue;
        }
        if (d.verdict == BoxVerdict::Feasible) {
            out.status = BnbStatus::Feasible;
            out.witness = std::move(d.witness);
            out.reason.clear();
            return out;
        }
        if (d.refined) {
            box = *d.refined;
        }
        Eigen::Index axis = -1;
        double best = -1.0;
        double widest = 0.0;
        for (Eigen::Index k = 0; k < box.dim(); ++k) {
            const double w = box.hi[k] - box.lo[k];
            widest = std::max(widest, w);
            const double rel = root_width[k] > 0.0 ? w / root_width[k] : 0.0;
            if (rel > best && w > 0.0) {
                best = rel;
                axis = k;
            }
        }
        const double scale = 1.0 + box.center().cwiseAbs().maxCoeff();
        if (axis < 0 || widest <= limits.min_box_width * scale) {
            if (!out.unresolved) {
                out.unresolved = box;
            }
            out.status = BnbStatus::Inconclusive;
            out.reason = "undecided box at width limit";
            continue;
        }
        auto [left, right] = box.bisect(axis);
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return out;
}

/// Smallest sub-box of `box` containing {x in box : rows}. Returns nothing
/// when that set is empty.
inline std::optional<HyperCube> tighten_box(const std::vector<LinearRow>& rows, const HyperCube& box)
{
    if (rows.empty()) {
        return box;
    }
    const auto n = static_cast<int>(box.dim());
    LinearProgram lp(n);
    for (int k = 0; k < n; ++k) {
        lp.set_bounds(k, box.lo[k], box.hi[k]);
    }
    for (const auto& r : rows) {
        lp.add_row(r.a, r.sense, r.rhs);
    }
    HyperCube out = box;
    for (int k = 0; k < n; ++k) {
        if (box.lo[k] == box.hi[k]) {
            continue;
        }
        for (double dir : {1.0, -1.0}) {
            Vector c = Vector::Zero(n);
            c[k] = dir;
            lp.set_objective(c);
            const auto sol = solve_lp(lp);
            if (sol.status == LpStatus::Infeasible) {
                return std::nullopt;
            }
            if (sol.status != LpStatus::Optimal) {
                continue;
            }
            // Widen by the solver tolerance so the box stays an enclosure.
            const double pad = 1e-9 * (1.0 + std::abs(sol.x[k]));
            if (dir > 0) {
                out.lo[k] = std::max(box.lo[k], sol.x[k] - pad);
            } else {
                out.hi[k] = std::min(box.hi[k], sol.x[k] + pad);
            }
        }
        if (out.lo[k] > out.hi[k]) {
            const double m = 0.5 * (out.lo[k] + out.hi[k]);
            out.lo[k] = out.hi[k] = m;
        }
    }
    return out;
}

/// Point of {x in box : rows} closest to `target` in the 1-norm, or nothing
/// when the set is empty.
inline std::optional<Vector> closest_point(const std::vector<LinearRow>& rows, const HyperCube& box, const Vector& target)
{
    if (rows.empty()) {
        return target.cwiseMax(box.lo).cwiseMin(box.hi);
    }
    const auto n = static_cast<int>(box.dim());
    LinearProgram lp(2 * n);
    Vector c = Vector::Zero(2 * n);
    for (int k = 0; k < n; ++k) {
        lp.set_bounds(k, box.lo[k], box.hi[k]);
        lp.set_bounds(n + k, 0.0, std::numeric_limits<double>::infinity());
        c[n + k] = 1.0;
        Vector a = Vector::Zero(2 * n);
        a[k] = 1.0;
        a[n + k] = -1.0;
        lp.add_row(a, RowSense::Le, target[k]);
        a[n + k] = 1.0;
        lp.add_row(a, RowSense::Ge, target[k]);
    }
    for (const auto& r : rows) {
        Vector a = Vector::Zero(2 * n);
        a.head(n) = r.a;
        lp.add_row(a, r.sense, r.rhs);
    }
    lp.set_objective(c);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        return std::nullopt;
    }
    return Vector(sol.x.head(n));
}

struct NonlinearConstraint {
    Expr expr;
    RowSense sense = RowSense::Le;
    double rhs = 0.0;
};

/// Existence question: is there x in box satisfying every constraint?
struct BnbProblem {
    HyperCube box;
    std::vector<NonlinearConstraint> constraints;
    std::vector<LinearRow> linear;
    double feas_tol = 1e-7;
    BnbLimits limits;
};

namespace detail {

inline bool certainly_violated(const Interval& v, const NonlinearConstraint& c)
{
    switch (c.sense) {
    case RowSense::Le:
        return v.lo > c.rhs;
    case RowSense::Ge:
        return v.hi < c.rhs;
    case RowSense::Eq:
        return v.lo > c.rhs || v.hi < c.rhs;
    }
    return false;
}

inline bool certainly_satisfied(const Interval& v, const NonlinearConstraint& c)
{
    switch (c.sense) {
    case RowSense::Le:
        return v.hi <= c.rhs;
    case RowSense::Ge:
        return v.lo >= c.rhs;
    case RowSense::Eq:
        return v.lo == c.rhs && v.hi == c.rhs;
    }
    return false;
}

inline double constraint_violation(double v, const NonlinearConstraint& c)
{
    switch (c.sense) {
    case RowSense::Le:
        return std::max(0.0, v - c.rhs);
    case RowSense::Ge:
        return std::max(0.0, c.rhs - v);
    case RowSense::Eq:
        return std::abs(v - c.rhs);
    }
    return 0.0;
}

} // namespace detail

/// Decides a BnbProblem. Affine constraints are handled exactly by LP, the
/// rest by interval pruning plus point sampling.
inline BnbOutcome bnb_certify(const BnbProblem& problem)
{
    const auto n = static_cast<int>(problem.box.dim());
    std::vector<LinearRow> linear = problem.linear;
    std::vector<NonlinearConstraint> nonlinear;
    for (const auto& c : problem.constraints) {
        if (c.expr.max_variable() >= n) {
            throw DimensionError("bnb_certify: constraint uses a variable outside the box");
        }
        if (auto aff = as_affine(c.expr, n)) {
            linear.push_back({aff->first, c.sense, c.rhs - aff->second});
        } else {
            nonlinear.push_back(c);
        }
    }
    auto classify = [&](const HyperCube& box) -> BoxDecision {
        BoxDecision d;
        auto tight = tighten_box(linear, box);
        if (!tight) {
            return BoxDecision::pruned();
        }
        bool all_satisfied = true;
        for (const auto& c : nonlinear) {
            Interval v;
            try {
                v = interval_eval(c.expr, *tight);
            } catch (const DomainError&) {
                all_satisfied = false;
                continue;
            }
            if (detail::certainly_violated(v, c)) {
                return BoxDecision::pruned();
            }
            all_satisfied = all_satisfied && detail::certainly_satisfied(v, c);
        }
        auto x = closest_point(linear, *tight, tight->center());
        if (!x) {
            return BoxDecision::pruned();
        }
        if (all_satisfied) {
            return BoxDecision::feasible(*x);
        }
        bool ok = true;
        for (const auto& c : nonlinear) {
            try {
                ok = ok && detail::constraint_violation(c.expr.eval(*x), c) <= problem.feas_tol;
            } catch (const DomainError&) {
                ok = false;
            }
        }
        if (ok) {
            return BoxDecision::feasible(*x);
        }
        d.refined = *tight;
        return d;
    };
    return branch_and_bound(problem.box, classify, problem.limits);
}

} // namespace ncbf
