#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ncbf/boundprop/bounds.hpp"
#include "ncbf/boundprop/interval_eval.hpp"
#include "ncbf/certify/farkas_system.hpp"
#include "ncbf/enumerate/atlas.hpp"
#include "ncbf/feasolver/bnb.hpp"
#include "ncbf/parallel.hpp"

namespace ncbf {

enum class Status { Safe, Unsafe, Inconclusive };

inline std::string to_string(Status s)
{
    switch (s) {
    case Status::Safe:
        return "SAFE";
    case Status::Unsafe:
        return "UNSAFE";
    case Status::Inconclusive:
        return "INCONCLUSIVE";
    }
    return "UNKNOWN";
}

struct VerifyConfig {
    AtlasConfig atlas;
    double eps_strict = 1e-7;
    BnbLimits limits{1e-9, 2'000'000};
    bool check_containment = true;
};

/// Why one member pattern admits no input at the counterexample.
struct MemberDiagnostic {
    std::string pattern;
    FarkasSystem system;
    Vector y;
    double margin = 0.0;
    std::string summary;
};

struct Counterexample {
    std::string kind; // correctness, feasibility, intersection or containment
    std::string check;
    Vector x;
    double b = 0.0;
    double h = 0.0;
    std::string unstable; // neurons vanishing at x
    std::vector<MemberDiagnostic> members;
};

/// An input that satisfies the rows of `pattern` at every state of `box`
/// (intersected with the face under check).
struct InputWitness {
    std::string pattern;
    HyperCube box;
    Vector u;
};

struct CheckRecord {
    std::string id;
    std::string kind;
    std::string subject;
    Status status = Status::Safe;
    std::string method;
    std::size_t nodes = 0;
    std::string note;
    std::optional<Counterexample> counterexample;
    std::vector<InputWitness> witnesses;
};

struct Verdict {
    Status status = Status::Safe;
    std::optional<Counterexample> counterexample;
    std::vector<CheckRecord> checks;
    Atlas atlas;
    std::string reason;
    double atlas_seconds = 0.0;
    double check_seconds = 0.0;
};

namespace detail {

inline LinearRow affine_row(const AffineMap& map, RowSense sense)
{
    return {map.normal, sense, -map.offset};
}

/// Linear description of the closed face of `region` on {b = 0}, with the
/// `pinned` neurons forced to vanish.
inline std::vector<LinearRow> face_rows(const AffineRegion& region, const UnstableSet& pinned)
{
    std::vector<LinearRow> rows;
    for (const auto& c : region.membership()) {
        const bool is_pinned = std::binary_search(pinned.begin(), pinned.end(), c.neuron);
        rows.push_back(affine_row(c.map, is_pinned ? RowSense::Eq
                                                   : (c.sense == SignSense::NonNegative ? RowSense::Ge : RowSense::Le)));
    }
    rows.push_back(affine_row(region.output_map(), RowSense::Eq));
    return rows;
}

inline std::string unstable_string(const UnstableSet& s)
{
    std::string out;
    for (const auto& id : s) {
        out += (out.empty() ? "" : ",") + neuron_label(id);
    }
    return out;
}

/// Verified counterexample to the input-feasibility condition at x: every
/// pattern of S(x) has an infeasible u-system with a Farkas certificate.
inline std::optional<Counterexample> feasibility_counterexample(const SafetyProblem& problem, const ReluNetwork& net,
                                                                const Vector& x, const VerifyConfig& cfg)
{
    const double bx = net.evaluate(x);
    if (std::abs(bx) > 1e-6) {
        return std::nullopt;
    }
    Vector fx;
    Matrix gx;
    try {
        fx = eval_f(problem, x);
        gx = eval_g(problem, x);
    } catch (const DomainError&) {
        return std::nullopt;
    }
    const auto point = activation_pattern(net, x, cfg.atlas.zero_tol);
    if (point.unstable.size() > 16) {
        return std::nullopt;
    }
    Counterexample cex;
    cex.x = x;
    cex.b = bx;
    try {
        cex.h = eval_h(problem, x);
    } catch (const DomainError&) {
        cex.h = NAN;
    }
    cex.unstable = unstable_string(point.unstable);
    for (const auto& s : toggle_closure(point.pattern, point.unstable)) {
        const AffineRegion region = affine_region(net, s);
        FarkasSystem sys = build_farkas_system(problem, cone_rows(region, point.unstable), fx, gx);
        const auto cert = farkas_check(sys.theta, sys.lambda, cfg.eps_strict);
        if (!cert) {
            return std::nullopt;
        }
        MemberDiagnostic d;
        d.pattern = s.to_string();
        d.summary = describe_system(sys);
        d.system = std::move(sys);
        d.y = cert->y;
        d.margin = cert->margin;
        cex.members.push_back(std::move(d));
    }
    return cex;
}

/// Interval enclosure of one u-system row over a box.
struct IntervalRow {
    std::vector<Interval> theta;
    Interval lambda;
};

inline Interval dot_interval(const Vector& w, const std::vector<Interval>& v)
{
    Interval acc(0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double wk = w[static_cast<Eigen::Index>(k)];
        if (wk != 0.0) {
            acc = acc + Interval(wk) * v[k];
        }
    }
    return acc;
}

inline std::vector<IntervalRow> interval_rows(const std::vector<ConeRow>& rows, const std::vector<Interval>& f,
                                              const std::vector<std::vector<Interval>>& g, int m)
{
    std::vector<IntervalRow> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        IntervalRow r;
        const Interval wf = dot_interval(row.w, f);
        r.theta.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            std::vector<Interval> col(g.size());
            for (std::size_t k = 0; k < g.size(); ++k) {
                col[k] = g[k][static_cast<std::size_t>(j)];
            }
            const Interval wg = dot_interval(row.w, col);
            r.theta[static_cast<std::size_t>(j)] = row.ge ? -wg : wg;
        }
        r.lambda = row.ge ? wf : -wf;
        out.push_back(std::move(r));
    }
    return out;
}

/// Is there one u in U satisfying every row for all states in the box (up to
/// eps)? Solved as an LP in u = u+ - u-, then re-checked in interval
/// arithmetic. Returns the input.
inline std::optional<Vector> robust_input(const SafetyProblem& problem, const std::vector<IntervalRow>& rows, double eps)
{
    const int m = problem.m;
    if (m == 0) {
        for (const auto& r : rows) {
            if (r.lambda.lo < -eps) {
                return std::nullopt;
            }
        }
        return Vector(0);
    }
    LinearProgram lp(2 * m);
    for (int j = 0; j < 2 * m; ++j) {
        lp.set_bounds(j, 0.0, INFINITY);
    }
    for (const auto& r : rows) {
        Vector a(2 * m);
        for (int j = 0; j < m; ++j) {
            a[j] = r.theta[static_cast<std::size_t>(j)].hi;
            a[m + j] = -r.theta[static_cast<std::size_t>(j)].lo;
        }
        if (!std::isfinite(r.lambda.lo) || !all_finite(a)) {
            return std::nullopt;
        }
        lp.add_row(a, RowSense::Le, r.lambda.lo + 0.5 * eps);
    }
    for (Eigen::Index i = 0; i < problem.input_A.rows(); ++i) {
        Vector a(2 * m);
        a.head(m) = problem.input_A.row(i).transpose();
        a.tail(m) = -problem.input_A.row(i).transpose();
        lp.add_row(a, RowSense::Le, problem.input_c[i]);
    }
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        return std::nullopt;
    }
    const Vector u = sol.x.head(m) - sol.x.tail(m);
    for (const auto& r : rows) {
        Interval acc(0.0);
        for (int j = 0; j < m; ++j) {
            acc = acc + r.theta[static_cast<std::size_t>(j)] * Interval(u[j]);
        }
        if (acc.hi > r.lambda.lo + eps) {
            return std::nullopt;
        }
    }
    if (!input_admissible(problem, u, 1e-9)) {
        return std::nullopt;
    }
    return u;
}

struct MemberData {
    AffineRegion region;
    std::vector<ConeRow> rows;
};

/// Branch and bound over a face: prune boxes where some member admits a
/// single input for the whole box, stop at a verified counterexample.
inline CheckRecord feasibility_bnb(const SafetyProblem& problem, const ReluNetwork& net,
                                   const std::vector<LinearRow>& slice, const std::vector<MemberData>& members,
                                   CheckRecord rec, const VerifyConfig& cfg)
{
    const auto root = tighten_box(slice, problem.state_box);
    if (!root) {
        rec.status = Status::Safe;
        rec.method = "empty";
        return rec;
    }
    std::optional<Counterexample> found;
    auto classify = [&](const HyperCube& box) -> BoxDecision {
        auto tight = tighten_box(slice, box);
        if (!tight) {
            return BoxDecision::pruned();
        }
        try {
            const auto fi = interval_f(problem, *tight);
            const auto gi = interval_g(problem, *tight);
            for (const auto& mem : members) {
                if (auto u = robust_input(problem, interval_rows(mem.rows, fi, gi, problem.m), cfg.eps_strict)) {
                    rec.witnesses.push_back({mem.region.pattern().to_string(), *tight, std::move(*u)});
                    return BoxDecision::pruned();
                }
            }
        } catch (const DomainError&) {
            // Enclosure unavailable on this box; keep splitting.
        }
        auto x = closest_point(slice, *tight, tight->center());
        if (!x) {
            return BoxDecision::pruned();
        }
        if (auto cex = feasibility_counterexample(problem, net, *x, cfg)) {
            found = std::move(cex);
            return BoxDecision::feasible(*x);
        }
        BoxDecision d;
        d.refined = *tight;
        return d;
    };
    const auto outcome = branch_and_bound(*root, classify, cfg.limits);
    rec.nodes = outcome.nodes;
    rec.method = rec.method.empty() ? "bnb" : rec.method;
    if (outcome.status == BnbStatus::Feasible) {
        rec.status = Status::Unsafe;
        found->kind = rec.kind;
        found->check = rec.id;
        rec.counterexample = std::move(found);
    } else if (outcome.status == BnbStatus::Inconclusive) {
        rec.status = Status::Inconclusive;
        rec.note = outcome.reason;
    } else {
        rec.status = Status::Safe;
    }
    return rec;
}

inline std::optional<Counterexample> correctness_counterexample(const SafetyProblem& problem, const ReluNetwork& net,
                                                                const Vector& x, double eps)
{
    const double bx = net.evaluate(x);
    double hx = 0.0;
    try {
        hx = eval_h(problem, x);
    } catch (const DomainError&) {
        return std::nullopt;
    }
    if (std::abs(bx) > 1e-6 || hx > -eps) {
        return std::nullopt;
    }
    Counterexample cex;
    cex.x = x;
    cex.b = bx;
    cex.h = hx;
    return cex;
}

} // namespace detail

/// Condition 1 shortcut: with U = R^m and constant g, any face whose output
/// gradient is not orthogonal to g is feasible (u can push b upwards).
inline bool corollary_fast_path(const SafetyProblem& problem, const AffineRegion& region, double tol = 1e-12)
{
    if (problem.m == 0 || !(problem.unbounded_input || problem.input_A.rows() == 0)) {
        return false;
    }
    const auto g = is_constant_g(problem);
    if (!g) {
        return false;
    }
    return (g->transpose() * region.output_gradient()).cwiseAbs().maxCoeff() > tol;
}

/// Checks h >= 0 on the closed face of one boundary pattern.
inline CheckRecord check_correctness(const SafetyProblem& problem, const ReluNetwork& net, const ActivationPattern& pattern,
                                     const VerifyConfig& cfg)
{
    CheckRecord rec;
    rec.kind = "correctness";
    rec.subject = pattern.to_string();
    rec.id = rec.kind + ":" + rec.subject;
    const AffineRegion region = affine_region(net, pattern);
    const auto slice = detail::face_rows(region, {});
    const double eps = cfg.eps_strict;
    if (auto aff = as_affine(problem.h, problem.n)) {
        rec.method = "lp";
        LinearProgram lp(problem.n);
        for (int k = 0; k < problem.n; ++k) {
            lp.set_bounds(k, problem.state_box.lo[k], problem.state_box.hi[k]);
        }
        for (const auto& r : slice) {
            lp.add_row(r.a, r.sense, r.rhs);
        }
        lp.set_objective(aff->first);
        const auto sol = solve_lp(lp);
        if (sol.status == LpStatus::Optimal) {
            if (auto cex = detail::correctness_counterexample(problem, net, sol.x, eps)) {
                cex->kind = rec.kind;
                cex->check = rec.id;
                rec.status = Status::Unsafe;
                rec.counterexample = std::move(cex);
                return rec;
            }
            if (sol.objective + aff->second > -eps) {
                rec.status = Status::Safe;
                return rec;
            }
        } else if (sol.status == LpStatus::Infeasible) {
            rec.status = Status::Safe;
            return rec;
        }
    }
    rec.method = "bnb";
    const auto root = tighten_box(slice, problem.state_box);
    if (!root) {
        rec.status = Status::Safe;
        return rec;
    }
    std::optional<Counterexample> found;
    auto classify = [&](const HyperCube& box) -> BoxDecision {
        auto tight = tighten_box(slice, box);
        if (!tight) {
            return BoxDecision::pruned();
        }
        try {
            if (interval_eval(problem.h, *tight).lo > -eps) {
                return BoxDecision::pruned();
            }
        } catch (const DomainError&) {
        }
        auto x = closest_point(slice, *tight, tight->center());
        if (!x) {
            return BoxDecision::pruned();
        }
        if (auto cex = detail::correctness_counterexample(problem, net, *x, eps)) {
            found = std::move(cex);
            return BoxDecision::feasible(*x);
        }
        BoxDecision d;
        d.refined = *tight;
        return d;
    };
    const auto outcome = branch_and_bound(*root, classify, cfg.limits);
    rec.nodes = outcome.nodes;
    if (outcome.status == BnbStatus::Feasible) {
        found->kind = rec.kind;
        found->check = rec.id;
        rec.status = Status::Unsafe;
        rec.counterexample = std::move(found);
    } else if (outcome.status == BnbStatus::Inconclusive) {
        rec.status = Status::Inconclusive;
        rec.note = outcome.reason;
    }
    return rec;
}

/// Checks that every point of the closed face of one boundary pattern admits
/// an input keeping b nondecreasing.
inline CheckRecord check_feasibility(const SafetyProblem& problem, const ReluNetwork& net, const ActivationPattern& pattern,
                                     const VerifyConfig& cfg)
{
    CheckRecord rec;
    rec.kind = "feasibility";
    rec.subject = pattern.to_string();
    rec.id = rec.kind + ":" + rec.subject;
    const AffineRegion region = affine_region(net, pattern);
    if (corollary_fast_path(problem, region)) {
        rec.method = "corollary";
        rec.status = Status::Safe;
        return rec;
    }
    const auto slice = detail::face_rows(region, {});
    const auto g = is_constant_g(problem);
    const auto f = affine_f(problem);
    if (g && f) {
        // b-dot >= 0 is achievable at x iff wbar^T f(x) + max_{u in U} wbar^T G u >= 0.
        rec.method = "lp";
        const Vector wg = g->transpose() * region.output_gradient();
        double best_push = 0.0;
        Vector best_u = Vector::Zero(problem.m);
        bool unbounded_push = false;
        if (problem.m > 0 && wg.cwiseAbs().maxCoeff() > 0.0) {
            LinearProgram up(problem.m);
            for (Eigen::Index i = 0; i < problem.input_A.rows(); ++i) {
                up.add_row(problem.input_A.row(i).transpose(), RowSense::Le, problem.input_c[i]);
            }
            up.set_objective(-wg);
            const auto s = solve_lp(up);
            if (s.status == LpStatus::Unbounded) {
                unbounded_push = true;
            } else if (s.status == LpStatus::Optimal) {
                best_push = -s.objective;
                best_u = s.x;
            } else {
                rec.method.clear();
            }
        }
        if (unbounded_push) {
            rec.status = Status::Safe;
            return rec;
        }
        if (!rec.method.empty()) {
            LinearProgram lp(problem.n);
            for (int k = 0; k < problem.n; ++k) {
                lp.set_bounds(k, problem.state_box.lo[k], problem.state_box.hi[k]);
            }
            for (const auto& r : slice) {
                lp.add_row(r.a, r.sense, r.rhs);
            }
            const Vector drift = f->F.transpose() * region.output_gradient();
            lp.set_objective(drift);
            const auto sol = solve_lp(lp);
            if (sol.status == LpStatus::Infeasible) {
                rec.status = Status::Safe;
                return rec;
            }
            if (sol.status == LpStatus::Optimal) {
                const double worst = sol.objective + region.output_gradient().dot(f->f0) + best_push;
                if (worst >= -cfg.eps_strict) {
                    rec.status = Status::Safe;
                    rec.witnesses.push_back({rec.subject, problem.state_box, best_u});
                    return rec;
                }
                if (auto cex = detail::feasibility_counterexample(problem, net, sol.x, cfg)) {
                    cex->kind = rec.kind;
                    cex->check = rec.id;
                    rec.status = Status::Unsafe;
                    rec.counterexample = std::move(cex);
                    return rec;
                }
            }
            rec.method = "lp+bnb";
        }
    }
    std::vector<detail::MemberData> members;
    members.push_back({region, cone_rows(region, {})});
    return detail::feasibility_bnb(problem, net, slice, members, rec, cfg);
}

/// Checks one intersection: every point of its face must admit an input for
/// at least one member pattern.
inline CheckRecord check_intersection(const SafetyProblem& problem, const ReluNetwork& net, const Intersection& t,
                                      const VerifyConfig& cfg)
{
    CheckRecord rec;
    rec.kind = "intersection";
    rec.subject = t.key;
    rec.id = rec.kind + ":" + rec.subject;
    const AffineRegion base = affine_region(net, t.base);
    const auto slice = detail::face_rows(base, t.pinned);
    std::vector<detail::MemberData> members;
    for (const auto& s : t.members) {
        AffineRegion r = affine_region(net, s);
        auto rows = cone_rows(r, t.pinned);
        members.push_back({std::move(r), std::move(rows)});
    }
    return detail::feasibility_bnb(problem, net, slice, members, rec, cfg);
}

/// Every point of the state box with b >= 0 must satisfy h >= 0.
inline CheckRecord check_containment(const SafetyProblem& problem, const ReluNetwork& net, const VerifyConfig& cfg)
{
    CheckRecord rec;
    rec.kind = "containment";
    rec.subject = "box";
    rec.id = rec.kind;
    rec.method = "bnb";
    const double eps = cfg.eps_strict;
    std::optional<Counterexample> found;
    auto classify = [&](const HyperCube& box) -> BoxDecision {
        const auto bounds = linear_relaxation_bounds(net, box, cfg.atlas.zero_tol);
        if (bounds.output.hi < 0.0) {
            return BoxDecision::pruned();
        }
        try {
            if (interval_eval(problem.h, box).lo > -eps) {
                return BoxDecision::pruned();
            }
        } catch (const DomainError&) {
        }
        const Vector x = box.center();
        const double bx = net.evaluate(x);
        if (bx >= 0.0) {
            try {
                const double hx = eval_h(problem, x);
                if (hx <= -eps) {
                    Counterexample cex;
                    cex.kind = rec.kind;
                    cex.check = rec.id;
                    cex.x = x;
                    cex.b = bx;
                    cex.h = hx;
                    found = std::move(cex);
                    return BoxDecision::feasible(x);
                }
            } catch (const DomainError&) {
            }
        }
        return {};
    };
    const auto outcome = branch_and_bound(problem.state_box, classify, cfg.limits);
    rec.nodes = outcome.nodes;
    if (outcome.status == BnbStatus::Feasible) {
        rec.status = Status::Unsafe;
        rec.counterexample = std::move(found);
    } else if (outcome.status == BnbStatus::Inconclusive) {
        rec.status = Status::Inconclusive;
        rec.note = outcome.reason;
    }
    return rec;
}

/// Full verification: atlas, then per-pattern correctness and feasibility,
/// intersections, and box containment. The reported counterexample is the
/// first failing check in that order.
inline Verdict verify(const SafetyProblem& problem, const ReluNetwork& net, const VerifyConfig& cfg = {})
{
    problem.validate();
    if (net.input_dim() != problem.n) {
        throw DimensionError("verify: network input dimension " + std::to_string(net.input_dim()) +
                             " differs from system dimension " + std::to_string(problem.n));
    }
    using clock = std::chrono::steady_clock;
    Verdict v;
    const auto t0 = clock::now();
    v.atlas = build_atlas(net, problem.state_box, cfg.atlas);
    const auto t1 = clock::now();

    const std::size_t np = v.atlas.patterns.size();
    const std::size_t nt = v.atlas.intersections.size();
    const std::size_t total = 2 * np + nt + (cfg.check_containment ? 1 : 0);
    v.checks.resize(total);
    parallel_for(total, cfg.atlas.threads, [&](std::size_t i) {
        if (i < np) {
            v.checks[i] = check_correctness(problem, net, v.atlas.patterns[i].pattern, cfg);
        } else if (i < 2 * np) {
            v.checks[i] = check_feasibility(problem, net, v.atlas.patterns[i - np].pattern, cfg);
        } else if (i < 2 * np + nt) {
            v.checks[i] = check_intersection(problem, net, v.atlas.intersections[i - 2 * np], cfg);
        } else {
            v.checks[i] = check_containment(problem, net, cfg);
        }
    });
    const auto t2 = clock::now();
    v.atlas_seconds = std::chrono::duration<double>(t1 - t0).count();
    v.check_seconds = std::chrono::duration<double>(t2 - t1).count();

    bool inconclusive = !v.atlas.complete;
    for (const auto& c : v.checks) {
        if (c.status == Status::Unsafe && !v.counterexample) {
            v.counterexample = c.counterexample;
            v.reason = c.id;
        }
        inconclusive = inconclusive || c.status == Status::Inconclusive;
    }
    if (v.counterexample) {
        v.status = Status::Unsafe;
    } else if (inconclusive) {
        v.status = Status::Inconclusive;
        v.reason = !v.atlas.complete ? "boundary atlas incomplete" : "some checks were inconclusive";
    } else {
        v.status = Status::Safe;
    }
    return v;
}

} // namespace ncbf
