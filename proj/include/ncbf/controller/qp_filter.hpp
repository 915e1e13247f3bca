#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/certify/farkas_system.hpp"
#include "ncbf/controller/projection_qp.hpp"

namespace ncbf {

using NominalPolicy = std::function<Vector(const Vector&)>;

inline NominalPolicy zero_nominal(int m)
{
    return [m](const Vector&) { return Vector::Zero(m); };
}

/// u = -K x.
inline NominalPolicy linear_feedback(Matrix K)
{
    return [K = std::move(K)](const Vector& x) { return Vector(-K * x); };
}

inline NominalPolicy expression_nominal(std::vector<Expr> components)
{
    return [c = std::move(components)](const Vector& x) {
        Vector u(static_cast<Eigen::Index>(c.size()));
        for (std::size_t j = 0; j < c.size(); ++j) {
            u[static_cast<Eigen::Index>(j)] = c[j].eval(x);
        }
        return u;
    };
}

enum class Fallback { HoldNominal, ZeroInput };

struct QpPolicy {
    ReluNetwork net;
    SafetyProblem problem;
    NominalPolicy nominal;
    double kappa = 1.0;
    Fallback fallback = Fallback::HoldNominal;
    double activation_tol = 1e-9;

    QpPolicy(ReluNetwork n, SafetyProblem p, NominalPolicy nom, double k = 1.0)
        : net(std::move(n)), problem(std::move(p)), nominal(std::move(nom)), kappa(k)
    {
        if (!(kappa > 0.0)) {
            throw PreconditionError("QpPolicy: kappa must be positive");
        }
        if (net.input_dim() != problem.n) {
            throw DimensionError("QpPolicy: network and system dimensions differ");
        }
        if (!nominal) {
            nominal = zero_nominal(problem.m);
        }
    }
};

struct FilterResult {
    Vector u;
    std::string pattern; // chosen activation pattern, empty when infeasible
    bool feasible = true;
    double objective = 0.0;
    std::size_t programs = 0; // one per pattern of S(x)
};

/// The u-system of one pattern with the output row relaxed to
/// W^T (f + g u) >= -kappa b(x).
inline FarkasSystem filter_system(const QpPolicy& policy, const AffineRegion& region, const UnstableSet& unstable,
                                  const Vector& fx, const Matrix& gx, double bx)
{
    FarkasSystem sys = build_farkas_system(policy.problem, cone_rows(region, unstable), fx, gx);
    sys.lambda[static_cast<Eigen::Index>(unstable.size())] += policy.kappa * bx;
    return sys;
}

/// Closest input to the nominal one that keeps some pattern of S(x) forward
/// admissible, with one QP per pattern.
inline FilterResult qp_filter(const QpPolicy& policy, const Vector& x)
{
    const auto& problem = policy.problem;
    require_size(x, problem.n, "qp_filter");
    if (!problem.state_box.contains(x)) {
        throw PreconditionError("qp_filter: state outside the state box");
    }
    const Vector mu = policy.nominal(x);
    require_size(mu, problem.m, "qp_filter nominal input");
    const Vector fx = eval_f(problem, x);
    const Matrix gx = eval_g(problem, x);
    const double bx = policy.net.evaluate(x);
    const auto point = activation_pattern(policy.net, x, policy.activation_tol);

    FilterResult out;
    out.feasible = false;
    for (const auto& s : toggle_closure(point.pattern, point.unstable)) {
        ++out.programs;
        const auto sys = filter_system(policy, affine_region(policy.net, s), point.unstable, fx, gx, bx);
        const auto sol = project_onto_polyhedron(sys.theta, sys.lambda, mu);
        if (sol && (!out.feasible || sol->objective < out.objective)) {
            out.feasible = true;
            out.u = sol->u;
            out.objective = sol->objective;
            out.pattern = s.to_string();
        }
    }
    if (!out.feasible) {
        out.u = policy.fallback == Fallback::HoldNominal ? mu : Vector::Zero(problem.m);
        out.objective = (out.u - mu).squaredNorm();
    }
    return out;
}

} // namespace ncbf
