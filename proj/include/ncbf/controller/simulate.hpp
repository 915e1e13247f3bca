#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ncbf/controller/qp_filter.hpp"

namespace ncbf {

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<double> b;
    std::vector<double> h;
    std::vector<std::string> patterns;
    std::vector<bool> infeasible;
    bool left_box = false;

    std::size_t size() const { return times.size(); }

    bool any_infeasible() const
    {
        for (bool f : infeasible) {
            if (f) {
                return true;
            }
        }
        return false;
    }

    double min_b() const
    {
        double m = INFINITY;
        for (double v : b) {
            m = std::min(m, v);
        }
        return m;
    }
};

/// One classical RK4 step of x' = f(x) + g(x) u with u held fixed.
inline Vector rk4_step(const SafetyProblem& problem, const Vector& x, const Vector& u, double dt)
{
    auto rhs = [&](const Vector& y) { return Vector(eval_f(problem, y) + eval_g(problem, y) * u); };
    const Vector k1 = rhs(x);
    const Vector k2 = rhs(x + 0.5 * dt * k1);
    const Vector k3 = rhs(x + 0.5 * dt * k2);
    const Vector k4 = rhs(x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Closed loop with the filtered input held over each step. Stops early,
/// setting `left_box`, when the state leaves the state box.
inline Trajectory simulate(const QpPolicy& policy, const Vector& x0, double dt, double horizon)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw PreconditionError("simulate: dt must be positive");
    }
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw PreconditionError("simulate: horizon must be finite and nonnegative");
    }
    const auto& problem = policy.problem;
    require_size(x0, problem.n, "simulate");
    Trajectory tr;
    if (!problem.state_box.contains(x0)) {
        tr.left_box = true;
        return tr;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    Vector x = x0;
    for (std::size_t k = 0;; ++k) {
        const auto fr = qp_filter(policy, x);
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.states.push_back(x);
        tr.inputs.push_back(fr.u);
        tr.b.push_back(policy.net.evaluate(x));
        tr.h.push_back(eval_h(problem, x));
        tr.patterns.push_back(fr.pattern);
        tr.infeasible.push_back(!fr.feasible);
        if (k == steps) {
            break;
        }
        x = rk4_step(problem, x, fr.u, dt);
        if (!all_finite(x) || !problem.state_box.contains(x)) {
            tr.left_box = true;
            break;
        }
    }
    return tr;
}

/// Columns t, states, inputs, b, h, flag (1 where every QP was infeasible).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const SafetyProblem& problem)
{
    os << "t";
    for (int k = 0; k < problem.n; ++k) {
        os << "," << problem.state_name(k);
    }
    for (int j = 0; j < problem.m; ++j) {
        os << ",u" << (j + 1);
    }
    os << ",b,h,flag\n";
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << tr.times[i];
        for (Eigen::Index k = 0; k < tr.states[i].size(); ++k) {
            os << "," << tr.states[i][k];
        }
        for (Eigen::Index j = 0; j < tr.inputs[i].size(); ++j) {
            os << "," << tr.inputs[i][j];
        }
        os << "," << tr.b[i] << "," << tr.h[i] << "," << (tr.infeasible[i] ? 1 : 0) << "\n";
    }
    os.precision(old);
}

} // namespace ncbf
