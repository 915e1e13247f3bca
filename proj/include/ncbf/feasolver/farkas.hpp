#pragma once

#include <optional>

#include "ncbf/feasolver/lp.hpp"

namespace ncbf {

/// Result of the theorem of the alternative for Theta u <= Lambda.
struct AlternativeCertificate {
    Vector y;           // y >= 0, sum(y) = 1
    double margin = 0;  // -y^T Lambda
    double residual = 0; // || y^T Theta ||_inf
};

/// Finds y >= 0 with y^T Theta = 0 and y^T Lambda <= -eps_strict (y scaled to
/// sum 1), proving Theta u <= Lambda has no solution. Returns nothing when no
/// such y exists, in which case the primal system is feasible up to
/// eps_strict.
inline std::optional<AlternativeCertificate> farkas_check(const Matrix& theta, const Vector& lambda,
                                                          double eps_strict = 1e-7)
{
    const Eigen::Index p = theta.rows();
    const Eigen::Index m = theta.cols();
    require_size(lambda, p, "farkas_check");
    if (p == 0) {
        return std::nullopt;
    }
    AlternativeCertificate cert;
    if (m == 0) {
        Eigen::Index worst = 0;
        lambda.minCoeff(&worst);
        if (lambda[worst] > -eps_strict) {
            return std::nullopt;
        }
        cert.y = Vector::Zero(p);
        cert.y[worst] = 1.0;
        cert.margin = -lambda[worst];
        return cert;
    }
    LinearProgram lp(static_cast<int>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        lp.set_bounds(static_cast<int>(i), 0.0, std::numeric_limits<double>::infinity());
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        lp.add_row(theta.col(j), RowSense::Eq, 0.0);
    }
    lp.add_row(Vector::Ones(p), RowSense::Eq, 1.0);
    lp.set_objective(lambda);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        return std::nullopt;
    }
    cert.y = sol.x.cwiseMax(0.0);
    cert.y /= cert.y.sum();
    cert.margin = -cert.y.dot(lambda);
    cert.residual = (theta.transpose() * cert.y).cwiseAbs().maxCoeff();
    const double scale = 1.0 + theta.cwiseAbs().maxCoeff();
    if (cert.margin < eps_strict || cert.residual > 1e-9 * scale) {
        return std::nullopt;
    }
    return cert;
}

/// Some u with Theta u <= Lambda + tol, optionally inside A u <= c.
inline std::optional<Vector> solve_u_system(const Matrix& theta, const Vector& lambda, double tol = 1e-9)
{
    const auto m = static_cast<int>(theta.cols());
    require_size(lambda, theta.rows(), "solve_u_system");
    if (m == 0) {
        if (theta.rows() > 0 && lambda.minCoeff() < -tol) {
            return std::nullopt;
        }
        return Vector();
    }
    LinearProgram lp(m);
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        lp.add_row(theta.row(i).transpose(), RowSense::Le, lambda[i]);
    }
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal || lp.max_violation(sol.x) > tol) {
        return std::nullopt;
    }
    return sol.x;
}

} // namespace ncbf
