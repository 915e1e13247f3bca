#pragma once

#include <optional>
#include <vector>

#include "ncbf/linalg.hpp"

namespace ncbf {

struct ProjectionResult {
    Vector u;
    double objective = 0.0; // squared distance to the target
};

namespace detail {

inline bool next_combination(std::vector<int>& idx, int n)
{
    const int k = static_cast<int>(idx.size());
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) {
        --i;
    }
    if (i < 0) {
        return false;
    }
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return true;
}

} // namespace detail

/// Euclidean projection of `target` onto {u : theta u <= lambda}. The optimum
/// is the projection onto the affine hull of some linearly independent set
/// of at most m rows, so the cheapest feasible such projection is exact.
/// Returns nothing when the polyhedron is empty (up to `tol`).
inline std::optional<ProjectionResult> project_onto_polyhedron(const Matrix& theta, const Vector& lambda,
                                                               const Vector& target, double tol = 1e-9)
{
    const auto m = static_cast<int>(target.size());
    if (theta.cols() != m || theta.rows() != lambda.size()) {
        throw DimensionError("project_onto_polyhedron: shape mismatch");
    }
    std::vector<int> live;
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        const bool zero_row = m == 0 || theta.row(i).cwiseAbs().maxCoeff() == 0.0;
        if (!zero_row) {
            live.push_back(static_cast<int>(i));
        } else if (lambda[i] < -tol * (1.0 + std::abs(lambda[i]))) {
            return std::nullopt;
        }
    }
    auto feasible = [&](const Vector& u) {
        for (int i : live) {
            const double v = theta.row(i).dot(u) - lambda[i];
            if (v > tol * (1.0 + std::abs(lambda[i]) + theta.row(i).cwiseAbs().sum() * u.cwiseAbs().maxCoeff())) {
                return false;
            }
        }
        return true;
    };
    std::optional<ProjectionResult> best;
    auto offer = [&](const Vector& u) {
        if (!all_finite(u) || !feasible(u)) {
            return;
        }
        const double obj = (u - target).squaredNorm();
        if (!best || obj < best->objective) {
            best = ProjectionResult{u, obj};
        }
    };
    offer(target);
    const int p = static_cast<int>(live.size());
    for (int k = 1; k <= std::min(m, p); ++k) {
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            idx[static_cast<std::size_t>(j)] = j;
        }
        do {
            Matrix a(k, m);
            Vector c(k);
            for (int j = 0; j < k; ++j) {
                const int row = live[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
                a.row(j) = theta.row(row);
                c[j] = lambda[row];
            }
            const Matrix gram = a * a.transpose();
            Eigen::FullPivLU<Matrix> lu(gram);
            if (lu.rank() < k) {
                continue;
            }
            offer(target - a.transpose() * lu.solve(a * target - c));
        } while (detail::next_combination(idx, p));
    }
    return best;
}

} // namespace ncbf
