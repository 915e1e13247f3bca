#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ncbf/dynamics/problem.hpp"

namespace ncbf {

/// Stabilizing solution P of A^T P + P A - P B R^-1 B^T P + Q = 0, from the
/// stable invariant subspace of the Hamiltonian matrix.
inline Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R)
{
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
        R.cols() != B.cols()) {
        throw DimensionError("solve_care: shape mismatch");
    }
    const Matrix Rinv = R.inverse();
    Matrix H(2 * n, 2 * n);
    H << A, -B * Rinv * B.transpose(), -Q, -A.transpose();
    Eigen::ComplexEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) {
        throw NumericalError("solve_care: eigen-decomposition failed");
    }
    std::vector<Eigen::Index> stable;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()[i].real() < 0.0) {
            stable.push_back(i);
        }
    }
    if (static_cast<Eigen::Index>(stable.size()) != n) {
        throw NumericalError("solve_care: Hamiltonian has eigenvalues on the imaginary axis");
    }
    Eigen::MatrixXcd basis(2 * n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        basis.col(j) = es.eigenvectors().col(stable[static_cast<std::size_t>(j)]);
    }
    const Eigen::MatrixXcd top = basis.topRows(n);
    const Eigen::MatrixXcd bottom = basis.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(top);
    if (lu.rank() < n) {
        throw NumericalError("solve_care: pair is not stabilizable");
    }
    const Matrix P = (bottom * lu.inverse()).real();
    return 0.5 * (P + P.transpose());
}

/// Gain K with u = -K x stabilizing x' = A x + B u.
inline Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R)
{
    return R.inverse() * B.transpose() * solve_care(A, B, Q, R);
}

/// LQR to the origin for a problem with affine drift and constant g, with
/// identity weights.
inline Matrix lqr_gain(const SafetyProblem& problem)
{
    const auto f = affine_f(problem);
    const auto g = is_constant_g(problem);
    if (!f || !g) {
        throw PreconditionError("lqr_gain: needs affine f and constant g");
    }
    if (problem.m == 0) {
        throw PreconditionError("lqr_gain: system has no inputs");
    }
    return lqr_gain(f->F, *g, Matrix::Identity(problem.n, problem.n), Matrix::Identity(problem.m, problem.m));
}

} // namespace ncbf
