#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "ncbf/error.hpp"

namespace ncbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void require_size(const Vector& v, Eigen::Index expected, const char* what)
{
    if (v.size() != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                             std::to_string(v.size()));
    }
}

/// Shape-checked exact equality (Eigen's operator== asserts on mismatched shapes).
template <typename A, typename B>
bool same_entries(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

inline bool all_finite(const Vector& v)
{
    return v.allFinite();
}

inline bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

} // namespace ncbf
