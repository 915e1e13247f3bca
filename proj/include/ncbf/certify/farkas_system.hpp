#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ncbf/dynamics/problem.hpp"
#include "ncbf/feasolver/farkas.hpp"
#include "ncbf/network/affine_region.hpp"

namespace ncbf {

/// Sign condition on a directional derivative: w^T xdot >= 0 (ge) or <= 0.
struct ConeRow {
    Vector w;
    bool ge = true;
    std::string label;
};

inline std::string neuron_label(NeuronId id)
{
    return "n" + std::to_string(id.layer + 1) + "_" + std::to_string(id.index + 1);
}

/// Rows for one member pattern at points where the `pinned` neurons vanish:
/// pinned neurons in S need nondecreasing pre-activation, pinned neurons not
/// in S nonincreasing, and b must be nondecreasing. Order: pinned neurons,
/// then b.
inline std::vector<ConeRow> cone_rows(const AffineRegion& member, const UnstableSet& pinned)
{
    std::vector<ConeRow> rows;
    rows.reserve(pinned.size() + 1);
    for (const auto& id : pinned) {
        rows.push_back({member.neuron_map(id).normal, member.pattern().active(id), neuron_label(id)});
    }
    rows.push_back({member.output_gradient(), true, "b"});
    return rows;
}

/// u-system Theta u <= Lambda at a fixed state: one row per cone row, then
/// the input polytope rows.
struct FarkasSystem {
    Matrix theta;
    Vector lambda;
    std::vector<std::string> labels;
};

inline FarkasSystem build_farkas_system(const SafetyProblem& problem, const std::vector<ConeRow>& rows,
                                        const Vector& fx, const Matrix& gx)
{
    const auto p = static_cast<Eigen::Index>(rows.size()) + problem.input_A.rows();
    FarkasSystem sys{Matrix::Zero(p, problem.m), Vector::Zero(p), {}};
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        const double wf = row.w.dot(fx);
        const Vector wg = gx.transpose() * row.w;
        if (row.ge) {
            sys.theta.row(r) = -wg.transpose();
            sys.lambda[r] = wf;
        } else {
            sys.theta.row(r) = wg.transpose();
            sys.lambda[r] = -wf;
        }
        sys.labels.push_back(row.label);
        ++r;
    }
    for (Eigen::Index i = 0; i < problem.input_A.rows(); ++i, ++r) {
        sys.theta.row(r) = problem.input_A.row(i);
        sys.lambda[r] = problem.input_c[i];
        sys.labels.push_back("U" + std::to_string(i + 1));
    }
    return sys;
}

inline FarkasSystem build_farkas_system(const SafetyProblem& problem, const AffineRegion& member,
                                        const UnstableSet& pinned, const Vector& x)
{
    return build_farkas_system(problem, cone_rows(member, pinned), eval_f(problem, x), eval_g(problem, x));
}

namespace detail {

inline std::string format_value(double v)
{
    std::ostringstream os;
    os << std::setprecision(6) << (std::abs(v) < 1e-12 ? 0.0 : v);
    return os.str();
}

} // namespace detail

/// Human-readable reading of a u-system. For one input the rows collapse to
/// bounds on u, e.g. "u >= 0 and u <= -5"; otherwise rows are listed.
inline std::string describe_system(const FarkasSystem& sys)
{
    std::ostringstream os;
    if (sys.theta.cols() == 1) {
        double lower = -INFINITY;
        double upper = INFINITY;
        std::vector<std::string> fixed;
        for (Eigen::Index i = 0; i < sys.theta.rows(); ++i) {
            const double t = sys.theta(i, 0);
            const double l = sys.lambda[i];
            if (std::abs(t) <= 1e-12) {
                if (l < 0.0) {
                    fixed.push_back("0 <= " + detail::format_value(l) + " (" + sys.labels[static_cast<std::size_t>(i)] + ")");
                }
            } else if (t > 0.0) {
                upper = std::min(upper, l / t);
            } else {
                lower = std::max(lower, l / t);
            }
        }
        std::vector<std::string> parts;
        if (std::isfinite(lower)) {
            parts.push_back("u >= " + detail::format_value(lower));
        }
        if (std::isfinite(upper)) {
            parts.push_back("u <= " + detail::format_value(upper));
        }
        for (auto& f : fixed) {
            parts.push_back(f);
        }
        for (std::size_t i = 0; i < parts.size(); ++i) {
            os << (i ? " and " : "") << parts[i];
        }
        return os.str();
    }
    for (Eigen::Index i = 0; i < sys.theta.rows(); ++i) {
        if (i > 0) {
            os << "; ";
        }
        os << sys.labels[static_cast<std::size_t>(i)] << ": ";
        bool any = false;
        for (Eigen::Index j = 0; j < sys.theta.cols(); ++j) {
            if (sys.theta(i, j) != 0.0) {
                os << (any ? " + " : "") << detail::format_value(sys.theta(i, j)) << "*u" << (j + 1);
                any = true;
            }
        }
        os << (any ? "" : "0") << " <= " << detail::format_value(sys.lambda[i]);
    }
    return os.str();
}

/// Is d in the tangent cone of {b >= 0} at a boundary point x? True when
/// some pattern of S(x) keeps every vanishing neuron on its side and b
/// nondecreasing to first order along d.
inline bool tangent_cone_contains(const ReluNetwork& net, const Vector& x, const Vector& d, double zero_tol = 1e-9)
{
    require_size(d, net.input_dim(), "tangent_cone_contains");
    const double bx = net.evaluate(x);
    if (std::abs(bx) > 1e-7) {
        throw PreconditionError("tangent_cone_contains: x is not on the zero level set (b(x) = " +
                                detail::format_value(bx) + ")");
    }
    const auto point = activation_pattern(net, x, zero_tol);
    const double tol = 1e-12 * (1.0 + d.norm());
    for (const auto& s : toggle_closure(point.pattern, point.unstable)) {
        const AffineRegion region = affine_region(net, s);
        bool ok = true;
        for (const auto& row : cone_rows(region, point.unstable)) {
            const double v = row.w.dot(d);
            ok = ok && (row.ge ? v >= -tol : v <= tol);
        }
        if (ok) {
            return true;
        }
    }
    return false;
}

} // namespace ncbf
