#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ncbf/error.hpp"
#include "ncbf/linalg.hpp"

namespace ncbf {

enum class RowSense { Le, Ge, Eq };

/// a^T x (<=, >=, =) rhs
struct LinearRow {
    Vector a;
    RowSense sense = RowSense::Le;
    double rhs = 0.0;

    /// Amount by which x violates the row (0 when satisfied).
    double violation(const Vector& x) const
    {
        const double v = a.dot(x) - rhs;
        switch (sense) {
        case RowSense::Le:
            return std::max(0.0, v);
        case RowSense::Ge:
            return std::max(0.0, -v);
        case RowSense::Eq:
            return std::abs(v);
        }
        return 0.0;
    }
};

/// minimize c^T x subject to rows and lo <= x <= hi (bounds may be infinite).
class LinearProgram {
public:
    explicit LinearProgram(int num_vars)
        : n_(num_vars),
          lower_(Vector::Constant(num_vars, -std::numeric_limits<double>::infinity())),
          upper_(Vector::Constant(num_vars, std::numeric_limits<double>::infinity())),
          objective_(Vector::Zero(num_vars))
    {
        if (num_vars < 0) {
            throw PreconditionError("LinearProgram: negative variable count");
        }
    }

    int num_vars() const { return n_; }
    const std::vector<LinearRow>& rows() const { return rows_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    const Vector& objective() const { return objective_; }

    void set_bounds(int k, double lo, double hi)
    {
        if (k < 0 || k >= n_) {
            throw DimensionError("LinearProgram::set_bounds: variable out of range");
        }
        if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
            throw PreconditionError("LinearProgram::set_bounds: invalid bounds");
        }
        lower_[k] = lo;
        upper_[k] = hi;
    }

    void set_objective(Vector c)
    {
        require_size(c, n_, "LinearProgram::set_objective");
        objective_ = std::move(c);
    }

    void add_row(Vector a, RowSense sense, double rhs)
    {
        require_size(a, n_, "LinearProgram::add_row");
        if (!all_finite(a) || !std::isfinite(rhs)) {
            throw DomainError("LinearProgram::add_row: non-finite coefficients");
        }
        rows_.push_back({std::move(a), sense, rhs});
    }

    /// Largest row or bound violation at x.
    double max_violation(const Vector& x) const
    {
        double worst = 0.0;
        for (const auto& r : rows_) {
            worst = std::max(worst, r.violation(x));
        }
        for (int k = 0; k < n_; ++k) {
            worst = std::max({worst, lower_[k] - x[k], x[k] - upper_[k]});
        }
        return worst;
    }

private:
    int n_;
    Vector lower_;
    Vector upper_;
    Vector objective_;
    std::vector<LinearRow> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string to_string(LpStatus s)
{
    switch (s) {
    case LpStatus::Optimal:
        return "optimal";
    case LpStatus::Infeasible:
        return "infeasible";
    case LpStatus::Unbounded:
        return "unbounded";
    case LpStatus::IterationLimit:
        return "iteration_limit";
    }
    return "unknown";
}

struct LpOptions {
    double feas_tol = 1e-9;
    double pivot_tol = 1e-11;
    double opt_tol = 1e-10;
    int max_iterations = 100000;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vector x;
    double objective = 0.0;
    int iterations = 0;
};

namespace detail {

struct StandardResult {
    LpStatus status = LpStatus::Infeasible;
    Vector z;
    double value = 0.0;
    int iterations = 0;
};

/// Dense two-phase tableau simplex for min c^T z, A z = b, z >= 0, b >= 0.
/// Dantzig pricing, switching to Bland's rule after a run of degenerate
/// pivots so the method cannot cycle.
class TableauSimplex {
public:
    TableauSimplex(const Matrix& a, const Vector& b, const Vector& c, const LpOptions& opt)
        : m_(a.rows()), n_(a.cols()), c_(c), opt_(opt)
    {
        t_ = Matrix::Zero(m_, n_ + m_ + 1);
        t_.leftCols(n_) = a;
        t_.block(0, n_, m_, m_).setIdentity();
        t_.col(n_ + m_) = b;
        basis_.resize(static_cast<std::size_t>(m_));
        for (Eigen::Index i = 0; i < m_; ++i) {
            basis_[static_cast<std::size_t>(i)] = n_ + i;
        }
        scale_ = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    }

    StandardResult solve()
    {
        StandardResult out;
        // Phase 1: minimize the sum of artificials.
        Vector cost1 = Vector::Zero(n_ + m_);
        cost1.tail(m_).setOnes();
        const LpStatus p1 = run(cost1, n_ + m_, out.iterations);
        if (p1 == LpStatus::IterationLimit) {
            out.status = p1;
            return out;
        }
        double infeas = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] >= n_) {
                infeas += t_(i, n_ + m_);
            }
        }
        if (infeas > opt_.feas_tol * scale_) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        drive_out_artificials();
        Vector cost2 = Vector::Zero(n_ + m_);
        cost2.head(n_) = c_;
        const LpStatus p2 = run(cost2, n_, out.iterations);
        out.status = p2;
        out.z = Vector::Zero(n_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            if (j < n_) {
                out.z[j] = std::max(0.0, t_(i, n_ + m_));
            }
        }
        out.value = c_.dot(out.z);
        return out;
    }

private:
    // Minimizes cost over columns [0, allowed) from the current basis.
    LpStatus run(const Vector& cost, Eigen::Index allowed, int& iterations)
    {
        const Eigen::Index rhs = n_ + m_;
        Vector r(n_ + m_);
        for (Eigen::Index j = 0; j < n_ + m_; ++j) {
            double v = cost[j];
            for (Eigen::Index i = 0; i < m_; ++i) {
                v -= cost[basis_[static_cast<std::size_t>(i)]] * t_(i, j);
            }
            r[j] = v;
        }
        bool bland = false;
        int degenerate_run = 0;
        for (;;) {
            if (iterations >= opt_.max_iterations) {
                return LpStatus::IterationLimit;
            }
            Eigen::Index enter = -1;
            double best = -opt_.opt_tol;
            for (Eigen::Index j = 0; j < allowed; ++j) {
                if (is_basic(j)) {
                    continue;
                }
                if (r[j] < best) {
                    enter = j;
                    if (bland) {
                        break;
                    }
                    best = r[j];
                }
            }
            if (enter < 0) {
                return LpStatus::Optimal;
            }
            Eigen::Index leave = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double piv = t_(i, enter);
                if (piv > opt_.pivot_tol) {
                    const double q = t_(i, rhs) / piv;
                    if (q < ratio - 1e-13 ||
                        (q <= ratio + 1e-13 && leave >= 0 &&
                         basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                        ratio = std::min(ratio, q);
                        leave = i;
                    }
                }
            }
            if (leave < 0) {
                return LpStatus::Unbounded;
            }
            degenerate_run = ratio <= 1e-13 ? degenerate_run + 1 : 0;
            if (degenerate_run > 50) {
                bland = true;
            }
            pivot(leave, enter);
            const double f = r[enter];
            if (f != 0.0) {
                r -= f * t_.row(leave).head(n_ + m_).transpose();
            }
            r[enter] = 0.0;
            ++iterations;
        }
    }

    bool is_basic(Eigen::Index j) const
    {
        return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
    }

    void pivot(Eigen::Index row, Eigen::Index col)
    {
        t_.row(row) /= t_(row, col);
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i != row) {
                const double f = t_(i, col);
                if (f != 0.0) {
                    t_.row(i) -= f * t_.row(row);
                    t_(i, col) = 0.0;
                }
            }
        }
        t_(row, col) = 1.0;
        basis_[static_cast<std::size_t>(row)] = col;
    }

    void drive_out_artificials()
    {
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_) {
                continue;
            }
            Eigen::Index best = -1;
            double mag = opt_.pivot_tol;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (!is_basic(j) && std::abs(t_(i, j)) > mag) {
                    mag = std::abs(t_(i, j));
                    best = j;
                }
            }
            if (best >= 0) {
                pivot(i, best);
            }
            // Otherwise the row is redundant; its artificial stays basic at zero.
        }
    }

    Eigen::Index m_;
    Eigen::Index n_;
    Vector c_;
    LpOptions opt_;
    Matrix t_;
    std::vector<Eigen::Index> basis_;
    double scale_ = 1.0;
};

/// x = offset + map * z with z >= 0.
struct VariableMap {
    Matrix map;
    Vector offset;
};

} // namespace detail

/// Solves a general LP by reduction to standard form.
inline LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt = {})
{
    const int n = lp.num_vars();
    const double inf = std::numeric_limits<double>::infinity();
    LpSolution out;

    if (n == 0) {
        for (const auto& r : lp.rows()) {
            if (r.violation(Vector()) > opt.feas_tol) {
                out.status = LpStatus::Infeasible;
                return out;
            }
        }
        out.status = LpStatus::Optimal;
        out.x = Vector();
        return out;
    }

    // Column layout of z.
    std::vector<std::pair<int, double>> columns; // (variable, sign)
    Vector offset = Vector::Zero(n);
    std::vector<LinearRow> rows;
    for (int k = 0; k < n; ++k) {
        const double lo = lp.lower()[k];
        const double hi = lp.upper()[k];
        if (lo > -inf) {
            offset[k] = lo;
            columns.emplace_back(k, 1.0);
            if (hi < inf) {
                Vector a = Vector::Zero(n);
                a[k] = 1.0;
                rows.push_back({a, RowSense::Le, hi});
            }
        } else if (hi < inf) {
            offset[k] = hi;
            columns.emplace_back(k, -1.0);
        } else {
            columns.emplace_back(k, 1.0);
            columns.emplace_back(k, -1.0);
        }
    }
    for (const auto& r : lp.rows()) {
        rows.push_back(r);
    }
    const auto nz = static_cast<Eigen::Index>(columns.size());
    Matrix xmap = Matrix::Zero(n, nz);
    for (Eigen::Index j = 0; j < nz; ++j) {
        xmap(columns[static_cast<std::size_t>(j)].first, j) = columns[static_cast<std::size_t>(j)].second;
    }

    std::size_t slacks = 0;
    for (const auto& r : rows) {
        if (r.sense != RowSense::Eq) {
            ++slacks;
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index total = nz + static_cast<Eigen::Index>(slacks);
    Matrix a = Matrix::Zero(m, total);
    Vector b = Vector::Zero(m);
    Eigen::Index slack = nz;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        const double norm = r.a.cwiseAbs().maxCoeff();
        const double s = norm > 0.0 ? 1.0 / norm : 1.0;
        a.row(i).head(nz) = s * (r.a.transpose() * xmap);
        b[i] = s * (r.rhs - r.a.dot(offset));
        if (r.sense == RowSense::Le) {
            a(i, slack++) = 1.0;
        } else if (r.sense == RowSense::Ge) {
            a(i, slack++) = -1.0;
        }
        if (b[i] < 0.0) {
            a.row(i) *= -1.0;
            b[i] = -b[i];
        }
    }
    Vector c = Vector::Zero(total);
    c.head(nz) = xmap.transpose() * lp.objective();

    detail::TableauSimplex simplex(a, b, c, opt);
    const auto res = simplex.solve();
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status == LpStatus::Optimal || res.status == LpStatus::Unbounded) {
        out.x = offset + xmap * res.z.head(nz);
        out.objective = lp.objective().dot(out.x);
    }
    return out;
}

/// Farkas certificate of LP infeasibility: signed row multipliers w (w >= 0 on
/// <= rows, w <= 0 on >= rows, free on = rows) and bound multipliers with
///   sum_i w_i a_i + mu_hi - mu_lo = 0,
///   sum_i w_i rhs_i + mu_hi^T hi - mu_lo^T lo = -margin < 0,
/// normalized so all multipliers have total absolute value 1.
struct FarkasCertificate {
    Vector row_multipliers;
    Vector lower_multipliers;
    Vector upper_multipliers;
    double margin = 0.0;
};

/// Residuals of a certificate: (|| combined normal ||_inf, combined rhs).
inline std::pair<double, double> certificate_residual(const LinearProgram& lp, const FarkasCertificate& cert)
{
    const int n = lp.num_vars();
    Vector normal = cert.upper_multipliers - cert.lower_multipliers;
    double rhs = 0.0;
    for (std::size_t i = 0; i < lp.rows().size(); ++i) {
        const auto& r = lp.rows()[i];
        const double w = cert.row_multipliers[static_cast<Eigen::Index>(i)];
        normal += w * r.a;
        rhs += w * r.rhs;
    }
    for (int k = 0; k < n; ++k) {
        if (cert.upper_multipliers[k] != 0.0) {
            rhs += cert.upper_multipliers[k] * lp.upper()[k];
        }
        if (cert.lower_multipliers[k] != 0.0) {
            rhs -= cert.lower_multipliers[k] * lp.lower()[k];
        }
    }
    return {n > 0 ? normal.cwiseAbs().maxCoeff() : 0.0, rhs};
}

/// Checks signs and the two Farkas identities within tol.
inline bool verify_certificate(const LinearProgram& lp, const FarkasCertificate& cert, double tol = 1e-8)
{
    const auto rows = static_cast<Eigen::Index>(lp.rows().size());
    if (cert.row_multipliers.size() != rows || cert.lower_multipliers.size() != lp.num_vars() ||
        cert.upper_multipliers.size() != lp.num_vars()) {
        return false;
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double w = cert.row_multipliers[i];
        const RowSense s = lp.rows()[static_cast<std::size_t>(i)].sense;
        if ((s == RowSense::Le && w < 0.0) || (s == RowSense::Ge && w > 0.0)) {
            return false;
        }
    }
    for (int k = 0; k < lp.num_vars(); ++k) {
        if (cert.lower_multipliers[k] < 0.0 || cert.upper_multipliers[k] < 0.0) {
            return false;
        }
        if ((cert.lower_multipliers[k] > 0.0 && !std::isfinite(lp.lower()[k])) ||
            (cert.upper_multipliers[k] > 0.0 && !std::isfinite(lp.upper()[k]))) {
            return false;
        }
    }
    const auto [normal, rhs] = certificate_residual(lp, cert);
    return normal <= tol && rhs < -tol;
}

/// Searches for a Farkas certificate by solving the normalized alternative
/// LP. Returns nothing when the best certificate margin is not above tol,
/// which happens exactly when the primal is feasible (up to tol).
inline std::optional<FarkasCertificate> infeasibility_certificate(const LinearProgram& lp, double tol = 1e-9,
                                                                  const LpOptions& opt = {})
{
    const int n = lp.num_vars();
    const auto& rows = lp.rows();
    // Alternative variables: per row one (Le/Ge) or two (Eq) nonnegative
    // parts, then one per finite bound.
    struct Part {
        int row;   // -1 for bound parts
        int var;   // bound variable
        double sign;
        bool upper;
    };
    std::vector<Part> parts;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = static_cast<int>(i);
        switch (rows[i].sense) {
        case RowSense::Le:
            parts.push_back({r, -1, 1.0, false});
            break;
        case RowSense::Ge:
            parts.push_back({r, -1, -1.0, false});
            break;
        case RowSense::Eq:
            parts.push_back({r, -1, 1.0, false});
            parts.push_back({r, -1, -1.0, false});
            break;
        }
    }
    for (int k = 0; k < n; ++k) {
        if (std::isfinite(lp.lower()[k])) {
            parts.push_back({-1, k, 1.0, false});
        }
        if (std::isfinite(lp.upper()[k])) {
            parts.push_back({-1, k, 1.0, true});
        }
    }
    const int p = static_cast<int>(parts.size());
    if (p == 0) {
        return std::nullopt;
    }
    LinearProgram alt(p);
    Vector cost(p);
    Matrix normal = Matrix::Zero(n, p);
    for (int j = 0; j < p; ++j) {
        const Part& part = parts[static_cast<std::size_t>(j)];
        alt.set_bounds(j, 0.0, std::numeric_limits<double>::infinity());
        if (part.row >= 0) {
            const auto& r = rows[static_cast<std::size_t>(part.row)];
            if (n > 0) {
                normal.col(j) = part.sign * r.a;
            }
            cost[j] = part.sign * r.rhs;
        } else if (part.upper) {
            normal(part.var, j) = 1.0;
            cost[j] = lp.upper()[part.var];
        } else {
            normal(part.var, j) = -1.0;
            cost[j] = -lp.lower()[part.var];
        }
    }
    for (int k = 0; k < n; ++k) {
        alt.add_row(normal.row(k).transpose(), RowSense::Eq, 0.0);
    }
    alt.add_row(Vector::Ones(p), RowSense::Eq, 1.0);
    alt.set_objective(cost);
    const auto sol = solve_lp(alt, opt);
    if (sol.status != LpStatus::Optimal || sol.objective >= -tol) {
        return std::nullopt;
    }
    FarkasCertificate cert;
    cert.row_multipliers = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
    cert.lower_multipliers = Vector::Zero(n);
    cert.upper_multipliers = Vector::Zero(n);
    for (int j = 0; j < p; ++j) {
        const Part& part = parts[static_cast<std::size_t>(j)];
        const double v = sol.x[j];
        if (v == 0.0) {
            continue;
        }
        if (part.row >= 0) {
            cert.row_multipliers[part.row] += part.sign * v;
        } else if (part.upper) {
            cert.upper_multipliers[part.var] += v;
        } else {
            cert.lower_multipliers[part.var] += v;
        }
    }
    cert.margin = -certificate_residual(lp, cert).second;
    return cert;
}

} // namespace ncbf
