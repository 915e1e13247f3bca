#include <gtest/gtest.h>

#include <random>

#include "ncbf/dynamics/parse.hpp"
#include "ncbf/feasolver/bnb.hpp"
#include "ncbf/feasolver/farkas.hpp"
#include "support/random_nets.hpp"

using namespace ncbf;
using testkit::cube;
using testkit::vec;

namespace {

Matrix mat(int rows, int cols, std::initializer_list<double> v)
{
    Matrix m(rows, cols);
    auto it = v.begin();
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = *it++;
        }
    }
    return m;
}

// Expression in x1..xn through the DSL parser.
Expr expr(const std::string& text, int n)
{
    std::string src = "states " + std::to_string(n) + "\ninputs 0\n";
    for (int k = 1; k <= n; ++k) {
        src += "box " + std::to_string(k) + " -1 1\nf" + std::to_string(k) + " = 0\n";
    }
    src += "h = " + text + "\n";
    return parse_problem(src).h;
}

} // namespace

TEST(Lp, SolvesSmallOptimum)
{
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2)
    LinearProgram lp(2);
    lp.set_bounds(0, 0, INFINITY);
    lp.set_bounds(1, 0, INFINITY);
    lp.add_row(vec({1, 2}), RowSense::Le, 4);
    lp.add_row(vec({3, 1}), RowSense::Le, 6);
    lp.set_objective(vec({-1, -1}));
    const auto s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.x[0], 1.6, 1e-12);
    EXPECT_NEAR(s.x[1], 1.2, 1e-12);
}

TEST(Lp, FreeVariablesAndEqualities)
{
    LinearProgram lp(2);
    lp.add_row(vec({1, 1}), RowSense::Eq, 1);
    lp.add_row(vec({1, -1}), RowSense::Ge, -3);
    lp.set_objective(vec({1, 0}));
    const auto s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.x[0], -1.0, 1e-12);
    EXPECT_NEAR(s.x[1], 2.0, 1e-12);
}

TEST(Lp, DetectsUnbounded)
{
    LinearProgram lp(1);
    lp.add_row(vec({1}), RowSense::Ge, 0);
    lp.set_objective(vec({-1}));
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(Lp, InfeasibleWithCertificate)
{
    // x >= 1 and x <= 0: multipliers proportional to (1, 1).
    LinearProgram lp(1);
    lp.add_row(vec({1}), RowSense::Ge, 1);
    lp.add_row(vec({1}), RowSense::Le, 0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
    const auto cert = infeasibility_certificate(lp);
    ASSERT_TRUE(cert);
    EXPECT_TRUE(verify_certificate(lp, *cert));
    EXPECT_NEAR(cert->row_multipliers[0], -0.5, 1e-12);
    EXPECT_NEAR(cert->row_multipliers[1], 0.5, 1e-12);
}

TEST(Lp, FeasibleHasNoCertificate)
{
    LinearProgram lp(1);
    lp.add_row(vec({1}), RowSense::Ge, 0);
    lp.add_row(vec({1}), RowSense::Le, 1);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Optimal);
    EXPECT_FALSE(infeasibility_certificate(lp));
}

TEST(Lp, ZeroVariableProgram)
{
    LinearProgram lp(0);
    lp.add_row(Vector(), RowSense::Le, 1);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Optimal);
    lp.add_row(Vector(), RowSense::Ge, 1);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(Lp, RejectsBadInput)
{
    LinearProgram lp(2);
    EXPECT_THROW(lp.add_row(vec({1}), RowSense::Le, 0), DimensionError);
    EXPECT_THROW(lp.add_row(vec({1, NAN}), RowSense::Le, 0), DomainError);
    EXPECT_THROW(lp.set_bounds(0, 1, 0), PreconditionError);
}

// Two-variable LPs against vertex enumeration.
TEST(LpProperties, MatchesVertexEnumeration)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    int optimal = 0;
    for (int trial = 0; trial < 300; ++trial) {
        LinearProgram lp(2);
        lp.set_bounds(0, -3, 3);
        lp.set_bounds(1, -3, 3);
        std::vector<std::pair<Vector, double>> half; // a^T x <= b, including bounds
        for (int k = 0; k < 2; ++k) {
            Vector e = Vector::Zero(2);
            e[k] = 1;
            half.emplace_back(e, 3.0);
            half.emplace_back(-e, 3.0);
        }
        for (int r = 0; r < 4; ++r) {
            Vector a = vec({g(rng), g(rng)});
            const double b = g(rng);
            lp.add_row(a, RowSense::Le, b);
            half.emplace_back(a, b);
        }
        const Vector c = vec({g(rng), g(rng)});
        lp.set_objective(c);
        double best = INFINITY;
        for (std::size_t i = 0; i < half.size(); ++i) {
            for (std::size_t j = i + 1; j < half.size(); ++j) {
                Matrix m(2, 2);
                m.row(0) = half[i].first.transpose();
                m.row(1) = half[j].first.transpose();
                if (std::abs(m.determinant()) < 1e-9) {
                    continue;
                }
                const Vector x = m.inverse() * vec({half[i].second, half[j].second});
                bool ok = true;
                for (const auto& [a, b] : half) {
                    ok = ok && a.dot(x) <= b + 1e-9;
                }
                if (ok) {
                    best = std::min(best, c.dot(x));
                }
            }
        }
        const auto s = solve_lp(lp);
        if (std::isinf(best)) {
            EXPECT_EQ(s.status, LpStatus::Infeasible);
            const auto cert = infeasibility_certificate(lp);
            ASSERT_TRUE(cert);
            EXPECT_TRUE(verify_certificate(lp, *cert));
        } else {
            ASSERT_EQ(s.status, LpStatus::Optimal);
            EXPECT_NEAR(s.objective, best, 1e-8);
            EXPECT_LE(lp.max_violation(s.x), 1e-9);
            ++optimal;
        }
    }
    EXPECT_GT(optimal, 50);
}

TEST(Farkas, ContradictoryInputBounds)
{
    // u <= -5 and u >= 0
    const auto cert = farkas_check(mat(2, 1, {1, -1}), vec({-5, 0}));
    ASSERT_TRUE(cert);
    EXPECT_NEAR(cert->y[0], 0.5, 1e-12);
    EXPECT_NEAR(cert->y[1], 0.5, 1e-12);
    EXPECT_NEAR(cert->margin, 2.5, 1e-12);
}

TEST(Farkas, FeasibleSystemHasNoCertificate)
{
    // u <= -5 and u <= 0
    EXPECT_FALSE(farkas_check(mat(2, 1, {1, 1}), vec({-5, 0})));
    EXPECT_TRUE(solve_u_system(mat(2, 1, {1, 1}), vec({-5, 0})));
}

TEST(Farkas, NoInputColumns)
{
    EXPECT_TRUE(farkas_check(Matrix(2, 0), vec({1, -1})));
    EXPECT_FALSE(farkas_check(Matrix(2, 0), vec({1, 0})));
}

TEST(FarkasProperties, ExactlyOneAlternativeHolds)
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> rows(1, 6);
    std::uniform_int_distribution<int> cols(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        const int p = rows(rng);
        const int m = cols(rng);
        Matrix theta(p, m);
        Vector lambda(p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < m; ++j) {
                theta(i, j) = g(rng);
            }
            lambda[i] = g(rng);
        }
        const auto cert = farkas_check(theta, lambda, 1e-9);
        const auto u = solve_u_system(theta, lambda, 1e-9);
        EXPECT_NE(cert.has_value(), u.has_value()) << "trial " << trial;
        if (cert) {
            EXPECT_TRUE((cert->y.array() >= 0).all());
            if (m > 0) {
                EXPECT_LE((theta.transpose() * cert->y).cwiseAbs().maxCoeff(), 1e-9);
            }
            EXPECT_LT(cert->y.dot(lambda), 0.0);
        }
    }
}

TEST(Bnb, SquareBelowTwoOnUnitInterval)
{
    BnbProblem p{cube({0}, {1}), {{expr("x1^2 - 2", 1), RowSense::Ge, 0.0}}, {}, 1e-7, {}};
    EXPECT_EQ(bnb_certify(p).status, BnbStatus::InfeasibleCertified);
    p.box = cube({0}, {2});
    const auto r = bnb_certify(p);
    ASSERT_EQ(r.status, BnbStatus::Feasible);
    EXPECT_GE(r.witness[0] * r.witness[0] - 2.0, -1e-7);
}

TEST(Bnb, LineMissesSmallDisk)
{
    BnbProblem p{cube({-2, -2}, {2, 2}),
                 {{expr("x1 + x2", 2), RowSense::Eq, 1.0}, {expr("x1^2 + x2^2", 2), RowSense::Le, 0.25}},
                 {},
                 1e-7,
                 {}};
    const auto r = bnb_certify(p);
    EXPECT_EQ(r.status, BnbStatus::InfeasibleCertified) << r.reason;
    p.constraints[1].rhs = 0.6;
    const auto f = bnb_certify(p);
    ASSERT_EQ(f.status, BnbStatus::Feasible);
    EXPECT_NEAR(f.witness[0] + f.witness[1], 1.0, 1e-9);
    EXPECT_LE(f.witness.squaredNorm(), 0.6 + 1e-7);
}

TEST(Bnb, NodeLimitIsInconclusive)
{
    BnbProblem p{cube({-1}, {1.7}), {{expr("x1^2", 1), RowSense::Le, 0.0}}, {}, 0.0, {1e-9, 50}};
    const auto r = bnb_certify(p);
    EXPECT_EQ(r.status, BnbStatus::Inconclusive);
    EXPECT_TRUE(r.unresolved.has_value());
}

TEST(BnbProperties, InfeasibleVerdictsAreSound)
{
    // Random disks intersected with random lines; dense sampling of the line
    // never finds a point when the solver claims infeasibility.
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int infeasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double a = u(rng);
        const double b = u(rng);
        const double c = u(rng);
        const double cx = u(rng);
        const double cy = u(rng);
        const double r2 = 0.3 * (u(rng) + 1.0);
        auto e = Expr::variable(0) * Expr::constant(a) + Expr::variable(1) * Expr::constant(b);
        auto d = Expr::power(Expr::variable(0) - Expr::constant(cx), 2) +
                 Expr::power(Expr::variable(1) - Expr::constant(cy), 2);
        BnbProblem p{cube({-2, -2}, {2, 2}), {{e, RowSense::Eq, c}, {d, RowSense::Le, r2}}, {}, 1e-9, {1e-9, 200000}};
        const auto res = bnb_certify(p);
        // Exact answer: distance from centre to the line versus radius.
        const double dist = std::abs(a * cx + b * cy - c) / std::hypot(a, b);
        if (res.status == BnbStatus::InfeasibleCertified) {
            ++infeasible;
            EXPECT_GT(dist * dist, r2 - 1e-9);
        } else if (res.status == BnbStatus::Feasible) {
            EXPECT_NEAR(a * res.witness[0] + b * res.witness[1], c, 1e-8);
            EXPECT_LE(std::pow(res.witness[0] - cx, 2) + std::pow(res.witness[1] - cy, 2), r2 + 1e-9);
        }
    }
    EXPECT_GT(infeasible, 10);
}
