#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ncbf/controller/lqr.hpp"
#include "ncbf/controller/simulate.hpp"
#include "ncbf/dynamics/builtin.hpp"
#include "ncbf/network/builtin.hpp"
#include "support/random_nets.hpp"

using namespace ncbf;
using testkit::vec;

namespace {

QpPolicy example32_policy(NominalPolicy nominal = {})
{
    return QpPolicy(l1_diamond_network(), require_builtin_problem("example32"), std::move(nominal));
}

} // namespace

TEST(ProjectionQp, ProjectsOntoHalfSpace)
{
    Matrix theta(1, 2);
    theta << 1, 1;
    const auto r = project_onto_polyhedron(theta, vec({1}), vec({2, 2}));
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(r->u[0], 0.5, 1e-12);
    EXPECT_NEAR(r->u[1], 0.5, 1e-12);
    EXPECT_NEAR(r->objective, 4.5, 1e-12);
}

TEST(ProjectionQp, CornerAndEmptySets)
{
    Matrix theta(2, 2);
    theta << 1, 0, 0, 1;
    const auto r = project_onto_polyhedron(theta, vec({0, 0}), vec({3, 4}));
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(r->u.norm(), 0.0, 1e-12);
    Matrix clash(2, 1);
    clash << 1, -1;
    EXPECT_FALSE(project_onto_polyhedron(clash, vec({-5, 0}), vec({0})).has_value());
    EXPECT_FALSE(project_onto_polyhedron(Matrix::Zero(1, 1), vec({-1}), vec({0})).has_value());
}

TEST(ProjectionQp, MatchesBruteForceOnRandomPolytopes)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 1 + trial % 3;
        const int p = 2 + trial % 5;
        Matrix theta(p, m);
        Vector lambda(p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < m; ++j) {
                theta(i, j) = normal(rng);
            }
            lambda[i] = std::abs(normal(rng));
        }
        Vector target(m);
        for (int j = 0; j < m; ++j) {
            target[j] = 3.0 * normal(rng);
        }
        const auto r = project_onto_polyhedron(theta, lambda, target);
        ASSERT_TRUE(r.has_value()); // the origin is feasible
        EXPECT_LE((theta * r->u - lambda).maxCoeff(), 1e-8);
        // No feasible sample is closer.
        for (int s = 0; s < 300; ++s) {
            Vector v = r->u;
            for (int j = 0; j < m; ++j) {
                v[j] += 0.5 * normal(rng);
            }
            if ((theta * v - lambda).maxCoeff() <= 0.0) {
                EXPECT_GE((v - target).squaredNorm(), r->objective - 1e-9);
            }
        }
    }
}

TEST(QpFilter, SingleRegionReducesToHalfSpaceProjection)
{
    const auto f = qp_filter(example32_policy(), vec({0.3, 0.2}));
    ASSERT_TRUE(f.feasible);
    EXPECT_EQ(f.programs, 1U);
    EXPECT_EQ(f.pattern, "1010");
    EXPECT_NEAR(f.u[0], -0.5, 1e-12);
}

TEST(QpFilter, InteriorSlackKeepsNominal)
{
    const auto f = qp_filter(example32_policy([](const Vector&) { return vec({0.7}); }), vec({0.05, 0.02}));
    ASSERT_TRUE(f.feasible);
    EXPECT_NEAR(f.u[0], 0.7, 1e-12);
    EXPECT_NEAR(f.objective, 0.0, 1e-12);
}

TEST(QpFilter, DiamondTopVertexIsInfeasible)
{
    auto policy = example32_policy([](const Vector&) { return vec({0.25}); });
    const auto hold = qp_filter(policy, vec({0.0, 1.0}));
    EXPECT_FALSE(hold.feasible);
    EXPECT_EQ(hold.programs, 4U);
    EXPECT_NEAR(hold.u[0], 0.25, 0.0);
    policy.fallback = Fallback::ZeroInput;
    EXPECT_NEAR(qp_filter(policy, vec({0.0, 1.0})).u[0], 0.0, 0.0);
}

TEST(QpFilter, ReturnedInputSatisfiesItsConstraints)
{
    const auto policy = example32_policy(linear_feedback(lqr_gain(require_builtin_problem("example32"))));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.9, 1.9);
    for (int i = 0; i < 500; ++i) {
        const Vector x = vec({u(rng), u(rng)});
        const auto f = qp_filter(policy, x);
        if (!f.feasible) {
            continue;
        }
        const auto point = activation_pattern(policy.net, x, policy.activation_tol);
        const auto region = affine_region(policy.net, ActivationPattern::parse(f.pattern));
        const auto sys = filter_system(policy, region, point.unstable, eval_f(policy.problem, x),
                                       eval_g(policy.problem, x), policy.net.evaluate(x));
        EXPECT_LE((sys.theta * f.u - sys.lambda).maxCoeff(), 1e-8);
    }
}

TEST(QpFilter, RejectsBadConfiguration)
{
    EXPECT_THROW(QpPolicy(l1_diamond_network(), require_builtin_problem("example32"), {}, 0.0), PreconditionError);
    EXPECT_THROW(QpPolicy(l1_diamond_network(), require_builtin_problem("hiord8"), {}), DimensionError);
    EXPECT_THROW(qp_filter(example32_policy(), vec({3.0, 0.0})), PreconditionError);
}

TEST(Lqr, ScalarRiccati)
{
    // x' = x + u, q = r = 1: P = 1 + sqrt(2).
    const Matrix P = solve_care(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Identity(1, 1),
                                Matrix::Identity(1, 1));
    EXPECT_NEAR(P(0, 0), 1.0 + std::sqrt(2.0), 1e-10);
}

TEST(Lqr, Example32ClosedLoopIsStable)
{
    const auto problem = require_builtin_problem("example32");
    const Matrix K = lqr_gain(problem);
    const auto f = *affine_f(problem);
    const Matrix closed = f.F - *is_constant_g(problem) * K;
    Eigen::EigenSolver<Matrix> es(closed);
    for (Eigen::Index i = 0; i < closed.rows(); ++i) {
        EXPECT_LT(es.eigenvalues()[i].real(), 0.0);
    }
    EXPECT_THROW(lqr_gain(require_builtin_problem("darboux")), PreconditionError);
}

TEST(Simulate, ContractionRaisesBarrierMonotonically)
{
    const QpPolicy policy(l1_diamond_network(), require_builtin_problem("contraction"), {});
    const auto tr = simulate(policy, vec({0.5, 0.5}), 0.01, 5.0);
    ASSERT_EQ(tr.size(), 501U);
    EXPECT_FALSE(tr.left_box);
    EXPECT_FALSE(tr.any_infeasible());
    for (std::size_t i = 1; i < tr.size(); ++i) {
        EXPECT_GT(tr.times[i], tr.times[i - 1]);
        EXPECT_GE(tr.b[i], tr.b[i - 1]);
    }
    EXPECT_NEAR(tr.b.back(), 1.0 - std::exp(-5.0), 1e-6);
}

TEST(Simulate, VerifiedBarrierStaysInvariant)
{
    const QpPolicy policy(l1_diamond_network(), require_builtin_problem("contraction"), {});
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int runs = 0;
    while (runs < 20) {
        const Vector x0 = vec({u(rng), u(rng)});
        if (policy.net.evaluate(x0) < 0.05) {
            continue;
        }
        ++runs;
        const auto tr = simulate(policy, x0, 1e-2, 10.0);
        EXPECT_GE(tr.min_b(), -1e-3);
    }
}

TEST(Simulate, Example32FlagsAtTheStart)
{
    const auto problem = require_builtin_problem("example32");
    const auto policy = example32_policy(linear_feedback(lqr_gain(problem)));
    const auto tr = simulate(policy, vec({0.0, 0.9}), 0.01, 2.0);
    ASSERT_FALSE(tr.infeasible.empty());
    EXPECT_TRUE(tr.infeasible.front());
}

TEST(Simulate, LeavingTheBoxTruncates)
{
    const auto problem = parse_problem("system grow\nstates 1\nbox 1 -1 1\nf1 = x1\nh = 1\n");
    const ReluNetwork net(1, {{Matrix::Ones(1, 1), Vector::Zero(1)}}, Vector::Ones(1), 0.0);
    const QpPolicy policy(net, problem, {});
    const auto tr = simulate(policy, vec({0.5}), 0.01, 5.0);
    EXPECT_TRUE(tr.left_box);
    EXPECT_LT(tr.size(), 100U);
    EXPECT_LE(tr.states.back()[0], 1.0);
}

TEST(Simulate, RejectsNonPositiveStep)
{
    const QpPolicy policy(l1_diamond_network(), require_builtin_problem("contraction"), {});
    EXPECT_THROW(simulate(policy, vec({0.1, 0.1}), 0.0, 1.0), PreconditionError);
    EXPECT_THROW(simulate(policy, vec({0.1, 0.1}), -1.0, 1.0), PreconditionError);
}

TEST(Simulate, CsvHasOneRowPerSample)
{
    const auto problem = require_builtin_problem("example32");
    const auto policy = example32_policy();
    const auto tr = simulate(policy, vec({0.2, 0.1}), 0.1, 0.3);
    std::ostringstream os;
    write_trajectory_csv(os, tr, problem);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,x1,x2,u1,b,h,flag");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 4);
}
