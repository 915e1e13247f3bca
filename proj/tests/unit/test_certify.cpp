#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncbf/certify/verify.hpp"
#include "ncbf/dynamics/builtin.hpp"
#include "ncbf/dynamics/parse.hpp"
#include "ncbf/network/builtin.hpp"
#include "support/random_nets.hpp"

using namespace ncbf;
using testkit::cube;
using testkit::vec;

namespace {

ActivationPattern pat(const ReluNetwork& net, std::vector<int> active)
{
    return ActivationPattern::from_indices(net, {std::move(active)});
}

SafetyProblem with_h(SafetyProblem p, const std::string& h)
{
    auto text = unparse_problem(p);
    const auto at = text.find("\nh = ");
    const auto end = text.find('\n', at + 1);
    text.replace(at + 1, end - at - 1, "h = " + h);
    return parse_problem(text);
}

VerifyConfig quick()
{
    VerifyConfig cfg;
    cfg.atlas.grid_per_axis = 8;
    return cfg;
}

} // namespace

TEST(Verify, Example32IsUnsafeAtAVertex)
{
    const auto v = verify(require_builtin_problem("example32"), l1_diamond_network(), quick());
    ASSERT_EQ(v.status, Status::Unsafe);
    ASSERT_TRUE(v.counterexample.has_value());
    const auto& c = *v.counterexample;
    EXPECT_EQ(c.kind, "intersection");
    EXPECT_NEAR(std::abs(c.x[0]), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(c.x[1]), 1.0, 1e-6);
    EXPECT_EQ(v.reason, "intersection:**01");
    EXPECT_NEAR(c.x[1], -1.0, 1e-6);
    ASSERT_EQ(c.members.size(), 4U);
    bool found = false;
    for (const auto& m : c.members) {
        EXPECT_GE(m.margin, 1e-7);
        found = found || m.summary == "u >= 0 and u <= -5";
    }
    EXPECT_TRUE(found);
}

TEST(Verify, SideVerticesOfExample32AreSafe)
{
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto atlas = build_atlas(net, problem.state_box, quick().atlas);
    for (const auto& t : atlas.intersections) {
        const auto rec = check_intersection(problem, net, t, quick());
        const bool side = t.key == "01**" || t.key == "10**";
        EXPECT_EQ(rec.status, side ? Status::Safe : Status::Unsafe) << t.key;
    }
}

TEST(Verify, ContractionIsSafe)
{
    const auto v = verify(require_builtin_problem("contraction"), l1_diamond_network(), quick());
    EXPECT_EQ(v.status, Status::Safe) << v.reason;
    EXPECT_FALSE(v.counterexample.has_value());
}

TEST(Verify, SmallSafeSetFailsCorrectness)
{
    const auto problem = with_h(require_builtin_problem("contraction"), "0.25 - x1^2 - x2^2");
    const auto v = verify(problem, l1_diamond_network(), quick());
    ASSERT_EQ(v.status, Status::Unsafe);
    EXPECT_EQ(v.counterexample->kind, "correctness");
    EXPECT_LE(v.counterexample->h, -1e-7);
    EXPECT_NEAR(v.counterexample->b, 0.0, 1e-6);
}

TEST(Verify, NonlinearSafeSetUsesBranchAndBound)
{
    const auto problem = with_h(require_builtin_problem("contraction"), "1.5 - x1^2 - x2^2 + 0*sin(x1)");
    const auto v = verify(problem, l1_diamond_network(), quick());
    EXPECT_EQ(v.status, Status::Safe) << v.reason;
}

TEST(Verify, EmptyBoundaryWithPositiveBarrierChecksContainment)
{
    // b > 0 everywhere on the box: no faces, only containment remains.
    const ReluNetwork net(2, {{Matrix::Zero(2, 1), Vector::Zero(1)}}, Vector::Zero(1), 1.0);
    const auto safe = verify(require_builtin_problem("contraction"), net, quick());
    EXPECT_EQ(safe.status, Status::Safe);
    EXPECT_TRUE(safe.atlas.patterns.empty());
    const auto bad = verify(with_h(require_builtin_problem("contraction"), "1 - x1^2 - x2^2"), net, quick());
    ASSERT_EQ(bad.status, Status::Unsafe);
    EXPECT_EQ(bad.counterexample->kind, "containment");
}

TEST(Verify, DimensionMismatchThrows)
{
    EXPECT_THROW(verify(require_builtin_problem("hiord8"), l1_diamond_network()), DimensionError);
}

TEST(Verify, VerdictIsIndependentOfThreadCount)
{
    const auto problem = require_builtin_problem("example32");
    auto cfg = quick();
    const auto one = verify(problem, l1_diamond_network(), cfg);
    cfg.atlas.threads = 4;
    const auto four = verify(problem, l1_diamond_network(), cfg);
    ASSERT_EQ(one.checks.size(), four.checks.size());
    for (std::size_t i = 0; i < one.checks.size(); ++i) {
        EXPECT_EQ(one.checks[i].id, four.checks[i].id);
        EXPECT_EQ(one.checks[i].status, four.checks[i].status);
    }
    EXPECT_EQ(one.counterexample->x, four.counterexample->x);
}

TEST(Correctness, MinimumOfHOnAFaceIsEight)
{
    // Face of pattern {x1 > 0, x2 > 0} is the segment x1 + x2 = 1; h >= 8 there.
    // Lowering h by 8.1 leaves both ends of the segment unsafe.
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto rec = check_correctness(problem, net, pat(net, {0, 2}), quick());
    EXPECT_EQ(rec.status, Status::Safe);
    EXPECT_EQ(rec.method, "bnb");
    const auto shifted = check_correctness(with_h(problem, "0.9 - x1^2 - x2^2"), net, pat(net, {0, 2}), quick());
    ASSERT_EQ(shifted.status, Status::Unsafe);
    const auto& x = shifted.counterexample->x;
    EXPECT_LE(shifted.counterexample->h, -1e-7);
    EXPECT_NEAR(x[0] + x[1], 1.0, 1e-9);
    EXPECT_GE(x.minCoeff(), -1e-9);
}

TEST(Correctness, AffineSafeSetUsesOneLp)
{
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto ok = check_correctness(with_h(problem, "x1 + x2 - 0.5"), net, pat(net, {0, 2}), quick());
    EXPECT_EQ(ok.status, Status::Safe);
    EXPECT_EQ(ok.method, "lp");
    const auto bad = check_correctness(with_h(problem, "x1 - 0.5"), net, pat(net, {0, 2}), quick());
    ASSERT_EQ(bad.status, Status::Unsafe);
    EXPECT_NEAR(bad.counterexample->x[0], 0.0, 1e-9);
    EXPECT_NEAR(bad.counterexample->x[1], 1.0, 1e-9);
}

TEST(Feasibility, CorollaryAppliesToEveryDiamondFace)
{
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto g = *is_constant_g(problem);
    for (auto active : std::vector<std::vector<int>>{{0, 2}, {0, 3}, {1, 2}, {1, 3}}) {
        const auto region = affine_region(net, pat(net, active));
        const double wg = (g.transpose() * region.output_gradient())(0);
        EXPECT_EQ(std::abs(wg), 1.0);
        EXPECT_TRUE(corollary_fast_path(problem, region));
        EXPECT_EQ(check_feasibility(problem, net, pat(net, active), quick()).method, "corollary");
    }
}

TEST(Feasibility, AutonomousOutwardFlowFails)
{
    const auto problem =
        parse_problem("system expand\nstates 2\nbox 1 -2 2\nbox 2 -2 2\nf1 = x1\nf2 = x2\nh = 9 - x1^2 - x2^2\n");
    const auto net = l1_diamond_network();
    const auto rec = check_feasibility(problem, net, pat(net, {0, 2}), quick());
    ASSERT_EQ(rec.status, Status::Unsafe);
    EXPECT_NEAR(net.evaluate(rec.counterexample->x), 0.0, 1e-9);
}

TEST(Intersection, SideVertexHasAnAdmissibleMember)
{
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto atlas = build_atlas(net, problem.state_box, quick().atlas);
    const Intersection* left = nullptr;
    for (const auto& t : atlas.intersections) {
        if (t.key == "01**") {
            left = &t;
        }
    }
    ASSERT_NE(left, nullptr);
    EXPECT_NEAR(left->witness[0], -1.0, 1e-9);
    EXPECT_EQ(check_intersection(problem, net, *left, quick()).status, Status::Safe);
}

TEST(FarkasSystem, RowCountIsPinnedPlusInputsPlusOne)
{
    auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto region = affine_region(net, pat(net, {0, 3}));
    UnstableSet pinned{{0, 0}, {0, 1}};
    EXPECT_EQ(build_farkas_system(problem, region, pinned, vec({0.0, -1.0})).theta.rows(), 3);
    problem.unbounded_input = false;
    problem.input_A = Matrix(2, 1);
    problem.input_A << 1, -1;
    problem.input_c = vec({2, 2});
    const auto sys = build_farkas_system(problem, region, pinned, vec({0.0, -1.0}));
    EXPECT_EQ(sys.theta.rows(), 5);
    EXPECT_EQ(sys.labels.back(), "U2");
}

TEST(FarkasSystem, DescribesTheVertexContradiction)
{
    // At (0, -1), pattern {x1 > 0, x2 < 0} needs x1dot >= 0 and b nondecreasing.
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const UnstableSet pinned{{0, 0}, {0, 1}};
    const auto sys = build_farkas_system(problem, affine_region(net, pat(net, {0, 3})), pinned, vec({0.0, -1.0}));
    EXPECT_EQ(describe_system(sys), "u >= 0 and u <= -5");
    EXPECT_TRUE(farkas_check(sys.theta, sys.lambda).has_value());
}

TEST(TangentCone, DiamondVertex)
{
    const auto net = l1_diamond_network();
    EXPECT_TRUE(tangent_cone_contains(net, vec({0, 1}), vec({0, -1})));
    EXPECT_FALSE(tangent_cone_contains(net, vec({0, 1}), vec({0, 1})));
    EXPECT_TRUE(tangent_cone_contains(net, vec({0, 1}), vec({1, -1})));
    EXPECT_FALSE(tangent_cone_contains(net, vec({0, 1}), vec({1, -0.5})));
    EXPECT_THROW(tangent_cone_contains(net, vec({0.1, 0.1}), vec({1, 0})), PreconditionError);
}

TEST(TangentCone, AgreesWithDistanceToTheDiamond)
{
    // d is tangent iff dist(x + s d, diamond) = o(s).
    const auto net = l1_diamond_network();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> vertex(0, 9);
    int agree = 0;
    int total = 0;
    for (int i = 0; i < 200; ++i) {
        Vector x(2);
        if (vertex(rng) == 0) {
            const int k = i % 4;
            x = vec({k == 0 ? 1.0 : k == 1 ? -1.0 : 0.0, k == 2 ? 1.0 : k == 3 ? -1.0 : 0.0});
        } else {
            const double t = angle(rng);
            x = vec({std::cos(t), std::sin(t)});
            x /= x.lpNorm<1>();
        }
        for (int j = 0; j < 5; ++j) {
            const double a = angle(rng);
            const Vector d = vec({std::cos(a), std::sin(a)});
            const double s = 1e-6;
            const double excess = (x + s * d).lpNorm<1>() - 1.0;
            const bool reference = excess <= 1e-3 * s;
            agree += tangent_cone_contains(net, x, d) == reference ? 1 : 0;
            ++total;
        }
    }
    EXPECT_GE(agree, total * 99 / 100);
}

TEST(Diagnostics, CounterexampleSurvivesRecheck)
{
    const auto problem = require_builtin_problem("example32");
    const auto net = l1_diamond_network();
    const auto cex = detail::feasibility_counterexample(problem, net, vec({0.0, 1.0}), quick());
    ASSERT_TRUE(cex.has_value());
    EXPECT_EQ(cex->unstable, "n1_1,n1_2");
    EXPECT_FALSE(detail::feasibility_counterexample(problem, net, vec({1.0, 0.0}), quick()).has_value());
    EXPECT_FALSE(detail::feasibility_counterexample(problem, net, vec({0.5, 0.5}), quick()).has_value());
}
