#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ncbf/boundprop/interval_eval.hpp"
#include "ncbf/dynamics/builtin.hpp"
#include "support/expr_oracle.hpp"

using namespace ncbf;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double d : v) {
        out[k++] = d;
    }
    return out;
}

std::string wrap(const std::string& body, int n = 3)
{
    std::string s = "states " + std::to_string(n) + "\n";
    for (int k = 1; k <= n; ++k) {
        s += "box " + std::to_string(k) + " -1 1\n";
        if (body.find("f" + std::to_string(k) + " =") == std::string::npos) {
            s += "f" + std::to_string(k) + " = 0\n";
        }
    }
    if (body.find("h =") == std::string::npos) {
        s += "h = 1\n";
    }
    return s + body;
}

ParseError parse_error(const std::string& source)
{
    try {
        parse_problem(source);
    } catch (const ParseError& e) {
        return e;
    }
    ADD_FAILURE() << "expected a parse error for:\n" << source;
    return ParseError("none", 0, 0);
}

} // namespace

TEST(Parse, SimpleExpressionEvaluates)
{
    const auto p = parse_problem(wrap("f1 = x2 + 2*x1*x2\n"));
    EXPECT_DOUBLE_EQ(p.f_expr(0).eval(vec({1, 1, 0})), 3.0);
}

TEST(Parse, PrecedenceAndPowers)
{
    const auto p = parse_problem(wrap("f1 = -x1^2\nf2 = 2 - 3 - 4\nf3 = 2*3^2/x2\n"));
    EXPECT_DOUBLE_EQ(p.f_expr(0).eval(vec({3, 1, 0})), -9.0);
    EXPECT_DOUBLE_EQ(p.f_expr(1).eval(vec({0, 1, 0})), -5.0);
    EXPECT_DOUBLE_EQ(p.f_expr(2).eval(vec({0, 2, 0})), 9.0);
    const auto q = parse_problem(wrap("f1 = x1^-2\nf2 = min(x1, -x2) + max(1, abs(x3))\n"));
    EXPECT_DOUBLE_EQ(q.f_expr(0).eval(vec({2, 0, 0})), 0.25);
    EXPECT_DOUBLE_EQ(q.f_expr(1).eval(vec({0.5, 1, -3})), 2.0);
}

TEST(Parse, TrailingOperatorReportsPosition)
{
    const auto e = parse_error(wrap("f1 = x3 +\n"));
    EXPECT_EQ(e.line(), 8U);
    EXPECT_EQ(e.column(), 10U);
    EXPECT_NE(std::string(e.what()).find("operand"), std::string::npos);
}

TEST(Parse, Errors)
{
    EXPECT_EQ(parse_error(wrap("f1 = foo\n")).column(), 6U);        // unknown identifier
    EXPECT_EQ(parse_error(wrap("f1 = x4\n")).column(), 6U);         // beyond n
    EXPECT_EQ(parse_error(wrap("f1 = (x1\n")).column(), 9U);        // missing paren
    EXPECT_EQ(parse_error(wrap("f1 = x1 $ x2\n")).column(), 9U);    // bad character
    EXPECT_EQ(parse_error(wrap("f1 = x1^1.5\n")).column(), 9U);     // non-integer power
    EXPECT_EQ(parse_error(wrap("g1_1 = 1\n")).column(), 1U);        // no inputs declared
    parse_error(wrap("f1 = 1\nf1 = 2\n"));                          // duplicate
    parse_error("states 1\nbox 1 0 1\nh = 1\n");                    // missing f1
    parse_error("states 1\nf1 = 1\nh = 1\n");                       // missing box
    parse_error("states 1\nbox 1 1 0\nf1 = 1\nh = 1\n");            // empty box
    parse_error("states 1\ninputs 1\nbox 1 0 1\nf1 = 1\nh = 1\n");  // no input set
    parse_error("states 1\ninputs 2\nbox 1 0 1\nf1 = 1\nh = 1\ninput_constraint 1 <= 1\n");
    parse_error("f1 = 1\n");                                        // before states
}

TEST(Parse, InputConstraintsAndComments)
{
    const auto p = parse_problem(R"(# comment line
states 2   # two states
inputs 2
box 1 -1 1
box 2 -1.5 2.5e0
f1 = x2
f2 = -x1
g12 = 1
g2_1 = x1
h = 1 - x1^2
input_constraint 1 0 <= 2
input_constraint -1 0.5 <= 3
)");
    EXPECT_EQ(p.m, 2);
    EXPECT_EQ(p.input_A.rows(), 2);
    EXPECT_DOUBLE_EQ(p.input_A(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(p.input_A(1, 1), 0.5);
    EXPECT_DOUBLE_EQ(p.input_c[1], 3.0);
    EXPECT_DOUBLE_EQ(p.state_box.hi[1], 2.5);
    const Matrix g = eval_g(p, vec({0.5, 0}));
    EXPECT_DOUBLE_EQ(g(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(g(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(g(0, 0), 0.0);
    EXPECT_FALSE(is_constant_g(p).has_value());
    EXPECT_FALSE(p.unbounded_input);
}

TEST(Eval, DomainErrors)
{
    const auto p = parse_problem(wrap("f1 = 1/x1\nf2 = sqrt(x1)\nf3 = x1^-1\n"));
    EXPECT_THROW(p.f_expr(0).eval(vec({0, 0, 0})), DomainError);
    EXPECT_THROW(p.f_expr(1).eval(vec({-1, 0, 0})), DomainError);
    EXPECT_THROW(p.f_expr(2).eval(vec({0, 0, 0})), DomainError);
    EXPECT_THROW(eval_f(p, vec({1, 1})), DimensionError);
    const auto big = parse_problem(wrap("f1 = x1^60*1e300\n"));
    EXPECT_THROW(big.f_expr(0).eval(vec({1e10, 0, 0})), DomainError);
}

TEST(Builtins, Darboux)
{
    const auto p = require_builtin_problem("darboux");
    EXPECT_EQ(p.n, 2);
    EXPECT_EQ(p.m, 0);
    const Vector f = eval_f(p, vec({1, 1}));
    EXPECT_DOUBLE_EQ(f[0], 3.0);
    EXPECT_DOUBLE_EQ(f[1], 0.0);
    EXPECT_DOUBLE_EQ(eval_h(p, vec({-1, 1})), 0.0);
    ASSERT_TRUE(p.initial_box.has_value());
    EXPECT_DOUBLE_EQ(p.initial_box->lo[1], 1.0);
}

TEST(Builtins, ObstacleAvoidance)
{
    const auto p = require_builtin_problem("obstacle");
    const Vector f = eval_f(p, vec({0, 0, 0}));
    EXPECT_DOUBLE_EQ(f[0], 0.0);
    EXPECT_DOUBLE_EQ(f[1], 1.0);
    EXPECT_DOUBLE_EQ(f[2], 0.0);
    const auto g = is_constant_g(p);
    ASSERT_TRUE(g.has_value());
    EXPECT_TRUE(same_entries(*g, Matrix(vec({0, 0, 1}))));
    EXPECT_NEAR(eval_h(p, vec({0.2, 0, 1})), 0.0, 1e-15);
    EXPECT_TRUE(p.unbounded_input);
}

TEST(Builtins, SpacecraftInputMatrix)
{
    const auto p = require_builtin_problem("spacecraft");
    const auto g = is_constant_g(p);
    ASSERT_TRUE(g.has_value());
    Matrix expected = Matrix::Zero(6, 3);
    expected.bottomRows(3) = Matrix::Identity(3, 3);
    EXPECT_TRUE(same_entries(*g, expected));
    EXPECT_NEAR(eval_h(p, vec({1, 0, 0, 0, 0, 0})), 0.5, 1e-15);
    EXPECT_NEAR(eval_h(p, vec({0.3, 0, 0, 0, 0, 0})), 0.05, 1e-15);
    const auto drift = affine_f(p);
    ASSERT_TRUE(drift.has_value());
    EXPECT_DOUBLE_EQ(drift->F(0, 3), 1.0);
    EXPECT_NEAR(drift->F(3, 4), 2 * 0.0565, 1e-15);
}

TEST(Builtins, Example32AndHiord8)
{
    const auto p = require_builtin_problem("example32");
    const auto g = is_constant_g(p);
    ASSERT_TRUE(g.has_value());
    EXPECT_TRUE(same_entries(*g, Matrix(vec({1, 0}))));
    EXPECT_TRUE(p.unbounded_input);
    const Vector f = eval_f(p, vec({0, 1}));
    EXPECT_DOUBLE_EQ(f[0], 0.0);
    EXPECT_DOUBLE_EQ(f[1], 5.0);
    const auto h8 = require_builtin_problem("hiord8");
    EXPECT_EQ(h8.n, 8);
    EXPECT_EQ(h8.m, 0);
    Vector x = Vector::Zero(8);
    x[0] = 1;
    EXPECT_DOUBLE_EQ(eval_f(h8, x)[7], -576.0);
    EXPECT_NEAR(eval_h(h8, Vector::Constant(8, -2.0)), -0.16, 1e-15);
    EXPECT_FALSE(builtin_problem("nope").has_value());
    EXPECT_THROW(require_builtin_problem("nope"), PreconditionError);
}

TEST(RoundTrip, BuiltinsAreIdempotent)
{
    for (const auto& name : builtin_problem_names()) {
        const auto p = require_builtin_problem(name);
        const std::string text = unparse_problem(p);
        const auto q = parse_problem(text);
        EXPECT_EQ(q, p) << name << "\n" << text;
        EXPECT_EQ(unparse_problem(q), text) << name;
    }
}

TEST(RoundTrip, TrickyExpressions)
{
    const std::vector<std::string> cases{
        "-3", "-(3)", "-3^2", "(-3)^2", "x1 - -2", "x1 - (x2 - x3)", "x1/(x2*x3)", "(x1 + x2)*x3", "-(-x1)",
        "- -x1", "2*-3", "(x1^2)^3", "x1^-2", "1e-05*x1", "1e+20", "min(x1, max(x2, -x3))", "-sin(x1)^2",
        "(-x1)^2", "x1 - x2 + x3", "x1 - (x2 + x3)", "x1/x2/x3", "x1/(x2/x3)", "0.1 + 0.2", "-0"};
    for (const auto& c : cases) {
        const auto p = parse_problem(wrap("f1 = " + c + "\n"));
        const auto q = parse_problem(unparse_problem(p));
        EXPECT_EQ(q, p) << c << " -> " << p.f_expr(0).to_string();
    }
}

TEST(Oracle, BuiltinsMatchIndependentEvaluator)
{
    const std::vector<std::pair<std::string, std::string>> sources{
        {"darboux", detail::darboux_source()},       {"obstacle", detail::obstacle_source()},
        {"spacecraft", detail::spacecraft_source()}, {"hiord8", detail::hiord8_source()},
        {"example32", detail::example32_source()},   {"contraction", detail::contraction_source()}};
    std::mt19937_64 rng(2024);
    for (const auto& [name, src] : sources) {
        const auto p = require_builtin_problem(name);
        std::map<std::string, int> names;
        for (int k = 0; k < static_cast<int>(p.state_names.size()); ++k) {
            names[p.state_names[static_cast<std::size_t>(k)]] = k;
        }
        const testkit::ExprOracle oracle(names);
        // Right-hand sides straight from the source text.
        std::map<std::string, std::string> rhs;
        std::istringstream in(src);
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find(" = ");
            if (eq != std::string::npos) {
                rhs[line.substr(0, eq)] = line.substr(eq + 3);
            }
        }
        for (int s = 0; s < 1000; ++s) {
            Vector x(p.n);
            std::vector<double> xs(static_cast<std::size_t>(p.n));
            for (int k = 0; k < p.n; ++k) {
                std::uniform_real_distribution<double> u(p.state_box.lo[k], p.state_box.hi[k]);
                x[k] = u(rng);
                xs[static_cast<std::size_t>(k)] = x[k];
            }
            const Vector f = eval_f(p, x);
            for (int k = 0; k < p.n; ++k) {
                const double want = oracle(rhs.at("f" + std::to_string(k + 1)), xs);
                EXPECT_NEAR(f[k], want, 1e-12 * (1.0 + std::abs(want))) << name << " f" << k + 1;
            }
            const double hw = oracle(rhs.at("h"), xs);
            EXPECT_NEAR(eval_h(p, x), hw, 1e-12 * (1.0 + std::abs(hw))) << name << " h";
            const Matrix g = eval_g(p, x);
            for (int k = 0; k < p.n; ++k) {
                for (int j = 0; j < p.m; ++j) {
                    const std::string key = "g" + std::to_string(k + 1) + "_" + std::to_string(j + 1);
                    const double want = rhs.count(key) != 0U ? oracle(rhs.at(key), xs) : 0.0;
                    EXPECT_EQ(g(k, j), want) << name << " " << key;
                }
            }
        }
    }
}

TEST(IntervalEval, DegenerateBoxMatchesPointEvaluation)
{
    std::mt19937_64 rng(99);
    for (const auto& name : builtin_problem_names()) {
        const auto p = require_builtin_problem(name);
        for (int s = 0; s < 200; ++s) {
            Vector x(p.n);
            for (int k = 0; k < p.n; ++k) {
                std::uniform_real_distribution<double> u(p.state_box.lo[k], p.state_box.hi[k]);
                x[k] = u(rng);
            }
            const auto box = HyperCube::point(x);
            const auto fi = interval_f(p, box);
            const Vector f = eval_f(p, x);
            for (int k = 0; k < p.n; ++k) {
                const auto& iv = fi[static_cast<std::size_t>(k)];
                EXPECT_TRUE(iv.contains(f[k])) << name;
                EXPECT_LE(iv.width(), 1e-13 * (1.0 + std::abs(f[k]))) << name;
            }
            const Interval hi = interval_eval(p.h, box);
            const double h = eval_h(p, x);
            EXPECT_TRUE(hi.contains(h)) << name;
            EXPECT_LE(hi.width(), 1e-13 * (1.0 + std::abs(h))) << name;
        }
    }
}

TEST(IntervalEval, EnclosesSamplesOverBoxes)
{
    std::mt19937_64 rng(17);
    for (const auto& name : builtin_problem_names()) {
        const auto p = require_builtin_problem(name);
        for (int s = 0; s < 50; ++s) {
            Vector lo(p.n);
            Vector hi(p.n);
            for (int k = 0; k < p.n; ++k) {
                std::uniform_real_distribution<double> u(p.state_box.lo[k], p.state_box.hi[k]);
                lo[k] = u(rng);
                hi[k] = u(rng);
                if (lo[k] > hi[k]) {
                    std::swap(lo[k], hi[k]);
                }
            }
            const HyperCube box(lo, hi);
            const auto fi = interval_f(p, box);
            const Interval hiv = interval_eval(p.h, box);
            for (int t = 0; t < 20; ++t) {
                Vector x(p.n);
                for (int k = 0; k < p.n; ++k) {
                    std::uniform_real_distribution<double> u(lo[k], hi[k]);
                    x[k] = u(rng);
                }
                const Vector f = eval_f(p, x);
                for (int k = 0; k < p.n; ++k) {
                    EXPECT_TRUE(fi[static_cast<std::size_t>(k)].contains(f[k])) << name;
                }
                EXPECT_TRUE(hiv.contains(eval_h(p, x))) << name;
            }
        }
    }
}

TEST(Affine, DetectsAffineDrift)
{
    const auto p = require_builtin_problem("example32");
    const auto d = affine_f(p);
    ASSERT_TRUE(d.has_value());
    Matrix F(2, 2);
    F << 1, 0, -1, 5;
    EXPECT_TRUE(same_entries(d->F, F));
    EXPECT_FALSE(affine_f(require_builtin_problem("darboux")).has_value());
    const auto q = parse_problem(wrap("f1 = (2*x1 - x2)/4 + 3\nf2 = sin(0)*x1\nf3 = x3^1\n"));
    const auto dq = affine_f(q);
    ASSERT_TRUE(dq.has_value());
    EXPECT_DOUBLE_EQ(dq->F(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(dq->F(0, 1), -0.25);
    EXPECT_DOUBLE_EQ(dq->f0[0], 3.0);
    EXPECT_DOUBLE_EQ(dq->F(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(dq->F(2, 2), 1.0);
}
