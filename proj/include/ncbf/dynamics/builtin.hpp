#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncbf/dynamics/parse.hpp"

namespace ncbf {

namespace detail {

inline std::string darboux_source()
{
    return R"(system darboux
states 2
box 1 -2 2
box 2 -2 2
initial 1 0 1
initial 2 1 2
f1 = x2 + 2*x1*x2
f2 = -x1 + 2*x1^2 - x2^2
h = x1 + x2^2
)";
}

inline std::string obstacle_source()
{
    return R"(system obstacle
states 3
inputs 1
names x1 x2 psi
box 1 -2 2
box 2 -2 2
box 3 -2 2
initial 1 -0.1 0.1
initial 2 -2 -1.8
initial 3 -0.5235987755982988 0.5235987755982988
f1 = sin(psi)
f2 = cos(psi)
f3 = 0
g3_1 = 1
h = x1^2 + x2^2 - 0.04
unbounded_inputs
)";
}

// Mean motion 0.0565 rad per unit time (the target orbit is not stated).
inline std::string spacecraft_source()
{
    return R"(system spacecraft
states 6
inputs 3
names px py pz vx vy vz
box 1 -1.5 1.5
box 2 -1.5 1.5
box 3 -1.5 1.5
box 4 -1.5 1.5
box 5 -1.5 1.5
box 6 -1.5 1.5
f1 = vx
f2 = vy
f3 = vz
f4 = 3*0.0565^2*px + 2*0.0565*vy
f5 = -2*0.0565*vx
f6 = -0.0565^2*pz
g4_1 = 1
g5_2 = 1
g6_3 = 1
h = min(sqrt(px^2 + py^2 + pz^2) - 0.25, 1.5 - sqrt(px^2 + py^2 + pz^2))
unbounded_inputs
)";
}

inline std::string hiord8_source()
{
    std::string s = "system hiord8\nstates 8\n";
    for (int k = 1; k <= 8; ++k) {
        s += "box " + std::to_string(k) + " -2 2\n";
    }
    for (int k = 1; k < 8; ++k) {
        s += "f" + std::to_string(k) + " = x" + std::to_string(k + 1) + "\n";
    }
    s += "f8 = -576*x1 - 2400*x2 - 4180*x3 - 3980*x4 - 2273*x5 - 800*x6 - 170*x7 - 20*x8\n";
    s += "h = (x1 + 2)^2 + (x2 + 2)^2 + (x3 + 2)^2 + (x4 + 2)^2 + (x5 + 2)^2 + (x6 + 2)^2 + (x7 + 2)^2 + "
         "(x8 + 2)^2 - 0.16\n";
    return s;
}

inline std::string example32_source()
{
    return R"(system example32
states 2
inputs 1
box 1 -2 2
box 2 -2 2
f1 = x1
f2 = -x1 + 5*x2
g1_1 = 1
g2_1 = 0
h = 9 - x1^2 - x2^2
unbounded_inputs
)";
}

inline std::string contraction_source()
{
    return R"(system contraction
states 2
box 1 -2 2
box 2 -2 2
f1 = -x1
f2 = -x2
h = 9 - x1^2 - x2^2
)";
}

} // namespace detail

inline std::vector<std::string> builtin_problem_names()
{
    return {"contraction", "darboux", "example32", "hiord8", "obstacle", "spacecraft"};
}

/// Benchmark systems by name; nullopt for an unknown name.
inline std::optional<SafetyProblem> builtin_problem(const std::string& name)
{
    if (name == "darboux") {
        return parse_problem(detail::darboux_source());
    }
    if (name == "obstacle") {
        return parse_problem(detail::obstacle_source());
    }
    if (name == "spacecraft") {
        return parse_problem(detail::spacecraft_source());
    }
    if (name == "hiord8") {
        return parse_problem(detail::hiord8_source());
    }
    if (name == "example32") {
        return parse_problem(detail::example32_source());
    }
    if (name == "contraction") {
        return parse_problem(detail::contraction_source());
    }
    return std::nullopt;
}

/// builtin_problem that throws PreconditionError for an unknown name.
inline SafetyProblem require_builtin_problem(const std::string& name)
{
    auto p = builtin_problem(name);
    if (!p) {
        throw PreconditionError("unknown builtin system '" + name + "'");
    }
    return *p;
}

} // namespace ncbf
