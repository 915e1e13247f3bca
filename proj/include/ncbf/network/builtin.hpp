#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncbf/network/relu_network.hpp"

namespace ncbf {

/// b(x) = 1 - |x1| - |x2| as a single layer of four ReLUs:
/// neurons read x1, -x1, x2, -x2, all output weights -1, output bias 1.
inline ReluNetwork l1_diamond_network()
{
    Matrix w(2, 4);
    w << 1, -1, 0, 0,
         0, 0, 1, -1;
    Vector omega = Vector::Constant(4, -1.0);
    return ReluNetwork(2, {{w, Vector::Zero(4)}}, omega, 1.0);
}

/// b(x) = |x1| + |x2| - 1: the superlevel set is the outside of the diamond.
inline ReluNetwork l1_outside_network()
{
    Matrix w(2, 4);
    w << 1, -1, 0, 0,
         0, 0, 1, -1;
    return ReluNetwork(2, {{w, Vector::Zero(4)}}, Vector::Constant(4, 1.0), -1.0);
}

inline std::vector<std::string> builtin_network_names()
{
    return {"l1_diamond", "l1_outside"};
}

inline std::optional<ReluNetwork> builtin_network(const std::string& name)
{
    if (name == "l1_diamond") {
        return l1_diamond_network();
    }
    if (name == "l1_outside") {
        return l1_outside_network();
    }
    return std::nullopt;
}

} // namespace ncbf
