#pragma once

#include <random>
#include <vector>

#include "ncbf/box.hpp"
#include "ncbf/network/relu_network.hpp"

namespace ncbf::testkit {

/// Dense ReLU net with Gaussian weights, for property tests.
inline ReluNetwork random_network(std::mt19937_64& rng, int input_dim, const std::vector<int>& widths)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<DenseLayer> layers;
    int prev = input_dim;
    for (int w : widths) {
        DenseLayer l{Matrix(prev, w), Vector(w)};
        for (int r = 0; r < prev; ++r) {
            for (int c = 0; c < w; ++c) {
                l.weights(r, c) = normal(rng);
            }
        }
        for (int c = 0; c < w; ++c) {
            l.bias[c] = 0.5 * normal(rng);
        }
        layers.push_back(std::move(l));
        prev = w;
    }
    Vector omega(prev);
    for (int c = 0; c < prev; ++c) {
        omega[c] = normal(rng);
    }
    return ReluNetwork(input_dim, std::move(layers), omega, 0.3 * normal(rng));
}

inline Vector random_point(std::mt19937_64& rng, int n, double radius)
{
    std::uniform_real_distribution<double> u(-radius, radius);
    Vector x(n);
    for (int k = 0; k < n; ++k) {
        x[k] = u(rng);
    }
    return x;
}

} // namespace ncbf::testkit

namespace ncbf::testkit {

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double d : v) {
        out[k++] = d;
    }
    return out;
}

inline HyperCube cube(std::initializer_list<double> lo, std::initializer_list<double> hi)
{
    return {vec(lo), vec(hi)};
}

} // namespace ncbf::testkit
