#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "ncbf/box.hpp"
#include "ncbf/interval.hpp"
#include "ncbf/network/activation.hpp"

namespace ncbf {

/// Sound enclosure [b_lo, b_hi] of the network output over a cube.
struct OutputBounds {
    double lo = 0.0;
    double hi = 0.0;

    /// sgn(lo) * sgn(hi) <= 0: the cube may meet {b = 0}.
    bool straddles_zero() const { return lo <= 0.0 && hi >= 0.0; }
    Interval interval() const { return {lo, hi}; }
};

struct NetworkBounds {
    OutputBounds output;
    std::vector<std::vector<Interval>> pre; // per layer, per neuron
    UnstableSet unstable;                   // pre-activation interval strictly straddles zero

    /// Neurons whose interval reaches zero within tol (includes touching).
    UnstableSet touching_zero(double tol) const
    {
        UnstableSet out;
        for (std::size_t i = 0; i < pre.size(); ++i) {
            for (std::size_t j = 0; j < pre[i].size(); ++j) {
                if (pre[i][j].lo <= tol && pre[i][j].hi >= -tol) {
                    out.push_back({static_cast<int>(i), static_cast<int>(j)});
                }
            }
        }
        return out;
    }
};

namespace detail {

inline UnstableSet strictly_unstable(const std::vector<std::vector<Interval>>& pre, double zero_tol)
{
    UnstableSet out;
    for (std::size_t i = 0; i < pre.size(); ++i) {
        for (std::size_t j = 0; j < pre[i].size(); ++j) {
            if (pre[i][j].lo < -zero_tol && pre[i][j].hi > zero_tol) {
                out.push_back({static_cast<int>(i), static_cast<int>(j)});
            }
        }
    }
    return out;
}

inline Interval relu(const Interval& a)
{
    return {std::max(0.0, a.lo), std::max(0.0, a.hi)};
}

/// Sum_k w_k * z_k + bias in outward-rounded interval arithmetic.
template <typename Column>
Interval affine_interval(const Column& w, const std::vector<Interval>& z, double bias)
{
    Interval acc(bias);
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double wk = w[static_cast<Eigen::Index>(k)];
        if (wk != 0.0) {
            acc = acc + Interval(wk) * z[k];
        }
    }
    return acc;
}

// Conservative floating-point pad for a bound assembled from terms whose
// absolute values sum to `magnitude`.
inline double rounding_pad(double magnitude, std::size_t terms)
{
    return 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(terms + 2) * (magnitude + 1.0) +
           std::numeric_limits<double>::denorm_min();
}

} // namespace detail

/// Interval bound propagation: interval arithmetic through each affine layer
/// and ReLU clamp.
inline NetworkBounds ibp_bounds(const ReluNetwork& net, const HyperCube& cube, double zero_tol = 1e-9)
{
    if (cube.dim() != net.input_dim()) {
        throw DimensionError("ibp_bounds: cube dimension differs from network input");
    }
    NetworkBounds out;
    std::vector<Interval> z = cube.intervals();
    for (int i = 0; i < net.num_layers(); ++i) {
        const DenseLayer& l = net.layer(i);
        std::vector<Interval> pre(static_cast<std::size_t>(l.bias.size()));
        for (Eigen::Index j = 0; j < l.bias.size(); ++j) {
            pre[static_cast<std::size_t>(j)] = detail::affine_interval(l.weights.col(j), z, l.bias[j]);
        }
        z.resize(pre.size());
        for (std::size_t j = 0; j < pre.size(); ++j) {
            z[j] = detail::relu(pre[j]);
        }
        out.pre.push_back(std::move(pre));
    }
    const Interval y = detail::affine_interval(net.output_weights(), z, net.output_bias());
    out.output = {y.lo, y.hi};
    out.unstable = detail::strictly_unstable(out.pre, zero_tol);
    return out;
}

namespace detail {

/// Lower (or upper) linear bound of `coeff * pre_target` (rows of coeff index
/// outputs, columns neurons of layer `target`) back-substituted to the input,
/// using ReLU relaxations built from the bounds of layers < target.
/// Returns per-row concrete bounds over the cube.
inline std::vector<double> crown_backward(const ReluNetwork& net, const HyperCube& cube,
                                          const std::vector<std::vector<Interval>>& pre, int target,
                                          const Matrix& coeff, const Vector& offset, bool upper)
{
    // Current expression: A * pre_layer + c (A rows = outputs).
    Matrix a = coeff;
    Vector c = offset;
    Vector magnitude = offset.cwiseAbs();
    for (int layer = target; layer >= 0; --layer) {
        const DenseLayer& l = net.layer(layer);
        // pre_layer = W^T z_{layer-1} + bias
        c += a * l.bias;
        magnitude += (a.cwiseAbs() * l.bias.cwiseAbs());
        Matrix az = a * l.weights.transpose(); // rows x M_{layer-1}
        if (layer == 0) {
            a = std::move(az);
            break;
        }
        const auto& bounds = pre[static_cast<std::size_t>(layer - 1)];
        Matrix next(az.rows(), az.cols());
        for (Eigen::Index j = 0; j < az.cols(); ++j) {
            const Interval& b = bounds[static_cast<std::size_t>(j)];
            double lower_slope = 0.0;
            double upper_slope = 0.0;
            double upper_icpt = 0.0;
            if (b.lo >= 0.0) {
                lower_slope = upper_slope = 1.0;
            } else if (b.hi <= 0.0) {
                lower_slope = upper_slope = 0.0;
            } else {
                upper_slope = b.hi / (b.hi - b.lo);
                upper_icpt = -upper_slope * b.lo;
                lower_slope = b.hi >= -b.lo ? 1.0 : 0.0;
            }
            for (Eigen::Index r = 0; r < az.rows(); ++r) {
                const double w = az(r, j);
                // For a lower bound, positive coefficients take the lower
                // relaxation; for an upper bound, the opposite.
                const bool use_upper = upper ? (w >= 0.0) : (w < 0.0);
                if (use_upper) {
                    next(r, j) = w * upper_slope;
                    c[r] += w * upper_icpt;
                    magnitude[r] += std::abs(w * upper_icpt);
                } else {
                    next(r, j) = w * lower_slope;
                }
            }
        }
        a = std::move(next);
    }
    const Vector center = cube.center();
    const Vector radius = cube.radius();
    std::vector<double> out(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double mid = a.row(r).dot(center) + c[r];
        const double spread = a.row(r).cwiseAbs().dot(radius);
        const double mag = magnitude[r] + a.row(r).cwiseAbs().dot(center.cwiseAbs() + radius);
        const double pad = rounding_pad(mag, static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(target + 2) + 4);
        out[static_cast<std::size_t>(r)] = upper ? mid + spread + pad : mid - spread - pad;
    }
    return out;
}

} // namespace detail

/// CROWN-style linear relaxation bounds. Intermediate layers are bounded by
/// back-substitution and intersected with IBP; the result is always contained
/// in the IBP enclosure.
inline NetworkBounds linear_relaxation_bounds(const ReluNetwork& net, const HyperCube& cube, double zero_tol = 1e-9)
{
    NetworkBounds ibp = ibp_bounds(net, cube, zero_tol);
    NetworkBounds out;
    out.pre.resize(static_cast<std::size_t>(net.num_layers()));
    for (int i = 0; i < net.num_layers(); ++i) {
        const auto width = static_cast<Eigen::Index>(net.layer_width(i));
        auto& layer_bounds = out.pre[static_cast<std::size_t>(i)];
        const auto& ibp_layer = ibp.pre[static_cast<std::size_t>(i)];
        if (i == 0) {
            layer_bounds = ibp_layer; // first layer: interval arithmetic is exact up to rounding
            continue;
        }
        const Matrix eye = Matrix::Identity(width, width);
        const Vector zero = Vector::Zero(width);
        const auto lo = detail::crown_backward(net, cube, out.pre, i, eye, zero, false);
        const auto hi = detail::crown_backward(net, cube, out.pre, i, eye, zero, true);
        layer_bounds.resize(static_cast<std::size_t>(width));
        for (Eigen::Index j = 0; j < width; ++j) {
            const auto k = static_cast<std::size_t>(j);
            layer_bounds[k] = intersect(ibp_layer[k], Interval(lo[k], hi[k]));
        }
    }
    const Matrix omega = net.output_weights().transpose();
    const Vector psi = Vector::Constant(1, net.output_bias());
    // The output head is one more affine map after the last ReLU; express it
    // as coefficients on z_L and push through with a virtual target layer.
    const int last = net.num_layers() - 1;
    const auto& last_bounds = out.pre[static_cast<std::size_t>(last)];
    Matrix a(1, omega.cols());
    double c = psi[0];
    double c_hi = psi[0];
    Matrix a_hi(1, omega.cols());
    double mag = std::abs(psi[0]);
    for (Eigen::Index j = 0; j < omega.cols(); ++j) {
        const Interval& b = last_bounds[static_cast<std::size_t>(j)];
        const double w = omega(0, j);
        double lower_slope = 0.0;
        double upper_slope = 0.0;
        double upper_icpt = 0.0;
        if (b.lo >= 0.0) {
            lower_slope = upper_slope = 1.0;
        } else if (b.hi <= 0.0) {
            lower_slope = upper_slope = 0.0;
        } else {
            upper_slope = b.hi / (b.hi - b.lo);
            upper_icpt = -upper_slope * b.lo;
            lower_slope = b.hi >= -b.lo ? 1.0 : 0.0;
        }
        // lower bound of w * z_j
        if (w >= 0.0) {
            a(0, j) = w * lower_slope;
            a_hi(0, j) = w * upper_slope;
            c_hi += w * upper_icpt;
        } else {
            a(0, j) = w * upper_slope;
            c += w * upper_icpt;
            a_hi(0, j) = w * lower_slope;
        }
        mag += std::abs(w * upper_icpt);
    }
    const auto lo = detail::crown_backward(net, cube, out.pre, last, a, Vector::Constant(1, c), false);
    const auto hi = detail::crown_backward(net, cube, out.pre, last, a_hi, Vector::Constant(1, c_hi), true);
    const double pad = detail::rounding_pad(mag, static_cast<std::size_t>(omega.cols()) + 2);
    const Interval crown(lo[0] - pad, hi[0] + pad);
    const Interval y = intersect(ibp.output.interval(), crown);
    out.output = {y.lo, y.hi};
    out.unstable = detail::strictly_unstable(out.pre, zero_tol);
    return out;
}

} // namespace ncbf
