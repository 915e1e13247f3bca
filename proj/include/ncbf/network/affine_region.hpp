#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "ncbf/network/activation.hpp"

namespace ncbf {

/// Affine map x -> normal^T x + offset.
struct AffineMap {
    Vector normal;
    double offset = 0.0;

    double operator()(const Vector& x) const { return normal.dot(x) + offset; }
};

enum class SignSense { NonNegative, NonPositive };

/// One half-space of the activation region: the neuron's pre-activation map
/// must be >= 0 (neuron in S) or <= 0 (neuron not in S).
struct MembershipConstraint {
    NeuronId neuron;
    AffineMap map;
    SignSense sense;

    /// Signed slack; negative means violated.
    double slack(const Vector& x) const
    {
        const double v = map(x);
        return sense == SignSense::NonNegative ? v : -v;
    }
};

/// Closed activation region of one pattern together with the affine form of
/// every pre-activation and of the network output on that region.
class AffineRegion {
public:
    AffineRegion(ActivationPattern pattern, std::vector<std::vector<AffineMap>> neuron_maps, AffineMap output)
        : pattern_(std::move(pattern)), neuron_maps_(std::move(neuron_maps)), output_(std::move(output))
    {
    }

    const ActivationPattern& pattern() const { return pattern_; }
    const Vector& output_gradient() const { return output_.normal; }
    double output_offset() const { return output_.offset; }
    const AffineMap& output_map() const { return output_; }

    /// Pre-activation map of neuron (i, j): normal = Wbar_{i-1}(S) W_ij.
    const AffineMap& neuron_map(NeuronId id) const
    {
        return neuron_maps_.at(static_cast<std::size_t>(id.layer)).at(static_cast<std::size_t>(id.index));
    }
    const std::vector<std::vector<AffineMap>>& neuron_maps() const { return neuron_maps_; }

    double apply(const Vector& x) const { return output_(x); }

    std::vector<MembershipConstraint> membership() const
    {
        std::vector<MembershipConstraint> out;
        for (std::size_t i = 0; i < neuron_maps_.size(); ++i) {
            for (std::size_t j = 0; j < neuron_maps_[i].size(); ++j) {
                const NeuronId id{static_cast<int>(i), static_cast<int>(j)};
                out.push_back({id, neuron_maps_[i][j],
                               pattern_.active(id) ? SignSense::NonNegative : SignSense::NonPositive});
            }
        }
        return out;
    }

    /// Smallest membership slack at x (>= 0 iff x lies in the closed region).
    double min_slack(const Vector& x) const
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : membership()) {
            best = std::min(best, c.slack(x));
        }
        return best;
    }

private:
    ActivationPattern pattern_;
    std::vector<std::vector<AffineMap>> neuron_maps_;
    AffineMap output_;
};

/// Region-wise affine algebra: propagates Wbar_i(S), rbar_i(S) layer by layer.
inline AffineRegion affine_region(const ReluNetwork& net, const ActivationPattern& pattern)
{
    if (!pattern.matches_shape(net)) {
        throw DimensionError("affine_region: pattern shape does not match network");
    }
    const int n = net.input_dim();
    Matrix wbar = Matrix::Identity(n, n); // n x M_{i-1}; columns are neuron output normals
    Vector rbar = Vector::Zero(n);
    std::vector<std::vector<AffineMap>> maps(static_cast<std::size_t>(net.num_layers()));
    for (int i = 0; i < net.num_layers(); ++i) {
        const DenseLayer& layer = net.layer(i);
        const Matrix pre_normals = wbar * layer.weights;
        const Vector pre_offsets = layer.weights.transpose() * rbar + layer.bias;
        const Eigen::Index width = layer.bias.size();
        Matrix next_wbar = Matrix::Zero(n, width);
        Vector next_rbar = Vector::Zero(width);
        auto& layer_maps = maps[static_cast<std::size_t>(i)];
        layer_maps.reserve(static_cast<std::size_t>(width));
        for (Eigen::Index j = 0; j < width; ++j) {
            layer_maps.push_back({pre_normals.col(j), pre_offsets[j]});
            if (pattern.active(i, static_cast<int>(j))) {
                next_wbar.col(j) = pre_normals.col(j);
                next_rbar[j] = pre_offsets[j];
            }
        }
        wbar = std::move(next_wbar);
        rbar = std::move(next_rbar);
    }
    AffineMap output{wbar * net.output_weights(), net.output_weights().dot(rbar) + net.output_bias()};
    return {pattern, std::move(maps), std::move(output)};
}

} // namespace ncbf
