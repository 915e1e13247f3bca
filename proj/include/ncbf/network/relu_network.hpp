#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/linalg.hpp"

namespace ncbf {

/// One hidden layer. `weights` is M_{i-1} x M_i: column j holds the incoming
/// weights of neuron j, so the pre-activation vector is weights^T z + bias.
struct DenseLayer {
    Matrix weights;
    Vector bias;

    friend bool operator==(const DenseLayer& a, const DenseLayer& b)
    {
        return same_entries(a.weights, b.weights) && same_entries(a.bias, b.bias);
    }
};

/// (layer, index) address of a hidden neuron, both zero-based.
struct NeuronId {
    int layer = 0;
    int index = 0;

    friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

/// Feedforward ReLU network with scalar output b(x) = omega^T z_L + psi.
class ReluNetwork {
public:
    ReluNetwork() = default;

    ReluNetwork(int input_dim, std::vector<DenseLayer> layers, Vector output_weights, double output_bias)
        : input_dim_(input_dim),
          layers_(std::move(layers)),
          output_weights_(std::move(output_weights)),
          output_bias_(output_bias)
    {
        validate();
    }

    int input_dim() const { return input_dim_; }
    int num_layers() const { return static_cast<int>(layers_.size()); }
    const DenseLayer& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    int layer_width(int i) const { return static_cast<int>(layer(i).bias.size()); }
    const Vector& output_weights() const { return output_weights_; }
    double output_bias() const { return output_bias_; }

    int total_neurons() const
    {
        int total = 0;
        for (const auto& l : layers_) {
            total += static_cast<int>(l.bias.size());
        }
        return total;
    }

    /// Pre-activation vectors of every hidden layer at x.
    std::vector<Vector> preactivations(const Vector& x) const
    {
        require_size(x, input_dim_, "ReluNetwork::preactivations");
        std::vector<Vector> pre;
        pre.reserve(layers_.size());
        Vector z = x;
        for (const auto& l : layers_) {
            Vector p = l.weights.transpose() * z + l.bias;
            z = p.cwiseMax(0.0);
            pre.push_back(std::move(p));
        }
        return pre;
    }

    double evaluate(const Vector& x) const
    {
        require_size(x, input_dim_, "ReluNetwork::evaluate");
        Vector z = x;
        for (const auto& l : layers_) {
            z = (l.weights.transpose() * z + l.bias).cwiseMax(0.0);
        }
        return output_weights_.dot(z) + output_bias_;
    }

    friend bool operator==(const ReluNetwork& a, const ReluNetwork& b)
    {
        return a.input_dim_ == b.input_dim_ && a.layers_ == b.layers_ &&
               same_entries(a.output_weights_, b.output_weights_) && a.output_bias_ == b.output_bias_;
    }

private:
    void validate() const
    {
        if (input_dim_ <= 0) {
            throw DimensionError("ReluNetwork: input_dim must be positive");
        }
        if (layers_.empty()) {
            throw DimensionError("ReluNetwork: at least one hidden layer is required");
        }
        Eigen::Index fan_in = input_dim_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& l = layers_[i];
            const std::string where = "ReluNetwork: layer " + std::to_string(i + 1);
            if (l.weights.rows() != fan_in) {
                throw DimensionError(where + " weights have " + std::to_string(l.weights.rows()) +
                                     " rows, expected " + std::to_string(fan_in));
            }
            if (l.weights.cols() != l.bias.size() || l.bias.size() == 0) {
                throw DimensionError(where + " weight columns and bias length disagree");
            }
            if (!all_finite(l.weights) || !all_finite(l.bias)) {
                throw FormatError(where + " has non-finite entries");
            }
            fan_in = l.bias.size();
        }
        if (output_weights_.size() != fan_in) {
            throw DimensionError("ReluNetwork: output weights length " + std::to_string(output_weights_.size()) +
                                 " does not match last layer width " + std::to_string(fan_in));
        }
        if (!all_finite(output_weights_) || !std::isfinite(output_bias_)) {
            throw FormatError("ReluNetwork: output head has non-finite entries");
        }
    }

    int input_dim_ = 0;
    std::vector<DenseLayer> layers_;
    Vector output_weights_;
    double output_bias_ = 0.0;
};

} // namespace ncbf
