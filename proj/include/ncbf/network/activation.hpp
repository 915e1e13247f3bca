#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/network/relu_network.hpp"

namespace ncbf {

/// Per-layer sets of activated neurons. Stored as one flag per neuron, so
/// equality and ordering are structural.
class ActivationPattern {
public:
    ActivationPattern() = default;

    /// All-inactive pattern shaped like `net`.
    explicit ActivationPattern(const ReluNetwork& net)
    {
        flags_.resize(static_cast<std::size_t>(net.num_layers()));
        for (int i = 0; i < net.num_layers(); ++i) {
            flags_[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(net.layer_width(i)), false);
        }
    }

    /// Builds a pattern from per-layer index lists (zero-based).
    static ActivationPattern from_indices(const ReluNetwork& net, const std::vector<std::vector<int>>& per_layer)
    {
        if (static_cast<int>(per_layer.size()) != net.num_layers()) {
            throw DimensionError("ActivationPattern: layer count mismatch");
        }
        ActivationPattern p(net);
        for (std::size_t i = 0; i < per_layer.size(); ++i) {
            for (int j : per_layer[i]) {
                if (j < 0 || j >= net.layer_width(static_cast<int>(i))) {
                    throw DimensionError("ActivationPattern: neuron index out of range");
                }
                p.flags_[i][static_cast<std::size_t>(j)] = true;
            }
        }
        return p;
    }

    /// Inverse of to_string(): layers separated by '|', one '0'/'1' per neuron.
    static ActivationPattern parse(const std::string& text)
    {
        ActivationPattern p;
        p.flags_.emplace_back();
        for (char c : text) {
            if (c == '|') {
                p.flags_.emplace_back();
            } else if (c == '0' || c == '1') {
                p.flags_.back().push_back(c == '1');
            } else {
                throw FormatError("ActivationPattern: unexpected character in '" + text + "'");
            }
        }
        return p;
    }

    int num_layers() const { return static_cast<int>(flags_.size()); }
    int layer_width(int layer) const { return static_cast<int>(flags_.at(static_cast<std::size_t>(layer)).size()); }

    bool active(int layer, int index) const
    {
        return flags_.at(static_cast<std::size_t>(layer)).at(static_cast<std::size_t>(index));
    }
    bool active(NeuronId id) const { return active(id.layer, id.index); }

    void set(int layer, int index, bool on)
    {
        flags_.at(static_cast<std::size_t>(layer)).at(static_cast<std::size_t>(index)) = on;
    }
    void set(NeuronId id, bool on) { set(id.layer, id.index, on); }

    /// Sorted active indices of one layer.
    std::vector<int> indices(int layer) const
    {
        std::vector<int> out;
        const auto& f = flags_.at(static_cast<std::size_t>(layer));
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (f[j]) {
                out.push_back(static_cast<int>(j));
            }
        }
        return out;
    }

    bool matches_shape(const ReluNetwork& net) const
    {
        if (num_layers() != net.num_layers()) {
            return false;
        }
        for (int i = 0; i < net.num_layers(); ++i) {
            if (layer_width(i) != net.layer_width(i)) {
                return false;
            }
        }
        return true;
    }

    std::string to_string() const
    {
        std::string s;
        for (std::size_t i = 0; i < flags_.size(); ++i) {
            if (i > 0) {
                s.push_back('|');
            }
            for (bool b : flags_[i]) {
                s.push_back(b ? '1' : '0');
            }
        }
        return s;
    }

    friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
    friend bool operator<(const ActivationPattern& a, const ActivationPattern& b) { return a.flags_ < b.flags_; }

private:
    std::vector<std::vector<bool>> flags_;
};

/// Sorted, deduplicated set of neurons with zero pre-activation.
using UnstableSet = std::vector<NeuronId>;

struct PointActivation {
    ActivationPattern pattern; // unstable neurons counted active
    UnstableSet unstable;
};

inline PointActivation activation_pattern(const ReluNetwork& net, const Vector& x, double zero_tol = 1e-9)
{
    const auto pre = net.preactivations(x);
    PointActivation out{ActivationPattern(net), {}};
    for (int i = 0; i < net.num_layers(); ++i) {
        const Vector& p = pre[static_cast<std::size_t>(i)];
        for (int j = 0; j < p.size(); ++j) {
            if (std::abs(p[j]) <= zero_tol) {
                out.unstable.push_back({i, j});
                out.pattern.set(i, j, true);
            } else {
                out.pattern.set(i, j, p[j] > 0.0);
            }
        }
    }
    return out;
}

/// Every pattern reachable from `base` by toggling a subset of `toggles`,
/// in binary-counting order over the toggle list.
inline std::vector<ActivationPattern> toggle_closure(const ActivationPattern& base, const UnstableSet& toggles)
{
    constexpr std::size_t max_toggles = 24;
    if (toggles.size() > max_toggles) {
        throw PreconditionError("toggle_closure: " + std::to_string(toggles.size()) +
                                " unstable neurons exceed the enumeration cap");
    }
    std::vector<ActivationPattern> out;
    const std::uint64_t count = std::uint64_t{1} << toggles.size();
    out.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        ActivationPattern p = base;
        for (std::size_t k = 0; k < toggles.size(); ++k) {
            p.set(toggles[k], ((mask >> k) & 1U) != 0U);
        }
        out.push_back(std::move(p));
    }
    return out;
}

/// S(x): all patterns whose closed region contains x.
inline std::vector<ActivationPattern> enumerate_patterns_at(const ReluNetwork& net, const Vector& x,
                                                            double zero_tol = 1e-9)
{
    const auto point = activation_pattern(net, x, zero_tol);
    return toggle_closure(point.pattern, point.unstable);
}

} // namespace ncbf
