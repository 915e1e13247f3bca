#pragma once

// Brute-force references for the boundary atlas. They share the LP solver
// with the library but none of its enumeration logic.

#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "ncbf/box.hpp"
#include "ncbf/feasolver/lp.hpp"
#include "ncbf/network/affine_region.hpp"

namespace ncbf::oracle {

/// Largest t such that every membership row holds with slack t (and b = 0
/// when `on_boundary`), with x in the box. Negative when infeasible.
inline double region_margin(const ReluNetwork& net, const ActivationPattern& p, const HyperCube& box, bool on_boundary)
{
    const AffineRegion region = affine_region(net, p);
    const auto n = static_cast<int>(box.dim());
    LinearProgram lp(n + 1);
    for (int k = 0; k < n; ++k) {
        lp.set_bounds(k, box.lo[k], box.hi[k]);
    }
    lp.set_bounds(n, 0.0, 1.0);
    for (const auto& c : region.membership()) {
        Vector a(n + 1);
        a.head(n) = c.map.normal;
        if (c.sense == SignSense::NonNegative) {
            a[n] = -1.0;
            lp.add_row(a, RowSense::Ge, -c.map.offset);
        } else {
            a[n] = 1.0;
            lp.add_row(a, RowSense::Le, -c.map.offset);
        }
    }
    if (on_boundary) {
        Vector a(n + 1);
        a.head(n) = region.output_gradient();
        a[n] = 0.0;
        lp.add_row(a, RowSense::Eq, -region.output_offset());
    }
    Vector c = Vector::Zero(n + 1);
    c[n] = -1.0;
    lp.set_objective(c);
    const auto sol = solve_lp(lp);
    return sol.status == LpStatus::Optimal ? sol.x[n] : -1.0;
}

struct RegionCensus {
    std::set<ActivationPattern> regions;  // full-dimensional regions meeting the box
    std::set<ActivationPattern> boundary; // those whose face on {b = 0} is full-dimensional
};

/// Walks the region adjacency graph from the region at the box centre,
/// flipping one or two neurons at a time (two covers coincident hyperplanes).
inline RegionCensus region_walk(const ReluNetwork& net, const HyperCube& box, double margin = 1e-9)
{
    std::vector<NeuronId> all;
    for (int i = 0; i < net.num_layers(); ++i) {
        for (int j = 0; j < net.layer_width(i); ++j) {
            all.push_back({i, j});
        }
    }
    RegionCensus out;
    std::set<ActivationPattern> tried;
    std::deque<ActivationPattern> queue;
    auto offer = [&](const ActivationPattern& p) {
        if (!tried.insert(p).second) {
            return;
        }
        if (region_margin(net, p, box, false) > margin) {
            out.regions.insert(p);
            queue.push_back(p);
        }
    };
    // Start from an interior point of some region near the centre.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> jitter(-1e-3, 1e-3);
    Vector x = box.center();
    for (int k = 0; k < x.size(); ++k) {
        x[k] += jitter(rng) * (box.hi[k] - box.lo[k]);
    }
    ActivationPattern start(net);
    const auto pre = net.preactivations(x);
    for (int i = 0; i < net.num_layers(); ++i) {
        for (int j = 0; j < net.layer_width(i); ++j) {
            start.set(i, j, pre[static_cast<std::size_t>(i)][j] > 0.0);
        }
    }
    offer(start);
    while (!queue.empty()) {
        const ActivationPattern p = queue.front();
        queue.pop_front();
        for (std::size_t a = 0; a < all.size(); ++a) {
            ActivationPattern q = p;
            q.set(all[a], !p.active(all[a]));
            offer(q);
            for (std::size_t b = a + 1; b < all.size(); ++b) {
                ActivationPattern r = q;
                r.set(all[b], !p.active(all[b]));
                offer(r);
            }
        }
    }
    for (const auto& p : out.regions) {
        if (region_margin(net, p, box, true) > margin) {
            out.boundary.insert(p);
        }
    }
    return out;
}

/// Patterns seen at zero crossings of b along axis-parallel lines through a
/// jittered grid. Points where some neuron is within `neuron_gap` of zero
/// are skipped, so every recorded pattern is that of a face interior point.
inline std::set<ActivationPattern> sampled_boundary_patterns(const ReluNetwork& net, const HyperCube& box,
                                                             int lines_per_axis, int samples_per_line,
                                                             std::uint64_t seed = 99, double neuron_gap = 1e-7)
{
    std::set<ActivationPattern> out;
    const auto n = static_cast<int>(box.dim());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int total_lines = 1;
    for (int k = 0; k < n - 1; ++k) {
        total_lines *= lines_per_axis;
    }
    for (int axis = 0; axis < n; ++axis) {
        for (int line = 0; line < total_lines; ++line) {
            Vector base = box.lo;
            int rest = line;
            for (int k = 0; k < n; ++k) {
                if (k == axis) {
                    continue;
                }
                const int slot = rest % lines_per_axis;
                rest /= lines_per_axis;
                const double frac = (slot + unit(rng)) / lines_per_axis;
                base[k] = box.lo[k] + frac * (box.hi[k] - box.lo[k]);
            }
            auto at = [&](double s) {
                Vector x = base;
                x[axis] = box.lo[axis] + s * (box.hi[axis] - box.lo[axis]);
                return x;
            };
            double prev_s = 0.0;
            double prev_b = net.evaluate(at(0.0));
            for (int i = 1; i <= samples_per_line; ++i) {
                const double s = static_cast<double>(i) / samples_per_line;
                const double bs = net.evaluate(at(s));
                if ((prev_b < 0.0) != (bs < 0.0)) {
                    double lo = prev_s;
                    double hi = s;
                    const bool lo_neg = prev_b < 0.0;
                    for (int it = 0; it < 80; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        ((net.evaluate(at(mid)) < 0.0) == lo_neg ? lo : hi) = mid;
                    }
                    const Vector x = at(0.5 * (lo + hi));
                    const auto pre = net.preactivations(x);
                    ActivationPattern p(net);
                    bool clear = true;
                    for (int li = 0; li < net.num_layers(); ++li) {
                        for (int j = 0; j < net.layer_width(li); ++j) {
                            const double v = pre[static_cast<std::size_t>(li)][j];
                            clear = clear && std::abs(v) > neuron_gap;
                            p.set(li, j, v > 0.0);
                        }
                    }
                    if (clear) {
                        out.insert(p);
                    }
                }
                prev_s = s;
                prev_b = bs;
            }
        }
    }
    return out;
}

} // namespace ncbf::oracle
