#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ncbf/boundprop/bounds.hpp"
#include "ncbf/parallel.hpp"

namespace ncbf {

/// One cell of the boundary cover together with the bounds that kept it.
struct GridCell {
    HyperCube box;
    std::vector<std::int64_t> index; // per-axis grid coordinate
    NetworkBounds bounds;
};

/// Cells of a uniform grid over `state_box` on which the output enclosure
/// straddles zero. The grid is refined dyadically from the whole box, so the
/// per-axis resolution is grid_per_axis rounded up to a power of two; each
/// child's bounds are intersected with its parent's. Cells are returned in
/// row-major order of their grid index.
inline std::vector<GridCell> boundary_cells(const ReluNetwork& net, const HyperCube& state_box, int grid_per_axis,
                                            unsigned threads = 1, double zero_tol = 1e-9)
{
    if (grid_per_axis < 1) {
        throw PreconditionError("boundary_cells: grid_per_axis must be at least 1");
    }
    if (state_box.dim() != net.input_dim()) {
        throw DimensionError("boundary_cells: box dimension differs from network input");
    }
    const auto n = static_cast<std::size_t>(state_box.dim());
    if (n > 16) {
        throw PreconditionError("boundary_cells: more than 16 state dimensions");
    }
    int levels = 0;
    while ((1 << levels) < grid_per_axis) {
        ++levels;
    }

    std::vector<GridCell> frontier;
    {
        GridCell root{state_box, std::vector<std::int64_t>(n, 0), linear_relaxation_bounds(net, state_box, zero_tol)};
        if (root.bounds.output.straddles_zero()) {
            frontier.push_back(std::move(root));
        }
    }
    const std::size_t fanout = std::size_t{1} << n;
    for (int level = 0; level < levels && !frontier.empty(); ++level) {
        std::vector<std::vector<GridCell>> children(frontier.size());
        parallel_for(frontier.size(), threads, [&](std::size_t c) {
            const GridCell& parent = frontier[c];
            const Vector mid = parent.box.center();
            for (std::size_t mask = 0; mask < fanout; ++mask) {
                GridCell child;
                child.box = parent.box;
                child.index.resize(n);
                for (std::size_t k = 0; k < n; ++k) {
                    const auto axis = static_cast<Eigen::Index>(k);
                    const bool upper = ((mask >> (n - 1 - k)) & 1U) != 0U;
                    if (upper) {
                        child.box.lo[axis] = mid[axis];
                    } else {
                        child.box.hi[axis] = mid[axis];
                    }
                    child.index[k] = 2 * parent.index[k] + (upper ? 1 : 0);
                }
                child.bounds = linear_relaxation_bounds(net, child.box, zero_tol);
                Interval y = intersect(child.bounds.output.interval(), parent.bounds.output.interval());
                child.bounds.output = {y.lo, y.hi};
                for (std::size_t i = 0; i < child.bounds.pre.size(); ++i) {
                    for (std::size_t j = 0; j < child.bounds.pre[i].size(); ++j) {
                        child.bounds.pre[i][j] = intersect(child.bounds.pre[i][j], parent.bounds.pre[i][j]);
                    }
                }
                child.bounds.unstable = detail::strictly_unstable(child.bounds.pre, zero_tol);
                if (child.bounds.output.straddles_zero()) {
                    children[c].push_back(std::move(child));
                }
            }
        });
        std::vector<GridCell> next;
        for (auto& group : children) {
            for (auto& cell : group) {
                next.push_back(std::move(cell));
            }
        }
        frontier = std::move(next);
    }
    std::sort(frontier.begin(), frontier.end(),
              [](const GridCell& a, const GridCell& b) { return a.index < b.index; });
    return frontier;
}

} // namespace ncbf
