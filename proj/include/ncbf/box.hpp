#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "ncbf/interval.hpp"
#include "ncbf/linalg.hpp"

namespace ncbf {

/// Axis-aligned box [lo, hi] in R^n.
struct HyperCube {
    Vector lo;
    Vector hi;

    HyperCube() = default;
    HyperCube(Vector l, Vector h) : lo(std::move(l)), hi(std::move(h))
    {
        if (lo.size() != hi.size()) {
            throw DimensionError("HyperCube: lo and hi lengths differ");
        }
        for (Eigen::Index k = 0; k < lo.size(); ++k) {
            if (!(lo[k] <= hi[k])) {
                throw PreconditionError("HyperCube: lo > hi on axis " + std::to_string(k));
            }
        }
    }

    static HyperCube point(const Vector& x) { return {x, x}; }

    Eigen::Index dim() const { return lo.size(); }
    Vector center() const { return 0.5 * (lo + hi); }
    Vector radius() const { return 0.5 * (hi - lo); }
    Interval axis(Eigen::Index k) const { return {lo[k], hi[k]}; }

    std::vector<Interval> intervals() const
    {
        std::vector<Interval> out(static_cast<std::size_t>(dim()));
        for (Eigen::Index k = 0; k < dim(); ++k) {
            out[static_cast<std::size_t>(k)] = axis(k);
        }
        return out;
    }

    bool contains(const Vector& x, double tol = 0.0) const
    {
        for (Eigen::Index k = 0; k < dim(); ++k) {
            if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) {
                return false;
            }
        }
        return true;
    }

    bool contains(const HyperCube& other) const
    {
        return (other.lo.array() >= lo.array()).all() && (other.hi.array() <= hi.array()).all();
    }

    /// Halves along `axis`; the two children share the midpoint face.
    std::pair<HyperCube, HyperCube> bisect(Eigen::Index axis_index) const
    {
        const double m = 0.5 * (lo[axis_index] + hi[axis_index]);
        HyperCube left = *this;
        HyperCube right = *this;
        left.hi[axis_index] = m;
        right.lo[axis_index] = m;
        return {left, right};
    }

    Eigen::Index widest_axis() const
    {
        Eigen::Index best = 0;
        (hi - lo).maxCoeff(&best);
        return best;
    }

    friend bool operator==(const HyperCube& a, const HyperCube& b) { return same_entries(a.lo, b.lo) && same_entries(a.hi, b.hi); }
};

} // namespace ncbf
