#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncbf/boundprop/cells.hpp"
#include "ncbf/feasolver/lp.hpp"
#include "ncbf/network/affine_region.hpp"
#include "ncbf/parallel.hpp"

namespace ncbf {

struct AtlasConfig {
    int grid_per_axis = 16;
    unsigned threads = 1;
    double zero_tol = 1e-9;     // neuron interval reaching within this of 0 may vanish in the cell
    double face_margin = 1e-9;  // faces thinner than this (in pre-activation units) are dropped
    int max_unstable = 22;      // larger sets trigger cell bisection
    int max_split_depth = 12;
    int max_pinned = 0;         // 0: no cap on intersection order
};

/// A boundary pattern: its closed region meets {b = 0} in a set of full
/// dimension within the zero level set.
struct BoundaryPattern {
    ActivationPattern pattern;
    Vector witness; // point of the face
    double margin = 0.0;
};

/// Points of {b = 0} where the neurons in `pinned` vanish and every other
/// neuron keeps the sign recorded in `base`. Members are all patterns that
/// agree with base off the pinned set.
struct Intersection {
    std::string key; // one char per neuron: '1', '0', or '*' for pinned; layers split by '|'
    UnstableSet pinned;
    ActivationPattern base; // pinned neurons stored as inactive
    std::vector<ActivationPattern> members;
    Vector witness;
    double margin = 0.0;
};

struct Atlas {
    std::vector<GridCell> cells;
    std::vector<BoundaryPattern> patterns;     // sorted by pattern
    std::vector<Intersection> intersections;   // sorted by key
    std::size_t lp_solves = 0;
    bool complete = true;
    std::vector<std::string> notes;
};

namespace detail {

enum class FaceSign : char { Inactive = '0', Active = '1', Pinned = '*' };

struct FaceRow {
    AffineMap map;
    FaceSign sign;
};

struct FaceSolution {
    Vector x;
    double margin = 0.0;
};

/// max t s.t. active rows >= t, inactive rows <= -t, pinned rows = 0,
/// optional level row = 0, x in box, 0 <= t <= 1.
inline std::optional<FaceSolution> max_margin(const std::vector<FaceRow>& rows, const AffineMap* level,
                                              const HyperCube& box)
{
    const auto n = static_cast<int>(box.dim());
    LinearProgram lp(n + 1);
    for (int k = 0; k < n; ++k) {
        lp.set_bounds(k, box.lo[k], box.hi[k]);
    }
    lp.set_bounds(n, 0.0, 1.0);
    auto widen = [n](const Vector& normal, double t_coeff) {
        Vector a(n + 1);
        a.head(n) = normal;
        a[n] = t_coeff;
        return a;
    };
    for (const auto& r : rows) {
        switch (r.sign) {
        case FaceSign::Active:
            lp.add_row(widen(r.map.normal, -1.0), RowSense::Ge, -r.map.offset);
            break;
        case FaceSign::Inactive:
            lp.add_row(widen(r.map.normal, 1.0), RowSense::Le, -r.map.offset);
            break;
        case FaceSign::Pinned:
            lp.add_row(widen(r.map.normal, 0.0), RowSense::Eq, -r.map.offset);
            break;
        }
    }
    if (level) {
        lp.add_row(widen(level->normal, 0.0), RowSense::Eq, -level->offset);
    }
    Vector c = Vector::Zero(n + 1);
    c[n] = -1.0;
    lp.set_objective(c);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) {
        return std::nullopt;
    }
    return FaceSolution{sol.x.head(n), sol.x[n]};
}

inline std::string ternary_key(const ReluNetwork& net, const ActivationPattern& base, const UnstableSet& pinned)
{
    std::string key;
    for (int i = 0; i < net.num_layers(); ++i) {
        if (i > 0) {
            key.push_back('|');
        }
        for (int j = 0; j < net.layer_width(i); ++j) {
            const NeuronId id{i, j};
            if (std::binary_search(pinned.begin(), pinned.end(), id)) {
                key.push_back('*');
            } else {
                key.push_back(base.active(id) ? '1' : '0');
            }
        }
    }
    return key;
}

struct CellFaces {
    std::vector<BoundaryPattern> patterns;
    std::vector<Intersection> intersections;
    std::size_t lp_solves = 0;
    bool complete = true;
    std::vector<std::string> notes;
};

/// Depth-first ternary search over the neurons that may vanish in the cell.
class CellSearch {
public:
    CellSearch(const ReluNetwork& net, const HyperCube& box, const NetworkBounds& bounds, const AtlasConfig& cfg,
               CellFaces& out)
        : net_(net), box_(box), cfg_(cfg), out_(out), base_(net)
    {
        unstable_ = bounds.touching_zero(cfg.zero_tol);
        for (std::size_t i = 0; i < bounds.pre.size(); ++i) {
            for (std::size_t j = 0; j < bounds.pre[i].size(); ++j) {
                base_.set(static_cast<int>(i), static_cast<int>(j), bounds.pre[i][j].lo > 0.0);
            }
        }
        signs_.assign(unstable_.size(), FaceSign::Inactive);
    }

    std::size_t unstable_count() const { return unstable_.size(); }

    void run() { descend(0, 0); }

private:
    ActivationPattern assigned_pattern(std::size_t depth) const
    {
        ActivationPattern p = base_;
        for (std::size_t k = 0; k < depth; ++k) {
            p.set(unstable_[k], signs_[k] == FaceSign::Active);
        }
        return p;
    }

    void descend(std::size_t depth, int pinned)
    {
        if (depth == unstable_.size()) {
            leaf(pinned);
            return;
        }
        const NeuronId id = unstable_[depth];
        // Maps of this neuron depend only on earlier layers, which are fixed.
        const ActivationPattern partial = assigned_pattern(depth);
        const AffineMap map = affine_region(net_, partial).neuron_map(id);
        for (FaceSign s : {FaceSign::Active, FaceSign::Inactive, FaceSign::Pinned}) {
            if (s == FaceSign::Pinned && cfg_.max_pinned > 0 && pinned >= cfg_.max_pinned) {
                continue;
            }
            signs_[depth] = s;
            rows_.push_back({map, s});
            ++out_.lp_solves;
            const auto face = max_margin(rows_, nullptr, box_);
            if (face && face->margin > cfg_.face_margin) {
                descend(depth + 1, pinned + (s == FaceSign::Pinned ? 1 : 0));
            }
            rows_.pop_back();
        }
    }

    void leaf(int pinned)
    {
        const ActivationPattern p = assigned_pattern(unstable_.size());
        const AffineRegion region = affine_region(net_, p);
        ++out_.lp_solves;
        const auto face = max_margin(rows_, &region.output_map(), box_);
        if (!face || face->margin <= cfg_.face_margin) {
            return;
        }
        if (pinned == 0) {
            out_.patterns.push_back({p, face->x, face->margin});
            return;
        }
        Intersection t;
        for (std::size_t k = 0; k < unstable_.size(); ++k) {
            if (signs_[k] == FaceSign::Pinned) {
                t.pinned.push_back(unstable_[k]);
            }
        }
        t.base = p;
        t.key = ternary_key(net_, p, t.pinned);
        t.witness = face->x;
        t.margin = face->margin;
        out_.intersections.push_back(std::move(t));
    }

    const ReluNetwork& net_;
    HyperCube box_;
    const AtlasConfig& cfg_;
    CellFaces& out_;
    ActivationPattern base_;
    UnstableSet unstable_;
    std::vector<FaceSign> signs_;
    std::vector<FaceRow> rows_;
};

inline void search_cell(const ReluNetwork& net, const HyperCube& box, const NetworkBounds& bounds,
                        const AtlasConfig& cfg, int depth, CellFaces& out)
{
    CellSearch search(net, box, bounds, cfg, out);
    if (static_cast<int>(search.unstable_count()) <= cfg.max_unstable) {
        search.run();
        return;
    }
    if (depth >= cfg.max_split_depth) {
        out.complete = false;
        out.notes.push_back("cell split limit reached with " + std::to_string(search.unstable_count()) +
                            " vanishing neurons");
        return;
    }
    const auto [left, right] = box.bisect(box.widest_axis());
    for (const HyperCube& half : {left, right}) {
        const auto b = linear_relaxation_bounds(net, half, cfg.zero_tol);
        if (b.output.straddles_zero()) {
            search_cell(net, half, b, cfg, depth + 1, out);
        }
    }
}

} // namespace detail

/// All 2^|unstable| sign completions of the cell's stable signs.
inline std::vector<ActivationPattern> candidate_patterns(const ReluNetwork& net, const NetworkBounds& bounds,
                                                         const UnstableSet& unstable)
{
    ActivationPattern base(net);
    for (std::size_t i = 0; i < bounds.pre.size(); ++i) {
        for (std::size_t j = 0; j < bounds.pre[i].size(); ++j) {
            base.set(static_cast<int>(i), static_cast<int>(j), bounds.pre[i][j].lo > 0.0);
        }
    }
    return toggle_closure(base, unstable);
}

/// Patterns whose closed region meets {b = 0} inside the cell, each with a
/// witness point.
inline std::vector<BoundaryPattern> prune_by_lp(const ReluNetwork& net, const std::vector<ActivationPattern>& patterns,
                                                const HyperCube& cell)
{
    std::vector<BoundaryPattern> out;
    for (const auto& p : patterns) {
        const AffineRegion region = affine_region(net, p);
        std::vector<detail::FaceRow> rows;
        for (const auto& c : region.membership()) {
            rows.push_back({c.map, c.sense == SignSense::NonNegative ? detail::FaceSign::Active
                                                                     : detail::FaceSign::Inactive});
        }
        const auto face = detail::max_margin(rows, &region.output_map(), cell);
        if (face) {
            out.push_back({p, face->x, face->margin});
        }
    }
    return out;
}

/// Groups of the given patterns whose closed regions share boundary points:
/// for each set T of neurons on which the group disagrees, the group agrees
/// elsewhere and {b = 0, T vanishes, other signs strict} meets the cell.
/// Only groups that are not contained in a larger reported group are kept.
inline std::vector<Intersection> find_intersections(const ReluNetwork& net, const std::vector<ActivationPattern>& patterns,
                                                    const HyperCube& cell, double face_margin = 1e-9)
{
    UnstableSet differ;
    for (int i = 0; i < net.num_layers(); ++i) {
        for (int j = 0; j < net.layer_width(i); ++j) {
            for (std::size_t k = 1; k < patterns.size(); ++k) {
                if (patterns[k].active(i, j) != patterns[0].active(i, j)) {
                    differ.push_back({i, j});
                    break;
                }
            }
        }
    }
    if (differ.size() > 16) {
        throw PreconditionError("find_intersections: patterns differ on more than 16 neurons");
    }
    std::vector<Intersection> found;
    for (std::uint32_t mask = 1; mask < (1U << differ.size()); ++mask) {
        UnstableSet pinned;
        for (std::size_t k = 0; k < differ.size(); ++k) {
            if ((mask >> k) & 1U) {
                pinned.push_back(differ[k]);
            }
        }
        std::map<std::string, std::vector<ActivationPattern>> groups;
        for (const auto& p : patterns) {
            ActivationPattern base = p;
            for (const auto& id : pinned) {
                base.set(id, false);
            }
            groups[detail::ternary_key(net, base, pinned)].push_back(p);
        }
        for (auto& [key, group] : groups) {
            if (group.size() < 2) {
                continue;
            }
            bool varies = true;
            for (const auto& id : pinned) {
                bool on = false;
                bool off = false;
                for (const auto& p : group) {
                    (p.active(id) ? on : off) = true;
                }
                varies = varies && on && off;
            }
            if (!varies) {
                continue;
            }
            ActivationPattern base = group.front();
            for (const auto& id : pinned) {
                base.set(id, false);
            }
            const AffineRegion region = affine_region(net, base);
            std::vector<detail::FaceRow> rows;
            for (const auto& c : region.membership()) {
                const bool is_pinned = std::binary_search(pinned.begin(), pinned.end(), c.neuron);
                rows.push_back({c.map, is_pinned ? detail::FaceSign::Pinned
                                                 : (c.sense == SignSense::NonNegative ? detail::FaceSign::Active
                                                                                      : detail::FaceSign::Inactive)});
            }
            const auto face = detail::max_margin(rows, &region.output_map(), cell);
            if (!face || face->margin <= face_margin) {
                continue;
            }
            std::sort(group.begin(), group.end());
            found.push_back({key, pinned, base, group, face->x, face->margin});
        }
    }
    // Keep maximal groups only.
    std::vector<Intersection> out;
    for (std::size_t a = 0; a < found.size(); ++a) {
        bool dominated = false;
        for (std::size_t b = 0; b < found.size() && !dominated; ++b) {
            if (a == b || found[b].members.size() <= found[a].members.size()) {
                continue;
            }
            dominated = std::includes(found[b].members.begin(), found[b].members.end(), found[a].members.begin(),
                                      found[a].members.end());
        }
        if (!dominated) {
            out.push_back(std::move(found[a]));
        }
    }
    std::sort(out.begin(), out.end(), [](const Intersection& x, const Intersection& y) { return x.key < y.key; });
    return out;
}

/// Boundary atlas: boundary cells, boundary patterns and intersections of the
/// zero level set of b over the state box.
inline Atlas build_atlas(const ReluNetwork& net, const HyperCube& state_box, const AtlasConfig& cfg = {})
{
    Atlas atlas;
    atlas.cells = boundary_cells(net, state_box, cfg.grid_per_axis, cfg.threads, cfg.zero_tol);
    std::vector<detail::CellFaces> per_cell(atlas.cells.size());
    parallel_for(atlas.cells.size(), cfg.threads, [&](std::size_t c) {
        detail::search_cell(net, atlas.cells[c].box, atlas.cells[c].bounds, cfg, 0, per_cell[c]);
    });
    std::map<ActivationPattern, BoundaryPattern> patterns;
    std::map<std::string, Intersection> intersections;
    for (auto& faces : per_cell) {
        atlas.lp_solves += faces.lp_solves;
        atlas.complete = atlas.complete && faces.complete;
        for (auto& note : faces.notes) {
            atlas.notes.push_back(std::move(note));
        }
        for (auto& p : faces.patterns) {
            patterns.emplace(p.pattern, std::move(p));
        }
        for (auto& t : faces.intersections) {
            intersections.emplace(t.key, std::move(t));
        }
    }
    for (auto& [key, p] : patterns) {
        atlas.patterns.push_back(std::move(p));
    }
    for (auto& [key, t] : intersections) {
        t.members = toggle_closure(t.base, t.pinned);
        std::sort(t.members.begin(), t.members.end());
        atlas.intersections.push_back(std::move(t));
    }
    return atlas;
}

} // namespace ncbf
