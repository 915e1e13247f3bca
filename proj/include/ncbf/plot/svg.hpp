#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ncbf/controller/simulate.hpp"
#include "ncbf/dynamics/problem.hpp"
#include "ncbf/network/relu_network.hpp"

namespace ncbf {

/// A 2-D window into the state space: two free axes, every other state
/// fixed at `base`.
struct PlotView {
    int axis_x = 0;
    int axis_y = 1;
    Vector base;
    double x_lo = 0.0, x_hi = 1.0;
    double y_lo = 0.0, y_hi = 1.0;

    Vector point(double px, double py) const
    {
        Vector x = base;
        x[axis_x] = px;
        x[axis_y] = py;
        return x;
    }
};

/// Parses "name=value" or "index=value" (1-based) into (axis, value).
inline std::pair<int, double> parse_slice(const std::string& text, const SafetyProblem& problem)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw PreconditionError("slice '" + text + "': expected dim=value");
    }
    const std::string dim = text.substr(0, eq);
    int axis = -1;
    for (int k = 0; k < problem.n; ++k) {
        if (problem.state_name(k) == dim || std::to_string(k + 1) == dim) {
            axis = k;
        }
    }
    if (axis < 0) {
        throw PreconditionError("slice '" + text + "': unknown state '" + dim + "'");
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text.substr(eq + 1), &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() - eq - 1 || !std::isfinite(value)) {
        throw PreconditionError("slice '" + text + "': bad value");
    }
    return {axis, value};
}

/// The view spanned by the states not fixed by `slices`. Needs exactly two
/// free states.
inline PlotView make_view(const SafetyProblem& problem, const std::map<int, double>& slices)
{
    if (problem.n - static_cast<int>(slices.size()) != 2) {
        throw PreconditionError("plotting supports n=2 and 2-D slices only (fix all but two states with --slice dim=val)");
    }
    PlotView v;
    v.base = problem.state_box.center();
    std::vector<int> free;
    for (int k = 0; k < problem.n; ++k) {
        const auto it = slices.find(k);
        if (it == slices.end()) {
            free.push_back(k);
        } else {
            v.base[k] = it->second;
        }
    }
    v.axis_x = free[0];
    v.axis_y = free[1];
    v.x_lo = problem.state_box.lo[v.axis_x];
    v.x_hi = problem.state_box.hi[v.axis_x];
    v.y_lo = problem.state_box.lo[v.axis_y];
    v.y_hi = problem.state_box.hi[v.axis_y];
    return v;
}

struct Segment {
    double x0, y0, x1, y1;
};

/// Level-set segments of `field` over a grid x grid lattice of cells.
/// Saddle cells are split by the sign of the cell-centre average.
inline std::vector<Segment> marching_squares(const std::function<double(double, double)>& field, double x_lo,
                                             double x_hi, double y_lo, double y_hi, int grid, double level = 0.0)
{
    if (grid < 1) {
        throw PreconditionError("marching_squares: grid must be positive");
    }
    const double dx = (x_hi - x_lo) / grid;
    const double dy = (y_hi - y_lo) / grid;
    std::vector<double> v(static_cast<std::size_t>((grid + 1) * (grid + 1)));
    auto at = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(j * (grid + 1) + i)]; };
    for (int j = 0; j <= grid; ++j) {
        for (int i = 0; i <= grid; ++i) {
            at(i, j) = field(x_lo + i * dx, y_lo + j * dy) - level;
        }
    }
    std::vector<Segment> out;
    for (int j = 0; j < grid; ++j) {
        for (int i = 0; i < grid; ++i) {
            // Corners counter-clockwise from bottom-left.
            const double c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
            const double px[4] = {x_lo + i * dx, x_lo + (i + 1) * dx, x_lo + (i + 1) * dx, x_lo + i * dx};
            const double py[4] = {y_lo + j * dy, y_lo + j * dy, y_lo + (j + 1) * dy, y_lo + (j + 1) * dy};
            int mask = 0;
            for (int k = 0; k < 4; ++k) {
                mask |= (c[k] >= 0.0 ? 1 : 0) << k;
            }
            if (mask == 0 || mask == 15) {
                continue;
            }
            auto edge = [&](int e, double& ex, double& ey) {
                const int a = e;
                const int b = (e + 1) % 4;
                const double t = c[a] / (c[a] - c[b]);
                ex = px[a] + t * (px[b] - px[a]);
                ey = py[a] + t * (py[b] - py[a]);
            };
            std::vector<int> crossed;
            for (int e = 0; e < 4; ++e) {
                if ((c[e] >= 0.0) != (c[(e + 1) % 4] >= 0.0)) {
                    crossed.push_back(e);
                }
            }
            auto emit = [&](int e0, int e1) {
                Segment s{};
                edge(e0, s.x0, s.y0);
                edge(e1, s.x1, s.y1);
                out.push_back(s);
            };
            if (crossed.size() == 2) {
                emit(crossed[0], crossed[1]);
            } else {
                // Saddle: pair edges around the corners that agree with the centre.
                const bool centre_up = (c[0] + c[1] + c[2] + c[3]) >= 0.0;
                if ((c[0] >= 0.0) == centre_up) {
                    emit(0, 1);
                    emit(2, 3);
                } else {
                    emit(3, 0);
                    emit(1, 2);
                }
            }
        }
    }
    return out;
}

struct PlotOptions {
    int grid = 200;          // contour resolution per axis
    int shade_grid = 80;     // shading resolution per axis
    bool level_bands = false; // also draw b = +-0.05
    int width = 480;
    int height = 480;
};

namespace detail {

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(v) < 5e-4 ? 0.0 : v);
    return buf;
}

struct Canvas {
    const PlotView& view;
    const PlotOptions& opt;
    double margin = 30.0;

    double sx(double x) const { return margin + (x - view.x_lo) / (view.x_hi - view.x_lo) * (opt.width - 2 * margin); }
    double sy(double y) const { return opt.height - margin - (y - view.y_lo) / (view.y_hi - view.y_lo) * (opt.height - 2 * margin); }
};

inline void path_of(std::ostringstream& os, const Canvas& cv, const std::vector<Segment>& segs, const char* stroke,
                    const char* extra)
{
    if (segs.empty()) {
        return;
    }
    os << "<path fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"" << extra << " d=\"";
    for (const auto& s : segs) {
        os << "M" << fmt(cv.sx(s.x0)) << " " << fmt(cv.sy(s.y0)) << "L" << fmt(cv.sx(s.x1)) << " " << fmt(cv.sy(s.y1));
    }
    os << "\"/>\n";
}

} // namespace detail

/// SVG of the zero level set of b over a view: light green where b >= 0,
/// light red where h < 0, the boundary in blue, trajectories in black.
inline std::string boundary_svg(const ReluNetwork& net, const SafetyProblem& problem, const PlotView& view,
                                const PlotOptions& opt = {}, const std::vector<Trajectory>& trajectories = {})
{
    if (net.input_dim() != problem.n || view.base.size() != problem.n) {
        throw DimensionError("boundary_svg: dimension mismatch");
    }
    const detail::Canvas cv{view, opt};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
       << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Shading, merged into horizontal runs per row.
    const int sg = opt.shade_grid;
    const double dx = (view.x_hi - view.x_lo) / sg;
    const double dy = (view.y_hi - view.y_lo) / sg;
    auto h_at = [&](const Vector& x) {
        try {
            return eval_h(problem, x);
        } catch (const DomainError&) {
            return 0.0;
        }
    };
    for (int layer = 0; layer < 2; ++layer) {
        const char* fill = layer == 0 ? "#d8f0d8" : "#f4c7c7";
        for (int j = 0; j < sg; ++j) {
            int run = -1;
            for (int i = 0; i <= sg; ++i) {
                bool on = false;
                if (i < sg) {
                    const Vector x = view.point(view.x_lo + (i + 0.5) * dx, view.y_lo + (j + 0.5) * dy);
                    on = layer == 0 ? net.evaluate(x) >= 0.0 : h_at(x) < 0.0;
                }
                if (on && run < 0) {
                    run = i;
                } else if (!on && run >= 0) {
                    const double x0 = cv.sx(view.x_lo + run * dx);
                    const double x1 = cv.sx(view.x_lo + i * dx);
                    const double y1 = cv.sy(view.y_lo + j * dy);
                    const double y0 = cv.sy(view.y_lo + (j + 1) * dy);
                    os << "<rect x=\"" << detail::fmt(x0) << "\" y=\"" << detail::fmt(y0) << "\" width=\""
                       << detail::fmt(x1 - x0) << "\" height=\"" << detail::fmt(y1 - y0) << "\" fill=\"" << fill
                       << "\"" << (layer == 1 ? " fill-opacity=\"0.7\"" : "") << "/>\n";
                    run = -1;
                }
            }
        }
    }

    auto b_field = [&](double px, double py) { return net.evaluate(view.point(px, py)); };
    auto h_field = [&](double px, double py) { return h_at(view.point(px, py)); };
    detail::path_of(os, cv, marching_squares(h_field, view.x_lo, view.x_hi, view.y_lo, view.y_hi, opt.grid), "#c03030",
                    "");
    if (opt.level_bands) {
        for (double lv : {-0.05, 0.05}) {
            detail::path_of(os, cv, marching_squares(b_field, view.x_lo, view.x_hi, view.y_lo, view.y_hi, opt.grid, lv),
                            "#6080d0", " stroke-dasharray=\"4 3\"");
        }
    }
    detail::path_of(os, cv, marching_squares(b_field, view.x_lo, view.x_hi, view.y_lo, view.y_hi, opt.grid), "#1f3fbf",
                    "");

    for (const auto& tr : trajectories) {
        if (tr.states.empty()) {
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            os << (i ? " " : "") << detail::fmt(cv.sx(tr.states[i][view.axis_x])) << ","
               << detail::fmt(cv.sy(tr.states[i][view.axis_y]));
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            if (tr.infeasible[i]) {
                os << "<circle cx=\"" << detail::fmt(cv.sx(tr.states[i][view.axis_x])) << "\" cy=\""
                   << detail::fmt(cv.sy(tr.states[i][view.axis_y])) << "\" r=\"2.5\" fill=\"#e07000\"/>\n";
            }
        }
    }

    os << "<rect x=\"" << detail::fmt(cv.margin) << "\" y=\"" << detail::fmt(cv.margin) << "\" width=\""
       << detail::fmt(opt.width - 2 * cv.margin) << "\" height=\"" << detail::fmt(opt.height - 2 * cv.margin)
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << opt.width / 2 << "\" y=\"" << opt.height - 8 << "\" font-size=\"12\" text-anchor=\"middle\">"
       << problem.state_name(view.axis_x) << "</text>\n";
    os << "<text x=\"10\" y=\"" << opt.height / 2 << "\" font-size=\"12\">" << problem.state_name(view.axis_y)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace ncbf
