// ncbf: verify, enumerate, simulate and plot ReLU barrier certificates.
//
// Exit codes: 0 SAFE (or success), 1 UNSAFE, 2 INCONCLUSIVE, 64 usage,
// 65 bad input data, 74 output error. A missing input file is a usage error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncbf/ncbf.hpp"

namespace {

using namespace ncbf;

enum Exit : int { ExitSafe = 0, ExitUnsafe = 1, ExitInconclusive = 2, ExitUsage = 64, ExitData = 65,
                  ExitIo = 74 };

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

SafetyProblem load_system(const std::string& spec)
{
    if (auto p = builtin_problem(spec)) {
        return *p;
    }
    if (!std::filesystem::exists(spec)) {
        throw CliError(ExitUsage, "system '" + spec + "' is neither a builtin nor an existing file");
    }
    return parse_problem_file(spec);
}

ReluNetwork load_net(const std::string& spec)
{
    if (auto n = builtin_network(spec)) {
        return *n;
    }
    if (!std::filesystem::exists(spec)) {
        throw CliError(ExitUsage, "network '" + spec + "' is neither a builtin nor an existing file");
    }
    return load_network_file(spec);
}

void write_file(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) {
        throw CliError(ExitIo, "cannot write '" + path + "'");
    }
}

std::map<int, double> slices_of(const std::vector<std::string>& specs, const SafetyProblem& problem)
{
    std::map<int, double> out;
    for (const auto& s : specs) {
        const auto [axis, value] = parse_slice(s, problem);
        if (!out.emplace(axis, value).second) {
            throw PreconditionError("slice for '" + problem.state_name(axis) + "' given twice");
        }
    }
    return out;
}

Vector parse_point(const std::string& text, int n)
{
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw PreconditionError("bad coordinate '" + item + "' in '" + text + "'");
        }
        vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != n) {
        throw PreconditionError("point '" + text + "' needs " + std::to_string(n) + " coordinates");
    }
    return Eigen::Map<Vector>(vals.data(), n);
}

struct CommonArgs {
    std::string system;
    std::string net;
    int grid = 16;
    unsigned threads = default_thread_count();
};

void add_common(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--system", a.system, "builtin system name or system file")->required();
    cmd->add_option("--net", a.net, "network JSON file or builtin network name")->required();
    cmd->add_option("--grid", a.grid, "cells per axis for bound propagation")->check(CLI::Range(1, 1 << 20));
    cmd->add_option("--threads", a.threads, "worker threads")->check(CLI::Range(1U, 1024U));
}

int cmd_verify(const CommonArgs& a, const std::string& report_path, double eps, std::size_t max_nodes, bool containment)
{
    const auto problem = load_system(a.system);
    const auto net = load_net(a.net);
    VerifyConfig cfg;
    cfg.atlas.grid_per_axis = a.grid;
    cfg.atlas.threads = a.threads;
    cfg.eps_strict = eps;
    cfg.limits.max_nodes = max_nodes;
    cfg.check_containment = containment;
    const Verdict v = verify(problem, net, cfg);
    const auto report = verification_report(problem, net, cfg, v);
    if (!report_path.empty()) {
        write_file(report_path, report.dump(2) + "\n");
    }
    std::cout << "status " << to_string(v.status) << "\n";
    std::cout << "boundary_patterns " << v.atlas.patterns.size() << "\n";
    std::cout << "intersections " << v.atlas.intersections.size() << "\n";
    std::cout << "checks " << v.checks.size() << "\n";
    std::cout << std::setprecision(3) << "t_enumerate " << v.atlas_seconds << "\nt_verify " << v.check_seconds << "\n";
    if (!v.reason.empty()) {
        std::cout << "reason " << v.reason << "\n";
    }
    if (v.counterexample) {
        const auto& c = *v.counterexample;
        std::cout << std::setprecision(10) << "counterexample " << c.kind << " x = (";
        for (Eigen::Index k = 0; k < c.x.size(); ++k) {
            std::cout << (k ? ", " : "") << c.x[k];
        }
        std::cout << ") b = " << c.b << " h = " << c.h << "\n";
        for (const auto& m : c.members) {
            std::cout << "  pattern " << m.pattern << ": " << m.summary << " (infeasible, margin " << m.margin << ")\n";
        }
    }
    switch (v.status) {
    case Status::Safe:
        return ExitSafe;
    case Status::Unsafe:
        return ExitUnsafe;
    default:
        return ExitInconclusive;
    }
}

int cmd_enumerate(const CommonArgs& a, const std::string& report_path, bool list)
{
    const auto problem = load_system(a.system);
    const auto net = load_net(a.net);
    if (net.input_dim() != problem.n) {
        throw DimensionError("network input dimension differs from the system");
    }
    AtlasConfig cfg;
    cfg.grid_per_axis = a.grid;
    cfg.threads = a.threads;
    const auto t0 = std::chrono::steady_clock::now();
    const Atlas atlas = build_atlas(net, problem.state_box, cfg);
    const double te = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "boundary_patterns " << atlas.patterns.size() << "\n";
    std::cout << "intersections " << atlas.intersections.size() << "\n";
    std::cout << "cells " << atlas.cells.size() << "\n";
    std::cout << "complete " << (atlas.complete ? "yes" : "no") << "\n";
    std::cout << std::setprecision(3) << "t_enumerate " << te << "\n";
    if (list) {
        for (const auto& p : atlas.patterns) {
            std::cout << "pattern " << p.pattern.to_string() << "\n";
        }
        for (const auto& t : atlas.intersections) {
            std::cout << "intersection " << t.key << " members " << t.members.size() << "\n";
        }
    }
    if (!report_path.empty()) {
        nlohmann::json j;
        j["inputs"] = input_fingerprints(problem, net);
        j["grid"] = a.grid;
        j["atlas"] = atlas_json(atlas);
        write_file(report_path, j.dump(2) + "\n");
    }
    return atlas.complete ? ExitSafe : ExitInconclusive;
}

struct SimArgs {
    std::vector<std::string> x0;
    double dt = 1e-2;
    double horizon = 10.0;
    double kappa = 1.0;
    std::string nominal = "zero";
    std::string fallback = "hold";
    std::string csv;
    std::string plot;
    std::vector<std::string> slices;
};

NominalPolicy nominal_from(const std::string& spec, const SafetyProblem& problem)
{
    if (spec == "zero") {
        return zero_nominal(problem.m);
    }
    if (spec == "lqr") {
        return linear_feedback(lqr_gain(problem));
    }
    std::vector<Expr> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        parts.push_back(parse_expression(item, problem));
    }
    if (static_cast<int>(parts.size()) != problem.m) {
        throw PreconditionError("nominal policy needs " + std::to_string(problem.m) + " ';'-separated expressions");
    }
    return expression_nominal(std::move(parts));
}

int cmd_simulate(const CommonArgs& a, const SimArgs& s)
{
    const auto problem = load_system(a.system);
    const auto net = load_net(a.net);
    std::map<int, double> slices;
    std::optional<PlotView> view;
    if (!s.plot.empty()) {
        slices = slices_of(s.slices, problem);
        view = make_view(problem, slices);
    }
    QpPolicy policy(net, problem, nominal_from(s.nominal, problem), s.kappa);
    if (s.fallback == "zero") {
        policy.fallback = Fallback::ZeroInput;
    } else if (s.fallback != "hold") {
        throw PreconditionError("fallback must be 'hold' or 'zero'");
    }
    std::vector<Vector> starts;
    for (const auto& x : s.x0) {
        starts.push_back(parse_point(x, problem.n));
    }
    if (starts.empty()) {
        starts.push_back(problem.initial_box ? problem.initial_box->center() : problem.state_box.center());
    }
    std::vector<Trajectory> runs(starts.size());
    parallel_for(starts.size(), a.threads, [&](std::size_t i) { runs[i] = simulate(policy, starts[i], s.dt, s.horizon); });

    std::ostringstream csv;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs.size() > 1) {
            csv << "# run " << i + 1 << "\n";
        }
        write_trajectory_csv(csv, runs[i], problem);
    }
    if (!s.csv.empty()) {
        write_file(s.csv, csv.str());
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& tr = runs[i];
        std::size_t flagged = 0;
        double first_flag = -1.0;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            if (tr.infeasible[k]) {
                first_flag = flagged++ == 0 ? tr.times[k] : first_flag;
            }
        }
        std::cout << "run " << i + 1 << " samples " << tr.size() << " min_b " << tr.min_b() << " infeasible_steps "
                  << flagged;
        if (flagged > 0) {
            std::cout << " first_infeasible_t " << first_flag;
        }
        std::cout << (tr.left_box ? " left_box" : "") << "\n";
    }
    if (view) {
        write_file(s.plot, boundary_svg(net, problem, *view, PlotOptions{}, runs));
    }
    return ExitSafe;
}

int cmd_plot(const std::string& system, const std::string& net_spec, const std::string& out,
             const std::vector<std::string>& slice_specs, int grid, bool levels)
{
    const auto problem = load_system(system);
    const auto net = load_net(net_spec);
    const auto view = make_view(problem, slices_of(slice_specs, problem));
    PlotOptions opt;
    opt.grid = grid;
    opt.level_bands = levels;
    write_file(out, boundary_svg(net, problem, view, opt));
    return ExitSafe;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact verification of ReLU neural control barrier functions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ncbf::tool_version);

    CommonArgs common;
    std::string report;
    double eps = 1e-7;
    std::size_t max_nodes = 2'000'000;
    bool no_containment = false;
    auto* verify = app.add_subcommand("verify", "decide whether {b >= 0} is a certified safe invariant set");
    add_common(verify, common);
    verify->add_option("--report", report, "write the JSON report here ('-' for stdout)");
    verify->add_option("--strict-eps", eps, "strictness margin for infeasibility certificates")
        ->check(CLI::PositiveNumber);
    verify->add_option("--max-nodes", max_nodes, "branch-and-bound node budget per check")->check(CLI::PositiveNumber);
    verify->add_flag("--no-containment", no_containment, "skip the {b >= 0} inside {h >= 0} check");

    bool list = false;
    auto* enumerate = app.add_subcommand("enumerate", "list the activation patterns on the zero level set");
    add_common(enumerate, common);
    enumerate->add_option("--report", report, "write the atlas as JSON");
    enumerate->add_flag("--list", list, "print every pattern and intersection");

    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "closed-loop rollouts under the barrier-constrained QP filter");
    add_common(simulate, common);
    simulate->add_option("--x0", sim.x0, "initial state, comma separated (repeatable)");
    simulate->add_option("--dt", sim.dt, "integration step")->check(CLI::PositiveNumber);
    simulate->add_option("--horizon", sim.horizon, "simulated time")->check(CLI::NonNegativeNumber);
    simulate->add_option("--kappa", sim.kappa, "class-K gain in b' >= -kappa b")->check(CLI::PositiveNumber);
    simulate->add_option("--nominal", sim.nominal, "zero, lqr, or ';'-separated expressions of the states");
    simulate->add_option("--fallback", sim.fallback, "input when every QP is infeasible: hold or zero");
    simulate->add_option("--csv", sim.csv, "trajectory CSV path ('-' for stdout)");
    simulate->add_option("--plot", sim.plot, "phase-plane SVG path");
    simulate->add_option("--slice", sim.slices, "fix a state for plotting, dim=value (repeatable)");

    std::string plot_out;
    std::vector<std::string> plot_slices;
    int plot_grid = 200;
    bool levels = false;
    auto* plot = app.add_subcommand("plot", "draw the zero level set of b");
    plot->add_option("--system", common.system, "builtin system name or system file")->required();
    plot->add_option("--net", common.net, "network JSON file or builtin network name")->required();
    plot->add_option("--plot,-o", plot_out, "SVG path ('-' for stdout)")->required();
    plot->add_option("--slice", plot_slices, "fix a state, dim=value (repeatable)");
    plot->add_option("--grid", plot_grid, "contour resolution per axis")->check(CLI::Range(2, 4000));
    plot->add_flag("--levels", levels, "also draw b = +-0.05");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ExitUsage;
    }

    try {
        if (verify->parsed()) {
            return cmd_verify(common, report, eps, max_nodes, !no_containment);
        }
        if (enumerate->parsed()) {
            return cmd_enumerate(common, report, list);
        }
        if (simulate->parsed()) {
            return cmd_simulate(common, sim);
        }
        return cmd_plot(common.system, common.net, plot_out, plot_slices, plot_grid, levels);
    } catch (const CliError& e) {
        std::cerr << "ncbf: " << e.what() << "\n";
        return e.code;
    } catch (const ncbf::PreconditionError& e) {
        std::cerr << "ncbf: " << e.what() << "\n";
        return ExitUsage;
    } catch (const ncbf::Error& e) {
        std::cerr << "ncbf: " << e.what() << "\n";
        return ExitData;
    } catch (const std::exception& e) {
        std::cerr << "ncbf: internal error: " << e.what() << "\n";
        return 70;
    }
}
