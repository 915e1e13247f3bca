#pragma once

#include <string>

#include <json.hpp>

#include "ncbf/certify/verify.hpp"
#include "ncbf/dynamics/parse.hpp"
#include "ncbf/network/io.hpp"
#include "ncbf/report/sha256.hpp"

namespace ncbf {

inline constexpr const char* tool_version = "0.1.0";

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m)
{
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(vector_json(m.row(r).transpose()));
    }
    return rows;
}

inline nlohmann::json counterexample_json(const Counterexample& c)
{
    nlohmann::json j;
    j["kind"] = c.kind;
    j["check"] = c.check;
    j["x"] = vector_json(c.x);
    j["b"] = c.b;
    j["h"] = std::isfinite(c.h) ? nlohmann::json(c.h) : nlohmann::json(nullptr);
    j["vanishing_neurons"] = c.unstable;
    auto members = nlohmann::json::array();
    for (const auto& m : c.members) {
        members.push_back({{"pattern", m.pattern},
                           {"summary", m.summary},
                           {"rows", m.system.labels},
                           {"theta", matrix_json(m.system.theta)},
                           {"lambda", vector_json(m.system.lambda)},
                           {"farkas_y", vector_json(m.y)},
                           {"margin", m.margin}});
    }
    j["members"] = members;
    return j;
}

} // namespace detail

/// Canonical input fingerprints: digests of the re-serialized inputs, so
/// formatting differences in the source files do not matter.
inline nlohmann::json input_fingerprints(const SafetyProblem& problem, const ReluNetwork& net)
{
    return {{"system", {{"name", problem.name}, {"sha256", sha256_hex(unparse_problem(problem))}}},
            {"network",
             {{"sha256", sha256_hex(save_network(net))},
              {"hidden_neurons", net.total_neurons()},
              {"layers", net.num_layers()}}}};
}

inline nlohmann::json atlas_json(const Atlas& atlas)
{
    auto patterns = nlohmann::json::array();
    for (const auto& p : atlas.patterns) {
        patterns.push_back({{"pattern", p.pattern.to_string()}, {"witness", detail::vector_json(p.witness)}});
    }
    auto inters = nlohmann::json::array();
    for (const auto& t : atlas.intersections) {
        auto members = nlohmann::json::array();
        for (const auto& m : t.members) {
            members.push_back(m.to_string());
        }
        inters.push_back({{"key", t.key}, {"members", members}, {"witness", detail::vector_json(t.witness)}});
    }
    return {{"cells", atlas.cells.size()},
            {"boundary_patterns", atlas.patterns.size()},
            {"intersections", atlas.intersections.size()},
            {"complete", atlas.complete},
            {"notes", atlas.notes},
            {"patterns", patterns},
            {"intersection_list", inters}};
}

/// Machine-readable verification report. Everything outside "runtime" is
/// a function of the inputs and configuration only.
inline nlohmann::json verification_report(const SafetyProblem& problem, const ReluNetwork& net, const VerifyConfig& cfg,
                                          const Verdict& v)
{
    nlohmann::json j;
    j["tool"] = {{"name", "ncbf"}, {"version", tool_version}};
    j["inputs"] = input_fingerprints(problem, net);
    j["config"] = {{"grid", cfg.atlas.grid_per_axis},
                   {"zero_tol", cfg.atlas.zero_tol},
                   {"face_margin", cfg.atlas.face_margin},
                   {"max_unstable", cfg.atlas.max_unstable},
                   {"strict_eps", cfg.eps_strict},
                   {"max_nodes", cfg.limits.max_nodes},
                   {"min_box_width", cfg.limits.min_box_width},
                   {"containment", cfg.check_containment}};
    j["atlas"] = atlas_json(v.atlas);
    auto checks = nlohmann::json::array();
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : v.checks) {
        ++counts[static_cast<int>(c.status)];
        nlohmann::json r = {{"id", c.id},         {"kind", c.kind},   {"subject", c.subject},
                            {"status", to_string(c.status)}, {"method", c.method}, {"nodes", c.nodes}};
        if (!c.note.empty()) {
            r["note"] = c.note;
        }
        if (!c.witnesses.empty()) {
            auto w = nlohmann::json::array();
            for (const auto& iw : c.witnesses) {
                w.push_back({{"pattern", iw.pattern},
                             {"lo", detail::vector_json(iw.box.lo)},
                             {"hi", detail::vector_json(iw.box.hi)},
                             {"u", detail::vector_json(iw.u)}});
            }
            r["input_witnesses"] = std::move(w);
        }
        checks.push_back(std::move(r));
    }
    j["checks"] = checks;
    j["summary"] = {{"safe", counts[0]}, {"unsafe", counts[1]}, {"inconclusive", counts[2]}};
    j["status"] = to_string(v.status);
    j["reason"] = v.reason;
    j["counterexample"] = v.counterexample ? detail::counterexample_json(*v.counterexample) : nlohmann::json(nullptr);
    j["runtime"] = {{"threads", cfg.atlas.threads},
                    {"lp_solves", v.atlas.lp_solves},
                    {"t_enumerate", v.atlas_seconds},
                    {"t_verify", v.check_seconds},
                    {"t_total", v.atlas_seconds + v.check_seconds}};
    return j;
}

/// Report with the run-dependent section removed, for comparisons.
inline nlohmann::json deterministic_part(nlohmann::json report)
{
    report.erase("runtime");
    return report;
}

/// Does the overall status follow from the per-check records?
inline bool report_consistent(const nlohmann::json& report)
{
    bool unsafe = false;
    bool open = !report.at("atlas").at("complete").get<bool>();
    for (const auto& c : report.at("checks")) {
        unsafe = unsafe || c.at("status") == "UNSAFE";
        open = open || c.at("status") == "INCONCLUSIVE";
    }
    const std::string expected = unsafe ? "UNSAFE" : open ? "INCONCLUSIVE" : "SAFE";
    return report.at("status") == expected && (expected == "UNSAFE") == !report.at("counterexample").is_null();
}

} // namespace ncbf
