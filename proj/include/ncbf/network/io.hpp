#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ncbf/network/relu_network.hpp"

namespace ncbf {

// Weights file layout (JSON):
//   { "input_dim": n,
//     "layers": [ { "weights": [[...], ...],   // M_{i-1} rows of M_i entries
//                   "bias": [...] }, ... ],
//     "output": { "weights": [...], "bias": psi } }
// Doubles are written in shortest round-trip form.

namespace detail {

inline double finite_number(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_number()) {
        throw FormatError(where + ": expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw FormatError(where + ": non-finite value");
    }
    return v;
}

inline Vector json_vector(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_array()) {
        throw FormatError(where + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        v[static_cast<Eigen::Index>(k)] = finite_number(j[k], where + "[" + std::to_string(k) + "]");
    }
    return v;
}

inline Matrix json_matrix(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_array() || j.empty()) {
        throw FormatError(where + ": expected a non-empty array of rows");
    }
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Vector row = json_vector(j[r], where + "[" + std::to_string(r) + "]");
        if (static_cast<std::size_t>(row.size()) != cols) {
            throw DimensionError(where + ": ragged rows");
        }
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

inline nlohmann::json vector_json(const Vector& v)
{
    auto out = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out.push_back(v[k]);
    }
    return out;
}

} // namespace detail

inline ReluNetwork load_network(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("network file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("input_dim") || !doc.contains("layers") || !doc.contains("output")) {
        throw FormatError("network file: requires input_dim, layers and output");
    }
    if (!doc["input_dim"].is_number_integer()) {
        throw FormatError("network file: input_dim must be an integer");
    }
    const int input_dim = doc["input_dim"].get<int>();
    const auto& layers_json = doc["layers"];
    if (!layers_json.is_array() || layers_json.empty()) {
        throw FormatError("network file: layers must be a non-empty list");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < layers_json.size(); ++i) {
        const std::string where = "layers[" + std::to_string(i) + "]";
        const auto& l = layers_json[i];
        if (!l.is_object() || !l.contains("weights") || !l.contains("bias")) {
            throw FormatError(where + ": requires weights and bias");
        }
        layers.push_back({detail::json_matrix(l["weights"], where + ".weights"),
                          detail::json_vector(l["bias"], where + ".bias")});
    }
    const auto& out = doc["output"];
    if (!out.is_object() || !out.contains("weights") || !out.contains("bias")) {
        throw FormatError("output: requires weights and bias");
    }
    return ReluNetwork(input_dim, std::move(layers), detail::json_vector(out["weights"], "output.weights"),
                       detail::finite_number(out["bias"], "output.bias"));
}

inline std::string save_network(const ReluNetwork& net)
{
    nlohmann::json doc;
    doc["input_dim"] = net.input_dim();
    auto layers = nlohmann::json::array();
    for (const auto& l : net.layers()) {
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            rows.push_back(detail::vector_json(l.weights.row(r).transpose()));
        }
        layers.push_back({{"weights", rows}, {"bias", detail::vector_json(l.bias)}});
    }
    doc["layers"] = layers;
    doc["output"] = {{"weights", detail::vector_json(net.output_weights())}, {"bias", net.output_bias()}};
    return doc.dump(1) + "\n";
}

inline ReluNetwork load_network_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open network file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_network(buf.str());
}

} // namespace ncbf
