/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relucert/errors.hpp"

namespace relucert {

enum class Activation { Relu, Linear };

inline const char* to_string(Activation a) {
    return a == Activation::Relu ? "relu" : "linear";
}

// One dense layer. Weights are row-major: row = neuron of this layer,
// column = input to this layer.
struct Layer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights; // rows * cols
    std::vector<double> bias;    // rows
    Activation activation = Activation::Relu;

    double weight(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
    double& weight(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
};

// Feed-forward ReLU network with a linear output layer. Immutable in
// practice: built once (load/train), then shared freely across threads.
struct Network {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;
    std::map<std::string, std::string> metadata;

    std::size_t output_dim() const { return layers.back().rows; }
    std::size_t hidden_layer_count() const { return layers.size() - 1; }
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

// Checks the full dimension chain and activation placement.
// Layer indices in messages are 1-based to match the document order.
inline void validate_network(const Network& net) {
    if (net.input_dim == 0)
        throw ValidationError("network: input_dim must be positive");
    if (net.layers.empty())
        throw ValidationError("network: at least one layer required");

    std::size_t fan_in = net.input_dim;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        const std::string where = "layer " + std::to_string(li + 1);
        const bool last = li + 1 == net.layers.size();

        if (layer.rows == 0)
            throw ValidationError(where + ": empty layer");
        if (layer.weights.size() != layer.rows * layer.cols)
            throw ValidationError(where + ": weight storage does not match rows*cols");
        if (layer.bias.size() != layer.rows)
            throw ValidationError(where + ": bias length " + std::to_string(layer.bias.size()) +
                                  " != neuron count " + std::to_string(layer.rows));
        if (layer.cols != fan_in)
            throw ValidationError(where + ": expects " + std::to_string(layer.cols) +
                                  " inputs but previous stage has " + std::to_string(fan_in));
        if (!detail::all_finite(layer.weights))
            throw ValidationError(where + ": non-finite weight entry");
        if (!detail::all_finite(layer.bias))
            throw ValidationError(where + ": non-finite bias entry");
        if (last && layer.activation != Activation::Linear)
            throw ValidationError(where + ": output layer must be linear");
        if (!last && layer.activation != Activation::Relu)
            throw ValidationError(where + ": hidden layer must be relu");

        fan_in = layer.rows;
    }
}

// Pre- and post-activation values of every layer for one input.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;  // one vector per layer
    std::vector<std::vector<double>> post; // relu-clipped (identity for output layer)
};

inline ForwardTrace forward_trace(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim)
        throw ValidationError("forward: input length " + std::to_string(x.size()) +
                              " != input_dim " + std::to_string(net.input_dim));

    ForwardTrace trace;
    trace.pre.reserve(net.layers.size());
    trace.post.reserve(net.layers.size());

    std::vector<double> current(x.begin(), x.end());
    for (const Layer& layer : net.layers) {
        std::vector<double> pre(layer.rows);
        for (std::size_t r = 0; r < layer.rows; ++r) {
            double acc = layer.bias[r];
            const double* w = layer.weights.data() + r * layer.cols;
            for (std::size_t c = 0; c < layer.cols; ++c) acc += w[c] * current[c];
            pre[r] = acc;
        }
        std::vector<double> post = pre;
        if (layer.activation == Activation::Relu)
            for (double& v : post) v = v > 0.0 ? v : 0.0;
        current = post;
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
    }
    return trace;
}

// Exact layer-by-layer evaluation; identical bits for identical inputs.
inline std::vector<double> forward(const Network& net, std::span<const double> x) {
    return forward_trace(net, x).post.back();
}

inline std::vector<double> forward(const Network& net, const std::vector<double>& x) {
    return forward(net, std::span<const double>(x));
}

// --- serialization ---------------------------------------------------------
//
// Document shape:
//   {"input_dim": n,
//    "layers": [{"weights": [[...]], "bias": [...], "activation": "relu"|"linear"}],
//    "metadata": {"k": "v"}}
// Reals round-trip exactly (shortest representation that re-parses to
// the same double).

inline Network network_from_json(const nlohmann::json& doc) {
    Network net;
    try {
        net.input_dim = doc.at("input_dim").get<std::size_t>();
        const auto& layers = doc.at("layers");
        if (!layers.is_array())
            throw ParseError("network: \"layers\" must be an array");
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const auto& jl = layers[li];
            Layer layer;
            const std::string act = jl.at("activation").get<std::string>();
            if (act == "relu")
                layer.activation = Activation::Relu;
            else if (act == "linear")
                layer.activation = Activation::Linear;
            else
                throw ParseError("layer " + std::to_string(li + 1) +
                                 ": unknown activation \"" + act + "\"");

            const auto& jw = jl.at("weights");
            layer.rows = jw.size();
            for (const auto& jrow : jw) {
                if (layer.cols == 0) layer.cols = jrow.size();
                if (jrow.size() != layer.cols)
                    throw ValidationError("layer " + std::to_string(li + 1) +
                                          ": ragged weight rows");
                for (const auto& v : jrow) layer.weights.push_back(v.get<double>());
            }
            layer.bias = jl.at("bias").get<std::vector<double>>();
            net.layers.push_back(std::move(layer));
        }
        if (doc.contains("metadata"))
            net.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network: ") + e.what());
    }
    validate_network(net);
    return net;
}

inline Network parse_network(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded())
        throw ParseError("network: malformed JSON");
    return network_from_json(doc);
}

inline Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json jlayers = nlohmann::json::array();
    for (const Layer& layer : net.layers) {
        nlohmann::json jw = nlohmann::json::array();
        for (std::size_t r = 0; r < layer.rows; ++r) {
            nlohmann::json jrow = nlohmann::json::array();
            for (std::size_t c = 0; c < layer.cols; ++c) jrow.push_back(layer.weight(r, c));
            jw.push_back(std::move(jrow));
        }
        jlayers.push_back({{"weights", std::move(jw)},
                           {"bias", layer.bias},
                           {"activation", to_string(layer.activation)}});
    }
    return {{"input_dim", net.input_dim},
            {"layers", std::move(jlayers)},
            {"metadata", net.metadata}};
}

inline std::string serialize_network(const Network& net) {
    return network_to_json(net).dump(2);
}

inline void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open network file for writing: " + path);
    out << serialize_network(net) << '\n';
    if (!out) throw ParseError("write failed: " + path);
}

} // namespace relucert
