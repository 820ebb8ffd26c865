/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relucert/data_guard.hpp"
#include "relucert/errors.hpp"
#include "relucert/network.hpp"

namespace relucert {

// Activation statistics for one hidden neuron over a dataset. A
// correlation is undefined (not zero) when either series is constant,
// e.g. for a dead neuron or a pinned feature.
struct NeuronProfile {
    std::size_t layer = 0; // hidden layer, 0-based
    std::size_t index = 0;
    double activation_frequency = 0.0; // fraction of records with post > 0
    double mean_activation = 0.0;
    std::vector<std::optional<double>> feature_correlations; // one per input feature
    std::vector<std::pair<std::size_t, double>> top_features; // (feature, |corr|), descending
};

namespace trace_detail {

// Pearson coefficient of two equal-length series; nullopt when either
// series is constant. Constancy is detected by min == max, which is
// exact, unlike a variance test distorted by mean round-off.
inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    if (*amin == *amax || *bmin == *bmax) return std::nullopt;

    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
    const double r = cov / std::sqrt(var_a * var_b);
    return std::clamp(r, -1.0, 1.0);
}

} // namespace trace_detail

// Profiles every hidden neuron of the network over the dataset:
// activation frequency, mean post-activation, and per-feature Pearson
// correlation of the post-activation series.
inline std::vector<NeuronProfile> profile(const Network& net, const Dataset& ds,
                                          std::size_t top_k = 3) {
    validate_network(net);
    validate_dataset_shape(ds);
    if (ds.feature_dim() != net.input_dim)
        throw ValidationError("profile: dataset has " + std::to_string(ds.feature_dim()) +
                              " features, network expects " + std::to_string(net.input_dim));
    if (ds.records.empty()) throw ValidationError("profile: empty dataset");

    const std::size_t n = ds.size();
    const std::size_t hidden = net.hidden_layer_count();

    // post-activation series per hidden neuron, record-major traversal
    std::vector<std::vector<std::vector<double>>> post(hidden);
    for (std::size_t li = 0; li < hidden; ++li)
        post[li].assign(net.layers[li].rows, std::vector<double>(n, 0.0));
    for (std::size_t ri = 0; ri < n; ++ri) {
        const ForwardTrace tr = forward_trace(net, ds.records[ri].features);
        for (std::size_t li = 0; li < hidden; ++li)
            for (std::size_t r = 0; r < net.layers[li].rows; ++r)
                post[li][r][ri] = tr.post[li][r];
    }

    std::vector<std::vector<double>> feature(ds.feature_dim(), std::vector<double>(n, 0.0));
    for (std::size_t f = 0; f < ds.feature_dim(); ++f)
        for (std::size_t ri = 0; ri < n; ++ri) feature[f][ri] = ds.records[ri].features[f];

    std::vector<NeuronProfile> out;
    for (std::size_t li = 0; li < hidden; ++li) {
        for (std::size_t r = 0; r < net.layers[li].rows; ++r) {
            const std::vector<double>& act = post[li][r];
            NeuronProfile p;
            p.layer = li;
            p.index = r;
            double sum = 0.0;
            std::size_t active = 0;
            for (double v : act) {
                sum += v;
                if (v > 0.0) ++active;
            }
            p.activation_frequency = static_cast<double>(active) / static_cast<double>(n);
            p.mean_activation = sum / static_cast<double>(n);
            p.feature_correlations.reserve(ds.feature_dim());
            for (std::size_t f = 0; f < ds.feature_dim(); ++f)
                p.feature_correlations.push_back(trace_detail::pearson(feature[f], act));

            for (std::size_t f = 0; f < ds.feature_dim(); ++f)
                if (p.feature_correlations[f])
                    p.top_features.emplace_back(f, std::fabs(*p.feature_correlations[f]));
            std::stable_sort(p.top_features.begin(), p.top_features.end(),
                             [](const auto& x, const auto& y) { return x.second > y.second; });
            if (p.top_features.size() > top_k) p.top_features.resize(top_k);

            out.push_back(std::move(p));
        }
    }
    return out;
}

inline nlohmann::json profiles_to_json(const std::vector<NeuronProfile>& profiles) {
    nlohmann::json out = nlohmann::json::array();
    for (const NeuronProfile& p : profiles) {
        nlohmann::json pj;
        pj["layer"] = p.layer;
        pj["index"] = p.index;
        pj["activation_frequency"] = p.activation_frequency;
        pj["mean_activation"] = p.mean_activation;
        nlohmann::json corr = nlohmann::json::array();
        for (const auto& c : p.feature_correlations) {
            if (c)
                corr.push_back(*c);
            else
                corr.push_back(nullptr); // undefined, not zero
        }
        pj["feature_correlations"] = std::move(corr);
        nlohmann::json top = nlohmann::json::array();
        for (const auto& [f, a] : p.top_features) {
            nlohmann::json tj;
            tj["feature"] = f;
            tj["abs_correlation"] = a;
            top.push_back(std::move(tj));
        }
        pj["top_features"] = std::move(top);
        out.push_back(std::move(pj));
    }
    return out;
}

// Human-readable rendering used by the CLI's --pretty flag.
inline std::string profiles_to_table(const std::vector<NeuronProfile>& profiles,
                                     const std::vector<std::string>& feature_names) {
    std::string out = "layer  neuron  act_freq  mean_act  top features\n";
    for (const NeuronProfile& p : profiles) {
        char line[128];
        std::snprintf(line, sizeof line, "%5zu  %6zu  %8.4f  %8.4f  ", p.layer, p.index,
                      p.activation_frequency, p.mean_activation);
        out += line;
        if (p.top_features.empty()) out += "(none)";
        for (std::size_t i = 0; i < p.top_features.size(); ++i) {
            const auto& [f, a] = p.top_features[i];
            std::snprintf(line, sizeof line, "%s%s(%.3f)", i == 0 ? "" : ", ",
                          f < feature_names.size() ? feature_names[f].c_str() : "?", a);
            out += line;
        }
        out += '\n';
    }
    return out;
}

} // namespace relucert
