/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relucert/errors.hpp"
#include "relucert/network.hpp"

namespace relucert {

// Per-input interval box. Unbounded inputs are rejected: every big-M
// constant downstream must be finite.
struct InputBox {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const { return lo.size(); }
};

inline void validate_box(const InputBox& box, std::size_t input_dim) {
    if (box.lo.size() != input_dim || box.hi.size() != input_dim)
        throw ValidationError("box: dimension " + std::to_string(box.lo.size()) + "/" +
                              std::to_string(box.hi.size()) + " != input_dim " +
                              std::to_string(input_dim));
    for (std::size_t i = 0; i < input_dim; ++i) {
        if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
            throw ValidationError("box: non-finite bound at input " + std::to_string(i));
        if (box.lo[i] > box.hi[i])
            throw ValidationError("box: lo > hi at input " + std::to_string(i));
    }
}

enum class Phase { StableActive, StableInactive, Crossing };

// Pre-activation bounds and phase label per neuron of one layer.
// The label follows the sign rule: lo >= 0 -> stable active,
// hi <= 0 -> stable inactive (a point interval at zero counts as
// active; both readings give y = 0), otherwise crossing.
struct LayerBounds {
    std::vector<double> pre_lo;
    std::vector<double> pre_hi;
    std::vector<Phase> phase;

    std::size_t size() const { return pre_lo.size(); }
};

inline Phase classify_phase(double lo, double hi) {
    if (lo >= 0.0) return Phase::StableActive;
    if (hi <= 0.0) return Phase::StableInactive;
    return Phase::Crossing;
}

struct NeuronRef {
    std::size_t layer = 0; // hidden-layer index, 0-based
    std::size_t index = 0;

    auto operator<=>(const NeuronRef&) const = default;
};

// Branching decisions: neuron -> forced phase (true = active).
using PhaseFixings = std::map<NeuronRef, bool>;

namespace detail {

// Interval of w·in + b given elementwise input intervals.
inline void affine_interval(const Layer& layer, const std::vector<double>& in_lo,
                            const std::vector<double>& in_hi, std::vector<double>& out_lo,
                            std::vector<double>& out_hi) {
    out_lo.assign(layer.rows, 0.0);
    out_hi.assign(layer.rows, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
        double lo = layer.bias[r];
        double hi = layer.bias[r];
        const double* w = layer.weights.data() + r * layer.cols;
        for (std::size_t c = 0; c < layer.cols; ++c) {
            if (w[c] >= 0.0) {
                lo += w[c] * in_lo[c];
                hi += w[c] * in_hi[c];
            } else {
                lo += w[c] * in_hi[c];
                hi += w[c] * in_lo[c];
            }
        }
        out_lo[r] = lo;
        out_hi[r] = hi;
    }
}

} // namespace detail

// Interval propagation with branching fixings applied. Returns nullopt
// when a fixing is provably unrealizable over the box (pre-activation
// strictly one-signed against the forced phase), which prunes the
// branch-and-bound node outright.
inline std::optional<std::vector<LayerBounds>> propagate_box_fixed(const Network& net,
                                                                   const InputBox& box,
                                                                   const PhaseFixings& fixings) {
    validate_box(box, net.input_dim);

    std::vector<LayerBounds> result;
    result.reserve(net.layers.size());

    std::vector<double> in_lo = box.lo;
    std::vector<double> in_hi = box.hi;
    std::vector<double> pre_lo, pre_hi;

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        detail::affine_interval(layer, in_lo, in_hi, pre_lo, pre_hi);

        LayerBounds lb;
        lb.pre_lo = pre_lo;
        lb.pre_hi = pre_hi;
        lb.phase.resize(layer.rows);

        std::vector<double> post_lo(layer.rows), post_hi(layer.rows);
        for (std::size_t r = 0; r < layer.rows; ++r) {
            lb.phase[r] = classify_phase(pre_lo[r], pre_hi[r]);
            if (layer.activation == Activation::Linear) {
                post_lo[r] = pre_lo[r];
                post_hi[r] = pre_hi[r];
                continue;
            }
            auto it = fixings.find(NeuronRef{li, r});
            if (it == fixings.end()) {
                post_lo[r] = std::max(pre_lo[r], 0.0);
                post_hi[r] = std::max(pre_hi[r], 0.0);
            } else if (it->second) {
                // forced active: t >= 0, y = t
                if (pre_hi[r] < 0.0) return std::nullopt;
                post_lo[r] = std::max(pre_lo[r], 0.0);
                post_hi[r] = pre_hi[r];
            } else {
                // forced inactive: t <= 0, y = 0
                if (pre_lo[r] > 0.0) return std::nullopt;
                post_lo[r] = 0.0;
                post_hi[r] = 0.0;
            }
        }
        result.push_back(std::move(lb));
        in_lo = std::move(post_lo);
        in_hi = std::move(post_hi);
    }
    return result;
}

// Sound per-neuron pre-activation intervals over the box; these supply
// the big-M constants of the MILP encoding.
inline std::vector<LayerBounds> propagate_box(const Network& net, const InputBox& box) {
    return *propagate_box_fixed(net, box, {}); // no fixings, never empty
}

// Crossing neurons in deterministic order (layer, then index).
inline std::vector<NeuronRef> crossing_neurons(const std::vector<LayerBounds>& bounds,
                                               std::size_t hidden_layers) {
    std::vector<NeuronRef> out;
    for (std::size_t li = 0; li < hidden_layers; ++li)
        for (std::size_t r = 0; r < bounds[li].size(); ++r)
            if (bounds[li].phase[r] == Phase::Crossing) out.push_back({li, r});
    return out;
}

} // namespace relucert
