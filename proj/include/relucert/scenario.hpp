/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relucert/data_guard.hpp"
#include "relucert/errors.hpp"
#include "relucert/milp.hpp"
#include "relucert/network.hpp"
#include "relucert/property.hpp"
#include "relucert/rng.hpp"

namespace relucert {

// Safety rule constants baked into the generator: with a vehicle in the
// left lane closer than kUnsafeGap meters, sampled lateral velocity
// never exceeds kSafeLatCap m/s (positive = leftward).
inline constexpr double kUnsafeGap = 20.0;
inline constexpr double kSafeLatCap = 0.3;

inline constexpr double kMaxEgoSpeed = 40.0; // m/s
inline constexpr double kMaxGap = 100.0;     // m
inline constexpr double kMaxLatVel = 4.0;    // m/s, range is symmetric
inline constexpr double kMaxLongAcc = 3.0;   // m/s^2, range is symmetric

struct ScenarioParams {
    std::size_t n_records = 0;
    std::uint64_t seed = 0;
};

inline const std::vector<std::string>& scenario_feature_names() {
    static const std::vector<std::string> names = {
        "ego_speed", "left_occ", "left_gap", "right_occ", "right_gap",
        "front_occ", "front_gap", "rear_occ", "rear_gap"};
    return names;
}

inline const std::vector<std::string>& scenario_label_names() {
    static const std::vector<std::string> names = {"lat_vel", "long_acc"};
    return names;
}

// Synthetic highway snapshots around an ego vehicle. Occupancy flags are
// fair coin flips; an unoccupied slot reports the maximum gap. Labels
// come from a fixed hand-written driving heuristic:
//   - lane pressure grows as the front vehicle closes in, and the ego
//     drifts toward whichever adjacent lane has more room, with a small
//     uniform perturbation;
//   - longitudinal acceleration tracks the speed-limit shortfall minus
//     front-vehicle braking pressure, same perturbation.
// The safety rule then overrides lateral velocity: left lane occupied
// within kUnsafeGap forces a draw from [-kMaxLatVel, kSafeLatCap].
// Identical params give a bit-identical dataset.
inline Dataset generate_scenarios(const ScenarioParams& p) {
    if (p.n_records == 0) throw ValidationError("generate_scenarios: n_records must be positive");

    Dataset ds;
    ds.feature_names = scenario_feature_names();
    ds.label_names = scenario_label_names();
    ds.records.reserve(p.n_records);

    Rng rng(p.seed);
    for (std::size_t i = 0; i < p.n_records; ++i) {
        Record r;
        r.features.resize(9);
        r.labels.resize(2);

        r.features[0] = rng.uniform(0.0, kMaxEgoSpeed);
        for (std::size_t slot = 0; slot < 4; ++slot) {
            const bool occ = rng.bernoulli(0.5);
            const double gap = rng.uniform(0.0, kMaxGap); // drawn even when unused, fixed schedule
            r.features[1 + 2 * slot] = occ ? 1.0 : 0.0;
            r.features[2 + 2 * slot] = occ ? gap : kMaxGap;
        }

        const double ego_speed = r.features[0];
        const double left_occ = r.features[1], left_gap = r.features[2];
        const double right_occ = r.features[3], right_gap = r.features[4];
        const double front_occ = r.features[5], front_gap = r.features[6];

        const double pressure = front_occ * (1.0 - front_gap / kMaxGap);
        const double left_room = left_occ > 0.0 ? left_gap / kMaxGap : 1.0;
        const double right_room = right_occ > 0.0 ? right_gap / kMaxGap : 1.0;
        double lat = left_room >= right_room ? kMaxLatVel * pressure * left_room
                                             : -kMaxLatVel * pressure * right_room;
        lat += rng.uniform(-0.25, 0.25);
        lat = std::clamp(lat, -kMaxLatVel, kMaxLatVel);

        double acc = kMaxLongAcc * (1.0 - ego_speed / kMaxEgoSpeed) -
                     kMaxLongAcc * front_occ * (1.0 - front_gap / kMaxGap);
        acc += rng.uniform(-0.25, 0.25);
        acc = std::clamp(acc, -kMaxLongAcc, kMaxLongAcc);

        if (left_occ > 0.0 && left_gap <= kUnsafeGap)
            lat = rng.uniform(-kMaxLatVel, kSafeLatCap); // safety rule wins over heuristic

        r.labels[0] = lat;
        r.labels[1] = acc;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

// The generator's safety rule as an unsafe pattern: flags any record
// that claims a fast leftward move while the left lane is occupied at
// close range. Freshly generated data never matches it.
inline UnsafePattern left_cut_in_pattern() {
    UnsafePattern p;
    p.name = "left-cut-in";
    p.conjuncts = {
        {PatternAtom::Target::Feature, 1, PatternAtom::Rel::GreaterEq, 0.5}, // left_occ
        {PatternAtom::Target::Feature, 2, PatternAtom::Rel::LessEq, kUnsafeGap}, // left_gap
        {PatternAtom::Target::Label, 0, PatternAtom::Rel::GreaterEq, 1.0},       // lat_vel
    };
    return p;
}

struct TrainConfig {
    std::size_t hidden_layers = 2;
    std::size_t width = 10;
    std::uint64_t seed = 0;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 0.01;

    std::string arch_tag() const {
        return std::to_string(hidden_layers) + "x" + std::to_string(width);
    }
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.hidden_layers == 0) throw ValidationError("train: need at least one hidden layer");
    if (cfg.width == 0) throw ValidationError("train: width must be positive");
    if (cfg.epochs == 0) throw ValidationError("train: epochs must be positive");
    if (cfg.batch_size == 0) throw ValidationError("train: batch size must be positive");
    if (!(cfg.learning_rate > 0.0)) throw ValidationError("train: learning rate must be positive");
}

namespace train_detail {

// column-wise mean and standard deviation; sd of a constant column is 1
// so standardization stays a bijection
inline void feature_stats(const Dataset& ds, std::vector<double>& mean, std::vector<double>& sd) {
    const std::size_t d = ds.feature_dim();
    const double n = static_cast<double>(ds.size());
    mean.assign(d, 0.0);
    sd.assign(d, 0.0);
    for (const Record& r : ds.records)
        for (std::size_t f = 0; f < d; ++f) mean[f] += r.features[f];
    for (std::size_t f = 0; f < d; ++f) mean[f] /= n;
    for (const Record& r : ds.records)
        for (std::size_t f = 0; f < d; ++f) {
            const double dv = r.features[f] - mean[f];
            sd[f] += dv * dv;
        }
    for (std::size_t f = 0; f < d; ++f) {
        sd[f] = std::sqrt(sd[f] / n);
        if (sd[f] == 0.0) sd[f] = 1.0;
    }
}

} // namespace train_detail

// Minibatch gradient descent on mean squared error. Weights start
// uniform in ±sqrt(6 / fan_in), biases at zero; the shuffle schedule is
// derived from cfg.seed, so identical inputs give bit-identical
// networks. Features are standardized internally and the affine
// transform is folded into the first layer afterwards, so the returned
// network consumes raw feature units.
inline Network train(const Dataset& ds, const TrainConfig& cfg) {
    validate_train_config(cfg);
    validate_dataset_shape(ds);
    if (ds.records.empty()) throw ValidationError("train: empty dataset");

    const std::size_t in_dim = ds.feature_dim();
    const std::size_t out_dim = ds.label_dim();
    const std::size_t n = ds.size();

    std::vector<double> mean, sd;
    train_detail::feature_stats(ds, mean, sd);
    std::vector<std::vector<double>> X(n, std::vector<double>(in_dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < in_dim; ++f)
            X[i][f] = (ds.records[i].features[f] - mean[f]) / sd[f];

    Network net;
    net.input_dim = in_dim;
    Rng rng(cfg.seed);
    std::size_t fan_in = in_dim;
    for (std::size_t li = 0; li <= cfg.hidden_layers; ++li) {
        const bool output = li == cfg.hidden_layers;
        Layer layer;
        layer.rows = output ? out_dim : cfg.width;
        layer.cols = fan_in;
        layer.activation = output ? Activation::Linear : Activation::Relu;
        layer.weights.resize(layer.rows * layer.cols);
        layer.bias.assign(layer.rows, 0.0);
        const double scale = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : layer.weights) w = rng.uniform(-scale, scale);
        net.layers.push_back(std::move(layer));
        fan_in = output ? fan_in : cfg.width;
    }

    const std::size_t L = net.layers.size();
    std::vector<std::vector<double>> act(L + 1);  // act[0] = input
    std::vector<std::vector<double>> pre(L);      // pre-activations
    std::vector<std::vector<double>> delta(L);    // dLoss/dPre
    std::vector<std::vector<double>> grad_w(L), grad_b(L);
    for (std::size_t li = 0; li < L; ++li) {
        grad_w[li].resize(net.layers[li].weights.size());
        grad_b[li].resize(net.layers[li].rows);
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) { // Fisher-Yates, seed-fixed schedule
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order[i - 1], order[j]);
        }

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const double inv_m = 1.0 / static_cast<double>(stop - start);
            for (std::size_t li = 0; li < L; ++li) {
                std::fill(grad_w[li].begin(), grad_w[li].end(), 0.0);
                std::fill(grad_b[li].begin(), grad_b[li].end(), 0.0);
            }

            double batch_loss = 0.0;
            for (std::size_t bi = start; bi < stop; ++bi) {
                const std::size_t ri = order[bi];
                act[0] = X[ri];
                for (std::size_t li = 0; li < L; ++li) {
                    const Layer& layer = net.layers[li];
                    pre[li].assign(layer.rows, 0.0);
                    for (std::size_t r = 0; r < layer.rows; ++r) {
                        double s = layer.bias[r];
                        for (std::size_t c = 0; c < layer.cols; ++c)
                            s += layer.weight(r, c) * act[li][c];
                        pre[li][r] = s;
                    }
                    act[li + 1] = pre[li];
                    if (layer.activation == Activation::Relu)
                        for (double& v : act[li + 1]) v = std::max(v, 0.0);
                }

                // loss = mean over outputs of squared error; delta carries
                // the 2/out_dim factor so gradients match exactly
                const std::vector<double>& lbl = ds.records[ri].labels;
                delta[L - 1].assign(out_dim, 0.0);
                for (std::size_t k = 0; k < out_dim; ++k) {
                    const double err = act[L][k] - lbl[k];
                    batch_loss += err * err / static_cast<double>(out_dim);
                    delta[L - 1][k] = 2.0 * err / static_cast<double>(out_dim);
                }
                for (std::size_t li = L - 1; li-- > 0;) {
                    const Layer& next = net.layers[li + 1];
                    delta[li].assign(net.layers[li].rows, 0.0);
                    for (std::size_t c = 0; c < next.cols; ++c) {
                        if (pre[li][c] <= 0.0) continue; // ReLU gate
                        double s = 0.0;
                        for (std::size_t r = 0; r < next.rows; ++r)
                            s += next.weight(r, c) * delta[li + 1][r];
                        delta[li][c] = s;
                    }
                }
                for (std::size_t li = 0; li < L; ++li) {
                    const Layer& layer = net.layers[li];
                    for (std::size_t r = 0; r < layer.rows; ++r) {
                        grad_b[li][r] += delta[li][r];
                        for (std::size_t c = 0; c < layer.cols; ++c)
                            grad_w[li][r * layer.cols + c] += delta[li][r] * act[li][c];
                    }
                }
            }

            if (!std::isfinite(batch_loss))
                throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch + 1));

            const double step = cfg.learning_rate * inv_m;
            for (std::size_t li = 0; li < L; ++li) {
                Layer& layer = net.layers[li];
                for (std::size_t w = 0; w < layer.weights.size(); ++w)
                    layer.weights[w] -= step * grad_w[li][w];
                for (std::size_t r = 0; r < layer.rows; ++r) layer.bias[r] -= step * grad_b[li][r];
            }
        }
    }

    // fold standardization into layer 1: W'x + b' = W((x - mean)/sd) + b
    Layer& first = net.layers.front();
    for (std::size_t r = 0; r < first.rows; ++r) {
        double shift = 0.0;
        for (std::size_t c = 0; c < first.cols; ++c) {
            shift += first.weight(r, c) * (mean[c] / sd[c]);
            first.weights[r * first.cols + c] /= sd[c];
        }
        first.bias[r] -= shift;
    }

    double final_mse = 0.0;
    for (const Record& r : ds.records) {
        const std::vector<double> out = forward(net, r.features);
        for (std::size_t k = 0; k < out_dim; ++k) {
            const double err = out[k] - r.labels[k];
            final_mse += err * err;
        }
    }
    final_mse /= static_cast<double>(n * out_dim);
    if (!std::isfinite(final_mse)) throw TrainingError("train: final loss is not finite");

    net.metadata["arch"] = cfg.arch_tag();
    net.metadata["seed"] = std::to_string(cfg.seed);
    net.metadata["epochs"] = std::to_string(cfg.epochs);
    net.metadata["batch_size"] = std::to_string(cfg.batch_size);
    net.metadata["learning_rate"] = csv_detail::format_double(cfg.learning_rate);
    net.metadata["final_mse"] = csv_detail::format_double(final_mse);
    validate_network(net);
    return net;
}

struct BenchRow {
    std::string arch;
    VerdictStatus status = VerdictStatus::Unknown;
    bool has_max = false;  // true when the search closed its gap
    double max_value = 0.0;
    double lower_bound = -std::numeric_limits<double>::infinity();
    double time_s = 0.0;
    std::size_t nodes = 0;
    std::size_t lp_solves = 0;
    double train_mse = 0.0;
};

struct BenchReport {
    std::string claim_name;
    double threshold = 0.0;
    std::vector<BenchRow> rows;
};

// Trains one network per config on the given (already sanitized)
// dataset and verifies the claim against each. Rows where the search
// timed out carry no certified maximum and render as "n.a.".
inline BenchReport bench(const Dataset& ds, const std::vector<TrainConfig>& configs,
                         const SafetyClaim& claim, const MaximizeOptions& opt = {}) {
    if (configs.empty()) throw ValidationError("bench: empty config list");
    validate_dataset_shape(ds);

    BenchReport report;
    report.claim_name = claim.name;
    report.threshold = claim.threshold;
    for (const TrainConfig& cfg : configs) {
        const Network net = train(ds, cfg);
        const Verdict v = check_claim(net, claim, opt);

        BenchRow row;
        row.arch = cfg.arch_tag();
        row.status = v.status;
        // a finite certified maximum exists exactly when both bounds met
        row.has_max = std::isfinite(v.upper_bound) && std::isfinite(v.lower_bound) &&
                      v.upper_bound - v.lower_bound <= opt.gap + 1e-12;
        row.max_value = v.upper_bound;
        row.lower_bound = v.lower_bound;
        row.time_s = v.stats.time_s;
        row.nodes = v.stats.nodes;
        row.lp_solves = v.stats.lp_solves;
        row.train_mse = std::strtod(net.metadata.at("final_mse").c_str(), nullptr);
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline nlohmann::json bench_to_json(const BenchReport& report) {
    nlohmann::json out;
    out["claim"] = report.claim_name;
    out["threshold"] = report.threshold;
    out["rows"] = nlohmann::json::array();
    for (const BenchRow& row : report.rows) {
        nlohmann::json rj;
        rj["network"] = row.arch;
        if (row.has_max)
            rj["max_value"] = row.max_value;
        else
            rj["max_value"] = nullptr; // rendered as "n.a."
        rj["verdict"] = to_string(row.status);
        rj["time_s"] = row.time_s;
        rj["nodes"] = row.nodes;
        rj["lp_solves"] = row.lp_solves;
        rj["train_mse"] = row.train_mse;
        out["rows"].push_back(std::move(rj));
    }
    return out;
}

inline std::string bench_to_table(const BenchReport& report) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "claim: %s (threshold %.6g)\n", report.claim_name.c_str(),
                  report.threshold);
    out += line;
    out += "network | max lateral velocity | time (s) | verdict\n";
    for (const BenchRow& row : report.rows) {
        char max_buf[32];
        if (row.has_max)
            std::snprintf(max_buf, sizeof max_buf, "%.6f", row.max_value);
        else
            std::snprintf(max_buf, sizeof max_buf, "n.a.");
        std::snprintf(line, sizeof line, "%-7s | %-20s | %8.1f | %s\n", row.arch.c_str(), max_buf,
                      row.time_s, to_string(row.status));
        out += line;
    }
    return out;
}

} // namespace relucert
