/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "relucert/neuron_trace.hpp"
#include "relucert/rng.hpp"
#include "util.hpp"

using relucert::Activation;
using relucert::Dataset;
using relucert::Network;
using relucert::NeuronProfile;
using testutil::make_layer;
using testutil::make_net;

TEST_CASE("pass-through neuron correlates perfectly with its feature", "[neuron_trace]") {
    // hidden neuron = relu(x0) with x0 > 0 on every record
    const Network net = make_net(
        2, {make_layer({{1.0, 0.0}}, {0.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    Dataset ds;
    ds.feature_names = {"x0", "x1"};
    ds.label_names = {"y"};
    relucert::Rng rng(7);
    for (int i = 0; i < 100; ++i)
        ds.records.push_back({{rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)}, {0.0}});

    const std::vector<NeuronProfile> profiles = relucert::profile(net, ds);
    REQUIRE(profiles.size() == 1);
    REQUIRE(profiles[0].activation_frequency == 1.0);
    REQUIRE(profiles[0].feature_correlations[0].has_value());
    REQUIRE_THAT(*profiles[0].feature_correlations[0], Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(profiles[0].top_features[0].first == 0);
}

TEST_CASE("dead neuron: zero frequency, undefined correlations", "[neuron_trace]") {
    // pre-activation = -x0 - 5 is negative over the whole sample
    const Network net = make_net(
        1, {make_layer({{-1.0}}, {-5.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    Dataset ds;
    ds.feature_names = {"x0"};
    ds.label_names = {"y"};
    relucert::Rng rng(11);
    for (int i = 0; i < 50; ++i) ds.records.push_back({{rng.uniform(0.0, 3.0)}, {0.0}});

    const std::vector<NeuronProfile> profiles = relucert::profile(net, ds);
    REQUIRE(profiles[0].activation_frequency == 0.0);
    REQUIRE(profiles[0].mean_activation == 0.0);
    for (const auto& c : profiles[0].feature_correlations) REQUIRE_FALSE(c.has_value());
    REQUIRE(profiles[0].top_features.empty());
}

TEST_CASE("three-record hand Pearson", "[neuron_trace]") {
    // neuron post-activations over the records: 3, 3, 8
    const Network net = make_net(
        2, {make_layer({{1.0, 1.0}, {1.0, -1.0}}, {0.0, 0.0}, Activation::Relu),
            make_layer({{1.0, 1.0}}, {0.0}, Activation::Linear)});
    Dataset ds;
    ds.feature_names = {"f0", "f1"};
    ds.label_names = {"y"};
    ds.records = {{{1.0, 2.0}, {0.0}}, {{2.0, 1.0}, {0.0}}, {{3.0, 5.0}, {0.0}}};

    const std::vector<NeuronProfile> profiles = relucert::profile(net, ds);
    REQUIRE(profiles.size() == 2);

    // neuron 0: corr(f0, [3,3,8]) = 5 / sqrt(2 * 50/3) = sqrt(3)/2
    REQUIRE_THAT(*profiles[0].feature_correlations[0],
                 Catch::Matchers::WithinAbs(0.8660254037844386, 1e-12));
    // corr(f1, [3,3,8]) = (35/3) / sqrt((26/3)(50/3)) = 3.5/sqrt(13)
    REQUIRE_THAT(*profiles[0].feature_correlations[1],
                 Catch::Matchers::WithinAbs(0.9707253433941511, 1e-12));
    REQUIRE_THAT(profiles[0].mean_activation, Catch::Matchers::WithinAbs(14.0 / 3.0, 1e-12));
    REQUIRE(profiles[0].activation_frequency == 1.0);

    // neuron 1 fires only on the middle record: posts [0, 1, 0], and its
    // correlation with f0 = [1,2,3] is exactly zero yet well defined
    REQUIRE_THAT(profiles[1].activation_frequency, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
    REQUIRE(profiles[1].feature_correlations[0].has_value());
    REQUIRE_THAT(*profiles[1].feature_correlations[0], Catch::Matchers::WithinAbs(0.0, 1e-12));

    // ranking: f1 above f0 for neuron 0
    REQUIRE(profiles[0].top_features[0].first == 1);
    REQUIRE(profiles[0].top_features[1].first == 0);
}

TEST_CASE("profiling is invariant under record permutation", "[neuron_trace]") {
    const testutil::RandomInstance ri = testutil::random_instance(606, 24);
    Dataset ds;
    for (std::size_t f = 0; f < ri.net.input_dim; ++f)
        ds.feature_names.push_back("f" + std::to_string(f));
    ds.label_names = {"y"};
    relucert::Rng rng(607);
    for (int i = 0; i < 200; ++i)
        ds.records.push_back({testutil::sample_in_box(ri.box, rng), {0.0}});

    Dataset shuffled = ds;
    std::reverse(shuffled.records.begin(), shuffled.records.end());

    const auto a = relucert::profile(ri.net, ds);
    const auto b = relucert::profile(ri.net, shuffled);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].activation_frequency == b[i].activation_frequency);
        REQUIRE_THAT(a[i].mean_activation,
                     Catch::Matchers::WithinAbs(b[i].mean_activation, 1e-9));
        for (std::size_t f = 0; f < a[i].feature_correlations.size(); ++f) {
            REQUIRE(a[i].feature_correlations[f].has_value() ==
                    b[i].feature_correlations[f].has_value());
            if (a[i].feature_correlations[f])
                REQUIRE_THAT(*a[i].feature_correlations[f],
                             Catch::Matchers::WithinAbs(*b[i].feature_correlations[f], 1e-9));
        }
    }
}

TEST_CASE("frequency matches a direct recount and correlations stay in range",
          "[neuron_trace]") {
    const testutil::RandomInstance ri = testutil::random_instance(8080, 24);
    Dataset ds;
    for (std::size_t f = 0; f < ri.net.input_dim; ++f)
        ds.feature_names.push_back("f" + std::to_string(f));
    ds.label_names = {"y"};
    relucert::Rng rng(8081);
    for (int i = 0; i < 300; ++i)
        ds.records.push_back({testutil::sample_in_box(ri.box, rng), {0.0}});

    const auto profiles = relucert::profile(ri.net, ds);
    for (const NeuronProfile& p : profiles) {
        std::size_t active = 0;
        for (const auto& r : ds.records) {
            const auto tr = relucert::forward_trace(ri.net, r.features);
            if (tr.post[p.layer][p.index] > 0.0) ++active;
        }
        REQUIRE(p.activation_frequency ==
                static_cast<double>(active) / static_cast<double>(ds.size()));
        for (const auto& c : p.feature_correlations) {
            if (!c) continue;
            REQUIRE(*c >= -1.0);
            REQUIRE(*c <= 1.0);
        }
    }
}

TEST_CASE("constant feature is undefined; ties rank by feature index", "[neuron_trace]") {
    // two identical input columns and one pinned column
    const Network net = make_net(
        3, {make_layer({{1.0, 1.0, 1.0}}, {0.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    Dataset ds;
    ds.feature_names = {"a", "b", "pinned"};
    ds.label_names = {"y"};
    relucert::Rng rng(5);
    for (int i = 0; i < 60; ++i) {
        const double v = rng.uniform(1.0, 2.0);
        ds.records.push_back({{v, v, 7.5}, {0.0}});
    }

    const auto profiles = relucert::profile(net, ds);
    REQUIRE_FALSE(profiles[0].feature_correlations[2].has_value());
    REQUIRE(profiles[0].top_features.size() == 2);
    // equal |corr| for the twin columns: the lower feature index wins
    REQUIRE(profiles[0].top_features[0].first == 0);
    REQUIRE(profiles[0].top_features[1].first == 1);
}

TEST_CASE("profile rejects bad inputs", "[neuron_trace]") {
    const Network net = make_net(
        2, {make_layer({{1.0, 0.0}}, {0.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    Dataset empty;
    empty.feature_names = {"x0", "x1"};
    empty.label_names = {"y"};
    REQUIRE_THROWS_AS(relucert::profile(net, empty), relucert::ValidationError);

    Dataset narrow;
    narrow.feature_names = {"x0"};
    narrow.label_names = {"y"};
    narrow.records.push_back({{1.0}, {0.0}});
    REQUIRE_THROWS_AS(relucert::profile(net, narrow), relucert::ValidationError);
}

TEST_CASE("profile json carries nulls for undefined correlations", "[neuron_trace]") {
    const Network net = make_net(
        1, {make_layer({{-1.0}}, {-5.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    Dataset ds;
    ds.feature_names = {"x0"};
    ds.label_names = {"y"};
    ds.records = {{{0.5}, {0.0}}, {{1.5}, {0.0}}};

    const nlohmann::json doc = relucert::profiles_to_json(relucert::profile(net, ds));
    REQUIRE(doc.is_array());
    REQUIRE(doc[0]["feature_correlations"][0].is_null());
    REQUIRE(doc[0]["activation_frequency"] == 0.0);
    REQUIRE(doc[0]["top_features"].empty());

    const std::string table =
        relucert::profiles_to_table(relucert::profile(net, ds), ds.feature_names);
    REQUIRE(table.find("(none)") != std::string::npos);
}
