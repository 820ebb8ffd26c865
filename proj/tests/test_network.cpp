/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#include <catch2/catch_amalgamated.hpp>

#include "relucert/network.hpp"
#include "util.hpp"

using relucert::Activation;
using relucert::Network;
using testutil::make_layer;
using testutil::make_net;

namespace {

// 2-3-1 fixture shared across the suite; the expected numbers below are
// frozen hand computations on this exact net.
Network fixture_net() {
    return make_net(2, {make_layer({{1.0, 2.0}, {-1.0, 0.5}, {0.25, -1.0}}, {0.5, -0.25, 1.0},
                                   Activation::Relu),
                        make_layer({{1.0, -2.0, 0.5}}, {0.25}, Activation::Linear)});
}

} // namespace

TEST_CASE("forward matches hand computation", "[network]") {
    const Network net = fixture_net();
    relucert::validate_network(net);

    // x = (1.5, -2): pre = (-2, -2.75, 3.375), relu zeroes the first two,
    // output = 0.5 * 3.375 + 0.25
    const std::vector<double> x = {1.5, -2.0};
    const relucert::ForwardTrace trace = relucert::forward_trace(net, x);

    REQUIRE_THAT(trace.pre[0][0], Catch::Matchers::WithinAbs(-2.0, 0.0));
    REQUIRE_THAT(trace.pre[0][1], Catch::Matchers::WithinAbs(-2.75, 0.0));
    REQUIRE_THAT(trace.pre[0][2], Catch::Matchers::WithinAbs(3.375, 0.0));
    REQUIRE(trace.post[0][0] == 0.0);
    REQUIRE(trace.post[0][1] == 0.0);
    REQUIRE(trace.post[0][2] == 3.375);

    const std::vector<double> out = relucert::forward(net, x);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0] == 1.9375);
    REQUIRE(trace.pre.back()[0] == out[0]); // linear output: pre == post
}

TEST_CASE("forward rejects wrong input arity", "[network]") {
    const Network net = fixture_net();
    const std::vector<double> bad = {1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(relucert::forward(net, bad), relucert::ValidationError);
}

TEST_CASE("validation covers the dimension chain", "[network]") {
    SECTION("weight/bias mismatch") {
        Network net = fixture_net();
        net.layers[0].bias.pop_back();
        REQUIRE_THROWS_AS(relucert::validate_network(net), relucert::ValidationError);
    }
    SECTION("fan-in break between layers") {
        Network net = fixture_net();
        net.layers[1].cols = 2;
        net.layers[1].weights.resize(2);
        REQUIRE_THROWS_AS(relucert::validate_network(net), relucert::ValidationError);
    }
    SECTION("non-finite weight") {
        Network net = fixture_net();
        net.layers[0].weights[0] = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(relucert::validate_network(net), relucert::ValidationError);
    }
    SECTION("relu output layer rejected") {
        Network net = fixture_net();
        net.layers[1].activation = Activation::Relu;
        REQUIRE_THROWS_AS(relucert::validate_network(net), relucert::ValidationError);
    }
    SECTION("linear hidden layer rejected") {
        Network net = fixture_net();
        net.layers[0].activation = Activation::Linear;
        REQUIRE_THROWS_AS(relucert::validate_network(net), relucert::ValidationError);
    }
}

TEST_CASE("json round-trip preserves every bit", "[network]") {
    Network net = fixture_net();
    net.metadata["arch"] = "test";
    net.metadata["note"] = "fixture";
    // a value without a short decimal form must still survive
    net.layers[0].weights[3] = 0.1 + 0.2;

    const std::string text = relucert::serialize_network(net);
    const Network back = relucert::parse_network(text);

    REQUIRE(back.input_dim == net.input_dim);
    REQUIRE(back.metadata == net.metadata);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        REQUIRE(back.layers[li].weights == net.layers[li].weights);
        REQUIRE(back.layers[li].bias == net.layers[li].bias);
        REQUIRE(back.layers[li].activation == net.layers[li].activation);
    }
}

TEST_CASE("file round-trip and loader errors", "[network]") {
    const testutil::TempDir dir;
    const Network net = fixture_net();
    const std::string path = dir.file("net.json");
    relucert::save_network(net, path);
    const Network back = relucert::load_network(path);
    REQUIRE(back.layers[0].weights == net.layers[0].weights);

    REQUIRE_THROWS_AS(relucert::load_network(dir.file("missing.json")), relucert::ParseError);

    testutil::write_file(dir.file("junk.json"), "{not json");
    REQUIRE_THROWS_AS(relucert::load_network(dir.file("junk.json")), relucert::ParseError);

    // ragged weight rows are structural, not syntactic
    testutil::write_file(dir.file("ragged.json"),
                         R"({"input_dim": 2, "layers": [
                              {"weights": [[1, 2], [3]], "bias": [0, 0], "activation": "relu"},
                              {"weights": [[1, 1]], "bias": [0], "activation": "linear"}]})");
    REQUIRE_THROWS_AS(relucert::load_network(dir.file("ragged.json")), relucert::ValidationError);

    testutil::write_file(dir.file("badact.json"),
                         R"({"input_dim": 1, "layers": [
                              {"weights": [[1]], "bias": [0], "activation": "tanh"}]})");
    REQUIRE_THROWS_AS(relucert::load_network(dir.file("badact.json")), relucert::ParseError);
}
