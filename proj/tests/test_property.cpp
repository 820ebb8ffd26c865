/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include "relucert/property.hpp"
#include "util.hpp"

using relucert::Activation;
using relucert::InputRegion;
using relucert::Relation;
using relucert::SafetyClaim;
using relucert::Verdict;
using relucert::VerdictStatus;
using testutil::make_layer;
using testutil::make_net;

namespace {

SafetyClaim fixture_claim() {
    SafetyClaim claim;
    claim.name = "sum-capped";
    claim.region.box = {{0.0, 0.0}, {1.0, 2.0}};
    claim.region.linear_constraints.push_back({{1.0, 1.0}, Relation::LessEq, 2.5});
    claim.objective = {1.0};
    claim.threshold = 3.0;
    return claim;
}

} // namespace

TEST_CASE("region membership respects box, rows and tolerance", "[property]") {
    const SafetyClaim claim = fixture_claim();
    REQUIRE(relucert::in_region(claim.region, std::vector<double>{0.5, 1.0}));
    REQUIRE_FALSE(relucert::in_region(claim.region, std::vector<double>{1.5, 1.0}));
    REQUIRE_FALSE(relucert::in_region(claim.region, std::vector<double>{1.0, 2.0})); // row cut
    // within the 1e-7 default tolerance just outside the box
    REQUIRE(relucert::in_region(claim.region, std::vector<double>{1.0 + 5e-8, 1.0}));
    REQUIRE_FALSE(relucert::in_region(claim.region, std::vector<double>{1.0 + 5e-8, 1.0}, 0.0));
}

TEST_CASE("claim document round-trip", "[property]") {
    const SafetyClaim claim = fixture_claim();
    const nlohmann::json doc = relucert::claim_to_json(claim);
    const SafetyClaim back = relucert::claim_from_json(doc);
    REQUIRE(back.name == claim.name);
    REQUIRE(back.region.box.lo == claim.region.box.lo);
    REQUIRE(back.region.box.hi == claim.region.box.hi);
    REQUIRE(back.region.linear_constraints.size() == 1);
    REQUIRE(back.region.linear_constraints[0].coeffs == std::vector<double>{1.0, 1.0});
    REQUIRE(back.region.linear_constraints[0].rel == Relation::LessEq);
    REQUIRE(back.objective == claim.objective);
    REQUIRE(back.threshold == claim.threshold);
}

TEST_CASE("claim parsing reports field paths", "[property]") {
    REQUIRE_THROWS_AS(relucert::parse_claim("{"), relucert::ParseError);
    REQUIRE_THROWS_AS(relucert::parse_claim(R"({"box": {"lo": [0], "hi": [1]}})"),
                      relucert::ParseError); // missing objective

    try {
        relucert::parse_claim(R"({"box": {"lo": [0], "hi": [1]},
                                  "constraints": [{"coeffs": [1], "rel": "<<", "rhs": 0}],
                                  "objective": [1], "threshold": 0})");
        FAIL("expected ParseError");
    } catch (const relucert::ParseError& e) {
        REQUIRE(std::string(e.what()).find("constraints[0].rel") != std::string::npos);
    }
}

TEST_CASE("witness replay demands membership and strict excess", "[property]") {
    // identity-ish single relu: f(x) = relu(x), threshold 0.5 over [0, 1]
    const relucert::Network net = make_net(
        1, {make_layer({{1.0}}, {0.0}, Activation::Relu),
            make_layer({{1.0}}, {0.0}, Activation::Linear)});
    SafetyClaim claim;
    claim.name = "relu-capped";
    claim.region.box = {{0.0}, {1.0}};
    claim.objective = {1.0};
    claim.threshold = 0.5;

    REQUIRE(relucert::replay_witness(net, claim, std::vector<double>{0.75}));
    REQUIRE_FALSE(relucert::replay_witness(net, claim, std::vector<double>{0.5})); // not strict
    REQUIRE_FALSE(relucert::replay_witness(net, claim, std::vector<double>{2.0})); // outside
    const std::vector<double> wrong_arity = {0.75, 0.0};
    REQUIRE_THROWS_AS(relucert::replay_witness(net, claim, wrong_arity),
                      relucert::ValidationError);
}

TEST_CASE("verdict serialization: finite, infinite and witness fields", "[property]") {
    Verdict v;
    v.status = VerdictStatus::Violated;
    v.upper_bound = 3.25;
    v.lower_bound = 3.1;
    v.witness = std::vector<double>{0.9};
    v.stats = {12, 30, 0.25};

    const nlohmann::json j = relucert::verdict_to_json(v);
    REQUIRE(j.at("status") == "violated");
    REQUIRE(j.at("upper_bound").get<double>() == 3.25);
    REQUIRE(j.at("witness").size() == 1);
    REQUIRE(j.at("stats").at("nodes") == 12);

    const Verdict back = relucert::verdict_from_json(j);
    REQUIRE(back.status == v.status);
    REQUIRE(back.upper_bound == v.upper_bound);
    REQUIRE(back.lower_bound == v.lower_bound);
    REQUIRE(back.witness == v.witness);
    REQUIRE(back.stats.lp_solves == 30);

    // empty region: both bounds are infinite and serialize as null
    Verdict empty;
    empty.status = VerdictStatus::RegionEmpty;
    empty.upper_bound = -std::numeric_limits<double>::infinity();
    const nlohmann::json je = relucert::verdict_to_json(empty);
    REQUIRE(je.at("upper_bound").is_null());
    REQUIRE(je.at("lower_bound").is_null());
    REQUIRE(je.at("witness").is_null());
    const Verdict back_empty = relucert::verdict_from_json(je);
    REQUIRE(back_empty.status == VerdictStatus::RegionEmpty);
    REQUIRE(std::isinf(back_empty.lower_bound));
}

TEST_CASE("claim validation against a network", "[property]") {
    const relucert::Network net = make_net(
        2, {make_layer({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0}, Activation::Relu),
            make_layer({{1.0, 1.0}}, {0.0}, Activation::Linear)});

    SafetyClaim claim = fixture_claim();
    relucert::validate_claim(claim, net);

    SafetyClaim bad_obj = claim;
    bad_obj.objective = {1.0, 2.0}; // net has one output
    REQUIRE_THROWS_AS(relucert::validate_claim(bad_obj, net), relucert::ValidationError);

    SafetyClaim bad_box = claim;
    bad_box.region.box.lo.pop_back();
    REQUIRE_THROWS_AS(relucert::validate_claim(bad_box, net), relucert::ValidationError);

    SafetyClaim bad_row = claim;
    bad_row.region.linear_constraints[0].coeffs = {1.0};
    REQUIRE_THROWS_AS(relucert::validate_claim(bad_row, net), relucert::ValidationError);
}
