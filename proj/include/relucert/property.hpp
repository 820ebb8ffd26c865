/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relucert/bounds.hpp"
#include "relucert/errors.hpp"
#include "relucert/lp.hpp"
#include "relucert/network.hpp"

namespace relucert {

// Polyhedral input region: interval box plus optional linear rows over
// the inputs. Emptiness is not an invariant; it is a detectable verdict.
struct InputRegion {
    InputBox box;
    std::vector<LinearConstraint> linear_constraints;
};

inline void validate_region(const InputRegion& region, std::size_t input_dim) {
    validate_box(region.box, input_dim);
    for (std::size_t i = 0; i < region.linear_constraints.size(); ++i)
        if (region.linear_constraints[i].coeffs.size() != input_dim)
            throw ValidationError("region: constraints[" + std::to_string(i) +
                                  "].coeffs length != input_dim");
}

constexpr double kRegionTol = 1e-7;

inline bool in_region(const InputRegion& region, std::span<const double> x,
                      double tol = kRegionTol) {
    for (std::size_t i = 0; i < region.box.dim(); ++i)
        if (x[i] < region.box.lo[i] - tol || x[i] > region.box.hi[i] + tol) return false;
    for (const auto& row : region.linear_constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < row.coeffs.size(); ++j) lhs += row.coeffs[j] * x[j];
        switch (row.rel) {
            case Relation::LessEq:
                if (lhs > row.rhs + tol) return false;
                break;
            case Relation::GreaterEq:
                if (lhs < row.rhs - tol) return false;
                break;
            case Relation::Equal:
                if (std::fabs(lhs - row.rhs) > tol) return false;
                break;
        }
    }
    return true;
}

// Canonical safety claim: max over the region of objective·f(x) <= threshold.
// Min / >= claims are written by negating the objective.
struct SafetyClaim {
    std::string name;
    InputRegion region;
    std::vector<double> objective;
    double threshold = 0.0;
};

inline void validate_claim(const SafetyClaim& claim, const Network& net) {
    validate_region(claim.region, net.input_dim);
    if (claim.objective.size() != net.output_dim())
        throw ValidationError("claim: objective length " + std::to_string(claim.objective.size()) +
                              " != output count " + std::to_string(net.output_dim()));
    if (!std::isfinite(claim.threshold))
        throw ValidationError("claim: non-finite threshold");
}

enum class VerdictStatus { Proved, Violated, Unknown, RegionEmpty };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Proved: return "proved";
        case VerdictStatus::Violated: return "violated";
        case VerdictStatus::Unknown: return "unknown";
        default: return "region_empty";
    }
}

struct SolveStats {
    std::size_t nodes = 0;
    std::size_t lp_solves = 0;
    double time_s = 0.0;
};

struct Verdict {
    VerdictStatus status = VerdictStatus::Unknown;
    double upper_bound = std::numeric_limits<double>::infinity();
    double lower_bound = -std::numeric_limits<double>::infinity();
    std::optional<std::vector<double>> witness;
    SolveStats stats;
};

// True iff x lies in the claim region (within 1e-7) and its exact
// forward value strictly exceeds the threshold. Every violated verdict
// is validated through this before being reported.
inline bool replay_witness(const Network& net, const SafetyClaim& claim,
                           std::span<const double> x) {
    if (x.size() != net.input_dim)
        throw ValidationError("replay: witness length != input_dim");
    if (!in_region(claim.region, x)) return false;
    const std::vector<double> out = forward(net, x);
    double value = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) value += claim.objective[k] * out[k];
    return value > claim.threshold;
}

// --- serialization ---------------------------------------------------------

namespace detail {

inline Relation relation_from_string(const std::string& s, const std::string& path) {
    if (s == "<=") return Relation::LessEq;
    if (s == "=") return Relation::Equal;
    if (s == ">=") return Relation::GreaterEq;
    throw ParseError(path + ": unknown relation \"" + s + "\"");
}

inline std::vector<LinearConstraint> constraints_from_json(const nlohmann::json& arr,
                                                           const std::string& path) {
    std::vector<LinearConstraint> rows;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = path + "[" + std::to_string(i) + "]";
        const auto& jc = arr[i];
        LinearConstraint row;
        if (!jc.contains("coeffs")) throw ParseError(at + ".coeffs: missing");
        row.coeffs = jc.at("coeffs").get<std::vector<double>>();
        row.rel = relation_from_string(jc.at("rel").get<std::string>(), at + ".rel");
        row.rhs = jc.at("rhs").get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json constraints_to_json(const std::vector<LinearConstraint>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows)
        arr.push_back(
            {{"coeffs", row.coeffs}, {"rel", to_string(row.rel)}, {"rhs", row.rhs}});
    return arr;
}

} // namespace detail

inline InputRegion region_from_json(const nlohmann::json& doc) {
    InputRegion region;
    try {
        region.box.lo = doc.at("box").at("lo").get<std::vector<double>>();
        region.box.hi = doc.at("box").at("hi").get<std::vector<double>>();
        if (doc.contains("constraints"))
            region.linear_constraints =
                detail::constraints_from_json(doc.at("constraints"), "constraints");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("region: ") + e.what());
    }
    if (region.box.lo.size() != region.box.hi.size())
        throw ValidationError("box: lo and hi lengths differ");
    return region;
}

inline SafetyClaim claim_from_json(const nlohmann::json& doc) {
    SafetyClaim claim;
    claim.region = region_from_json(doc);
    try {
        claim.name = doc.value("name", std::string("unnamed"));
        claim.objective = doc.at("objective").get<std::vector<double>>();
        claim.threshold = doc.at("threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("claim: ") + e.what());
    }
    return claim;
}

inline SafetyClaim parse_claim(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError("claim: malformed JSON");
    return claim_from_json(doc);
}

inline nlohmann::json claim_to_json(const SafetyClaim& claim) {
    return {{"name", claim.name},
            {"box", {{"lo", claim.region.box.lo}, {"hi", claim.region.box.hi}}},
            {"constraints", detail::constraints_to_json(claim.region.linear_constraints)},
            {"objective", claim.objective},
            {"threshold", claim.threshold}};
}

// Non-finite bounds (a region with no points has max = -inf) serialize
// as null.
inline nlohmann::json verdict_to_json(const Verdict& v) {
    nlohmann::json j;
    j["status"] = to_string(v.status);
    j["upper_bound"] =
        std::isfinite(v.upper_bound) ? nlohmann::json(v.upper_bound) : nlohmann::json();
    j["lower_bound"] =
        std::isfinite(v.lower_bound) ? nlohmann::json(v.lower_bound) : nlohmann::json();
    j["witness"] = v.witness ? nlohmann::json(*v.witness) : nlohmann::json();
    j["stats"] = {{"nodes", v.stats.nodes},
                  {"lp_solves", v.stats.lp_solves},
                  {"time_s", v.stats.time_s}};
    return j;
}

inline Verdict verdict_from_json(const nlohmann::json& j) {
    Verdict v;
    try {
        const std::string status = j.at("status").get<std::string>();
        if (status == "proved") v.status = VerdictStatus::Proved;
        else if (status == "violated") v.status = VerdictStatus::Violated;
        else if (status == "unknown") v.status = VerdictStatus::Unknown;
        else if (status == "region_empty") v.status = VerdictStatus::RegionEmpty;
        else throw ParseError("verdict.status: unknown value \"" + status + "\"");
        v.upper_bound = j.at("upper_bound").is_null()
                            ? -std::numeric_limits<double>::infinity()
                            : j.at("upper_bound").get<double>();
        v.lower_bound = j.at("lower_bound").is_null()
                            ? -std::numeric_limits<double>::infinity()
                            : j.at("lower_bound").get<double>();
        if (!j.at("witness").is_null())
            v.witness = j.at("witness").get<std::vector<double>>();
        v.stats.nodes = j.at("stats").at("nodes").get<std::size_t>();
        v.stats.lp_solves = j.at("stats").at("lp_solves").get<std::size_t>();
        v.stats.time_s = j.at("stats").at("time_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("verdict: ") + e.what());
    }
    return v;
}

} // namespace relucert
