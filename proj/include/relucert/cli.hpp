/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relucert/data_guard.hpp"
#include "relucert/errors.hpp"
#include "relucert/milp.hpp"
#include "relucert/network.hpp"
#include "relucert/neuron_trace.hpp"
#include "relucert/property.hpp"
#include "relucert/scenario.hpp"

namespace relucert {

// Process exit codes. Verification outcomes map onto 0..2; an empty
// region proves the claim vacuously and also exits 0.
enum ExitCode : int {
    kExitProved = 0,
    kExitViolated = 1,
    kExitUnknown = 2,
    kExitError = 3,
    kExitUsage = 4,
};

namespace cli_detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::vector<double> parse_objective(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i != text.size() && text[i] != ',') continue;
        const std::string tok = text.substr(start, i - start);
        start = i + 1;
        double v = 0.0;
        const char* first = tok.c_str();
        auto [ptr, ec] = std::from_chars(first, first + tok.size(), v);
        if (ec != std::errc{} || ptr != first + tok.size())
            throw ParseError("objective: bad number '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ParseError("objective: empty list");
    return out;
}

// RELUCERT_THREADS selects the parallel-mode worker count; unset means 1.
inline std::size_t worker_count_from_env() {
    const char* raw = std::getenv("RELUCERT_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    unsigned long v = 0;
    const std::string text(raw);
    auto [ptr, ec] = std::from_chars(text.c_str(), text.c_str() + text.size(), v);
    if (ec != std::errc{} || ptr != text.c_str() + text.size() || v == 0)
        throw ValidationError("RELUCERT_THREADS must be a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

struct SolverFlags {
    double timeout_s = 600.0;
    double gap = 1e-6;
    std::string mode = "deterministic";

    void attach(CLI::App& cmd) {
        cmd.add_option("--timeout", timeout_s, "search time limit in seconds")
            ->capture_default_str();
        cmd.add_option("--gap", gap, "absolute optimality gap")->capture_default_str();
        cmd.add_option("--mode", mode, "deterministic or parallel")
            ->check(CLI::IsMember({"deterministic", "parallel"}))
            ->capture_default_str();
    }

    MaximizeOptions options() const {
        MaximizeOptions opt;
        opt.timeout_s = timeout_s;
        opt.gap = gap;
        if (mode == "parallel") {
            opt.mode = SearchMode::Parallel;
            opt.workers = worker_count_from_env();
        }
        return opt;
    }

    void echo(nlohmann::json& config) const {
        config["timeout_s"] = timeout_s;
        config["gap"] = gap;
        config["mode"] = mode;
        config["workers"] = mode == "parallel" ? worker_count_from_env() : std::size_t{1};
    }
};

inline void emit(const nlohmann::json& doc, const std::string& output_path) {
    const std::string text = doc.dump(2);
    if (!output_path.empty()) {
        std::ofstream out(output_path);
        if (!out) throw ParseError("cannot open output file: " + output_path);
        out << text << '\n';
        if (!out) throw ParseError("write failed: " + output_path);
    }
    std::cout << text << '\n';
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": config must be an object");
    TrainConfig cfg;
    cfg.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    cfg.width = j.at("width").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    return cfg;
}

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{{"hidden_layers", cfg.hidden_layers}, {"width", cfg.width},
                          {"seed", cfg.seed},                   {"epochs", cfg.epochs},
                          {"batch_size", cfg.batch_size},       {"learning_rate", cfg.learning_rate}};
}

inline std::vector<TrainConfig> train_configs_from_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("configs: invalid JSON: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("configs: document must be a JSON array");
    std::vector<TrainConfig> out;
    try {
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(train_config_from_json(j[i], "configs[" + std::to_string(i) + "]"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("configs: ") + e.what());
    }
    return out;
}

inline int exit_code_of(VerdictStatus s) {
    switch (s) {
    case VerdictStatus::Proved: return kExitProved;
    case VerdictStatus::Violated: return kExitViolated;
    case VerdictStatus::Unknown: return kExitUnknown;
    case VerdictStatus::RegionEmpty: return kExitProved; // vacuously safe
    }
    return kExitError;
}

} // namespace cli_detail

// Entry point behind main(); returns the process exit code. Every
// subcommand prints exactly one JSON document on standard out (unless
// --pretty selects the human rendering) and echoes its resolved
// configuration for audit.
inline int run_cli(int argc, const char* const* argv) {
    using cli_detail::emit;
    using nlohmann::json;

    CLI::App app{"relucert: safety verification for feed-forward ReLU networks"};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "check a safety claim against a network");
    std::string verify_net, verify_claim, verify_out;
    cli_detail::SolverFlags verify_flags;
    verify->add_option("--network", verify_net, "network JSON file")->required();
    verify->add_option("--claim", verify_claim, "claim JSON file")->required();
    verify->add_option("--output", verify_out, "also write the document to this path");
    verify_flags.attach(*verify);

    // maximize
    auto* maxi = app.add_subcommand("maximize", "bound a linear objective over a region");
    std::string maxi_net, maxi_region, maxi_objective, maxi_out;
    cli_detail::SolverFlags maxi_flags;
    maxi->add_option("--network", maxi_net, "network JSON file")->required();
    maxi->add_option("--region", maxi_region, "region JSON file")->required();
    maxi->add_option("--objective", maxi_objective, "comma-separated output coefficients")
        ->required();
    maxi->add_option("--output", maxi_out, "also write the document to this path");
    maxi_flags.attach(*maxi);

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exhaustive phase-enumeration cross-check");
    std::string oracle_net, oracle_region, oracle_objective, oracle_out;
    oracle->add_option("--network", oracle_net, "network JSON file")->required();
    oracle->add_option("--region", oracle_region, "region JSON file")->required();
    oracle->add_option("--objective", oracle_objective, "comma-separated output coefficients")
        ->required();
    oracle->add_option("--output", oracle_out, "also write the document to this path");

    // validate-data
    auto* vdata = app.add_subcommand("validate-data", "scan a dataset for unsafe patterns");
    std::string vdata_data, vdata_patterns, vdata_out;
    vdata->add_option("--data", vdata_data, "dataset CSV file")->required();
    vdata->add_option("--patterns", vdata_patterns, "patterns JSON file")->required();
    vdata->add_option("--output", vdata_out, "also write the report to this path");

    // sanitize
    auto* san = app.add_subcommand("sanitize", "drop records matching unsafe patterns");
    std::string san_data, san_patterns, san_out;
    san->add_option("--data", san_data, "dataset CSV file")->required();
    san->add_option("--patterns", san_patterns, "patterns JSON file")->required();
    san->add_option("--output", san_out, "sanitized dataset CSV path")->required();

    // profile
    auto* prof = app.add_subcommand("profile", "neuron-to-feature traceability report");
    std::string prof_net, prof_data, prof_out;
    std::size_t prof_top = 3;
    bool prof_pretty = false;
    prof->add_option("--network", prof_net, "network JSON file")->required();
    prof->add_option("--data", prof_data, "dataset CSV file")->required();
    prof->add_option("--top", prof_top, "top feature count per neuron")->capture_default_str();
    prof->add_option("--output", prof_out, "also write the document to this path");
    prof->add_flag("--pretty", prof_pretty, "print a human-readable table instead of JSON");

    // gen
    auto* gen = app.add_subcommand("gen", "generate synthetic highway scenarios");
    std::size_t gen_count = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--count", gen_count, "number of records")->required();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--output", gen_out, "dataset CSV path")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a network on a dataset");
    std::string tr_data, tr_out;
    TrainConfig tr_cfg;
    tr->add_option("--data", tr_data, "dataset CSV file")->required();
    tr->add_option("--hidden", tr_cfg.hidden_layers, "hidden layer count")->capture_default_str();
    tr->add_option("--width", tr_cfg.width, "hidden layer width")->capture_default_str();
    tr->add_option("--seed", tr_cfg.seed, "training seed")->capture_default_str();
    tr->add_option("--epochs", tr_cfg.epochs, "training epochs")->capture_default_str();
    tr->add_option("--batch", tr_cfg.batch_size, "minibatch size")->capture_default_str();
    tr->add_option("--lr", tr_cfg.learning_rate, "learning rate")->capture_default_str();
    tr->add_option("--output", tr_out, "network JSON path")->required();

    // bench
    auto* bn = app.add_subcommand("bench", "train several networks and verify one claim");
    std::string bn_data, bn_configs, bn_claim, bn_out;
    bool bn_pretty = false;
    cli_detail::SolverFlags bn_flags;
    bn->add_option("--data", bn_data, "sanitized dataset CSV file")->required();
    bn->add_option("--configs", bn_configs, "training configs JSON file")->required();
    bn->add_option("--claim", bn_claim, "claim JSON file")->required();
    bn->add_option("--output", bn_out, "also write the document to this path");
    bn->add_flag("--pretty", bn_pretty, "print the text table instead of JSON");
    bn_flags.attach(*bn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*verify) {
            const Network net = load_network(verify_net);
            const SafetyClaim claim = parse_claim(cli_detail::read_file(verify_claim));
            const MaximizeOptions opt = verify_flags.options();
            const Verdict v = check_claim(net, claim, opt);
            json doc;
            doc["config"] = {{"subcommand", "verify"},
                             {"network", verify_net},
                             {"claim", verify_claim},
                             {"claim_name", claim.name}};
            verify_flags.echo(doc["config"]);
            doc["verdict"] = verdict_to_json(v);
            emit(doc, verify_out);
            return cli_detail::exit_code_of(v.status);
        }

        if (*maxi) {
            const Network net = load_network(maxi_net);
            const json region_doc = json::parse(cli_detail::read_file(maxi_region));
            const InputRegion region = region_from_json(region_doc);
            const std::vector<double> objective = cli_detail::parse_objective(maxi_objective);
            const MaximizeOptions opt = maxi_flags.options();
            const MaximizeResult res = maximize(net, region, objective, opt);
            json doc;
            doc["config"] = {{"subcommand", "maximize"},
                             {"network", maxi_net},
                             {"region", maxi_region},
                             {"objective", objective}};
            maxi_flags.echo(doc["config"]);
            doc["region_empty"] = res.region_empty;
            doc["gap_closed"] = res.gap_closed;
            doc["upper_bound"] = std::isfinite(res.upper) ? json(res.upper) : json(nullptr);
            doc["lower_bound"] = std::isfinite(res.lower) ? json(res.lower) : json(nullptr);
            doc["best_input"] = res.best_input ? json(*res.best_input) : json(nullptr);
            doc["stats"] = {{"nodes", res.stats.nodes},
                            {"lp_solves", res.stats.lp_solves},
                            {"time_s", res.stats.time_s}};
            emit(doc, maxi_out);
            return kExitProved;
        }

        if (*oracle) {
            const Network net = load_network(oracle_net);
            const json region_doc = json::parse(cli_detail::read_file(oracle_region));
            const InputRegion region = region_from_json(region_doc);
            const std::vector<double> objective = cli_detail::parse_objective(oracle_objective);
            const double value = enumerate_phases(net, region, objective);
            json doc;
            doc["config"] = {{"subcommand", "oracle"},
                             {"network", oracle_net},
                             {"region", oracle_region},
                             {"objective", objective}};
            doc["value"] = std::isfinite(value) ? json(value) : json(nullptr);
            doc["feasible"] = std::isfinite(value);
            emit(doc, oracle_out);
            return kExitProved;
        }

        if (*vdata) {
            const Dataset ds = load_dataset(vdata_data);
            const std::vector<UnsafePattern> patterns = load_patterns(vdata_patterns);
            const ValidationReport report = validate_dataset(ds, patterns);
            json doc;
            doc["config"] = {{"subcommand", "validate-data"},
                             {"data", vdata_data},
                             {"patterns", vdata_patterns},
                             {"records", ds.size()}};
            doc["report"] = report_to_json(report);
            doc["total_flagged"] = report.total_flagged;
            emit(doc, vdata_out);
            return report.total_flagged == 0 ? kExitProved : kExitViolated;
        }

        if (*san) {
            const Dataset ds = load_dataset(san_data);
            const std::vector<UnsafePattern> patterns = load_patterns(san_patterns);
            const Dataset clean = sanitize(ds, patterns);
            save_dataset(clean, san_out);
            json doc;
            doc["config"] = {{"subcommand", "sanitize"},
                             {"data", san_data},
                             {"patterns", san_patterns},
                             {"output", san_out}};
            doc["removed"] = ds.size() - clean.size();
            doc["remaining"] = clean.size();
            emit(doc, "");
            return kExitProved;
        }

        if (*prof) {
            const Network net = load_network(prof_net);
            const Dataset ds = load_dataset(prof_data);
            const std::vector<NeuronProfile> profiles = profile(net, ds, prof_top);
            json doc;
            doc["config"] = {{"subcommand", "profile"},
                             {"network", prof_net},
                             {"data", prof_data},
                             {"top", prof_top},
                             {"records", ds.size()}};
            doc["profiles"] = profiles_to_json(profiles);
            if (prof_pretty) {
                std::cout << profiles_to_table(profiles, ds.feature_names);
                if (!prof_out.empty()) {
                    std::ofstream out(prof_out);
                    if (!out) throw ParseError("cannot open output file: " + prof_out);
                    out << doc.dump(2) << '\n';
                }
            } else {
                emit(doc, prof_out);
            }
            return kExitProved;
        }

        if (*gen) {
            ScenarioParams params;
            params.n_records = gen_count;
            params.seed = gen_seed;
            const Dataset ds = generate_scenarios(params);
            save_dataset(ds, gen_out);
            json doc;
            doc["config"] = {{"subcommand", "gen"},
                             {"count", gen_count},
                             {"seed", gen_seed},
                             {"output", gen_out}};
            doc["records"] = ds.size();
            emit(doc, "");
            return kExitProved;
        }

        if (*tr) {
            const Dataset ds = load_dataset(tr_data);
            const Network net = train(ds, tr_cfg);
            save_network(net, tr_out);
            json doc;
            doc["config"] = {{"subcommand", "train"}, {"data", tr_data}, {"output", tr_out}};
            doc["config"]["train"] = cli_detail::train_config_to_json(tr_cfg);
            doc["final_mse"] = std::strtod(net.metadata.at("final_mse").c_str(), nullptr);
            doc["arch"] = net.metadata.at("arch");
            emit(doc, "");
            return kExitProved;
        }

        if (*bn) {
            const Dataset ds = load_dataset(bn_data);
            const std::vector<TrainConfig> configs =
                cli_detail::train_configs_from_file(bn_configs);
            const SafetyClaim claim = parse_claim(cli_detail::read_file(bn_claim));
            const MaximizeOptions opt = bn_flags.options();
            const BenchReport report = bench(ds, configs, claim, opt);
            json doc;
            doc["config"] = {{"subcommand", "bench"},
                             {"data", bn_data},
                             {"configs", bn_configs},
                             {"claim", bn_claim},
                             {"claim_name", claim.name}};
            bn_flags.echo(doc["config"]);
            json cfgs = json::array();
            for (const TrainConfig& cfg : configs)
                cfgs.push_back(cli_detail::train_config_to_json(cfg));
            doc["config"]["train_configs"] = std::move(cfgs);
            doc["bench"] = bench_to_json(report);
            if (bn_pretty) {
                std::cout << bench_to_table(report);
                if (!bn_out.empty()) {
                    std::ofstream out(bn_out);
                    if (!out) throw ParseError("cannot open output file: " + bn_out);
                    out << doc.dump(2) << '\n';
                }
            } else {
                emit(doc, bn_out);
            }
            return kExitProved;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid document: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }

    std::cerr << "usage error: no subcommand\n";
    return kExitUsage;
}

} // namespace relucert
