/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relucert/errors.hpp"

namespace relucert {

struct Record {
    std::vector<double> features;
    std::vector<double> labels;
};

// Labeled tabular data. The training set doubles as the implicit
// behavioral specification, so its integrity is checked before use.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    std::vector<Record> records;

    std::size_t feature_dim() const { return feature_names.size(); }
    std::size_t label_dim() const { return label_names.size(); }
    std::size_t size() const { return records.size(); }
};

inline void validate_dataset_shape(const Dataset& ds) {
    if (ds.feature_names.empty()) throw ValidationError("dataset: no feature columns");
    if (ds.label_names.empty()) throw ValidationError("dataset: no label columns");
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const Record& r = ds.records[i];
        if (r.features.size() != ds.feature_dim() || r.labels.size() != ds.label_dim())
            throw ValidationError("dataset: record " + std::to_string(i) +
                                  " has inconsistent field count");
        for (double v : r.features)
            if (!std::isfinite(v))
                throw ValidationError("dataset: record " + std::to_string(i) +
                                      " has a non-finite feature");
        for (double v : r.labels)
            if (!std::isfinite(v))
                throw ValidationError("dataset: record " + std::to_string(i) +
                                      " has a non-finite label");
    }
}

// One conjunct of an unsafe pattern: a non-strict threshold on a single
// feature or label column. Non-strict comparisons keep the flagged set
// closed, matching the polyhedral claim language.
struct PatternAtom {
    enum class Target { Feature, Label };
    enum class Rel { LessEq, GreaterEq };
    Target target = Target::Feature;
    std::size_t index = 0;
    Rel rel = Rel::LessEq;
    double bound = 0.0;
};

// A record is flagged iff ALL atoms hold (conjunction). Disjunction is
// expressed by listing several patterns.
struct UnsafePattern {
    std::string name;
    std::vector<PatternAtom> conjuncts;
};

inline void validate_pattern(const UnsafePattern& p, const Dataset& ds) {
    if (p.name.empty()) throw ValidationError("pattern: empty name");
    if (p.conjuncts.empty()) throw ValidationError("pattern '" + p.name + "': no conjuncts");
    for (const PatternAtom& a : p.conjuncts) {
        const std::size_t dim =
            a.target == PatternAtom::Target::Feature ? ds.feature_dim() : ds.label_dim();
        if (a.index >= dim)
            throw ValidationError("pattern '" + p.name + "': column index " +
                                  std::to_string(a.index) + " out of range");
        if (!std::isfinite(a.bound))
            throw ValidationError("pattern '" + p.name + "': non-finite bound");
    }
}

inline bool matches(const UnsafePattern& p, const Record& r) {
    for (const PatternAtom& a : p.conjuncts) {
        const double v =
            a.target == PatternAtom::Target::Feature ? r.features[a.index] : r.labels[a.index];
        const bool hold = a.rel == PatternAtom::Rel::LessEq ? v <= a.bound : v >= a.bound;
        if (!hold) return false;
    }
    return true;
}

struct PatternHits {
    std::string name;
    std::vector<std::size_t> indices; // ascending record indices
};

struct ValidationReport {
    std::vector<PatternHits> per_pattern; // one entry per input pattern, same order
    std::size_t total_flagged = 0;        // distinct records flagged by any pattern
};

// Scans every record against every pattern. Indices are reported in
// ascending record order per pattern.
inline ValidationReport validate_dataset(const Dataset& ds,
                                         const std::vector<UnsafePattern>& patterns) {
    validate_dataset_shape(ds);
    for (const auto& p : patterns) validate_pattern(p, ds);
    for (std::size_t i = 0; i < patterns.size(); ++i)
        for (std::size_t j = i + 1; j < patterns.size(); ++j)
            if (patterns[i].name == patterns[j].name)
                throw ValidationError("duplicate pattern name '" + patterns[i].name + "'");

    ValidationReport report;
    report.per_pattern.resize(patterns.size());
    std::vector<bool> flagged(ds.size(), false);
    for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
        report.per_pattern[pi].name = patterns[pi].name;
        for (std::size_t ri = 0; ri < ds.size(); ++ri) {
            if (!matches(patterns[pi], ds.records[ri])) continue;
            report.per_pattern[pi].indices.push_back(ri);
            flagged[ri] = true;
        }
    }
    for (bool f : flagged) report.total_flagged += f ? 1 : 0;
    return report;
}

// Copy of ds with every flagged record removed; survivor order preserved.
inline Dataset sanitize(const Dataset& ds, const std::vector<UnsafePattern>& patterns) {
    const ValidationReport report = validate_dataset(ds, patterns);
    std::vector<bool> drop(ds.size(), false);
    for (const PatternHits& hits : report.per_pattern)
        for (std::size_t idx : hits.indices) drop[idx] = true;

    Dataset out;
    out.feature_names = ds.feature_names;
    out.label_names = ds.label_names;
    out.records.reserve(ds.size() - report.total_flagged);
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!drop[i]) out.records.push_back(ds.records[i]);
    return out;
}

namespace csv_detail {

inline std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw NumericalError("csv: cannot format value");
    return std::string(buf, end);
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" +
                         std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace csv_detail

// Header row uses "f:" and "l:" prefixes to mark feature and label
// columns; all feature columns precede all label columns.
inline Dataset dataset_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    Dataset ds;
    bool seen_label = false;
    for (std::string_view col : csv_detail::split(line)) {
        if (col.substr(0, 2) == "f:") {
            if (seen_label) throw ParseError("csv header: feature column after label column");
            ds.feature_names.emplace_back(col.substr(2));
        } else if (col.substr(0, 2) == "l:") {
            seen_label = true;
            ds.label_names.emplace_back(col.substr(2));
        } else {
            throw ParseError("csv header: column '" + std::string(col) +
                             "' lacks an f: or l: prefix");
        }
    }
    if (ds.feature_names.empty() || ds.label_names.empty())
        throw ParseError("csv header: need at least one feature and one label column");

    const std::size_t width = ds.feature_dim() + ds.label_dim();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue; // tolerate a trailing blank line
        const auto cells = csv_detail::split(line);
        if (cells.size() != width)
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(width) + " fields, got " +
                             std::to_string(cells.size()));
        Record r;
        r.features.reserve(ds.feature_dim());
        r.labels.reserve(ds.label_dim());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double v = csv_detail::parse_double(cells[i], line_no);
            if (i < ds.feature_dim())
                r.features.push_back(v);
            else
                r.labels.push_back(v);
        }
        ds.records.push_back(std::move(r));
    }
    validate_dataset_shape(ds);
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file: " + path);
    return dataset_from_csv(in);
}

inline void dataset_to_csv(const Dataset& ds, std::ostream& out) {
    validate_dataset_shape(ds);
    bool first = true;
    for (const std::string& n : ds.feature_names) {
        out << (first ? "" : ",") << "f:" << n;
        first = false;
    }
    for (const std::string& n : ds.label_names) out << ",l:" << n;
    out << '\n';
    for (const Record& r : ds.records) {
        first = true;
        for (double v : r.features) {
            out << (first ? "" : ",") << csv_detail::format_double(v);
            first = false;
        }
        for (double v : r.labels) out << ',' << csv_detail::format_double(v);
        out << '\n';
    }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open dataset file for writing: " + path);
    dataset_to_csv(ds, out);
    if (!out) throw ParseError("write failed: " + path);
}

namespace pattern_detail {

inline PatternAtom atom_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": conjunct must be an object");
    PatternAtom a;
    const std::string target = j.at("target").get<std::string>();
    if (target == "feature")
        a.target = PatternAtom::Target::Feature;
    else if (target == "label")
        a.target = PatternAtom::Target::Label;
    else
        throw ParseError(where + ": target must be 'feature' or 'label'");
    a.index = j.at("index").get<std::size_t>();
    const std::string rel = j.at("rel").get<std::string>();
    if (rel == "<=")
        a.rel = PatternAtom::Rel::LessEq;
    else if (rel == ">=")
        a.rel = PatternAtom::Rel::GreaterEq;
    else
        throw ParseError(where + ": rel must be '<=' or '>='");
    a.bound = j.at("bound").get<double>();
    return a;
}

} // namespace pattern_detail

inline std::vector<UnsafePattern> patterns_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("patterns: document must be a JSON array");
    std::vector<UnsafePattern> out;
    for (std::size_t pi = 0; pi < j.size(); ++pi) {
        const nlohmann::json& pj = j[pi];
        const std::string where = "patterns[" + std::to_string(pi) + "]";
        if (!pj.is_object()) throw ParseError(where + ": must be an object");
        UnsafePattern p;
        p.name = pj.at("name").get<std::string>();
        const nlohmann::json& cj = pj.at("conjuncts");
        if (!cj.is_array() || cj.empty())
            throw ParseError(where + ": conjuncts must be a nonempty array");
        for (std::size_t ci = 0; ci < cj.size(); ++ci)
            p.conjuncts.push_back(pattern_detail::atom_from_json(
                cj[ci], where + ".conjuncts[" + std::to_string(ci) + "]"));
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<UnsafePattern> parse_patterns(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("patterns: invalid JSON: ") + e.what());
    }
    try {
        return patterns_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("patterns: ") + e.what());
    }
}

inline std::vector<UnsafePattern> load_patterns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open patterns file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_patterns(buf.str());
}

inline nlohmann::json patterns_to_json(const std::vector<UnsafePattern>& patterns) {
    nlohmann::json out = nlohmann::json::array();
    for (const UnsafePattern& p : patterns) {
        nlohmann::json pj;
        pj["name"] = p.name;
        pj["conjuncts"] = nlohmann::json::array();
        for (const PatternAtom& a : p.conjuncts) {
            nlohmann::json aj;
            aj["target"] = a.target == PatternAtom::Target::Feature ? "feature" : "label";
            aj["index"] = a.index;
            aj["rel"] = a.rel == PatternAtom::Rel::LessEq ? "<=" : ">=";
            aj["bound"] = a.bound;
            pj["conjuncts"].push_back(std::move(aj));
        }
        out.push_back(std::move(pj));
    }
    return out;
}

// Report document: {pattern name -> {count, indices}}.
inline nlohmann::json report_to_json(const ValidationReport& report) {
    nlohmann::json out = nlohmann::json::object();
    for (const PatternHits& hits : report.per_pattern) {
        nlohmann::json entry;
        entry["count"] = hits.indices.size();
        entry["indices"] = hits.indices;
        out[hits.name] = std::move(entry);
    }
    return out;
}

} // namespace relucert
