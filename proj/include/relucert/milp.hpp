/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "relucert/bounds.hpp"
#include "relucert/errors.hpp"
#include "relucert/lp.hpp"
#include "relucert/network.hpp"
#include "relucert/property.hpp"

namespace relucert {

// Role of one MILP variable, for reports and debugging.
struct MilpVar {
    enum class Kind { Input, Pre, Post, Output, Phase };
    Kind kind = Kind::Input;
    NeuronRef neuron; // (layer, index); layer == hidden count for outputs
};

// Big-M encoding of the network over a region. Integer-feasible points
// are exactly the graph of the forward pass restricted to the region:
// x variables first, then per hidden layer its pre-activations t and
// post-activations y, then the outputs, then one binary per crossing
// neuron.
struct MilpSystem {
    std::vector<double> lower, upper;
    std::vector<LinearConstraint> rows;
    std::vector<double> objective;
    std::vector<MilpVar> vars; // provenance, one entry per variable

    struct Binary {
        std::size_t var = 0;
        NeuronRef neuron;
    };
    std::vector<Binary> binaries;

    std::size_t num_vars() const { return lower.size(); }

    LinearProgram relaxation() const {
        LinearProgram lp;
        lp.objective = objective;
        lp.constraints = rows;
        lp.lower = lower;
        lp.upper = upper;
        return lp;
    }
};

namespace milp_detail {

struct VarLayout {
    std::size_t input_dim = 0;
    std::vector<std::size_t> pre_base, post_base; // per hidden layer
    std::size_t output_base = 0;
    std::size_t total = 0;

    explicit VarLayout(const Network& net) {
        input_dim = net.input_dim;
        std::size_t next = input_dim;
        for (std::size_t li = 0; li + 1 < net.layers.size(); ++li) {
            pre_base.push_back(next);
            next += net.layers[li].rows;
            post_base.push_back(next);
            next += net.layers[li].rows;
        }
        output_base = next;
        total = next + net.layers.back().rows;
    }

    std::size_t input(std::size_t i) const { return i; }
    std::size_t pre(std::size_t l, std::size_t i) const { return pre_base[l] + i; }
    std::size_t post(std::size_t l, std::size_t i) const { return post_base[l] + i; }
    std::size_t output(std::size_t k) const { return output_base + k; }
};

// Affine equality rows shared by the big-M encoding and the oracle:
//   t_{l,i} - W·in = b  and  o_k - W·y = b
inline void append_affine_rows(const Network& net, const VarLayout& layout,
                               std::size_t n_total, std::vector<LinearConstraint>& rows) {
    const std::size_t hidden = net.hidden_layer_count();
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& layer = net.layers[li];
        const bool is_output = li == hidden;
        for (std::size_t r = 0; r < layer.rows; ++r) {
            LinearConstraint row;
            row.coeffs.assign(n_total, 0.0);
            row.rel = Relation::Equal;
            row.rhs = layer.bias[r];
            row.coeffs[is_output ? layout.output(r) : layout.pre(li, r)] = 1.0;
            for (std::size_t c = 0; c < layer.cols; ++c) {
                const std::size_t in_var = li == 0 ? layout.input(c) : layout.post(li - 1, c);
                row.coeffs[in_var] = -layer.weight(r, c);
            }
            rows.push_back(std::move(row));
        }
    }
}

inline void append_region_rows(const InputRegion& region, std::size_t n_total,
                               std::vector<LinearConstraint>& rows) {
    for (const auto& rc : region.linear_constraints) {
        LinearConstraint row;
        row.coeffs.assign(n_total, 0.0);
        for (std::size_t j = 0; j < rc.coeffs.size(); ++j) row.coeffs[j] = rc.coeffs[j];
        row.rel = rc.rel;
        row.rhs = rc.rhs;
        rows.push_back(std::move(row));
    }
}

} // namespace milp_detail

// Big-M MILP encoding. `bounds` must have been propagated over
// region.box (with `fixings` applied for branch-and-bound nodes).
// Per crossing neuron with pre-activation bounds L < 0 < U the four
// rows  y >= 0,  y >= t,  y <= U·d,  y <= t - L·(1-d)  are emitted;
// stable neurons contribute y = t or y = 0 with no binary.
inline MilpSystem encode(const Network& net, const InputRegion& region,
                         const std::vector<LayerBounds>& bounds,
                         const PhaseFixings& fixings = {}) {
    validate_region(region, net.input_dim);
    if (bounds.size() != net.layers.size())
        throw ValidationError("encode: bounds/layer count mismatch");

    const milp_detail::VarLayout layout(net);
    const std::size_t hidden = net.hidden_layer_count();

    MilpSystem sys;
    sys.lower.assign(layout.total, 0.0);
    sys.upper.assign(layout.total, 0.0);
    sys.vars.resize(layout.total);

    for (std::size_t i = 0; i < net.input_dim; ++i) {
        sys.lower[i] = region.box.lo[i];
        sys.upper[i] = region.box.hi[i];
        sys.vars[i] = {MilpVar::Kind::Input, {0, i}};
    }
    for (std::size_t li = 0; li < hidden; ++li) {
        for (std::size_t r = 0; r < net.layers[li].rows; ++r) {
            double tlo = bounds[li].pre_lo[r];
            double thi = bounds[li].pre_hi[r];
            double ylo = std::max(tlo, 0.0);
            double yhi = std::max(thi, 0.0);
            auto fx = fixings.find(NeuronRef{li, r});
            if (fx != fixings.end()) {
                if (fx->second) {
                    tlo = std::max(tlo, 0.0); // t >= 0 under an active fixing
                } else {
                    thi = std::min(thi, 0.0); // t <= 0 under an inactive fixing
                    ylo = yhi = 0.0;
                }
                if (tlo > thi)
                    throw ValidationError("encode: fixing contradicts bounds at layer " +
                                          std::to_string(li) + " neuron " + std::to_string(r));
            }
            const std::size_t tv = layout.pre(li, r);
            const std::size_t yv = layout.post(li, r);
            sys.lower[tv] = tlo;
            sys.upper[tv] = thi;
            sys.lower[yv] = ylo;
            sys.upper[yv] = yhi;
            sys.vars[tv] = {MilpVar::Kind::Pre, {li, r}};
            sys.vars[yv] = {MilpVar::Kind::Post, {li, r}};
        }
    }
    for (std::size_t k = 0; k < net.output_dim(); ++k) {
        const std::size_t ov = layout.output(k);
        sys.lower[ov] = bounds[hidden].pre_lo[k];
        sys.upper[ov] = bounds[hidden].pre_hi[k];
        sys.vars[ov] = {MilpVar::Kind::Output, {hidden, k}};
    }

    milp_detail::append_affine_rows(net, layout, layout.total, sys.rows);
    milp_detail::append_region_rows(region, layout.total, sys.rows);

    // phase rows; binaries appended after the continuous block
    for (std::size_t li = 0; li < hidden; ++li) {
        for (std::size_t r = 0; r < net.layers[li].rows; ++r) {
            const std::size_t tv = layout.pre(li, r);
            const std::size_t yv = layout.post(li, r);
            const double L = sys.lower[tv];
            const double U = sys.upper[tv];

            bool phase_known;
            bool active = false;
            auto fx = fixings.find(NeuronRef{li, r});
            if (fx != fixings.end()) {
                phase_known = true;
                active = fx->second;
            } else if (bounds[li].phase[r] != Phase::Crossing) {
                phase_known = true;
                active = bounds[li].phase[r] == Phase::StableActive;
            } else {
                phase_known = false;
            }

            auto blank = [&] {
                LinearConstraint row;
                row.coeffs.assign(sys.num_vars(), 0.0);
                return row;
            };

            if (phase_known) {
                LinearConstraint row = blank();
                row.rel = Relation::Equal;
                row.rhs = 0.0;
                row.coeffs[yv] = 1.0;
                if (active) row.coeffs[tv] = -1.0; // y = t  (else y = 0)
                sys.rows.push_back(std::move(row));
                continue;
            }

            const std::size_t dv = sys.num_vars();
            sys.lower.push_back(0.0);
            sys.upper.push_back(1.0);
            sys.vars.push_back({MilpVar::Kind::Phase, {li, r}});
            sys.binaries.push_back({dv, {li, r}});
            for (auto& row : sys.rows) row.coeffs.push_back(0.0);

            LinearConstraint row = blank();
            row.rel = Relation::LessEq; // -y <= 0
            row.coeffs[yv] = -1.0;
            sys.rows.push_back(row);

            row = blank();
            row.rel = Relation::LessEq; // t - y <= 0
            row.coeffs[tv] = 1.0;
            row.coeffs[yv] = -1.0;
            sys.rows.push_back(row);

            row = blank();
            row.rel = Relation::LessEq; // y - U·d <= 0
            row.coeffs[yv] = 1.0;
            row.coeffs[dv] = -U;
            sys.rows.push_back(row);

            row = blank();
            row.rel = Relation::LessEq; // y - t - L·d <= -L
            row.rhs = -L;
            row.coeffs[yv] = 1.0;
            row.coeffs[tv] = -1.0;
            row.coeffs[dv] = -L;
            sys.rows.push_back(row);
        }
    }

    sys.objective.assign(sys.num_vars(), 0.0);
    return sys;
}

enum class SearchMode { Deterministic, Parallel };

struct MaximizeOptions {
    double timeout_s = 600.0;
    double gap = 1e-6; // absolute optimality gap
    SearchMode mode = SearchMode::Deterministic;
    std::size_t workers = 1; // parallel mode only
    // observer for (lower, upper) after each explored node
    std::function<void(double, double)> progress;
};

struct MaximizeResult {
    bool region_empty = false;
    bool gap_closed = false;
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    std::optional<std::vector<double>> best_input;
    SolveStats stats;
};

namespace milp_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
    PhaseFixings fixings;
    double bound = kInf;
    // binary values of this node's relaxation, in (layer, index) order
    std::vector<std::pair<NeuronRef, double>> fractional;
    std::size_t depth = 0;
    std::uint64_t seq = 0;
};

struct NodeOrder {
    // max-heap on bound; FIFO among equal bounds for determinism
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;
        return a.seq > b.seq;
    }
};

// Shared branch-and-bound state. The deterministic mode is this same
// engine with one worker, which makes the pop order strictly best-first.
class BnbEngine {
public:
    BnbEngine(const Network& net, const InputRegion& region,
              const std::vector<double>& objective, const MaximizeOptions& opt)
        : net_(net), region_(region), objective_(objective), opt_(opt),
          deadline_(std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(opt.timeout_s))) {}

    MaximizeResult run() {
        const auto t0 = std::chrono::steady_clock::now();
        MaximizeResult res;

        // root relaxation
        auto root_bounds = propagate_box_fixed(net_, region_.box, {});
        const MilpSystem root_sys = make_system(*root_bounds, {});
        LinearProgram lp = root_sys.relaxation();
        lp.objective = system_objective(root_sys);
        const LpOutcome root = solve_lp(lp);
        ++lp_solves_;
        if (root.status == LpStatus::Infeasible) {
            res.region_empty = true;
            res.upper = -kInf;
            res.lower = -kInf;
            res.stats = stats_snapshot(t0);
            return res;
        }

        consider_candidate(root.point);
        Node root_node;
        root_node.bound = root.value;
        root_node.fractional = fractional_of(root_sys, root.point);
        root_node.seq = next_seq_++;
        open_.push(std::move(root_node));

        const std::size_t workers =
            opt_.mode == SearchMode::Parallel ? std::max<std::size_t>(1, opt_.workers) : 1;
        if (workers == 1) {
            worker_loop();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([this] { worker_loop(); });
            for (auto& th : pool) th.join();
        }

        res.gap_closed = !timed_out_ && open_.empty();
        double upper = std::max(pruned_max_, incumbent_);
        if (!res.gap_closed) {
            // frontier still open: its best bound caps the true maximum
            while (!open_.empty()) {
                upper = std::max(upper, open_.top().bound);
                open_.pop();
            }
        }
        res.upper = upper;
        res.lower = incumbent_;
        res.best_input = best_input_;
        res.stats = stats_snapshot(t0);
        return res;
    }

private:
    const Network& net_;
    const InputRegion& region_;
    const std::vector<double>& objective_;
    const MaximizeOptions& opt_;
    const std::chrono::steady_clock::time_point deadline_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
    std::size_t busy_ = 0;
    bool timed_out_ = false;
    double incumbent_ = -kInf;
    double pruned_max_ = -kInf;
    std::optional<std::vector<double>> best_input_;
    std::uint64_t next_seq_ = 0;
    std::size_t nodes_ = 0, lp_solves_ = 0;

    SolveStats stats_snapshot(std::chrono::steady_clock::time_point t0) const {
        SolveStats s;
        s.nodes = nodes_;
        s.lp_solves = lp_solves_;
        s.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return s;
    }

    MilpSystem make_system(const std::vector<LayerBounds>& bounds,
                           const PhaseFixings& fixings) const {
        return encode(net_, region_, bounds, fixings);
    }

    std::vector<double> system_objective(const MilpSystem& sys) const {
        std::vector<double> c(sys.num_vars(), 0.0);
        const milp_detail::VarLayout layout(net_);
        for (std::size_t k = 0; k < objective_.size(); ++k) c[layout.output(k)] = objective_[k];
        return c;
    }

    static std::vector<std::pair<NeuronRef, double>> fractional_of(const MilpSystem& sys,
                                                                   const std::vector<double>& pt) {
        std::vector<std::pair<NeuronRef, double>> out;
        out.reserve(sys.binaries.size());
        for (const auto& b : sys.binaries) out.emplace_back(b.neuron, pt[b.var]);
        return out;
    }

    // exact forward evaluation of the relaxation's input block; sound
    // incumbent because the point is region-feasible by construction
    void consider_candidate(const std::vector<double>& pt) {
        std::vector<double> x(pt.begin(), pt.begin() + static_cast<long>(net_.input_dim));
        const std::vector<double> out = forward(net_, x);
        double value = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) value += objective_[k] * out[k];
        if (value > incumbent_) {
            incumbent_ = value;
            best_input_ = std::move(x);
        }
    }

    void worker_loop() {
        std::unique_lock lock(mu_);
        for (;;) {
            cv_.wait(lock, [&] { return !open_.empty() || busy_ == 0 || timed_out_; });
            if (timed_out_) return;
            if (open_.empty()) {
                if (busy_ == 0) {
                    cv_.notify_all();
                    return;
                }
                continue;
            }
            if (std::chrono::steady_clock::now() >= deadline_) {
                timed_out_ = true;
                cv_.notify_all();
                return;
            }

            Node node = open_.top();
            open_.pop();
            ++nodes_;

            if (node.bound <= incumbent_ + opt_.gap) {
                // best-first order: every remaining open node is bounded
                // by this one, so the whole frontier collapses at once
                pruned_max_ = std::max(pruned_max_, node.bound);
                while (!open_.empty()) {
                    pruned_max_ = std::max(pruned_max_, open_.top().bound);
                    open_.pop();
                }
                if (opt_.progress) opt_.progress(incumbent_, current_upper());
                cv_.notify_all();
                continue;
            }

            ++busy_;
            lock.unlock();

            std::vector<Node> children = branch(node);

            lock.lock();
            --busy_;
            for (auto& child : children) {
                child.bound = std::min(child.bound, node.bound); // child never exceeds parent
                child.seq = next_seq_++;
                if (child.bound <= incumbent_ + opt_.gap)
                    pruned_max_ = std::max(pruned_max_, child.bound);
                else
                    open_.push(std::move(child));
            }
            if (opt_.progress) opt_.progress(incumbent_, current_upper());
            cv_.notify_all();
        }
    }

    double current_upper() const {
        double u = std::max(pruned_max_, incumbent_);
        if (!open_.empty()) u = std::max(u, open_.top().bound);
        return u;
    }

    // Branch on the most fractional binary (|d - 0.5| minimal, ties to
    // the earliest layer then lowest neuron index), re-tightening the
    // interval bounds under each child's phase fixings.
    std::vector<Node> branch(const Node& node) {
        const std::pair<NeuronRef, double>* pick = nullptr;
        double best_frac = kInf;
        for (const auto& entry : node.fractional) {
            if (node.fixings.count(entry.first)) continue;
            const double frac = std::fabs(entry.second - 0.5);
            if (frac < best_frac) {
                best_frac = frac;
                pick = &entry;
            }
        }
        if (pick == nullptr) {
            // Every binary is already fixed, so the node's optimum is its
            // relaxation value; keep that bound so `upper` stays sound even
            // when LP tolerance leaves it a hair above incumbent + gap.
            std::scoped_lock inner(mu_);
            pruned_max_ = std::max(pruned_max_, node.bound);
            return {};
        }

        std::vector<Node> children;
        std::size_t solves = 0;
        for (const bool active : {false, true}) {
            Node child;
            child.fixings = node.fixings;
            child.fixings[pick->first] = active;
            child.depth = node.depth + 1;

            auto child_bounds = propagate_box_fixed(net_, region_.box, child.fixings);
            if (!child_bounds) continue; // phase unrealizable over the box

            const MilpSystem sys = make_system(*child_bounds, child.fixings);
            LinearProgram lp = sys.relaxation();
            lp.objective = system_objective(sys);
            ++solves;
            const LpOutcome out = solve_lp(lp);
            if (out.status == LpStatus::Infeasible) continue;

            child.bound = out.value;
            child.fractional = fractional_of(sys, out.point);

            std::scoped_lock inner(mu_);
            consider_candidate(out.point);
            children.push_back(std::move(child));
        }
        {
            std::scoped_lock inner(mu_);
            lp_solves_ += solves;
        }
        return children;
    }
};

} // namespace milp_detail

// Complete best-first branch-and-bound maximization of objective·f(x)
// over the region. Returns sound bounds: lower is attained by an exact
// forward evaluation of best_input, upper dominates every point of the
// region (up to LP tolerance).
inline MaximizeResult maximize(const Network& net, const InputRegion& region,
                               const std::vector<double>& objective,
                               const MaximizeOptions& opt = {}) {
    validate_region(region, net.input_dim);
    if (objective.size() != net.output_dim())
        throw ValidationError("maximize: objective length != output count");
    if (opt.timeout_s <= 0.0) throw ValidationError("maximize: timeout must be positive");
    milp_detail::BnbEngine engine(net, region, objective, opt);
    return engine.run();
}

// Exhaustive oracle: solve one pure LP per phase assignment of the
// crossing neurons and return the best feasible value (-inf when no
// assignment is feasible). Independent of the branch-and-bound path;
// rebuilds its constraint system from scratch.
inline double enumerate_phases(const Network& net, const InputRegion& region,
                               const std::vector<double>& objective) {
    validate_region(region, net.input_dim);
    if (objective.size() != net.output_dim())
        throw ValidationError("enumerate_phases: objective length != output count");

    const std::vector<LayerBounds> bounds = propagate_box(net, region.box);
    const std::size_t hidden = net.hidden_layer_count();
    const std::vector<NeuronRef> crossing = crossing_neurons(bounds, hidden);
    if (crossing.size() > 24)
        throw ValidationError("enumerate_phases: " + std::to_string(crossing.size()) +
                              " crossing neurons exceed the 24-neuron guard");

    const milp_detail::VarLayout layout(net);

    LinearProgram base;
    base.lower.assign(layout.total, 0.0);
    base.upper.assign(layout.total, 0.0);
    base.objective.assign(layout.total, 0.0);
    for (std::size_t i = 0; i < net.input_dim; ++i) {
        base.lower[i] = region.box.lo[i];
        base.upper[i] = region.box.hi[i];
    }
    for (std::size_t li = 0; li < hidden; ++li) {
        for (std::size_t r = 0; r < net.layers[li].rows; ++r) {
            base.lower[layout.pre(li, r)] = bounds[li].pre_lo[r];
            base.upper[layout.pre(li, r)] = bounds[li].pre_hi[r];
            base.lower[layout.post(li, r)] = std::max(bounds[li].pre_lo[r], 0.0);
            base.upper[layout.post(li, r)] = std::max(bounds[li].pre_hi[r], 0.0);
        }
    }
    for (std::size_t k = 0; k < net.output_dim(); ++k) {
        base.lower[layout.output(k)] = bounds[hidden].pre_lo[k];
        base.upper[layout.output(k)] = bounds[hidden].pre_hi[k];
        base.objective[layout.output(k)] = objective[k];
    }
    milp_detail::append_affine_rows(net, layout, layout.total, base.constraints);
    milp_detail::append_region_rows(region, layout.total, base.constraints);

    // stable neurons keep one fixed phase row across all assignments
    std::vector<LinearConstraint> stable_rows;
    for (std::size_t li = 0; li < hidden; ++li) {
        for (std::size_t r = 0; r < net.layers[li].rows; ++r) {
            if (bounds[li].phase[r] == Phase::Crossing) continue;
            LinearConstraint row;
            row.coeffs.assign(layout.total, 0.0);
            row.rel = Relation::Equal;
            row.rhs = 0.0;
            row.coeffs[layout.post(li, r)] = 1.0;
            if (bounds[li].phase[r] == Phase::StableActive)
                row.coeffs[layout.pre(li, r)] = -1.0;
            stable_rows.push_back(std::move(row));
        }
    }
    for (auto& row : stable_rows) base.constraints.push_back(std::move(row));

    double best = -milp_detail::kInf;
    const std::size_t assignments = std::size_t{1} << crossing.size();
    for (std::size_t mask = 0; mask < assignments; ++mask) {
        LinearProgram lp = base;
        for (std::size_t b = 0; b < crossing.size(); ++b) {
            const NeuronRef n = crossing[b];
            const std::size_t tv = layout.pre(n.layer, n.index);
            const std::size_t yv = layout.post(n.layer, n.index);
            const bool active = (mask >> b) & 1;

            LinearConstraint eq; // y = t (active) or y = 0 (inactive)
            eq.coeffs.assign(layout.total, 0.0);
            eq.rel = Relation::Equal;
            eq.rhs = 0.0;
            eq.coeffs[yv] = 1.0;
            if (active) eq.coeffs[tv] = -1.0;
            lp.constraints.push_back(std::move(eq));

            LinearConstraint sign; // t >= 0 (active) or t <= 0 (inactive)
            sign.coeffs.assign(layout.total, 0.0);
            sign.rel = active ? Relation::GreaterEq : Relation::LessEq;
            sign.rhs = 0.0;
            sign.coeffs[tv] = 1.0;
            lp.constraints.push_back(std::move(sign));
        }
        const LpOutcome out = solve_lp(lp);
        if (out.status == LpStatus::Optimal) best = std::max(best, out.value);
    }
    return best;
}

// Full verdict for a claim: maximize, then classify. Every violated
// verdict is replayed through the exact forward pass before emission.
inline Verdict check_claim(const Network& net, const SafetyClaim& claim,
                           const MaximizeOptions& opt = {}) {
    validate_claim(claim, net);
    const MaximizeResult res = maximize(net, claim.region, claim.objective, opt);

    Verdict v;
    v.upper_bound = res.upper;
    v.lower_bound = res.lower;
    v.stats = res.stats;

    if (res.region_empty) {
        v.status = VerdictStatus::RegionEmpty;
        return v;
    }
    if (res.best_input && replay_witness(net, claim, *res.best_input)) {
        v.status = VerdictStatus::Violated;
        v.witness = res.best_input;
        return v;
    }
    if (res.gap_closed && res.upper <= claim.threshold) {
        v.status = VerdictStatus::Proved;
        return v;
    }
    v.status = VerdictStatus::Unknown;
    return v;
}

} // namespace relucert
