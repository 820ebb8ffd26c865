/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "relucert/errors.hpp"

namespace relucert {

enum class Relation { LessEq, Equal, GreaterEq };

inline const char* to_string(Relation r) {
    switch (r) {
        case Relation::LessEq: return "<=";
        case Relation::Equal: return "=";
        default: return ">=";
    }
}

struct LinearConstraint {
    std::vector<double> coeffs;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
};

// Maximize objective·x subject to the constraint rows and per-variable
// bounds. Every variable bound must be finite, so the LP is never
// unbounded; this is guaranteed by construction upstream (inputs live
// in a box, neuron variables carry propagated intervals).
struct LinearProgram {
    std::vector<double> objective;
    std::vector<LinearConstraint> constraints;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t num_vars() const { return objective.size(); }
};

enum class LpStatus { Optimal, Infeasible };

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    std::vector<double> point;
};

namespace lp_detail {

constexpr double kFeasTol = 1e-7;    // feasibility tolerance
constexpr double kCostTol = 1e-9;    // optimality tolerance on reduced costs
constexpr double kPivotEps = 1e-10;  // entries below this never pivot
constexpr double kRatioTol = 1e-9;   // near-tie band in the leaving-row choice
constexpr long kPivotLimit = 1000000;
constexpr long kRefactorInterval = 64; // pivots between basis refactorizations

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

inline void validate(const LinearProgram& lp) {
    const std::size_t n = lp.num_vars();
    if (n == 0) throw ValidationError("lp: no variables");
    if (lp.lower.size() != n || lp.upper.size() != n)
        throw ValidationError("lp: bounds length != variable count");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]))
            throw ValidationError("lp: non-finite bound on variable " + std::to_string(j));
        if (lp.lower[j] > lp.upper[j])
            throw ValidationError("lp: lower > upper on variable " + std::to_string(j));
        if (!std::isfinite(lp.objective[j]))
            throw ValidationError("lp: non-finite objective coefficient");
    }
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
        const auto& row = lp.constraints[i];
        if (row.coeffs.size() != n)
            throw ValidationError("lp: constraint " + std::to_string(i) +
                                  " has wrong coefficient count");
        if (!std::isfinite(row.rhs))
            throw ValidationError("lp: non-finite rhs in constraint " + std::to_string(i));
        for (double a : row.coeffs)
            if (!std::isfinite(a))
                throw ValidationError("lp: non-finite coefficient in constraint " +
                                      std::to_string(i));
    }
}

// Bounded-variable primal simplex on a dense tableau, two phases with
// artificials, Bland's anti-cycling rule throughout (first eligible
// entering column, lowest-index leaving variable among exact ratio
// ties). Column order: structural, slacks, artificials. Basic values
// are refactorized from the pristine rows at the end of each phase.
class Simplex {
public:
    explicit Simplex(const LinearProgram& lp) : lp_(lp) { build(); }

    LpOutcome run() {
        if (!phase1_clean_) {
            solve_phase(/*phase1=*/true);
            refactorize();
            double infeas = 0.0;
            for (std::size_t j = art_start_; j < ncols_; ++j) infeas += var_value(j);
            if (infeas > kFeasTol) return {LpStatus::Infeasible, 0.0, {}};
            // lock artificials out of the basis' reach
            for (std::size_t j = art_start_; j < ncols_; ++j) {
                lo_[j] = 0.0;
                hi_[j] = 0.0;
            }
        }
        solve_phase(/*phase1=*/false);
        refactorize();
        return extract();
    }

private:
    const LinearProgram& lp_;
    std::size_t nstruct_ = 0, nrows_ = 0, ncols_ = 0, art_start_ = 0;
    bool phase1_clean_ = true;
    std::vector<std::vector<double>> tab_;  // B^{-1} A, row-major
    std::vector<std::vector<double>> tab0_; // pristine rows, pivots never touch these
    std::vector<double> rhs0_;              // tableau-space rhs, sign follows the row
    std::vector<double> lo_, hi_;           // bounds incl. slacks/artificials
    std::vector<double> beta_;             // values of basic variables
    std::vector<std::size_t> basis_;       // row -> variable
    std::vector<VarState> state_;
    std::vector<double> cost_;             // active objective
    long pivots_ = 0;
    long since_refactor_ = 0;

    double var_value(std::size_t j) const {
        switch (state_[j]) {
            case VarState::AtLower: return lo_[j];
            case VarState::AtUpper: return hi_[j];
            default:
                for (std::size_t i = 0; i < nrows_; ++i)
                    if (basis_[i] == j) return beta_[i];
                return 0.0;
        }
    }

    void build() {
        nstruct_ = lp_.num_vars();
        nrows_ = lp_.constraints.size();
        const std::size_t nslack = nrows_;
        art_start_ = nstruct_ + nslack;
        ncols_ = art_start_; // artificials appended below as needed

        lo_ = lp_.lower;
        hi_ = lp_.upper;
        lo_.resize(art_start_);
        hi_.resize(art_start_);

        state_.assign(art_start_, VarState::AtLower);
        tab_.assign(nrows_, std::vector<double>(art_start_, 0.0));
        beta_.assign(nrows_, 0.0);
        rhs0_.assign(nrows_, 0.0);
        basis_.assign(nrows_, 0);

        for (std::size_t i = 0; i < nrows_; ++i) {
            const auto& row = lp_.constraints[i];
            for (std::size_t j = 0; j < nstruct_; ++j) tab_[i][j] = row.coeffs[j];
            tab_[i][nstruct_ + i] = 1.0;
            rhs0_[i] = row.rhs;

            // Natural range of the slack rhs - a·x over the variable box,
            // intersected with the relation's sign requirement. Keeps every
            // column finitely bounded; an empty intersection just pins the
            // slack and lets phase 1 certify infeasibility.
            double amin = 0.0, amax = 0.0;
            for (std::size_t j = 0; j < nstruct_; ++j) {
                const double a = row.coeffs[j];
                if (a >= 0.0) {
                    amin += a * lo_[j];
                    amax += a * hi_[j];
                } else {
                    amin += a * hi_[j];
                    amax += a * lo_[j];
                }
            }
            const double smin = row.rhs - amax;
            const double smax = row.rhs - amin;
            const std::size_t s = nstruct_ + i;
            switch (row.rel) {
                case Relation::LessEq:
                    lo_[s] = std::max(0.0, smin);
                    hi_[s] = std::max(0.0, smax);
                    break;
                case Relation::GreaterEq:
                    lo_[s] = std::min(0.0, smin);
                    hi_[s] = std::min(0.0, smax);
                    break;
                case Relation::Equal:
                    lo_[s] = 0.0;
                    hi_[s] = 0.0;
                    break;
            }

            // slack provisionally basic at its determined value
            double v = row.rhs;
            for (std::size_t j = 0; j < nstruct_; ++j) v -= row.coeffs[j] * lo_[j];
            basis_[i] = s;
            state_[s] = VarState::Basic;
            beta_[i] = v;
        }

        // Rows whose determined slack value falls outside the slack range
        // get an artificial carrying the residual.
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < nrows_; ++i) {
            const std::size_t s = nstruct_ + i;
            if (beta_[i] < lo_[s] || beta_[i] > hi_[s]) bad.push_back(i);
        }
        if (!bad.empty()) {
            phase1_clean_ = false;
            for (std::size_t i : bad) {
                const std::size_t s = nstruct_ + i;
                const double clamped = std::clamp(beta_[i], lo_[s], hi_[s]);
                const double resid = beta_[i] - clamped;
                state_[s] = clamped == lo_[s] ? VarState::AtLower : VarState::AtUpper;

                // artificial column is +e_i in tableau space once the row is
                // oriented so the artificial starts at |resid|
                if (resid < 0.0) {
                    for (double& t : tab_[i]) t = -t;
                    rhs0_[i] = -rhs0_[i];
                }

                const std::size_t a = ncols_++;
                lo_.push_back(0.0);
                hi_.push_back(std::fabs(resid));
                state_.push_back(VarState::Basic);
                for (std::size_t r = 0; r < nrows_; ++r) tab_[r].push_back(r == i ? 1.0 : 0.0);
                basis_[i] = a;
                beta_[i] = std::fabs(resid);
            }
        }
        tab0_ = tab_;
    }

    void set_objective(bool phase1) {
        cost_.assign(ncols_, 0.0);
        if (phase1) {
            for (std::size_t j = art_start_; j < ncols_; ++j) cost_[j] = -1.0;
        } else {
            for (std::size_t j = 0; j < nstruct_; ++j) cost_[j] = lp_.objective[j];
        }
    }

    void solve_phase(bool phase1) {
        set_objective(phase1);
        std::vector<double> dual(ncols_);
        for (;;) {
            if (++pivots_ > kPivotLimit)
                throw NumericalError("lp: pivot limit exceeded, feasibility not certified");
            if (++since_refactor_ > kRefactorInterval) refactorize();

            // reduced costs d = c - c_B^T tab, recomputed each round
            std::fill(dual.begin(), dual.end(), 0.0);
            for (std::size_t i = 0; i < nrows_; ++i) {
                const double cb = cost_[basis_[i]];
                if (cb == 0.0) continue;
                const auto& row = tab_[i];
                for (std::size_t j = 0; j < ncols_; ++j) dual[j] += cb * row[j];
            }

            // Bland: first eligible nonbasic column
            std::size_t enter = ncols_;
            int dir = 0;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
                const double d = cost_[j] - dual[j];
                if (state_[j] == VarState::AtLower && d > kCostTol) {
                    enter = j;
                    dir = 1;
                    break;
                }
                if (state_[j] == VarState::AtUpper && d < -kCostTol) {
                    enter = j;
                    dir = -1;
                    break;
                }
            }
            if (enter == ncols_) return; // phase optimal

            // Ratio test in two passes. The first finds the tightest step;
            // the second picks, among rows within a hair of that step, the
            // one with the largest pivot magnitude (lowest basic index on
            // ties). Degenerate ties are common here and pivoting on a
            // near-zero entry in one is what destroys the update sequence.
            const double sigma = static_cast<double>(dir);
            const double flip = hi_[enter] - lo_[enter];
            double step = flip;
            for (std::size_t i = 0; i < nrows_; ++i) {
                const double g = sigma * tab_[i][enter];
                if (std::fabs(g) <= kPivotEps) continue;
                const std::size_t bv = basis_[i];
                double t = g > 0.0 ? (beta_[i] - lo_[bv]) / g   // decreases toward lower
                                   : (beta_[i] - hi_[bv]) / g;  // increases toward upper
                if (t < 0.0) t = 0.0; // basic value already pinned by drift
                if (t < step) step = t;
            }

            std::size_t leave = nrows_; // nrows_ means bound flip
            std::size_t leave_var = ncols_;
            bool leave_at_lower = true;
            if (step < flip) {
                const double band = step + kRatioTol * (1.0 + step);
                double best_mag = 0.0;
                for (std::size_t i = 0; i < nrows_; ++i) {
                    const double g = sigma * tab_[i][enter];
                    const double mag = std::fabs(g);
                    if (mag <= kPivotEps) continue;
                    const std::size_t bv = basis_[i];
                    const bool at_lower = g > 0.0;
                    double t = at_lower ? (beta_[i] - lo_[bv]) / g
                                        : (beta_[i] - hi_[bv]) / g;
                    if (t < 0.0) t = 0.0;
                    if (t > band) continue;
                    if (mag > best_mag || (mag == best_mag && bv < leave_var)) {
                        best_mag = mag;
                        leave = i;
                        leave_var = bv;
                        leave_at_lower = at_lower;
                    }
                }
            }

            if (leave == nrows_) { // bound flip
                for (std::size_t i = 0; i < nrows_; ++i) {
                    const double g = tab_[i][enter];
                    if (g != 0.0) beta_[i] -= sigma * step * g;
                }
                state_[enter] =
                    state_[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
                continue;
            }

            // pivot
            const double entering_value =
                (dir > 0 ? lo_[enter] : hi_[enter]) + sigma * step;
            for (std::size_t i = 0; i < nrows_; ++i) {
                if (i == leave) continue;
                const double g = tab_[i][enter];
                if (g != 0.0) beta_[i] -= sigma * step * g;
            }

            auto& prow = tab_[leave];
            const double piv = prow[enter];
            const double inv = 1.0 / piv;
            for (double& t : prow) t *= inv;
            for (std::size_t i = 0; i < nrows_; ++i) {
                if (i == leave) continue;
                const double f = tab_[i][enter];
                if (f == 0.0) continue;
                auto& row = tab_[i];
                for (std::size_t j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
            }

            state_[leave_var] = leave_at_lower ? VarState::AtLower : VarState::AtUpper;
            state_[enter] = VarState::Basic;
            basis_[leave] = enter;
            beta_[leave] = entering_value;
        }
    }

    // Rank-one tableau updates accumulate rounding error, and on badly
    // conditioned systems the working copy can wander arbitrarily far
    // from B^{-1} A. Rebuilding both the tableau and the basic values
    // from the pristine rows at regular pivot intervals and at phase
    // ends keeps every downstream decision tied to the actual basis.
    // Gauss-Jordan over [B | A | rhs - N x_N] with partial pivoting:
    // once the B block is the identity, the A block is B^{-1} A row by
    // row and the last column is x_B.
    void refactorize() {
        since_refactor_ = 0;
        const std::size_t m = nrows_;
        if (m == 0) return;

        const std::size_t w = m + ncols_ + 1;
        std::vector<std::vector<double>> aug(m, std::vector<double>(w, 0.0));
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = tab0_[i];
            auto& dst = aug[i];
            for (std::size_t k = 0; k < m; ++k) dst[k] = row[basis_[k]];
            for (std::size_t j = 0; j < ncols_; ++j) dst[m + j] = row[j];
            double acc = rhs0_[i];
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                const double v = state_[j] == VarState::AtLower ? lo_[j] : hi_[j];
                if (v != 0.0) acc -= row[j] * v;
            }
            dst[m + ncols_] = acc;
        }

        for (std::size_t c = 0; c < m; ++c) {
            std::size_t p = c;
            for (std::size_t i = c + 1; i < m; ++i)
                if (std::fabs(aug[i][c]) > std::fabs(aug[p][c])) p = i;
            if (std::fabs(aug[p][c]) <= kPivotEps)
                throw NumericalError("lp: basis matrix is numerically singular");
            std::swap(aug[c], aug[p]);
            const double inv = 1.0 / aug[c][c];
            auto& src = aug[c];
            for (std::size_t j = c; j < w; ++j) src[j] *= inv;
            for (std::size_t i = 0; i < m; ++i) {
                if (i == c) continue;
                const double f = aug[i][c];
                if (f == 0.0) continue;
                auto& dst = aug[i];
                for (std::size_t j = c; j < w; ++j) dst[j] -= f * src[j];
            }
        }

        for (std::size_t i = 0; i < m; ++i) {
            const auto& src = aug[i];
            auto& dst = tab_[i];
            for (std::size_t j = 0; j < ncols_; ++j) dst[j] = src[m + j];
            beta_[i] = src[m + ncols_];
        }
    }

    LpOutcome extract() const {
        LpOutcome out;
        out.status = LpStatus::Optimal;
        out.point.resize(nstruct_);
        for (std::size_t j = 0; j < nstruct_; ++j)
            out.point[j] = std::clamp(var_value(j), lp_.lower[j], lp_.upper[j]);

        double value = 0.0;
        for (std::size_t j = 0; j < nstruct_; ++j) value += lp_.objective[j] * out.point[j];
        out.value = value;

        // the optimum must actually be feasible; anything else is a
        // numerical failure, never a silent wrong answer
        for (std::size_t i = 0; i < nrows_; ++i) {
            const auto& row = lp_.constraints[i];
            double lhs = 0.0, scale = 1.0 + std::fabs(row.rhs);
            for (std::size_t j = 0; j < nstruct_; ++j) {
                lhs += row.coeffs[j] * out.point[j];
                scale += std::fabs(row.coeffs[j] * out.point[j]);
            }
            double viol = 0.0;
            if (row.rel == Relation::LessEq) viol = lhs - row.rhs;
            else if (row.rel == Relation::GreaterEq) viol = row.rhs - lhs;
            else viol = std::fabs(lhs - row.rhs);
            if (viol > kFeasTol * scale)
                throw NumericalError("lp: optimum failed the feasibility recheck on row " +
                                     std::to_string(i) + " (violation " +
                                     std::to_string(viol) + ", scale " + std::to_string(scale) +
                                     ")");
        }
        return out;
    }
};

} // namespace lp_detail

// Deterministic: identical inputs produce identical status, value and point.
inline LpOutcome solve_lp(const LinearProgram& lp) {
    lp_detail::validate(lp);
    lp_detail::Simplex simplex(lp);
    return simplex.run();
}

} // namespace relucert
