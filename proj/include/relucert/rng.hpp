/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <cstdint>
#include <random>

namespace relucert {

// Deterministic draws on top of std::mt19937_64.
//
// The engine itself is fully specified by the standard, but the
// <random> distributions are not: uniform_real_distribution may
// produce different streams across standard libraries. Every
// reproducibility contract in this project (dataset generation,
// weight init, shuffling) therefore goes through these helpers,
// which consume engine words in a fixed way.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1): 53 mantissa bits of one engine word.
    double unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    bool bernoulli(double p) { return unit() < p; }

    // Uniform integer in [0, n). Multiply-shift; n is tiny relative
    // to 2^64 so the bias is far below anything observable here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    std::uint64_t word() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace relucert
