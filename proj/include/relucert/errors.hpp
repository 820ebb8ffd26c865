/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <stdexcept>
#include <string>

namespace relucert {

// Malformed input document (bad JSON, bad CSV, missing field).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally well-formed input that breaks a model invariant
// (dimension mismatch, non-finite entry, wrong activation placement).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical trouble the solver cannot certify its way out of
// (pivot limit hit, uncertifiable feasibility). Surfaces as an
// `unknown` verdict upstream.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged (loss became non-finite).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace relucert
