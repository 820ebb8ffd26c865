/* SPDX-License-Identifier: Apache-2.0
 *
 * Copyright 2026 The relucert authors
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "relucert/bounds.hpp"
#include "relucert/lp.hpp"
#include "relucert/network.hpp"
#include "relucert/property.hpp"
#include "relucert/rng.hpp"

namespace testutil {

// Self-deleting scratch directory for file round-trip tests.
class TempDir {
public:
    TempDir() {
        std::string tmpl =
            (std::filesystem::temp_directory_path() / "relucert-test-XXXXXX").string();
        if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

// Dense layer from row-major nested lists; keeps fixture nets short.
inline relucert::Layer make_layer(std::vector<std::vector<double>> w, std::vector<double> b,
                                  relucert::Activation act) {
    relucert::Layer layer;
    layer.rows = w.size();
    layer.cols = w.empty() ? 0 : w[0].size();
    for (const auto& row : w)
        layer.weights.insert(layer.weights.end(), row.begin(), row.end());
    layer.bias = std::move(b);
    layer.activation = act;
    return layer;
}

inline relucert::Network make_net(std::size_t input_dim, std::vector<relucert::Layer> layers) {
    relucert::Network net;
    net.input_dim = input_dim;
    net.layers = std::move(layers);
    return net;
}

// ---------------------------------------------------------------------
// Independent LP reference: enumerate every candidate vertex (each choice
// of n tight hyperplanes among rows and variable bounds), solve the
// square system, keep feasible ones. Bounded-variable LPs have compact
// feasible sets, so a nonempty set yields an optimal vertex. Exponential
// and only fit for the small fixtures.

struct VertexOracle {
    bool feasible = false;
    double value = 0.0;
    std::vector<double> point;
};

namespace oracle_detail {

// Gaussian elimination with partial pivoting; false when singular.
inline bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-11) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return true;
}

inline bool point_feasible(const relucert::LinearProgram& lp, const std::vector<double>& x,
                           double tol) {
    for (std::size_t j = 0; j < lp.lower.size(); ++j)
        if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
    for (const auto& row : lp.constraints) {
        double dot = 0.0, scale = 1.0 + std::fabs(row.rhs);
        for (std::size_t j = 0; j < row.coeffs.size(); ++j) {
            dot += row.coeffs[j] * x[j];
            scale += std::fabs(row.coeffs[j] * x[j]);
        }
        const double slack = dot - row.rhs;
        switch (row.rel) {
        case relucert::Relation::LessEq:
            if (slack > tol * scale) return false;
            break;
        case relucert::Relation::GreaterEq:
            if (slack < -tol * scale) return false;
            break;
        case relucert::Relation::Equal:
            if (std::fabs(slack) > tol * scale) return false;
            break;
        }
    }
    return true;
}

} // namespace oracle_detail

inline VertexOracle vertex_enumerate_max(const relucert::LinearProgram& lp, double tol = 1e-7) {
    const std::size_t n = lp.lower.size();
    // hyperplane pool: every row as equality, then both bounds per variable
    struct Plane {
        std::vector<double> a;
        double rhs;
    };
    std::vector<Plane> planes;
    for (const auto& row : lp.constraints) planes.push_back({row.coeffs, row.rhs});
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> unit(n, 0.0);
        unit[j] = 1.0;
        planes.push_back({unit, lp.lower[j]});
        planes.push_back({unit, lp.upper[j]});
    }

    VertexOracle best;
    // lexicographic combinations of n planes out of planes.size()
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (planes.size() < n) return best;
    for (;;) {
        std::vector<std::vector<double>> a(n, std::vector<double>(n));
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = planes[idx[i]].a;
            b[i] = planes[idx[i]].rhs;
        }
        std::vector<double> x;
        if (oracle_detail::solve_square(std::move(a), std::move(b), x) &&
            oracle_detail::point_feasible(lp, x, tol)) {
            double value = 0.0;
            for (std::size_t j = 0; j < n; ++j) value += lp.objective[j] * x[j];
            if (!best.feasible || value > best.value) {
                best.feasible = true;
                best.value = value;
                best.point = x;
            }
        }

        // next combination
        std::size_t i = n;
        while (i-- > 0) {
            if (idx[i] + (n - i) < planes.size()) {
                ++idx[i];
                for (std::size_t k = i + 1; k < n; ++k) idx[k] = idx[k - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

// ---------------------------------------------------------------------
// Random verification instances for the oracle-equivalence and bound
// soundness suites. The retry loop caps how many crossing neurons the
// phase oracle has to enumerate.

struct RandomInstance {
    relucert::Network net;
    relucert::InputBox box;
    std::vector<double> objective;
};

inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_crossing = 12) {
    relucert::Rng rng(seed);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t input_dim = 2 + rng.below(3);      // 2..4
        const std::size_t hidden_layers = 1 + rng.below(3);  // 1..3
        const std::size_t output_dim = 1 + rng.below(2);     // 1..2

        relucert::Network net;
        net.input_dim = input_dim;
        std::size_t fan_in = input_dim;
        for (std::size_t li = 0; li < hidden_layers; ++li) {
            const std::size_t width = 2 + rng.below(4); // 2..5
            relucert::Layer layer;
            layer.rows = width;
            layer.cols = fan_in;
            layer.activation = relucert::Activation::Relu;
            for (std::size_t k = 0; k < width * fan_in; ++k)
                layer.weights.push_back(rng.uniform(-1.0, 1.0));
            for (std::size_t k = 0; k < width; ++k) layer.bias.push_back(rng.uniform(-0.5, 0.5));
            net.layers.push_back(std::move(layer));
            fan_in = width;
        }
        relucert::Layer out;
        out.rows = output_dim;
        out.cols = fan_in;
        out.activation = relucert::Activation::Linear;
        for (std::size_t k = 0; k < output_dim * fan_in; ++k)
            out.weights.push_back(rng.uniform(-1.0, 1.0));
        for (std::size_t k = 0; k < output_dim; ++k) out.bias.push_back(rng.uniform(-0.5, 0.5));
        net.layers.push_back(std::move(out));

        relucert::InputBox box;
        for (std::size_t j = 0; j < input_dim; ++j) {
            const double center = rng.uniform(-1.0, 1.0);
            const double radius = rng.uniform(0.2, 1.0);
            box.lo.push_back(center - radius);
            box.hi.push_back(center + radius);
        }

        const auto bounds = relucert::propagate_box(net, box);
        const auto crossing =
            relucert::crossing_neurons(bounds, net.hidden_layer_count());
        if (crossing.size() > max_crossing) continue;

        RandomInstance inst;
        inst.net = std::move(net);
        inst.box = std::move(box);
        for (std::size_t k = 0; k < output_dim; ++k)
            inst.objective.push_back(rng.uniform(-1.0, 1.0));
        return inst;
    }
    throw std::runtime_error("random_instance: no instance under the crossing cap");
}

inline std::vector<double> sample_in_box(const relucert::InputBox& box, relucert::Rng& rng) {
    std::vector<double> x(box.dim());
    for (std::size_t j = 0; j < box.dim(); ++j) x[j] = rng.uniform(box.lo[j], box.hi[j]);
    return x;
}

// Rejection sampling against the region's linear constraints; nullopt
// when the acceptance rate is too low for the given budget.
inline std::optional<std::vector<double>> sample_in_region(const relucert::InputRegion& region,
                                                           relucert::Rng& rng,
                                                           std::size_t max_tries = 1000) {
    for (std::size_t t = 0; t < max_tries; ++t) {
        std::vector<double> x = sample_in_box(region.box, rng);
        if (relucert::in_region(region, x, 0.0)) return x;
    }
    return std::nullopt;
}

} // namespace testutil
