// Copyright 2026 The avqmetts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Lattices, the mixed-field Ising Hamiltonian
 *
 *     H = -J sum_<jk> Z_j Z_k - sum_j (h_x X_j + h_z Z_j)
 *
 * and the single-Y operator pool used to grow the ansatz.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pauli.hpp"

namespace avqmetts {

enum class LatticeKind { chain_1d, rectangle_2d };

inline const char *to_string(LatticeKind k) {
    return k == LatticeKind::chain_1d ? "chain_1d" : "rectangle_2d";
}

inline LatticeKind lattice_kind_from_string(const std::string &s) {
    if (s == "chain_1d") {
        return LatticeKind::chain_1d;
    }
    if (s == "rectangle_2d") {
        return LatticeKind::rectangle_2d;
    }
    throw std::invalid_argument("unknown lattice kind '" + s + "'");
}

/// Sites are indexed row-major: site(x, y) = y * Lx + x.
class Lattice {
  public:
    using Edge = std::pair<std::size_t, std::size_t>;

    static Lattice chain(std::size_t length, bool pbc = true) {
        return Lattice(LatticeKind::chain_1d, length, 1, pbc);
    }

    static Lattice rectangle(std::size_t lx, std::size_t ly, bool pbc = true) {
        return Lattice(LatticeKind::rectangle_2d, lx, ly, pbc);
    }

    Lattice(LatticeKind kind, std::size_t lx, std::size_t ly, bool pbc)
        : kind_(kind), lx_(lx), ly_(ly), pbc_(pbc) {
        if (lx == 0 || ly == 0) {
            throw std::invalid_argument("Lattice: empty dimension");
        }
        if (kind == LatticeKind::chain_1d && ly != 1) {
            throw std::invalid_argument("Lattice: chain_1d requires Ly = 1");
        }
        if (lx * ly > kMaxQubits) {
            throw std::invalid_argument("Lattice: too many sites");
        }
        // Duplicate wraparound bonds (L = 2 with PBC) are merged, not doubled.
        std::set<Edge> edges;
        auto add = [&](std::size_t a, std::size_t b) {
            if (a != b) {
                edges.insert(std::minmax(a, b));
            }
        };
        for (std::size_t y = 0; y < ly; ++y) {
            for (std::size_t x = 0; x < lx; ++x) {
                if (x + 1 < lx || (pbc && lx > 1)) {
                    add(site(x, y), site((x + 1) % lx, y));
                }
                if (y + 1 < ly || (pbc && ly > 1)) {
                    add(site(x, y), site(x, (y + 1) % ly));
                }
            }
        }
        edges_.assign(edges.begin(), edges.end());
    }

    [[nodiscard]] LatticeKind kind() const { return kind_; }
    [[nodiscard]] std::size_t lx() const { return lx_; }
    [[nodiscard]] std::size_t ly() const { return ly_; }
    [[nodiscard]] bool pbc() const { return pbc_; }
    [[nodiscard]] std::size_t n_sites() const { return lx_ * ly_; }
    [[nodiscard]] const std::vector<Edge> &edges() const { return edges_; }
    [[nodiscard]] std::size_t site(std::size_t x, std::size_t y) const {
        return y * lx_ + x;
    }

    /// "8" for a chain, "4x3" for a rectangle.
    [[nodiscard]] std::string label() const {
        return kind_ == LatticeKind::chain_1d
                   ? std::to_string(lx_)
                   : std::to_string(lx_) + "x" + std::to_string(ly_);
    }

  private:
    LatticeKind kind_;
    std::size_t lx_;
    std::size_t ly_;
    bool pbc_;
    std::vector<Edge> edges_;
};

struct IsingParams {
    double J = 1.0;
    double h_x = 0.0;
    double h_z = 0.0;
};

inline WeightedPauliSum build_hamiltonian(const Lattice &lat,
                                          const IsingParams &p) {
    const std::size_t n = lat.n_sites();
    std::vector<WeightedPauliSum::Term> terms;
    for (const auto &[a, b] : lat.edges()) {
        terms.push_back({-p.J, pauli_from_letters(n, {{a, 'Z'}, {b, 'Z'}})});
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (p.h_x != 0.0) {
            terms.push_back({-p.h_x, pauli_from_letters(n, {{j, 'X'}})});
        }
        if (p.h_z != 0.0) {
            terms.push_back({-p.h_z, pauli_from_letters(n, {{j, 'Z'}})});
        }
    }
    return {n, std::move(terms)};
}

/**
 * {Y_j} followed by {Y_j Z_k, Z_j Y_k} for j < k in lexicographic (j, k)
 * order; N^2 strings, each with exactly one Y. The order is the tie-break
 * order for operator selection.
 */
inline std::vector<PauliString> build_pool(std::size_t n_qubits) {
    if (n_qubits == 0) {
        throw std::invalid_argument("build_pool: n_qubits must be >= 1");
    }
    std::vector<PauliString> pool;
    pool.reserve(n_qubits * n_qubits);
    for (std::size_t j = 0; j < n_qubits; ++j) {
        pool.push_back(pauli_from_letters(n_qubits, {{j, 'Y'}}));
    }
    for (std::size_t j = 0; j < n_qubits; ++j) {
        for (std::size_t k = j + 1; k < n_qubits; ++k) {
            pool.push_back(pauli_from_letters(n_qubits, {{j, 'Y'}, {k, 'Z'}}));
            pool.push_back(pauli_from_letters(n_qubits, {{j, 'Z'}, {k, 'Y'}}));
        }
    }
    return pool;
}

/// m^2 or m^4 expanded as Pauli sums, with m = (1/2N) sum_j Z_j. Used to
/// cross-check the diagonal moment shortcut.
inline WeightedPauliSum magnetization_power(std::size_t n_qubits, int power) {
    if (power != 2 && power != 4) {
        throw std::invalid_argument("magnetization_power: power must be 2 or 4");
    }
    // Expand (sum_j Z_j)^power as a sum over index tuples; Z_j^2 = I.
    const double scale = std::pow(2.0 * static_cast<double>(n_qubits), -power);
    std::vector<WeightedPauliSum::Term> terms;
    std::vector<std::size_t> idx(static_cast<std::size_t>(power), 0);
    while (true) {
        Mask z = 0;
        for (auto j : idx) {
            z ^= Mask{1} << j;
        }
        terms.push_back({scale, PauliString(n_qubits, 0, z)});
        std::size_t pos = 0;
        while (pos < idx.size() && ++idx[pos] == n_qubits) {
            idx[pos++] = 0;
        }
        if (pos == idx.size()) {
            break;
        }
    }
    return {n_qubits, std::move(terms)};
}

} // namespace avqmetts
