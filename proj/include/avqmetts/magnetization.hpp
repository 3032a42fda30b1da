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

#pragma once

#include <bit>
#include <utility>
#include <vector>

#include "state.hpp"

namespace avqmetts {

struct MagnetizationMoments {
    double m2;
    double m4;
};

/**
 * <m^2> and <m^4> with m = (1/2N) sum_j Z_j. m is diagonal, so each basis
 * state b contributes |amp_b|^2 m(b)^k with m(b) = (N - 2 popcount(b)) / 2N.
 */
template <Amplitude T>
MagnetizationMoments magnetization_moments(const StateVector<T> &s) {
    const std::size_t n = s.n_qubits();
    // m(b) only depends on popcount(b); accumulate weight per Hamming class.
    std::vector<double> by_count(n + 1, 0.0);
    for (std::size_t b = 0; b < s.dim(); ++b) {
        by_count[static_cast<std::size_t>(std::popcount(b))] +=
            detail::norm2(s[b]);
    }
    double m2 = 0.0;
    double m4 = 0.0;
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
        const double m = (nn - 2.0 * static_cast<double>(k)) / (2.0 * nn);
        const double m_sq = m * m;
        m2 += by_count[k] * m_sq;
        m4 += by_count[k] * m_sq * m_sq;
    }
    return {m2, m4};
}

} // namespace avqmetts
