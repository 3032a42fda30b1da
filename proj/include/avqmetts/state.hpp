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
 * Dense statevector engine.
 *
 * `StateVector<T>` stores 2^N amplitudes of type `double` or
 * `std::complex<double>`. The real instantiation is used whenever every gate
 * keeps amplitudes real (rotations about Pauli strings with an odd number of
 * Y letters, started from a real reference); operations that would leave the
 * real line throw instead of silently dropping the imaginary part.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"
#include "pauli.hpp"

namespace avqmetts {

using cplx = std::complex<double>;

template <class T>
concept Amplitude = std::same_as<T, double> || std::same_as<T, cplx>;

enum class Basis { Z, X };

inline const char *to_string(Basis b) { return b == Basis::Z ? "Z" : "X"; }

/// Classical product state: |bits> in the Z basis or H^{(x)N}|bits> in X.
struct Cps {
    Mask bits = 0;
    Basis basis = Basis::Z;
    friend bool operator==(const Cps &, const Cps &) = default;
};

namespace detail {

inline double norm2(double a) { return a * a; }
inline double norm2(const cplx &a) { return std::norm(a); }
inline double conj(double a) { return a; }
inline cplx conj(const cplx &a) { return std::conj(a); }

/// Converts a phase to T; throws if T is real and the phase is not.
template <Amplitude T> T phase_as(const cplx &phase) {
    if constexpr (std::is_same_v<T, double>) {
        if (phase.imag() != 0.0) {
            throw std::domain_error(
                "operation leaves the real amplitude subspace");
        }
        return phase.real();
    } else {
        return phase;
    }
}

inline int parity(Mask m) { return std::popcount(m) & 1; }

} // namespace detail

template <Amplitude T> class StateVector {
  public:
    using value_type = T;

    /// |0...0> on n_qubits.
    explicit StateVector(std::size_t n_qubits)
        : n_qubits_(checked(n_qubits)), amps_(std::size_t{1} << n_qubits) {
        amps_[0] = T{1};
    }

    StateVector(std::size_t n_qubits, std::vector<T> amplitudes)
        : n_qubits_(checked(n_qubits)), amps_(std::move(amplitudes)) {
        if (amps_.size() != (std::size_t{1} << n_qubits_)) {
            throw std::invalid_argument("StateVector: expected 2^n amplitudes");
        }
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const { return amps_.size(); }
    [[nodiscard]] std::span<T> amplitudes() { return amps_; }
    [[nodiscard]] std::span<const T> amplitudes() const { return amps_; }
    [[nodiscard]] T *data() { return amps_.data(); }
    [[nodiscard]] const T *data() const { return amps_.data(); }
    T &operator[](std::size_t b) { return amps_[b]; }
    const T &operator[](std::size_t b) const { return amps_[b]; }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += detail::norm2(a);
        }
        return std::sqrt(s);
    }

    /// |amp_b|^2 for every basis state.
    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> p(amps_.size());
        std::transform(amps_.begin(), amps_.end(), p.begin(),
                       [](const T &a) { return detail::norm2(a); });
        return p;
    }

    void scale(double f) {
        for (auto &a : amps_) {
            a *= f;
        }
    }

    /// Complex copy of this state.
    [[nodiscard]] StateVector<cplx> to_complex() const {
        return {n_qubits_, std::vector<cplx>(amps_.begin(), amps_.end())};
    }

  private:
    static std::size_t checked(std::size_t n) {
        if (n == 0 || n > 30) {
            throw std::invalid_argument(
                "StateVector: n_qubits must be in [1, 30]");
        }
        return n;
    }

    std::size_t n_qubits_;
    std::vector<T> amps_;
};

using ComplexState = StateVector<cplx>;
using RealState = StateVector<double>;

/// Largest imaginary part of any amplitude.
inline double max_imag(const ComplexState &s) {
    double m = 0.0;
    for (const auto &a : s.amplitudes()) {
        m = std::max(m, std::abs(a.imag()));
    }
    return m;
}

/// Real copy of a complex state; throws if any |imag| exceeds `tol`.
inline RealState to_real(const ComplexState &s, double tol = 1e-10) {
    if (max_imag(s) > tol) {
        throw NumericalError("to_real: state has imaginary amplitudes");
    }
    std::vector<double> re(s.dim());
    for (std::size_t b = 0; b < s.dim(); ++b) {
        re[b] = s[b].real();
    }
    return {s.n_qubits(), std::move(re)};
}

/// In-place H^{(x)N} (fast Walsh-Hadamard transform, normalized).
template <Amplitude T> void apply_hadamard_layer(StateVector<T> &s) {
    const std::size_t dim = s.dim();
    T *a = s.data();
    for (std::size_t h = 1; h < dim; h <<= 1) {
        for (std::size_t base = 0; base < dim; base += 2 * h) {
            for (std::size_t j = base; j < base + h; ++j) {
                const T u = a[j];
                const T v = a[j + h];
                a[j] = u + v;
                a[j + h] = u - v;
            }
        }
    }
    s.scale(std::pow(2.0, -0.5 * static_cast<double>(s.n_qubits())));
}

template <Amplitude T = cplx>
StateVector<T> prepare_cps(std::size_t n_qubits, const Cps &c) {
    if ((c.bits & ~detail::low_bits(n_qubits)) != 0) {
        throw std::invalid_argument("prepare_cps: bits beyond n_qubits");
    }
    StateVector<T> s(n_qubits);
    s[0] = T{0};
    if (c.basis == Basis::Z) {
        s[c.bits] = T{1};
        return s;
    }
    const double amp = std::pow(2.0, -0.5 * static_cast<double>(n_qubits));
    for (std::size_t b = 0; b < s.dim(); ++b) {
        s[b] = T{detail::parity(c.bits & b) ? -amp : amp};
    }
    return s;
}

/// out = P |in>.
template <Amplitude T>
void apply_pauli(const PauliString &p, const StateVector<T> &in,
                 StateVector<T> &out) {
    if (p.n_qubits() != in.n_qubits() || out.n_qubits() != in.n_qubits()) {
        throw std::invalid_argument("apply_pauli: size mismatch");
    }
    const T base = detail::phase_as<T>(detail::i_pow(p.y_count()));
    const Mask x = p.x_mask();
    const Mask z = p.z_mask();
    for (std::size_t b = 0; b < in.dim(); ++b) {
        out[b ^ x] = detail::parity(z & b) ? -base * in[b] : base * in[b];
    }
}

/// -i P |s>: the tangent direction generated by exp(-i theta P) at theta = 0.
template <Amplitude T>
StateVector<T> apply_generator(const PauliString &p, const StateVector<T> &s) {
    if (p.n_qubits() != s.n_qubits()) {
        throw std::invalid_argument("apply_generator: size mismatch");
    }
    StateVector<T> out(s.n_qubits());
    const T k = detail::phase_as<T>(cplx{0.0, -1.0} *
                                    detail::i_pow(p.y_count()));
    const Mask x = p.x_mask();
    const Mask z = p.z_mask();
    for (std::size_t b = 0; b < s.dim(); ++b) {
        out[b ^ x] = detail::parity(z & b) ? -k * s[b] : k * s[b];
    }
    return out;
}

/// In-place exp(-i theta A) |s> = cos(theta)|s> - i sin(theta) A|s>.
template <Amplitude T>
void rotate_inplace(StateVector<T> &s, const PauliString &a, double theta) {
    if (a.n_qubits() != s.n_qubits()) {
        throw std::invalid_argument("apply_rotation: size mismatch");
    }
    if (theta == 0.0) {
        return;
    }
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    const Mask x = a.x_mask();
    const Mask z = a.z_mask();
    const std::size_t dim = s.dim();
    T *amp = s.data();
    // -i * i^y
    const cplx kappa = cplx{0.0, -1.0} * detail::i_pow(a.y_count());
    if (x == 0) {
        const T plus = detail::phase_as<T>(c + sn * kappa);
        const T minus = detail::phase_as<T>(c - sn * kappa);
        for (std::size_t b = 0; b < dim; ++b) {
            amp[b] *= detail::parity(z & b) ? minus : plus;
        }
        return;
    }
    const T k = detail::phase_as<T>(sn * kappa);
    const std::size_t hb = std::size_t{1} << (63 - std::countl_zero(x));
    for (std::size_t base = 0; base < dim; base += 2 * hb) {
        for (std::size_t lo = 0; lo < hb; ++lo) {
            const std::size_t b = base | lo;
            const std::size_t p = b ^ x;
            const T sb = amp[b];
            const T sp = amp[p];
            amp[b] = c * sb + (detail::parity(z & p) ? -k : k) * sp;
            amp[p] = c * sp + (detail::parity(z & b) ? -k : k) * sb;
        }
    }
}

template <Amplitude T>
StateVector<T> apply_rotation(StateVector<T> s, const PauliString &a,
                              double theta) {
    rotate_inplace(s, a, theta);
    return s;
}

/// <a|b>.
template <Amplitude T>
T inner(const StateVector<T> &a, const StateVector<T> &b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw std::invalid_argument("inner: size mismatch");
    }
    T s{0};
    for (std::size_t i = 0; i < a.dim(); ++i) {
        s += detail::conj(a[i]) * b[i];
    }
    return s;
}

/**
 * A WeightedPauliSum grouped by X mask, with the per-basis-state diagonal
 * factors precomputed: O|psi>[b ^ x] += d_x[b] psi[b].
 */
template <Amplitude T> class CompiledOperator {
  public:
    explicit CompiledOperator(const WeightedPauliSum &op)
        : n_qubits_(op.n_qubits()) {
        if (n_qubits_ > 30) {
            throw std::invalid_argument("CompiledOperator: too many qubits");
        }
        const std::size_t dim = std::size_t{1} << n_qubits_;
        for (const auto &term : op.terms()) {
            const T base = detail::phase_as<T>(
                term.coeff * detail::i_pow(term.op.y_count()));
            auto it = std::find_if(
                groups_.begin(), groups_.end(),
                [&](const Group &g) { return g.x == term.op.x_mask(); });
            if (it == groups_.end()) {
                groups_.push_back({term.op.x_mask(), std::vector<T>(dim)});
                it = std::prev(groups_.end());
            }
            const Mask z = term.op.z_mask();
            for (std::size_t b = 0; b < dim; ++b) {
                it->d[b] += detail::parity(z & b) ? -base : base;
            }
        }
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }

    /// out = O |in>.
    void apply(const StateVector<T> &in, StateVector<T> &out) const {
        check(in);
        check(out);
        std::fill(out.amplitudes().begin(), out.amplitudes().end(), T{0});
        for (const auto &g : groups_) {
            for (std::size_t b = 0; b < in.dim(); ++b) {
                out[b ^ g.x] += g.d[b] * in[b];
            }
        }
    }

    [[nodiscard]] StateVector<T> apply(const StateVector<T> &in) const {
        StateVector<T> out(n_qubits_);
        apply(in, out);
        return out;
    }

    /// <s|O|s> before discarding the imaginary part.
    [[nodiscard]] cplx expectation_raw(const StateVector<T> &s) const {
        check(s);
        cplx acc{0.0};
        for (const auto &g : groups_) {
            T part{0};
            for (std::size_t b = 0; b < s.dim(); ++b) {
                part += detail::conj(s[b ^ g.x]) * g.d[b] * s[b];
            }
            acc += part;
        }
        return acc;
    }

  private:
    struct Group {
        Mask x;
        std::vector<T> d;
    };

    void check(const StateVector<T> &s) const {
        if (s.n_qubits() != n_qubits_) {
            throw std::invalid_argument("CompiledOperator: size mismatch");
        }
    }

    std::size_t n_qubits_;
    std::vector<Group> groups_;
};

/// <s|O|s> for Hermitian O. An imaginary residual above 1e-8 means the phase
/// convention is broken somewhere and is reported as a NumericalError.
template <Amplitude T>
double expectation(const StateVector<T> &s, const CompiledOperator<T> &op) {
    const cplx v = op.expectation_raw(s);
    if (std::abs(v.imag()) > 1e-8) {
        throw NumericalError("expectation: imaginary residual " +
                             std::to_string(v.imag()));
    }
    return v.real();
}

template <Amplitude T>
double expectation(const StateVector<T> &s, const WeightedPauliSum &op) {
    if (op.n_qubits() != s.n_qubits()) {
        throw std::invalid_argument("expectation: size mismatch");
    }
    return expectation(s, CompiledOperator<T>(op));
}

/**
 * Keeps the state on the unit sphere: drift above 1e-10 is renormalized,
 * drift above 1e-6 throws. Returns true if the state was rescaled.
 */
template <Amplitude T> bool enforce_norm(StateVector<T> &s) {
    const double n = s.norm();
    const double drift = std::abs(n - 1.0);
    if (drift > 1e-6) {
        throw NumericalError("state norm drifted to " + std::to_string(n));
    }
    if (drift > 1e-10) {
        s.scale(1.0 / n);
        log::debug("renormalized state (drift " + std::to_string(drift) +
                   ")");
        return true;
    }
    return false;
}

struct CollapseResult {
    Cps cps;
    double probability;
};

/// Samples a basis index from |amp|^2 (after a Hadamard layer for X).
template <Amplitude T, class Rng>
CollapseResult collapse(const StateVector<T> &s, Basis basis, Rng &rng) {
    std::vector<double> p;
    if (basis == Basis::X) {
        StateVector<T> rotated = s;
        apply_hadamard_layer(rotated);
        p = rotated.probabilities();
    } else {
        p = s.probabilities();
    }
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    const double total = cdf.back();
    if (std::abs(total - 1.0) > 1e-8) {
        throw NumericalError("collapse: probabilities sum to " +
                             std::to_string(total));
    }
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    // u == total can only land past the end through rounding.
    idx = std::min(idx, p.size() - 1);
    while (p[idx] == 0.0 && idx > 0) {
        --idx;
    }
    return {Cps{static_cast<Mask>(idx), basis}, p[idx]};
}

/// Little-endian (re, im) float64 pairs, index-major. Debugging aid.
template <Amplitude T>
void write_amplitudes_binary(const StateVector<T> &s, std::ostream &os) {
    static_assert(std::endian::native == std::endian::little,
                  "binary dump assumes a little-endian host");
    for (const auto &a : s.amplitudes()) {
        const cplx c{a};
        const double pair[2] = {c.real(), c.imag()};
        os.write(reinterpret_cast<const char *>(pair), sizeof(pair));
    }
}

} // namespace avqmetts
