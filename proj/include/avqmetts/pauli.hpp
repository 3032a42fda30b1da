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
 * Pauli strings in symplectic (bitmask) form and real-weighted sums of them.
 *
 * Qubit j corresponds to bit j of a computational basis index. A string is
 * stored as a pair of masks: bit j of `x` is set iff qubit j carries X or Y,
 * bit j of `z` is set iff it carries Z or Y.
 *
 * Phase convention: the single-qubit letters are the usual Hermitian
 * matrices, so Y = i X Z and
 *
 *     P |b> = i^{y(P)} (-1)^{popcount(z & b)} |b ^ x>
 *
 * where y(P) is the number of Y letters. This is what `apply_pauli` returns.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace avqmetts {

using Mask = std::uint64_t;

/// Largest register the bitmask encoding supports.
inline constexpr std::size_t kMaxQubits = 63;

namespace detail {

inline Mask low_bits(std::size_t n) {
    return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1;
}

/// i^k for integer k.
inline std::complex<double> i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

} // namespace detail

class PauliString {
  public:
    PauliString() = default;

    PauliString(std::size_t n_qubits, Mask x_mask, Mask z_mask)
        : n_qubits_(n_qubits), x_(x_mask), z_(z_mask) {
        if (n_qubits == 0 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("PauliString: n_qubits out of range");
        }
        if (((x_mask | z_mask) & ~detail::low_bits(n_qubits)) != 0) {
            throw std::invalid_argument(
                "PauliString: mask has bits beyond n_qubits");
        }
    }

    static PauliString identity(std::size_t n_qubits) {
        return {n_qubits, 0, 0};
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] Mask x_mask() const { return x_; }
    [[nodiscard]] Mask z_mask() const { return z_; }
    [[nodiscard]] int y_count() const { return std::popcount(x_ & z_); }
    /// Number of non-identity letters.
    [[nodiscard]] int weight() const { return std::popcount(x_ | z_); }
    [[nodiscard]] bool is_identity() const { return (x_ | z_) == 0; }

    /// 'I', 'X', 'Y' or 'Z' for qubit j.
    [[nodiscard]] char letter(std::size_t j) const {
        const bool x = (x_ >> j) & 1U;
        const bool z = (z_ >> j) & 1U;
        return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }

    /// "Y0 Z3" with ascending qubit indices, or "I" for the identity.
    [[nodiscard]] std::string to_string() const {
        if (is_identity()) {
            return "I";
        }
        std::string out;
        for (std::size_t j = 0; j < n_qubits_; ++j) {
            const char c = letter(j);
            if (c == 'I') {
                continue;
            }
            if (!out.empty()) {
                out += ' ';
            }
            out += c;
            out += std::to_string(j);
        }
        return out;
    }

    friend bool operator==(const PauliString &, const PauliString &) = default;
    friend auto operator<=>(const PauliString &a, const PauliString &b) {
        return std::tie(a.n_qubits_, a.x_, a.z_) <=>
               std::tie(b.n_qubits_, b.x_, b.z_);
    }

  private:
    std::size_t n_qubits_ = 0;
    Mask x_ = 0;
    Mask z_ = 0;
};

using LetterSpec = std::pair<std::size_t, char>;

/// Builds a string from (qubit, letter) pairs; omitted qubits are identity.
inline PauliString pauli_from_letters(std::size_t n_qubits,
                                      std::span<const LetterSpec> letters) {
    Mask x = 0;
    Mask z = 0;
    Mask seen = 0;
    for (const auto &[q, c] : letters) {
        if (q >= n_qubits) {
            throw std::out_of_range("pauli_from_letters: qubit index " +
                                    std::to_string(q) + " out of range");
        }
        const Mask bit = Mask{1} << q;
        if (seen & bit) {
            throw std::invalid_argument(
                "pauli_from_letters: duplicate qubit index " +
                std::to_string(q));
        }
        seen |= bit;
        switch (c) {
        case 'I':
            break;
        case 'X':
            x |= bit;
            break;
        case 'Y':
            x |= bit;
            z |= bit;
            break;
        case 'Z':
            z |= bit;
            break;
        default:
            throw std::invalid_argument(
                std::string("pauli_from_letters: bad letter '") + c + "'");
        }
    }
    return {n_qubits, x, z};
}

inline PauliString
pauli_from_letters(std::size_t n_qubits,
                   std::initializer_list<LetterSpec> letters) {
    return pauli_from_letters(
        n_qubits, std::span<const LetterSpec>(letters.begin(), letters.size()));
}

/// Parses "Y0 Z3" (or "I") into a string on `n_qubits` qubits.
inline PauliString parse_pauli_string(std::string_view text,
                                      std::size_t n_qubits) {
    std::vector<LetterSpec> letters;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') {
            ++pos;
        }
        if (pos == text.size()) {
            break;
        }
        const char c = text[pos++];
        if (c == 'I' && (pos == text.size() || text[pos] == ' ')) {
            continue;
        }
        std::size_t q = 0;
        const auto [ptr, ec] =
            std::from_chars(text.data() + pos, text.data() + text.size(), q);
        if (ec != std::errc{} || (c != 'X' && c != 'Y' && c != 'Z')) {
            throw std::invalid_argument("parse_pauli_string: malformed '" +
                                        std::string(text) + "'");
        }
        pos = static_cast<std::size_t>(ptr - text.data());
        letters.emplace_back(q, c);
    }
    return pauli_from_letters(n_qubits, letters);
}

struct PauliAction {
    Mask basis;
    std::complex<double> phase;
};

/// P|b> = phase |basis>.
inline PauliAction apply_pauli(const PauliString &p, Mask b) {
    const int sign_bits = std::popcount(p.z_mask() & b);
    auto phase = detail::i_pow(p.y_count());
    if (sign_bits & 1) {
        phase = -phase;
    }
    return {b ^ p.x_mask(), phase};
}

inline bool commutes(const PauliString &p, const PauliString &q) {
    if (p.n_qubits() != q.n_qubits()) {
        throw std::invalid_argument("commutes: size mismatch");
    }
    const int s = std::popcount(p.x_mask() & q.z_mask()) +
                  std::popcount(p.z_mask() & q.x_mask());
    return (s & 1) == 0;
}

/// P Q = phase * R.
struct PauliProduct {
    std::complex<double> phase;
    PauliString op;
};

inline PauliProduct multiply(const PauliString &p, const PauliString &q) {
    if (p.n_qubits() != q.n_qubits()) {
        throw std::invalid_argument("multiply: size mismatch");
    }
    // P = i^{y_p} X^{x_p} Z^{z_p}; moving Z^{z_p} past X^{x_q} costs the sign.
    PauliString r(p.n_qubits(), p.x_mask() ^ q.x_mask(),
                  p.z_mask() ^ q.z_mask());
    auto phase = detail::i_pow(p.y_count() + q.y_count() - r.y_count());
    if (std::popcount(p.z_mask() & q.x_mask()) & 1) {
        phase = -phase;
    }
    return {phase, r};
}

/// Real-weighted sum of Pauli strings, kept sorted and merged.
class WeightedPauliSum {
  public:
    struct Term {
        double coeff;
        PauliString op;
        friend bool operator==(const Term &, const Term &) = default;
    };

    explicit WeightedPauliSum(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits == 0 || n_qubits > kMaxQubits) {
            throw std::invalid_argument(
                "WeightedPauliSum: n_qubits out of range");
        }
    }

    WeightedPauliSum(std::size_t n_qubits, std::vector<Term> terms)
        : WeightedPauliSum(n_qubits) {
        terms_ = std::move(terms);
        normalize();
    }

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] const std::vector<Term> &terms() const { return terms_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    /// True iff every term is diagonal in the computational basis.
    [[nodiscard]] bool is_diagonal() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](const Term &t) { return t.op.x_mask() == 0; });
    }

    WeightedPauliSum &add(double coeff, const PauliString &op) {
        if (op.n_qubits() != n_qubits_) {
            throw std::invalid_argument("WeightedPauliSum: size mismatch");
        }
        terms_.push_back({coeff, op});
        normalize();
        return *this;
    }

    /// One term per line, e.g. "+1.0 * Y0 Z3".
    [[nodiscard]] std::string to_string() const {
        std::string out;
        for (const auto &t : terms_) {
            if (!out.empty()) {
                out += '\n';
            }
            out += format_coeff(t.coeff);
            out += " * ";
            out += t.op.to_string();
        }
        return out;
    }

    /// Inverse of to_string(). Terms may be separated by newlines or ';'.
    static WeightedPauliSum parse(std::string_view text, std::size_t n_qubits) {
        WeightedPauliSum out(n_qubits);
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find_first_of("\n;", start);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            auto line = trim(text.substr(start, end - start));
            start = end + 1;
            if (line.empty()) {
                continue;
            }
            const auto star = line.find('*');
            if (star == std::string_view::npos) {
                throw std::invalid_argument("WeightedPauliSum::parse: missing "
                                            "'*' in '" +
                                            std::string(line) + "'");
            }
            auto num = trim(line.substr(0, star));
            if (!num.empty() && num.front() == '+') {
                num.remove_prefix(1);
            }
            double c = 0.0;
            const auto [ptr, ec] =
                std::from_chars(num.data(), num.data() + num.size(), c);
            if (ec != std::errc{} || ptr != num.data() + num.size()) {
                throw std::invalid_argument(
                    "WeightedPauliSum::parse: bad coefficient '" +
                    std::string(num) + "'");
            }
            out.terms_.push_back(
                {c, parse_pauli_string(trim(line.substr(star + 1)), n_qubits)});
        }
        out.normalize();
        return out;
    }

    friend bool operator==(const WeightedPauliSum &,
                           const WeightedPauliSum &) = default;

  private:
    void normalize() {
        for (const auto &t : terms_) {
            if (t.op.n_qubits() != n_qubits_) {
                throw std::invalid_argument("WeightedPauliSum: size mismatch");
            }
        }
        std::stable_sort(
            terms_.begin(), terms_.end(),
            [](const Term &a, const Term &b) { return a.op < b.op; });
        std::vector<Term> merged;
        merged.reserve(terms_.size());
        for (const auto &t : terms_) {
            if (!merged.empty() && merged.back().op == t.op) {
                merged.back().coeff += t.coeff;
            } else {
                merged.push_back(t);
            }
        }
        std::erase_if(merged, [](const Term &t) { return t.coeff == 0.0; });
        terms_ = std::move(merged);
    }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                              s.front() == '\r')) {
            s.remove_prefix(1);
        }
        while (!s.empty() &&
               (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
            s.remove_suffix(1);
        }
        return s;
    }

    static std::string format_coeff(double c) {
        char buf[64];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), c);
        std::string s(buf, ptr);
        if (s.find_first_of(".en") == std::string::npos) {
            s += ".0";
        }
        if (s.front() != '-') {
            s.insert(s.begin(), '+');
        }
        return s;
    }

    std::size_t n_qubits_;
    std::vector<Term> terms_;
};

} // namespace avqmetts
