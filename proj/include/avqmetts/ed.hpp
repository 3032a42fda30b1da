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
 * Exact-diagonalization reference: dense spectra, Boltzmann averages, exact
 * imaginary-time states and fidelity traces against the variational path.
 *
 * Energies are shifted by the ground energy before exponentiation so large
 * beta does not overflow.
 */

#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "avqite.hpp"
#include "error.hpp"
#include "io.hpp"
#include "pauli.hpp"
#include "state.hpp"

namespace avqmetts {

/// Raised when a system is too large for the dense oracle.
class CapExceeded : public Error {
  public:
    using Error::Error;
};

struct EdOptions {
    std::size_t max_qubits = 14;
    bool eigenvectors = true;
};

struct Spectrum {
    std::size_t n_qubits = 0;
    Eigen::VectorXd eigenvalues;  ///< ascending
    Eigen::MatrixXd eigenvectors; ///< columns; empty when values only

    [[nodiscard]] bool has_vectors() const { return eigenvectors.size() > 0; }
    [[nodiscard]] double ground_energy() const { return eigenvalues(0); }
    [[nodiscard]] std::size_t dim() const {
        return static_cast<std::size_t>(eigenvalues.size());
    }
};

/// Dense real matrix of an operator whose terms all have an even number of Y
/// letters (real in the computational basis).
inline Eigen::MatrixXd dense_matrix(const WeightedPauliSum &op) {
    const CompiledOperator<double> compiled(op);
    const std::size_t dim = std::size_t{1} << op.n_qubits();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim),
                      static_cast<Eigen::Index>(dim));
    RealState e(op.n_qubits());
    RealState col(op.n_qubits());
    e[0] = 0.0;
    for (std::size_t b = 0; b < dim; ++b) {
        e[b] = 1.0;
        compiled.apply(e, col);
        e[b] = 0.0;
        m.col(static_cast<Eigen::Index>(b)) = Tangent<double>::map(col);
    }
    return m;
}

inline Spectrum diagonalize(const WeightedPauliSum &h,
                            const EdOptions &opts = {}) {
    if (h.n_qubits() > opts.max_qubits) {
        throw CapExceeded("diagonalize: " + std::to_string(h.n_qubits()) +
                          " qubits exceeds the ED cap of " +
                          std::to_string(opts.max_qubits));
    }
    Spectrum s;
    s.n_qubits = h.n_qubits();
    Eigen::MatrixXd a = dense_matrix(h);
    const auto n = static_cast<lapack_int>(a.rows());
    s.eigenvalues.resize(n);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, opts.eigenvectors ? 'V' : 'N', 'L',
                       n, a.data(), n, s.eigenvalues.data());
    if (info != 0) {
        throw NumericalError("dsyevd failed with info " +
                             std::to_string(info));
    }
    if (opts.eigenvectors) {
        s.eigenvectors = std::move(a);
    }
    return s;
}

namespace detail {

inline void require_vectors(const Spectrum &s, const char *who) {
    if (!s.has_vectors()) {
        throw std::invalid_argument(std::string(who) +
                                    ": spectrum has no eigenvectors");
    }
}

/// e^{-beta (E_n - E_0)}.
inline Eigen::VectorXd boltzmann_weights(const Spectrum &s, double beta) {
    if (!(beta >= 0.0)) {
        throw std::invalid_argument("beta must be >= 0");
    }
    const double e0 = s.ground_energy();
    return (-beta * (s.eigenvalues.array() - e0)).exp().matrix();
}

} // namespace detail

/// <n|O|n> for every eigenvector.
inline Eigen::VectorXd diagonal_elements(const Spectrum &s,
                                         const WeightedPauliSum &op) {
    detail::require_vectors(s, "diagonal_elements");
    if (op.n_qubits() != s.n_qubits) {
        throw std::invalid_argument("diagonal_elements: size mismatch");
    }
    const auto dim = static_cast<Eigen::Index>(s.dim());
    Eigen::VectorXd out(dim);
    if (op.is_diagonal()) {
        const CompiledOperator<double> compiled(op);
        RealState ones(s.n_qubits, std::vector<double>(s.dim(), 1.0));
        const RealState d = compiled.apply(ones);
        const auto dv = Tangent<double>::map(d);
        out = s.eigenvectors.array().square().matrix().transpose() * dv;
        return out;
    }
    const Eigen::MatrixXd m = dense_matrix(op);
    const Eigen::MatrixXd mv = m * s.eigenvectors;
    out = (s.eigenvectors.array() * mv.array()).colwise().sum().transpose();
    return out;
}

/// Boltzmann average of per-level values.
inline double boltzmann_average(const Spectrum &s,
                                const Eigen::VectorXd &level_values,
                                double beta) {
    const Eigen::VectorXd w = detail::boltzmann_weights(s, beta);
    return w.dot(level_values) / w.sum();
}

inline double thermal_average(const Spectrum &s, const WeightedPauliSum &op,
                              double beta) {
    return boltzmann_average(s, diagonal_elements(s, op), beta);
}

/// Thermal energy; needs eigenvalues only.
inline double thermal_energy(const Spectrum &s, double beta) {
    return boltzmann_average(s, s.eigenvalues, beta);
}

/// log of the partition function sum_n e^{-beta E_n}.
inline double log_partition_function(const Spectrum &s, double beta) {
    return -beta * s.ground_energy() +
           std::log(detail::boltzmann_weights(s, beta).sum());
}

struct ExactMetts {
    RealState state;
    double p;     ///< <i|e^{-beta H}|i>; may overflow to inf at huge beta
    double log_p;
};

/// P^{-1/2} e^{-beta H / 2} |i> by eigenbasis expansion.
inline ExactMetts exact_metts(const Spectrum &s, const Cps &cps, double beta) {
    detail::require_vectors(s, "exact_metts");
    const RealState ref = prepare_cps<double>(s.n_qubits, cps);
    const Eigen::VectorXd c =
        s.eigenvectors.transpose() * Tangent<double>::map(ref);
    const Eigen::VectorXd half = detail::boltzmann_weights(s, 0.5 * beta);
    const Eigen::VectorXd ch = c.cwiseProduct(half);
    const double shifted_p = ch.squaredNorm();
    Eigen::VectorXd phi = s.eigenvectors * ch;
    phi /= std::sqrt(shifted_p);
    const double log_p = std::log(shifted_p) - beta * s.ground_energy();
    return {RealState(s.n_qubits,
                      std::vector<double>(phi.data(), phi.data() + phi.size())),
            std::exp(log_p), log_p};
}

struct FidelityPoint {
    double tau;
    double infidelity;
    double energy_error;
    double energy_exact;
    double energy_variational;
    std::size_t n_theta;
    std::size_t n_cx;
};

/**
 * Runs the variational evolution next to the exact one on the same tau grid
 * and reports 1 - |<phi(tau)|phi[theta(tau)]>|^2 and |E[theta] - E| per
 * point, including tau = 0. The exact energy must not increase along the
 * flow; a violation is reported as a NumericalError.
 */
template <Amplitude T = double>
std::vector<FidelityPoint>
fidelity_trace(const Spectrum &spec, const Avqite<T> &engine,
               const Cps &reference, double tau_final) {
    detail::require_vectors(spec, "fidelity_trace");
    std::vector<FidelityPoint> out;
    double last_exact = std::numeric_limits<double>::infinity();
    engine.evolve(reference, tau_final,
                  [&](double tau, const StateVector<T> &phi, const Ansatz &a,
                      double energy) {
                      const auto ex = exact_metts(spec, reference, 2.0 * tau);
                      const auto exv = Tangent<double>::map(ex.state);
                      // Exact energy from the eigen-expansion weights.
                      const Eigen::VectorXd c =
                          spec.eigenvectors.transpose() * exv;
                      const double e_exact =
                          c.cwiseAbs2().dot(spec.eigenvalues);
                      double ov = 0.0;
                      if constexpr (std::is_same_v<T, double>) {
                          ov = std::abs(exv.dot(Tangent<double>::map(phi)));
                      } else {
                          ov = std::abs(
                              exv.template cast<cplx>().dot(
                                  Tangent<cplx>::map(phi)));
                      }
                      const double tol =
                          1e-9 * std::max(1.0, std::abs(e_exact));
                      if (e_exact > last_exact + tol) {
                          throw NumericalError(
                              "exact imaginary-time energy increased at tau = " +
                              std::to_string(tau));
                      }
                      last_exact = e_exact;
                      out.push_back({tau, std::max(0.0, 1.0 - ov * ov),
                                     std::abs(energy - e_exact), e_exact,
                                     energy, a.size(), count_cnots(a)});
                  });
    return out;
}

/// Diagonalizes `h` and traces the default-pool evolution from `reference`.
inline std::vector<FidelityPoint>
fidelity_trace(const Cps &reference, const WeightedPauliSum &h,
               const AvqiteParams &params, double tau_final,
               const EdOptions &opts = {}) {
    const Spectrum spec = diagonalize(h, opts);
    const Avqite<double> engine(h, build_pool(h.n_qubits()), params);
    return fidelity_trace(spec, engine, reference, tau_final);
}

/// index,energy
inline void write_levels_csv(std::ostream &os, const Spectrum &s) {
    os << "index,energy\n";
    for (Eigen::Index n = 0; n < s.eigenvalues.size(); ++n) {
        os << n << ',' << io::fmt(s.eigenvalues(n)) << '\n';
    }
}

inline void write_fidelity_csv(std::ostream &os,
                               std::span<const FidelityPoint> pts) {
    os << "tau,infidelity,energy_error,energy_exact,energy_variational,"
          "n_theta,n_cx\n";
    for (const auto &p : pts) {
        os << io::fmt(p.tau) << ',' << io::fmt(p.infidelity) << ','
           << io::fmt(p.energy_error) << ',' << io::fmt(p.energy_exact) << ','
           << io::fmt(p.energy_variational) << ',' << p.n_theta << ','
           << p.n_cx << '\n';
    }
}

} // namespace avqmetts
