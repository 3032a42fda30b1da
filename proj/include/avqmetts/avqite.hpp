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
 * Adaptive variational imaginary-time evolution.
 *
 * The state is a pseudo-Trotter product
 *
 *     |phi(theta)> = exp(-i theta_n A_n) ... exp(-i theta_1 A_1) |ref>
 *
 * and the parameters follow M theta_dot = V with
 *
 *     M_uv = 2 Re[<d_u phi|d_v phi> - <d_u phi|phi><phi|d_v phi>]
 *     V_u  = -2 Re <d_u phi|H|phi>
 *
 * integrated by forward Euler. Before every step the ansatz is grown from an
 * operator pool until the McLachlan distance
 *
 *     L^2 = 1/2 theta_dot^T M theta_dot - V^T theta_dot + var(H)
 *
 * at the optimal theta_dot = M^+ V drops below `l_cut`.
 *
 * All derivative states are kept as the columns of one row-major D x n matrix
 * so that a gate is applied to every column with contiguous row updates, and
 * M is a single rank-n update.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "error.hpp"
#include "io.hpp"
#include "model.hpp"
#include "pauli.hpp"
#include "state.hpp"

namespace avqmetts {

struct AvqiteParams {
    double delta_tau = 0.02;
    double l_cut = 1e-3;
    /// Eigenmodes of M below solver_cutoff * max eigenvalue are dropped.
    /// Smaller values admit nearly dependent directions whose large
    /// theta-dot destabilizes the Euler step.
    double solver_cutoff = 1e-5;
    /// Cap on generators appended before one Euler step; nullopt = no cap.
    std::optional<std::size_t> max_new_ops_per_step;

    void validate() const {
        if (!(delta_tau > 0.0) || !std::isfinite(delta_tau)) {
            throw ConfigError("delta_tau must be a positive finite number");
        }
        if (!(l_cut > 0.0) || !std::isfinite(l_cut)) {
            throw ConfigError("l_cut must be a positive finite number");
        }
        if (!(solver_cutoff >= 0.0) || solver_cutoff >= 1.0) {
            throw ConfigError("solver_cutoff must lie in [0, 1)");
        }
    }
};

struct StepDiagnostics {
    double tau = 0.0;       ///< imaginary time after the step
    std::size_t n_theta = 0;
    double l2 = 0.0;        ///< McLachlan distance after expansion
    double energy = 0.0;    ///< variational energy after the step
    std::size_t n_cx = 0;
    std::size_t n_added = 0;
    bool saturated = false; ///< pool could not push l2 below l_cut
};

class Ansatz {
  public:
    Ansatz(std::size_t n_qubits, Cps reference)
        : n_qubits_(n_qubits), reference_(reference) {}

    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }
    [[nodiscard]] const Cps &reference() const { return reference_; }
    [[nodiscard]] const std::vector<PauliString> &generators() const {
        return generators_;
    }
    [[nodiscard]] const std::vector<double> &thetas() const { return thetas_; }
    [[nodiscard]] std::size_t size() const { return generators_.size(); }
    [[nodiscard]] bool empty() const { return generators_.empty(); }

    /// Appends a generator acting last. A generator equal to the current last
    /// one is merged into it by adding the angles.
    void append(const PauliString &a, double theta = 0.0) {
        if (a.n_qubits() != n_qubits_) {
            throw std::invalid_argument("Ansatz::append: size mismatch");
        }
        if (!generators_.empty() && generators_.back() == a) {
            thetas_.back() += theta;
            return;
        }
        generators_.push_back(a);
        thetas_.push_back(theta);
    }

    void set_thetas(std::span<const double> t) {
        if (t.size() != thetas_.size()) {
            throw std::invalid_argument("Ansatz::set_thetas: size mismatch");
        }
        std::copy(t.begin(), t.end(), thetas_.begin());
    }

    /// Adds `scale * delta` to the parameter vector.
    void advance(const Eigen::VectorXd &delta, double scale) {
        if (static_cast<std::size_t>(delta.size()) != thetas_.size()) {
            throw std::invalid_argument("Ansatz::advance: size mismatch");
        }
        for (std::size_t i = 0; i < thetas_.size(); ++i) {
            thetas_[i] += scale * delta[static_cast<Eigen::Index>(i)];
        }
    }

    template <Amplitude T = double> [[nodiscard]] StateVector<T> state() const {
        auto s = prepare_cps<T>(n_qubits_, reference_);
        for (std::size_t k = 0; k < generators_.size(); ++k) {
            rotate_inplace(s, generators_[k], thetas_[k]);
        }
        return s;
    }

  private:
    std::size_t n_qubits_;
    Cps reference_;
    std::vector<PauliString> generators_;
    std::vector<double> thetas_;
};

/// Two CNOTs per two-qubit rotation; all-to-all connectivity.
inline std::size_t count_cnots(const Ansatz &a) {
    std::size_t n = 0;
    for (const auto &g : a.generators()) {
        if (g.weight() >= 2) {
            ++n;
        }
    }
    return 2 * n;
}

/**
 * L^2 = 1/2 x^T M x - V^T x + var_h. Values within 1e-12 below zero are
 * clamped; anything below -1e-8 means M, V and var_h are inconsistent.
 */
inline double mclachlan_l2(const Eigen::MatrixXd &m, const Eigen::VectorXd &v,
                           const Eigen::VectorXd &theta_dot, double var_h) {
    if (m.rows() != v.size() || m.cols() != v.size() ||
        theta_dot.size() != v.size()) {
        throw std::invalid_argument("mclachlan_l2: size mismatch");
    }
    const double l2 =
        0.5 * theta_dot.dot(m * theta_dot) - v.dot(theta_dot) + var_h;
    if (l2 < -1e-8) {
        throw NumericalError("McLachlan distance is negative: " +
                             std::to_string(l2));
    }
    return (l2 < 0.0 && l2 >= -1e-12) ? 0.0 : l2;
}

/**
 * Tangent-space data of one ansatz at fixed parameters: derivative states,
 * M, V, energy, variance and the pseudo-inverse solution.
 */
template <Amplitude T> class Tangent {
  public:
    using RowMatrix =
        Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    Tangent(std::size_t n_qubits, double solver_cutoff)
        : phi_(n_qubits), hphi_(n_qubits), cutoff_(solver_cutoff) {}

    /// Forward sweep over the ansatz; afterwards column u of derivatives()
    /// holds |d_u phi>, and M, V and the solve are up to date.
    void build(const Ansatz &a, const CompiledOperator<T> &h) {
        sweep(a);
        h.apply(phi_, hphi_);
        const auto phi = map(phi_);
        const auto hphi = map(hphi_);
        energy_ = std::real(phi.dot(hphi));
        variance_ = (hphi - T(energy_) * phi).squaredNorm();

        const auto n = static_cast<Eigen::Index>(a.size());
        const auto g = derivatives();
        overlap_ = g.adjoint() * phi;
        Eigen::MatrixXd gram(n, n);
        if (n > 0) {
            gram = (g.adjoint() * g).real();
        }
        berry_ = 2.0 * (overlap_ * overlap_.adjoint()).real();
        m_ = 2.0 * gram - berry_;
        const double asym = n > 0 ? (m_ - m_.transpose()).cwiseAbs().maxCoeff()
                                  : 0.0;
        if (asym > 1e-9) {
            throw NumericalError("quantum Fisher matrix is not symmetric (" +
                                 std::to_string(asym) + ")");
        }
        m_ = 0.5 * (m_ + m_.transpose()).eval();
        v_ = -2.0 * (g.adjoint() * hphi).real();
        solve();
    }

    /**
     * Appends the derivative column `w` of a generator added last with
     * theta = 0; `m_col` (length n), `m_diag` and `v_new` are its M and V
     * entries. The state itself is unchanged.
     *
     * The pseudo-inverse is bordered with q = M^+ m_col and the Schur
     * complement s = m_diag - m_col^T q instead of being recomputed; call
     * refresh() for the spectral solve. Requires s > 0.
     */
    void append(const Eigen::Ref<const Vector> &w,
                const Eigen::Ref<const Eigen::VectorXd> &m_col, double m_diag,
                double v_new) {
        const Eigen::Index n = m_.rows();
        const Eigen::VectorXd q = m_pinv_ * m_col;
        const double s = m_diag - m_col.dot(q);
        if (!(s > 0.0)) {
            throw std::logic_error("Tangent::append: dependent direction");
        }
        if (n + 1 > derivs_.cols()) {
            RowMatrix grown(derivs_.rows(), 2 * (n + 1));
            grown.leftCols(n) = derivs_.leftCols(n);
            derivs_ = std::move(grown);
        }
        derivs_.col(n) = w;
        n_cols_ = n + 1;
        overlap_.conservativeResize(n + 1);
        overlap_(n) = w.dot(map(phi_));
        Eigen::MatrixXd m(n + 1, n + 1);
        m.topLeftCorner(n, n) = m_;
        m.block(0, n, n, 1) = m_col;
        m.block(n, 0, 1, n) = m_col.transpose();
        m(n, n) = m_diag;
        m_ = std::move(m);
        berry_ = 2.0 * (overlap_ * overlap_.adjoint()).real();
        v_.conservativeResize(n + 1);
        v_(n) = v_new;

        const double r = v_new - m_col.dot(theta_dot_);
        Eigen::MatrixXd p(n + 1, n + 1);
        p.topLeftCorner(n, n) = m_pinv_ + q * q.transpose() / s;
        p.block(0, n, n, 1) = -q / s;
        p.block(n, 0, 1, n) = -q.transpose() / s;
        p(n, n) = 1.0 / s;
        m_pinv_ = std::move(p);
        theta_dot_.conservativeResize(n + 1);
        theta_dot_.head(n) -= q * (r / s);
        theta_dot_(n) = r / s;
        l2_ = std::max(0.0, l2_ - 0.5 * r * r / s);
        fresh_ = false;
    }

    /// Spectral pseudo-inverse solve of the current M and V.
    void refresh() { solve(); }

    /// False after append() until the next refresh() or build().
    [[nodiscard]] bool fresh() const { return fresh_; }

    [[nodiscard]] const StateVector<T> &state() const { return phi_; }
    [[nodiscard]] const StateVector<T> &h_state() const { return hphi_; }
    /// D x n view; column u is |d_u phi>.
    [[nodiscard]] auto derivatives() const { return derivs_.leftCols(n_cols_); }
    [[nodiscard]] const Eigen::MatrixXd &m() const { return m_; }
    [[nodiscard]] const Eigen::VectorXd &v() const { return v_; }
    [[nodiscard]] const Eigen::VectorXd &theta_dot() const { return theta_dot_; }
    [[nodiscard]] const Eigen::MatrixXd &m_pinv() const { return m_pinv_; }
    /// Largest eigenvalue of M (0 for an empty ansatz).
    [[nodiscard]] double m_scale() const { return m_scale_; }
    [[nodiscard]] double energy() const { return energy_; }
    [[nodiscard]] double variance() const { return variance_; }
    [[nodiscard]] double l2() const { return l2_; }
    /// max |2 Re <d_u phi|phi><phi|d_v phi>|; zero for real wavefunctions.
    [[nodiscard]] double berry_term() const {
        return berry_.size() ? berry_.cwiseAbs().maxCoeff() : 0.0;
    }
    [[nodiscard]] double solver_cutoff() const { return cutoff_; }

    static auto map(const StateVector<T> &s) {
        return Eigen::Map<const Vector>(s.data(),
                                        static_cast<Eigen::Index>(s.dim()));
    }

  private:
    // Column k is seeded with -i A_k |phi_k> and then carried through the
    // gates after k. Columns are processed in blocks small enough to stay in
    // cache while every later gate is applied to them.
    void sweep(const Ansatz &a) {
        const std::size_t dim = phi_.dim();
        const std::size_t n = a.size();
        phi_ = prepare_cps<T>(a.n_qubits(), a.reference());
        // Spare columns absorb the generators appended by the next expansion.
        const std::size_t stride = n + n / 4 + 16;
        derivs_.resize(static_cast<Eigen::Index>(dim),
                       static_cast<Eigen::Index>(stride));
        n_cols_ = static_cast<Eigen::Index>(n);
        T *g = derivs_.data();
        const T *amp = phi_.data();
        std::vector<cplx> kappa(n);
        for (std::size_t k = 0; k < n; ++k) {
            const PauliString &gen = a.generators()[k];
            kappa[k] = cplx{0.0, -1.0} * detail::i_pow(gen.y_count());
            rotate_inplace(phi_, gen, a.thetas()[k]);
            const Mask x = gen.x_mask();
            const Mask z = gen.z_mask();
            const T k0 = detail::phase_as<T>(kappa[k]);
            for (std::size_t b = 0; b < dim; ++b) {
                g[(b ^ x) * stride + k] = detail::parity(z & b) ? -k0 * amp[b]
                                                                : k0 * amp[b];
            }
        }
        const std::size_t bs = std::clamp<std::size_t>(
            (std::size_t{1} << 20) / (dim * sizeof(T)), 8, 256);
        std::vector<T> block;
        for (std::size_t c0 = 0; c0 + 1 < n; c0 += bs) {
            const std::size_t c1 = std::min(n, c0 + bs);
            const std::size_t w = c1 - c0;
            block.resize(dim * w);
            for (std::size_t b = 0; b < dim; ++b) {
                std::copy_n(g + b * stride + c0, w, block.data() + b * w);
            }
            for (std::size_t k = c0 + 1; k < n; ++k) {
                const double theta = a.thetas()[k];
                if (theta == 0.0) {
                    continue;
                }
                const PauliString &gen = a.generators()[k];
                rotate_rows(block.data(), w, std::min(k, c1) - c0, dim,
                            gen.x_mask(), gen.z_mask(), kappa[k], theta);
            }
            for (std::size_t b = 0; b < dim; ++b) {
                std::copy_n(block.data() + b * w, w, g + b * stride + c0);
            }
        }
        if (enforce_norm(phi_)) {
            log::debug("renormalized variational state after sweep");
        }
    }

    // Applies exp(-i theta A) to the first `cols` entries of every row.
    static void rotate_rows(T *g, std::size_t stride, std::size_t cols,
                            std::size_t dim, Mask x, Mask z, cplx kappa,
                            double theta) {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        if (x == 0) {
            const T plus = detail::phase_as<T>(c + s * kappa);
            const T minus = detail::phase_as<T>(c - s * kappa);
            for (std::size_t b = 0; b < dim; ++b) {
                const T f = detail::parity(z & b) ? minus : plus;
                T *row = g + b * stride;
                for (std::size_t j = 0; j < cols; ++j) {
                    row[j] *= f;
                }
            }
            return;
        }
        const T k = detail::phase_as<T>(s * kappa);
        const std::size_t hb = std::size_t{1} << (63 - std::countl_zero(x));
        for (std::size_t base = 0; base < dim; base += 2 * hb) {
            for (std::size_t lo = 0; lo < hb; ++lo) {
                const std::size_t b = base | lo;
                const std::size_t p = b ^ x;
                const T kb = detail::parity(z & p) ? -k : k;
                const T kp = detail::parity(z & b) ? -k : k;
                T *__restrict rb = g + b * stride;
                T *__restrict rp = g + p * stride;
                for (std::size_t j = 0; j < cols; ++j) {
                    const T u = rb[j];
                    const T w = rp[j];
                    rb[j] = c * u + kb * w;
                    rp[j] = c * w + kp * u;
                }
            }
        }
    }

    void solve() {
        fresh_ = true;
        const Eigen::Index n = m_.rows();
        if (n == 0) {
            theta_dot_.resize(0);
            m_pinv_.resize(0, 0);
            m_scale_ = 0.0;
            l2_ = mclachlan_l2(m_, v_, theta_dot_, variance_);
            return;
        }
        Eigen::MatrixXd q = m_;
        Eigen::VectorXd lam(n);
        const auto ln = static_cast<lapack_int>(n);
        const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', ln,
                                               q.data(), ln, lam.data());
        if (info != 0) {
            throw NumericalError("eigensolver failed on M (info " +
                                 std::to_string(info) + ")");
        }
        m_scale_ = std::max(lam.maxCoeff(), 0.0);
        Eigen::VectorXd root = Eigen::VectorXd::Zero(n);
        if (m_scale_ > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (lam(i) > cutoff_ * m_scale_) {
                    root(i) = 1.0 / std::sqrt(lam(i));
                }
            }
        }
        q = q * root.asDiagonal();
        m_pinv_.noalias() = q * q.transpose();
        theta_dot_ = m_pinv_ * v_;
        l2_ = mclachlan_l2(m_, v_, theta_dot_, variance_);
    }

    StateVector<T> phi_;
    StateVector<T> hphi_;
    RowMatrix derivs_;
    Eigen::Index n_cols_ = 0;
    Vector overlap_;
    Eigen::MatrixXd m_;
    Eigen::MatrixXd berry_;
    Eigen::VectorXd v_;
    Eigen::MatrixXd m_pinv_;
    Eigen::VectorXd theta_dot_;
    double m_scale_ = 0.0;
    double energy_ = 0.0;
    double variance_ = 0.0;
    double l2_ = 0.0;
    double cutoff_;
    bool fresh_ = true;
};

/// |d_u phi> for every parameter, via one forward sweep.
template <Amplitude T = double>
std::vector<StateVector<T>> derivative_states(const Ansatz &a) {
    Tangent<T> t(a.n_qubits(), 1e-8);
    WeightedPauliSum zero(a.n_qubits());
    t.build(a, CompiledOperator<T>(zero));
    std::vector<StateVector<T>> out;
    const auto &g = t.derivatives();
    for (Eigen::Index u = 0; u < g.cols(); ++u) {
        std::vector<T> col(static_cast<std::size_t>(g.rows()));
        for (Eigen::Index b = 0; b < g.rows(); ++b) {
            col[static_cast<std::size_t>(b)] = g(b, u);
        }
        out.emplace_back(a.n_qubits(), std::move(col));
    }
    return out;
}

template <Amplitude T = double> Eigen::MatrixXd compute_m(const Ansatz &a) {
    Tangent<T> t(a.n_qubits(), 1e-8);
    WeightedPauliSum zero(a.n_qubits());
    t.build(a, CompiledOperator<T>(zero));
    return t.m();
}

template <Amplitude T = double>
Eigen::VectorXd compute_v(const Ansatz &a, const WeightedPauliSum &h) {
    if (h.n_qubits() != a.n_qubits()) {
        throw std::invalid_argument("compute_v: size mismatch");
    }
    Tangent<T> t(a.n_qubits(), 1e-8);
    t.build(a, CompiledOperator<T>(h));
    return t.v();
}

struct ExpandReport {
    std::size_t n_added = 0;
    double l2 = 0.0;
    bool saturated = false;
};

template <Amplitude T> struct EvolveResult {
    Ansatz ansatz;
    StateVector<T> state;
    double energy;
    std::vector<StepDiagnostics> trace;
};

/**
 * AVQITE driver for one Hamiltonian and pool. All methods are const and
 * keep their workspaces local, so one instance can serve several threads.
 */
template <Amplitude T = double> class Avqite {
  public:
    /// Called at tau = 0 and after every Euler step.
    using Observer = std::function<void(double tau, const StateVector<T> &,
                                        const Ansatz &, double energy)>;

    Avqite(const WeightedPauliSum &h, std::vector<PauliString> pool,
           AvqiteParams params)
        : h_(std::make_shared<const CompiledOperator<T>>(h)),
          pool_(std::make_shared<const std::vector<PauliString>>(
              std::move(pool))),
          params_(params), n_qubits_(h.n_qubits()) {
        params_.validate();
        for (const auto &p : *pool_) {
            if (p.n_qubits() != n_qubits_) {
                throw std::invalid_argument("Avqite: pool size mismatch");
            }
            if constexpr (std::is_same_v<T, double>) {
                if (p.y_count() % 2 == 0) {
                    throw std::invalid_argument(
                        "Avqite<double>: every pool generator needs an odd "
                        "number of Y letters");
                }
            }
        }
    }

    [[nodiscard]] const AvqiteParams &params() const { return params_; }
    [[nodiscard]] const CompiledOperator<T> &hamiltonian() const { return *h_; }
    [[nodiscard]] const std::vector<PauliString> &pool() const { return *pool_; }
    [[nodiscard]] std::size_t n_qubits() const { return n_qubits_; }

    /**
     * Grows `a` until the optimal L^2 is at most l_cut. Each round scores
     * every pool operator by the rank-one extension of M and V (appending at
     * theta = 0 leaves the state unchanged) and appends the best one; ties go
     * to the earlier pool entry.
     */
    ExpandReport expand(Ansatz &a, Tangent<T> &t) const {
        ExpandReport rep;
        rep.l2 = t.l2();
        if (rep.l2 <= params_.l_cut || pool_->empty()) {
            rep.saturated = rep.l2 > params_.l_cut;
            return rep;
        }
        using Vector = typename Tangent<T>::Vector;
        using Matrix = typename Tangent<T>::Matrix;
        const auto phi = Tangent<T>::map(t.state());
        const auto hphi = Tangent<T>::map(t.h_state());
        const auto dim = static_cast<Eigen::Index>(t.state().dim());
        const auto np = static_cast<Eigen::Index>(pool_->size());

        // Candidate derivative states -i A_c |phi>, one per column.
        Matrix w(dim, np);
        for (Eigen::Index c = 0; c < np; ++c) {
            const PauliString &p = (*pool_)[static_cast<std::size_t>(c)];
            const T k0 = detail::phase_as<T>(cplx{0.0, -1.0} *
                                             detail::i_pow(p.y_count()));
            const Mask x = p.x_mask();
            const Mask z = p.z_mask();
            for (Eigen::Index b = 0; b < dim; ++b) {
                const auto ub = static_cast<Mask>(b);
                w(static_cast<Eigen::Index>(ub ^ x), c) =
                    detail::parity(z & ub) ? -k0 * phi(b) : k0 * phi(b);
            }
        }
        const Vector phi_w = w.adjoint() * phi; // <w_c|phi>
        const Eigen::VectorXd v_cand = -2.0 * (w.adjoint() * hphi).real();
        const Eigen::VectorXd m_diag =
            2.0 * (Eigen::VectorXd::Ones(np) - phi_w.cwiseAbs2());
        // b(u, c) = M entry between existing parameter u and candidate c.
        Eigen::MatrixXd b_mat =
            2.0 * (t.derivatives().adjoint() * w).real() -
            2.0 * ((t.derivatives().adjoint() * phi) * phi_w.adjoint()).real();

        const std::size_t cap = params_.max_new_ops_per_step.value_or(
            std::numeric_limits<std::size_t>::max());
        while (t.l2() > params_.l_cut && rep.n_added < cap) {
            const Eigen::MatrixXd q = t.m_pinv() * b_mat;
            const double tol =
                t.solver_cutoff() * std::max(t.m_scale(), m_diag.maxCoeff());
            Eigen::Index best = -1;
            double best_gain = 0.0;
            for (Eigen::Index c = 0; c < np; ++c) {
                const double s = m_diag(c) - b_mat.col(c).dot(q.col(c));
                if (!(s > tol)) {
                    continue;
                }
                const double r = v_cand(c) - b_mat.col(c).dot(t.theta_dot());
                const double gain = r * r / (2.0 * s);
                // Gains equal up to roundoff are ties; the earlier entry wins.
                if (gain > best_gain * (1.0 + 1e-6)) {
                    best_gain = gain;
                    best = c;
                }
            }
            if (best < 0 || best_gain <= 1e-12) {
                break;
            }
            a.append((*pool_)[static_cast<std::size_t>(best)], 0.0);
            const Vector w_new = w.col(best);
            const Eigen::VectorXd m_col = b_mat.col(best);
            t.append(w_new, m_col, m_diag(best), v_cand(best));
            Eigen::MatrixXd grown(b_mat.rows() + 1, np);
            grown.topRows(b_mat.rows()) = b_mat;
            grown.row(b_mat.rows()) =
                2.0 * (w_new.adjoint() * w).real() -
                2.0 * (phi_w(best) * phi_w.adjoint()).real();
            b_mat = std::move(grown);
            ++rep.n_added;
            if (t.l2() <= params_.l_cut) {
                t.refresh();
            }
        }
        if (!t.fresh()) {
            t.refresh();
        }
        rep.l2 = t.l2();
        rep.saturated = rep.l2 > params_.l_cut;
        if (rep.saturated) {
            log::debug("ansatz expansion saturated at L^2 = " +
                       std::to_string(rep.l2));
        }
        return rep;
    }

    /// theta <- theta + dt * M^+ V, using the solve held by `t`.
    void euler_update(Ansatz &a, const Tangent<T> &t, double dt) const {
        if (static_cast<std::size_t>(t.v().size()) != a.size()) {
            throw std::logic_error("euler_update: tangent is stale");
        }
        if (a.size() > 0 && t.m_scale() <= 1e-14 &&
            t.v().norm() > 1e-10) {
            throw NumericalError(
                "euler step: vanishing M with nonzero energy gradient");
        }
        a.advance(t.theta_dot(), dt);
    }

    /// Expansion followed by one Euler step of length delta_tau.
    StepDiagnostics step(Ansatz &a) const {
        Tangent<T> t(n_qubits_, params_.solver_cutoff);
        t.build(a, *h_);
        const auto rep = expand(a, t);
        euler_update(a, t, params_.delta_tau);
        StepDiagnostics d;
        d.n_theta = a.size();
        d.l2 = rep.l2;
        d.n_cx = count_cnots(a);
        d.n_added = rep.n_added;
        d.saturated = rep.saturated;
        d.energy = expectation(a.state<T>(), *h_);
        d.tau = params_.delta_tau;
        return d;
    }

    /// Number of Euler steps to reach tau_final; the last may be shorter.
    [[nodiscard]] std::size_t step_count(double tau_final) const {
        if (tau_final <= 0.0) {
            return 0;
        }
        const double r = tau_final / params_.delta_tau;
        const double nearest = std::round(r);
        if (std::abs(r - nearest) < 1e-9 * std::max(1.0, r)) {
            return static_cast<std::size_t>(nearest);
        }
        return static_cast<std::size_t>(std::ceil(r));
    }

    EvolveResult<T> evolve(const Cps &reference, double tau_final,
                           const Observer &observer = {}) const {
        if (!(tau_final >= 0.0) || !std::isfinite(tau_final)) {
            throw std::invalid_argument("evolve: tau_final must be >= 0");
        }
        Ansatz a(n_qubits_, reference);
        const std::size_t n_steps = step_count(tau_final);
        std::vector<StepDiagnostics> trace;
        trace.reserve(n_steps);
        Tangent<T> t(n_qubits_, params_.solver_cutoff);
        t.build(a, *h_);
        if (observer) {
            observer(0.0, t.state(), a, t.energy());
        }
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double tau0 = static_cast<double>(k) * params_.delta_tau;
            const double dt = (k + 1 == n_steps)
                                  ? tau_final - tau0
                                  : params_.delta_tau;
            const auto rep = expand(a, t);
            euler_update(a, t, dt);
            t.build(a, *h_);
            StepDiagnostics d;
            d.tau = (k + 1 == n_steps) ? tau_final : tau0 + dt;
            d.n_theta = a.size();
            d.l2 = rep.l2;
            d.energy = t.energy();
            d.n_cx = count_cnots(a);
            d.n_added = rep.n_added;
            d.saturated = rep.saturated;
            trace.push_back(d);
            if (observer) {
                observer(d.tau, t.state(), a, d.energy);
            }
        }
        StateVector<T> final_state = t.state();
        if constexpr (std::is_same_v<T, cplx>) {
            check_real_path(a, final_state);
        }
        const double e = t.energy();
        return {std::move(a), std::move(final_state), e, std::move(trace)};
    }

  private:
    // A real reference evolved only by odd-Y generators must stay real.
    static void check_real_path(const Ansatz &a, const StateVector<cplx> &s) {
        const bool odd = std::all_of(
            a.generators().begin(), a.generators().end(),
            [](const PauliString &g) { return g.y_count() % 2 == 1; });
        if (odd && max_imag(s) > 1e-10) {
            throw NumericalError(
                "real-amplitude invariant violated along imaginary time");
        }
    }

    std::shared_ptr<const CompiledOperator<T>> h_;
    std::shared_ptr<const std::vector<PauliString>> pool_;
    AvqiteParams params_;
    std::size_t n_qubits_;
};

/// Expansion of `a` against `h` and `pool`; the ansatz is returned grown.
template <Amplitude T = double>
std::pair<Ansatz, StepDiagnostics>
expand(Ansatz a, const std::vector<PauliString> &pool,
       const WeightedPauliSum &h, const AvqiteParams &params) {
    Avqite<T> engine(h, pool, params);
    Tangent<T> t(a.n_qubits(), params.solver_cutoff);
    t.build(a, engine.hamiltonian());
    const auto rep = engine.expand(a, t);
    StepDiagnostics d;
    d.n_theta = a.size();
    d.l2 = rep.l2;
    d.energy = t.energy();
    d.n_cx = count_cnots(a);
    d.n_added = rep.n_added;
    d.saturated = rep.saturated;
    return {std::move(a), d};
}

/// One Euler step without expansion.
template <Amplitude T = double>
std::pair<Ansatz, StepDiagnostics> euler_step(Ansatz a,
                                              const WeightedPauliSum &h,
                                              const AvqiteParams &params) {
    Avqite<T> engine(h, {}, params);
    Tangent<T> t(a.n_qubits(), params.solver_cutoff);
    t.build(a, engine.hamiltonian());
    engine.euler_update(a, t, params.delta_tau);
    StepDiagnostics d;
    d.tau = params.delta_tau;
    d.n_theta = a.size();
    d.l2 = t.l2();
    d.energy = expectation(a.state<T>(), engine.hamiltonian());
    d.n_cx = count_cnots(a);
    return {std::move(a), d};
}

template <Amplitude T = double>
EvolveResult<T> evolve(const Cps &reference, const WeightedPauliSum &h,
                       double tau_final, const AvqiteParams &params) {
    return Avqite<T>(h, build_pool(h.n_qubits()), params)
        .evolve(reference, tau_final);
}

/// tau,n_theta,l2,energy,n_cx
inline void write_diagnostics_csv(std::ostream &os,
                                  std::span<const StepDiagnostics> trace) {
    os << "tau,n_theta,l2,energy,n_cx\n";
    for (const auto &d : trace) {
        os << io::fmt(d.tau) << ',' << d.n_theta << ',' << io::fmt(d.l2)
           << ',' << io::fmt(d.energy) << ',' << d.n_cx << '\n';
    }
}

} // namespace avqmetts
