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
 * Minimally entangled typical thermal states sampled with AVQITE.
 *
 * A walker holds a classical product state |i>. One thermal step evolves it
 * to beta/2, records observables of the resulting state, then collapses that
 * state onto a new product state in the Z or X basis. The basis alternates
 * every step, which keeps the chain ergodic near the fully polarized limits.
 *
 * Walkers are independent; an ensemble runs them on a pool of threads and
 * returns records ordered by (walker_id, step_index) regardless of the
 * schedule, so a fixed master seed reproduces the run bit for bit.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "avqite.hpp"
#include "error.hpp"
#include "io.hpp"
#include "magnetization.hpp"
#include "state.hpp"

namespace avqmetts {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Per-walker seed; distinct walkers get decorrelated streams.
inline std::uint64_t walker_seed(std::uint64_t master_seed,
                                 std::size_t walker_id) {
    return detail::splitmix64(master_seed ^
                              detail::splitmix64(walker_id + 1));
}

inline Basis flip(Basis b) { return b == Basis::Z ? Basis::X : Basis::Z; }

struct Walker {
    std::size_t id = 0;
    Cps current{};
    Basis next_collapse = Basis::X;
    std::mt19937_64 rng;
    std::size_t step_count = 0;

    /// Uniformly random Z-basis start.
    Walker(std::size_t n_qubits, std::uint64_t master_seed, std::size_t walker,
           Basis first_collapse = Basis::X)
        : id(walker), next_collapse(first_collapse),
          rng(walker_seed(master_seed, walker)) {
        current = {static_cast<Mask>(rng()) & detail::low_bits(n_qubits),
                   Basis::Z};
    }
};

struct SampleRecord {
    std::size_t walker_id = 0;
    std::size_t step_index = 0;
    Cps origin{};        ///< product state the step started from
    Cps collapsed_to{};  ///< product state produced by the collapse
    std::map<std::string, double> observables;
    std::size_t n_theta = 0;
    std::size_t n_cx = 0;

    [[nodiscard]] double at(const std::string &name) const {
        const auto it = observables.find(name);
        if (it == observables.end()) {
            throw std::out_of_range("sample has no observable '" + name + "'");
        }
        return it->second;
    }
};

struct MettsOptions {
    bool magnetization = true; ///< record m2 and m4 next to the energy
    Basis first_collapse = Basis::X;
    std::size_t workers = 1;
};

/// Evolve, measure, collapse, flip the basis.
template <Amplitude T>
SampleRecord thermal_step(Walker &w, const Avqite<T> &engine, double beta,
                          bool magnetization = true) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("thermal_step: beta must be >= 0");
    }
    auto res = engine.evolve(w.current, 0.5 * beta);
    enforce_norm(res.state);
    SampleRecord r;
    r.walker_id = w.id;
    r.step_index = w.step_count;
    r.origin = w.current;
    r.observables["energy"] = res.energy;
    if (magnetization) {
        const auto mm = magnetization_moments(res.state);
        r.observables["m2"] = mm.m2;
        r.observables["m4"] = mm.m4;
    }
    r.n_theta = res.ansatz.size();
    r.n_cx = count_cnots(res.ansatz);
    const auto c = collapse(res.state, w.next_collapse, w.rng);
    r.collapsed_to = c.cps;
    w.current = c.cps;
    w.next_collapse = flip(w.next_collapse);
    ++w.step_count;
    return r;
}

/// All burn_in + s_0 steps of one walker; burn-in records are dropped.
template <Amplitude T>
std::vector<SampleRecord> run_walk(Walker &w, const Avqite<T> &engine,
                                   double beta, std::size_t s_0,
                                   std::size_t burn_in,
                                   bool magnetization = true) {
    std::vector<SampleRecord> out;
    out.reserve(s_0);
    for (std::size_t k = 0; k < burn_in + s_0; ++k) {
        auto r = thermal_step(w, engine, beta, magnetization);
        if (k >= burn_in) {
            out.push_back(std::move(r));
        }
    }
    return out;
}

struct EnsembleAccumulator {
    double beta = 0.0;
    std::size_t s_w = 0;
    std::size_t s_0 = 0;
    std::size_t burn_in = 0;
    std::uint64_t master_seed = 0;
    std::vector<SampleRecord> records;

    [[nodiscard]] std::size_t size() const { return records.size(); }
};

/// Raised when a walker fails; the partial ensemble is not usable.
class WalkerFailure : public NumericalError {
  public:
    WalkerFailure(std::size_t walker, std::uint64_t seed, std::size_t step,
                  const std::string &what)
        : NumericalError("walker " + std::to_string(walker) + " (seed " +
                         std::to_string(seed) + ") failed at step " +
                         std::to_string(step) + ": " + what),
          walker_id(walker), seed(seed), step(step) {}

    std::size_t walker_id;
    std::uint64_t seed;
    std::size_t step;
};

/**
 * s_w independent walkers, s_0 kept samples each. Walkers are handed out to
 * `opts.workers` threads; the first failure stops the hand-out and is
 * rethrown as WalkerFailure after all threads join.
 */
template <Amplitude T>
EnsembleAccumulator run_ensemble(const Avqite<T> &engine, double beta,
                                 std::size_t s_w, std::size_t s_0,
                                 std::size_t burn_in,
                                 std::uint64_t master_seed,
                                 const MettsOptions &opts = {}) {
    if (s_w == 0 || s_0 == 0) {
        throw ConfigError("run_ensemble: s_w and s_0 must be positive");
    }
    std::vector<std::vector<SampleRecord>> per_walker(s_w);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::size_t failed_walker = 0;
    std::size_t failed_step = 0;

    auto work = [&] {
        for (;;) {
            const std::size_t id = next.fetch_add(1);
            if (id >= s_w || failed.load()) {
                return;
            }
            Walker w(engine.n_qubits(), master_seed, id, opts.first_collapse);
            try {
                per_walker[id] = run_walk(w, engine, beta, s_0, burn_in,
                                          opts.magnetization);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error || id < failed_walker) {
                    first_error = std::current_exception();
                    failed_walker = id;
                    failed_step = w.step_count;
                }
                failed.store(true);
            }
        }
    };
    const std::size_t n_threads =
        std::clamp<std::size_t>(opts.workers, 1, s_w);
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(work);
        }
    }
    if (first_error) {
        std::string what = "unknown error";
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception &e) {
            what = e.what();
        } catch (...) {
        }
        log::write(log::Level::error,
                   "walker " + std::to_string(failed_walker) + " failed at step " +
                       std::to_string(failed_step) + ": " + what);
        throw WalkerFailure(failed_walker,
                            walker_seed(master_seed, failed_walker),
                            failed_step, what);
    }
    EnsembleAccumulator acc{beta, s_w, s_0, burn_in, master_seed, {}};
    acc.records.reserve(s_w * s_0);
    for (auto &v : per_walker) {
        std::move(v.begin(), v.end(), std::back_inserter(acc.records));
    }
    return acc;
}

/// Convenience overload with the default pool.
template <Amplitude T = double>
EnsembleAccumulator run_ensemble(const WeightedPauliSum &h, double beta,
                                 const AvqiteParams &params, std::size_t s_w,
                                 std::size_t s_0, std::size_t burn_in,
                                 std::uint64_t master_seed,
                                 const MettsOptions &opts = {}) {
    const Avqite<T> engine(h, build_pool(h.n_qubits()), params);
    return run_ensemble(engine, beta, s_w, s_0, burn_in, master_seed, opts);
}

namespace detail {

inline void require_records(const EnsembleAccumulator &acc, const char *who) {
    if (acc.records.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty ensemble");
    }
}

} // namespace detail

inline double ensemble_mean(const EnsembleAccumulator &acc,
                            const std::string &name) {
    detail::require_records(acc, "ensemble_mean");
    double s = 0.0;
    for (const auto &r : acc.records) {
        s += r.at(name);
    }
    return s / static_cast<double>(acc.size());
}

/// (1/S) sqrt(sum_i (O_i - mean)^2).
inline double ensemble_stderr(const EnsembleAccumulator &acc,
                              const std::string &name) {
    const double mean = ensemble_mean(acc, name);
    double ss = 0.0;
    for (const auto &r : acc.records) {
        const double d = r.at(name) - mean;
        ss += d * d;
    }
    return std::sqrt(ss) / static_cast<double>(acc.size());
}

struct CountStats {
    std::size_t count = 0;
    double mean = 0.0;
    double sigma = 0.0; ///< population standard deviation
};

struct CnotStats {
    CountStats all;
    CountStats z_origin;
    CountStats x_origin;
};

namespace detail {

inline CountStats count_stats(const std::vector<double> &v) {
    CountStats s;
    s.count = v.size();
    if (v.empty()) {
        return s;
    }
    for (double x : v) {
        s.mean += x;
    }
    s.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - s.mean) * (x - s.mean);
    }
    s.sigma = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
}

} // namespace detail

inline CnotStats cnot_stats(const EnsembleAccumulator &acc) {
    std::vector<double> all;
    std::vector<double> z;
    std::vector<double> x;
    for (const auto &r : acc.records) {
        const auto c = static_cast<double>(r.n_cx);
        all.push_back(c);
        (r.origin.basis == Basis::Z ? z : x).push_back(c);
    }
    return {detail::count_stats(all), detail::count_stats(z),
            detail::count_stats(x)};
}

/// One row per kept sample, ordered by walker then step.
inline void write_samples_csv(std::ostream &os, const EnsembleAccumulator &acc,
                              bool header = true) {
    if (header) {
        os << "beta,walker_id,step_index,origin_basis,origin_bits,energy,m2,"
              "m4,n_theta,n_cx,collapse_basis,collapsed_bits\n";
    }
    auto opt = [](const SampleRecord &r, const char *name) {
        const auto it = r.observables.find(name);
        return it == r.observables.end() ? std::string{}
                                         : io::fmt(it->second);
    };
    for (const auto &r : acc.records) {
        os << io::fmt(acc.beta) << ',' << r.walker_id << ',' << r.step_index
           << ',' << to_string(r.origin.basis) << ',' << r.origin.bits << ','
           << io::fmt(r.at("energy")) << ',' << opt(r, "m2") << ','
           << opt(r, "m4") << ',' << r.n_theta << ',' << r.n_cx << ','
           << to_string(r.collapsed_to.basis) << ',' << r.collapsed_to.bits
           << '\n';
    }
}

} // namespace avqmetts
