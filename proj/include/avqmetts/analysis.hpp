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
 * Binder cumulant U4 = 1 - <m^4> / (3 <m^2>^2) from METTS ensembles and
 * exact spectra, bootstrap errors, and crossing extraction between two
 * lattice sizes.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ed.hpp"
#include "error.hpp"
#include "io.hpp"
#include "magnetization.hpp"
#include "metts.hpp"
#include "model.hpp"

namespace avqmetts {

/// Ratio of means; mean_m2 must be positive.
inline double binder_u4(double mean_m2, double mean_m4) {
    if (!(mean_m2 > 0.0)) {
        throw std::domain_error("binder_u4: <m^2> must be positive");
    }
    return 1.0 - mean_m4 / (3.0 * mean_m2 * mean_m2);
}

inline double binder_u4(const EnsembleAccumulator &acc) {
    return binder_u4(ensemble_mean(acc, "m2"), ensemble_mean(acc, "m4"));
}

/// Standard deviation of U4 over `resamples` bootstrap copies of the records.
inline double binder_error(const EnsembleAccumulator &acc,
                           std::size_t resamples, std::uint64_t seed) {
    if (resamples < 100) {
        throw std::invalid_argument("binder_error: need at least 100 resamples");
    }
    const std::size_t s = acc.size();
    if (s < 2) {
        throw std::invalid_argument("binder_error: need at least 2 records");
    }
    std::vector<double> m2(s);
    std::vector<double> m4(s);
    for (std::size_t i = 0; i < s; ++i) {
        m2[i] = acc.records[i].at("m2");
        m4[i] = acc.records[i].at("m4");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, s - 1);
    std::vector<double> u(resamples);
    for (auto &ur : u) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = pick(rng);
            a += m2[j];
            b += m4[j];
        }
        const auto sd = static_cast<double>(s);
        ur = binder_u4(a / sd, b / sd);
    }
    double mean = 0.0;
    for (double x : u) {
        mean += x;
    }
    mean /= static_cast<double>(resamples);
    double ss = 0.0;
    for (double x : u) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(resamples - 1));
}

struct ThermalMoments {
    double energy;
    double m2;
    double m4;
    double u4;
};

/// Exact thermal energy, moments and U4 from a spectrum with eigenvectors.
inline ThermalMoments thermal_moments(const Spectrum &spec, double beta) {
    const double e = thermal_energy(spec, beta);
    const double m2 =
        thermal_average(spec, magnetization_power(spec.n_qubits, 2), beta);
    const double m4 =
        thermal_average(spec, magnetization_power(spec.n_qubits, 4), beta);
    return {e, m2, m4, binder_u4(m2, m4)};
}

struct U4Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct BinderPoint {
    double h_x = 0.0;
    std::map<std::string, U4Estimate> u4_by_size;
    std::map<std::string, double> ed_u4_by_size; ///< exact overlay, if any
    std::size_t n_samples = 0;
};

/// One curve of a crossing analysis.
struct CurvePoint {
    double h_x;
    double u4;
    double error;
};

/// Extracts the curve for `label` from a scan.
inline std::vector<CurvePoint> curve(std::span<const BinderPoint> scan,
                                     const std::string &label) {
    std::vector<CurvePoint> out;
    for (const auto &p : scan) {
        const auto it = p.u4_by_size.find(label);
        if (it == p.u4_by_size.end()) {
            throw std::invalid_argument("no U4 for size " + label +
                                        " at h_x = " + io::fmt(p.h_x));
        }
        out.push_back({p.h_x, it->second.value, it->second.error});
    }
    return out;
}

class CrossingError : public Error {
  public:
    enum class Kind { none, ambiguous };

    CrossingError(Kind kind, std::vector<double> candidates)
        : Error(kind == Kind::none
                    ? std::string("no sign change of the U4 difference on "
                                  "the grid")
                    : "ambiguous crossing: " +
                          std::to_string(candidates.size()) +
                          " sign changes on the grid"),
          kind(kind), candidates(std::move(candidates)) {}

    Kind kind;
    std::vector<double> candidates;
};

struct Crossing {
    double h_c = 0.0;
    double error = 0.0;
    std::size_t interval = 0;    ///< grid interval [h_i, h_i+1] holding h_c
    std::size_t valid_draws = 0; ///< resamples that still crossed
};

struct CrossingOptions {
    std::size_t resamples = 1000;
    std::uint64_t seed = 0;
};

namespace detail {

struct Candidate {
    double h;
    std::size_t interval;
};

inline std::vector<Candidate> sign_changes(std::span<const double> h,
                                           std::span<const double> d) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (d[i] == 0.0) {
            out.push_back({h[i], i == 0 ? 0 : i - 1});
        } else if (i + 1 < h.size() && d[i + 1] != 0.0 &&
                   (d[i] < 0.0) != (d[i + 1] < 0.0)) {
            const double t = d[i] / (d[i] - d[i + 1]);
            out.push_back({h[i] + t * (h[i + 1] - h[i]), i});
        }
    }
    return out;
}

} // namespace detail

/**
 * Crossing of U4(b) - U4(a) on a shared ascending grid by linear
 * interpolation. The error is the spread of the crossing when both curves
 * are redrawn from normal distributions with their point errors.
 */
inline Crossing find_crossing(std::span<const CurvePoint> a,
                              std::span<const CurvePoint> b,
                              const CrossingOptions &opts = {}) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument(
            "find_crossing: curves need the same grid of at least 2 points");
    }
    const std::size_t n = a.size();
    std::vector<double> h(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].h_x != b[i].h_x) {
            throw std::invalid_argument("find_crossing: grids differ");
        }
        if (i > 0 && !(a[i].h_x > a[i - 1].h_x)) {
            throw std::invalid_argument("find_crossing: grid not ascending");
        }
        h[i] = a[i].h_x;
        d[i] = b[i].u4 - a[i].u4;
    }
    const auto found = detail::sign_changes(h, d);
    if (found.empty()) {
        throw CrossingError(CrossingError::Kind::none, {});
    }
    if (found.size() > 1) {
        std::vector<double> c;
        for (const auto &f : found) {
            c.push_back(f.h);
        }
        throw CrossingError(CrossingError::Kind::ambiguous, std::move(c));
    }
    Crossing out;
    out.h_c = found.front().h;
    out.interval = found.front().interval;

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> draws;
    std::vector<double> dd(n);
    for (std::size_t r = 0; r < opts.resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const double ua = a[i].u4 + a[i].error * gauss(rng);
            const double ub = b[i].u4 + b[i].error * gauss(rng);
            dd[i] = ub - ua;
        }
        const auto c = detail::sign_changes(h, dd);
        if (c.empty()) {
            continue;
        }
        // Several crossings in a noisy draw: keep the one nearest the
        // nominal value.
        const auto best = std::min_element(
            c.begin(), c.end(), [&](const auto &x, const auto &y) {
                return std::abs(x.h - out.h_c) < std::abs(y.h - out.h_c);
            });
        draws.push_back(best->h);
    }
    out.valid_draws = draws.size();
    if (draws.size() >= 2) {
        double mean = 0.0;
        for (double x : draws) {
            mean += x;
        }
        mean /= static_cast<double>(draws.size());
        double ss = 0.0;
        for (double x : draws) {
            ss += (x - mean) * (x - mean);
        }
        out.error = std::sqrt(ss / static_cast<double>(draws.size() - 1));
    } else {
        out.error = std::numeric_limits<double>::infinity();
    }
    return out;
}

/// h_x,size,u4,error,n_samples,ed_u4
inline void write_binder_csv(std::ostream &os,
                             std::span<const BinderPoint> scan) {
    os << "h_x,size,u4,error,n_samples,ed_u4\n";
    for (const auto &p : scan) {
        for (const auto &[label, est] : p.u4_by_size) {
            os << io::fmt(p.h_x) << ',' << label << ',' << io::fmt(est.value)
               << ',' << io::fmt(est.error) << ',' << p.n_samples << ',';
            const auto it = p.ed_u4_by_size.find(label);
            if (it != p.ed_u4_by_size.end()) {
                os << io::fmt(it->second);
            }
            os << '\n';
        }
    }
}

} // namespace avqmetts
