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
 * The batch commands behind the command-line tool: ensemble runs, exact
 * reference tables, Binder scans with crossing extraction, and fidelity
 * traces. Each writes plain CSV and versioned JSON into one directory.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "avqite.hpp"
#include "config.hpp"
#include "ed.hpp"
#include "error.hpp"
#include "io.hpp"
#include "metts.hpp"
#include "model.hpp"

namespace avqmetts {

inline constexpr const char *kSummarySchema = "avqmetts.summary/1";
inline constexpr const char *kCrossingSchema = "avqmetts.crossing/1";
inline constexpr const char *kOutputRootEnv = "AVQMETTS_OUTPUT_ROOT";

/// Relative directories are placed under $AVQMETTS_OUTPUT_ROOT when set.
inline std::filesystem::path resolve_output_dir(const std::string &dir) {
    std::filesystem::path p(dir);
    if (p.is_relative()) {
        if (const char *root = std::getenv(kOutputRootEnv);
            root != nullptr && *root != '\0') {
            p = std::filesystem::path(root) / p;
        }
    }
    std::filesystem::create_directories(p);
    return p;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw Error("cannot open " + p.string() + " for writing");
    }
    return f;
}

inline void write_json(const std::filesystem::path &p,
                       const nlohmann::json &j) {
    auto f = open_out(p);
    f << j.dump(2) << '\n';
}

inline nlohmann::json stat_json(const CountStats &s) {
    return {{"count", s.count}, {"mean", s.mean}, {"sigma", s.sigma}};
}

} // namespace detail

struct RunOutcome {
    std::filesystem::path directory;
    std::vector<EnsembleAccumulator> ensembles; ///< one per beta
};

/**
 * Ensembles for every beta of the config. Writes samples.csv, summary.json
 * and diagnostics.csv (the AVQITE trace of walker 0's first kept sample per
 * beta). A walker failure leaves a summary flagged partial and rethrows.
 */
inline RunOutcome cmd_run(const RunConfig &cfg, std::size_t workers) {
    cfg.validate();
    RunOutcome out;
    out.directory = resolve_output_dir(cfg.output.directory);
    const Lattice lat = cfg.model.lattice.build();
    const WeightedPauliSum h = build_hamiltonian(lat, cfg.model.params());
    const Avqite<double> engine(h, build_pool(lat.n_sites()), cfg.avqite);
    MettsOptions opts;
    opts.magnetization = cfg.sampling.magnetization;
    opts.first_collapse = cfg.sampling.first_collapse;
    opts.workers = workers;

    nlohmann::json summary = {{"schema", kSummarySchema},
                              {"command", "run"},
                              {"config", to_json(cfg)},
                              {"master_seed", cfg.sampling.master_seed},
                              {"partial", false}};
    nlohmann::json results = nlohmann::json::array();
    auto samples = detail::open_out(out.directory / "samples.csv");
    auto diag = detail::open_out(out.directory / "diagnostics.csv");
    diag << "beta,tau,n_theta,l2,energy,n_cx\n";
    bool header = true;
    for (double beta : cfg.sampling.betas) {
        EnsembleAccumulator acc;
        try {
            acc = run_ensemble(engine, beta, cfg.sampling.s_w,
                               cfg.sampling.s_0, cfg.sampling.burn_in,
                               cfg.sampling.master_seed, opts);
        } catch (const WalkerFailure &e) {
            summary["partial"] = true;
            summary["error"] = {{"message", e.what()},
                                {"beta", beta},
                                {"walker_id", e.walker_id},
                                {"seed", e.seed},
                                {"step", e.step}};
            summary["results"] = results;
            detail::write_json(out.directory / "summary.json", summary);
            throw;
        }
        write_samples_csv(samples, acc, header);
        header = false;

        const SampleRecord &first = acc.records.front();
        const auto ev = engine.evolve(first.origin, 0.5 * beta);
        for (const auto &d : ev.trace) {
            diag << io::fmt(beta) << ',' << io::fmt(d.tau) << ',' << d.n_theta
                 << ',' << io::fmt(d.l2) << ',' << io::fmt(d.energy) << ','
                 << d.n_cx << '\n';
        }

        const auto cx = cnot_stats(acc);
        nlohmann::json r = {
            {"beta", beta},
            {"samples", acc.size()},
            {"energy",
             {{"mean", ensemble_mean(acc, "energy")},
              {"stderr", ensemble_stderr(acc, "energy")}}},
            {"cnot",
             {{"all", detail::stat_json(cx.all)},
              {"z_origin", detail::stat_json(cx.z_origin)},
              {"x_origin", detail::stat_json(cx.x_origin)}}}};
        if (cfg.sampling.magnetization) {
            for (const char *name : {"m2", "m4"}) {
                r[name] = {{"mean", ensemble_mean(acc, name)},
                           {"stderr", ensemble_stderr(acc, name)}};
            }
            if (acc.size() >= 2) {
                r["u4"] = {{"value", binder_u4(acc)},
                           {"error",
                            binder_error(acc,
                                         cfg.analysis.bootstrap_resamples,
                                         cfg.sampling.master_seed)}};
            }
        }
        results.push_back(std::move(r));
        out.ensembles.push_back(std::move(acc));
    }
    summary["results"] = results;
    detail::write_json(out.directory / "summary.json", summary);
    return out;
}

struct EdOutcome {
    std::filesystem::path directory;
    Spectrum spectrum;
    std::vector<std::pair<double, ThermalMoments>> thermal;
};

/// spectrum.csv (index,energy) and thermal.csv (beta,energy,m2,m4,u4).
inline EdOutcome cmd_ed(const RunConfig &cfg) {
    cfg.validate();
    EdOutcome out;
    out.directory = resolve_output_dir(cfg.output.directory);
    const Lattice lat = cfg.model.lattice.build();
    const WeightedPauliSum h = build_hamiltonian(lat, cfg.model.params());
    out.spectrum = diagonalize(h, {cfg.ed.max_qubits, true});
    {
        auto f = detail::open_out(out.directory / "spectrum.csv");
        write_levels_csv(f, out.spectrum);
    }
    auto f = detail::open_out(out.directory / "thermal.csv");
    f << "beta,energy,m2,m4,u4\n";
    for (double beta : cfg.ed.betas) {
        const auto t = thermal_moments(out.spectrum, beta);
        out.thermal.emplace_back(beta, t);
        f << io::fmt(beta) << ',' << io::fmt(t.energy) << ',' << io::fmt(t.m2)
          << ',' << io::fmt(t.m4) << ',' << io::fmt(t.u4) << '\n';
    }
    return out;
}

struct PairCrossing {
    std::string a;
    std::string b;
    std::optional<Crossing> crossing;
    std::optional<CrossingError> failure;
    std::optional<double> ed_h_c;
};

struct BinderOutcome {
    std::filesystem::path directory;
    double beta = 0.0;
    std::vector<BinderPoint> scan;
    std::vector<PairCrossing> pairs;

    /// True when every size pair produced a unique crossing.
    [[nodiscard]] bool all_crossed() const {
        return std::all_of(pairs.begin(), pairs.end(),
                           [](const auto &p) { return p.crossing.has_value(); });
    }
};

/**
 * Binder scan over analysis.h_x_grid for every size in analysis.sizes at
 * the single sampling beta, with exact overlays for sizes within the ED cap.
 * Writes binder.csv, convergence.csv (U4 on growing prefixes of each
 * ensemble) and crossing.json. Size pairs are ordered by site count, the
 * larger one playing B.
 */
inline BinderOutcome cmd_binder(const RunConfig &cfg, std::size_t workers) {
    cfg.validate();
    if (cfg.analysis.sizes.size() < 2) {
        throw ConfigError("binder: analysis.sizes needs at least two lattices");
    }
    if (cfg.analysis.h_x_grid.size() < 2) {
        throw ConfigError("binder: analysis.h_x_grid needs at least two points");
    }
    if (cfg.sampling.betas.size() != 1) {
        throw ConfigError("binder: sampling.betas must hold exactly one beta");
    }
    if (cfg.sampling.s_w * cfg.sampling.s_0 < 2) {
        throw ConfigError("binder: need at least two samples per point");
    }
    BinderOutcome out;
    out.directory = resolve_output_dir(cfg.output.directory);
    out.beta = cfg.sampling.betas.front();

    std::vector<LatticeSpec> sizes = cfg.analysis.sizes;
    std::stable_sort(sizes.begin(), sizes.end(), [](const auto &x, const auto &y) {
        return x.lx * x.ly < y.lx * y.ly;
    });
    MettsOptions opts;
    opts.magnetization = true;
    opts.first_collapse = cfg.sampling.first_collapse;
    opts.workers = workers;

    auto conv = detail::open_out(out.directory / "convergence.csv");
    conv << "h_x,size,samples,u4\n";
    for (double hx : cfg.analysis.h_x_grid) {
        BinderPoint p;
        p.h_x = hx;
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            const Lattice lat = sizes[si].build();
            const std::string label = lat.label();
            IsingParams ip = cfg.model.params();
            ip.h_x = hx;
            const WeightedPauliSum h = build_hamiltonian(lat, ip);
            const Avqite<double> engine(h, build_pool(lat.n_sites()),
                                        cfg.avqite);
            log::info("binder: size " + label + " h_x = " + io::fmt(hx));
            const auto acc = run_ensemble(
                engine, out.beta, cfg.sampling.s_w, cfg.sampling.s_0,
                cfg.sampling.burn_in, cfg.sampling.master_seed, opts);
            p.n_samples = acc.size();
            p.u4_by_size[label] = {
                binder_u4(acc),
                binder_error(acc, cfg.analysis.bootstrap_resamples,
                             cfg.sampling.master_seed + si)};
            for (std::size_t s = 2; s <= acc.size(); s *= 2) {
                EnsembleAccumulator prefix = acc;
                prefix.records.resize(s);
                conv << io::fmt(hx) << ',' << label << ',' << s << ','
                     << io::fmt(binder_u4(prefix)) << '\n';
            }
            if (cfg.analysis.ed_overlay &&
                lat.n_sites() <= cfg.ed.max_qubits) {
                const Spectrum spec = diagonalize(h, {cfg.ed.max_qubits, true});
                p.ed_u4_by_size[label] = thermal_moments(spec, out.beta).u4;
            }
        }
        out.scan.push_back(std::move(p));
    }
    {
        auto f = detail::open_out(out.directory / "binder.csv");
        write_binder_csv(f, out.scan);
    }

    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        for (std::size_t j = i + 1; j < sizes.size(); ++j) {
            PairCrossing pc;
            pc.a = sizes[i].build().label();
            pc.b = sizes[j].build().label();
            nlohmann::json pj = {{"a", pc.a}, {"b", pc.b}};
            const auto ca = curve(out.scan, pc.a);
            const auto cb = curve(out.scan, pc.b);
            try {
                pc.crossing = find_crossing(
                    ca, cb,
                    {cfg.analysis.bootstrap_resamples, cfg.sampling.master_seed});
                pj["status"] = "ok";
                pj["h_c"] = pc.crossing->h_c;
                pj["error"] = pc.crossing->error;
                pj["valid_draws"] = pc.crossing->valid_draws;
            } catch (const CrossingError &e) {
                pc.failure = e;
                pj["status"] = e.kind == CrossingError::Kind::none
                                   ? "no_crossing"
                                   : "ambiguous";
                pj["message"] = e.what();
                pj["candidates"] = e.candidates;
            }
            const bool have_ed = std::all_of(
                out.scan.begin(), out.scan.end(), [&](const BinderPoint &p) {
                    return p.ed_u4_by_size.count(pc.a) &&
                           p.ed_u4_by_size.count(pc.b);
                });
            if (have_ed) {
                std::vector<CurvePoint> ea;
                std::vector<CurvePoint> eb;
                for (const auto &p : out.scan) {
                    ea.push_back({p.h_x, p.ed_u4_by_size.at(pc.a), 0.0});
                    eb.push_back({p.h_x, p.ed_u4_by_size.at(pc.b), 0.0});
                }
                try {
                    pc.ed_h_c = find_crossing(ea, eb, {100, 0}).h_c;
                    pj["ed_h_c"] = *pc.ed_h_c;
                } catch (const CrossingError &) {
                    pj["ed_h_c"] = nullptr;
                }
            }
            pairs.push_back(std::move(pj));
            out.pairs.push_back(std::move(pc));
        }
    }
    detail::write_json(out.directory / "crossing.json",
                       {{"schema", kCrossingSchema},
                        {"beta", out.beta},
                        {"config", to_json(cfg)},
                        {"pairs", pairs}});
    return out;
}

struct FidelityOutcome {
    std::filesystem::path directory;
    std::vector<FidelityPoint> trace;
};

/// fidelity.csv along the variational path from fidelity.reference.
inline FidelityOutcome cmd_fidelity(const RunConfig &cfg) {
    cfg.validate();
    FidelityOutcome out;
    out.directory = resolve_output_dir(cfg.output.directory);
    const Lattice lat = cfg.model.lattice.build();
    const WeightedPauliSum h = build_hamiltonian(lat, cfg.model.params());
    out.trace = fidelity_trace(cfg.fidelity.reference, h, cfg.avqite,
                               cfg.fidelity.tau_final,
                               {cfg.ed.max_qubits, true});
    auto f = detail::open_out(out.directory / "fidelity.csv");
    write_fidelity_csv(f, out.trace);
    return out;
}

} // namespace avqmetts
