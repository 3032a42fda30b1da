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
 * Run configuration: one JSON document per run, parsed strictly (unknown
 * keys are errors) with defaults for anything omitted. to_json emits every
 * resolved field so the echo in a summary re-parses to the same config.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avqite.hpp"
#include "error.hpp"
#include "model.hpp"
#include "state.hpp"

namespace avqmetts {

inline constexpr const char *kConfigSchema = "avqmetts.config/1";

struct LatticeSpec {
    LatticeKind kind = LatticeKind::chain_1d;
    std::size_t lx = 8;
    std::size_t ly = 1;
    bool pbc = true;

    [[nodiscard]] Lattice build() const { return {kind, lx, ly, pbc}; }
    bool operator==(const LatticeSpec &) const = default;
};

struct ModelConfig {
    LatticeSpec lattice;
    double J = 1.0;
    double h_x = 1.0;
    double h_z = 0.0;

    [[nodiscard]] IsingParams params() const { return {J, h_x, h_z}; }
    bool operator==(const ModelConfig &) const = default;
};

struct SamplingConfig {
    std::vector<double> betas{1.0};
    std::size_t s_w = 16;
    std::size_t s_0 = 4;
    std::size_t burn_in = 10;
    std::uint64_t master_seed = 0;
    bool magnetization = false; ///< record m2 and m4 next to the energy
    Basis first_collapse = Basis::X;
    bool operator==(const SamplingConfig &) const = default;
};

struct AnalysisConfig {
    std::vector<double> h_x_grid;
    std::vector<LatticeSpec> sizes;
    std::size_t bootstrap_resamples = 1000;
    bool ed_overlay = true;
    bool operator==(const AnalysisConfig &) const = default;
};

struct EdConfig {
    std::size_t max_qubits = 14;
    std::vector<double> betas{0.5, 1.0, 2.0, 4.0};
    bool operator==(const EdConfig &) const = default;
};

struct FidelityConfig {
    Cps reference{0, Basis::Z};
    double tau_final = 2.0;
    bool operator==(const FidelityConfig &o) const {
        return reference.bits == o.reference.bits &&
               reference.basis == o.reference.basis &&
               tau_final == o.tau_final;
    }
};

struct OutputConfig {
    std::string directory = "avqmetts-run";
    bool operator==(const OutputConfig &) const = default;
};

struct RunConfig {
    ModelConfig model;
    AvqiteParams avqite;
    SamplingConfig sampling;
    AnalysisConfig analysis;
    EdConfig ed;
    FidelityConfig fidelity;
    OutputConfig output;

    /// Throws ConfigError on the first invalid field.
    void validate() const;
};

inline bool operator==(const AvqiteParams &a, const AvqiteParams &b) {
    return a.delta_tau == b.delta_tau && a.l_cut == b.l_cut &&
           a.solver_cutoff == b.solver_cutoff &&
           a.max_new_ops_per_step == b.max_new_ops_per_step;
}

inline bool operator==(const RunConfig &a, const RunConfig &b) {
    return a.model == b.model && a.avqite == b.avqite &&
           a.sampling == b.sampling && a.analysis == b.analysis &&
           a.ed == b.ed && a.fidelity == b.fidelity && a.output == b.output;
}

namespace detail {

inline void require_finite(double v, const std::string &name) {
    if (!std::isfinite(v)) {
        throw ConfigError(name + " must be finite");
    }
}

inline void validate_lattice(const LatticeSpec &l, const std::string &where) {
    try {
        const Lattice lat = l.build();
        if (lat.n_sites() > 30) {
            throw ConfigError(where + ": at most 30 sites fit a statevector");
        }
    } catch (const std::invalid_argument &e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline void validate_betas(const std::vector<double> &betas,
                           const std::string &where) {
    if (betas.empty()) {
        throw ConfigError(where + " must not be empty");
    }
    for (double b : betas) {
        require_finite(b, where);
        if (b < 0.0) {
            throw ConfigError(where + " entries must be >= 0");
        }
    }
}

} // namespace detail

inline void RunConfig::validate() const {
    detail::validate_lattice(model.lattice, "model");
    detail::require_finite(model.J, "model.J");
    detail::require_finite(model.h_x, "model.h_x");
    detail::require_finite(model.h_z, "model.h_z");
    avqite.validate();
    detail::validate_betas(sampling.betas, "sampling.betas");
    if (sampling.s_w == 0 || sampling.s_0 == 0) {
        throw ConfigError("sampling.s_w and sampling.s_0 must be >= 1");
    }
    for (double h : analysis.h_x_grid) {
        detail::require_finite(h, "analysis.h_x_grid");
    }
    for (std::size_t i = 1; i < analysis.h_x_grid.size(); ++i) {
        if (!(analysis.h_x_grid[i] > analysis.h_x_grid[i - 1])) {
            throw ConfigError("analysis.h_x_grid must be strictly ascending");
        }
    }
    for (const auto &s : analysis.sizes) {
        detail::validate_lattice(s, "analysis.sizes");
    }
    if (analysis.bootstrap_resamples < 100) {
        throw ConfigError("analysis.bootstrap_resamples must be >= 100");
    }
    detail::validate_betas(ed.betas, "ed.betas");
    if (ed.max_qubits == 0 || ed.max_qubits > 16) {
        throw ConfigError("ed.max_qubits must lie in [1, 16]");
    }
    detail::require_finite(fidelity.tau_final, "fidelity.tau_final");
    if (fidelity.tau_final < 0.0) {
        throw ConfigError("fidelity.tau_final must be >= 0");
    }
    if ((fidelity.reference.bits >> model.lattice.build().n_sites()) != 0) {
        throw ConfigError("fidelity.reference_bits has bits beyond the lattice");
    }
    if (output.directory.empty()) {
        throw ConfigError("output.directory must not be empty");
    }
}

namespace detail {

using nlohmann::json;

/// Reads an object, rejecting keys outside `allowed`.
class Reader {
  public:
    Reader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) {
            throw ConfigError(where_ + " must be an object");
        }
    }

    void check_keys(std::initializer_list<const char *> allowed) const {
        for (const auto &[k, v] : j_.items()) {
            bool ok = false;
            for (const char *a : allowed) {
                ok = ok || k == a;
            }
            if (!ok) {
                throw ConfigError("unknown key '" + where_ + "." + k + "'");
            }
        }
    }

    template <class T> void get(const char *key, T &out) const {
        if (!j_.contains(key)) {
            return;
        }
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            // nlohmann casts negative integers to unsigned without a check.
            if (!j_.at(key).is_number_unsigned()) {
                throw ConfigError(where_ + "." + key +
                                  " must be a non-negative integer");
            }
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception &e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    [[nodiscard]] const json *child(const char *key) const {
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    [[nodiscard]] const std::string &where() const { return where_; }

  private:
    const json &j_;
    std::string where_;
};

inline Basis basis_from_string(const std::string &s, const std::string &key) {
    if (s == "Z") {
        return Basis::Z;
    }
    if (s == "X") {
        return Basis::X;
    }
    throw ConfigError(key + " must be \"Z\" or \"X\"");
}

inline LatticeSpec lattice_from_json(const json &j, const std::string &where) {
    Reader r(j, where);
    r.check_keys({"lattice", "lx", "ly", "pbc"});
    LatticeSpec l;
    std::string kind = to_string(l.kind);
    r.get("lattice", kind);
    try {
        l.kind = lattice_kind_from_string(kind);
    } catch (const std::invalid_argument &e) {
        throw ConfigError(where + ": " + e.what());
    }
    r.get("lx", l.lx);
    r.get("ly", l.ly);
    r.get("pbc", l.pbc);
    return l;
}

inline json lattice_to_json(const LatticeSpec &l) {
    return {{"lattice", to_string(l.kind)},
            {"lx", l.lx},
            {"ly", l.ly},
            {"pbc", l.pbc}};
}

} // namespace detail

inline RunConfig config_from_json(const nlohmann::json &j) {
    using detail::Reader;
    RunConfig c;
    Reader top(j, "config");
    top.check_keys({"schema", "model", "avqite", "sampling", "analysis", "ed",
                    "fidelity", "output"});
    if (const auto *s = top.child("schema")) {
        if (!s->is_string() || s->get<std::string>() != kConfigSchema) {
            throw ConfigError(std::string("config.schema must be \"") +
                              kConfigSchema + "\"");
        }
    }
    if (const auto *m = top.child("model")) {
        Reader r(*m, "model");
        r.check_keys({"lattice", "lx", "ly", "pbc", "J", "h_x", "h_z"});
        nlohmann::json lat = nlohmann::json::object();
        for (const char *k : {"lattice", "lx", "ly", "pbc"}) {
            if (m->contains(k)) {
                lat[k] = m->at(k);
            }
        }
        c.model.lattice = detail::lattice_from_json(lat, "model");
        r.get("J", c.model.J);
        r.get("h_x", c.model.h_x);
        r.get("h_z", c.model.h_z);
    }
    if (const auto *a = top.child("avqite")) {
        Reader r(*a, "avqite");
        r.check_keys({"delta_tau", "l_cut", "solver_cutoff", "max_new_ops"});
        r.get("delta_tau", c.avqite.delta_tau);
        r.get("l_cut", c.avqite.l_cut);
        r.get("solver_cutoff", c.avqite.solver_cutoff);
        if (const auto *mx = r.child("max_new_ops"); mx && !mx->is_null()) {
            std::size_t v = 0;
            r.get("max_new_ops", v);
            c.avqite.max_new_ops_per_step = v;
        }
    }
    if (const auto *s = top.child("sampling")) {
        Reader r(*s, "sampling");
        r.check_keys({"betas", "s_w", "s_0", "burn_in", "master_seed",
                      "observables", "first_collapse"});
        r.get("betas", c.sampling.betas);
        r.get("s_w", c.sampling.s_w);
        r.get("s_0", c.sampling.s_0);
        r.get("burn_in", c.sampling.burn_in);
        r.get("master_seed", c.sampling.master_seed);
        if (s->contains("observables")) {
            std::vector<std::string> obs;
            r.get("observables", obs);
            bool m2 = false;
            bool m4 = false;
            for (const auto &o : obs) {
                if (o == "m2") {
                    m2 = true;
                } else if (o == "m4") {
                    m4 = true;
                } else if (o != "energy") {
                    throw ConfigError("sampling.observables: unknown '" + o +
                                      "'");
                }
            }
            if (m2 != m4) {
                throw ConfigError("sampling.observables: m2 and m4 come as a "
                                  "pair");
            }
            c.sampling.magnetization = m2;
        }
        std::string fc = to_string(c.sampling.first_collapse);
        r.get("first_collapse", fc);
        c.sampling.first_collapse =
            detail::basis_from_string(fc, "sampling.first_collapse");
    }
    if (const auto *a = top.child("analysis")) {
        Reader r(*a, "analysis");
        r.check_keys({"h_x_grid", "sizes", "bootstrap_resamples", "ed_overlay"});
        r.get("h_x_grid", c.analysis.h_x_grid);
        if (const auto *sz = r.child("sizes")) {
            if (!sz->is_array()) {
                throw ConfigError("analysis.sizes must be an array");
            }
            for (const auto &e : *sz) {
                c.analysis.sizes.push_back(
                    detail::lattice_from_json(e, "analysis.sizes[]"));
            }
        }
        r.get("bootstrap_resamples", c.analysis.bootstrap_resamples);
        r.get("ed_overlay", c.analysis.ed_overlay);
    }
    if (const auto *e = top.child("ed")) {
        Reader r(*e, "ed");
        r.check_keys({"max_qubits", "betas"});
        r.get("max_qubits", c.ed.max_qubits);
        r.get("betas", c.ed.betas);
    }
    if (const auto *f = top.child("fidelity")) {
        Reader r(*f, "fidelity");
        r.check_keys({"reference_bits", "reference_basis", "tau_final"});
        r.get("reference_bits", c.fidelity.reference.bits);
        std::string b = to_string(c.fidelity.reference.basis);
        r.get("reference_basis", b);
        c.fidelity.reference.basis =
            detail::basis_from_string(b, "fidelity.reference_basis");
        r.get("tau_final", c.fidelity.tau_final);
    }
    if (const auto *o = top.child("output")) {
        Reader r(*o, "output");
        r.check_keys({"directory"});
        r.get("directory", c.output.directory);
    }
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string &text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json to_json(const RunConfig &c) {
    using nlohmann::json;
    json model = detail::lattice_to_json(c.model.lattice);
    model["J"] = c.model.J;
    model["h_x"] = c.model.h_x;
    model["h_z"] = c.model.h_z;
    json avq = {{"delta_tau", c.avqite.delta_tau},
                {"l_cut", c.avqite.l_cut},
                {"solver_cutoff", c.avqite.solver_cutoff},
                {"max_new_ops", nullptr}};
    if (c.avqite.max_new_ops_per_step) {
        avq["max_new_ops"] = *c.avqite.max_new_ops_per_step;
    }
    json obs = json::array({"energy"});
    if (c.sampling.magnetization) {
        obs.push_back("m2");
        obs.push_back("m4");
    }
    json sizes = json::array();
    for (const auto &s : c.analysis.sizes) {
        sizes.push_back(detail::lattice_to_json(s));
    }
    return {
        {"schema", kConfigSchema},
        {"model", model},
        {"avqite", avq},
        {"sampling",
         {{"betas", c.sampling.betas},
          {"s_w", c.sampling.s_w},
          {"s_0", c.sampling.s_0},
          {"burn_in", c.sampling.burn_in},
          {"master_seed", c.sampling.master_seed},
          {"observables", obs},
          {"first_collapse", to_string(c.sampling.first_collapse)}}},
        {"analysis",
         {{"h_x_grid", c.analysis.h_x_grid},
          {"sizes", sizes},
          {"bootstrap_resamples", c.analysis.bootstrap_resamples},
          {"ed_overlay", c.analysis.ed_overlay}}},
        {"ed", {{"max_qubits", c.ed.max_qubits}, {"betas", c.ed.betas}}},
        {"fidelity",
         {{"reference_bits", c.fidelity.reference.bits},
          {"reference_basis", to_string(c.fidelity.reference.basis)},
          {"tau_final", c.fidelity.tau_final}}},
        {"output", {{"directory", c.output.directory}}},
    };
}

} // namespace avqmetts
