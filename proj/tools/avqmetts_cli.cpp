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

// Command-line front end: avqmetts {run,ed,binder,fidelity} -c config.json
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 no unique Binder crossing.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <avqmetts.hpp>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNoCrossing = 4;

struct Overrides {
    std::string config_path;
    std::string output;
    std::size_t workers = 0;
    std::vector<double> betas;
    std::optional<std::size_t> s_w;
    std::optional<std::size_t> s_0;
    std::optional<std::size_t> burn_in;
    std::optional<std::uint64_t> seed;
    std::optional<double> h_x;
    std::optional<double> h_z;
    std::optional<double> tau_final;
    bool magnetization = false;
    std::string log_level = "warn";
};

avqmetts::RunConfig load(const Overrides &o) {
    avqmetts::RunConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) {
            throw avqmetts::ConfigError("cannot read config " + o.config_path);
        }
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = avqmetts::parse_config(ss.str());
    }
    if (!o.output.empty()) {
        cfg.output.directory = o.output;
    }
    if (!o.betas.empty()) {
        cfg.sampling.betas = o.betas;
    }
    if (o.s_w) {
        cfg.sampling.s_w = *o.s_w;
    }
    if (o.s_0) {
        cfg.sampling.s_0 = *o.s_0;
    }
    if (o.burn_in) {
        cfg.sampling.burn_in = *o.burn_in;
    }
    if (o.seed) {
        cfg.sampling.master_seed = *o.seed;
    }
    if (o.h_x) {
        cfg.model.h_x = *o.h_x;
    }
    if (o.h_z) {
        cfg.model.h_z = *o.h_z;
    }
    if (o.tau_final) {
        cfg.fidelity.tau_final = *o.tau_final;
    }
    if (o.magnetization) {
        cfg.sampling.magnetization = true;
    }
    cfg.validate();
    return cfg;
}

void set_log_level(const std::string &s) {
    using avqmetts::log::Level;
    auto &t = avqmetts::log::threshold();
    if (s == "debug") {
        t = Level::debug;
    } else if (s == "info") {
        t = Level::info;
    } else if (s == "warn") {
        t = Level::warn;
    } else if (s == "error") {
        t = Level::error;
    } else {
        t = Level::off;
    }
}

std::size_t workers(const Overrides &o) {
    if (o.workers > 0) {
        return o.workers;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int run(const Overrides &o) {
    const auto cfg = load(o);
    const auto out = avqmetts::cmd_run(cfg, workers(o));
    for (const auto &acc : out.ensembles) {
        std::printf("beta=%s S=%zu energy=%s +- %s\n",
                    avqmetts::io::fmt(acc.beta).c_str(), acc.size(),
                    avqmetts::io::fmt(avqmetts::ensemble_mean(acc, "energy"))
                        .c_str(),
                    avqmetts::io::fmt(avqmetts::ensemble_stderr(acc, "energy"))
                        .c_str());
    }
    std::printf("wrote %s\n", out.directory.string().c_str());
    return 0;
}

int ed(const Overrides &o) {
    const auto cfg = load(o);
    const auto out = avqmetts::cmd_ed(cfg);
    const auto &ev = out.spectrum.eigenvalues;
    std::printf("E0=%s", avqmetts::io::fmt(ev(0)).c_str());
    if (ev.size() > 1) {
        std::printf(" gap=%s", avqmetts::io::fmt(ev(1) - ev(0)).c_str());
    }
    std::printf("\nwrote %s\n", out.directory.string().c_str());
    return 0;
}

int binder(const Overrides &o) {
    const auto cfg = load(o);
    const auto out = avqmetts::cmd_binder(cfg, workers(o));
    for (const auto &p : out.pairs) {
        if (p.crossing) {
            std::printf("%s/%s: h_c=%s +- %s\n", p.a.c_str(), p.b.c_str(),
                        avqmetts::io::fmt(p.crossing->h_c).c_str(),
                        avqmetts::io::fmt(p.crossing->error).c_str());
        } else {
            std::printf("%s/%s: %s\n", p.a.c_str(), p.b.c_str(),
                        p.failure->what());
        }
    }
    std::printf("wrote %s\n", out.directory.string().c_str());
    return out.all_crossed() ? 0 : kExitNoCrossing;
}

int fidelity(const Overrides &o) {
    const auto cfg = load(o);
    const auto out = avqmetts::cmd_fidelity(cfg);
    double worst = 0.0;
    for (const auto &p : out.trace) {
        worst = std::max(worst, p.infidelity);
    }
    std::printf("steps=%zu max_infidelity=%s\nwrote %s\n",
                out.trace.size() - 1, avqmetts::io::fmt(worst).c_str(),
                out.directory.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Thermal sampling with adaptive variational imaginary-time "
                 "evolution"};
    app.require_subcommand(1);
    Overrides o;

    auto common = [&](CLI::App *sub) {
        sub->add_option("-c,--config", o.config_path, "JSON run configuration")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--output", o.output, "Output directory");
        sub->add_option("--h-x", o.h_x, "Transverse field");
        sub->add_option("--h-z", o.h_z, "Longitudinal field");
        sub->add_option("--log-level", o.log_level,
                        "debug, info, warn, error or off");
    };
    auto sampling = [&](CLI::App *sub) {
        sub->add_option("-j,--workers", o.workers,
                        "Parallel walkers (default: all cores)");
        sub->add_option("--beta", o.betas, "Inverse temperature(s)");
        sub->add_option("--s-w", o.s_w, "Independent walkers");
        sub->add_option("--s-0", o.s_0, "Kept samples per walker");
        sub->add_option("--burn-in", o.burn_in, "Discarded steps per walker");
        sub->add_option("--seed", o.seed, "Master seed");
    };

    auto *run_cmd = app.add_subcommand("run", "METTS ensemble for each beta");
    common(run_cmd);
    sampling(run_cmd);
    run_cmd->add_flag("--magnetization", o.magnetization,
                      "Record m2 and m4 per sample");
    auto *ed_cmd = app.add_subcommand("ed", "Exact spectrum and thermal table");
    common(ed_cmd);
    auto *binder_cmd =
        app.add_subcommand("binder", "Binder scan and crossing extraction");
    common(binder_cmd);
    sampling(binder_cmd);
    auto *fid_cmd =
        app.add_subcommand("fidelity", "Variational vs exact imaginary time");
    common(fid_cmd);
    fid_cmd->add_option("--tau", o.tau_final, "Final imaginary time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    set_log_level(o.log_level);

    try {
        if (*run_cmd) {
            return run(o);
        }
        if (*ed_cmd) {
            return ed(o);
        }
        if (*binder_cmd) {
            return binder(o);
        }
        return fidelity(o);
    } catch (const avqmetts::ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const avqmetts::CapExceeded &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const avqmetts::Error &e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::invalid_argument &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
