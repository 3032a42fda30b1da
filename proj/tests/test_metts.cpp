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

#include <cmath>
#include <limits>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "avqmetts/ed.hpp"
#include "avqmetts/metts.hpp"
#include "avqmetts/model.hpp"

using namespace avqmetts;
using Catch::Matchers::WithinAbs;

namespace {

EnsembleAccumulator with_energies(std::initializer_list<double> values) {
    EnsembleAccumulator acc;
    std::size_t k = 0;
    for (double v : values) {
        SampleRecord r;
        r.step_index = k++;
        r.observables["energy"] = v;
        acc.records.push_back(r);
    }
    return acc;
}

EnsembleAccumulator with_cnots(std::initializer_list<std::size_t> values) {
    EnsembleAccumulator acc;
    std::size_t k = 0;
    for (auto v : values) {
        SampleRecord r;
        r.origin.basis = (k++ % 2) ? Basis::X : Basis::Z;
        r.n_cx = v;
        acc.records.push_back(r);
    }
    return acc;
}

bool same_records(const EnsembleAccumulator &a, const EnsembleAccumulator &b) {
    std::ostringstream sa;
    std::ostringstream sb;
    write_samples_csv(sa, a);
    write_samples_csv(sb, b);
    return sa.str() == sb.str();
}

} // namespace

TEST_CASE("infinite temperature step measures the CPS", "[metts]") {
    const auto h = build_hamiltonian(Lattice::chain(4), {});
    const Avqite<double> engine(h, build_pool(4), {});
    Walker w(4, 0, 0);
    w.current = Cps{0, Basis::Z};
    const auto r = thermal_step(w, engine, 0.0);
    CHECK_THAT(r.at("energy"), WithinAbs(-4.0, 1e-14));
    CHECK(r.n_theta == 0);
    CHECK(r.n_cx == 0);
    CHECK_THAT(r.at("m2"), WithinAbs(0.25, 1e-15));
    CHECK(r.origin.bits == 0);
    CHECK(r.collapsed_to.basis == Basis::X);
    CHECK(w.next_collapse == Basis::Z);
    CHECK(w.step_count == 1);
    CHECK_THROWS_AS(thermal_step(w, engine, -1.0), std::invalid_argument);
}

TEST_CASE("single qubit at low temperature collapses evenly", "[metts]") {
    WeightedPauliSum h(1, {{-1.0, pauli_from_letters(1, {{0, 'X'}})}});
    const Avqite<double> engine(h, build_pool(1), {});
    Walker w(1, 17, 0, Basis::Z);
    std::size_t ones = 0;
    const std::size_t n = 400;
    for (std::size_t k = 0; k < n; ++k) {
        w.current = Cps{0, Basis::Z};
        w.next_collapse = Basis::Z;
        const auto r = thermal_step(w, engine, 12.0, false);
        CHECK_THAT(r.at("energy"), WithinAbs(-1.0, 1e-3));
        ones += r.collapsed_to.bits;
    }
    // Binomial(400, 1/2): 4 sigma = 40.
    CHECK(ones > n / 2 - 40);
    CHECK(ones < n / 2 + 40);
}

TEST_CASE("walks", "[metts]") {
    const auto h = build_hamiltonian(Lattice::chain(4), {1.0, 1.0, 0.0});
    const Avqite<double> engine(h, build_pool(4), {});

    Walker a(4, 99, 3);
    const auto ra = run_walk(a, engine, 1.0, 2, 10);
    CHECK(a.step_count == 12);
    REQUIRE(ra.size() == 2);
    CHECK(ra[0].step_index == 10);
    CHECK(ra[1].step_index == 11);

    Walker one(4, 99, 3);
    const auto r1 = run_walk(one, engine, 1.0, 1, 0);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].step_index == 0);
    CHECK(r1[0].origin.basis == Basis::Z);

    Walker b(4, 99, 3);
    const auto rb = run_walk(b, engine, 1.0, 2, 10);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(ra[k].observables == rb[k].observables);
        CHECK(ra[k].collapsed_to.bits == rb[k].collapsed_to.bits);
    }

    Walker c(4, 99, 3);
    const auto rc = run_walk(c, engine, 1.0, 9, 0);
    for (std::size_t k = 0; k < rc.size(); ++k) {
        CHECK(rc[k].origin.basis == (k % 2 ? Basis::X : Basis::Z));
        CHECK(rc[k].collapsed_to.basis == (k % 2 ? Basis::Z : Basis::X));
        if (k > 0) {
            CHECK(rc[k].origin.bits == rc[k - 1].collapsed_to.bits);
        }
    }
}

TEST_CASE("walker seeds", "[metts]") {
    CHECK(walker_seed(1, 0) != walker_seed(1, 1));
    CHECK(walker_seed(1, 0) != walker_seed(2, 0));
    CHECK(walker_seed(5, 7) == walker_seed(5, 7));
    Walker a(10, 5, 7);
    Walker b(10, 5, 7);
    CHECK(a.current.bits == b.current.bits);
    CHECK(a.current.bits < (Mask{1} << 10));
}

TEST_CASE("ensembles", "[metts]") {
    const auto h = build_hamiltonian(Lattice::chain(5), {1.0, 1.0, 0.5});
    const Avqite<double> engine(h, build_pool(5), {});

    SECTION("record accounting and order") {
        const auto acc = run_ensemble(engine, 1.0, 6, 3, 2, 11);
        REQUIRE(acc.size() == 18);
        for (std::size_t k = 0; k < acc.size(); ++k) {
            CHECK(acc.records[k].walker_id == k / 3);
            CHECK(acc.records[k].step_index == 2 + k % 3);
        }
        const auto wide = run_ensemble(engine, 1.0, 18, 1, 2, 11);
        CHECK(wide.size() == 18);
    }

    SECTION("worker count does not change the result") {
        const auto serial = run_ensemble(engine, 1.2, 12, 2, 3, 5);
        MettsOptions opts;
        opts.workers = 8;
        const auto parallel = run_ensemble(engine, 1.2, 12, 2, 3, 5, opts);
        CHECK(same_records(serial, parallel));
        const auto other_seed = run_ensemble(engine, 1.2, 12, 2, 3, 6, opts);
        CHECK_FALSE(same_records(serial, other_seed));
    }

    SECTION("failures name the walker") {
        MettsOptions opts;
        opts.workers = 3;
        try {
            run_ensemble(engine, std::numeric_limits<double>::quiet_NaN(), 5,
                         1, 0, 42, opts);
            FAIL("expected a walker failure");
        } catch (const WalkerFailure &e) {
            CHECK(e.walker_id == 0);
            CHECK(e.seed == walker_seed(42, 0));
            CHECK(e.step == 0);
        }
        CHECK_THROWS_AS(run_ensemble(engine, 1.0, 0, 1, 0, 1), ConfigError);
    }

    SECTION("infinite temperature energy averages to zero") {
        const auto acc = run_ensemble(engine, 0.0, 64, 8, 2, 3);
        CHECK(std::abs(ensemble_mean(acc, "energy")) <
              3.0 * ensemble_stderr(acc, "energy"));
    }
}

TEST_CASE("estimators", "[metts]") {
    const auto ones = with_energies({1.0, 1.0, 1.0});
    CHECK(ensemble_mean(ones, "energy") == 1.0);
    CHECK(ensemble_stderr(ones, "energy") == 0.0);
    const auto pair = with_energies({0.0, 2.0});
    CHECK(ensemble_mean(pair, "energy") == 1.0);
    CHECK_THAT(ensemble_stderr(pair, "energy"),
               WithinAbs(0.5 * std::sqrt(2.0), 1e-15));
    CHECK_THROWS_AS(ensemble_mean(EnsembleAccumulator{}, "energy"),
                    std::invalid_argument);
    CHECK_THROWS_AS(ensemble_mean(pair, "m2"), std::out_of_range);

    const auto flat = cnot_stats(with_cnots({10, 10, 10, 10}));
    CHECK(flat.all.mean == 10.0);
    CHECK(flat.all.sigma == 0.0);
    const auto split = cnot_stats(with_cnots({0, 20}));
    CHECK(split.all.mean == 10.0);
    CHECK(split.all.sigma == 10.0);
    CHECK(split.z_origin.mean == 0.0);
    CHECK(split.x_origin.mean == 20.0);
    CHECK(split.z_origin.count == 1);
}

TEST_CASE("ensemble energy converges to the thermal energy", "[metts][slow]") {
    const auto h = build_hamiltonian(Lattice::chain(4), {1.0, 1.0, 0.0});
    const auto spec = diagonalize(h);
    const Avqite<double> engine(h, build_pool(4), {});
    for (double beta : {0.5, 1.0, 2.0}) {
        const auto acc = run_ensemble(engine, beta, 100, 40, 10, 2024);
        const double mean = ensemble_mean(acc, "energy");
        const double err = ensemble_stderr(acc, "energy");
        const double exact = thermal_energy(spec, beta);
        INFO("beta " << beta << " mean " << mean << " +- " << err
                     << " exact " << exact);
        CHECK(std::abs(mean - exact) < 3.0 * err);
    }
}

TEST_CASE("sample csv", "[metts]") {
    EnsembleAccumulator acc;
    acc.beta = 2.0;
    SampleRecord r;
    r.walker_id = 1;
    r.step_index = 10;
    r.origin = {5, Basis::Z};
    r.collapsed_to = {3, Basis::X};
    r.observables["energy"] = -1.5;
    r.n_theta = 4;
    r.n_cx = 2;
    acc.records.push_back(r);
    std::ostringstream os;
    write_samples_csv(os, acc);
    CHECK(os.str() == "beta,walker_id,step_index,origin_basis,origin_bits,"
                      "energy,m2,m4,n_theta,n_cx,collapse_basis,"
                      "collapsed_bits\n2,1,10,Z,5,-1.5,,,4,2,X,3\n");
}
