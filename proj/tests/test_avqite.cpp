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
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <catch_amalgamated.hpp>

#include "avqmetts/avqite.hpp"
#include "avqmetts/model.hpp"

using namespace avqmetts;
using Catch::Matchers::WithinAbs;
using std::numbers::pi;

namespace {

PauliString P(std::size_t n, std::initializer_list<LetterSpec> l) {
    return pauli_from_letters(n, l);
}

WeightedPauliSum minus_z0() { return {1, {{-1.0, P(1, {{0, 'Z'}})}}}; }
WeightedPauliSum minus_x0() { return {1, {{-1.0, P(1, {{0, 'X'}})}}}; }

Ansatz single_y(double theta) {
    Ansatz a(1, Cps{0, Basis::Z});
    a.append(P(1, {{0, 'Y'}}), theta);
    return a;
}

// Random ansatz over arbitrary non-identity strings (complex engine).
Ansatz random_ansatz(std::size_t n, std::size_t len, std::mt19937_64 &rng) {
    std::uniform_int_distribution<Mask> mask(0, (Mask{1} << n) - 1);
    std::uniform_real_distribution<double> angle(-pi, pi);
    Ansatz a(n, Cps{mask(rng), rng() % 2 ? Basis::X : Basis::Z});
    while (a.size() < len) {
        PauliString p(n, mask(rng), mask(rng));
        if (!p.is_identity()) {
            a.append(p, angle(rng));
        }
    }
    return a;
}

WeightedPauliSum random_hamiltonian(std::size_t n, std::mt19937_64 &rng) {
    std::uniform_int_distribution<Mask> mask(0, (Mask{1} << n) - 1);
    std::normal_distribution<double> g;
    std::vector<WeightedPauliSum::Term> terms;
    for (int k = 0; k < 12; ++k) {
        const Mask x = mask(rng);
        const Mask z = mask(rng);
        // Even Y count keeps the string Hermitian with a real weight.
        if (std::popcount(x & z) % 2 == 0) {
            terms.push_back({g(rng), PauliString(n, x, z)});
        }
    }
    return {n, std::move(terms)};
}

double energy_at(Ansatz a, const std::vector<double> &t,
                 const WeightedPauliSum &h) {
    a.set_thetas(t);
    return expectation(a.state<cplx>(), h);
}

} // namespace

TEST_CASE("ansatz reconstruction order and merging", "[avqite]") {
    Ansatz a(2, Cps{0, Basis::Z});
    const auto y0 = P(2, {{0, 'Y'}});
    const auto y0z1 = P(2, {{0, 'Y'}, {1, 'Z'}});
    a.append(y0, 0.1);
    a.append(y0, 0.2);
    CHECK(a.size() == 1);
    CHECK_THAT(a.thetas()[0], WithinAbs(0.3, 1e-15));
    a.append(y0z1, 0.4);
    a.append(y0, 0.5);
    CHECK(a.size() == 3);

    auto expect = prepare_cps<cplx>(2, Cps{0, Basis::Z});
    rotate_inplace(expect, y0, a.thetas()[0]);
    rotate_inplace(expect, y0z1, 0.4);
    rotate_inplace(expect, y0, 0.5);
    const auto got = a.state<cplx>();
    for (std::size_t b = 0; b < 4; ++b) {
        CHECK(std::abs(got[b] - expect[b]) < 1e-15);
    }
    CHECK_THROWS_AS(a.append(P(3, {{0, 'Y'}})), std::invalid_argument);
}

TEST_CASE("derivative states", "[avqite]") {
    CHECK(derivative_states(Ansatz(2, Cps{0, Basis::Z})).empty());
    const auto d = derivative_states(single_y(0.0));
    REQUIRE(d.size() == 1);
    CHECK_THAT(d[0][0], WithinAbs(0.0, 1e-15));
    CHECK_THAT(d[0][1], WithinAbs(1.0, 1e-15));

    std::mt19937_64 rng(9);
    const auto a = random_ansatz(4, 15, rng);
    for (const auto &s : derivative_states<cplx>(a)) {
        CHECK_THAT(s.norm(), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("single-qubit M, V and L2", "[avqite]") {
    for (double theta : {0.0, 0.3, pi / 4, 1.9}) {
        const auto m = compute_m(single_y(theta));
        REQUIRE(m.rows() == 1);
        CHECK_THAT(m(0, 0), WithinAbs(2.0, 1e-14));
    }
    const auto v = compute_v(single_y(pi / 4), minus_z0());
    CHECK_THAT(v(0), WithinAbs(-2.0, 1e-14));

    // Exact evolution is representable, so the distance vanishes.
    Tangent<double> t(1, 1e-8);
    t.build(single_y(pi / 8), CompiledOperator<double>(minus_z0()));
    CHECK_THAT(t.variance(), WithinAbs(0.5, 1e-14));
    CHECK_THAT(t.v()(0), WithinAbs(-2.0 * std::sin(pi / 4), 1e-14));
    CHECK_THAT(t.l2(), WithinAbs(0.0, 1e-14));
    CHECK_THAT(mclachlan_l2(t.m(), t.v(), t.theta_dot(), t.variance()),
               WithinAbs(0.0, 1e-14));
}

TEST_CASE("McLachlan distance limits", "[avqite]") {
    Eigen::MatrixXd m(1, 1);
    m << 2.0;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(mclachlan_l2(m, zero, zero, 0.37) == 0.37);
    CHECK(mclachlan_l2(m, zero, zero, 0.0) == 0.0);
    Eigen::VectorXd v(1);
    v << 1.0;
    Eigen::VectorXd x(1);
    x << 5.0;
    CHECK_THROWS_AS(mclachlan_l2(m, v, x * 0.1, 0.0), NumericalError);
    CHECK_THROWS_AS(mclachlan_l2(m, v, Eigen::VectorXd::Zero(2), 0.0),
                    std::invalid_argument);
}

TEST_CASE("V is zero at eigenstates", "[avqite]") {
    // |+> is the ground state of -X.
    Ansatz a(1, Cps{0, Basis::X});
    a.append(P(1, {{0, 'Y'}}), 0.0);
    const auto v = compute_v(a, minus_x0());
    CHECK_THAT(v(0), WithinAbs(0.0, 1e-15));
    Tangent<double> t(1, 1e-8);
    t.build(a, CompiledOperator<double>(minus_x0()));
    CHECK_THAT(t.l2(), WithinAbs(0.0, 1e-15));
}

TEST_CASE("V and M match finite differences", "[avqite]") {
    std::mt19937_64 rng(2718);
    const double h = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + static_cast<std::size_t>(trial % 3);
        const auto a = random_ansatz(n, 6 + rng() % 10, rng);
        const auto ham = random_hamiltonian(n, rng);
        const auto v = compute_v<cplx>(a, ham);
        const auto m = compute_m<cplx>(a);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);

        const auto state = a.state<cplx>();
        const auto phi = Tangent<cplx>::map(state);
        const auto k = static_cast<Eigen::Index>(a.size());
        Eigen::MatrixXcd fd(phi.size(), k);
        for (Eigen::Index mu = 0; mu < k; ++mu) {
            auto tp = a.thetas();
            auto tm = a.thetas();
            tp[static_cast<std::size_t>(mu)] += h;
            tm[static_cast<std::size_t>(mu)] -= h;
            const double grad = (energy_at(a, tp, ham) - energy_at(a, tm, ham)) /
                                (2.0 * h);
            CHECK(std::abs(v(mu) + grad) < 1e-6);
            Ansatz ap = a;
            Ansatz am = a;
            ap.set_thetas(tp);
            am.set_thetas(tm);
            const auto sp = ap.state<cplx>();
            const auto sm = am.state<cplx>();
            fd.col(mu) =
                (Tangent<cplx>::map(sp) - Tangent<cplx>::map(sm)) / (2.0 * h);
        }
        const Eigen::VectorXcd ov = fd.adjoint() * phi;
        const Eigen::MatrixXd m_fd =
            2.0 * ((fd.adjoint() * fd) - ov * ov.adjoint()).real();
        CHECK((m - m_fd).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("real wavefunctions have no Berry term", "[avqite]") {
    std::mt19937_64 rng(4);
    const auto pool = build_pool(5);
    const auto h = build_hamiltonian(Lattice::chain(5), {1.0, 0.8, 0.3});
    Ansatz a(5, Cps{0b10110, Basis::X});
    std::uniform_real_distribution<double> angle(-1, 1);
    for (int k = 0; k < 25; ++k) {
        a.append(pool[rng() % pool.size()], angle(rng));
    }
    Tangent<double> t(5, 1e-8);
    t.build(a, CompiledOperator<double>(h));
    CHECK(t.berry_term() < 1e-10);
    Tangent<cplx> tc(5, 1e-8);
    tc.build(a, CompiledOperator<cplx>(h));
    CHECK((t.m() - tc.m()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.v() - tc.v()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("expansion", "[avqite]") {
    AvqiteParams params;

    SECTION("already converged ansatz is untouched") {
        Ansatz a(1, Cps{0, Basis::X});
        const auto [out, d] = expand(a, build_pool(1), minus_x0(), params);
        CHECK(out.size() == 0);
        CHECK(d.n_added == 0);
        CHECK_FALSE(d.saturated);
    }

    SECTION("single qubit picks Y and reaches zero distance") {
        Ansatz a(1, Cps{0, Basis::Z});
        const auto [out, d] = expand(a, build_pool(1), minus_x0(), params);
        REQUIRE(out.size() == 1);
        CHECK(out.generators()[0].to_string() == "Y0");
        CHECK(out.thetas()[0] == 0.0);
        CHECK_THAT(d.l2, WithinAbs(0.0, 1e-14));
    }

    SECTION("appending at zero angle keeps the energy") {
        const auto h = build_hamiltonian(Lattice::chain(6), {1.0, 1.0, 0.5});
        Ansatz a(6, Cps{0b010011, Basis::X});
        const double before = expectation(a.state<double>(), h);
        const auto [out, d] = expand(a, build_pool(6), h, params);
        CHECK(out.size() > 0);
        CHECK(d.l2 <= params.l_cut);
        CHECK_THAT(d.energy - before, WithinAbs(0.0, 1e-12));
        CHECK_THAT(expectation(out.state<double>(), h) - before,
                   WithinAbs(0.0, 1e-12));
    }

    SECTION("cap limits appends") {
        const auto h = build_hamiltonian(Lattice::chain(6), {1.0, 1.0, 0.5});
        AvqiteParams capped = params;
        capped.max_new_ops_per_step = 2;
        const auto [out, d] =
            expand(Ansatz(6, Cps{0, Basis::X}), build_pool(6), h, capped);
        CHECK(out.size() == 2);
        CHECK(d.saturated);
    }

    SECTION("bordered update matches a fresh solve") {
        const auto h = build_hamiltonian(Lattice::chain(5), {1.0, 1.2, 0.4});
        Avqite<double> engine(h, build_pool(5), params);
        Ansatz a(5, Cps{0b01101, Basis::X});
        Tangent<double> t(5, params.solver_cutoff);
        t.build(a, engine.hamiltonian());
        engine.expand(a, t);
        Tangent<double> ref(5, params.solver_cutoff);
        ref.build(a, engine.hamiltonian());
        CHECK((t.m() - ref.m()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t.v() - ref.v()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t.theta_dot() - ref.theta_dot()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK_THAT(t.l2() - ref.l2(), WithinAbs(0.0, 1e-10));
    }

    SECTION("pool order breaks ties") {
        // From |00> under -(X0 + X1) both Y0 and Y1 are equally good.
        WeightedPauliSum h(2, {{-1.0, P(2, {{0, 'X'}})},
                               {-1.0, P(2, {{1, 'X'}})}});
        const auto [out, d] = expand(Ansatz(2, Cps{0, Basis::Z}),
                                     build_pool(2), h, params);
        REQUIRE(out.size() >= 1);
        CHECK(out.generators()[0].to_string() == "Y0");
    }
}

TEST_CASE("Euler steps", "[avqite]") {
    AvqiteParams params;

    const auto [moved, d] = euler_step(single_y(pi / 4), minus_z0(), params);
    CHECK_THAT(moved.thetas()[0], WithinAbs(pi / 4 - 0.02, 1e-14));
    CHECK(d.n_theta == 1);

    // V = 0 at theta = 0 (|0> is the ground state of -Z).
    const auto [still, d0] = euler_step(single_y(0.0), minus_z0(), params);
    CHECK(still.thetas()[0] == 0.0);
}

TEST_CASE("evolution", "[avqite]") {
    const auto h = build_hamiltonian(Lattice::chain(6), {1.0, 1.0, 0.5});
    AvqiteParams params;

    SECTION("zero time returns the reference") {
        const auto r = evolve<double>(Cps{0b0101, Basis::X}, h, 0.0, params);
        CHECK(r.ansatz.empty());
        CHECK(r.trace.empty());
        const auto ref = prepare_cps<double>(6, Cps{0b0101, Basis::X});
        for (std::size_t b = 0; b < ref.dim(); ++b) {
            CHECK(r.state[b] == ref[b]);
        }
    }

    SECTION("partial final step") {
        Avqite<double> engine(h, build_pool(6), params);
        CHECK(engine.step_count(0.05) == 3);
        CHECK(engine.step_count(0.06) == 3);
        CHECK(engine.step_count(1.0) == 50);
        const auto r = engine.evolve(Cps{0, Basis::Z}, 0.05);
        REQUIRE(r.trace.size() == 3);
        CHECK_THAT(r.trace.back().tau, WithinAbs(0.05, 1e-15));
    }

    SECTION("energy descends and diagnostics are consistent") {
        const auto r = evolve<double>(Cps{0b011010, Basis::X}, h, 1.0, params);
        REQUIRE(r.trace.size() == 50);
        double last = expectation(prepare_cps<double>(6, Cps{0b011010, Basis::X}), h);
        for (const auto &d : r.trace) {
            CHECK(d.energy <= last + 1e-8);
            last = d.energy;
            CHECK((d.saturated || d.l2 <= params.l_cut));
            CHECK(d.n_cx <= 2 * d.n_theta);
        }
        CHECK(r.trace.back().n_cx == count_cnots(r.ansatz));
        CHECK_THAT(r.energy, WithinAbs(expectation(r.state, h), 1e-12));
        CHECK_THAT(r.state.norm(), WithinAbs(1.0, 1e-10));
    }

    SECTION("complex engine stays real and agrees") {
        const auto rr = evolve<double>(Cps{0b000111, Basis::Z}, h, 0.4, params);
        const auto rc = evolve<cplx>(Cps{0b000111, Basis::Z}, h, 0.4, params);
        CHECK(max_imag(rc.state) < 1e-10);
        CHECK_THAT(rr.energy - rc.energy, WithinAbs(0.0, 1e-6));
    }

    SECTION("the real engine rejects even-Y generators") {
        CHECK_THROWS_AS(Avqite<double>(h, {P(6, {{0, 'X'}})}, params),
                        std::invalid_argument);
        CHECK_NOTHROW(Avqite<cplx>(h, {P(6, {{0, 'X'}})}, params));
    }
}

TEST_CASE("CNOT counting", "[avqite]") {
    Ansatz a(3, Cps{0, Basis::Z});
    CHECK(count_cnots(a) == 0);
    a.append(P(3, {{0, 'Y'}}));
    a.append(P(3, {{1, 'Y'}, {2, 'Z'}}));
    CHECK(count_cnots(a) == 2);
}

TEST_CASE("parameter validation", "[avqite]") {
    AvqiteParams p;
    CHECK_NOTHROW(p.validate());
    p.delta_tau = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.l_cut = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.solver_cutoff = 1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("diagnostics CSV", "[avqite]") {
    std::vector<StepDiagnostics> trace{{0.02, 3, 1e-4, -1.5, 2, 3, false}};
    std::ostringstream os;
    write_diagnostics_csv(os, trace);
    CHECK(os.str() == "tau,n_theta,l2,energy,n_cx\n0.02,3,1e-04,-1.5,2\n");
}
