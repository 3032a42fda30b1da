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

#include <set>

#include <catch_amalgamated.hpp>

#include "avqmetts/model.hpp"
#include "avqmetts/state.hpp"

using namespace avqmetts;
using Catch::Matchers::WithinAbs;

TEST_CASE("lattice edges", "[model]") {
    CHECK(Lattice::chain(3).edges().size() == 3);
    CHECK(Lattice::chain(8).edges().size() == 8);
    CHECK(Lattice::chain(8, false).edges().size() == 7);
    // L = 2 wraparound duplicates the bond; it is kept once.
    CHECK(Lattice::chain(2).edges().size() == 1);
    CHECK(Lattice::chain(1).edges().empty());
    CHECK(Lattice::rectangle(3, 3).edges().size() == 18);
    CHECK(Lattice::rectangle(4, 3).edges().size() == 24);
    CHECK(Lattice::rectangle(4, 4).edges().size() == 32);
    CHECK(Lattice::rectangle(2, 3).edges().size() == 9);
    CHECK(Lattice::rectangle(4, 3, false).edges().size() == 17);

    const auto sq = Lattice::rectangle(4, 3);
    CHECK(sq.site(1, 2) == 9);
    CHECK(sq.label() == "4x3");
    CHECK(Lattice::chain(8).label() == "8");
    for (const auto &[a, b] : sq.edges()) {
        CHECK(a < b);
    }
    std::set<Lattice::Edge> uniq(sq.edges().begin(), sq.edges().end());
    CHECK(uniq.size() == sq.edges().size());
    CHECK_THROWS_AS(Lattice(LatticeKind::chain_1d, 3, 2, true),
                    std::invalid_argument);
    CHECK(lattice_kind_from_string(to_string(LatticeKind::rectangle_2d)) ==
          LatticeKind::rectangle_2d);
}

TEST_CASE("Hamiltonian term counts", "[model]") {
    const auto ring = build_hamiltonian(Lattice::chain(3), {1.0, 0.0, 0.0});
    REQUIRE(ring.size() == 3);
    for (const auto &t : ring.terms()) {
        CHECK(t.coeff == -1.0);
        CHECK(t.op.weight() == 2);
        CHECK(t.op.x_mask() == 0);
    }
    CHECK(build_hamiltonian(Lattice::chain(4), {1.0, 1.0, 0.5}).size() == 12);

    const auto sq = build_hamiltonian(Lattice::rectangle(3, 3), {1.0, 3.05, 0.0});
    std::size_t zz = 0;
    std::size_t x = 0;
    for (const auto &t : sq.terms()) {
        if (t.op.weight() == 2) {
            ++zz;
            CHECK(t.coeff == -1.0);
        } else {
            ++x;
            CHECK(t.coeff == -3.05);
            CHECK(t.op.x_mask() != 0);
        }
    }
    CHECK(zz == 18);
    CHECK(x == 9);
}

TEST_CASE("Hamiltonian is traceless", "[model]") {
    for (const auto &h :
         {build_hamiltonian(Lattice::chain(5), {1.0, 0.7, 0.3}),
          build_hamiltonian(Lattice::rectangle(3, 3), {1.0, 3.05, 1.5})}) {
        for (const auto &t : h.terms()) {
            CHECK_FALSE(t.op.is_identity());
        }
    }
}

TEST_CASE("operator pool", "[model]") {
    const auto p1 = build_pool(1);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0].to_string() == "Y0");

    const auto p2 = build_pool(2);
    REQUIRE(p2.size() == 4);
    CHECK(p2[0].to_string() == "Y0");
    CHECK(p2[1].to_string() == "Y1");
    CHECK(p2[2].to_string() == "Y0 Z1");
    CHECK(p2[3].to_string() == "Z0 Y1");

    const auto p14 = build_pool(14);
    CHECK(p14.size() == 196);
    std::set<PauliString> uniq(p14.begin(), p14.end());
    CHECK(uniq.size() == 196);
    for (const auto &p : p14) {
        CHECK(p.y_count() == 1);
        CHECK(p.weight() <= 2);
    }
    CHECK_THROWS_AS(build_pool(0), std::invalid_argument);
}

TEST_CASE("magnetization powers", "[model]") {
    const auto m2 = magnetization_power(4, 2);
    const auto m4 = magnetization_power(4, 4);
    const auto up = prepare_cps<double>(4, Cps{0, Basis::Z});
    CHECK_THAT(expectation(up, m2), WithinAbs(0.25, 1e-14));
    CHECK_THAT(expectation(up, m4), WithinAbs(1.0 / 16.0, 1e-14));
    const auto plus = prepare_cps<double>(4, Cps{0, Basis::X});
    CHECK_THAT(expectation(plus, m2), WithinAbs(1.0 / 16.0, 1e-14));
    CHECK_THAT(expectation(plus, m4), WithinAbs(40.0 / 4096.0, 1e-14));
    CHECK_THROWS_AS(magnetization_power(4, 3), std::invalid_argument);
}
