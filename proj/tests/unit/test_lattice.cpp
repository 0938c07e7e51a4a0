// Copyright 2026 The dquench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dquench/lattice.hpp"

using namespace dquench;
using namespace dquench::lattice;

namespace {

double max_abs(const CMatrix& M) { return M.cwiseAbs().maxCoeff(); }

Eigen::VectorXd eigenvalues(const CMatrix& P) { return hermitian_spectrum(P).energies; }

DisorderRealization clean(int L) { return DisorderRealization::generate(L, 0, 0.0); }

}  // namespace

TEST_CASE("disorder realizations are bounded and reproducible") {
    const auto a = DisorderRealization::generate(10, 42, 0.1);
    const auto b = DisorderRealization::generate(10, 42, 0.1);
    const auto c = DisorderRealization::generate(10, 43, 0.1);
    REQUIRE(a.bond_shifts.size() == 200);
    CHECK(a.bond_shifts == b.bond_shifts);
    CHECK(a.bond_shifts != c.bond_shifts);
    for (double d : a.bond_shifts) {
        CHECK(std::abs(d) <= 0.1);
    }
}

TEST_CASE("Hamiltonian is exactly Hermitian") {
    const LatticeHamiltonian H(DisorderRealization::generate(6, 9, 0.1), 0.3);
    const CMatrix D = H.dense();
    CHECK(max_abs(D - D.adjoint()) == 0.0);
    CHECK(H.dimension() == 72);
    CHECK(spectral_radius(H, 0.3) <= H.norm_bound(0.3) + 1e-12);
}

TEST_CASE("clean spectrum matches the Bloch bands") {
    const int L = 16;
    const LatticeHamiltonian H(clean(L), -0.5);
    const Eigen::VectorXd E = hermitian_spectrum(H.dense()).energies;
    const auto model = dynamics::FieldModel::lattice_bloch(1.0);
    const auto grid = dynamics::MomentumGrid::lattice(L);
    std::vector<double> bands;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double h = model.at_mass(grid.point(i), -0.5).norm();
        bands.push_back(-h);
        bands.push_back(h);
    }
    std::sort(bands.begin(), bands.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        worst = std::max(worst, std::abs(E[static_cast<Eigen::Index>(i)] - bands[i]));
    }
    CHECK(worst < 1e-10);

    const Eigen::VectorXd E0 = hermitian_spectrum(LatticeHamiltonian(clean(L), 0.0).dense()).energies;
    CHECK(E0.cwiseAbs().minCoeff() < 1e-12);
}

TEST_CASE("ground projector") {
    const int L = 6;
    const LatticeHamiltonian H(DisorderRealization::generate(L, 3, 0.1), -0.5);
    const auto P = ground_projector(H);
    const CMatrix D = H.dense();
    CHECK(P.trace() == doctest::Approx(L * L).epsilon(1e-12));
    CHECK(max_abs(P.P * P.P - P.P) < 1e-10);
    CHECK(max_abs(D * P.P - P.P * D) < 1e-10);
    const Eigen::VectorXd E = hermitian_spectrum(D).energies;
    double negative = 0.0;
    for (double e : E) {
        negative += std::min(e, 0.0);
    }
    CHECK((D * P.P).trace().real() == doctest::Approx(negative).epsilon(1e-10));
    CHECK_THROWS_AS(ground_projector(LatticeHamiltonian(clean(8), 0.0)), Error);
}

TEST_CASE("ground state is a fixed point of static evolution") {
    const LatticeHamiltonian H(DisorderRealization::generate(4, 5, 0.1), -0.5);
    const auto P0 = ground_projector(H);
    const double stops[] = {5.0};
    for (Integrator integ : {Integrator::ExponentialMidpoint, Integrator::RungeKutta4}) {
        const auto snaps = propagate(P0, H, MassRamp{-0.5, 0.0}, 0.8, 0.0, stops, {integ, 0.0});
        CHECK(max_abs(snaps.back().P.P - P0.P) < 1e-8);
    }
}

TEST_CASE("static dephasing matches the closed form on a dimension-8 lattice") {
    const LatticeHamiltonian H(DisorderRealization::generate(2, 17, 0.1), 0.3);
    const Spectrum S = hermitian_spectrum(H.dense());
    REQUIRE(S.energies.size() == 8);

    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    CMatrix A(8, 8);
    for (Eigen::Index i = 0; i < 8; ++i) {
        for (Eigen::Index j = 0; j < 8; ++j) {
            A(i, j) = Complex(g(rng), g(rng));
        }
    }
    const CMatrix Q = Eigen::HouseholderQR<CMatrix>(A).householderQ();
    const CMatrix P0 = Q.leftCols(4) * Q.leftCols(4).adjoint();

    const double gamma = 0.5;
    const double norm = S.energies.cwiseAbs().maxCoeff();
    const double t = 1.0 / (gamma * norm * norm);
    const Eigen::MatrixXcd V = S.vectors;
    const Eigen::MatrixXcd Pe0 = V.adjoint() * P0 * V;
    Eigen::MatrixXcd Pe = Pe0;
    for (Eigen::Index m = 0; m < 8; ++m) {
        for (Eigen::Index n = 0; n < 8; ++n) {
            const double w = S.energies[m] - S.energies[n];
            Pe(m, n) = Pe0(m, n) * std::exp(Complex(-gamma * w * w * t, -w * t));
        }
    }
    const CMatrix expected = V * Pe * V.adjoint();
    const double stops[] = {t};
    for (Integrator integ : {Integrator::ExponentialMidpoint, Integrator::RungeKutta4}) {
        const auto snaps = propagate({P0}, H, MassRamp{0.3, 0.0}, gamma, 0.0, stops, {integ, 0.0});
        CHECK(max_abs(snaps.back().P.P - expected) < 1e-6);
    }
}

TEST_CASE("purity decreases under static dephasing") {
    const LatticeHamiltonian H(DisorderRealization::generate(3, 2, 0.1), 1.0);
    const auto P0 = ground_projector(LatticeHamiltonian(DisorderRealization::generate(3, 2, 0.1), -1.0));
    std::vector<double> stops;
    for (int i = 1; i <= 20; ++i) {
        stops.push_back(0.25 * i);
    }
    const auto snaps = propagate(P0, H, MassRamp{1.0, 0.0}, 0.3, 0.0, stops, {});
    double prev = (P0.P * P0.P).trace().real();
    for (const auto& s : snaps) {
        const double purity = (s.P.P * s.P.P).trace().real();
        CHECK(purity <= prev + 1e-10);
        prev = purity;
    }
    CHECK(prev < (P0.P * P0.P).trace().real() - 0.1);
}

TEST_CASE("quench invariants") {
    const int L = 6;
    const auto real = DisorderRealization::generate(L, 8, 0.1);
    const auto P0 = ground_projector(LatticeHamiltonian(real, -0.5));
    const Eigen::VectorXd spec0 = eigenvalues(P0.P);
    for (double gamma : {0.0, 1.0}) {
        const dynamics::QuenchSchedule sched(4.0, gamma, -2.0, 2.0, 1.0);
        const double snaps[] = {-1.0, 0.0, 1.0};
        for (Integrator integ : {Integrator::ExponentialMidpoint, Integrator::RungeKutta4}) {
            const auto out = evolve_projector(P0, real, sched, snaps, {integ, 0.0});
            REQUIRE(out.size() == 4);
            for (const auto& s : out) {
                CHECK(std::abs(s.P.trace() - L * L) / (L * L) < 1e-8);
                CHECK(max_abs(s.P.P - s.P.P.adjoint()) < 1e-10);
                const Eigen::VectorXd e = eigenvalues(s.P.P);
                CHECK(e.minCoeff() > -1e-6);
                CHECK(e.maxCoeff() < 1 + 1e-6);
                if (gamma == 0.0) {
                    CHECK((e - spec0).cwiseAbs().maxCoeff() < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("integrators agree on a quench") {
    const auto real = DisorderRealization::generate(4, 21, 0.1);
    const auto P0 = ground_projector(LatticeHamiltonian(real, -0.5));
    const dynamics::QuenchSchedule sched(3.0, 0.7, -1.5, 1.5, 1.0);
    const auto a = evolve_projector(P0, real, sched, {}, {Integrator::ExponentialMidpoint, 0.005});
    const auto b = evolve_projector(P0, real, sched, {}, {Integrator::RungeKutta4, 0.0});
    CHECK(max_abs(a.back().P.P - b.back().P.P) < 1e-6);
}

TEST_CASE("RK4 rejects oversized steps") {
    const auto real = DisorderRealization::generate(4, 1, 0.1);
    const auto P0 = ground_projector(LatticeHamiltonian(real, -0.5));
    const dynamics::QuenchSchedule sched(3.0, 1.0, -1.5, 1.5, 1.0);
    CHECK_THROWS_AS(evolve_projector(P0, real, sched, {}, {Integrator::RungeKutta4, 0.5}), Error);
    CHECK(parse_integrator("rk4") == Integrator::RungeKutta4);
    CHECK(std::string(integrator_name(Integrator::ExponentialMidpoint)) == "expmid");
    CHECK_THROWS_AS(parse_integrator("euler"), Error);
}

TEST_CASE("spatial excitation density") {
    const int L = 5;
    const LatticeHamiltonian Hf(DisorderRealization::generate(L, 4, 0.1), 0.5);
    for (double f : spatial_excitation_density(ground_projector(Hf), Hf)) {
        CHECK(std::abs(f) < 1e-10);
    }
    double total = 0.0;
    for (double f : spatial_excitation_density(excited_projector(Hf), Hf)) {
        total += f;
    }
    CHECK(total == doctest::Approx(L * L).epsilon(1e-10));
}

TEST_CASE("slow quench stays adiabatic") {
    const int L = 12;
    const auto real = clean(L);
    const auto P0 = ground_projector(LatticeHamiltonian(real, -0.5));
    const dynamics::QuenchSchedule sched(1e4, 0.0, -5e3, 5e3, 1.0);
    const auto out = evolve_projector(P0, real, sched, {}, {Integrator::ExponentialMidpoint, 2.0});
    const auto f = spatial_excitation_density(out.back().P, LatticeHamiltonian(real, 0.5));
    double mean = 0.0;
    for (double v : f) {
        mean += v / (L * L);
    }
    CHECK(mean < 0.05);
}

TEST_CASE("autocorrelation examples") {
    const int L = 8;
    std::vector<double> checker(L * L);
    for (int y = 0; y < L; ++y) {
        for (int x = 0; x < L; ++x) {
            checker[x + L * y] = (x + y) % 2 == 0 ? 1.0 : -1.0;
        }
    }
    const auto A = autocorrelation(checker, L);
    CHECK(A.r[0] == 0);
    CHECK(A.a[0] == 1.0);
    CHECK(A.r[1] == 1);
    CHECK(A.a[1] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK_THROWS_AS(autocorrelation(std::vector<double>(L * L, 0.3), L), Error);
}

TEST_CASE("white noise has small autocorrelation") {
    const int L = 30;
    std::mt19937_64 rng(123);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> f(L * L);
        for (double& v : f) {
            v = g(rng);
        }
        const auto A = autocorrelation(f, L);
        CHECK(A.a[0] == 1.0);
        for (std::size_t j = 1; j < A.r.size(); ++j) {
            CHECK(std::abs(A.a[j]) < 3.0 / L);
        }
    }
}

TEST_CASE("correlation length examples") {
    Autocorrelation lin, ex;
    for (int r = 0; r <= 15; ++r) {
        lin.r.push_back(r);
        lin.a.push_back(std::max(0.0, 1.0 - r / 4.0));
        ex.r.push_back(r);
        ex.a.push_back(std::exp(-r / 3.0));
    }
    CHECK(correlation_length(lin) == doctest::Approx(3.8).epsilon(1e-12));
    CHECK(correlation_length(ex) == doctest::Approx(3.0 * std::log(20.0)).epsilon(2e-3));
    Autocorrelation slow{{0, 1, 2}, {1.0, 0.9, 0.8}, {1, 4, 4}};
    CHECK_THROWS_AS(correlation_length(slow), Error);
}

TEST_CASE("ensemble determinism and the clean limit") {
    const dynamics::QuenchSchedule sched(1.0, 0.0, -0.5, 0.5, 1.0);
    const std::uint64_t twice[] = {7, 7};
    const auto e = run_disorder_ensemble(6, 0.1, twice, sched);
    REQUIRE(e.records.size() == 2);
    CHECK(e.records[0].f_ex == e.records[1].f_ex);
    if (e.n_used == 2) {
        CHECK(e.xi_se == 0.0);
    }
    const std::uint64_t seeds[] = {1, 2};
    CHECK_THROWS_AS(run_disorder_ensemble(6, 0.0, seeds, sched), Error);
    const std::uint64_t one[] = {1};
    CHECK_THROWS_AS(run_disorder_ensemble(6, 0.1, one, sched), Error);
}
