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

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dquench/dynamics.hpp"

namespace dquench::lattice {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

enum class Direction : int { X = 0, Y = 1 };

struct DisorderRealization {
    int L = 0;
    std::uint64_t seed = 0;
    double delta_t = 0.0;
    std::vector<double> bond_shifts;  // index 2 * site + direction

    // mt19937_64(seed); each bond takes delta_t * (2u - 1) with u the top 53
    // bits of one draw, bonds ordered by site then direction.
    static DisorderRealization generate(int L, std::uint64_t seed, double delta_t);

    double hopping(int site, Direction d) const { return 1.0 + bond_shifts[2 * site + static_cast<int>(d)]; }
};

// Site (x, y) is x + L y; orbital s in {0, 1} of site r has index 2 r + s.
// Bond r -> r + e_mu carries t_r (sz + i s_mu)/2, so the clean Bloch
// Hamiltonian is h(k).sigma with h = (sin kx, sin ky, m - 2 + cos kx + cos ky).
class LatticeHamiltonian {
  public:
    LatticeHamiltonian(const DisorderRealization& real, double m);

    int L() const { return L_; }
    int dimension() const { return 2 * L_ * L_; }
    double mass() const { return mass_; }

    const SparseCMatrix& hopping() const { return hopping_; }
    SparseCMatrix matrix() const;
    CMatrix dense() const;

    // out = H(m) X for any mass m, reusing the hopping part.
    void apply(const CMatrix& X, double m, CMatrix& out) const;
    void apply(const CMatrix& X, CMatrix& out) const { apply(X, mass_, out); }

    // Largest Gershgorin row sum of H(m), an upper bound on ||H(m)||.
    double norm_bound(double m) const;
    double norm_bound() const { return norm_bound(mass_); }

  private:
    int L_;
    double mass_;
    SparseCMatrix hopping_;
    double hop_row_max_;
};

LatticeHamiltonian build_bhz(const DisorderRealization& real, double m);

struct Spectrum {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXcd vectors;  // columns
};

Spectrum hermitian_spectrum(const CMatrix& H);

// Exact ||H(m)|| from the eigenvalues.
double spectral_radius(const LatticeHamiltonian& H, double m);

struct SingleParticleProjector {
    CMatrix P;

    int dimension() const { return static_cast<int>(P.rows()); }
    double trace() const { return P.trace().real(); }
};

// Projectors onto E < 0 and E > 0. Both reject |E| < 1e-12.
SingleParticleProjector ground_projector(const LatticeHamiltonian& H);
SingleParticleProjector excited_projector(const LatticeHamiltonian& H);

enum class Integrator {
    // Each step applies exp(dt L(t_mid)) through a Chebyshev series in ad_H.
    ExponentialMidpoint,
    RungeKutta4,
};

const char* integrator_name(Integrator integrator);
Integrator parse_integrator(const std::string& name);

struct PropagatorOptions {
    Integrator integrator = Integrator::ExponentialMidpoint;
    double dt = 0.0;  // <= 0 picks default_lattice_step
};

// Default steps. RK4: 0.05 / (b + gamma b^2) with b the norm bound over the
// window. Exponential midpoint: min(0.25, 0.05 sqrt(max(1, tau) / max(1, gamma))).
double default_lattice_step(Integrator integrator, double norm_bound, double gamma, double tau);

// H(t) = hopping + (m0 + rate t - 2) sz.
struct MassRamp {
    double m0 = 0.0;
    double rate = 0.0;

    double at(double t) const { return m0 + rate * t; }
};

struct ProjectorSnapshot {
    double t = 0.0;
    SingleParticleProjector P;
};

// Evolves dP/dt = -i[H, P] - gamma [H, [H, P]] from t_start through the
// ascending stops, splitting each interval into equal steps no longer than dt.
std::vector<ProjectorSnapshot> propagate(const SingleParticleProjector& P0, const LatticeHamiltonian& H,
                                         const MassRamp& ramp, double gamma, double t_start,
                                         std::span<const double> stops, const PropagatorOptions& opts);

// Quench with m(t) = t / tau over [t0, tf]; tf is appended to the snapshots.
std::vector<ProjectorSnapshot> evolve_projector(const SingleParticleProjector& P0,
                                                const DisorderRealization& real,
                                                const dynamics::QuenchSchedule& sched,
                                                std::span<const double> snapshots,
                                                const PropagatorOptions& opts = {});

// f(r) = sum_s <r s| P_ex P |r s>, one value per site.
std::vector<double> spatial_excitation_density(const SingleParticleProjector& P, const LatticeHamiltonian& Hf);
std::vector<double> spatial_excitation_density(const SingleParticleProjector& P,
                                               const SingleParticleProjector& P_excited);

struct Autocorrelation {
    std::vector<int> r;
    std::vector<double> a;
    std::vector<std::size_t> pairs;
};

// Minimum-image separations whose length is exactly the integer r, for
// r = 0 .. L/2, each bin averaged over its pairs and normalized by the
// variance.
Autocorrelation autocorrelation(std::span<const double> f, int L);

// First r with A(r) <= threshold, interpolated between bins.
double correlation_length(const Autocorrelation& A, double threshold = 0.05);

struct SeedRecord {
    std::uint64_t seed = 0;
    bool censored = false;
    double xi = 0.0;
    std::vector<double> f_ex;
    Autocorrelation A;
};

struct EnsembleResult {
    std::vector<SeedRecord> records;
    double xi_mean = 0.0;
    double xi_se = 0.0;
    std::size_t n_used = 0;
    std::size_t n_censored = 0;
};

// Quench from the ground state at m(t0) and measure f_ex, A(r) and xi at tf.
// A seed whose A(r) never reaches the threshold comes back censored.
SeedRecord run_seed(int L, double delta_t, std::uint64_t seed, const dynamics::QuenchSchedule& sched,
                    const PropagatorOptions& opts = {});

// Mean and standard error of xi over the uncensored records.
EnsembleResult summarize_ensemble(std::vector<SeedRecord> records);

// One quench per seed from the ground state at m(t0). Seeds whose A(r)
// never reaches the threshold are censored and left out of the mean.
EnsembleResult run_disorder_ensemble(int L, double delta_t, std::span<const std::uint64_t> seeds,
                                     const dynamics::QuenchSchedule& sched, const PropagatorOptions& opts = {},
                                     int workers = 1);

}  // namespace dquench::lattice
