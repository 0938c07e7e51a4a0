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

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dquench/common.hpp"

namespace dquench::dynamics {

// Bloch vector of one momentum mode, rho_k = (1 + n.sigma)/2.
struct PseudoSpin {
    Vec3 n = Vec3::Zero();

    double norm() const { return n.norm(); }
};

enum class FieldKind { LinearizedDirac, LatticeBloch };

// h(k, t) with mass m = t / tau.
//   LinearizedDirac: (kx, ky, m)
//   LatticeBloch:    (sin kx, sin ky, m - 2 + cos kx + cos ky)
class FieldModel {
  public:
    static FieldModel linearized_dirac(double tau);
    static FieldModel lattice_bloch(double tau);

    FieldKind kind() const { return kind_; }
    double tau() const { return tau_; }
    double mass(double t) const { return t / tau_; }

    Vec3 at_mass(const Vec2& k, double m) const;
    Vec3 at(const Vec2& k, double t) const { return at_mass(k, mass(t)); }

    // Analytic dh/dkx and dh/dky. Neither depends on the mass.
    Vec3 d_kx(const Vec2& k) const;
    Vec3 d_ky(const Vec2& k) const;

  private:
    FieldModel(FieldKind kind, double tau) : kind_(kind), tau_(tau) {}

    FieldKind kind_;
    double tau_;
};

Vec3 field_at(const FieldModel& model, const Vec2& k, double t);

// Square grid holding k = 0 exactly. Point (ix, iy) sits at
// ((ix - N/2) dk, (iy - N/2) dk) with integer division N/2.
class MomentumGrid {
  public:
    // Open grid, dk = k_max / (N/2).
    static MomentumGrid linearized(double k_max, int points_per_axis);
    // The L x L allowed momenta of a periodic lattice, dk = 2 pi / L.
    static MomentumGrid lattice(int L);

    int points_per_axis() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }
    double spacing() const { return dk_; }
    double cell_area() const { return dk_ * dk_; }
    bool periodic() const { return periodic_; }

    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * n_ + ix; }
    Vec2 point(int ix, int iy) const { return {(ix - n_ / 2) * dk_, (iy - n_ / 2) * dk_}; }
    Vec2 point(std::size_t i) const { return point(static_cast<int>(i % n_), static_cast<int>(i / n_)); }
    std::size_t origin_index() const { return index(n_ / 2, n_ / 2); }

    double max_abs_k() const;

    bool operator==(const MomentumGrid&) const = default;

  private:
    MomentumGrid(int n, double dk, bool periodic) : n_(n), dk_(dk), periodic_(periodic) {}

    int n_;
    double dk_;
    bool periodic_;
};

class QuenchSchedule {
  public:
    // Requires tau > 0, gamma >= 0, t0 < 0 < tf, dt > 0.
    QuenchSchedule(double tau, double gamma, double t0, double tf, double dt);

    double tau() const { return tau_; }
    double gamma() const { return gamma_; }
    double t0() const { return t0_; }
    double tf() const { return tf_; }
    double dt() const { return dt_; }

    // Rejects dt * max(|h|, gamma |h|^2) >= 0.1 for |h| up to field_bound.
    void require_stable(double field_bound) const;

  private:
    double tau_, gamma_, t0_, tf_, dt_;
};

// Largest |h| over the grid and the window. |h|^2 is convex in the mass,
// so the endpoints suffice.
double field_bound(const FieldModel& model, const MomentumGrid& grid, double t0, double tf);

// Largest dt with dt * max(|h|, gamma |h|^2) = safety.
double stable_step(double field_bound, double gamma, double safety = 0.05);

// Builds and checks a schedule for a grid run. dt <= 0 selects stable_step.
QuenchSchedule make_schedule(const FieldModel& model, const MomentumGrid& grid, double gamma, double t0,
                             double tf, double dt = 0.0);

Vec3 bloch_rhs(const PseudoSpin& n, const Vec3& h, double gamma);

struct Trajectory {
    std::vector<double> times;
    std::vector<PseudoSpin> spins;
};

// Fixed-step RK4 from (t_start, start) through the ascending snapshot times.
// Each interval between stops is split into ceil(interval / dt_max) equal steps.
Trajectory evolve_spin(const std::function<Vec3(double)>& field, const PseudoSpin& start, double gamma,
                       double t_start, std::span<const double> snapshots, double dt_max);

// Starts from n = -h(k, t0)/|h| and returns n at each snapshot in [t0, tf];
// tf is appended when the list stops short of it.
Trajectory integrate_trajectory(const FieldModel& model, const Vec2& k, const QuenchSchedule& sched,
                                std::span<const double> snapshots);

// Largest |n_dt - n_{dt/2}| over the snapshots.
double step_halving_error(const FieldModel& model, const Vec2& k, const QuenchSchedule& sched,
                          std::span<const double> snapshots);

double two_level_coherence(double delta, double gamma, double t);

struct SpinField {
    MomentumGrid grid;
    double t = 0.0;
    std::vector<PseudoSpin> n;
};

// One SpinField per trajectory time. Per-k results are bit-identical to
// integrate_trajectory whatever the worker count.
std::vector<SpinField> evolve_grid(const FieldModel& model, const MomentumGrid& grid,
                                   const QuenchSchedule& sched, std::span<const double> snapshots,
                                   int workers = 1);

// Columns t,kx,ky,nx,ny,nz.
void write_spin_csv(std::ostream& out, std::span<const SpinField> fields);

}  // namespace dquench::dynamics
