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

#include <iosfwd>
#include <span>
#include <vector>

#include "dquench/dynamics.hpp"

namespace dquench::observables {

using dynamics::FieldModel;
using dynamics::MomentumGrid;
using dynamics::PseudoSpin;
using dynamics::SpinField;

// Winding, Chern and Hall values use the momentum plane oriented as (ky, kx).
// With that orientation the lattice band at m = 0.5 has w = -1 and the
// equilibrium Hall response sits at +1.
inline constexpr double kPlaneOrientation = -1.0;

struct HallParams {
    double T = 1.0;  // probe time scale

    void validate() const;
    // The instantaneous reading needs T well below the quench time.
    bool instantaneous_for(double tau) const { return T <= 0.1 * tau; }
};

double excitation_density(const PseudoSpin& n, const Vec3& h);

// Binary entropy in bits of the eigenvalues (1 +- |n|)/2.
double thermal_entropy(const PseudoSpin& n);

// Signed solid angle of the spherical triangle (a, b, c), unit vectors.
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

// Sum of plaquette solid angles over 4 pi for a unit-vector field on the
// grid, with kPlaneOrientation applied. Periodic grids close the plaquettes
// across the zone boundary.
double solid_angle_flux(std::span<const Vec3> unit_field, const MomentumGrid& grid);

double winding_flux(const FieldModel& model, double m, const MomentumGrid& grid);
int winding_number(const FieldModel& model, double m, const MomentumGrid& grid);

double chern_number(const SpinField& field);

// 1/2 sum h.n times the cell area.
double energy(const SpinField& field, const FieldModel& model);

// 1/2 int d^2k n.(dh/dkx x dh/dky)/(h^2 + T^-2), divided by 2 pi.
double hall_conductivity(const SpinField& field, const FieldModel& model, const HallParams& p);

// Same quantity from the closed-form linearized integrand.
double hall_conductivity_linearized(const SpinField& field, double tau, const HallParams& p);

std::vector<double> excitation_field(const SpinField& field, const FieldModel& model);

// sum p_exc dA / (2 pi)^2; for the lattice grid this is the mean over momenta.
double total_excitation(const SpinField& field, const FieldModel& model);
double total_entropy(const SpinField& field);

// n = -h/|h| at time t; zero where h vanishes.
SpinField equilibrium_field(const FieldModel& model, const MomentumGrid& grid, double t);

struct ObservableRow {
    double t = 0.0;
    double sigma_h = 0.0;
    double energy = 0.0;
    double chern = 0.0;  // NaN when some mode is fully mixed
    double total_excitation = 0.0;
    double total_entropy = 0.0;
};

ObservableRow measure(const SpinField& field, const FieldModel& model, const HallParams& p);

void write_observables_csv(std::ostream& out, std::span<const ObservableRow> rows);

}  // namespace dquench::observables
