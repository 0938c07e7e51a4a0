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

#include "dquench/observables.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace dquench::observables {

namespace {

constexpr double kNormTolerance = 1e-8;

double binary_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

void require_same_grid(const SpinField& field) {
    if (field.n.size() != field.grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "spin field does not cover its grid");
    }
}

double flux_over_grid(const MomentumGrid& grid, const std::function<const Vec3&(int, int)>& at) {
    const int n = grid.points_per_axis();
    const int cells = grid.periodic() ? n : n - 1;
    std::vector<double> omega;
    omega.reserve(static_cast<std::size_t>(cells) * cells);
    for (int iy = 0; iy < cells; ++iy) {
        const int jy = (iy + 1) % n;
        for (int ix = 0; ix < cells; ++ix) {
            const int jx = (ix + 1) % n;
            const Vec3& a = at(ix, iy);
            const Vec3& b = at(jx, iy);
            const Vec3& c = at(jx, jy);
            const Vec3& d = at(ix, jy);
            omega.push_back(triangle_solid_angle(a, b, c) + triangle_solid_angle(a, c, d));
        }
    }
    return kPlaneOrientation * pairwise_sum(omega) / (4.0 * M_PI);
}

}  // namespace

void HallParams::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw Error(ErrorKind::InvalidArgument, "Hall probe time T must be positive and finite");
    }
}

double excitation_density(const PseudoSpin& n, const Vec3& h) {
    const double norm = h.norm();
    if (norm == 0.0) {
        throw Error(ErrorKind::UndefinedDirection, "undefined band basis");
    }
    return 0.5 * (1.0 + h.dot(n.n) / norm);
}

double thermal_entropy(const PseudoSpin& n) {
    double r = n.norm();
    if (r > 1.0 + kNormTolerance) {
        throw Error(ErrorKind::InvalidArgument, "pseudo-spin longer than 1: |n| = " + format_real(r));
    }
    r = std::min(r, 1.0);
    return binary_term(0.5 * (1.0 + r)) + binary_term(0.5 * (1.0 - r));
}

double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double num = a.dot(b.cross(c));
    const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    return 2.0 * std::atan2(num, den);
}

double solid_angle_flux(std::span<const Vec3> unit_field, const MomentumGrid& grid) {
    if (unit_field.size() != grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "field does not cover its grid");
    }
    return flux_over_grid(grid, [&](int ix, int iy) -> const Vec3& { return unit_field[grid.index(ix, iy)]; });
}

double winding_flux(const FieldModel& model, double m, const MomentumGrid& grid) {
    std::vector<Vec3> hat(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 h = model.at_mass(grid.point(i), m);
        const double norm = h.norm();
        if (norm < 1e-12) {
            throw Error(ErrorKind::Gapless, "winding undefined at transition");
        }
        hat[i] = h / norm;
    }
    return solid_angle_flux(hat, grid);
}

int winding_number(const FieldModel& model, double m, const MomentumGrid& grid) {
    const double w = winding_flux(model, m, grid);
    const double rounded = std::round(w);
    if (std::abs(w - rounded) > 0.1) {
        throw Error(ErrorKind::Unresolved, "solid-angle flux " + format_real(w) + " is not near an integer");
    }
    return static_cast<int>(rounded);
}

double chern_number(const SpinField& field) {
    require_same_grid(field);
    std::vector<Vec3> hat(field.n.size());
    for (std::size_t i = 0; i < hat.size(); ++i) {
        const double norm = field.n[i].norm();
        if (norm == 0.0) {
            throw Error(ErrorKind::UndefinedDirection, "Chern undefined for fully mixed momentum");
        }
        hat[i] = field.n[i].n / norm;
    }
    return solid_angle_flux(hat, field.grid);
}

double energy(const SpinField& field, const FieldModel& model) {
    require_same_grid(field);
    const double m = model.mass(field.t);
    std::vector<double> terms(field.n.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] = 0.5 * model.at_mass(field.grid.point(i), m).dot(field.n[i].n);
    }
    return pairwise_sum(terms) * field.grid.cell_area();
}

double hall_conductivity(const SpinField& field, const FieldModel& model, const HallParams& p) {
    require_same_grid(field);
    p.validate();
    const double m = model.mass(field.t);
    const double reg = 1.0 / (p.T * p.T);
    std::vector<double> terms(field.n.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const Vec2 k = field.grid.point(i);
        const Vec3 h = model.at_mass(k, m);
        const Vec3 curl = model.d_kx(k).cross(model.d_ky(k));
        terms[i] = field.n[i].n.dot(curl) / (h.squaredNorm() + reg);
    }
    return kPlaneOrientation * 0.5 * pairwise_sum(terms) * field.grid.cell_area() / (2.0 * M_PI);
}

double hall_conductivity_linearized(const SpinField& field, double tau, const HallParams& p) {
    require_same_grid(field);
    p.validate();
    const double m = field.t / tau;
    const double reg = 1.0 / (p.T * p.T);
    std::vector<double> terms(field.n.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const Vec2 k = field.grid.point(i);
        terms[i] = -field.n[i].n.z() / (k.squaredNorm() + m * m + reg);
    }
    return 0.5 * pairwise_sum(terms) * field.grid.cell_area() / (2.0 * M_PI);
}

std::vector<double> excitation_field(const SpinField& field, const FieldModel& model) {
    require_same_grid(field);
    const double m = model.mass(field.t);
    std::vector<double> p(field.n.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = excitation_density(field.n[i], model.at_mass(field.grid.point(i), m));
    }
    return p;
}

double total_excitation(const SpinField& field, const FieldModel& model) {
    const std::vector<double> p = excitation_field(field, model);
    return pairwise_sum(p) * field.grid.cell_area() / (4.0 * M_PI * M_PI);
}

double total_entropy(const SpinField& field) {
    require_same_grid(field);
    std::vector<double> s(field.n.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = thermal_entropy(field.n[i]);
    }
    return pairwise_sum(s) * field.grid.cell_area() / (4.0 * M_PI * M_PI);
}

SpinField equilibrium_field(const FieldModel& model, const MomentumGrid& grid, double t) {
    SpinField out{grid, t, std::vector<PseudoSpin>(grid.size())};
    const double m = model.mass(t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 h = model.at_mass(grid.point(i), m);
        const double norm = h.norm();
        if (norm > 0.0) {
            out.n[i].n = -h / norm;
        }
    }
    return out;
}

ObservableRow measure(const SpinField& field, const FieldModel& model, const HallParams& p) {
    ObservableRow row;
    row.t = field.t;
    row.sigma_h = hall_conductivity(field, model, p);
    row.energy = energy(field, model);
    try {
        row.chern = chern_number(field);
    } catch (const Error&) {
        row.chern = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        row.total_excitation = total_excitation(field, model);
    } catch (const Error&) {
        row.total_excitation = std::numeric_limits<double>::quiet_NaN();
    }
    row.total_entropy = total_entropy(field);
    return row;
}

void write_observables_csv(std::ostream& out, std::span<const ObservableRow> rows) {
    out << "t,sigma_H,energy,chern,total_excitation,total_entropy\n";
    for (const ObservableRow& r : rows) {
        out << format_real(r.t) << ',' << format_real(r.sigma_h) << ',' << format_real(r.energy) << ','
            << format_real(r.chern) << ',' << format_real(r.total_excitation) << ','
            << format_real(r.total_entropy) << '\n';
    }
}

}  // namespace dquench::observables
