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

#include "dquench/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace dquench::dynamics {

namespace {

std::string describe_k(const Vec2& k) {
    return "k = (" + format_real(k.x()) + ", " + format_real(k.y()) + ")";
}

// Stops are the snapshots plus the terminal time; the caller has checked order.
template <class Field>
Trajectory rk4_run(const Field& field, Vec3 n, double gamma, double t_start,
                   std::span<const double> stops, double dt_max) {
    Trajectory out;
    out.times.assign(stops.begin(), stops.end());
    out.spins.reserve(stops.size());

    auto rhs = [gamma](const Vec3& v, const Vec3& h) -> Vec3 {
        const Vec3 hn = h.cross(v);
        return hn + gamma * h.cross(hn);
    };

    double t = t_start;
    for (double stop : stops) {
        const double span = stop - t;
        if (span > 0.0) {
            const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max - 1e-9)));
            const double h = span / static_cast<double>(steps);
            const double t_from = t;
            for (long s = 0; s < steps; ++s) {
                const double ts = t_from + s * h;
                const Vec3 h0 = field(ts);
                const Vec3 hm = field(ts + 0.5 * h);
                const Vec3 h1 = field(ts + h);
                const Vec3 k1 = rhs(n, h0);
                const Vec3 k2 = rhs(n + 0.5 * h * k1, hm);
                const Vec3 k3 = rhs(n + 0.5 * h * k2, hm);
                const Vec3 k4 = rhs(n + h * k3, h1);
                n += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            t = stop;
        }
        out.spins.push_back(PseudoSpin{n});
    }
    return out;
}

// Both models have h(t) = (hx, hy, hz0 + t / tau) at fixed k, so a block of
// momenta shares one time grid. Each point sees the same operation sequence
// whatever the block size.
struct AffineBlock {
    std::vector<double> hx, hy, hz0;
    std::vector<double> nx, ny, nz;

    explicit AffineBlock(std::size_t n) : hx(n), hy(n), hz0(n), nx(n), ny(n), nz(n) {}
};

inline void spin_rhs(double hx, double hy, double hz, double vx, double vy, double vz, double gamma, double& fx,
                     double& fy, double& fz) {
    const double cx = hy * vz - hz * vy;
    const double cy = hz * vx - hx * vz;
    const double cz = hx * vy - hy * vx;
    fx = cx + gamma * (hy * cz - hz * cy);
    fy = cy + gamma * (hz * cx - hx * cz);
    fz = cz + gamma * (hx * cy - hy * cx);
}

void rk4_affine_steps(AffineBlock& b, double inv_tau, double gamma, double t_from, double h, long steps) {
    const std::size_t n = b.nx.size();
    double* __restrict nx = b.nx.data();
    double* __restrict ny = b.ny.data();
    double* __restrict nz = b.nz.data();
    const double* __restrict hx = b.hx.data();
    const double* __restrict hy = b.hy.data();
    const double* __restrict hz0 = b.hz0.data();
    const double half = 0.5 * h;
    const double sixth = h / 6.0;
    for (long s = 0; s < steps; ++s) {
        const double ts = t_from + s * h;
        const double za = ts * inv_tau;
        const double zm = (ts + half) * inv_tau;
        const double zb = (ts + h) * inv_tau;
#pragma GCC ivdep
        for (std::size_t j = 0; j < n; ++j) {
            const double x = hx[j];
            const double y = hy[j];
            const double ha = hz0[j] + za;
            const double hm = hz0[j] + zm;
            const double hb = hz0[j] + zb;
            double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z;
            spin_rhs(x, y, ha, nx[j], ny[j], nz[j], gamma, k1x, k1y, k1z);
            spin_rhs(x, y, hm, nx[j] + half * k1x, ny[j] + half * k1y, nz[j] + half * k1z, gamma, k2x, k2y, k2z);
            spin_rhs(x, y, hm, nx[j] + half * k2x, ny[j] + half * k2y, nz[j] + half * k2z, gamma, k3x, k3y, k3z);
            spin_rhs(x, y, hb, nx[j] + h * k3x, ny[j] + h * k3y, nz[j] + h * k3z, gamma, k4x, k4y, k4z);
            nx[j] += sixth * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            ny[j] += sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            nz[j] += sixth * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        }
    }
}

std::vector<double> trajectory_stops(const QuenchSchedule& sched, std::span<const double> snapshots) {
    std::vector<double> stops(snapshots.begin(), snapshots.end());
    double prev = sched.t0();
    for (double s : stops) {
        if (!(s >= prev) || s > sched.tf()) {
            throw Error(ErrorKind::InvalidArgument, "snapshot times must be ascending within [t0, tf]");
        }
        prev = s;
    }
    if (stops.empty() || stops.back() < sched.tf()) {
        stops.push_back(sched.tf());
    }
    return stops;
}

Vec3 initial_spin(const FieldModel& model, const Vec2& k, double t0) {
    const Vec3 h = model.at(k, t0);
    const double norm = h.norm();
    if (norm == 0.0) {
        throw Error(ErrorKind::UndefinedDirection, "undefined initial equilibrium direction at " + describe_k(k));
    }
    return -h / norm;
}

constexpr std::size_t kBlockSize = 64;

void load_block(AffineBlock& b, const FieldModel& model, std::span<const Vec2> ks, double t0) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const Vec2& k = ks[j];
        if (model.kind() == FieldKind::LinearizedDirac) {
            b.hx[j] = k.x();
            b.hy[j] = k.y();
            b.hz0[j] = 0.0;
        } else {
            b.hx[j] = std::sin(k.x());
            b.hy[j] = std::sin(k.y());
            b.hz0[j] = std::cos(k.x()) + std::cos(k.y()) - 2.0;
        }
        const Vec3 n0 = initial_spin(model, k, t0);
        b.nx[j] = n0.x();
        b.ny[j] = n0.y();
        b.nz[j] = n0.z();
    }
}

template <class Record>
void run_block(AffineBlock& b, const FieldModel& model, const QuenchSchedule& sched,
               const std::vector<double>& stops, Record record) {
    const double inv_tau = 1.0 / model.tau();
    double t = sched.t0();
    for (std::size_t s = 0; s < stops.size(); ++s) {
        const double span = stops[s] - t;
        if (span > 0.0) {
            const long steps = std::max(1L, static_cast<long>(std::ceil(span / sched.dt() - 1e-9)));
            rk4_affine_steps(b, inv_tau, sched.gamma(), t, span / static_cast<double>(steps), steps);
            t = stops[s];
        }
        record(s, b);
    }
}

}  // namespace

FieldModel FieldModel::linearized_dirac(double tau) {
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    }
    return FieldModel(FieldKind::LinearizedDirac, tau);
}

FieldModel FieldModel::lattice_bloch(double tau) {
    if (!(tau > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    }
    return FieldModel(FieldKind::LatticeBloch, tau);
}

Vec3 FieldModel::at_mass(const Vec2& k, double m) const {
    if (kind_ == FieldKind::LinearizedDirac) {
        return {k.x(), k.y(), m};
    }
    return {std::sin(k.x()), std::sin(k.y()), m - 2.0 + std::cos(k.x()) + std::cos(k.y())};
}

Vec3 FieldModel::d_kx(const Vec2& k) const {
    if (kind_ == FieldKind::LinearizedDirac) {
        return {1.0, 0.0, 0.0};
    }
    return {std::cos(k.x()), 0.0, -std::sin(k.x())};
}

Vec3 FieldModel::d_ky(const Vec2& k) const {
    if (kind_ == FieldKind::LinearizedDirac) {
        return {0.0, 1.0, 0.0};
    }
    return {0.0, std::cos(k.y()), -std::sin(k.y())};
}

Vec3 field_at(const FieldModel& model, const Vec2& k, double t) { return model.at(k, t); }

MomentumGrid MomentumGrid::linearized(double k_max, int points_per_axis) {
    if (!(k_max > 0.0) || !std::isfinite(k_max)) {
        throw Error(ErrorKind::InvalidArgument, "k_max must be positive");
    }
    if (points_per_axis < 2) {
        throw Error(ErrorKind::InvalidArgument, "need at least 2 grid points per axis");
    }
    return MomentumGrid(points_per_axis, k_max / (points_per_axis / 2), false);
}

MomentumGrid MomentumGrid::lattice(int L) {
    if (L < 2) {
        throw Error(ErrorKind::InvalidArgument, "lattice size must be at least 2");
    }
    return MomentumGrid(L, 2.0 * M_PI / L, true);
}

double MomentumGrid::max_abs_k() const {
    const int far = std::max(n_ / 2, n_ - 1 - n_ / 2);
    return std::sqrt(2.0) * far * dk_;
}

QuenchSchedule::QuenchSchedule(double tau, double gamma, double t0, double tf, double dt)
    : tau_(tau), gamma_(gamma), t0_(t0), tf_(tf), dt_(dt) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw Error(ErrorKind::InvalidArgument, "tau must be positive, got " + format_real(tau));
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be non-negative, got " + format_real(gamma));
    }
    if (!(t0 < 0.0 && tf > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "window must satisfy t0 < 0 < tf");
    }
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    }
}

void QuenchSchedule::require_stable(double bound) const {
    const double rate = std::max(bound, gamma_ * bound * bound);
    if (!(dt_ * rate < 0.1)) {
        std::ostringstream msg;
        msg << "step too large: dt*max(|h|, gamma|h|^2) = " << format_real(dt_ * rate) << " >= 0.1";
        throw Error(ErrorKind::StepSize, msg.str());
    }
}

double field_bound(const FieldModel& model, const MomentumGrid& grid, double t0, double tf) {
    const double m0 = model.mass(t0);
    const double m1 = model.mass(tf);
    if (model.kind() == FieldKind::LinearizedDirac) {
        const double k = grid.max_abs_k();
        const double m = std::max(std::abs(m0), std::abs(m1));
        return std::sqrt(k * k + m * m);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec2 k = grid.point(i);
        best = std::max({best, model.at_mass(k, m0).norm(), model.at_mass(k, m1).norm()});
    }
    return best;
}

double stable_step(double bound, double gamma, double safety) {
    const double rate = std::max(bound, gamma * bound * bound);
    if (!(rate > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "field bound must be positive");
    }
    return safety / rate;
}

QuenchSchedule make_schedule(const FieldModel& model, const MomentumGrid& grid, double gamma, double t0,
                             double tf, double dt) {
    const double bound = field_bound(model, grid, t0, tf);
    if (dt <= 0.0) {
        dt = stable_step(bound, gamma);
    }
    QuenchSchedule sched(model.tau(), gamma, t0, tf, dt);
    sched.require_stable(bound);
    return sched;
}

Vec3 bloch_rhs(const PseudoSpin& n, const Vec3& h, double gamma) {
    const Vec3 hn = h.cross(n.n);
    return hn + gamma * h.cross(hn);
}

Trajectory evolve_spin(const std::function<Vec3(double)>& field, const PseudoSpin& start, double gamma,
                       double t_start, std::span<const double> snapshots, double dt_max) {
    if (!(dt_max > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    }
    double prev = t_start;
    for (double s : snapshots) {
        if (!(s >= prev)) {
            throw Error(ErrorKind::InvalidArgument, "snapshot times must be ascending from the start time");
        }
        prev = s;
    }
    return rk4_run(field, start.n, gamma, t_start, snapshots, dt_max);
}

Trajectory integrate_trajectory(const FieldModel& model, const Vec2& k, const QuenchSchedule& sched,
                                std::span<const double> snapshots) {
    const std::vector<double> stops = trajectory_stops(sched, snapshots);
    AffineBlock block(1);
    load_block(block, model, std::span<const Vec2>(&k, 1), sched.t0());
    Trajectory out;
    out.times = stops;
    run_block(block, model, sched, stops, [&](std::size_t, const AffineBlock& b) {
        out.spins.push_back(PseudoSpin{Vec3(b.nx[0], b.ny[0], b.nz[0])});
    });
    return out;
}

double step_halving_error(const FieldModel& model, const Vec2& k, const QuenchSchedule& sched,
                          std::span<const double> snapshots) {
    const QuenchSchedule fine(sched.tau(), sched.gamma(), sched.t0(), sched.tf(), 0.5 * sched.dt());
    const Trajectory a = integrate_trajectory(model, k, sched, snapshots);
    const Trajectory b = integrate_trajectory(model, k, fine, snapshots);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.spins.size(); ++i) {
        worst = std::max(worst, (a.spins[i].n - b.spins[i].n).norm());
    }
    return worst;
}

double two_level_coherence(double delta, double gamma, double t) {
    if (!(delta >= 0.0) || !(gamma >= 0.0) || !(t >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "two_level_coherence needs delta, gamma, t >= 0");
    }
    return std::exp(-gamma * delta * delta * t);
}

std::vector<SpinField> evolve_grid(const FieldModel& model, const MomentumGrid& grid,
                                   const QuenchSchedule& sched, std::span<const double> snapshots,
                                   int workers) {
    const std::vector<double> stops = trajectory_stops(sched, snapshots);
    std::vector<SpinField> fields;
    fields.reserve(stops.size());
    for (double t : stops) {
        fields.push_back(SpinField{grid, t, std::vector<PseudoSpin>(grid.size())});
    }

    const std::size_t blocks = (grid.size() + kBlockSize - 1) / kBlockSize;
    parallel_for(blocks, workers, [&](std::size_t blk) {
        const std::size_t first = blk * kBlockSize;
        const std::size_t count = std::min(kBlockSize, grid.size() - first);
        std::vector<Vec2> ks(count);
        for (std::size_t j = 0; j < count; ++j) {
            ks[j] = grid.point(first + j);
        }
        AffineBlock block(count);
        load_block(block, model, ks, sched.t0());
        run_block(block, model, sched, stops, [&](std::size_t s, const AffineBlock& b) {
            for (std::size_t j = 0; j < count; ++j) {
                fields[s].n[first + j].n = Vec3(b.nx[j], b.ny[j], b.nz[j]);
            }
        });
    });
    return fields;
}

void write_spin_csv(std::ostream& out, std::span<const SpinField> fields) {
    out << "t,kx,ky,nx,ny,nz\n";
    for (const SpinField& f : fields) {
        const std::string t = format_real(f.t);
        for (std::size_t i = 0; i < f.grid.size(); ++i) {
            const Vec2 k = f.grid.point(i);
            const Vec3& n = f.n[i].n;
            out << t << ',' << format_real(k.x()) << ',' << format_real(k.y()) << ',' << format_real(n.x())
                << ',' << format_real(n.y()) << ',' << format_real(n.z()) << '\n';
        }
    }
}

}  // namespace dquench::dynamics
