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

#include "dquench/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace dquench::lattice {

namespace {

constexpr double kGapTolerance = 1e-12;

int wrap(int x, int L) { return ((x % L) + L) % L; }

double orbital_sign(Eigen::Index a) { return (a % 2 == 0) ? 1.0 : -1.0; }

// out = H(m) X, then the commutator [H, X] for X Hermitian (parity +1) or
// anti-Hermitian (parity -1), scaled by `scale`.
void scaled_commutator(const LatticeHamiltonian& H, double m, const CMatrix& X, double parity, double scale,
                       CMatrix& work, CMatrix& out) {
    H.apply(X, m, work);
    out.noalias() = scale * (work - parity * work.adjoint());
}

std::vector<Complex> chebyshev_series(double R, double gamma, double dt) {
    auto g = [&](double y) {
        const double x = R * y;
        return std::exp(Complex(-gamma * x * x * dt, -x * dt));
    };
    const double estimate = R * dt + 8.0 * std::sqrt(gamma * dt) * R + 40.0;
    int M = 256;
    while (M < 4.0 * estimate) {
        M *= 2;
    }
    for (; M <= 16384; M *= 2) {
        std::vector<Complex> samples(static_cast<std::size_t>(M));
        for (int j = 0; j < M; ++j) {
            samples[j] = g(std::cos(M_PI * (j + 0.5) / M));
        }
        const int nmax = M / 2;
        std::vector<Complex> c(static_cast<std::size_t>(nmax));
        for (int n = 0; n < nmax; ++n) {
            Complex s = 0.0;
            for (int j = 0; j < M; ++j) {
                s += samples[j] * std::cos(n * M_PI * (j + 0.5) / M);
            }
            c[n] = s * ((n == 0 ? 1.0 : 2.0) / M);
        }
        int last = nmax - 1;
        // The DCT leaves a rounding floor near 1e-16 sqrt(M).
        while (last > 0 && std::abs(c[last]) < 1e-14) {
            --last;
        }
        if (last < nmax / 2) {
            c.resize(static_cast<std::size_t>(last) + 1);
            return c;
        }
    }
    throw Error(ErrorKind::StepSize, "step too large for the Chebyshev propagator");
}

class ExponentialMidpoint {
  public:
    ExponentialMidpoint(const LatticeHamiltonian& H, double gamma, double R, double dt)
        : H_(H), R_(R), coeff_(chebyshev_series(R, gamma, dt)) {
        const Eigen::Index n = H.dimension();
        t0_.resize(n, n);
        t1_.resize(n, n);
        work_.resize(n, n);
        acc_.resize(n, n);
    }

    void step(CMatrix& P, double m_mid) {
        // T_0 = P, T_1 = Y P, T_{k+1} = 2 Y T_k - T_{k-1}, Y = ad_H / R.
        acc_ = coeff_[0] * P;
        if (coeff_.size() > 1) {
            t0_ = P;
            scaled_commutator(H_, m_mid, t0_, 1.0, 1.0 / R_, work_, t1_);
            acc_ += coeff_[1] * t1_;
            double parity = -1.0;
            for (std::size_t k = 2; k < coeff_.size(); ++k) {
                H_.apply(t1_, m_mid, work_);
                t0_ = (2.0 / R_) * (work_ - parity * work_.adjoint()) - t0_;
                acc_ += coeff_[k] * t0_;
                t0_.swap(t1_);
                parity = -parity;
            }
        }
        P = 0.5 * (acc_ + acc_.adjoint());
    }

  private:
    const LatticeHamiltonian& H_;
    double R_;
    std::vector<Complex> coeff_;
    CMatrix t0_, t1_, work_, acc_;
};

class RungeKutta4 {
  public:
    RungeKutta4(const LatticeHamiltonian& H, double gamma) : H_(H), gamma_(gamma) {
        const Eigen::Index n = H.dimension();
        for (CMatrix* m : {&k1_, &k2_, &k3_, &k4_, &stage_, &c_, &work_}) {
            m->resize(n, n);
        }
    }

    void step(CMatrix& P, double m0, double mm, double m1, double dt) {
        rhs(P, m0, k1_);
        stage_ = P + (0.5 * dt) * k1_;
        rhs(stage_, mm, k2_);
        stage_ = P + (0.5 * dt) * k2_;
        rhs(stage_, mm, k3_);
        stage_ = P + dt * k3_;
        rhs(stage_, m1, k4_);
        stage_ = P + (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        P = 0.5 * (stage_ + stage_.adjoint());
    }

  private:
    // -i [H, X] - gamma [H, [H, X]] for Hermitian X.
    void rhs(const CMatrix& X, double m, CMatrix& out) {
        scaled_commutator(H_, m, X, 1.0, 1.0, work_, c_);
        scaled_commutator(H_, m, c_, -1.0, 1.0, work_, out);
        out = Complex(0.0, -1.0) * c_ - gamma_ * out;
    }

    const LatticeHamiltonian& H_;
    double gamma_;
    CMatrix k1_, k2_, k3_, k4_, stage_, c_, work_;
};

SingleParticleProjector band_projector(const LatticeHamiltonian& H, bool upper) {
    const Spectrum s = hermitian_spectrum(H.dense());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < s.energies.size(); ++i) {
        const double e = s.energies[i];
        if (std::abs(e) < kGapTolerance) {
            throw Error(ErrorKind::Gapless, "gapless initial Hamiltonian");
        }
        if ((e > 0.0) == upper) {
            keep.push_back(i);
        }
    }
    Eigen::MatrixXcd V(s.vectors.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        V.col(static_cast<Eigen::Index>(j)) = s.vectors.col(keep[j]);
    }
    SingleParticleProjector out;
    out.P = V * V.adjoint();
    out.P = 0.5 * (out.P + out.P.adjoint()).eval();
    return out;
}

}  // namespace

DisorderRealization DisorderRealization::generate(int L, std::uint64_t seed, double delta_t) {
    if (L < 2) {
        throw Error(ErrorKind::InvalidArgument, "lattice size must be at least 2");
    }
    if (!(delta_t >= 0.0) || !std::isfinite(delta_t)) {
        throw Error(ErrorKind::InvalidArgument, "disorder amplitude must be non-negative");
    }
    DisorderRealization r;
    r.L = L;
    r.seed = seed;
    r.delta_t = delta_t;
    r.bond_shifts.resize(static_cast<std::size_t>(2 * L * L));
    std::mt19937_64 rng(seed);
    for (double& s : r.bond_shifts) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        s = delta_t * (2.0 * u - 1.0);
    }
    return r;
}

LatticeHamiltonian::LatticeHamiltonian(const DisorderRealization& real, double m) : L_(real.L), mass_(m) {
    if (L_ < 2 || real.bond_shifts.size() != static_cast<std::size_t>(2 * L_ * L_)) {
        throw Error(ErrorKind::InvalidArgument, "disorder realization does not match its lattice size");
    }
    const Complex i(0.0, 1.0);
    // (sz + i sx)/2 and (sz + i sy)/2.
    const Complex Tx[2][2] = {{0.5, 0.5 * i}, {0.5 * i, -0.5}};
    const Complex Ty[2][2] = {{0.5, 0.5}, {-0.5, -0.5}};

    std::vector<Eigen::Triplet<Complex>> entries;
    entries.reserve(static_cast<std::size_t>(16 * L_ * L_));
    for (int y = 0; y < L_; ++y) {
        for (int x = 0; x < L_; ++x) {
            const int r = x + L_ * y;
            for (int mu = 0; mu < 2; ++mu) {
                const int rp = mu == 0 ? wrap(x + 1, L_) + L_ * y : x + L_ * wrap(y + 1, L_);
                const double t = real.hopping(r, static_cast<Direction>(mu));
                const auto& T = mu == 0 ? Tx : Ty;
                for (int s = 0; s < 2; ++s) {
                    for (int sp = 0; sp < 2; ++sp) {
                        const Complex v = t * T[s][sp];
                        if (v == Complex(0.0)) {
                            continue;
                        }
                        entries.emplace_back(2 * rp + s, 2 * r + sp, v);
                        entries.emplace_back(2 * r + sp, 2 * rp + s, std::conj(v));
                    }
                }
            }
        }
    }
    hopping_.resize(dimension(), dimension());
    hopping_.setFromTriplets(entries.begin(), entries.end());
    hopping_.makeCompressed();

    hop_row_max_ = 0.0;
    for (Eigen::Index row = 0; row < hopping_.outerSize(); ++row) {
        double s = 0.0;
        for (SparseCMatrix::InnerIterator it(hopping_, row); it; ++it) {
            s += std::abs(it.value());
        }
        hop_row_max_ = std::max(hop_row_max_, s);
    }
}

SparseCMatrix LatticeHamiltonian::matrix() const {
    SparseCMatrix diag(dimension(), dimension());
    std::vector<Eigen::Triplet<Complex>> d;
    for (int a = 0; a < dimension(); ++a) {
        d.emplace_back(a, a, (mass_ - 2.0) * orbital_sign(a));
    }
    diag.setFromTriplets(d.begin(), d.end());
    SparseCMatrix out = hopping_ + diag;
    out.makeCompressed();
    return out;
}

CMatrix LatticeHamiltonian::dense() const { return CMatrix(matrix()); }

void LatticeHamiltonian::apply(const CMatrix& X, double m, CMatrix& out) const {
    out.noalias() = hopping_ * X;
    const double onsite = m - 2.0;
    for (Eigen::Index a = 0; a < out.rows(); ++a) {
        out.row(a) += (onsite * orbital_sign(a)) * X.row(a);
    }
}

double LatticeHamiltonian::norm_bound(double m) const { return hop_row_max_ + std::abs(m - 2.0); }

LatticeHamiltonian build_bhz(const DisorderRealization& real, double m) { return LatticeHamiltonian(real, m); }

Spectrum hermitian_spectrum(const CMatrix& H) {
    const lapack_int n = static_cast<lapack_int>(H.rows());
    Eigen::MatrixXcd A = H;
    Spectrum s;
    s.energies.resize(n);
    s.vectors.resize(n, n);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'U', n, A.data(), n, 0.0, 0.0, 0, 0, 0.0,
                                           &found, s.energies.data(), s.vectors.data(), n, support.data());
    if (info != 0 || found != n) {
        throw Error(ErrorKind::InvalidArgument, "Hermitian eigensolver failed (info " + std::to_string(info) + ")");
    }
    return s;
}

double spectral_radius(const LatticeHamiltonian& H, double m) {
    Eigen::MatrixXcd A = CMatrix(H.hopping());
    for (Eigen::Index a = 0; a < A.rows(); ++a) {
        A(a, a) += (m - 2.0) * orbital_sign(a);
    }
    const lapack_int n = static_cast<lapack_int>(A.rows());
    Eigen::VectorXd w(n);
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', n, A.data(), n, w.data());
    if (info != 0) {
        throw Error(ErrorKind::InvalidArgument, "Hermitian eigensolver failed (info " + std::to_string(info) + ")");
    }
    return std::max(std::abs(w[0]), std::abs(w[n - 1]));
}

SingleParticleProjector ground_projector(const LatticeHamiltonian& H) { return band_projector(H, false); }

SingleParticleProjector excited_projector(const LatticeHamiltonian& H) { return band_projector(H, true); }

const char* integrator_name(Integrator integrator) {
    return integrator == Integrator::RungeKutta4 ? "rk4" : "expmid";
}

Integrator parse_integrator(const std::string& name) {
    if (name == "expmid") {
        return Integrator::ExponentialMidpoint;
    }
    if (name == "rk4") {
        return Integrator::RungeKutta4;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown lattice integrator '" + name + "' (expected expmid or rk4)");
}

double default_lattice_step(Integrator integrator, double norm_bound, double gamma, double tau) {
    if (integrator == Integrator::RungeKutta4) {
        return 0.05 / (norm_bound + gamma * norm_bound * norm_bound);
    }
    (void)norm_bound;
    // Frozen-basis steps leak population at a rate ~ dt under strong dephasing,
    // so the step shrinks with gamma as well as with fast ramps.
    const double t = std::isfinite(tau) ? std::max(1.0, tau) : 1e6;
    return std::min(0.25, 0.05 * std::sqrt(t / std::max(1.0, gamma)));
}

std::vector<ProjectorSnapshot> propagate(const SingleParticleProjector& P0, const LatticeHamiltonian& H,
                                         const MassRamp& ramp, double gamma, double t_start,
                                         std::span<const double> stops, const PropagatorOptions& opts) {
    if (P0.dimension() != H.dimension()) {
        throw Error(ErrorKind::InvalidArgument, "projector and Hamiltonian dimensions differ");
    }
    if (!(gamma >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be non-negative");
    }
    double prev = t_start;
    for (double s : stops) {
        if (!(s >= prev)) {
            throw Error(ErrorKind::InvalidArgument, "snapshot times must be ascending from the start time");
        }
        prev = s;
    }
    const double t_end = stops.empty() ? t_start : stops.back();
    const double bound = std::max(H.norm_bound(ramp.at(t_start)), H.norm_bound(ramp.at(t_end)));
    // ||H(m)|| is convex in m, so the endpoint spectra bound the whole window.
    const double radius = std::max(spectral_radius(H, ramp.at(t_start)), spectral_radius(H, ramp.at(t_end)));
    const double tau = ramp.rate != 0.0 ? 1.0 / std::abs(ramp.rate) : std::numeric_limits<double>::infinity();
    const double dt = opts.dt > 0.0 ? opts.dt : default_lattice_step(opts.integrator, bound, gamma, tau);

    if (opts.integrator == Integrator::RungeKutta4) {
        const double rate = dt * (bound + gamma * bound * bound);
        if (rate > 0.1) {
            throw Error(ErrorKind::StepSize, "step too large: dt*(||H|| + gamma||H||^2) = " + format_real(rate) +
                                                 " > 0.1");
        }
    }

    std::vector<ProjectorSnapshot> out;
    out.reserve(stops.size());
    CMatrix P = P0.P;
    double t = t_start;

    std::optional<ExponentialMidpoint> expmid;
    std::optional<RungeKutta4> rk4;
    double built_h = -1.0;

    for (double stop : stops) {
        const double span = stop - t;
        if (span > 0.0) {
            const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
            const double h = span / static_cast<double>(steps);
            const double t_from = t;
            if (opts.integrator == Integrator::ExponentialMidpoint) {
                if (h != built_h) {
                    expmid.emplace(H, gamma, 2.0 * radius * (1.0 + 1e-6) + 1e-12, h);
                    built_h = h;
                }
                for (long s = 0; s < steps; ++s) {
                    expmid->step(P, ramp.at(t_from + (s + 0.5) * h));
                }
            } else {
                if (!rk4) {
                    rk4.emplace(H, gamma);
                }
                for (long s = 0; s < steps; ++s) {
                    const double ts = t_from + s * h;
                    rk4->step(P, ramp.at(ts), ramp.at(ts + 0.5 * h), ramp.at(ts + h), h);
                }
            }
            t = stop;
        }
        out.push_back(ProjectorSnapshot{stop, SingleParticleProjector{P}});
    }
    return out;
}

std::vector<ProjectorSnapshot> evolve_projector(const SingleParticleProjector& P0,
                                                const DisorderRealization& real,
                                                const dynamics::QuenchSchedule& sched,
                                                std::span<const double> snapshots,
                                                const PropagatorOptions& opts) {
    std::vector<double> stops(snapshots.begin(), snapshots.end());
    for (double s : stops) {
        if (s < sched.t0() || s > sched.tf()) {
            throw Error(ErrorKind::InvalidArgument, "snapshot times must lie within [t0, tf]");
        }
    }
    if (stops.empty() || stops.back() < sched.tf()) {
        stops.push_back(sched.tf());
    }
    const LatticeHamiltonian H(real, sched.t0() / sched.tau());
    return propagate(P0, H, MassRamp{0.0, 1.0 / sched.tau()}, sched.gamma(), sched.t0(), stops, opts);
}

std::vector<double> spatial_excitation_density(const SingleParticleProjector& P,
                                               const SingleParticleProjector& P_excited) {
    const Eigen::Index n = P.P.rows();
    if (P_excited.P.rows() != n || n % 2 != 0) {
        throw Error(ErrorKind::InvalidArgument, "projector dimensions differ");
    }
    std::vector<double> f(static_cast<std::size_t>(n / 2), 0.0);
    for (Eigen::Index a = 0; a < n; ++a) {
        // (P_ex P)_aa = sum_j P_ex(a, j) conj(P(a, j)) since P is Hermitian.
        const double v = (P_excited.P.row(a).array() * P.P.row(a).array().conjugate()).sum().real();
        f[static_cast<std::size_t>(a / 2)] += v;
    }
    return f;
}

std::vector<double> spatial_excitation_density(const SingleParticleProjector& P, const LatticeHamiltonian& Hf) {
    return spatial_excitation_density(P, excited_projector(Hf));
}

Autocorrelation autocorrelation(std::span<const double> f, int L) {
    const std::size_t V = static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
    if (L < 2 || f.size() != V) {
        throw Error(ErrorKind::InvalidArgument, "field does not match an L x L lattice");
    }
    const double mean = pairwise_sum(f) / static_cast<double>(V);
    std::vector<double> d(V);
    std::vector<double> d2(V);
    for (std::size_t i = 0; i < V; ++i) {
        d[i] = f[i] - mean;
        d2[i] = d[i] * d[i];
    }
    const double var = pairwise_sum(d2) / static_cast<double>(V);
    if (!(std::sqrt(var) > 1e-10 * std::max(1.0, std::abs(mean)))) {
        throw Error(ErrorKind::DegenerateField, "degenerate field - no fluctuations");
    }

    const int rmax = L / 2;
    std::vector<std::vector<double>> bins(static_cast<std::size_t>(rmax) + 1);
    std::vector<double> prod(V);
    for (int sy = 0; sy < L; ++sy) {
        const int dy = std::min(sy, L - sy);
        for (int sx = 0; sx < L; ++sx) {
            const int dx = std::min(sx, L - sx);
            const int d2i = dx * dx + dy * dy;
            const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d2i))));
            if (r > rmax || r * r != d2i) {
                continue;
            }
            for (int y = 0; y < L; ++y) {
                for (int x = 0; x < L; ++x) {
                    const std::size_t i = static_cast<std::size_t>(x + L * y);
                    const std::size_t j = static_cast<std::size_t>(wrap(x + sx, L) + L * wrap(y + sy, L));
                    prod[i] = d[i] * d[j];
                }
            }
            bins[static_cast<std::size_t>(r)].push_back(pairwise_sum(prod) / static_cast<double>(V));
        }
    }

    Autocorrelation out;
    for (int r = 0; r <= rmax; ++r) {
        const auto& b = bins[static_cast<std::size_t>(r)];
        const std::size_t pairs = b.size() * V;
        if (b.empty() || pairs < static_cast<std::size_t>(L)) {
            continue;
        }
        out.r.push_back(r);
        out.a.push_back(r == 0 ? 1.0 : pairwise_sum(b) / static_cast<double>(b.size()) / var);
        out.pairs.push_back(pairs);
    }
    return out;
}

double correlation_length(const Autocorrelation& A, double threshold) {
    for (std::size_t j = 0; j < A.r.size(); ++j) {
        if (A.a[j] <= threshold) {
            if (j == 0) {
                return A.r[0];
            }
            const double a = A.a[j - 1] - threshold;
            const double b = A.a[j] - threshold;
            return A.r[j - 1] + (A.r[j] - A.r[j - 1]) * a / (a - b);
        }
    }
    throw Error(ErrorKind::Unresolved, "correlation length exceeds box - increase L");
}

SeedRecord run_seed(int L, double delta_t, std::uint64_t seed, const dynamics::QuenchSchedule& sched,
                    const PropagatorOptions& opts) {
    SeedRecord rec;
    rec.seed = seed;
    const DisorderRealization real = DisorderRealization::generate(L, seed, delta_t);
    const SingleParticleProjector P0 = ground_projector(LatticeHamiltonian(real, sched.t0() / sched.tau()));
    const auto snaps = evolve_projector(P0, real, sched, {}, opts);
    const LatticeHamiltonian Hf(real, sched.tf() / sched.tau());
    rec.f_ex = spatial_excitation_density(snaps.back().P, Hf);
    rec.A = autocorrelation(rec.f_ex, L);
    try {
        rec.xi = correlation_length(rec.A);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unresolved) {
            throw;
        }
        rec.censored = true;
        rec.xi = std::numeric_limits<double>::quiet_NaN();
    }
    return rec;
}

EnsembleResult summarize_ensemble(std::vector<SeedRecord> records) {
    EnsembleResult out;
    out.records = std::move(records);
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> used;
    for (const SeedRecord& r : out.records) {
        if (r.censored) {
            ++out.n_censored;
        } else {
            used.push_back(r.xi);
        }
    }
    out.n_used = used.size();
    out.xi_mean = used.empty() ? nan : pairwise_sum(used) / static_cast<double>(used.size());
    if (used.size() < 2) {
        out.xi_se = nan;
        return out;
    }
    std::vector<double> dev(used.size());
    for (std::size_t i = 0; i < used.size(); ++i) {
        dev[i] = (used[i] - out.xi_mean) * (used[i] - out.xi_mean);
    }
    const double var = pairwise_sum(dev) / static_cast<double>(used.size() - 1);
    out.xi_se = std::sqrt(var / static_cast<double>(used.size()));
    return out;
}

EnsembleResult run_disorder_ensemble(int L, double delta_t, std::span<const std::uint64_t> seeds,
                                     const dynamics::QuenchSchedule& sched, const PropagatorOptions& opts,
                                     int workers) {
    if (seeds.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "an ensemble needs at least 2 seeds");
    }
    std::vector<SeedRecord> records(seeds.size());
    parallel_for(seeds.size(), workers,
                 [&](std::size_t i) { records[i] = run_seed(L, delta_t, seeds[i], sched, opts); });
    return summarize_ensemble(std::move(records));
}

}  // namespace dquench::lattice
