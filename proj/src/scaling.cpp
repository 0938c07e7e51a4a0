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

#include "dquench/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dquench::scaling {

namespace {

struct LogData {
    std::vector<double> u;
    std::vector<double> v;
};

LogData to_logs(const ScalingSeries& s) {
    s.validate();
    LogData d;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        d.u.push_back(std::log(s.x[i]));
        d.v.push_back(std::log(s.y[i]));
    }
    return d;
}

double mean(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

// Broken-law shape through the origin; intercept is solved separately.
double knee_shape(double u, double uc, double e1, double e2) {
    return u < uc ? e1 * u : e1 * uc + e2 * (u - uc);
}

// Returns rms residual; intercept written to *c.
double knee_residual(const LogData& d, double uc, double e1, double e2, double* c) {
    std::vector<double> r(d.u.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = d.v[i] - knee_shape(d.u[i], uc, e1, e2);
    }
    const double icpt = mean(r);
    for (double& x : r) {
        x = (x - icpt) * (x - icpt);
    }
    if (c) {
        *c = icpt;
    }
    return std::sqrt(mean(r));
}

}  // namespace

void ScalingSeries::validate() const {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::InvalidArgument, "series '" + label + "' has mismatched x and y");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw Error(ErrorKind::InvalidArgument, "series '" + label + "' has a non-positive value");
        }
        if (i > 0 && !(x[i] > x[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "series '" + label + "' is not strictly increasing in x");
        }
    }
}

void ScalingPrediction::validate() const {
    if (!(nu > 0.0) || !(z > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "critical exponents must be positive");
    }
}

double ScalingPrediction::time_exponent_tau() const {
    const double nz = nu * z;
    return regime == Regime::Weak ? nz / (1.0 + nz) : 2.0 * nz / (1.0 + 2.0 * nz);
}

double ScalingPrediction::time_exponent_gamma() const {
    return regime == Regime::Weak ? 0.0 : -1.0 / (1.0 + 2.0 * nu * z);
}

double ScalingPrediction::length_exponent_tau() const {
    return regime == Regime::Weak ? nu / (1.0 + nu * z) : nu / (1.0 + 2.0 * nu * z);
}

double ScalingPrediction::length_exponent_gamma() const {
    return regime == Regime::Weak ? 0.0 : nu / (1.0 + 2.0 * nu * z);
}

double ScalingPrediction::crossover_gamma(double tau) const {
    return std::pow(tau, nu * z / (1.0 + nu * z));
}

double ScalingPrediction::crossover_tau(double gamma) const {
    return std::pow(gamma, (1.0 + nu * z) / (nu * z));
}

PowerLawFit power_law_fit(const ScalingSeries& series) {
    if (series.x.size() < 3) {
        throw Error(ErrorKind::InvalidArgument, "power-law fit needs at least 3 points");
    }
    const LogData d = to_logs(series);
    const double mu = mean(d.u);
    const double mv = mean(d.v);
    std::vector<double> suv(d.u.size());
    std::vector<double> suu(d.u.size());
    for (std::size_t i = 0; i < d.u.size(); ++i) {
        suv[i] = (d.u[i] - mu) * (d.v[i] - mv);
        suu[i] = (d.u[i] - mu) * (d.u[i] - mu);
    }
    PowerLawFit fit;
    fit.exponent = pairwise_sum(suv) / pairwise_sum(suu);
    const double icpt = mv - fit.exponent * mu;
    fit.prefactor = std::exp(icpt);
    std::vector<double> r2(d.u.size());
    for (std::size_t i = 0; i < d.u.size(); ++i) {
        const double r = d.v[i] - icpt - fit.exponent * d.u[i];
        r2[i] = r * r;
    }
    fit.residual = std::sqrt(mean(r2));
    fit.n_points = d.u.size();
    return fit;
}

CrossoverFit fit_crossover(const ScalingSeries& series, double exp_low, double exp_high) {
    if (series.x.size() < 6) {
        throw Error(ErrorKind::InvalidArgument, "crossover fit needs at least 3 points per side");
    }
    const LogData d = to_logs(series);
    const std::size_t n = d.u.size();
    const double lo = d.u[2];
    const double hi = d.u[n - 3];

    // Coarse scan, then golden-section refinement around the best cell.
    const int cells = 2000;
    double best_u = lo;
    double best_r = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= cells; ++i) {
        const double uc = lo + (hi - lo) * i / cells;
        const double r = knee_residual(d, uc, exp_low, exp_high, nullptr);
        if (r < best_r) {
            best_r = r;
            best_u = uc;
        }
    }
    const double cell = (hi - lo) / cells;
    double a = std::max(lo, best_u - cell);
    double b = std::min(hi, best_u + cell);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = b - g * (b - a);
    double c2 = a + g * (b - a);
    double r1 = knee_residual(d, c1, exp_low, exp_high, nullptr);
    double r2 = knee_residual(d, c2, exp_low, exp_high, nullptr);
    for (int it = 0; it < 80; ++it) {
        if (r1 < r2) {
            b = c2;
            c2 = c1;
            r2 = r1;
            c1 = b - g * (b - a);
            r1 = knee_residual(d, c1, exp_low, exp_high, nullptr);
        } else {
            a = c1;
            c1 = c2;
            r1 = r2;
            c2 = a + g * (b - a);
            r2 = knee_residual(d, c2, exp_low, exp_high, nullptr);
        }
    }
    const double refined = 0.5 * (a + b);
    double icpt = 0.0;
    const double refined_r = knee_residual(d, refined, exp_low, exp_high, &icpt);
    if (refined_r < best_r) {
        best_r = refined_r;
        best_u = refined;
    } else {
        knee_residual(d, best_u, exp_low, exp_high, &icpt);
    }

    CrossoverFit out;
    out.x_c = std::exp(best_u);
    out.prefactor = std::exp(icpt);
    out.residual = best_r;
    out.single_residual = power_law_fit(series).residual;
    if (!(out.residual < 0.95 * out.single_residual)) {
        throw Error(ErrorKind::NoCrossover, "no crossover detected");
    }
    return out;
}

double halfway_time(std::span<const double> t, std::span<const double> sigma, double sigma_initial,
                    double sigma_final) {
    if (t.size() != sigma.size() || t.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "halfway_time needs matching series of at least 2 samples");
    }
    const double mid = 0.5 * (sigma_initial + sigma_final);
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (!(t[j] > 0.0)) {
            continue;
        }
        const double a = sigma[j - 1] - mid;
        const double b = sigma[j] - mid;
        if (b == 0.0) {
            return t[j];
        }
        if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
            const double tc = t[j - 1] + (t[j] - t[j - 1]) * a / (a - b);
            if (tc > 0.0) {
                return tc;
            }
        }
    }
    throw Error(ErrorKind::Unresolved, "relaxation incomplete - extend tf");
}

RadialProfile radial_profile(std::span<const double> values, const dynamics::MomentumGrid& grid) {
    if (values.size() != grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "profile values do not cover the grid");
    }
    const double dk = grid.spacing();
    const int bins = grid.points_per_axis() / 2;
    std::vector<std::vector<double>> members(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const long j = std::lround(grid.point(i).norm() / dk);
        if (j < bins) {
            members[static_cast<std::size_t>(j)].push_back(values[i]);
        }
    }
    RadialProfile out;
    for (int j = 0; j < bins; ++j) {
        const auto& m = members[static_cast<std::size_t>(j)];
        if (m.empty()) {
            continue;
        }
        out.k.push_back(j * dk);
        out.value.push_back(pairwise_sum(m) / static_cast<double>(m.size()));
        out.count.push_back(m.size());
    }
    return out;
}

double momentum_range(const RadialProfile& profile, double p_zero) {
    const double half = 0.5 * p_zero;
    for (std::size_t j = 0; j < profile.k.size(); ++j) {
        const double v = profile.value[j];
        if (v <= half) {
            if (j == 0) {
                return profile.k[0];
            }
            const double a = profile.value[j - 1] - half;
            const double b = v - half;
            return profile.k[j - 1] + (profile.k[j] - profile.k[j - 1]) * a / (a - b);
        }
    }
    throw Error(ErrorKind::Unresolved, "profile unresolved - increase k_max");
}

double momentum_range(const RadialProfile& profile) {
    if (profile.k.empty() || profile.k.front() != 0.0) {
        throw Error(ErrorKind::InvalidArgument, "profile does not start at k = 0");
    }
    return momentum_range(profile, profile.value.front());
}

void write_fit_report_csv(std::ostream& out, std::span<const FitReportRow> rows) {
    out << "label,exponent,prefactor,residual,n_points,expected_weak,expected_strong\n";
    for (const FitReportRow& r : rows) {
        out << r.label << ',' << format_real(r.fit.exponent) << ',' << format_real(r.fit.prefactor) << ','
            << format_real(r.fit.residual) << ',' << r.fit.n_points << ',' << format_real(r.expected_weak) << ','
            << format_real(r.expected_strong) << '\n';
    }
}

void write_fit_report_text(std::ostream& out, std::span<const FitReportRow> rows) {
    for (const FitReportRow& r : rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%-28s exponent %+.4f  (weak %+.4f, strong %+.4f)  rms %.3g  n=%zu\n",
                      r.label.c_str(), r.fit.exponent, r.expected_weak, r.expected_strong, r.fit.residual,
                      r.fit.n_points);
        out << line;
    }
}

}  // namespace dquench::scaling
