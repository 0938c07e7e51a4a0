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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dquench/dynamics.hpp"

namespace dquench::scaling {

struct ScalingSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;

    // x strictly increasing, every value positive and finite.
    void validate() const;
};

enum class Regime { Weak, Strong };

// Freeze-out predictions for a transition with exponents nu and z.
// Weak:   t ~ tau^(nu z/(1+nu z)),                       xi ~ tau^(nu/(1+nu z))
// Strong: t ~ gamma^(-1/(1+2 nu z)) tau^(2 nu z/(1+2 nu z)), xi ~ (gamma tau)^(nu/(1+2 nu z))
struct ScalingPrediction {
    double nu = 1.0;
    double z = 1.0;
    Regime regime = Regime::Weak;

    void validate() const;
    double time_exponent_tau() const;
    double time_exponent_gamma() const;
    double length_exponent_tau() const;
    double length_exponent_gamma() const;
    double momentum_exponent_tau() const { return -length_exponent_tau(); }
    double momentum_exponent_gamma() const { return -length_exponent_gamma(); }

    // gamma_c = tau^(nu z/(1+nu z)) and its inverse.
    double crossover_gamma(double tau) const;
    double crossover_tau(double gamma) const;
};

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;  // rms of log residuals
    std::size_t n_points = 0;
};

PowerLawFit power_law_fit(const ScalingSeries& series);

struct CrossoverFit {
    double x_c = 0.0;
    double prefactor = 0.0;
    double residual = 0.0;
    double single_residual = 0.0;
};

// Continuous broken power law with slopes exp_low below x_c and exp_high
// above. The knee is kept between the third point and the third from last.
CrossoverFit fit_crossover(const ScalingSeries& series, double exp_low, double exp_high);

// First time t > 0 where sigma crosses (sigma_initial + sigma_final)/2.
double halfway_time(std::span<const double> t, std::span<const double> sigma, double sigma_initial,
                    double sigma_final);

struct RadialProfile {
    std::vector<double> k;
    std::vector<double> value;
    std::vector<std::size_t> count;
};

// Annuli of width dk around k = 0; only annuli inside the inscribed circle.
RadialProfile radial_profile(std::span<const double> values, const dynamics::MomentumGrid& grid);

// First k where the profile falls to p_zero/2, linearly interpolated.
double momentum_range(const RadialProfile& profile, double p_zero);
double momentum_range(const RadialProfile& profile);

struct FitReportRow {
    std::string label;
    PowerLawFit fit;
    double expected_weak = 0.0;
    double expected_strong = 0.0;
};

void write_fit_report_csv(std::ostream& out, std::span<const FitReportRow> rows);
void write_fit_report_text(std::ostream& out, std::span<const FitReportRow> rows);

}  // namespace dquench::scaling
