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


#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dquench/scaling.hpp"

using namespace dquench;
using namespace dquench::scaling;

namespace {

ScalingSeries sample(double (*f)(double), std::vector<double> x) {
    ScalingSeries s{"synthetic", std::move(x), {}};
    for (double v : s.x) {
        s.y.push_back(f(v));
    }
    return s;
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
    }
    return x;
}

double knee(double x) { return x < 100.0 ? std::sqrt(x) : 10.0 * std::pow(x / 100.0, 2.0 / 3.0); }

}  // namespace

TEST_CASE("predicted exponents") {
    const ScalingPrediction weak{1, 1, Regime::Weak};
    const ScalingPrediction strong{1, 1, Regime::Strong};
    CHECK(weak.time_exponent_tau() == doctest::Approx(0.5));
    CHECK(strong.time_exponent_tau() == doctest::Approx(2.0 / 3.0));
    CHECK(weak.time_exponent_gamma() == 0.0);
    CHECK(strong.time_exponent_gamma() == doctest::Approx(-1.0 / 3.0));
    CHECK(weak.length_exponent_tau() == doctest::Approx(0.5));
    CHECK(strong.length_exponent_tau() == doctest::Approx(1.0 / 3.0));
    CHECK(strong.momentum_exponent_gamma() == doctest::Approx(-1.0 / 3.0));
    CHECK(weak.crossover_gamma(64.0) == doctest::Approx(8.0));
    CHECK(weak.crossover_tau(8.0) == doctest::Approx(64.0));
    CHECK_THROWS_AS((ScalingPrediction{0, 1, Regime::Weak}.validate()), Error);
}

TEST_CASE("power law fit is exact on clean data") {
    const auto fit = power_law_fit(sample([](double x) { return 3.0 * std::sqrt(x); }, {1, 2, 4, 8}));
    CHECK(fit.exponent == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(fit.prefactor == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(fit.residual < 1e-13);
    CHECK(fit.n_points == 4);
}

TEST_CASE("power law fit tolerates one percent noise") {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> eps(-0.01, 0.01);
    ScalingSeries s{"noisy", logspace(1, 1000, 12), {}};
    for (double x : s.x) {
        s.y.push_back(std::pow(x, 2.0 / 3.0) * (1.0 + eps(rng)));
    }
    CHECK(std::abs(power_law_fit(s).exponent - 2.0 / 3.0) < 0.02);
}

TEST_CASE("power law fit input checks") {
    CHECK_THROWS_AS(power_law_fit({"short", {1, 2}, {1, 2}}), Error);
    CHECK_THROWS_AS(power_law_fit({"neg", {1, 2, 3}, {1, -2, 3}}), Error);
    CHECK_THROWS_AS(power_law_fit({"order", {1, 3, 2}, {1, 2, 3}}), Error);
}

TEST_CASE("crossover knee recovered") {
    const auto fit = fit_crossover(sample(knee, logspace(1, 1e4, 25)), 0.5, 2.0 / 3.0);
    CHECK(fit.x_c == doctest::Approx(100.0).epsilon(0.1));
    CHECK(fit.residual < 0.05 * fit.single_residual);
}

TEST_CASE("pure power law has no crossover") {
    const auto s = sample([](double x) { return std::pow(x, 0.6); }, logspace(1, 1e4, 20));
    CHECK_THROWS_AS(fit_crossover(s, 0.5, 2.0 / 3.0), Error);
}

TEST_CASE("halfway time") {
    std::vector<double> t, ramp, relax;
    for (int i = 0; i <= 1000; ++i) {
        t.push_back(i * 0.01);
        ramp.push_back(1.0 - t.back() / 10.0);
        relax.push_back(std::exp(-t.back() / 2.0));
    }
    CHECK(halfway_time(t, ramp, 1.0, 0.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(halfway_time(t, relax, 1.0, 0.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-4));
    CHECK_THROWS_AS(halfway_time(t, relax, 1.0, -5.0), Error);
}

TEST_CASE("halfway time ignores crossings before t = 0 and rescaling") {
    const std::vector<double> t = {-2, -1, 0, 1, 2, 3};
    const std::vector<double> s = {0, 1, 0, 0.2, 0.8, 1};
    CHECK(halfway_time(t, s, 0.0, 1.0) == doctest::Approx(1.5));
    std::vector<double> s3;
    for (double v : s) {
        s3.push_back(3.0 * v);
    }
    CHECK(halfway_time(t, s3, 0.0, 3.0) == doctest::Approx(1.5));
}

TEST_CASE("momentum range examples") {
    RadialProfile step;
    for (int i = 0; i <= 400; ++i) {
        step.k.push_back(0.01 * i);
        step.value.push_back(step.k.back() < 2.0 ? 1.0 : 0.0);
        step.count.push_back(1);
    }
    CHECK(momentum_range(step) == doctest::Approx(2.0).epsilon(0.005));
    RadialProfile gauss;
    for (int i = 0; i <= 400; ++i) {
        gauss.k.push_back(0.01 * i);
        gauss.value.push_back(std::exp(-0.5 * gauss.k.back() * gauss.k.back()));
        gauss.count.push_back(1);
    }
    CHECK(momentum_range(gauss) == doctest::Approx(std::sqrt(2 * std::log(2.0))).epsilon(1e-4));
    RadialProfile scaled = gauss;
    for (double& v : scaled.value) {
        v *= 7.0;
    }
    CHECK(momentum_range(scaled) == momentum_range(gauss));
    RadialProfile flat{{0, 1, 2}, {1, 0.9, 0.8}, {1, 4, 4}};
    CHECK_THROWS_AS(momentum_range(flat), Error);
}

TEST_CASE("momentum range survives radial resampling") {
    const auto f = [](double k) { return 1.0 / (1.0 + k * k * k); };
    RadialProfile coarse, fine;
    for (int i = 0; i <= 20; ++i) {
        coarse.k.push_back(0.2 * i);
        coarse.value.push_back(f(coarse.k.back()));
        coarse.count.push_back(1);
    }
    for (int i = 0; i <= 40; ++i) {
        fine.k.push_back(0.1 * i);
        fine.value.push_back(f(fine.k.back()));
        fine.count.push_back(1);
    }
    CHECK(std::abs(momentum_range(coarse) - momentum_range(fine)) < 0.2);
}

TEST_CASE("radial profile bins annuli of the grid spacing") {
    const auto grid = dynamics::MomentumGrid::linearized(2.0, 16);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v[i] = grid.point(i).norm();
    }
    const auto p = radial_profile(v, grid);
    REQUIRE(p.k.size() >= 3);
    CHECK(p.k[0] == 0.0);
    CHECK(p.count[0] == 1);
    CHECK(p.count[1] == 8);
    for (std::size_t j = 0; j < p.k.size(); ++j) {
        CHECK(std::abs(p.value[j] - p.k[j]) < 0.5 * grid.spacing());
    }
}

TEST_CASE("fit report formats") {
    const FitReportRow row{"t_half vs tau", power_law_fit(sample([](double x) { return 2 * std::sqrt(x); }, {1, 4, 16})),
                           0.5, 2.0 / 3.0};
    std::ostringstream csv, txt;
    write_fit_report_csv(csv, std::span<const FitReportRow>(&row, 1));
    write_fit_report_text(txt, std::span<const FitReportRow>(&row, 1));
    CHECK(csv.str().rfind("label,exponent,prefactor,residual,n_points", 0) == 0);
    CHECK(txt.str().find("t_half vs tau") != std::string::npos);
}
