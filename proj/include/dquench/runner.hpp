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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dquench/dynamics.hpp"
#include "dquench/lattice.hpp"
#include "dquench/observables.hpp"
#include "dquench/scaling.hpp"

namespace dquench::runner {

enum class ExperimentKind { MomentumQuench, LatticeQuench, Analyze };

const char* kind_name(ExperimentKind kind);

// One experiment, read from an INI document. Optional fields fall back to
// scale-aware defaults when a run is expanded:
//   k_s    = min(tau^-1/2, (gamma tau)^-1/3)
//   k_max  = k_factor k_s, window +-window tau k_s, T = T_factor / k_s
// Lattice-field momentum runs and lattice quenches sweep m from m_start to
// m_end instead.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::MomentumQuench;
    std::string output_dir = "output";
    int workers = 0;  // 0 = all cores
    std::string label;

    // [model]
    dynamics::FieldKind field = dynamics::FieldKind::LinearizedDirac;

    // [schedule]
    std::vector<double> tau;
    std::vector<double> gamma;  // crossed with tau
    std::optional<double> gamma_scale;  // gamma = gamma_scale * tau^gamma_power
    double gamma_power = 0.5;
    double window = 5.0;
    std::optional<double> t0;
    std::optional<double> tf;
    double dt = 0.0;

    // [grid]
    std::optional<double> k_max;
    double k_factor = 8.0;
    int points = 128;

    // [hall]
    std::optional<double> T;
    double T_factor = 10.0;

    // [observables]
    int series_points = 201;
    int spin_snapshots = 0;
    double tail_start = 3.0;  // in units of tau k_s

    // [lattice]
    int L = 20;
    double delta_t = 0.1;
    std::vector<std::uint64_t> seeds = {1};
    lattice::Integrator integrator = lattice::Integrator::ExponentialMidpoint;
    double lattice_dt = 0.0;
    double m_start = -0.5;
    double m_end = 0.5;

    // [analyze]
    std::vector<std::string> manifests;
    std::string quantity;  // t_half, k_bar or xi
    std::string control;   // tau or gamma
    bool crossover = false;
    std::optional<double> select_tau;    // keep only rows at this tau
    std::optional<double> select_gamma;  // keep only rows at this gamma

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);
// Relative output_dir and manifests resolve against DQUENCH_OUTPUT_ROOT
// when it is set, else against base.
ExperimentConfig resolve_paths(ExperimentConfig cfg, const std::filesystem::path& base);

struct RunPoint {
    double tau = 0.0;
    double gamma = 0.0;
};

std::vector<RunPoint> expand_sweep(const ExperimentConfig& cfg);

// Concrete settings of one momentum run.
struct MomentumPlan {
    dynamics::FieldModel model;
    dynamics::MomentumGrid grid;
    dynamics::QuenchSchedule schedule;
    observables::HallParams hall;
    double freeze_time = 0.0;  // tau k_s
};

MomentumPlan plan_momentum_run(const ExperimentConfig& cfg, const RunPoint& point);
dynamics::QuenchSchedule plan_lattice_run(const ExperimentConfig& cfg, const RunPoint& point);

struct MomentumResult {
    std::vector<observables::ObservableRow> rows;
    std::vector<double> sigma_eq;
    scaling::RadialProfile profile;
    double t_half = 0.0;
    double k_bar = 0.0;
    double tail_exponent = 0.0;
    std::vector<dynamics::SpinField> spins;  // only the dumped snapshots
};

// Quantities that cannot be resolved come back as NaN.
MomentumResult run_momentum(const ExperimentConfig& cfg, const RunPoint& point);

struct FileRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunRecord {
    std::string id;
    RunPoint point;
    bool ok = true;
    std::string error;
    std::size_t censored = 0;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::vector<FileRecord> files;
    std::vector<RunRecord> runs;
    double wall_clock_seconds = 0.0;
    std::string status;  // complete, partial or failed
};

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitRuntime = 2, kExitPartial = 3 };

// Writes every data file, then manifest.json.
RunManifest run_experiment(const ExperimentConfig& cfg);
int exit_code(const RunManifest& manifest);

struct AnalysisReport {
    std::vector<scaling::FitReportRow> rows;
    std::optional<scaling::CrossoverFit> crossover;
    std::vector<std::string> files;
    std::string text;  // contents of fit_report.txt
};

// Fits the persisted summaries of the listed manifests and writes
// fit_report.csv and fit_report.txt.
AnalysisReport analyze(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string version();

}  // namespace dquench::runner
