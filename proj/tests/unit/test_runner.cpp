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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "dquench/runner.hpp"

using namespace dquench;
using namespace dquench::runner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "dquench_unit" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> data_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename() != "manifest.json") {
            out[e.path().filename().string()] = slurp(e.path());
        }
    }
    return out;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const char* kSmallMomentum = R"(kind = momentum_quench
workers = 1
[schedule]
tau = 16, 36
gamma = 0
[grid]
points = 32
[observables]
series_points = 81
spin_snapshots = 2
)";

}  // namespace

TEST_CASE("minimal momentum config gets documented defaults") {
    const auto c = parse_config("kind = momentum_quench\n[schedule]\ntau = 64\ngamma = 0\n");
    CHECK(c.kind == ExperimentKind::MomentumQuench);
    CHECK(c.points == 128);
    const auto plan = plan_momentum_run(c, expand_sweep(c).at(0));
    CHECK(plan.grid.spacing() * 64 == doctest::Approx(1.0));
    CHECK(plan.grid.points_per_axis() == 128);
    CHECK(plan.schedule.t0() == doctest::Approx(-40.0));
    CHECK(plan.schedule.tf() == doctest::Approx(40.0));
    CHECK(plan.hall.T == doctest::Approx(80.0));
}

TEST_CASE("strong decoherence shrinks the default window") {
    const auto c = parse_config("kind = momentum_quench\n[schedule]\ntau = 64\ngamma = 512\n");
    const auto plan = plan_momentum_run(c, expand_sweep(c).at(0));
    // k_s = (gamma tau)^-1/3 = 1/32
    CHECK(plan.grid.spacing() * 64 == doctest::Approx(0.25));
    CHECK(plan.schedule.tf() == doctest::Approx(10.0));
}

TEST_CASE("validation errors name the key") {
    CHECK(error_of("kind = momentum_quench\n[schedule]\ntau = 64\ngamma = -1\n").find("schedule.gamma") !=
          std::string::npos);
    CHECK(error_of("kind = momentum_quench\n[schedule]\ntau = 0\ngamma = 1\n").find("schedule.tau") !=
          std::string::npos);
    CHECK(error_of("[schedule]\ntau = 1\ngamma = 1\n").find("kind") != std::string::npos);
    const std::string unknown =
        error_of("kind = momentum_quench\ncolour = red\n[schedule]\ntau = 1\ngamma = 0\nsped = 2\n[extra]\nx = 1\n");
    CHECK(unknown.find("colour") != std::string::npos);
    CHECK(unknown.find("schedule.sped") != std::string::npos);
    CHECK(unknown.find("[extra]") != std::string::npos);
    CHECK(error_of("kind = lattice_quench\n[schedule]\ntau = 1\ngamma = 0\n[lattice]\nintegrator = euler\n")
              .find("lattice.integrator") != std::string::npos);
    CHECK(error_of("kind = analyze\n[analyze]\nquantity = t_half\ncontrol = tau\n").find("analyze.manifests") !=
          std::string::npos);
    CHECK(error_of("kind = momentum_quench\n[schedule]\ntau = 1\ngamma = 0\nt0 = 2\n").find("schedule.t0") !=
          std::string::npos);
}

TEST_CASE("gamma rule expands per tau") {
    const auto c = parse_config(
        "kind = momentum_quench\n[schedule]\ntau = 16, 32, 64\ngamma_scale = 10\ngamma_power = 0.5\n");
    const auto runs = expand_sweep(c);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].gamma == doctest::Approx(40.0));
    CHECK(runs[1].gamma == doctest::Approx(10.0 * std::sqrt(32.0)));
    CHECK(runs[2].gamma == doctest::Approx(80.0));
    CHECK(error_of("kind = momentum_quench\n[schedule]\ntau = 16\ngamma = 1\ngamma_scale = 10\n").find("gamma") !=
          std::string::npos);
}

TEST_CASE("tau and gamma lists are crossed") {
    const auto c = parse_config("kind = momentum_quench\n[schedule]\ntau = 1, 2\ngamma = 0, 3, 5\n");
    CHECK(expand_sweep(c).size() == 6);
}

TEST_CASE("config round-trips through serialization") {
    const auto c = parse_config(R"(kind = lattice_quench
output_dir = somewhere
label = desk preset
[schedule]
tau = 0.25, 0.1, 1e3
gamma_scale = 0.3
gamma_power = 0.25
t0 = -7.5
[grid]
k_max = 3.25
[hall]
T = 12
[lattice]
L = 12
seeds = 1..4, 9
integrator = rk4
m_start = -0.75
)");
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 9});
    const auto again = parse_config(serialize_config(c));
    CHECK(again == c);
    CHECK(serialize_config(again) == serialize_config(c));

    const auto a = parse_config(
        "kind = analyze\n[analyze]\nmanifests = x, y\nquantity = xi\ncontrol = gamma\ncrossover = yes\ntau = 4\n");
    CHECK(parse_config(serialize_config(a)) == a);
}

TEST_CASE("output root override") {
    auto c = parse_config("kind = analyze\noutput_dir = rep\n[analyze]\nmanifests = m1, /abs/m2\nquantity = xi\ncontrol = tau\n");
    ::setenv("DQUENCH_OUTPUT_ROOT", "/tmp/root_override", 1);
    const auto r = resolve_paths(c, "/base");
    ::unsetenv("DQUENCH_OUTPUT_ROOT");
    CHECK(r.output_dir == "/tmp/root_override/rep");
    CHECK(r.manifests[0] == "/tmp/root_override/m1");
    CHECK(r.manifests[1] == "/abs/m2");
    CHECK(resolve_paths(c, "/base").output_dir == "/base/rep");
}

TEST_CASE("momentum sweep writes series, summary and manifest") {
    auto c = parse_config(kSmallMomentum);
    c.output_dir = scratch("momentum").string();
    const auto m = run_experiment(c);
    CHECK(m.status == "complete");
    CHECK(exit_code(m) == kExitOk);
    REQUIRE(m.runs.size() == 2);
    for (const char* f : {"run_000_observables.csv", "run_001_observables.csv", "run_000_spins.csv",
                          "run_001_profile.csv", "run_000_equilibrium.csv", "momentum_summary.csv", "manifest.json"}) {
        CHECK(fs::exists(fs::path(c.output_dir) / f));
    }
    for (const auto& f : m.files) {
        CHECK(sha256_file(fs::path(c.output_dir) / f.path) == f.sha256);
    }
    const std::string manifest = slurp(fs::path(c.output_dir) / "manifest.json");
    CHECK(manifest.find("\"status\": \"complete\"") != std::string::npos);
    CHECK(manifest.find(m.config_hash) != std::string::npos);
}

TEST_CASE("three decoherence rates give three Hall series") {
    auto c = parse_config(
        "kind = momentum_quench\nworkers = 1\n[schedule]\ntau = 16\ngamma = 0, 4, 40\n[grid]\npoints = 24\n"
        "[observables]\nseries_points = 41\n");
    c.output_dir = scratch("three").string();
    const auto m = run_experiment(c);
    int series = 0;
    for (const auto& f : m.files) {
        series += f.path.find("_observables.csv") != std::string::npos ? 1 : 0;
    }
    CHECK(series == 3);
}

TEST_CASE("identical configs give byte-identical data at any worker count") {
    auto c = parse_config(kSmallMomentum);
    const fs::path dir_a = scratch("det_a");
    const fs::path dir_b = scratch("det_b");
    c.output_dir = dir_a.string();
    run_experiment(c);
    c.output_dir = dir_b.string();
    c.workers = 3;
    run_experiment(c);
    const auto a = data_files(dir_a);
    const auto b = data_files(dir_b);
    CHECK(a.size() == 9);
    CHECK(a == b);
}

TEST_CASE("lattice sweep with two seeds") {
    auto c = parse_config("kind = lattice_quench\nworkers = 2\n[schedule]\ntau = 1\ngamma = 0\n[lattice]\nL = 6\nseeds = 1, 2\n");
    c.output_dir = scratch("lattice").string();
    const auto m = run_experiment(c);
    int fex = 0, autocorr = 0, summary = 0;
    for (const auto& f : m.files) {
        fex += f.path.find("_fex.csv") != std::string::npos;
        autocorr += f.path.find("_autocorr.csv") != std::string::npos;
        summary += f.path == "ensemble_summary.csv";
    }
    CHECK(fex == 2);
    CHECK(autocorr == 2);
    CHECK(summary == 1);
    CHECK(slurp(fs::path(c.output_dir) / "ensemble_summary.csv").rfind("tau,gamma,xi_mean,xi_se,n_used,n_censored\n", 0) == 0);
}

TEST_CASE("failed runs are recorded and the sweep continues") {
    auto c = parse_config("kind = lattice_quench\nworkers = 1\n[schedule]\ntau = 1, 2\ngamma = 0\n[lattice]\nL = 4\ndelta_t = 0\nseeds = 1, 2\n");
    c.output_dir = scratch("failed").string();
    const auto m = run_experiment(c);
    REQUIRE(m.runs.size() == 2);
    CHECK_FALSE(m.runs[0].ok);
    CHECK(m.runs[0].error.find("degenerate") != std::string::npos);
    CHECK(m.status == "failed");
    CHECK(exit_code(m) == kExitRuntime);
    CHECK(fs::exists(fs::path(c.output_dir) / "manifest.json"));
}

TEST_CASE("analyze fits persisted sweeps") {
    auto run = parse_config(
        "kind = momentum_quench\nworkers = 1\n[schedule]\ntau = 16, 64, 256\ngamma = 0\n[grid]\npoints = 32\n"
        "[observables]\nseries_points = 161\n");
    run.output_dir = scratch("an_run").string();
    run_experiment(run);

    auto c = parse_config("kind = analyze\n[analyze]\nmanifests = x\nquantity = t_half\ncontrol = tau\n");
    c.manifests = {run.output_dir};
    c.output_dir = scratch("an_out").string();
    const auto rep = analyze(c);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].expected_weak == doctest::Approx(0.5));
    CHECK(rep.rows[0].expected_strong == doctest::Approx(2.0 / 3.0));
    CHECK(rep.rows[0].fit.exponent == doctest::Approx(0.5).epsilon(0.02));
    CHECK(fs::exists(fs::path(c.output_dir) / "fit_report.csv"));
    CHECK(fs::exists(fs::path(c.output_dir) / "fit_report.txt"));

    c.manifests = {(fs::path(run.output_dir) / "nowhere").string()};
    try {
        analyze(c);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
    }

    c.manifests = {run.output_dir};
    {
        std::ofstream out(fs::path(run.output_dir) / "momentum_summary.csv", std::ios::app);
        out << "tampered\n";
    }
    CHECK_THROWS_AS(analyze(c), Error);

    c.manifests.clear();
    CHECK_THROWS_AS(analyze(c), Error);
}

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
