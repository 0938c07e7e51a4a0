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


#include "dquench/dquench.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "dquench/dynamics.hpp"
#include "dquench/observables.hpp"
#include "dquench/runner.hpp"

using namespace dquench;

struct dq_config {
    runner::ExperimentConfig cfg;
};

struct dq_manifest {
    runner::RunManifest m;
};

struct dq_report {
    runner::AnalysisReport r;
};

namespace {

thread_local std::string g_last_error;

dq_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
            return DQ_ERR_INVALID_ARGUMENT;
        case ErrorKind::UndefinedDirection:
            return DQ_ERR_UNDEFINED_DIRECTION;
        case ErrorKind::Gapless:
            return DQ_ERR_GAPLESS;
        case ErrorKind::Unresolved:
            return DQ_ERR_UNRESOLVED;
        case ErrorKind::NoCrossover:
            return DQ_ERR_NO_CROSSOVER;
        case ErrorKind::DegenerateField:
            return DQ_ERR_DEGENERATE_FIELD;
        case ErrorKind::StepSize:
            return DQ_ERR_STEP_SIZE;
        case ErrorKind::Io:
            return DQ_ERR_IO;
    }
    return DQ_ERR_INTERNAL;
}

template <class F>
dq_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return DQ_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown error";
    }
    return DQ_ERR_INTERNAL;
}

dq_status null_argument(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return DQ_ERR_INVALID_ARGUMENT;
}

dynamics::FieldModel model_for(dq_field field, double tau) {
    if (field == DQ_FIELD_LINEARIZED) {
        return dynamics::FieldModel::linearized_dirac(tau);
    }
    if (field == DQ_FIELD_LATTICE) {
        return dynamics::FieldModel::lattice_bloch(tau);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown field model");
}

}  // namespace

extern "C" {

const char* dq_last_error(void) { return g_last_error.c_str(); }

const char* dq_version(void) { return DQUENCH_VERSION; }

const char* dq_status_name(dq_status status) {
    switch (status) {
        case DQ_OK:
            return "ok";
        case DQ_ERR_INVALID_ARGUMENT:
            return "invalid argument";
        case DQ_ERR_UNDEFINED_DIRECTION:
            return "undefined direction";
        case DQ_ERR_GAPLESS:
            return "gapless";
        case DQ_ERR_UNRESOLVED:
            return "unresolved";
        case DQ_ERR_NO_CROSSOVER:
            return "no crossover";
        case DQ_ERR_DEGENERATE_FIELD:
            return "degenerate field";
        case DQ_ERR_STEP_SIZE:
            return "step size";
        case DQ_ERR_IO:
            return "io";
        case DQ_ERR_INTERNAL:
            return "internal";
    }
    return "unknown";
}

dq_status dq_config_parse(const char* text, dq_config** out) {
    if (!text || !out) {
        return null_argument("text/out");
    }
    *out = nullptr;
    return guarded([&] { *out = new dq_config{runner::parse_config(text)}; });
}

dq_status dq_config_load(const char* path, const char* base_dir, dq_config** out) {
    if (!path || !out) {
        return null_argument("path/out");
    }
    *out = nullptr;
    return guarded([&] {
        const std::filesystem::path base = base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path();
        *out = new dq_config{runner::resolve_paths(runner::load_config(path), base)};
    });
}

void dq_config_free(dq_config* cfg) { delete cfg; }

dq_kind dq_config_kind(const dq_config* cfg) {
    switch (cfg->cfg.kind) {
        case runner::ExperimentKind::MomentumQuench:
            return DQ_KIND_MOMENTUM_QUENCH;
        case runner::ExperimentKind::LatticeQuench:
            return DQ_KIND_LATTICE_QUENCH;
        case runner::ExperimentKind::Analyze:
            break;
    }
    return DQ_KIND_ANALYZE;
}

size_t dq_config_run_count(const dq_config* cfg) {
    if (!cfg || cfg->cfg.kind == runner::ExperimentKind::Analyze) {
        return 0;
    }
    return runner::expand_sweep(cfg->cfg).size();
}

dq_status dq_config_set_output_dir(dq_config* cfg, const char* dir) {
    if (!cfg || !dir || !*dir) {
        return null_argument("cfg/dir");
    }
    cfg->cfg.output_dir = dir;
    return DQ_OK;
}

dq_status dq_config_set_workers(dq_config* cfg, int workers) {
    if (!cfg) {
        return null_argument("cfg");
    }
    if (workers < 0) {
        g_last_error = "workers must be >= 0";
        return DQ_ERR_INVALID_ARGUMENT;
    }
    cfg->cfg.workers = workers;
    return DQ_OK;
}

dq_status dq_config_serialize(const dq_config* cfg, char* buf, size_t cap, size_t* needed) {
    if (!cfg) {
        return null_argument("cfg");
    }
    return guarded([&] {
        const std::string s = runner::serialize_config(cfg->cfg);
        if (needed) {
            *needed = s.size() + 1;
        }
        if (buf && cap > 0) {
            const size_t n = std::min(cap - 1, s.size());
            std::memcpy(buf, s.data(), n);
            buf[n] = '\0';
        }
    });
}

dq_status dq_run(const dq_config* cfg, dq_manifest** out) {
    if (!cfg || !out) {
        return null_argument("cfg/out");
    }
    *out = nullptr;
    return guarded([&] { *out = new dq_manifest{runner::run_experiment(cfg->cfg)}; });
}

void dq_manifest_free(dq_manifest* m) { delete m; }

const char* dq_manifest_status(const dq_manifest* m) { return m->m.status.c_str(); }

const char* dq_manifest_config_hash(const dq_manifest* m) { return m->m.config_hash.c_str(); }

int dq_manifest_exit_code(const dq_manifest* m) { return runner::exit_code(m->m); }

double dq_manifest_wall_clock(const dq_manifest* m) { return m->m.wall_clock_seconds; }

size_t dq_manifest_run_count(const dq_manifest* m) { return m->m.runs.size(); }

dq_status dq_manifest_run(const dq_manifest* m, size_t i, double* tau, double* gamma, int* ok, size_t* censored) {
    if (!m || i >= m->m.runs.size()) {
        g_last_error = "run index out of range";
        return DQ_ERR_INVALID_ARGUMENT;
    }
    const runner::RunRecord& r = m->m.runs[i];
    if (tau) {
        *tau = r.point.tau;
    }
    if (gamma) {
        *gamma = r.point.gamma;
    }
    if (ok) {
        *ok = r.ok ? 1 : 0;
    }
    if (censored) {
        *censored = r.censored;
    }
    return DQ_OK;
}

const char* dq_manifest_run_error(const dq_manifest* m, size_t i) {
    return (m && i < m->m.runs.size()) ? m->m.runs[i].error.c_str() : "";
}

size_t dq_manifest_file_count(const dq_manifest* m) { return m->m.files.size(); }

const char* dq_manifest_file_path(const dq_manifest* m, size_t i) {
    return (m && i < m->m.files.size()) ? m->m.files[i].path.c_str() : nullptr;
}

const char* dq_manifest_file_sha256(const dq_manifest* m, size_t i) {
    return (m && i < m->m.files.size()) ? m->m.files[i].sha256.c_str() : nullptr;
}

dq_status dq_analyze(const dq_config* cfg, dq_report** out) {
    if (!cfg || !out) {
        return null_argument("cfg/out");
    }
    *out = nullptr;
    return guarded([&] { *out = new dq_report{runner::analyze(cfg->cfg)}; });
}

void dq_report_free(dq_report* r) { delete r; }

size_t dq_report_row_count(const dq_report* r) { return r->r.rows.size(); }

dq_status dq_report_row(const dq_report* r, size_t i, double* exponent, double* prefactor, double* residual,
                        double* expected_weak, double* expected_strong) {
    if (!r || i >= r->r.rows.size()) {
        g_last_error = "row index out of range";
        return DQ_ERR_INVALID_ARGUMENT;
    }
    const auto& row = r->r.rows[i];
    if (exponent) {
        *exponent = row.fit.exponent;
    }
    if (prefactor) {
        *prefactor = row.fit.prefactor;
    }
    if (residual) {
        *residual = row.fit.residual;
    }
    if (expected_weak) {
        *expected_weak = row.expected_weak;
    }
    if (expected_strong) {
        *expected_strong = row.expected_strong;
    }
    return DQ_OK;
}

dq_status dq_report_crossover(const dq_report* r, double* x_c) {
    if (!r || !x_c) {
        return null_argument("report/x_c");
    }
    if (!r->r.crossover) {
        g_last_error = "no crossover fit in this report";
        return DQ_ERR_UNRESOLVED;
    }
    *x_c = r->r.crossover->x_c;
    return DQ_OK;
}

const char* dq_report_text(const dq_report* r) { return r->r.text.c_str(); }

dq_status dq_two_level_coherence(double delta, double gamma, double t, double* out) {
    if (!out) {
        return null_argument("out");
    }
    return guarded([&] { *out = dynamics::two_level_coherence(delta, gamma, t); });
}

dq_status dq_integrate_trajectory(dq_field field, double tau, double gamma, double t0, double tf, double dt,
                                  double kx, double ky, const double* times, size_t count, double* spins) {
    if ((count > 0 && !times) || !spins) {
        return null_argument("times/spins");
    }
    return guarded([&] {
        const auto model = model_for(field, tau);
        const Vec2 k(kx, ky);
        if (dt <= 0.0) {
            const double bound = std::max(model.at(k, t0).norm(), model.at(k, tf).norm());
            dt = dynamics::stable_step(bound, gamma);
        }
        const dynamics::QuenchSchedule sched(tau, gamma, t0, tf, dt);
        const auto traj = dynamics::integrate_trajectory(model, k, sched, std::span<const double>(times, count));
        for (size_t i = 0; i < count; ++i) {
            for (int c = 0; c < 3; ++c) {
                spins[3 * i + c] = traj.spins[i].n[c];
            }
        }
    });
}

dq_status dq_winding_number(dq_field field, double m, int points, double k_max, int* out) {
    if (!out) {
        return null_argument("out");
    }
    return guarded([&] {
        const auto model = model_for(field, 1.0);
        const auto grid = field == DQ_FIELD_LATTICE ? dynamics::MomentumGrid::lattice(points)
                                                    : dynamics::MomentumGrid::linearized(k_max, points);
        *out = observables::winding_number(model, m, grid);
    });
}

}  // extern "C"
