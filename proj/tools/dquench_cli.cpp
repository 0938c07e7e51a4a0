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


#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "dquench/dquench.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::string output_dir;
    int workers = -1;
};

// Configuration problems map to exit 1, anything later to exit 2.
int report(dq_status status, int code) {
    std::fprintf(stderr, "dquench: %s: %s\n", dq_status_name(status), dq_last_error());
    return code;
}

int load(const Options& o, dq_config** cfg) {
    dq_status st = dq_config_load(o.config.c_str(), nullptr, cfg);
    if (st != DQ_OK) {
        return report(st, kExitInvalid);
    }
    if (!o.output_dir.empty() && (st = dq_config_set_output_dir(*cfg, o.output_dir.c_str())) != DQ_OK) {
        return report(st, kExitInvalid);
    }
    if (o.workers >= 0 && (st = dq_config_set_workers(*cfg, o.workers)) != DQ_OK) {
        return report(st, kExitInvalid);
    }
    return kExitOk;
}

int cmd_validate(const Options& o) {
    dq_config* cfg = nullptr;
    if (int rc = load(o, &cfg)) {
        return rc;
    }
    static const char* kinds[] = {"momentum_quench", "lattice_quench", "analyze"};
    std::printf("valid %s config, %zu runs\n", kinds[dq_config_kind(cfg)], dq_config_run_count(cfg));
    dq_config_free(cfg);
    return kExitOk;
}

int cmd_run(const Options& o) {
    dq_config* cfg = nullptr;
    if (int rc = load(o, &cfg)) {
        return rc;
    }
    if (dq_config_kind(cfg) == DQ_KIND_ANALYZE) {
        dq_config_free(cfg);
        std::fprintf(stderr, "dquench: analyze configs run through 'dquench analyze'\n");
        return kExitInvalid;
    }
    dq_manifest* m = nullptr;
    const dq_status st = dq_run(cfg, &m);
    dq_config_free(cfg);
    if (st != DQ_OK) {
        return report(st, kExitRuntime);
    }
    for (size_t i = 0; i < dq_manifest_run_count(m); ++i) {
        double tau = 0, gamma = 0;
        int ok = 0;
        size_t censored = 0;
        dq_manifest_run(m, i, &tau, &gamma, &ok, &censored);
        if (ok) {
            std::printf("run %zu  tau=%g gamma=%g  ok", i, tau, gamma);
            if (censored) {
                std::printf("  (%zu seeds censored)", censored);
            }
            std::printf("\n");
        } else {
            std::printf("run %zu  tau=%g gamma=%g  failed: %s\n", i, tau, gamma, dq_manifest_run_error(m, i));
        }
    }
    std::printf("%s, %zu files, %.1f s\n", dq_manifest_status(m), dq_manifest_file_count(m),
                dq_manifest_wall_clock(m));
    const int rc = dq_manifest_exit_code(m);
    dq_manifest_free(m);
    return rc;
}

int cmd_analyze(const Options& o) {
    dq_config* cfg = nullptr;
    if (int rc = load(o, &cfg)) {
        return rc;
    }
    dq_report* r = nullptr;
    const dq_status st = dq_analyze(cfg, &r);
    dq_config_free(cfg);
    if (st != DQ_OK) {
        return report(st, st == DQ_ERR_INVALID_ARGUMENT ? kExitInvalid : kExitRuntime);
    }
    std::fputs(dq_report_text(r), stdout);
    dq_report_free(r);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoherent quench simulations and scaling fits"};
    app.require_subcommand(1);
    Options o;

    const auto add_config = [&](CLI::App* sub) {
        sub->add_option("config", o.config, "INI experiment file")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output-dir", o.output_dir, "Override output_dir");
        sub->add_option("-j,--workers", o.workers, "Override workers (0 = all cores)")->check(CLI::NonNegativeNumber);
    };
    CLI::App* run = app.add_subcommand("run", "Run a momentum or lattice sweep");
    add_config(run);
    CLI::App* analyze = app.add_subcommand("analyze", "Fit exponents from earlier runs");
    add_config(analyze);
    CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
    add_config(validate);
    app.add_subcommand("version", "Print the toolkit version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    }

    if (app.got_subcommand("version")) {
        std::printf("dquench %s\n", dq_version());
        return kExitOk;
    }
    if (run->parsed()) {
        return cmd_run(o);
    }
    if (analyze->parsed()) {
        return cmd_analyze(o);
    }
    return cmd_validate(o);
}
