// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asynppg/builtin.hpp"
#include "asynppg/engine.hpp"
#include "asynppg/oracle.hpp"
#include "asynppg/params.hpp"
#include "asynppg/problem.hpp"
#include "asynppg/scheduler.hpp"
#include "asynppg/types.hpp"

namespace asynppg {

// Fully parsed experiment description. parse_config fills this from JSON and
// rejects unknown keys, so a stale or misspelled config fails loudly instead
// of silently running defaults.
struct HarnessConfig {
    std::string problem = "market"; // "market", "lasso", or a problem JSON path

    // generator knobs for problem = "lasso"
    std::uint64_t lasso_seed = 0; // used only when lasso_seed_set
    bool lasso_seed_set = false;  // otherwise seed_data is used
    int lasso_dim = 5;
    double lasso_rho = 10.0;
    double lasso_noise_var = 1e-3;
    double lasso_sparsity = 0.6;
    std::vector<std::pair<int, int>> lasso_edges; // empty = default topology

    int H = 15;
    int D = 5;
    int num_slots = 100;
    std::string delay_mode = "worst"; // "worst", "random", or "fixed"
    std::vector<long> delays;         // snapshot instants tau(t_m), fixed mode only

    std::vector<double> frequencies; // per agent, or one value broadcast
    std::vector<int> fixed_P;        // per agent, or one value broadcast

    double alpha1 = 1.0;
    double beta = -1.0; // <= 0 means auto (admissible endpoint)
    bool beta_auto = true;
    std::vector<double> Q; // empty = uniform max smoothness constant

    std::uint64_t seed_schedule = 1;
    std::uint64_t seed_data = 1;

    std::string x_init_mode = "zeros"; // "zeros", "local", or "array"
    Vec x_init;                        // used when x_init_mode == "array"

    DebugLevel debug = DebugLevel::Off;
    std::string out;                  // bundle directory; empty = no artifacts
    std::string oracle_mode = "auto"; // "auto", "on", "off"
    double eps = 1e-3;                // target accuracy for rate reporting
};

HarnessConfig parse_config(const nlohmann::json& j);
HarnessConfig load_config(const std::string& path);

// Problem described by a config, together with the generator payload needed
// by the reference solvers.
struct BuiltProblem {
    ProblemInstance problem;
    std::optional<LassoInstance> lasso;
    std::optional<MarketInstance> market;
};

BuiltProblem build_problem(const HarnessConfig& cfg);
SlotSchedule build_experiment_schedule(const HarnessConfig& cfg, int num_agents);

// Reference saddle data for a built problem, or nullopt when the config says
// "auto" and no solver applies (e.g. a problem loaded from file). "on" throws
// MissingSaddleData instead of returning nullopt. A LASSO multiplier that
// misses the stationarity tolerance downgrades to a primal-only reference
// with a warning appended.
std::optional<SaddleReference> compute_saddle(const HarnessConfig& cfg, const BuiltProblem& bp,
                                              std::vector<std::string>& warnings);

struct ExperimentResult {
    HarnessConfig cfg;
    BuiltProblem built;
    SlotSchedule schedule;
    ParamSchedule params;
    Trace trace;

    std::optional<SaddleReference> saddle;
    std::optional<Certificate> certificate;
    BoundReport bound_report;       // populated only with a certificate
    IdentityReport identity_report; // populated only with debug on
    std::vector<std::string> warnings;

    bool clean() const {
        return bound_report.failures.empty() && identity_report.clean();
    }
};

ExperimentResult run_experiment(const HarnessConfig& cfg);

// Rate summary: slots the bound needs to push the averaging weight below eps,
// versus the first slot whose boundary actually meets the eps-scaled
// envelopes (certificate runs) or the raw eps thresholds (without one).
// K_observed = -1 when never reached.
struct RateReport {
    double eps = 0;
    long K_theory = 0;
    long K_observed = -1;
    bool normalized = false; // true when scaled by the certificate envelopes
};

RateReport report_rate(const ExperimentResult& r, double eps);

// Round-trippable echo of the resolved run: feeding it back reproduces the
// bundle byte for byte. Diagnostic extras live under "derived", which
// parse_config ignores.
nlohmann::json effective_config_json(const ExperimentResult& r);
nlohmann::json certificate_json(const ExperimentResult& r);
std::string rate_csv(const ExperimentResult& r);

// instance.json, schedule.json, trace.csv, effective_config.json, and (when
// available) oracle.json, certificate.json, rate.csv under out_dir.
void write_bundle(const ExperimentResult& r, const std::string& out_dir);

} // namespace asynppg
