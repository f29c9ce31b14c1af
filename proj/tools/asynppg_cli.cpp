// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: gen / oracle / run / validate / rate. Exit codes:
// 0 success (run/validate: no violations), 1 violations found, 2 hard error.
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asynppg/errors.hpp"
#include "asynppg/harness.hpp"
#include "asynppg/textio.hpp"

namespace {

using namespace asynppg;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed_schedule = -1;
    std::int64_t seed_data = -1;
    std::string debug_level;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config JSON");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir,
                    "artifact directory (fallback: config \"out\", then ASYNPPG_OUT)");
    cmd->add_option("--seed-schedule", flags.seed_schedule, "override the schedule seed");
    cmd->add_option("--seed-data", flags.seed_data, "override the data seed");
    cmd->add_option("--debug", flags.debug_level, "audit level")
        ->check(CLI::IsMember({"off", "identities", "full"}));
}

HarnessConfig resolve(const CommonFlags& flags) {
    HarnessConfig cfg = load_config(flags.config_path);
    if (flags.seed_schedule >= 0) cfg.seed_schedule = static_cast<std::uint64_t>(flags.seed_schedule);
    if (flags.seed_data >= 0) cfg.seed_data = static_cast<std::uint64_t>(flags.seed_data);
    if (flags.debug_level == "off") cfg.debug = DebugLevel::Off;
    if (flags.debug_level == "identities") cfg.debug = DebugLevel::Identities;
    if (flags.debug_level == "full") cfg.debug = DebugLevel::Full;
    if (!flags.out_dir.empty()) {
        cfg.out = flags.out_dir;
    } else if (cfg.out.empty()) {
        if (const char* env = std::getenv("ASYNPPG_OUT")) cfg.out = env;
    }
    return cfg;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
}

int cmd_gen(const CommonFlags& flags) {
    HarnessConfig cfg = resolve(flags);
    if (cfg.out.empty()) {
        throw Error(ErrorCode::InvalidConfig, "gen needs an output directory (--out, config, or ASYNPPG_OUT)");
    }
    BuiltProblem bp = build_problem(cfg);
    SlotSchedule sched = build_experiment_schedule(cfg, bp.problem.num_agents());
    ensure_dir(cfg.out);
    const std::filesystem::path dir(cfg.out);
    write_file((dir / "instance.json").string(), problem_to_json(bp.problem).dump(2) + "\n");
    write_file((dir / "schedule.json").string(), schedule_to_json(sched).dump(2) + "\n");
    std::cout << "wrote instance.json and schedule.json to " << cfg.out << "\n";
    return 0;
}

int cmd_oracle(const CommonFlags& flags) {
    HarnessConfig cfg = resolve(flags);
    cfg.oracle_mode = "on";
    BuiltProblem bp = build_problem(cfg);
    std::vector<std::string> warnings;
    auto ref = compute_saddle(cfg, bp, warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const std::string payload = saddle_to_json(*ref).dump(2) + "\n";
    if (cfg.out.empty()) {
        std::cout << payload;
    } else {
        ensure_dir(cfg.out);
        write_file((std::filesystem::path(cfg.out) / "oracle.json").string(), payload);
        std::cout << "wrote oracle.json to " << cfg.out << "\n";
    }
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    HarnessConfig cfg = resolve(flags);
    ExperimentResult r = run_experiment(cfg);
    if (!cfg.out.empty()) write_bundle(r, cfg.out);

    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "slots=" << cfg.num_slots << " final_F=" << format_double(r.trace.boundaries.back().F)
              << " final_normAx=" << format_double(r.trace.boundaries.back().normAx) << "\n";
    if (r.certificate) {
        std::cout << "certificate: delta1=" << format_double(r.certificate->delta1)
                  << " delta2=" << format_double(r.certificate->delta2)
                  << " slots_checked=" << r.bound_report.slots_checked
                  << " failures=" << r.bound_report.failures.size() << "\n";
        for (const auto& f : r.bound_report.failures) {
            std::cerr << "bound violation: boundary " << f.boundary << " " << f.kind
                      << " lhs=" << format_double(f.lhs) << " rhs=" << format_double(f.rhs) << "\n";
        }
    }
    if (cfg.debug != DebugLevel::Off) {
        std::cout << "identities: updates=" << r.identity_report.updates_checked
                  << " ticks=" << r.identity_report.ticks_checked
                  << " violations=" << r.identity_report.violations.size() << "\n";
        for (const auto& v : r.identity_report.violations) {
            std::cerr << "identity violation: " << v << "\n";
        }
    }
    if (!cfg.out.empty()) std::cout << "artifacts in " << cfg.out << "\n";
    std::cout << (r.clean() ? "status: clean" : "status: violations") << "\n";
    return r.clean() ? 0 : 1;
}

int cmd_validate(const CommonFlags& flags, const std::string& schedule_path) {
    SlotSchedule sched;
    if (!schedule_path.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(schedule_path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("schedule is not valid JSON: ") + e.what());
        }
        sched = schedule_from_json(j);
    } else if (!flags.config_path.empty()) {
        HarnessConfig cfg = resolve(flags);
        sched = build_experiment_schedule(cfg, build_problem(cfg).problem.num_agents());
    } else {
        throw Error(ErrorCode::InvalidConfig, "validate needs --schedule or --config");
    }

    ValidationReport report = validate_schedule(sched);
    auto staleness = check_staleness_inequality(sched);
    for (const auto& v : report.violations) {
        std::cout << "violation[" << v.assumption << "] agent=" << v.agent << " slot=" << v.slot
                  << ": " << v.detail << "\n";
    }
    for (const auto& v : staleness) {
        std::cout << "violation[staleness] agent=" << v.agent << " slot=" << v.slot << ": "
                  << v.detail << "\n";
    }
    const bool ok = report.violations.empty() && staleness.empty();
    std::cout << (ok ? "schedule ok" : "schedule invalid") << "\n";
    return ok ? 0 : 1;
}

int cmd_rate(const CommonFlags& flags, double eps_flag) {
    HarnessConfig cfg = resolve(flags);
    if (eps_flag > 0.0) cfg.eps = eps_flag;
    ExperimentResult r = run_experiment(cfg);
    if (!cfg.out.empty()) write_bundle(r, cfg.out);
    RateReport rate = report_rate(r, cfg.eps);
    std::cout << "eps=" << format_double(rate.eps) << " K_theory=" << rate.K_theory
              << " K_observed=" << rate.K_observed
              << (rate.normalized ? " (certificate-normalized)" : " (absolute)") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slot-based asynchronous penalized proximal gradient simulator"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string schedule_path;
    double eps_flag = -1.0;

    auto* gen = app.add_subcommand("gen", "generate the problem instance and schedule");
    add_common(gen, flags, true);
    auto* oracle = app.add_subcommand("oracle", "solve the reference saddle point");
    add_common(oracle, flags, true);
    auto* run = app.add_subcommand("run", "simulate the schedule and verify the bounds");
    add_common(run, flags, true);
    auto* validate = app.add_subcommand("validate", "check a schedule against the model assumptions");
    add_common(validate, flags, false);
    validate->add_option("--schedule", schedule_path, "schedule JSON to validate");
    auto* rate = app.add_subcommand("rate", "convergence-rate summary");
    add_common(rate, flags, true);
    rate->add_option("--eps", eps_flag, "target accuracy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(flags);
        if (oracle->parsed()) return cmd_oracle(flags);
        if (run->parsed()) return cmd_run(flags);
        if (validate->parsed()) return cmd_validate(flags, schedule_path);
        if (rate->parsed()) return cmd_rate(flags, eps_flag);
    } catch (const Error& e) {
        std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
