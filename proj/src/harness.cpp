// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "asynppg/errors.hpp"
#include "asynppg/textio.hpp"

namespace asynppg {

namespace {

void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            throw Error(ErrorCode::InvalidConfig, "unknown " + where + " key \"" + it.key() + "\"");
        }
    }
}

double positive_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) {
        throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be a number");
    }
    double v = j.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be positive and finite");
    }
    return v;
}

int positive_int(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be an integer");
    }
    auto v = j.get<long long>();
    if (v < 1) {
        throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be at least 1");
    }
    return static_cast<int>(v);
}

std::vector<double> json_doubles(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) {
        throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) {
            throw Error(ErrorCode::InvalidConfig, "\"" + key + "\" must be an array of numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<nlohmann::json> number_array(const Vec& v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace

HarnessConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "config root must be a JSON object");
    }
    require_keys(j, {"problem", "lasso", "H", "D", "num_slots", "delay_mode", "delays",
                     "frequencies", "fixed_P", "alpha1", "beta", "Q", "seed_schedule", "seed_data",
                     "x_init", "debug", "out", "oracle", "eps", "derived"},
                 "config");

    HarnessConfig cfg;
    if (j.contains("problem")) {
        if (!j["problem"].is_string()) {
            throw Error(ErrorCode::InvalidConfig, "\"problem\" must be a string");
        }
        cfg.problem = j["problem"].get<std::string>();
    }
    if (j.contains("lasso")) {
        const auto& l = j["lasso"];
        require_keys(l, {"seed", "dim", "rho", "noise_var", "sparsity", "edges"}, "lasso");
        if (l.contains("seed")) {
            cfg.lasso_seed = l["seed"].get<std::uint64_t>();
            cfg.lasso_seed_set = true;
        }
        if (l.contains("dim")) cfg.lasso_dim = positive_int(l["dim"], "lasso.dim");
        if (l.contains("rho")) cfg.lasso_rho = positive_number(l["rho"], "lasso.rho");
        if (l.contains("noise_var")) {
            double v = l["noise_var"].get<double>();
            if (v < 0.0 || !std::isfinite(v)) {
                throw Error(ErrorCode::InvalidConfig, "\"lasso.noise_var\" must be nonnegative");
            }
            cfg.lasso_noise_var = v;
        }
        if (l.contains("sparsity")) {
            double v = l["sparsity"].get<double>();
            if (v < 0.0 || v > 1.0) {
                throw Error(ErrorCode::InvalidConfig, "\"lasso.sparsity\" must lie in [0,1]");
            }
            cfg.lasso_sparsity = v;
        }
        if (l.contains("edges")) {
            for (const auto& e : l["edges"]) {
                if (!e.is_array() || e.size() != 2) {
                    throw Error(ErrorCode::InvalidConfig, "\"lasso.edges\" entries must be pairs");
                }
                cfg.lasso_edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
    }
    if (j.contains("H")) cfg.H = positive_int(j["H"], "H");
    if (j.contains("D")) cfg.D = positive_int(j["D"], "D");
    if (j.contains("num_slots")) cfg.num_slots = positive_int(j["num_slots"], "num_slots");
    if (j.contains("delay_mode")) {
        cfg.delay_mode = j["delay_mode"].get<std::string>();
        if (cfg.delay_mode != "worst" && cfg.delay_mode != "random" && cfg.delay_mode != "fixed") {
            throw Error(ErrorCode::InvalidConfig, "\"delay_mode\" must be worst, random, or fixed");
        }
    }
    if (cfg.delay_mode == "fixed") {
        if (!j.contains("delays")) {
            throw Error(ErrorCode::InvalidConfig, "fixed delay mode needs a \"delays\" array");
        }
        for (const auto& v : j["delays"]) cfg.delays.push_back(v.get<long>());
    }
    if (j.contains("frequencies")) {
        if (j["frequencies"].is_number()) {
            cfg.frequencies = {j["frequencies"].get<double>()};
        } else {
            cfg.frequencies = json_doubles(j["frequencies"], "frequencies");
        }
    }
    if (j.contains("fixed_P")) {
        if (j["fixed_P"].is_number_integer()) {
            cfg.fixed_P = {positive_int(j["fixed_P"], "fixed_P")};
        } else if (j["fixed_P"].is_array()) {
            for (const auto& v : j["fixed_P"]) cfg.fixed_P.push_back(positive_int(v, "fixed_P"));
        } else {
            throw Error(ErrorCode::InvalidConfig, "\"fixed_P\" must be an integer or integer array");
        }
    }
    if (!cfg.frequencies.empty() && !cfg.fixed_P.empty()) {
        throw Error(ErrorCode::InvalidConfig, "give either \"frequencies\" or \"fixed_P\", not both");
    }
    if (j.contains("alpha1")) cfg.alpha1 = positive_number(j["alpha1"], "alpha1");
    if (j.contains("beta")) {
        if (j["beta"].is_string()) {
            if (j["beta"].get<std::string>() != "auto") {
                throw Error(ErrorCode::InvalidConfig, "\"beta\" must be a positive number or \"auto\"");
            }
            cfg.beta_auto = true;
        } else {
            cfg.beta = positive_number(j["beta"], "beta");
            cfg.beta_auto = false;
        }
    }
    if (j.contains("Q")) {
        if (j["Q"].is_string()) {
            if (j["Q"].get<std::string>() != "Lg") {
                throw Error(ErrorCode::InvalidConfig, "\"Q\" must be \"Lg\", a number, or an array");
            }
        } else if (j["Q"].is_number()) {
            cfg.Q = {positive_number(j["Q"], "Q")};
        } else {
            cfg.Q = json_doubles(j["Q"], "Q");
        }
    }
    if (j.contains("seed_schedule")) cfg.seed_schedule = j["seed_schedule"].get<std::uint64_t>();
    if (j.contains("seed_data")) cfg.seed_data = j["seed_data"].get<std::uint64_t>();
    if (j.contains("x_init")) {
        if (j["x_init"].is_string()) {
            cfg.x_init_mode = j["x_init"].get<std::string>();
            if (cfg.x_init_mode != "zeros" && cfg.x_init_mode != "local") {
                throw Error(ErrorCode::InvalidConfig, "\"x_init\" must be zeros, local, or an array");
            }
        } else {
            auto vals = json_doubles(j["x_init"], "x_init");
            cfg.x_init_mode = "array";
            cfg.x_init = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        }
    }
    if (j.contains("debug")) {
        const std::string level = j["debug"].get<std::string>();
        if (level == "off") {
            cfg.debug = DebugLevel::Off;
        } else if (level == "identities") {
            cfg.debug = DebugLevel::Identities;
        } else if (level == "full") {
            cfg.debug = DebugLevel::Full;
        } else {
            throw Error(ErrorCode::InvalidConfig, "\"debug\" must be off, identities, or full");
        }
    }
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("oracle")) {
        if (j["oracle"].is_boolean()) {
            cfg.oracle_mode = j["oracle"].get<bool>() ? "on" : "off";
        } else {
            cfg.oracle_mode = j["oracle"].get<std::string>();
            if (cfg.oracle_mode != "auto" && cfg.oracle_mode != "on" && cfg.oracle_mode != "off") {
                throw Error(ErrorCode::InvalidConfig, "\"oracle\" must be auto, on, or off");
            }
        }
    }
    if (j.contains("eps")) cfg.eps = positive_number(j["eps"], "eps");
    return cfg;
}

HarnessConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

BuiltProblem build_problem(const HarnessConfig& cfg) {
    BuiltProblem bp{ProblemInstance{}, std::nullopt, std::nullopt};
    if (cfg.problem == "market") {
        auto [market, problem] = market_instance();
        bp.market = std::move(market);
        bp.problem = std::move(problem);
    } else if (cfg.problem == "lasso") {
        GraphSpec graph = default_lasso_graph();
        if (!cfg.lasso_edges.empty()) {
            int n = 0;
            for (auto [a, b] : cfg.lasso_edges) {
                if (a < 0 || b < 0 || a == b) {
                    throw Error(ErrorCode::InvalidConfig, "edges must join distinct nonnegative vertices");
                }
                n = std::max(n, std::max(a, b) + 1);
            }
            graph = GraphSpec{n, cfg.lasso_edges};
        }
        const std::uint64_t seed = cfg.lasso_seed_set ? cfg.lasso_seed : cfg.seed_data;
        auto [lasso, problem] = gen_lasso(seed, graph, cfg.lasso_dim, cfg.lasso_rho,
                                          cfg.lasso_noise_var, cfg.lasso_sparsity);
        bp.lasso = std::move(lasso);
        bp.problem = std::move(problem);
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(cfg.problem));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("problem file is not valid JSON: ") + e.what());
        }
        bp.problem = problem_from_json(j);
    }
    return bp;
}

SlotSchedule build_experiment_schedule(const HarnessConfig& cfg, int num_agents) {
    SlotConfig sc{cfg.H, cfg.D, cfg.num_slots, cfg.seed_schedule};
    std::vector<FrequencySpec> freqs;
    if (!cfg.fixed_P.empty()) {
        if (cfg.fixed_P.size() != 1 && cfg.fixed_P.size() != static_cast<std::size_t>(num_agents)) {
            throw Error(ErrorCode::InvalidConfig, "\"fixed_P\" must list one value or one per agent");
        }
        for (int i = 0; i < num_agents; ++i) {
            freqs.push_back(FrequencySpec::fixed(
                cfg.fixed_P[cfg.fixed_P.size() == 1 ? 0 : static_cast<std::size_t>(i)]));
        }
    } else if (!cfg.frequencies.empty()) {
        if (cfg.frequencies.size() != 1 &&
            cfg.frequencies.size() != static_cast<std::size_t>(num_agents)) {
            throw Error(ErrorCode::InvalidConfig, "\"frequencies\" must list one value or one per agent");
        }
        for (int i = 0; i < num_agents; ++i) {
            freqs.push_back(FrequencySpec::frac(
                cfg.frequencies[cfg.frequencies.size() == 1 ? 0 : static_cast<std::size_t>(i)]));
        }
    } else {
        freqs.assign(static_cast<std::size_t>(num_agents), FrequencySpec::frac(1.0));
    }
    const std::vector<long>* taus = cfg.delay_mode == "fixed" ? &cfg.delays : nullptr;
    return build_schedule(sc, freqs, cfg.delay_mode, taus);
}

std::optional<SaddleReference> compute_saddle(const HarnessConfig& cfg, const BuiltProblem& bp,
                                              std::vector<std::string>& warnings) {
    if (cfg.oracle_mode == "off") {
        warnings.push_back("reference solve disabled by config; certificate and rate report skipped");
        return std::nullopt;
    }
    if (bp.market) {
        SaddleReference ref = market_kkt_solve(*bp.market);
        ref.constraint_residual = constraint_residual(bp.problem, ref.x_star).second;
        ref.stationarity_residual = kkt_residual(bp.problem, ref.x_star, ref.lambda_star);
        return ref;
    }
    if (bp.lasso) {
        SaddleReference ref = fista_reference(*bp.lasso);
        ref.constraint_residual = constraint_residual(bp.problem, ref.x_star).second;
        try {
            double resid = 0.0;
            ref.lambda_star = lasso_multiplier(*bp.lasso, bp.problem.constraint, ref.x_star, &resid);
            ref.has_lambda = true;
            ref.stationarity_residual = kkt_residual(bp.problem, ref.x_star, ref.lambda_star);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ResidualTooLarge) throw;
            warnings.push_back(std::string("multiplier recovery failed (") + e.what() +
                               "); bound certificate disabled");
        }
        return ref;
    }
    if (cfg.oracle_mode == "on") {
        throw Error(ErrorCode::MissingSaddleData, "no reference solver for problems loaded from file");
    }
    return std::nullopt;
}

ExperimentResult run_experiment(const HarnessConfig& cfg) {
    ExperimentResult r{cfg,
                       build_problem(cfg),
                       SlotSchedule{},
                       ParamSchedule{},
                       Trace{},
                       std::nullopt,
                       std::nullopt,
                       BoundReport{},
                       IdentityReport{},
                       {}};
    r.schedule = build_experiment_schedule(cfg, r.built.problem.num_agents());
    r.params = make_param_schedule(cfg.H, cfg.D, cfg.num_slots, cfg.alpha1,
                                   cfg.beta_auto ? -1.0 : cfg.beta, cfg.Q, r.built.problem.norm_A,
                                   r.built.problem.Lg, r.built.problem.mu);

    EngineConfig ec;
    ec.debug = cfg.debug;
    if (cfg.x_init_mode == "local") {
        ec.x_init = local_equilibrium_init(r.built.problem);
    } else if (cfg.x_init_mode == "array") {
        ec.x_init = cfg.x_init;
    }
    r.trace = run(r.built.problem, r.schedule, r.params, ec);

    r.saddle = compute_saddle(cfg, r.built, r.warnings);
    if (r.saddle && r.saddle->has_lambda) {
        if (r.params.beta <= r.params.beta_cap) {
            r.certificate =
                compute_bound_certificate(r.built.problem, r.params, *r.saddle, r.trace.x_init);
            r.bound_report = check_theorem1(r.trace, *r.saddle, *r.certificate);
        } else {
            r.warnings.push_back("penalty growth exceeds the admissible endpoint; bound certificate skipped");
        }
    }
    if (cfg.debug != DebugLevel::Off) {
        r.identity_report = debug_identities(r.built.problem, r.schedule, r.params, r.trace, cfg.debug);
    }
    r.warnings.insert(r.warnings.begin(), r.trace.warnings.begin(), r.trace.warnings.end());
    return r;
}

RateReport report_rate(const ExperimentResult& r, double eps) {
    if (!r.saddle) {
        throw Error(ErrorCode::MissingSaddleData, "rate reporting needs a reference objective value");
    }
    RateReport report;
    report.eps = eps;
    report.normalized = r.certificate.has_value();

    // Minimal K with alpha(t_{K+1}-1) <= eps, i.e. K >= 1/eps - 1/alpha1; the
    // two loops absorb ceil() roundoff at the boundary.
    long K = std::max(1L, static_cast<long>(std::ceil(1.0 / eps - 1.0 / r.params.alpha1)));
    if (K < 1000000000L) {
        while (alpha_slot_end(static_cast<int>(K) + 1, r.params.alpha1) > eps) ++K;
        while (K > 1 && alpha_slot_end(static_cast<int>(K), r.params.alpha1) <= eps) --K;
    }
    report.K_theory = K;

    double scale_obj = 1.0;
    double scale_feas = 1.0;
    if (r.certificate) {
        scale_obj = r.certificate->delta1 + r.certificate->delta2 * r.certificate->lambda_norm;
        scale_feas = r.certificate->delta2;
    }
    for (const auto& b : r.trace.boundaries) {
        if (b.slot == 0) continue;
        if (std::abs(b.F - r.saddle->F_star) <= eps * scale_obj && b.normAx <= eps * scale_feas) {
            report.K_observed = b.slot;
            break;
        }
    }
    return report;
}

nlohmann::json effective_config_json(const ExperimentResult& r) {
    const HarnessConfig& cfg = r.cfg;
    nlohmann::json j;
    j["problem"] = cfg.problem;
    if (r.built.lasso) {
        const auto& l = *r.built.lasso;
        nlohmann::json edges = nlohmann::json::array();
        for (auto [a, b] : l.graph.edges) edges.push_back({a, b});
        j["lasso"] = {{"seed", l.seed},         {"dim", l.dim},
                      {"rho", l.rho},           {"noise_var", l.noise_var},
                      {"sparsity", l.sparsity}, {"edges", edges}};
    }
    j["H"] = cfg.H;
    j["D"] = cfg.D;
    j["num_slots"] = cfg.num_slots;
    j["delay_mode"] = cfg.delay_mode;
    if (cfg.delay_mode == "fixed") j["delays"] = r.schedule.taus;
    nlohmann::json P = nlohmann::json::array();
    for (int i = 0; i < r.schedule.num_agents(); ++i) P.push_back(r.schedule.P(i, 1));
    j["fixed_P"] = P;
    j["alpha1"] = cfg.alpha1;
    j["beta"] = r.params.beta;
    j["Q"] = r.params.Q;
    j["seed_schedule"] = cfg.seed_schedule;
    j["seed_data"] = cfg.seed_data;
    j["x_init"] = number_array(r.trace.x_init);
    j["debug"] = cfg.debug == DebugLevel::Off ? "off"
                 : cfg.debug == DebugLevel::Identities ? "identities"
                                                       : "full";
    j["oracle"] = cfg.oracle_mode;
    j["eps"] = cfg.eps;
    // beta_was_auto is deliberately not echoed: the echo pins beta to its
    // resolved number, so a rerun parses it as explicit and must still produce
    // byte-identical artifacts.
    j["derived"] = {{"beta_cap", std::isfinite(r.params.beta_cap)
                                     ? nlohmann::json(r.params.beta_cap)
                                     : nlohmann::json("inf")},
                    {"Pi", r.params.Pi},
                    {"coupling", r.params.coupling},
                    {"norm_A", r.built.problem.norm_A},
                    {"Lg", r.built.problem.Lg},
                    {"mu", r.built.problem.mu},
                    {"warnings", r.warnings}};
    return j;
}

nlohmann::json certificate_json(const ExperimentResult& r) {
    if (!r.certificate) {
        throw Error(ErrorCode::MissingSaddleData, "no certificate was computed for this run");
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : r.bound_report.failures) {
        failures.push_back(
            {{"boundary", f.boundary}, {"kind", f.kind}, {"lhs", f.lhs}, {"rhs", f.rhs}});
    }
    return nlohmann::json{{"delta1", r.certificate->delta1},
                          {"delta2", r.certificate->delta2},
                          {"lambda_star_norm", r.certificate->lambda_norm},
                          {"slots_checked", r.bound_report.slots_checked},
                          {"failures", failures}};
}

std::string rate_csv(const ExperimentResult& r) {
    if (!r.saddle) {
        throw Error(ErrorCode::MissingSaddleData, "rate output needs a reference objective value");
    }
    std::string out = "slot,t,alpha,abs_err_F,normAx\n";
    for (const auto& b : r.trace.boundaries) {
        if (b.slot == 0) continue;
        out += std::to_string(b.slot);
        out += ',' + std::to_string(b.tick);
        out += ',' + format_double(b.alpha_bound);
        out += ',' + format_double(std::abs(b.F - r.saddle->F_star));
        out += ',' + format_double(b.normAx);
        out += '\n';
    }
    return out;
}

void write_bundle(const ExperimentResult& r, const std::string& out_dir) {
    if (out_dir.empty()) {
        throw Error(ErrorCode::IoError, "bundle directory must not be empty");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
    }
    auto dump = [](const nlohmann::json& j) { return j.dump(2) + "\n"; };
    const std::filesystem::path dir(out_dir);
    write_file((dir / "instance.json").string(), dump(problem_to_json(r.built.problem)));
    write_file((dir / "schedule.json").string(), dump(schedule_to_json(r.schedule)));
    write_file((dir / "trace.csv").string(), trace_to_csv(r.trace));
    write_file((dir / "effective_config.json").string(), dump(effective_config_json(r)));
    if (r.saddle) {
        write_file((dir / "oracle.json").string(), dump(saddle_to_json(*r.saddle)));
        write_file((dir / "rate.csv").string(), rate_csv(r));
    }
    if (r.certificate) {
        write_file((dir / "certificate.json").string(), dump(certificate_json(r)));
    }
}

} // namespace asynppg
