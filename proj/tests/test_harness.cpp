// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "asynppg/engine.hpp"
#include "asynppg/errors.hpp"
#include "asynppg/harness.hpp"
#include "asynppg/params.hpp"
#include "asynppg/textio.hpp"
#include "test_support.hpp"

using namespace asynppg;
using asynppg::testing::throws_code;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_market(int H, int D, int K) {
    return {{"problem", "market"}, {"H", H}, {"D", D}, {"num_slots", K}};
}

nlohmann::json market_mix_config(int K, std::uint64_t seed) {
    nlohmann::json j = minimal_market(15, 5, K);
    j["frequencies"] = {0.8, 0.2, 1.0, 0.5, 0.7};
    j["delay_mode"] = "random";
    j["seed_schedule"] = seed;
    return j;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("asynppg_harness_" + tag);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("minimal config fills the documented defaults") {
    HarnessConfig cfg = parse_config(minimal_market(15, 5, 500));
    CHECK(cfg.problem == "market");
    CHECK(cfg.H == 15);
    CHECK(cfg.D == 5);
    CHECK(cfg.num_slots == 500);
    CHECK(cfg.alpha1 == 1.0);
    CHECK(cfg.beta_auto);
    CHECK(cfg.Q.empty());
    CHECK(cfg.delay_mode == "worst");
    CHECK(cfg.frequencies.empty());
    CHECK(cfg.fixed_P.empty());
    CHECK(cfg.seed_schedule == 1);
    CHECK(cfg.seed_data == 1);
    CHECK(cfg.x_init_mode == "zeros");
    CHECK(cfg.debug == DebugLevel::Off);
    CHECK(cfg.oracle_mode == "auto");
    CHECK(cfg.eps == 1e-3);
}

TEST_CASE("config validation rejects bad input") {
    SUBCASE("unknown key") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["frequencis"] = 0.5;
        bool threw = false;
        try {
            (void)parse_config(j);
        } catch (const Error& e) {
            threw = true;
            CHECK(e.code() == ErrorCode::InvalidConfig);
            CHECK(std::string(e.what()).find("unknown config key") != std::string::npos);
        }
        CHECK(threw);
    }

    SUBCASE("delay window longer than the slot") {
        HarnessConfig cfg = parse_config(minimal_market(10, 20, 10));
        CHECK(throws_code([&] { (void)run_experiment(cfg); }, ErrorCode::ConstraintViolation));
    }

    SUBCASE("both activity descriptions at once") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["frequencies"] = 0.5;
        j["fixed_P"] = 3;
        CHECK(throws_code([&] { (void)parse_config(j); }, ErrorCode::InvalidConfig));
    }

    SUBCASE("unrecognized delay mode") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["delay_mode"] = "stale";
        CHECK(throws_code([&] { (void)parse_config(j); }, ErrorCode::InvalidConfig));
    }

    SUBCASE("fixed delay mode without the instants") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["delay_mode"] = "fixed";
        CHECK(throws_code([&] { (void)parse_config(j); }, ErrorCode::InvalidConfig));
    }

    SUBCASE("beta must be positive or auto") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["beta"] = "fastest";
        CHECK(throws_code([&] { (void)parse_config(j); }, ErrorCode::InvalidConfig));
        j["beta"] = -2.0;
        CHECK(throws_code([&] { (void)parse_config(j); }, ErrorCode::InvalidConfig));
    }

    SUBCASE("problem path that does not exist") {
        nlohmann::json j = minimal_market(15, 5, 10);
        j["problem"] = "/nonexistent/problem.json";
        HarnessConfig cfg = parse_config(j);
        CHECK(throws_code([&] { (void)run_experiment(cfg); }, ErrorCode::IoError));
    }
}

TEST_CASE("frequency fractions map onto per-slot action counts") {
    nlohmann::json j = minimal_market(15, 5, 10);
    j["frequencies"] = {0.8, 0.2, 1.0, 0.5, 0.7};
    HarnessConfig cfg = parse_config(j);
    SlotSchedule sched = build_experiment_schedule(cfg, 5);

    const int expected[] = {12, 3, 15, 8, 11};
    for (int i = 0; i < 5; ++i) {
        CHECK(sched.P(i, 1) == expected[i]);
        CHECK(sched.P(i, 10) == expected[i]);
    }
}

TEST_CASE("config files round trip through disk") {
    fs::path dir = fresh_dir("cfg");
    fs::create_directories(dir);
    fs::path path = dir / "run.json";

    nlohmann::json j = market_mix_config(25, 3);
    j["eps"] = 0.05;
    write_file(path.string(), j.dump(2));

    HarnessConfig cfg = load_config(path.string());
    CHECK(cfg.num_slots == 25);
    CHECK(cfg.seed_schedule == 3);
    CHECK(cfg.eps == 0.05);
    CHECK(cfg.frequencies.size() == 5);

    write_file(path.string(), "{ not json");
    CHECK(throws_code([&] { (void)load_config(path.string()); }, ErrorCode::ParseError));
    CHECK(throws_code([&] { (void)load_config((dir / "missing.json").string()); },
                      ErrorCode::IoError));
    fs::remove_all(dir);
}

TEST_CASE("market experiment produces a clean certificate") {
    nlohmann::json j = market_mix_config(40, 1);
    j["debug"] = "full";
    ExperimentResult r = run_experiment(parse_config(j));

    REQUIRE(r.saddle.has_value());
    REQUIRE(r.certificate.has_value());
    CHECK(r.bound_report.slots_checked == 40);
    CHECK(r.bound_report.failures.empty());
    CHECK(r.identity_report.clean());
    CHECK(r.clean());

    nlohmann::json cert = certificate_json(r);
    CHECK(cert.size() == 5);
    CHECK(cert.contains("delta1"));
    CHECK(cert.contains("delta2"));
    CHECK(cert.contains("lambda_star_norm"));
    CHECK(cert.contains("slots_checked"));
    CHECK(cert.contains("failures"));
    CHECK(cert["failures"].empty());

    std::string rates = rate_csv(r);
    CHECK(rates.rfind("slot,t,alpha,abs_err_F,normAx\n", 0) == 0);
    CHECK(std::count(rates.begin(), rates.end(), '\n') == 41); // header + one row per slot
}

TEST_CASE("echoed configs rerun byte-identically") {
    SUBCASE("market with random delays") {
        ExperimentResult r1 = run_experiment(parse_config(market_mix_config(25, 3)));
        nlohmann::json echo = effective_config_json(r1);

        // The echo pins every resolved choice as a plain value.
        CHECK(echo["beta"].is_number());
        CHECK(echo["beta"].get<double>() == r1.params.beta);
        CHECK(echo["Q"].size() == static_cast<std::size_t>(r1.cfg.num_slots) + 1);
        CHECK(echo.contains("derived"));
        CHECK_FALSE(echo["derived"].contains("beta_was_auto"));

        ExperimentResult r2 = run_experiment(parse_config(echo));
        CHECK(trace_to_csv(r1.trace) == trace_to_csv(r2.trace));
        CHECK(effective_config_json(r2).dump(2) == echo.dump(2));
        CHECK(certificate_json(r1).dump(2) == certificate_json(r2).dump(2));
    }

    SUBCASE("generated lasso data") {
        nlohmann::json j = {{"problem", "lasso"}, {"H", 10}, {"D", 2}, {"num_slots", 10},
                            {"seed_data", 2},     {"seed_schedule", 5}};
        ExperimentResult r1 = run_experiment(parse_config(j));
        nlohmann::json echo = effective_config_json(r1);
        ExperimentResult r2 = run_experiment(parse_config(echo));
        CHECK(trace_to_csv(r1.trace) == trace_to_csv(r2.trace));
        CHECK(effective_config_json(r2).dump(2) == echo.dump(2));
    }
}

TEST_CASE("oracle off skips reference artifacts") {
    nlohmann::json j = market_mix_config(10, 1);
    j["oracle"] = "off";
    ExperimentResult r = run_experiment(parse_config(j));

    CHECK_FALSE(r.saddle.has_value());
    CHECK_FALSE(r.certificate.has_value());
    bool warned = false;
    for (const auto& w : r.warnings) {
        if (w.find("reference solve disabled") != std::string::npos) warned = true;
    }
    CHECK(warned);
    CHECK(throws_code([&] { (void)report_rate(r, 0.01); }, ErrorCode::MissingSaddleData));
    CHECK(throws_code([&] { (void)certificate_json(r); }, ErrorCode::MissingSaddleData));

    fs::path dir = fresh_dir("bundle_off");
    write_bundle(r, dir.string());
    CHECK(fs::exists(dir / "instance.json"));
    CHECK(fs::exists(dir / "schedule.json"));
    CHECK(fs::exists(dir / "trace.csv"));
    CHECK(fs::exists(dir / "effective_config.json"));
    CHECK_FALSE(fs::exists(dir / "oracle.json"));
    CHECK_FALSE(fs::exists(dir / "certificate.json"));
    CHECK_FALSE(fs::exists(dir / "rate.csv"));
    fs::remove_all(dir);
}

TEST_CASE("lasso experiment certifies against the accelerated reference") {
    nlohmann::json j = {{"problem", "lasso"}, {"H", 10}, {"D", 2}, {"num_slots", 20},
                        {"seed_data", 1},     {"seed_schedule", 11}};
    ExperimentResult r = run_experiment(parse_config(j));

    REQUIRE(r.saddle.has_value());
    CHECK(r.saddle->has_lambda);
    REQUIRE(r.certificate.has_value());
    CHECK(r.bound_report.slots_checked == 20);
    CHECK(r.bound_report.failures.empty());
    CHECK(r.clean());
}

TEST_CASE("rate report counts slots to the target accuracy") {
    ExperimentResult r = run_experiment(parse_config(market_mix_config(120, 1)));
    REQUIRE(r.certificate.has_value());

    RateReport fine = report_rate(r, 0.01);
    CHECK(fine.K_theory == 99);
    CHECK(fine.normalized);
    CHECK(fine.K_observed >= 1);

    RateReport coarse = report_rate(r, 1.0);
    CHECK(coarse.K_theory == 1);
    CHECK(coarse.K_observed == 1);
}

TEST_CASE("rate report on an already-converged trace") {
    // A trace parked on the reference point reports success at the first
    // boundary; without a certificate the thresholds are the raw eps.
    ExperimentResult r{};
    SaddleReference ref;
    ref.x_star = Vec::Zero(1);
    ref.F_star = 0.0;
    r.saddle = ref;
    for (int m = 1; m <= 3; ++m) {
        BoundaryRecord b;
        b.slot = m;
        b.tick = m + 1;
        b.F = 0.0;
        b.normAx = 0.0;
        r.trace.boundaries.push_back(b);
    }

    RateReport report = report_rate(r, 1e-6);
    CHECK_FALSE(report.normalized);
    CHECK(report.K_observed == 1);
    CHECK(report.K_theory == 999999);
}

TEST_CASE("initial point modes resolve before the run") {
    SUBCASE("local equilibrium warm start") {
        nlohmann::json j = market_mix_config(5, 1);
        j["x_init"] = "local";
        ExperimentResult r = run_experiment(parse_config(j));
        Vec expected = local_equilibrium_init(r.built.problem);
        CHECK((r.trace.x_init.array() == expected.array()).all());
    }

    SUBCASE("explicit array") {
        nlohmann::json j = market_mix_config(5, 1);
        j["x_init"] = {1.0, 2.0, 3.0, 2.0, 4.0};
        ExperimentResult r = run_experiment(parse_config(j));
        CHECK(r.trace.x_init[4] == 4.0);
    }

    SUBCASE("array of the wrong length") {
        nlohmann::json j = market_mix_config(5, 1);
        j["x_init"] = {1.0, 2.0};
        HarnessConfig cfg = parse_config(j);
        CHECK(throws_code([&] { (void)run_experiment(cfg); }, ErrorCode::DimensionMismatch));
    }
}
