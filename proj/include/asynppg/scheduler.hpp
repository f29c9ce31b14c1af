// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "asynppg/rng.hpp"

namespace asynppg {

// Slot grid: t_m = m*H, slot m is [t_m, t_{m+1}). Slot 0 is pure history
// (no actions); the algorithm runs over slots 1..num_slots.
struct SlotConfig {
    int H = 1;
    int D = 1;
    int num_slots = 1;
    std::uint64_t seed = 0;
};

void validate_slot_config(const SlotConfig& cfg);

// Per-agent activity: either a fraction of the H ticks (rounded, floored at
// one action per slot) or a fixed per-slot count.
struct FrequencySpec {
    double fraction = 1.0;
    int fixed_P = 0; // > 0 selects the fixed-count path

    static FrequencySpec frac(double p) { return {p, 0}; }
    static FrequencySpec fixed(int P) { return {0.0, P}; }
};

int actions_per_slot(const FrequencySpec& f, int H);

// Boundaries t_0..t_num_slots.
std::vector<long> build_slots(int H, int num_slots);

// One agent's action instants, per slot, sorted ascending (global ticks).
std::vector<std::vector<long>> generate_action_clock(const FrequencySpec& f, const SlotConfig& cfg,
                                                     Rng& rng);

// Snapshot instants tau(t_m) for m = 1..num_slots+1. Modes: "worst" pins
// tau = t_m - D; "random" draws the delay uniformly from {1..D} per slot.
// Zero delay is representable (fixed lists may carry it) but never generated:
// with tau(t_{m+1}) = t_{m+1} the staleness inequality below is violated by
// any agent whose actions all precede the boundary, so generated schedules
// keep snapshots strictly before the slot start.
std::vector<long> generate_delay_schedule(const SlotConfig& cfg, const std::string& mode, Rng& rng);
std::vector<long> validate_fixed_delays(const SlotConfig& cfg, const std::vector<long>& taus);

// A full realization: grid + clocks + delays.
struct SlotSchedule {
    SlotConfig cfg;
    std::vector<std::vector<std::vector<long>>> clocks; // [agent][m-1] -> instants
    std::vector<long> taus;                             // [m-1] -> tau(t_m), m = 1..num_slots+1
    std::string delay_mode = "worst";

    int num_agents() const { return static_cast<int>(clocks.size()); }
    long t(int m) const { return static_cast<long>(m) * cfg.H; }
    const std::vector<long>& slot_instants(int i, int m) const {
        return clocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(m - 1)];
    }
    int P(int i, int m) const { return static_cast<int>(slot_instants(i, m).size()); }
    long tau(int m) const { return taus[static_cast<std::size_t>(m - 1)]; }
};

// Clocks from per-agent frequency specs plus delays, all derived from
// cfg.seed via fixed substreams (agent i's clock stream is independent of N).
SlotSchedule build_schedule(const SlotConfig& cfg, const std::vector<FrequencySpec>& freqs,
                            const std::string& delay_mode,
                            const std::vector<long>* fixed_taus = nullptr);

// Index of agent i's last slot-m action at or before tau_next; 0 when the
// snapshot predates all of the agent's slot-m actions (resolves to the
// slot-entry state).
int compute_n_im(const std::vector<long>& slot_instants, long tau_next);

struct ScheduleViolation {
    std::string assumption; // e.g. "A5" or "A7"
    int agent = -1;         // -1 when not agent-specific
    int slot = 0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ScheduleViolation> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_schedule(const SlotSchedule& s);

// Staleness inequality: P_{i,m} - n_{i,m} <= t_{m+1} - 1 - tau(t_{m+1}) <= D - 1
// whenever n_{i,m} >= 1, for every agent and executed slot.
struct StalenessViolation {
    int agent = 0;
    int slot = 0;
    std::string detail;
};

std::vector<StalenessViolation> check_staleness_inequality(const SlotSchedule& s);

nlohmann::json schedule_to_json(const SlotSchedule& s);
SlotSchedule schedule_from_json(const nlohmann::json& j);

} // namespace asynppg
