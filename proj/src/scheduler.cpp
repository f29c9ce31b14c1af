// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "asynppg/errors.hpp"

namespace asynppg {

namespace {

// Substream tags keeping clock and delay draws independent of each other and
// of the number of agents.
constexpr std::uint64_t kClockStream = 1;
constexpr std::uint64_t kDelayStream = 2;

} // namespace

void validate_slot_config(const SlotConfig& cfg) {
    if (cfg.H < 1) throw Error(ErrorCode::ConstraintViolation, "H must be >= 1");
    if (cfg.D < 1 || cfg.D > cfg.H)
        throw Error(ErrorCode::ConstraintViolation, "need 1 <= D <= H (communication delays are bounded by the slot width)");
    if (cfg.num_slots < 1) throw Error(ErrorCode::ConstraintViolation, "num_slots must be >= 1");
}

int actions_per_slot(const FrequencySpec& f, int H) {
    if (f.fixed_P > 0) {
        if (f.fixed_P > H) throw Error(ErrorCode::InvalidFraction, "fixed P exceeds slot width");
        return f.fixed_P;
    }
    if (!(f.fraction > 0.0) || f.fraction > 1.0)
        throw Error(ErrorCode::InvalidFraction, "action fraction must lie in (0, 1]");
    const int p = static_cast<int>(std::lround(f.fraction * H));
    return std::max(1, p);
}

std::vector<long> build_slots(int H, int num_slots) {
    if (H < 1) throw Error(ErrorCode::ConstraintViolation, "H must be >= 1");
    std::vector<long> bounds(static_cast<std::size_t>(num_slots) + 1);
    for (int m = 0; m <= num_slots; ++m) bounds[static_cast<std::size_t>(m)] = static_cast<long>(m) * H;
    return bounds;
}

std::vector<std::vector<long>> generate_action_clock(const FrequencySpec& f, const SlotConfig& cfg,
                                                     Rng& rng) {
    validate_slot_config(cfg);
    const int P = actions_per_slot(f, cfg.H);
    std::vector<std::vector<long>> slots(static_cast<std::size_t>(cfg.num_slots));
    for (int m = 1; m <= cfg.num_slots; ++m) {
        const long base = static_cast<long>(m) * cfg.H;
        const auto offsets = rng.sample_without_replacement(cfg.H, P);
        auto& inst = slots[static_cast<std::size_t>(m - 1)];
        inst.reserve(offsets.size());
        for (int o : offsets) inst.push_back(base + o);
    }
    return slots;
}

std::vector<long> generate_delay_schedule(const SlotConfig& cfg, const std::string& mode, Rng& rng) {
    validate_slot_config(cfg);
    std::vector<long> taus(static_cast<std::size_t>(cfg.num_slots) + 1);
    for (int m = 1; m <= cfg.num_slots + 1; ++m) {
        const long tm = static_cast<long>(m) * cfg.H;
        if (mode == "worst") {
            taus[static_cast<std::size_t>(m - 1)] = tm - cfg.D;
        } else if (mode == "random") {
            taus[static_cast<std::size_t>(m - 1)] = tm - 1 - static_cast<long>(rng.below(static_cast<std::uint64_t>(cfg.D)));
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown delay mode '" + mode + "'");
        }
    }
    return taus;
}

std::vector<long> validate_fixed_delays(const SlotConfig& cfg, const std::vector<long>& taus) {
    validate_slot_config(cfg);
    if (taus.size() != static_cast<std::size_t>(cfg.num_slots) + 1)
        throw Error(ErrorCode::DelayBoundViolated, "fixed delay list must cover slots 1..num_slots+1");
    for (int m = 1; m <= cfg.num_slots + 1; ++m) {
        const long tm = static_cast<long>(m) * cfg.H;
        const long tau = taus[static_cast<std::size_t>(m - 1)];
        if (tau > tm || tm - tau > cfg.D)
            throw Error(ErrorCode::DelayBoundViolated,
                        "tau(t_" + std::to_string(m) + ") outside [t_m - D, t_m]");
    }
    return taus;
}

SlotSchedule build_schedule(const SlotConfig& cfg, const std::vector<FrequencySpec>& freqs,
                            const std::string& delay_mode, const std::vector<long>* fixed_taus) {
    validate_slot_config(cfg);
    if (freqs.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one agent frequency");

    SlotSchedule s;
    s.cfg = cfg;
    s.delay_mode = delay_mode;
    s.clocks.reserve(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        Rng rng(substream_seed(cfg.seed, kClockStream, i));
        s.clocks.push_back(generate_action_clock(freqs[i], cfg, rng));
    }
    if (delay_mode == "fixed") {
        if (!fixed_taus) throw Error(ErrorCode::InvalidConfig, "fixed delay mode needs a delay list");
        s.taus = validate_fixed_delays(cfg, *fixed_taus);
    } else {
        Rng rng(substream_seed(cfg.seed, kDelayStream));
        s.taus = generate_delay_schedule(cfg, delay_mode, rng);
    }
    return s;
}

int compute_n_im(const std::vector<long>& slot_instants, long tau_next) {
    int n = 0;
    for (long t : slot_instants) {
        if (t <= tau_next)
            ++n;
        else
            break;
    }
    return n;
}

ValidationReport validate_schedule(const SlotSchedule& s) {
    ValidationReport report;
    const auto flag = [&](const std::string& assumption, int agent, int slot, const std::string& detail) {
        report.violations.push_back({assumption, agent, slot, detail});
    };

    if (s.cfg.H < 1) flag("A4", -1, 0, "slot width H < 1");
    if (s.cfg.D < 1 || s.cfg.D > s.cfg.H) flag("A7", -1, 0, "delay bound D outside [1, H]");

    for (int i = 0; i < s.num_agents(); ++i) {
        if (s.clocks[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(s.cfg.num_slots)) {
            flag("A5", i, 0, "clock does not cover every slot");
            continue;
        }
        for (int m = 1; m <= s.cfg.num_slots; ++m) {
            const auto& inst = s.slot_instants(i, m);
            if (inst.empty()) {
                flag("A5", i, m, "no action in slot");
                continue;
            }
            for (std::size_t k = 0; k < inst.size(); ++k) {
                if (inst[k] < s.t(m) || inst[k] >= s.t(m + 1)) {
                    flag("A5", i, m, "action instant outside its slot");
                    break;
                }
                if (k > 0 && inst[k] <= inst[k - 1]) {
                    flag("A5", i, m, "action instants not strictly increasing");
                    break;
                }
            }
            // Ordering along the extended index chain:
            // t_m^(P) <= t_{m+1} - 1 < t_{m+1} <= t_{m+1}^(1).
            if (inst.back() > s.t(m + 1) - 1) flag("A5", i, m, "last action beyond slot end");
            if (m < s.cfg.num_slots) {
                const auto& next = s.slot_instants(i, m + 1);
                if (!next.empty() && next.front() < s.t(m + 1))
                    flag("A5", i, m + 1, "next slot's first action precedes its boundary");
            }
        }
    }

    if (s.taus.size() != static_cast<std::size_t>(s.cfg.num_slots) + 1) {
        flag("A7", -1, 0, "delay list does not cover slots 1..num_slots+1");
    } else {
        for (int m = 1; m <= s.cfg.num_slots + 1; ++m) {
            const long tm = s.t(m);
            if (s.tau(m) > tm || tm - s.tau(m) > s.cfg.D)
                flag("A7", -1, m, "snapshot instant outside [t_m - D, t_m]");
        }
    }
    return report;
}

std::vector<StalenessViolation> check_staleness_inequality(const SlotSchedule& s) {
    std::vector<StalenessViolation> out;
    for (int m = 1; m <= s.cfg.num_slots; ++m) {
        const long tau_next = s.tau(m + 1);
        const long mid = s.t(m + 1) - 1 - tau_next;
        for (int i = 0; i < s.num_agents(); ++i) {
            const auto& inst = s.slot_instants(i, m);
            const int n = compute_n_im(inst, tau_next);
            if (n == 0) continue; // snapshot predates all slot-m actions; sentinel case
            const int P = static_cast<int>(inst.size());
            if (!(P - n <= mid))
                out.push_back({i, m, "P - n = " + std::to_string(P - n) + " exceeds t_{m+1}-1-tau = " + std::to_string(mid)});
            if (!(mid <= s.cfg.D - 1))
                out.push_back({i, m, "t_{m+1}-1-tau = " + std::to_string(mid) + " exceeds D-1"});
        }
    }
    return out;
}

nlohmann::json schedule_to_json(const SlotSchedule& s) {
    nlohmann::json clocks = nlohmann::json::array();
    for (const auto& agent : s.clocks) {
        nlohmann::json slots = nlohmann::json::array();
        for (const auto& inst : agent) slots.push_back(inst);
        clocks.push_back(std::move(slots));
    }
    return {{"H", s.cfg.H},
            {"D", s.cfg.D},
            {"num_slots", s.cfg.num_slots},
            {"seed", s.cfg.seed},
            {"delay_mode", s.delay_mode},
            {"clocks", std::move(clocks)},
            {"delays", s.taus}};
}

SlotSchedule schedule_from_json(const nlohmann::json& j) {
    SlotSchedule s;
    s.cfg.H = j.at("H").get<int>();
    s.cfg.D = j.at("D").get<int>();
    s.cfg.num_slots = j.at("num_slots").get<int>();
    s.cfg.seed = j.at("seed").get<std::uint64_t>();
    s.delay_mode = j.value("delay_mode", "fixed");
    for (const auto& ja : j.at("clocks")) {
        std::vector<std::vector<long>> agent;
        for (const auto& js : ja) agent.push_back(js.get<std::vector<long>>());
        s.clocks.push_back(std::move(agent));
    }
    s.taus = j.at("delays").get<std::vector<long>>();
    return s;
}

} // namespace asynppg
