// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "asynppg/oracle.hpp"
#include "asynppg/params.hpp"
#include "asynppg/problem.hpp"
#include "asynppg/scheduler.hpp"
#include "asynppg/types.hpp"

namespace asynppg {

enum class DebugLevel { Off, Identities, Full };

struct EngineConfig {
    Vec x_init;                 // empty means start from zeros
    DebugLevel debug = DebugLevel::Off;
    double stop_atol = 0.0;     // stop early once a slot moves the state by no more than this; 0 runs all slots
    bool full_history = true;   // false keeps only the trailing H+D ticks of state (delayed reads stay valid)
};

// One prox-gradient action by one agent. State after the action, plus the
// bookkeeping needed to audit the step afterwards.
struct UpdateRecord {
    int slot = 0;       // 1-based slot index m
    long tick = 0;      // global tick t at which the agent acted
    int agent = 0;
    int n = 0;          // 1-based position of this action inside the slot
    int P = 0;          // total actions of this agent in the slot
    double alpha = 0;   // averaging weight after the action
    double theta = 0;   // alpha / P, must stay inside (0,1)
    double eta = 0;     // step size used
    double xi = 0;      // slot coupling weight shared by every agent this slot
    double penalty = 0; // multiplier on W_i x^d for this slot
    Vec x_after;        // full network state right after the action
    double F = 0;
    double normAx = 0;
};

// Network state at a slot boundary t_{m+1}, where the convergence bound applies.
struct BoundaryRecord {
    int slot = 0;  // m; the state below is x(t_{m+1})
    long tick = 0; // t_{m+1}
    Vec x;
    double F = 0;
    double normAx = 0;
    double alpha_bound = 0; // averaging weight entering the bound at this boundary
};

struct Trace {
    std::vector<UpdateRecord> updates;
    std::vector<BoundaryRecord> boundaries;
    std::vector<Vec> tick_states; // x(kept_from), ..., x(t_{K+1})
    long first_tick = 0;          // first tick of the run
    long kept_from = 0;           // tick of tick_states[0]; > first_tick when lean mode trimmed the prefix
    Vec x_init;
    Vec x_final;
    std::vector<std::string> warnings;

    // State at a global tick; anything at or before the start resolves to the
    // initial point (the pre-run history is constant). Asking for a tick that
    // lean mode already dropped is an error.
    const Vec& state_at(long t) const;
};

// One agent's prox-gradient action: prox applied to x_i - eta * (grad f_i(x_i)
// + penalty * Wi_xd).
Vec agent_update(const AgentObjective& agent, const Vec& x_i, const Vec& Wi_xd, double penalty,
                 double eta);

// Warm-start helper: per-agent proximal gradient on f_i + h_i alone (no
// coupling), run from zero with step 1/L_i. Gives each agent its local
// unconstrained optimum.
Vec local_equilibrium_init(const ProblemInstance& p, int iters = 200);

// Simulates the full slot schedule. Ticks without an action copy state
// verbatim; each action reads the slot-frozen snapshot x^d. Throws
// ScheduleInvalid if the schedule fails validation against its own config and
// NonFiniteState if an update produces a non-finite coordinate.
Trace run(const ProblemInstance& p, const SlotSchedule& sched, const ParamSchedule& params,
          const EngineConfig& cfg);

// Constants of the convergence bound, computed from the initial point and the
// reference saddle data. delta1 ~ initial Lyapunov value, delta2 ~ multiplier
// radius; both feed the per-boundary bound checks.
struct Certificate {
    double delta1 = 0;
    double delta2 = 0;
    double lambda_norm = 0;
    double xi1 = 0; // weight on the initial distance term
};

Certificate compute_bound_certificate(const ProblemInstance& p, const ParamSchedule& params,
                                      const SaddleReference& ref, const Vec& x_init);

struct BoundViolation {
    int boundary = 0; // boundary index b (state x(t_b))
    std::string kind; // "objective" or "feasibility"
    double lhs = 0;
    double rhs = 0;
};

struct BoundReport {
    int slots_checked = 0;
    std::vector<BoundViolation> failures;
};

// Verifies the per-boundary convergence bounds over a finished trace:
// |F(x(t_b)) - F*| and ||A x(t_b)|| against their certificate envelopes, with
// rtol headroom for accumulated roundoff.
BoundReport check_theorem1(const Trace& trace, const SaddleReference& ref, const Certificate& cert,
                           double rtol = 1e-9);

struct IdentityReport {
    int updates_checked = 0;
    int ticks_checked = 0;
    int truncated = 0; // violations dropped beyond the storage cap
    std::vector<std::string> violations;

    bool clean() const { return violations.empty() && truncated == 0; }
};

// Post-hoc audit of a trace against the quantities the analysis relies on:
// exact state carryover on idle ticks, averaging-weight telescoping and
// cross-agent agreement, theta in (0,1), shared slot coupling weight,
// step-size floors, slot-increment caps, and (at DebugLevel::Full) the
// delayed-state and intra-slot movement inequalities.
IdentityReport debug_identities(const ProblemInstance& p, const SlotSchedule& sched,
                                const ParamSchedule& params, const Trace& trace, DebugLevel level);

// CSV rendering of a trace: header slot,t,agent,event,x0..x{n-1},F,normAx,
// alpha,theta,eta; one "init" row, one "update" row per action, one
// "boundary" row per slot. Shortest round-trip float formatting keeps reruns
// byte-identical.
std::string trace_to_csv(const Trace& trace);

} // namespace asynppg
