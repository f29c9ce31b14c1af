// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "asynppg/errors.hpp"
#include "asynppg/textio.hpp"

namespace asynppg {

namespace {

constexpr std::size_t kViolationCap = 100;

bool bits_equal(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a[k] != b[k]) return false;
    }
    return true;
}

} // namespace

const Vec& Trace::state_at(long t) const {
    if (t <= first_tick || tick_states.empty()) return x_init;
    if (t < kept_from) {
        throw Error(ErrorCode::InvalidConfig,
                    "state at tick " + std::to_string(t) + " was trimmed by lean history mode");
    }
    auto idx = static_cast<std::size_t>(t - kept_from);
    if (idx >= tick_states.size()) {
        throw Error(ErrorCode::ScheduleInvalid, "requested state beyond recorded history");
    }
    return tick_states[idx];
}

Vec agent_update(const AgentObjective& agent, const Vec& x_i, const Vec& Wi_xd, double penalty,
                 double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw Error(ErrorCode::NonPositiveStep, "step size must be positive and finite");
    }
    if (x_i.size() != agent.smooth->dimension() || Wi_xd.size() != x_i.size()) {
        throw Error(ErrorCode::DimensionMismatch, "agent update operands disagree on dimension");
    }
    Vec g = agent.smooth->gradient(x_i) + penalty * Wi_xd;
    return agent.prox->prox(x_i - eta * g, eta);
}

Vec local_equilibrium_init(const ProblemInstance& p, int iters) {
    Vec x = Vec::Zero(p.total_dim());
    for (int i = 0; i < p.num_agents(); ++i) {
        const auto& agent = p.agents[static_cast<std::size_t>(i)];
        const Eigen::Index off = p.agent_offset(i);
        const Eigen::Index ni = p.agent_dim(i);
        const double step = 1.0 / agent.smooth->lipschitz();
        Vec xi = Vec::Zero(ni);
        for (int it = 0; it < iters; ++it) {
            xi = agent.prox->prox(xi - step * agent.smooth->gradient(xi), step);
        }
        x.segment(off, ni) = xi;
    }
    return x;
}

Trace run(const ProblemInstance& p, const SlotSchedule& sched, const ParamSchedule& params,
          const EngineConfig& cfg) {
    if (sched.num_agents() != p.num_agents()) {
        throw Error(ErrorCode::DimensionMismatch, "schedule and problem disagree on the number of agents");
    }
    if (params.H != sched.cfg.H || params.D != sched.cfg.D || params.num_slots != sched.cfg.num_slots) {
        throw Error(ErrorCode::InvalidConfig, "parameter schedule was built for a different slot configuration");
    }
    {
        ValidationReport report = validate_schedule(sched);
        if (!report.violations.empty()) {
            const auto& v = report.violations.front();
            throw Error(ErrorCode::ScheduleInvalid,
                        "schedule fails " + v.assumption + " at agent " + std::to_string(v.agent) +
                            ", slot " + std::to_string(v.slot) + ": " + v.detail);
        }
    }

    Trace trace;
    trace.warnings = params.warnings;
    if (cfg.x_init.size() == 0) {
        trace.x_init = Vec::Zero(p.total_dim());
    } else if (cfg.x_init.size() == static_cast<Eigen::Index>(p.total_dim())) {
        trace.x_init = cfg.x_init;
    } else {
        throw Error(ErrorCode::DimensionMismatch, "initial point does not match the stacked dimension");
    }

    const int H = sched.cfg.H;
    const int K = sched.cfg.num_slots;
    const double alpha1 = params.alpha1;

    Vec x = trace.x_init;
    trace.first_tick = sched.t(1);
    trace.kept_from = trace.first_tick;
    if (cfg.full_history) {
        trace.tick_states.reserve(static_cast<std::size_t>(K) * static_cast<std::size_t>(H) + 1);
    }
    trace.tick_states.push_back(x);

    {
        BoundaryRecord init;
        init.slot = 0;
        init.tick = trace.first_tick;
        init.x = x;
        init.F = global_objective(p, x);
        init.normAx = constraint_residual(p, x).second;
        init.alpha_bound = alpha1;
        if (!std::isfinite(init.F)) {
            trace.warnings.push_back(
                "initial point has non-finite objective (outside an indicator's domain)");
        }
        trace.boundaries.push_back(std::move(init));
    }

    for (int m = 1; m <= K; ++m) {
        const long t_m = sched.t(m);
        const Vec x_d = trace.state_at(sched.tau(m)); // slot-frozen delayed snapshot
        const double penalty = params.penalty_coeff(m);
        const double S_m = params.S(m);

        // Who acts at which tick of this slot, with each agent's action index.
        std::vector<std::vector<std::pair<int, int>>> acting(static_cast<std::size_t>(H));
        for (int i = 0; i < p.num_agents(); ++i) {
            const auto& instants = sched.slot_instants(i, m);
            for (std::size_t n = 0; n < instants.size(); ++n) {
                acting[static_cast<std::size_t>(instants[n] - t_m)].emplace_back(i, static_cast<int>(n) + 1);
            }
        }

        for (int k = 0; k < H; ++k) {
            const long t = t_m + k;
            std::sort(acting[static_cast<std::size_t>(k)].begin(), acting[static_cast<std::size_t>(k)].end());
            for (auto [i, n] : acting[static_cast<std::size_t>(k)]) {
                const auto& agent = p.agents[static_cast<std::size_t>(i)];
                const Eigen::Index off = p.agent_offset(i);
                const Eigen::Index ni = p.agent_dim(i);
                const int P = sched.P(i, m);
                const double eta = params.eta(m, P);

                Vec xi_new = agent_update(agent, x.segment(off, ni), p.apply_Wi(x_d, i), penalty, eta);
                if (!xi_new.allFinite()) {
                    throw Error(ErrorCode::NonFiniteState,
                                "non-finite state after agent " + std::to_string(i) + " at tick " +
                                    std::to_string(t) + " (slot " + std::to_string(m) + ")");
                }
                x.segment(off, ni) = xi_new;

                UpdateRecord rec;
                rec.slot = m;
                rec.tick = t;
                rec.agent = i;
                rec.n = n;
                rec.P = P;
                rec.alpha = alpha_intra(m, n, P, alpha1);
                rec.theta = rec.alpha / static_cast<double>(P);
                rec.eta = eta;
                rec.xi = S_m;
                rec.penalty = penalty;
                rec.x_after = x;
                rec.F = global_objective(p, x);
                rec.normAx = constraint_residual(p, x).second;
                trace.updates.push_back(std::move(rec));
            }
            trace.tick_states.push_back(x);
        }

        BoundaryRecord rec;
        rec.slot = m;
        rec.tick = sched.t(m + 1);
        rec.x = x;
        rec.F = global_objective(p, x);
        rec.normAx = constraint_residual(p, x).second;
        rec.alpha_bound = alpha_slot_end(m + 1, alpha1);
        trace.boundaries.push_back(std::move(rec));

        if (!cfg.full_history) {
            // Keep a trailing window wide enough for any delayed read and for
            // the movement audits: H + D ticks behind the current boundary.
            const long floor_tick = sched.t(m + 1) - static_cast<long>(H + sched.cfg.D);
            const long cut = floor_tick - trace.kept_from;
            if (cut > 0) {
                trace.tick_states.erase(trace.tick_states.begin(),
                                        trace.tick_states.begin() + cut);
                trace.kept_from += cut;
            }
        }
        if (cfg.stop_atol > 0.0 && m >= 1) {
            const auto& prev = trace.boundaries[static_cast<std::size_t>(m - 1)].x;
            if ((x - prev).norm() <= cfg.stop_atol) break;
        }
    }

    trace.x_final = x;
    return trace;
}


Certificate compute_bound_certificate(const ProblemInstance& p, const ParamSchedule& params,
                                      const SaddleReference& ref, const Vec& x_init) {
    if (!ref.has_lambda || ref.lambda_star.size() != static_cast<Eigen::Index>(p.constraint.rows)) {
        throw Error(ErrorCode::MissingSaddleData, "certificate needs a multiplier of matching dimension");
    }
    if (ref.x_star.size() != static_cast<Eigen::Index>(p.total_dim())) {
        throw Error(ErrorCode::MissingSaddleData, "certificate needs a primal point of matching dimension");
    }
    Vec x1 = x_init.size() == 0 ? Vec::Zero(p.total_dim()) : x_init;
    if (x1.size() != static_cast<Eigen::Index>(p.total_dim())) {
        throw Error(ErrorCode::DimensionMismatch, "initial point does not match the stacked dimension");
    }
    const double F1 = global_objective(p, x1);
    if (!std::isfinite(F1)) {
        throw Error(ErrorCode::ConstraintViolation, "initial point violates an indicator constraint");
    }
    const double beta = params.beta;
    const double alpha1 = params.alpha1;
    Vec Ax1 = constraint_residual(p, x1).first;

    Certificate cert;
    cert.lambda_norm = ref.lambda_star.norm();
    cert.xi1 = params.xi(1);
    const double gap = (F1 - ref.F_star + ref.lambda_star.dot(Ax1)) / alpha1;
    const double mult = ((beta / alpha1) * Ax1 - ref.lambda_star).squaredNorm() / (2.0 * beta);
    const double dist = 0.5 * cert.xi1 * (ref.x_star - x1).squaredNorm();
    // each term is nonnegative at a true saddle point; clamp roundoff dust
    cert.delta1 = std::max(0.0, gap + mult + dist);
    cert.delta2 = (std::sqrt(2.0 * beta * cert.delta1) + cert.lambda_norm) / beta;
    return cert;
}

BoundReport check_theorem1(const Trace& trace, const SaddleReference& ref, const Certificate& cert,
                           double rtol) {
    BoundReport report;
    const double obj_scale = cert.delta1 + cert.delta2 * cert.lambda_norm;
    for (const auto& b : trace.boundaries) {
        if (b.slot == 0) continue; // bound starts at the first completed slot
        ++report.slots_checked;
        const double env_obj = obj_scale * b.alpha_bound * (1.0 + rtol);
        const double env_feas = cert.delta2 * b.alpha_bound * (1.0 + rtol);
        const double lhs_obj = std::abs(b.F - ref.F_star);
        if (!(lhs_obj <= env_obj)) {
            report.failures.push_back({b.slot + 1, "objective", lhs_obj, env_obj});
        }
        if (!(b.normAx <= env_feas)) {
            report.failures.push_back({b.slot + 1, "feasibility", b.normAx, env_feas});
        }
    }
    return report;
}

IdentityReport debug_identities(const ProblemInstance& p, const SlotSchedule& sched,
                                const ParamSchedule& params, const Trace& trace, DebugLevel level) {
    IdentityReport report;
    if (level == DebugLevel::Off) return report;
    if (trace.kept_from != trace.first_tick) {
        throw Error(ErrorCode::InvalidConfig,
                    "identity audit needs the full state history; rerun without lean mode");
    }

    auto note = [&report](const std::string& msg) {
        if (report.violations.size() < kViolationCap) {
            report.violations.push_back(msg);
        } else {
            ++report.truncated;
        }
    };
    auto num = [](double v) { return format_double(v); };

    const double alpha1 = params.alpha1;
    const double eps = std::numeric_limits<double>::epsilon();

    // Per-update arithmetic: theta range, step-size floor, slot-increment
    // cap, weight-ratio envelope, shared coupling weight.
    struct SlotAgentState {
        int count = 0;
        int last_n = 0;
    };
    int cur_slot = -1;
    double slot_xi = 0.0;
    double slot_final_alpha = 0.0;
    bool slot_final_seen = false;
    std::vector<SlotAgentState> per_agent(static_cast<std::size_t>(p.num_agents()));

    auto flush_slot = [&](int m) {
        for (int i = 0; i < p.num_agents(); ++i) {
            auto& st = per_agent[static_cast<std::size_t>(i)];
            if (st.count == 0) continue;
            const int P = sched.P(i, m);
            if (st.count != P || st.last_n != P) {
                note("slot " + std::to_string(m) + " agent " + std::to_string(i) +
                     ": expected " + std::to_string(P) + " contiguous actions, saw " +
                     std::to_string(st.count));
            }
            // telescoping: the intra-slot weights must land exactly on the
            // next slot-start weight
            const double inv_final = inv_alpha_intra(m, P, P, alpha1);
            const double inv_next = inv_alpha_slot_end(m + 1, alpha1);
            const double tol = std::max(1e-12, 4.0 * eps * (std::abs(inv_next) + 1.0));
            if (std::abs(inv_final - inv_next) > tol) {
                note("slot " + std::to_string(m) + " agent " + std::to_string(i) +
                     ": weight telescoping drift " + num(inv_final - inv_next));
            }
            st = SlotAgentState{};
        }
        slot_final_seen = false;
    };

    for (const auto& u : trace.updates) {
        ++report.updates_checked;
        if (u.slot != cur_slot) {
            if (cur_slot > 0) flush_slot(cur_slot);
            cur_slot = u.slot;
            slot_xi = u.xi;
        }
        const int m = u.slot;
        const auto& agent = p.agents[static_cast<std::size_t>(u.agent)];

        if (!(u.theta > 0.0 && u.theta < 1.0)) {
            note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                 ": theta " + num(u.theta) + " outside (0,1)");
        }
        if (u.xi != slot_xi) {
            note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                 ": coupling weight " + num(u.xi) + " differs from the slot's " + num(slot_xi));
        }
        const double eta_xi = u.eta * static_cast<double>(u.P) * u.xi;
        if (std::abs(eta_xi - 1.0) > 8.0 * eps) {
            note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                 ": eta * P * coupling = " + num(eta_xi) + " is not 1");
        }
        {
            const double inv_eta = 1.0 / u.eta;
            const double floor_val =
                agent.smooth->lipschitz() + params.coupling * inv_alpha_slot_end(m + 2, alpha1);
            if (inv_eta < floor_val - 1e-12 * std::max(1.0, std::abs(floor_val))) {
                note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                     ": 1/eta = " + num(inv_eta) + " below floor " + num(floor_val));
            }
        }
        {
            const double cap = agent.smooth->strong_convexity() / static_cast<double>(u.P);
            const double incr = params.S(m) - params.S(m - 1);
            if (incr > cap + 1e-12 * std::max(1.0, cap)) {
                note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                     ": coupling increment " + num(incr) + " above cap " + num(cap));
            }
        }
        {
            const double ratio =
                inv_alpha_slot_end(m + 2, alpha1) / inv_alpha_intra(m, u.n, u.P, alpha1);
            if (!(ratio > 1.0) || ratio > params.Pi * (1.0 + 1e-12)) {
                note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                     ": weight ratio " + num(ratio) + " outside (1, " + num(params.Pi) + "]");
            }
        }
        auto& st = per_agent[static_cast<std::size_t>(u.agent)];
        if (u.n != st.last_n + 1) {
            note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                 ": action index " + std::to_string(u.n) + " after " + std::to_string(st.last_n));
        }
        st.last_n = u.n;
        ++st.count;
        if (u.n == u.P) {
            if (!slot_final_seen) {
                slot_final_alpha = u.alpha;
                slot_final_seen = true;
            } else if (u.alpha != slot_final_alpha) {
                // every agent must end the slot on the bit-identical weight
                note("slot " + std::to_string(m) + " agent " + std::to_string(u.agent) +
                     ": end-of-slot weight " + num(u.alpha) + " desynchronized from " +
                     num(slot_final_alpha));
            }
        }
    }
    if (cur_slot > 0) flush_slot(cur_slot);

    // Idle ticks must copy state verbatim, and the last action of a tick must
    // be exactly the state recorded for the next tick.
    {
        std::size_t up = 0;
        const long first = trace.first_tick;
        std::vector<bool> acted(static_cast<std::size_t>(p.num_agents()));
        for (std::size_t k = 1; k < trace.tick_states.size(); ++k) {
            ++report.ticks_checked;
            const long t = first + static_cast<long>(k) - 1;
            std::fill(acted.begin(), acted.end(), false);
            const UpdateRecord* last_here = nullptr;
            while (up < trace.updates.size() && trace.updates[up].tick == t) {
                acted[static_cast<std::size_t>(trace.updates[up].agent)] = true;
                last_here = &trace.updates[up];
                ++up;
            }
            const Vec& prev = trace.tick_states[k - 1];
            const Vec& cur = trace.tick_states[k];
            for (int i = 0; i < p.num_agents(); ++i) {
                if (acted[static_cast<std::size_t>(i)]) continue;
                const Eigen::Index off = p.agent_offset(i);
                const Eigen::Index ni = p.agent_dim(i);
                if (!bits_equal(prev.segment(off, ni), cur.segment(off, ni))) {
                    note("tick " + std::to_string(t) + " agent " + std::to_string(i) +
                         ": idle state not carried over bit-exactly");
                }
            }
            if (last_here != nullptr && !bits_equal(last_here->x_after, cur)) {
                note("tick " + std::to_string(t) + ": recorded post-update state disagrees with the tick state");
            }
        }
    }

    if (level == DebugLevel::Full) {
        // Movement inequalities linking boundary states to per-tick steps.
        const long first = trace.first_tick;
        auto step_sq = [&](long t) {
            const auto k = static_cast<std::size_t>(t - first);
            return (trace.tick_states[k + 1] - trace.tick_states[k]).squaredNorm();
        };
        for (const auto& b : trace.boundaries) {
            if (b.slot == 0) continue;
            const int m = b.slot;
            const long t_next = b.tick;
            {
                const long tau = sched.tau(m + 1);
                double sum = 0.0;
                for (long t = std::max(tau, first); t < t_next; ++t) sum += step_sq(t);
                const double lhs = (b.x - trace.state_at(tau)).squaredNorm();
                const double rhs = static_cast<double>(sched.cfg.D) * sum;
                if (lhs > rhs * (1.0 + 1e-12)) {
                    note("boundary " + std::to_string(m + 1) + ": delayed-state gap " + num(lhs) +
                         " above movement budget " + num(rhs));
                }
            }
            {
                const long t_m = sched.t(m);
                double sum = 0.0;
                for (long t = t_m; t < t_next; ++t) sum += step_sq(t);
                const double lhs = (b.x - trace.state_at(t_m)).squaredNorm();
                const double rhs = static_cast<double>(sched.cfg.H) * sum;
                if (lhs > rhs * (1.0 + 1e-12)) {
                    note("boundary " + std::to_string(m + 1) + ": slot movement " + num(lhs) +
                         " above budget " + num(rhs));
                }
            }
        }
        for (const auto& v : check_staleness_inequality(sched)) {
            note("slot " + std::to_string(v.slot) + " agent " + std::to_string(v.agent) +
                 ": staleness bound violated (" + v.detail + ")");
        }
    }

    return report;
}

std::string trace_to_csv(const Trace& trace) {
    const Eigen::Index dim = trace.x_init.size();
    std::string out;
    out.reserve(trace.updates.size() * static_cast<std::size_t>(dim + 8) * 18 + 1024);

    out += "slot,t,agent,event";
    for (Eigen::Index k = 0; k < dim; ++k) out += ",x" + std::to_string(k);
    out += ",F,normAx,alpha,theta,eta\n";

    auto state_cols = [&out](const Vec& x) {
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            out += ',';
            out += format_double(x[k]);
        }
    };

    std::size_t up = 0;
    for (const auto& b : trace.boundaries) {
        while (up < trace.updates.size() && trace.updates[up].slot <= b.slot) {
            const auto& u = trace.updates[up];
            out += std::to_string(u.slot);
            out += ',' + std::to_string(u.tick);
            out += ',' + std::to_string(u.agent);
            out += ",update";
            state_cols(u.x_after);
            out += ',' + format_double(u.F);
            out += ',' + format_double(u.normAx);
            out += ',' + format_double(u.alpha);
            out += ',' + format_double(u.theta);
            out += ',' + format_double(u.eta);
            out += '\n';
            ++up;
        }
        out += std::to_string(b.slot);
        out += ',' + std::to_string(b.tick);
        out += ",-1,";
        out += b.slot == 0 ? "init" : "boundary";
        state_cols(b.x);
        out += ',' + format_double(b.F);
        out += ',' + format_double(b.normAx);
        out += ",,,\n";
    }
    return out;
}

} // namespace asynppg
