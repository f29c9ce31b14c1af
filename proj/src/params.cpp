// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/params.hpp"

#include <cmath>
#include <limits>

#include "asynppg/errors.hpp"

namespace asynppg {

namespace {

void require_alpha1(double alpha1) {
    // theta = alpha_i / P < 1 needs 1/P + 1/alpha1 to stay strictly above 1/P
    // in floating point; within this range the margin is many ulps.
    if (!(alpha1 >= 1e-12) || !(alpha1 <= 1e12))
        throw Error(ErrorCode::InvalidConfig, "alpha1 must lie in [1e-12, 1e12]");
}

} // namespace

double inv_alpha_slot_end(int m, double alpha1) {
    require_alpha1(alpha1);
    if (m < 1) throw Error(ErrorCode::InvalidConfig, "slot index must be >= 1");
    return 1.0 / alpha1 + static_cast<double>(m - 1);
}

double alpha_slot_end(int m, double alpha1) {
    require_alpha1(alpha1);
    if (m < 1) throw Error(ErrorCode::InvalidConfig, "slot index must be >= 1");
    return alpha1 / (static_cast<double>(m - 1) * alpha1 + 1.0);
}

double inv_alpha_intra(int m, int n, int P_im, double alpha1) {
    if (n < 1 || n > P_im) throw Error(ErrorCode::InvalidConfig, "intra-slot index n outside [1, P]");
    return static_cast<double>(n) / static_cast<double>(P_im) + inv_alpha_slot_end(m, alpha1);
}

double alpha_intra(int m, int n, int P_im, double alpha1) {
    return 1.0 / inv_alpha_intra(m, n, P_im, alpha1);
}

double pi_bound(double alpha1, int H) {
    require_alpha1(alpha1);
    if (H < 1) throw Error(ErrorCode::InvalidConfig, "H must be >= 1");
    return (2.0 * alpha1 + 1.0) / (alpha1 / static_cast<double>(H) + 1.0);
}

double beta_max(double mu, int H, int D, double Pi, double normA, double maxDeltaQ) {
    if (normA == 0.0) return std::numeric_limits<double>::infinity();
    const double headroom = mu / static_cast<double>(H) - maxDeltaQ;
    if (!(headroom > 0.0))
        throw Error(ErrorCode::InfeasibleQSchedule, "mu/H must exceed the largest Q increment");
    return headroom / (2.0 * static_cast<double>(H + D) * Pi * normA * normA);
}

double eta_step(int m, int P_im, double Q_m, double beta, double Pi, double normA, double Lg,
                int H, int D, double alpha1) {
    if (Q_m < Lg) throw Error(ErrorCode::QBelowLipschitz, "Q_m below the gradient Lipschitz bound");
    const double coupling = 2.0 * static_cast<double>(H + D) * beta * Pi * normA * normA;
    const double S = Q_m + coupling * inv_alpha_slot_end(m + 2, alpha1);
    return 1.0 / (static_cast<double>(P_im) * S);
}

double ParamSchedule::S(int m) const {
    return Q_at(m) + coupling * inv_alpha_slot_end(m + 2, alpha1);
}

double ParamSchedule::penalty_coeff(int m) const {
    return beta * inv_alpha_slot_end(m + 1, alpha1);
}

ParamSchedule make_param_schedule(int H, int D, int num_slots, double alpha1, double beta,
                                  const std::vector<double>& Q_spec, double normA, double Lg,
                                  double mu) {
    require_alpha1(alpha1);
    if (H < 1 || D < 1 || D > H) throw Error(ErrorCode::ConstraintViolation, "need 1 <= D <= H");
    if (num_slots < 1) throw Error(ErrorCode::ConstraintViolation, "num_slots must be >= 1");
    if (!(mu > 0.0)) throw Error(ErrorCode::NonStronglyConvexAgent, "mu must be positive");

    ParamSchedule ps;
    ps.alpha1 = alpha1;
    ps.H = H;
    ps.D = D;
    ps.num_slots = num_slots;
    ps.normA = normA;
    ps.Lg = Lg;
    ps.mu = mu;
    ps.Pi = pi_bound(alpha1, H);

    const std::size_t want = static_cast<std::size_t>(num_slots) + 1;
    if (Q_spec.empty()) {
        ps.Q.assign(want, Lg);
    } else if (Q_spec.size() == 1) {
        ps.Q.assign(want, Q_spec[0]);
    } else if (Q_spec.size() == want - 1) {
        ps.Q.reserve(want);
        ps.Q.push_back(Q_spec[0]); // Q_0 := Q_1
        ps.Q.insert(ps.Q.end(), Q_spec.begin(), Q_spec.end());
    } else if (Q_spec.size() == want) {
        ps.Q = Q_spec;
    } else {
        throw Error(ErrorCode::InvalidConfig, "Q schedule must be scalar or cover every slot");
    }
    for (double q : ps.Q)
        if (q < Lg) throw Error(ErrorCode::QBelowLipschitz, "every Q_m must be >= L^g");

    ps.max_delta_Q = 0.0;
    for (std::size_t m = 1; m < ps.Q.size(); ++m)
        ps.max_delta_Q = std::max(ps.max_delta_Q, ps.Q[m] - ps.Q[m - 1]);

    ps.beta_cap = beta_max(mu, H, D, ps.Pi, normA, ps.max_delta_Q);

    if (!(beta > 0.0) || std::isnan(beta)) {
        ps.beta = std::isinf(ps.beta_cap) ? 1.0 : ps.beta_cap;
        ps.beta_was_auto = true;
    } else {
        ps.beta = beta;
        if (beta > ps.beta_cap)
            ps.warnings.push_back("beta exceeds the admissible endpoint; convergence guarantees void");
    }

    ps.coupling = 2.0 * static_cast<double>(H + D) * ps.beta * ps.Pi * normA * normA;
    return ps;
}

} // namespace asynppg
