// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace asynppg {

// All step-size and penalty quantities come from closed forms, never from
// the recursions they satisfy, so long runs cannot drift; the recursion
// identities are then asserted against these values in debug mode.
//
// Inverse forms are the primitives: 1/alpha(t_m - 1) = 1/alpha1 + (m - 1) is
// exact integer arithmetic for alpha1 = 1, which is what makes the
// telescoping and synchronization checks hold to 1e-12 and better.

double inv_alpha_slot_end(int m, double alpha1);
double alpha_slot_end(int m, double alpha1); // alpha1 / ((m-1) alpha1 + 1)

double inv_alpha_intra(int m, int n, int P_im, double alpha1);
double alpha_intra(int m, int n, int P_im, double alpha1); // 1 / (n/P + 1/alpha1 + m - 1)

// Upper bound on alpha_i(t_m^(n)) / alpha(t_{m+2} - 1): (2 alpha1 + 1) / (alpha1/H + 1).
double pi_bound(double alpha1, int H);

// Right endpoint of the admissible penalty-growth interval:
// (mu/H - maxDeltaQ) / (2 (H+D) Pi ||A||^2). Returns +inf when ||A|| = 0
// (uncoupled problem; any beta works and the engine defaults to 1).
double beta_max(double mu, int H, int D, double Pi, double normA, double maxDeltaQ);

// Step size at any action of a slot-m agent with P actions in the slot:
// 1 / (P (Q_m + 2 (H+D) beta Pi ||A||^2 / alpha(t_{m+2}-1))).
double eta_step(int m, int P_im, double Q_m, double beta, double Pi, double normA, double Lg,
                int H, int D, double alpha1);

// Resolved per-run parameter table. Q is indexed 0..num_slots (Q_0 initializes
// the common sequence Xi and defaults to Q_1).
struct ParamSchedule {
    double alpha1 = 1.0;
    double beta = 1.0;
    bool beta_was_auto = false;
    std::vector<double> Q;

    int H = 1;
    int D = 1;
    int num_slots = 1;
    double normA = 0.0;
    double Lg = 0.0;
    double mu = 0.0;

    double Pi = 1.0;
    double coupling = 0.0; // 2 (H+D) beta Pi ||A||^2
    double beta_cap = 0.0; // +inf sentinel when ||A|| = 0
    double max_delta_Q = 0.0;

    std::vector<std::string> warnings;

    double Q_at(int m) const { return Q[static_cast<std::size_t>(m)]; }
    // Common per-slot factor S_m = Q_m + coupling * (1/alpha1 + m + 1); every
    // agent's step in slot m is 1/(P_{i,m} S_m), which is what makes the
    // shared sequence Xi_{m+1} = S_m identical across agents by construction.
    double S(int m) const;
    double eta(int m, int P_im) const { return 1.0 / (static_cast<double>(P_im) * S(m)); }
    double penalty_coeff(int m) const; // beta / alpha(t_{m+1} - 1)
    double xi(int m) const { return S(m - 1); } // Xi_m, m >= 1
};

// Q_spec: empty vector = uniform L^g; single value = uniform; length
// num_slots = per-slot with Q_0 := Q_1 prepended; length num_slots + 1 = full.
// beta <= 0 or NaN selects "auto" (the cap, or 1 when uncoupled).
ParamSchedule make_param_schedule(int H, int D, int num_slots, double alpha1, double beta,
                                  const std::vector<double>& Q_spec, double normA, double Lg,
                                  double mu);

} // namespace asynppg
