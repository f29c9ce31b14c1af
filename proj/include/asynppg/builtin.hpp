// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asynppg/problem.hpp"
#include "asynppg/types.hpp"

namespace asynppg {

struct GraphSpec {
    int N = 0;
    std::vector<std::pair<int, int>> edges; // unordered pairs, i != j

    bool connected() const;
};

// The 5-vertex consensus topology used by the built-in LASSO experiment
// (edges 0-1, 1-2, 2-3, 0-3, 3-4).
GraphSpec default_lasso_graph();

// One +-identity block row pair per edge: +I_M at the smaller endpoint, -I_M
// at the larger. A x = 0 iff all agent blocks are equal; A^T A = L (x) I_M
// with L the graph Laplacian.
ConstraintMatrix incidence_matrix(const GraphSpec& graph, int block_dim);

struct LassoInstance {
    std::uint64_t seed = 0;
    int dim = 5;
    double rho = 10.0;
    double noise_var = 1e-3;
    double sparsity = 0.6;
    GraphSpec graph;
    std::vector<Mat> P;
    std::vector<Vec> q;
    std::vector<Vec> xhat;
    std::vector<Vec> delta;
    std::vector<std::string> regen_log; // one entry per discarded singular design
};

// Per agent i (substream of `seed`): P' entries i.i.d. standard normal drawn
// agent-major then column-major, columns normalized to unit l2 norm; xhat
// standard normal with round(sparsity*dim) seed-chosen entries zeroed;
// q = P xhat + N(0, noise_var I). f_i = 1/2 ||P_i x - q_i||^2,
// h_i = (rho/N) ||x||_1, constraint from incidence_matrix.
// Designs with smallest Hessian eigenvalue below 1e-10 are discarded and
// redrawn from the agent's next substream (logged on the instance).
std::pair<LassoInstance, ProblemInstance> gen_lasso(std::uint64_t seed,
                                                    const GraphSpec& graph = default_lasso_graph(),
                                                    int dim = 5, double rho = 10.0,
                                                    double noise_var = 1e-3,
                                                    double sparsity = 0.6);

struct MarketInstance {
    // Two utility companies (suppliers), three users; all scalar blocks.
    std::vector<double> kappa, xi, varpi, uc_cap;
    std::vector<double> nu, varsigma, user_cap;
};

// The 5-participant electricity market: supplier costs kappa x^2 + xi x + varpi,
// user utilities capped concave, every block confined to [0, cap], and the
// single balance row A = (1, 1, -1, -1, -1) (supply minus demand).
std::pair<MarketInstance, ProblemInstance> market_instance();

// Per-tick convergence error |F(x(t)) - F*| over a recorded state history.
std::vector<double> convergence_error(const ProblemInstance& p, const std::vector<Vec>& states,
                                      double F_star);

} // namespace asynppg
