// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asynppg/functions.hpp"
#include "asynppg/types.hpp"

namespace asynppg {

// One agent's composite objective F_i = f_i + h_i.
struct AgentObjective {
    std::shared_ptr<const SmoothFn> smooth;
    std::shared_ptr<const ProxFn> prox;
    int dim = 0;

    AgentObjective(std::shared_ptr<const SmoothFn> s, std::shared_ptr<const ProxFn> p);
};

// Global coupling constraint A x = 0 stored as per-agent column blocks A_i
// (each B x M_i). When built from a graph the edge list is kept alongside as
// provenance; the blocks stay authoritative.
struct ConstraintMatrix {
    int rows = 0;
    std::vector<Mat> blocks;
    std::vector<std::pair<int, int>> edges; // empty unless incidence-built
    int block_dim = 0;                      // per-agent dim when incidence-built

    int total_cols() const;
    Mat dense() const;
};

// Immutable after assembly; safe for shared concurrent reads.
struct ProblemInstance {
    std::vector<AgentObjective> agents;
    ConstraintMatrix constraint;

    double norm_A = 0.0; // spectral norm of A
    double Lg = 0.0;     // max_i L_i
    double mu = 0.0;     // min_i mu_i

    // W_i = A_i^T A row-blocks, stored as the nonzero (j, A_i^T A_j) pairs so
    // the penalty gradient only ever touches neighbour blocks.
    std::vector<std::vector<std::pair<int, Mat>>> W;

    int num_agents() const { return static_cast<int>(agents.size()); }
    int total_dim() const;
    int agent_offset(int i) const;
    int agent_dim(int i) const { return agents[static_cast<std::size_t>(i)].dim; }

    // W_i x over nonzero blocks only.
    Vec apply_Wi(const Vec& x, int i) const;
    // A x assembled from blocks.
    Vec apply_A(const Vec& x) const;
};

ProblemInstance assemble_problem(std::vector<AgentObjective> agents, ConstraintMatrix A);

// Sum of f_i + h_i; +inf when an indicator part is violated.
double global_objective(const ProblemInstance& p, const Vec& x);

// (A x, ||A x||_2).
std::pair<Vec, double> constraint_residual(const ProblemInstance& p, const Vec& x);

// Largest singular value of A via power iteration on A^T A.
double spectral_norm(const ConstraintMatrix& A);

nlohmann::json problem_to_json(const ProblemInstance& p);
ProblemInstance problem_from_json(const nlohmann::json& j);

} // namespace asynppg
