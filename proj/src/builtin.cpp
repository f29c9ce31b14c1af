// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/builtin.hpp"

#include <cmath>

#include "asynppg/errors.hpp"
#include "asynppg/rng.hpp"

namespace asynppg {

namespace {

constexpr std::uint64_t kLassoAgentStream = 11;

} // namespace

bool GraphSpec::connected() const {
    if (N <= 0) return false;
    std::vector<int> parent(static_cast<std::size_t>(N));
    for (int v = 0; v < N; ++v) parent[static_cast<std::size_t>(v)] = v;
    const auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= N || b < 0 || b >= N || a == b) return false;
        parent[static_cast<std::size_t>(find(a))] = find(b);
    }
    const int root = find(0);
    for (int v = 1; v < N; ++v)
        if (find(v) != root) return false;
    return true;
}

GraphSpec default_lasso_graph() {
    return {5, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {3, 4}}};
}

ConstraintMatrix incidence_matrix(const GraphSpec& graph, int block_dim) {
    if (!graph.connected()) throw Error(ErrorCode::DisconnectedGraph, "consensus needs a connected graph");
    if (block_dim < 1) throw Error(ErrorCode::DimensionMismatch, "block dimension must be positive");

    const int E = static_cast<int>(graph.edges.size());
    ConstraintMatrix A;
    A.rows = E * block_dim;
    A.block_dim = block_dim;
    A.edges = graph.edges;
    A.blocks.assign(static_cast<std::size_t>(graph.N), Mat::Zero(A.rows, block_dim));
    for (int e = 0; e < E; ++e) {
        const auto [a, b] = graph.edges[static_cast<std::size_t>(e)];
        const int lo = std::min(a, b), hi = std::max(a, b);
        A.blocks[static_cast<std::size_t>(lo)].middleRows(e * block_dim, block_dim) =
            Mat::Identity(block_dim, block_dim);
        A.blocks[static_cast<std::size_t>(hi)].middleRows(e * block_dim, block_dim) =
            -Mat::Identity(block_dim, block_dim);
    }
    return A;
}

std::pair<LassoInstance, ProblemInstance> gen_lasso(std::uint64_t seed, const GraphSpec& graph,
                                                    int dim, double rho, double noise_var,
                                                    double sparsity) {
    if (dim < 1) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
    if (rho < 0.0 || noise_var < 0.0 || sparsity < 0.0 || sparsity > 1.0)
        throw Error(ErrorCode::InvalidConfig, "rho/noise_var/sparsity out of range");

    LassoInstance inst;
    inst.seed = seed;
    inst.dim = dim;
    inst.rho = rho;
    inst.noise_var = noise_var;
    inst.sparsity = sparsity;
    inst.graph = graph;

    const int N = graph.N;
    const int zeros = static_cast<int>(std::lround(sparsity * dim));
    std::vector<AgentObjective> agents;

    for (int i = 0; i < N; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt >= 64)
                throw Error(ErrorCode::ConvergenceFailure,
                            "agent " + std::to_string(i) + " kept drawing singular designs");
            Rng rng(substream_seed(seed, kLassoAgentStream + static_cast<std::uint64_t>(i), attempt));

            Mat P(dim, dim);
            for (int c = 0; c < dim; ++c)
                for (int r = 0; r < dim; ++r) P(r, c) = rng.normal();
            bool zero_column = false;
            for (int c = 0; c < dim; ++c) {
                const double norm = P.col(c).norm();
                if (norm == 0.0) {
                    zero_column = true;
                    break;
                }
                P.col(c) /= norm;
            }
            if (zero_column) {
                inst.regen_log.push_back("agent " + std::to_string(i) + ": zero column, redrawn");
                continue;
            }

            Vec xhat(dim);
            for (int k = 0; k < dim; ++k) xhat[k] = rng.normal();
            for (int k : rng.sample_without_replacement(dim, zeros)) xhat[k] = 0.0;

            Vec delta(dim);
            const double sigma = std::sqrt(noise_var);
            for (int k = 0; k < dim; ++k) delta[k] = sigma * rng.normal();

            Vec q = P * xhat + delta;

            auto smooth = std::make_shared<QuadraticSmooth>(P.transpose() * P, -(P.transpose() * q),
                                                            0.5 * q.squaredNorm());
            if (smooth->strong_convexity() < 1e-10) {
                inst.regen_log.push_back("agent " + std::to_string(i) + ": singular design, redrawn");
                continue;
            }

            inst.P.push_back(std::move(P));
            inst.q.push_back(std::move(q));
            inst.xhat.push_back(std::move(xhat));
            inst.delta.push_back(std::move(delta));
            agents.emplace_back(std::move(smooth),
                                std::make_shared<WeightedL1Prox>(rho / static_cast<double>(N)));
            break;
        }
    }

    ProblemInstance p = assemble_problem(std::move(agents), incidence_matrix(graph, dim));
    return {std::move(inst), std::move(p)};
}

std::pair<MarketInstance, ProblemInstance> market_instance() {
    MarketInstance m;
    m.kappa = {0.0031, 0.0074};
    m.xi = {8.71, 3.53};
    m.varpi = {0.0, 0.0};
    m.uc_cap = {113.23, 179.1};
    m.nu = {17.17, 12.28, 18.42};
    m.varsigma = {0.0935, 0.0417, 0.1007};
    m.user_cap = {91.79, 147.29, 91.41};

    std::vector<AgentObjective> agents;
    for (std::size_t i = 0; i < m.kappa.size(); ++i) {
        Mat Q(1, 1);
        Q(0, 0) = 2.0 * m.kappa[i];
        Vec c(1);
        c[0] = m.xi[i];
        Vec lo = Vec::Zero(1), hi(1);
        hi[0] = m.uc_cap[i];
        agents.emplace_back(std::make_shared<QuadraticSmooth>(Q, c, m.varpi[i]),
                            std::make_shared<BoxProx>(lo, hi));
    }
    for (std::size_t j = 0; j < m.nu.size(); ++j) {
        Vec lo = Vec::Zero(1), hi(1);
        hi[0] = m.user_cap[j];
        agents.emplace_back(std::make_shared<CappedUtilitySmooth>(m.nu[j], m.varsigma[j]),
                            std::make_shared<BoxProx>(lo, hi));
    }

    ConstraintMatrix A;
    A.rows = 1;
    for (int i = 0; i < 5; ++i) {
        Mat b(1, 1);
        b(0, 0) = i < 2 ? 1.0 : -1.0;
        A.blocks.push_back(b);
    }

    ProblemInstance p = assemble_problem(std::move(agents), std::move(A));
    return {std::move(m), std::move(p)};
}

std::vector<double> convergence_error(const ProblemInstance& p, const std::vector<Vec>& states,
                                      double F_star) {
    std::vector<double> gamma;
    gamma.reserve(states.size());
    for (const Vec& x : states) gamma.push_back(std::abs(global_objective(p, x) - F_star));
    return gamma;
}

} // namespace asynppg
