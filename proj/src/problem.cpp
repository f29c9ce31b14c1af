// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/problem.hpp"

#include <cmath>
#include <limits>

#include "asynppg/errors.hpp"

namespace asynppg {

AgentObjective::AgentObjective(std::shared_ptr<const SmoothFn> s, std::shared_ptr<const ProxFn> p)
    : smooth(std::move(s)), prox(std::move(p)) {
    if (!smooth || !prox) throw Error(ErrorCode::InvalidConfig, "agent parts must be non-null");
    dim = smooth->dimension();
    if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "agent dimension must be positive");
    if (prox->dimension() >= 0 && prox->dimension() != dim)
        throw Error(ErrorCode::DimensionMismatch, "smooth and proximable dimensions disagree");
}

int ConstraintMatrix::total_cols() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.cols());
    return n;
}

Mat ConstraintMatrix::dense() const {
    Mat a(rows, total_cols());
    int col = 0;
    for (const auto& b : blocks) {
        a.middleCols(col, b.cols()) = b;
        col += static_cast<int>(b.cols());
    }
    return a;
}

int ProblemInstance::total_dim() const {
    int n = 0;
    for (const auto& ag : agents) n += ag.dim;
    return n;
}

int ProblemInstance::agent_offset(int i) const {
    int off = 0;
    for (int k = 0; k < i; ++k) off += agents[static_cast<std::size_t>(k)].dim;
    return off;
}

Vec ProblemInstance::apply_Wi(const Vec& x, int i) const {
    Vec out = Vec::Zero(agent_dim(i));
    for (const auto& [j, wij] : W[static_cast<std::size_t>(i)])
        out.noalias() += wij * x.segment(agent_offset(j), agent_dim(j));
    return out;
}

Vec ProblemInstance::apply_A(const Vec& x) const {
    Vec out = Vec::Zero(constraint.rows);
    int col = 0;
    for (const auto& b : constraint.blocks) {
        out.noalias() += b * x.segment(col, b.cols());
        col += static_cast<int>(b.cols());
    }
    return out;
}

ProblemInstance assemble_problem(std::vector<AgentObjective> agents, ConstraintMatrix A) {
    if (agents.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one agent");
    if (A.blocks.size() != agents.size())
        throw Error(ErrorCode::DimensionMismatch, "constraint block count != agent count");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (A.blocks[i].rows() != A.rows)
            throw Error(ErrorCode::DimensionMismatch, "constraint block row count != B");
        if (A.blocks[i].cols() != agents[i].dim)
            throw Error(ErrorCode::DimensionMismatch, "constraint block width != agent dimension");
        if (!(agents[i].smooth->strong_convexity() > 0.0))
            throw Error(ErrorCode::NonStronglyConvexAgent,
                        "agent " + std::to_string(i) + " has mu <= 0");
    }

    ProblemInstance p;
    p.agents = std::move(agents);
    p.constraint = std::move(A);
    p.norm_A = spectral_norm(p.constraint);
    p.Lg = 0.0;
    p.mu = std::numeric_limits<double>::infinity();
    for (const auto& ag : p.agents) {
        p.Lg = std::max(p.Lg, ag.smooth->lipschitz());
        p.mu = std::min(p.mu, ag.smooth->strong_convexity());
    }

    const int n = p.num_agents();
    p.W.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Mat ait = p.constraint.blocks[static_cast<std::size_t>(i)].transpose();
        for (int j = 0; j < n; ++j) {
            Mat wij = ait * p.constraint.blocks[static_cast<std::size_t>(j)];
            if (wij.cwiseAbs().maxCoeff() != 0.0)
                p.W[static_cast<std::size_t>(i)].emplace_back(j, std::move(wij));
        }
    }
    return p;
}

double global_objective(const ProblemInstance& p, const Vec& x) {
    if (x.size() != p.total_dim()) throw Error(ErrorCode::DimensionMismatch, "state length != N*M");
    double total = 0.0;
    int off = 0;
    for (const auto& ag : p.agents) {
        const Vec xi = x.segment(off, ag.dim);
        const double hv = ag.prox->evaluate(xi);
        if (std::isinf(hv)) return std::numeric_limits<double>::infinity();
        total += ag.smooth->evaluate(xi) + hv;
        off += ag.dim;
    }
    return total;
}

std::pair<Vec, double> constraint_residual(const ProblemInstance& p, const Vec& x) {
    if (x.size() != p.total_dim()) throw Error(ErrorCode::DimensionMismatch, "state length != N*M");
    Vec ax = p.apply_A(x);
    return {ax, ax.norm()};
}

double spectral_norm(const ConstraintMatrix& A) {
    if (A.rows == 0 || A.total_cols() == 0) return 0.0;
    const Mat a = A.dense();
    const double lam = spd_lambda_max(a.transpose() * a);
    return std::sqrt(std::max(lam, 0.0));
}

nlohmann::json problem_to_json(const ProblemInstance& p) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& ag : p.agents)
        agents.push_back({{"dim", ag.dim}, {"smooth", ag.smooth->to_json()}, {"prox", ag.prox->to_json()}});

    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : p.constraint.blocks) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(b(r, c));
            rows.push_back(std::move(row));
        }
        blocks.push_back(std::move(rows));
    }
    nlohmann::json a = {{"B", p.constraint.rows}, {"blocks", std::move(blocks)}};
    if (!p.constraint.edges.empty()) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [i, j] : p.constraint.edges) edges.push_back({i, j});
        a["edges"] = std::move(edges);
        a["block_dim"] = p.constraint.block_dim;
    }

    return {{"agents", std::move(agents)},
            {"A", std::move(a)},
            {"derived", {{"norm_A", p.norm_A}, {"Lg", p.Lg}, {"mu", p.mu}}}};
}

ProblemInstance problem_from_json(const nlohmann::json& j) {
    std::vector<AgentObjective> agents;
    for (const auto& ja : j.at("agents")) {
        AgentObjective ag(smooth_from_json(ja.at("smooth")), prox_from_json(ja.at("prox")));
        if (ja.contains("dim") && ja.at("dim").get<int>() != ag.dim)
            throw Error(ErrorCode::ParseError, "agent dim field disagrees with smooth part");
        agents.push_back(std::move(ag));
    }

    const auto& jA = j.at("A");
    ConstraintMatrix A;
    A.rows = jA.at("B").get<int>();
    for (const auto& jb : jA.at("blocks")) {
        const auto rows = jb.size();
        const auto cols = rows ? jb.at(0).size() : 0;
        Mat b(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            if (jb.at(r).size() != cols) throw Error(ErrorCode::ParseError, "ragged constraint block");
            for (std::size_t c = 0; c < cols; ++c) b(r, c) = jb.at(r).at(c).get<double>();
        }
        if (static_cast<int>(rows) != A.rows) throw Error(ErrorCode::ParseError, "block height != B");
        A.blocks.push_back(std::move(b));
    }
    if (jA.contains("edges")) {
        for (const auto& je : jA.at("edges"))
            A.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
        A.block_dim = jA.at("block_dim").get<int>();
    }

    ProblemInstance p = assemble_problem(std::move(agents), std::move(A));

    if (j.contains("derived")) {
        const auto& d = j.at("derived");
        const auto close = [](double a, double b) {
            return std::abs(a - b) <= 1e-10 * std::max({1.0, std::abs(a), std::abs(b)});
        };
        if (!close(d.at("norm_A").get<double>(), p.norm_A) || !close(d.at("Lg").get<double>(), p.Lg) ||
            !close(d.at("mu").get<double>(), p.mu))
            throw Error(ErrorCode::ParseError, "stored derived constants disagree with recomputation");
    }
    return p;
}

} // namespace asynppg
