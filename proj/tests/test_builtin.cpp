// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <utility>
#include <vector>

#include <doctest.h>
#include <Eigen/Dense>

#include "asynppg/builtin.hpp"
#include "asynppg/functions.hpp"
#include "asynppg/oracle.hpp"
#include "asynppg/problem.hpp"
#include "test_support.hpp"

using namespace asynppg;
using asynppg::testing::close_rel;
using asynppg::testing::throws_code;

namespace {

Mat dense_of(const ConstraintMatrix& A) {
    Mat full(A.rows, A.total_cols());
    int col = 0;
    for (const Mat& b : A.blocks) {
        full.middleCols(col, static_cast<int>(b.cols())) = b;
        col += static_cast<int>(b.cols());
    }
    return full;
}

// Laplacian-based reference for the incidence product, built from degrees and
// adjacency only (no incidence matrix involved).
Mat laplacian_kron_identity(const GraphSpec& g, int M) {
    Mat L = Mat::Zero(g.N, g.N);
    for (auto [i, j] : g.edges) {
        L(i, i) += 1.0;
        L(j, j) += 1.0;
        L(i, j) -= 1.0;
        L(j, i) -= 1.0;
    }
    Mat out = Mat::Zero(g.N * M, g.N * M);
    for (int i = 0; i < g.N; ++i)
        for (int j = 0; j < g.N; ++j)
            out.block(i * M, j * M, M, M) = L(i, j) * Mat::Identity(M, M);
    return out;
}

GraphSpec random_connected_graph(Rng& rng) {
    GraphSpec g;
    g.N = 2 + static_cast<int>(rng.below(7));
    // Random spanning tree first, then a few extra edges.
    for (int v = 1; v < g.N; ++v) {
        g.edges.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v);
    }
    const int extras = static_cast<int>(rng.below(4));
    for (int e = 0; e < extras; ++e) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.N)));
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.N)));
        if (i == j) continue;
        const auto edge = std::make_pair(std::min(i, j), std::max(i, j));
        bool dup = false;
        for (auto& ex : g.edges) {
            if (ex == edge) dup = true;
        }
        if (!dup) g.edges.push_back(edge);
    }
    return g;
}

} // namespace

TEST_CASE("two-node incidence matrix is the signed difference row") {
    GraphSpec g;
    g.N = 2;
    g.edges = {{0, 1}};
    ConstraintMatrix A = incidence_matrix(g, 1);
    REQUIRE(A.rows == 1);
    CHECK(A.blocks[0](0, 0) == 1.0);
    CHECK(A.blocks[1](0, 0) == -1.0);
}

TEST_CASE("five-agent consensus constraint matches the block layout bit-exactly") {
    const GraphSpec g = default_lasso_graph();
    REQUIRE(g.N == 5);
    const std::vector<std::pair<int, int>> want_edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {3, 4}};
    CHECK(g.edges == want_edges);
    CHECK(g.connected());

    const int M = 5;
    ConstraintMatrix A = incidence_matrix(g, M);
    Mat expected = Mat::Zero(25, 25);
    const Mat I = Mat::Identity(M, M);
    for (std::size_t e = 0; e < want_edges.size(); ++e) {
        const auto [i, j] = want_edges[e];
        expected.block(static_cast<int>(e) * M, i * M, M, M) = I;
        expected.block(static_cast<int>(e) * M, j * M, M, M) = -I;
    }
    CHECK(dense_of(A) == expected);
}

TEST_CASE("incidence product equals Laplacian kron identity on random graphs") {
    Rng rng(515);
    for (int trial = 0; trial < 100; ++trial) {
        const GraphSpec g = random_connected_graph(rng);
        const int M = 1 + static_cast<int>(rng.below(3));
        const Mat A = dense_of(incidence_matrix(g, M));
        CHECK(A.transpose() * A == laplacian_kron_identity(g, M));
    }
}

TEST_CASE("consensus vectors are exactly the incidence kernel") {
    Rng rng(616);
    const GraphSpec g = default_lasso_graph();
    ConstraintMatrix Acm = incidence_matrix(g, 2);
    const Mat A = dense_of(Acm);
    for (int trial = 0; trial < 50; ++trial) {
        Vec common = asynppg::testing::random_vec(rng, 2, 3.0);
        Vec consensus(10);
        for (int i = 0; i < 5; ++i) consensus.segment(2 * i, 2) = common;
        CHECK((A * consensus).norm() == 0.0);
        Vec skew = consensus;
        skew(3) += 0.5;
        CHECK((A * skew).norm() > 0.0);
    }
}

TEST_CASE("disconnected graphs are rejected") {
    GraphSpec g;
    g.N = 4;
    g.edges = {{0, 1}, {2, 3}};
    CHECK(!g.connected());
    CHECK(throws_code([&] { incidence_matrix(g, 1); }, ErrorCode::DisconnectedGraph));
}

TEST_CASE("lasso generation is reproducible from its seed") {
    auto [a, pa] = gen_lasso(17);
    auto [b, pb] = gen_lasso(17);
    REQUIRE(a.P.size() == b.P.size());
    for (std::size_t i = 0; i < a.P.size(); ++i) {
        CHECK(a.P[i] == b.P[i]);
        CHECK(a.q[i] == b.q[i]);
        CHECK(a.xhat[i] == b.xhat[i]);
        CHECK(a.delta[i] == b.delta[i]);
    }
    CHECK(problem_to_json(pa).dump() == problem_to_json(pb).dump());

    auto [c, pc] = gen_lasso(18);
    CHECK(a.P[0] != c.P[0]);
}

TEST_CASE("lasso design columns are unit length and data follows the model") {
    auto [lasso, p] = gen_lasso(21);
    for (int i = 0; i < 5; ++i) {
        for (int k = 0; k < lasso.dim; ++k) {
            CHECK(std::abs(lasso.P[static_cast<std::size_t>(i)].col(k).norm() - 1.0) <= 1e-12);
        }
        const Vec resid = lasso.q[static_cast<std::size_t>(i)] -
                          lasso.P[static_cast<std::size_t>(i)] * lasso.xhat[static_cast<std::size_t>(i)] -
                          lasso.delta[static_cast<std::size_t>(i)];
        CHECK(resid.norm() <= 1e-14 * std::max(1.0, lasso.q[static_cast<std::size_t>(i)].norm()));
        CHECK(lasso.delta[static_cast<std::size_t>(i)].norm() <= 1.0); // noise_var 1e-3 scale
    }
    CHECK(lasso.regen_log.empty());

    // Sparsity: round(0.6 * 5) = 3 zeroed coordinates per agent.
    for (const Vec& xh : lasso.xhat) {
        int zeros = 0;
        for (int k = 0; k < xh.size(); ++k) zeros += (xh(k) == 0.0) ? 1 : 0;
        CHECK(zeros == 3);
    }
}

TEST_CASE("noiseless dense unregularized lasso reduces to least-squares consensus") {
    auto [lasso, p] = gen_lasso(9, default_lasso_graph(), 5, 0.0, 0.0, 0.0);
    Mat G = Mat::Zero(5, 5);
    Vec b = Vec::Zero(5);
    for (int i = 0; i < 5; ++i) {
        G += lasso.P[static_cast<std::size_t>(i)].transpose() * lasso.P[static_cast<std::size_t>(i)];
        b += lasso.P[static_cast<std::size_t>(i)].transpose() * lasso.q[static_cast<std::size_t>(i)];
    }
    const Vec z = G.ldlt().solve(b);

    SaddleReference ref = fista_reference(lasso);
    for (int i = 0; i < 5; ++i) {
        CHECK((ref.x_star.segment(5 * i, 5) - z).norm() <= 1e-8 * std::max(1.0, z.norm()));
    }
}

TEST_CASE("market instance carries the published participant constants") {
    auto [mkt, p] = market_instance();
    REQUIRE(mkt.kappa.size() == 2);
    REQUIRE(mkt.nu.size() == 3);
    CHECK(mkt.kappa[0] == 0.0031);
    CHECK(mkt.xi[0] == 8.71);
    CHECK(mkt.varpi[0] == 0.0);
    CHECK(mkt.uc_cap[0] == 113.23);
    CHECK(mkt.kappa[1] == 0.0074);
    CHECK(mkt.xi[1] == 3.53);
    CHECK(mkt.uc_cap[1] == 179.1);
    CHECK(mkt.nu[0] == 17.17);
    CHECK(mkt.varsigma[0] == 0.0935);
    CHECK(mkt.user_cap[0] == 91.79);
    CHECK(mkt.nu[1] == 12.28);
    CHECK(mkt.varsigma[1] == 0.0417);
    CHECK(mkt.user_cap[1] == 147.29);
    CHECK(mkt.nu[2] == 18.42);
    CHECK(mkt.varsigma[2] == 0.1007);
    CHECK(mkt.user_cap[2] == 91.41);

    CHECK(p.num_agents() == 5);
    CHECK(close_rel(p.norm_A, std::sqrt(5.0), 1e-12));
    // Supply minus demand: +1 for generators, -1 for users.
    Vec x(5);
    x << 1.0, 1.0, 1.0, 1.0, 1.0;
    CHECK(constraint_residual(p, x).first(0) == -1.0);
}

TEST_CASE("market agents expose the expected curvature and boxes") {
    auto [mkt, p] = market_instance();
    for (int i = 0; i < 2; ++i) {
        const auto& a = p.agents[static_cast<std::size_t>(i)];
        CHECK(close_rel(a.smooth->lipschitz(), 2.0 * mkt.kappa[static_cast<std::size_t>(i)], 1e-12,
                        1e-12));
        const auto* box = dynamic_cast<const BoxProx*>(a.prox.get());
        REQUIRE(box != nullptr);
        CHECK(box->lo()(0) == 0.0);
        CHECK(box->hi()(0) == mkt.uc_cap[static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < 3; ++j) {
        const auto& a = p.agents[static_cast<std::size_t>(2 + j)];
        CHECK(a.smooth->strong_convexity() ==
              2.0 * mkt.varsigma[static_cast<std::size_t>(j)]);
        const auto* box = dynamic_cast<const BoxProx*>(a.prox.get());
        REQUIRE(box != nullptr);
        CHECK(box->hi()(0) == mkt.user_cap[static_cast<std::size_t>(j)]);
    }
    CHECK(close_rel(p.mu, 2.0 * 0.0031, 1e-12, 1e-12));
}

TEST_CASE("market objective agrees with the oracle at the optimum") {
    auto [mkt, p] = market_instance();
    SaddleReference ref = market_kkt_solve(mkt);
    CHECK(close_rel(global_objective(p, ref.x_star), ref.F_star, 1e-9, std::abs(ref.F_star)));
}

TEST_CASE("per-tick objective error series is zero on a constant optimal path") {
    auto [mkt, p] = market_instance();
    SaddleReference ref = market_kkt_solve(mkt);
    std::vector<Vec> states{ref.x_star, ref.x_star, ref.x_star};
    const std::vector<double> gamma = convergence_error(p, states, ref.F_star);
    REQUIRE(gamma.size() == 3);
    for (double g : gamma) CHECK(g <= 1e-9 * std::abs(ref.F_star));

    std::vector<Vec> off{Vec::Zero(5)};
    const std::vector<double> gamma2 = convergence_error(p, off, ref.F_star);
    CHECK(gamma2[0] == std::abs(global_objective(p, Vec::Zero(5)) - ref.F_star));
}
