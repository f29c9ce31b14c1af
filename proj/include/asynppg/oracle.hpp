// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "asynppg/builtin.hpp"
#include "asynppg/problem.hpp"
#include "asynppg/types.hpp"

namespace asynppg {

// Centralized solve of a built-in problem, produced without touching any of
// the simulator's update code: the values below are what runs get compared
// against.
struct SaddleReference {
    Vec x_star;
    Vec lambda_star;
    bool has_lambda = false;
    double F_star = 0.0;
    std::string method;
    double constraint_residual = 0.0;   // ||A x*||
    double stationarity_residual = 0.0; // kkt_residual at (x*, lambda*)
    double price = 0.0;                 // market clearing price (market method only)
};

// Price bisection on the scalar multiplier: find p with
// sum_i clamp((p - xi_i)/(2 kappa_i), 0, cap) = sum_j clamp((nu_j - p)/(2 varsigma_j), 0, cap).
// Returns x*, lambda* = -p (for the Lagrangian F + <lambda, Ax> with
// A = (1,1,-1,-1,-1); see the orientation note in the README), F*.
SaddleReference market_kkt_solve(const MarketInstance& m);

// Accelerated proximal gradient with function-value restart on the reduced
// problem min_z 1/2 sum_i ||P_i z - q_i||^2 + rho ||z||_1, step
// 1/lambda_max(sum P_i' P_i), stopping when the proximal-gradient mapping
// norm falls below tol. x* is z* replicated across agents.
SaddleReference fista_reference(const LassoInstance& lasso, int max_iter = 200000,
                                double tol = 1e-10);

// Least-norm multiplier for a LASSO reference point: solves the stationarity
// inclusion 0 in grad f_i(x_i*) + (rho/N) d||x_i*||_1 + A_i' lambda as a
// box-constrained least-squares over u = A' lambda. Throws ResidualTooLarge
// when the inclusion cannot be met to 1e-4 (callers then skip the bound
// certificate for that run).
Vec lasso_multiplier(const LassoInstance& lasso, const ConstraintMatrix& A, const Vec& x_star,
                     double* residual_out = nullptr);

// max_i dist(-A_i' lambda - grad f_i(x_i), dh_i(x_i)) + ||A x||; zero exactly
// at a saddle point.
double kkt_residual(const ProblemInstance& p, const Vec& x, const Vec& lambda);

nlohmann::json saddle_to_json(const SaddleReference& ref);

} // namespace asynppg
