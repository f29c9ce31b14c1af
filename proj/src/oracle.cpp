// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include "asynppg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

#include "asynppg/errors.hpp"
#include "asynppg/functions.hpp"

namespace asynppg {

namespace {

// Local soft threshold so the oracle does not lean on the library's prox
// implementations (those sit on the simulator's update path).
double soft_threshold(double u, double w) {
    if (u > w) return u - w;
    if (u < -w) return u + w;
    return 0.0;
}

double market_supply_minus_demand(const MarketInstance& m, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.kappa.size(); ++i) {
        s += std::clamp((p - m.xi[i]) / (2.0 * m.kappa[i]), 0.0, m.uc_cap[i]);
    }
    for (std::size_t j = 0; j < m.nu.size(); ++j) {
        s -= std::clamp((m.nu[j] - p) / (2.0 * m.varsigma[j]), 0.0, m.user_cap[j]);
    }
    return s;
}

} // namespace

SaddleReference market_kkt_solve(const MarketInstance& m) {
    // The net supply curve is continuous and nondecreasing in the price, so a
    // sign change over the bracket pins the clearing price for bisection.
    double lo = *std::min_element(m.xi.begin(), m.xi.end()) - 1.0;
    double hi = *std::max_element(m.nu.begin(), m.nu.end()) + 1.0;
    double glo = market_supply_minus_demand(m, lo);
    double ghi = market_supply_minus_demand(m, hi);
    if (glo > 0.0 || ghi < 0.0) {
        throw Error(ErrorCode::NoMarketClearing, "net supply does not change sign over the price bracket");
    }
    double p = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        p = 0.5 * (lo + hi);
        double g = market_supply_minus_demand(m, p);
        if (g >= 0.0) {
            hi = p;
        } else {
            lo = p;
        }
    }
    p = 0.5 * (lo + hi);
    double gap = market_supply_minus_demand(m, p);
    if (std::abs(gap) > 1e-9) {
        throw Error(ErrorCode::NoMarketClearing, "bisection left a supply/demand gap above 1e-9");
    }

    const std::size_t n_uc = m.kappa.size();
    const std::size_t n_user = m.nu.size();
    SaddleReference ref;
    ref.method = "market_kkt_bisection";
    ref.price = p;
    ref.x_star.resize(static_cast<Eigen::Index>(n_uc + n_user));
    double F = 0.0;
    for (std::size_t i = 0; i < n_uc; ++i) {
        double x = std::clamp((p - m.xi[i]) / (2.0 * m.kappa[i]), 0.0, m.uc_cap[i]);
        ref.x_star[static_cast<Eigen::Index>(i)] = x;
        F += m.kappa[i] * x * x + m.xi[i] * x + m.varpi[i];
    }
    for (std::size_t j = 0; j < n_user; ++j) {
        double x = std::clamp((m.nu[j] - p) / (2.0 * m.varsigma[j]), 0.0, m.user_cap[j]);
        ref.x_star[static_cast<Eigen::Index>(n_uc + j)] = x;
        double kink = m.nu[j] / (2.0 * m.varsigma[j]);
        double utility = (x <= kink) ? m.nu[j] * x - m.varsigma[j] * x * x
                                     : kink * kink * m.varsigma[j];
        F -= utility;
    }
    ref.F_star = F;
    // Generation enters the single balance row with +1 and consumption with
    // -1; with the Lagrangian written F + <lambda, Ax>, stationarity for an
    // interior generator reads 2 kappa x + xi + lambda = 0, so lambda = -p.
    ref.lambda_star = Vec::Constant(1, -p);
    ref.has_lambda = true;
    return ref;
}

SaddleReference fista_reference(const LassoInstance& lasso, int max_iter, double tol) {
    const int n = static_cast<int>(lasso.dim);
    const std::size_t N = lasso.P.size();
    Mat G = Mat::Zero(n, n); // sum_i P_i' P_i
    Vec b = Vec::Zero(n);    // sum_i P_i' q_i
    for (std::size_t i = 0; i < N; ++i) {
        G += lasso.P[i].transpose() * lasso.P[i];
        b += lasso.P[i].transpose() * lasso.q[i];
    }
    // Step size from Eigen's symmetric eigensolver rather than our own power
    // iteration, to keep the reference independent of library numerics.
    Eigen::SelfAdjointEigenSolver<Mat> eig(G);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "eigensolver failed on the reduced LASSO Hessian");
    }
    double L = eig.eigenvalues().maxCoeff();
    if (!(L > 0.0)) {
        throw Error(ErrorCode::ConvergenceFailure, "reduced LASSO Hessian has no positive curvature");
    }
    const double step = 1.0 / L;
    const double w = lasso.rho; // centralized weight: N agents at rho/N each

    auto objective = [&](const Vec& z) {
        double v = 0.5 * z.dot(G * z) - b.dot(z);
        for (std::size_t i = 0; i < N; ++i) v += 0.5 * lasso.q[i].squaredNorm();
        return v + w * z.template lpNorm<1>();
    };
    auto prox_step = [&](const Vec& z) {
        Vec g = G * z - b;
        Vec out(n);
        for (int k = 0; k < n; ++k) out[k] = soft_threshold(z[k] - step * g[k], step * w);
        return out;
    };

    Vec x = Vec::Zero(n);
    Vec y = x;
    double t = 1.0;
    double Fx = objective(x);
    bool converged = false;
    int iters = 0;
    for (int it = 0; it < max_iter; ++it) {
        iters = it + 1;
        Vec x_next = prox_step(y);
        double F_next = objective(x_next);
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (F_next > Fx) {
            // function-value restart: drop the momentum, take a plain step
            x_next = prox_step(x);
            F_next = objective(x_next);
            t_next = 1.0;
            y = x_next;
        } else {
            y = x_next + ((t - 1.0) / t_next) * (x_next - x);
        }
        // proximal-gradient mapping at the new point decides convergence
        Vec mapped = prox_step(x_next);
        double map_norm = (x_next - mapped).norm() / step;
        x = x_next;
        Fx = F_next;
        t = t_next;
        if (map_norm <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw Error(ErrorCode::MaxIterExceeded, "accelerated solve did not reach the gradient-mapping tolerance");
    }

    SaddleReference ref;
    ref.method = "fista_restart(" + std::to_string(iters) + " iters)";
    ref.F_star = objective(x);
    ref.x_star.resize(static_cast<Eigen::Index>(N) * n);
    for (std::size_t i = 0; i < N; ++i) {
        ref.x_star.segment(static_cast<Eigen::Index>(i) * n, n) = x;
    }
    return ref;
}

Vec lasso_multiplier(const LassoInstance& lasso, const ConstraintMatrix& A, const Vec& x_star,
                     double* residual_out) {
    const int n = static_cast<int>(lasso.dim);
    const std::size_t N = lasso.P.size();
    const Eigen::Index B = A.rows;
    Mat Ad = A.dense();
    const Eigen::Index total = Ad.cols();

    // Stationarity asks for u = A' lambda with, per coordinate k of agent i
    // (g = grad f_i(x_i*), w = rho/N):
    //   x*_k > 0:  u_k  = -g_k - w
    //   x*_k < 0:  u_k  = -g_k + w
    //   x*_k = 0:  u_k in [-g_k - w, -g_k + w]
    // Minimum-norm lambda subject to that inclusion, via ADMM splitting
    // u = A' lambda against the box/equality set.
    const double w = lasso.rho / static_cast<double>(N);
    Vec box_lo(total), box_hi(total);
    for (std::size_t i = 0; i < N; ++i) {
        Vec g = lasso.P[i].transpose() * (lasso.P[i] * x_star.segment(static_cast<Eigen::Index>(i) * n, n) - lasso.q[i]);
        for (int k = 0; k < n; ++k) {
            Eigen::Index idx = static_cast<Eigen::Index>(i) * n + k;
            double xk = x_star[idx];
            if (xk > 0.0) {
                box_lo[idx] = box_hi[idx] = -g[k] - w;
            } else if (xk < 0.0) {
                box_lo[idx] = box_hi[idx] = -g[k] + w;
            } else {
                box_lo[idx] = -g[k] - w;
                box_hi[idx] = -g[k] + w;
            }
        }
    }

    const double rho_admm = 1.0;
    Mat M = Mat::Identity(B, B) + rho_admm * (Ad * Ad.transpose());
    Eigen::LDLT<Mat> solver(M);
    Vec lambda = Vec::Zero(B);
    Vec u = Vec::Zero(total);
    Vec dual = Vec::Zero(total);
    for (int it = 0; it < 20000; ++it) {
        lambda = solver.solve(rho_admm * (Ad * (u - dual)));
        Vec At_lambda = Ad.transpose() * lambda;
        Vec v = At_lambda + dual;
        for (Eigen::Index k = 0; k < total; ++k) u[k] = std::clamp(v[k], box_lo[k], box_hi[k]);
        dual += At_lambda - u;
        if ((At_lambda - u).lpNorm<Eigen::Infinity>() <= 1e-13 && it > 10) break;
    }

    // Report how far -g - A'lambda actually is from the subdifferential.
    Vec At_lambda = Ad.transpose() * lambda;
    double residual = 0.0;
    for (Eigen::Index k = 0; k < total; ++k) {
        double d = std::max(box_lo[k] - At_lambda[k], At_lambda[k] - box_hi[k]);
        residual = std::max(residual, std::max(d, 0.0));
    }
    if (residual_out != nullptr) *residual_out = residual;
    if (residual > 1e-4) {
        throw Error(ErrorCode::ResidualTooLarge, "no multiplier satisfies the stationarity inclusion to 1e-4");
    }
    return lambda;
}

double kkt_residual(const ProblemInstance& p, const Vec& x, const Vec& lambda) {
    if (x.size() != static_cast<Eigen::Index>(p.total_dim())) {
        throw Error(ErrorCode::DimensionMismatch, "state length does not match the problem");
    }
    if (lambda.size() != static_cast<Eigen::Index>(p.constraint.rows)) {
        throw Error(ErrorCode::DimensionMismatch, "multiplier length does not match the constraint rows");
    }
    double worst = 0.0;
    for (int i = 0; i < p.num_agents(); ++i) {
        const Eigen::Index off = p.agent_offset(i);
        const Eigen::Index ni = p.agent_dim(i);
        Vec xi = x.segment(off, ni);
        // v must land in the subdifferential of h_i at x_i for stationarity
        Vec v = -p.agents[static_cast<std::size_t>(i)].smooth->gradient(xi) -
                p.constraint.blocks[static_cast<std::size_t>(i)].transpose() * lambda;
        const ProxFn* h = p.agents[static_cast<std::size_t>(i)].prox.get();
        Vec dist = Vec::Zero(ni);
        if (const auto* l1 = dynamic_cast<const WeightedL1Prox*>(h)) {
            const double w = l1->weight();
            for (Eigen::Index k = 0; k < ni; ++k) {
                if (xi[k] > 0.0) {
                    dist[k] = std::abs(v[k] - w);
                } else if (xi[k] < 0.0) {
                    dist[k] = std::abs(v[k] + w);
                } else {
                    dist[k] = std::max(std::abs(v[k]) - w, 0.0);
                }
            }
        } else if (const auto* box = dynamic_cast<const BoxProx*>(h)) {
            const Vec& lo = box->lo();
            const Vec& hi = box->hi();
            for (Eigen::Index k = 0; k < ni; ++k) {
                bool at_lo = xi[k] <= lo[k];
                bool at_hi = xi[k] >= hi[k];
                if (at_lo && at_hi) {
                    dist[k] = 0.0; // pinned coordinate, any v works
                } else if (at_lo) {
                    dist[k] = std::max(v[k], 0.0);
                } else if (at_hi) {
                    dist[k] = std::max(-v[k], 0.0);
                } else {
                    dist[k] = std::abs(v[k]);
                }
            }
        } else {
            // zero prox (or anything smooth-only): subdifferential is {0}
            dist = v.cwiseAbs();
        }
        worst = std::max(worst, dist.norm());
    }
    return worst + constraint_residual(p, x).second;
}

nlohmann::json saddle_to_json(const SaddleReference& ref) {
    nlohmann::json j;
    j["x_star"] = std::vector<double>(ref.x_star.data(), ref.x_star.data() + ref.x_star.size());
    if (ref.has_lambda) {
        j["lambda_star"] =
            std::vector<double>(ref.lambda_star.data(), ref.lambda_star.data() + ref.lambda_star.size());
    }
    j["F_star"] = ref.F_star;
    j["method"] = ref.method;
    j["residuals"] = {{"constraint", ref.constraint_residual}, {"stationarity", ref.stationarity_residual}};
    if (ref.method.rfind("market", 0) == 0) j["price"] = ref.price;
    return j;
}

} // namespace asynppg
