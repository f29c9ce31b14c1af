// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <memory>

#include <json.hpp>

#include "asynppg/types.hpp"

namespace asynppg {

// Extreme eigenvalues of a symmetric positive semidefinite matrix.
// lambda_max by power iteration with a deterministic seeded start vector,
// lambda_min by inverse power iteration (LU solve per step). Both stop when
// the Rayleigh quotient is stable to rtol, or throw ConvergenceFailure at
// the iteration cap.
double spd_lambda_max(const Mat& m, double rtol = 1e-10, int max_iter = 10000);
double spd_lambda_min(const Mat& m, double rtol = 1e-10, int max_iter = 10000);

// Smooth part of a composite objective: value, gradient, and the two
// constants (Lipschitz gradient L, strong convexity mu) the step-size and
// penalty laws consume.
class SmoothFn {
public:
    virtual ~SmoothFn() = default;
    virtual double evaluate(const Vec& x) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
    virtual double lipschitz() const = 0;
    virtual double strong_convexity() const = 0;
    virtual int dimension() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

// Proximable part: extended-real value (indicators return +inf outside their
// set) and the proximal mapping argmin_v h(v) + ||v-u||^2/(2a).
class ProxFn {
public:
    virtual ~ProxFn() = default;
    virtual double evaluate(const Vec& x) const = 0;
    virtual Vec prox(const Vec& u, double a) const = 0;
    // -1 means any dimension (separable, size-agnostic).
    virtual int dimension() const { return -1; }
    virtual nlohmann::json to_json() const = 0;
};

// 1/2 x'Qx + c'x + offset with Q symmetric PSD.
class QuadraticSmooth : public SmoothFn {
public:
    QuadraticSmooth(Mat Q, Vec c, double offset);

    double evaluate(const Vec& x) const override;
    Vec gradient(const Vec& x) const override;
    double lipschitz() const override { return lipschitz_; }
    double strong_convexity() const override { return strong_convexity_; }
    int dimension() const override { return static_cast<int>(c_.size()); }
    nlohmann::json to_json() const override;

    const Mat& Q() const { return Q_; }
    const Vec& c() const { return c_; }
    double offset() const { return offset_; }

private:
    Mat Q_;
    Vec c_;
    double offset_;
    double lipschitz_;
    double strong_convexity_;
};

// Negated capped concave utility: varsigma x^2 - nu x while x <= nu/(2 varsigma),
// constant -nu^2/(4 varsigma) beyond the kink. Scalar (dimension 1).
// L and mu are both set to 2 varsigma; the flat region has zero curvature, but
// the built-in market confines iterates to a box that ends at the kink, so the
// constants seen along any feasible trajectory are the quadratic ones.
class CappedUtilitySmooth : public SmoothFn {
public:
    CappedUtilitySmooth(double nu, double varsigma);

    double evaluate(const Vec& x) const override;
    Vec gradient(const Vec& x) const override;
    double lipschitz() const override { return 2.0 * varsigma_; }
    double strong_convexity() const override { return 2.0 * varsigma_; }
    int dimension() const override { return 1; }
    nlohmann::json to_json() const override;

    double nu() const { return nu_; }
    double varsigma() const { return varsigma_; }
    double kink() const { return nu_ / (2.0 * varsigma_); }

private:
    double nu_;
    double varsigma_;
};

// Identically zero smooth part. L = mu = 0: expressible, but problem assembly
// rejects it (the convergence theory needs mu > 0). Callers that want a slack
// block must regularize; see make_slack_smooth.
class ZeroSmooth : public SmoothFn {
public:
    explicit ZeroSmooth(int dim) : dim_(dim) {}

    double evaluate(const Vec&) const override { return 0.0; }
    Vec gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
    double lipschitz() const override { return 0.0; }
    double strong_convexity() const override { return 0.0; }
    int dimension() const override { return dim_; }
    nlohmann::json to_json() const override;

private:
    int dim_;
};

// eps * ||y||^2 regularization standing in for a slack block's zero objective,
// making it strongly convex enough for assembly. Documented perturbation.
std::shared_ptr<QuadraticSmooth> make_slack_smooth(int dim, double eps = 1e-6);

// weight * ||x||_1; prox is componentwise soft-thresholding.
class WeightedL1Prox : public ProxFn {
public:
    explicit WeightedL1Prox(double weight);

    double evaluate(const Vec& x) const override;
    Vec prox(const Vec& u, double a) const override;
    nlohmann::json to_json() const override;

    double weight() const { return weight_; }

private:
    double weight_;
};

// Indicator of the box [lo, hi] (entries may be +-inf); prox is a clamp.
class BoxProx : public ProxFn {
public:
    BoxProx(Vec lo, Vec hi);

    double evaluate(const Vec& x) const override;
    Vec prox(const Vec& u, double a) const override;
    int dimension() const override { return static_cast<int>(lo_.size()); }
    nlohmann::json to_json() const override;

    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }

private:
    Vec lo_;
    Vec hi_;
};

// h = 0; prox is the identity.
class ZeroProx : public ProxFn {
public:
    double evaluate(const Vec&) const override { return 0.0; }
    Vec prox(const Vec& u, double) const override { return u; }
    nlohmann::json to_json() const override;
};

Vec prox_l1(const Vec& u, double weight, double a);
Vec prox_box(const Vec& u, const Vec& lo, const Vec& hi, double a);
double grad_capped_utility(double x, double nu, double varsigma);

// Brute-force scalar proximal mapping: minimizes h(v) + (v-u)^2/(2a) over the
// caller-supplied bracket [lo, hi] by golden-section search to interval width
// 1e-10, then a secant polish that removes the value-comparison noise floor
// near smooth minima and pins kink minimizers. h must be convex on the
// bracket (spot-checked on a sample grid) and finite somewhere in it. Test
// oracle; never used by the solver path.
double prox_numeric_1d(const std::function<double(double)>& h, double u, double a,
                       double lo, double hi);

// Factories for the JSON kind tags "quadratic" / "capped_utility" / "zero"
// and "l1" / "box" / "zero" respectively.
std::shared_ptr<SmoothFn> smooth_from_json(const nlohmann::json& j);
std::shared_ptr<ProxFn> prox_from_json(const nlohmann::json& j);

} // namespace asynppg
