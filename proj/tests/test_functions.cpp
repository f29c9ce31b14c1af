// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <memory>

#include <doctest.h>
#include <Eigen/Dense>

#include "asynppg/errors.hpp"
#include "asynppg/functions.hpp"
#include "test_support.hpp"

using namespace asynppg;
using asynppg::testing::close_rel;
using asynppg::testing::random_vec;
using asynppg::testing::throws_code;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec scalar(double v) {
    Vec x(1);
    x(0) = v;
    return x;
}
} // namespace

TEST_CASE("soft threshold hits the hand-checked points") {
    CHECK(prox_l1(Vec::Zero(3), 5.0, 1.0).isZero(0.0));
    CHECK(prox_l1(scalar(3.0), 1.0, 1.0)(0) == 2.0);
    CHECK(prox_l1(scalar(-0.5), 1.0, 1.0)(0) == 0.0);
    CHECK(prox_l1(scalar(-3.0), 1.0, 1.0)(0) == -2.0);
}

TEST_CASE("soft threshold rejects nonpositive steps") {
    CHECK(throws_code([] { prox_l1(scalar(1.0), 1.0, 0.0); }, ErrorCode::NonPositiveStep));
    CHECK(throws_code([] { prox_l1(scalar(1.0), 1.0, -2.0); }, ErrorCode::NonPositiveStep));
}

TEST_CASE("soft threshold satisfies the subgradient optimality conditions") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const double u = 10.0 * rng.normal();
        const double w = std::abs(rng.normal());
        const double a = 0.01 + 2.0 * rng.uniform();
        const double v = prox_l1(scalar(u), w, a)(0);
        const double scale = std::max(1.0, std::abs(u));
        if (v > 0.0) {
            CHECK(std::abs((u - v) - a * w) <= 1e-12 * scale);
        } else if (v < 0.0) {
            CHECK(std::abs((u - v) + a * w) <= 1e-12 * scale);
        } else {
            CHECK(std::abs(u) <= a * w * (1.0 + 1e-12) + 1e-300);
        }
    }
}

TEST_CASE("box projection clamps and ignores the step") {
    Vec lo = scalar(0.0), hi = scalar(179.1);
    CHECK(prox_box(scalar(50.0), lo, hi, 1.0)(0) == 50.0);
    CHECK(prox_box(scalar(200.0), lo, hi, 0.1)(0) == 179.1);
    CHECK(prox_box(scalar(200.0), lo, hi, 7.0)(0) == 179.1);
    CHECK(prox_box(scalar(-5.0), scalar(0.0), scalar(kInf), 1.0)(0) == 0.0);
}

TEST_CASE("empty boxes are rejected") {
    CHECK(throws_code([] { BoxProx(scalar(2.0), scalar(1.0)); }, ErrorCode::EmptyBox));
    CHECK(throws_code([] { prox_box(scalar(0.0), scalar(2.0), scalar(1.0), 1.0); },
                      ErrorCode::EmptyBox));
}

TEST_CASE("box indicator evaluates to 0 inside and +inf outside") {
    BoxProx box(scalar(0.0), scalar(1.0));
    CHECK(box.evaluate(scalar(0.5)) == 0.0);
    CHECK(box.evaluate(scalar(1.5)) == kInf);
    CHECK(box.evaluate(scalar(-0.1)) == kInf);
}

TEST_CASE("capped utility gradient matches the piecewise form") {
    const double nu = 17.17, sig = 0.0935;
    CHECK(grad_capped_utility(0.0, nu, sig) == -nu);
    CHECK(grad_capped_utility(nu / (2.0 * sig), nu, sig) == 0.0);
    CHECK(grad_capped_utility(nu / (2.0 * sig) + 50.0, nu, sig) == 0.0);
    // Interior slope at the first user's market optimum: 2*0.0935*55.51 - 17.17.
    CHECK(std::abs(grad_capped_utility(55.51, nu, sig) - (-6.78963)) <= 1e-5);
}

TEST_CASE("capped utility smooth part is C1 at the kink with a flat tail") {
    CappedUtilitySmooth f(17.17, 0.0935);
    const double kink = f.kink();
    const double tail = -17.17 * 17.17 / (4.0 * 0.0935);
    CHECK(close_rel(f.evaluate(scalar(kink)), tail, 1e-12, std::abs(tail)));
    CHECK(f.evaluate(scalar(kink + 30.0)) == f.evaluate(scalar(kink + 1.0)));
    const double h = 1e-7;
    CHECK(std::abs(f.evaluate(scalar(kink + h)) - f.evaluate(scalar(kink - h))) <= 1e-9);
    CHECK(std::abs(f.gradient(scalar(kink + h))(0) - f.gradient(scalar(kink - h))(0)) <= 1e-5);
    CHECK(f.lipschitz() == 2.0 * 0.0935);
    CHECK(f.strong_convexity() == 2.0 * 0.0935);
}

TEST_CASE("capped utility gradient via finite differences") {
    CappedUtilitySmooth f(12.28, 0.0417);
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = 200.0 * rng.uniform();
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        const double fd = (f.evaluate(scalar(x + h)) - f.evaluate(scalar(x - h))) / (2.0 * h);
        const double g = f.gradient(scalar(x))(0);
        // The kink makes the two-sided difference off by O(h) right at the cap.
        CHECK(std::abs(fd - g) <= 1e-4 * std::max(1.0, std::abs(g)));
    }
}

TEST_CASE("capped utility gradient is 2-sigma Lipschitz") {
    CappedUtilitySmooth f(18.42, 0.1007);
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const double u = 300.0 * (rng.uniform() - 0.25);
        const double v = 300.0 * (rng.uniform() - 0.25);
        const double dg = std::abs(f.gradient(scalar(u))(0) - f.gradient(scalar(v))(0));
        CHECK(dg <= 2.0 * 0.1007 * std::abs(u - v) * (1.0 + 1e-12) + 1e-300);
    }
}

TEST_CASE("quadratic smooth part: gradient, curvature bounds, eigen oracle") {
    Rng rng(55);
    const int n = 6;
    Mat R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.normal();
    const Mat Q = R.transpose() * R + Mat::Identity(n, n);
    const Vec c = random_vec(rng, n);
    QuadraticSmooth f(Q, c, 0.75);

    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    CHECK(close_rel(f.lipschitz(), es.eigenvalues().maxCoeff(), 1e-8));
    CHECK(close_rel(f.strong_convexity(), es.eigenvalues().minCoeff(), 1e-8));

    for (int trial = 0; trial < 100; ++trial) {
        const Vec x = random_vec(rng, n, 2.0);
        const Vec g = f.gradient(x);
        CHECK((g - (Q * x + c)).norm() <= 1e-12 * std::max(1.0, g.norm()));
        for (int k = 0; k < n; ++k) {
            Vec xp = x, xm = x;
            const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
            xp(k) += h;
            xm(k) -= h;
            const double fd = (f.evaluate(xp) - f.evaluate(xm)) / (2.0 * h);
            CHECK(std::abs(fd - g(k)) <= 1e-5 * std::max(1.0, std::abs(g(k))));
        }
    }
}

TEST_CASE("smoothness and strong convexity hold on random pairs") {
    Rng rng(56);
    const int n = 4;
    Mat R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.normal();
    const Mat Q = R.transpose() * R + 0.5 * Mat::Identity(n, n);
    QuadraticSmooth f(Q, Vec::Zero(n), 0.0);
    const double L = f.lipschitz();
    const double mu = f.strong_convexity();
    for (int trial = 0; trial < 100; ++trial) {
        const Vec u = random_vec(rng, n, 3.0);
        const Vec v = random_vec(rng, n, 3.0);
        CHECK((f.gradient(u) - f.gradient(v)).norm() <= L * (u - v).norm() * (1.0 + 1e-9));
        const double lower = f.evaluate(u) + f.gradient(u).dot(v - u) +
                             0.5 * mu * (v - u).squaredNorm();
        CHECK(f.evaluate(v) >= lower - 1e-9 * std::max(1.0, std::abs(f.evaluate(v))));
    }
}

TEST_CASE("numeric prox oracle hits its closed-form anchors") {
    CHECK(std::abs(prox_numeric_1d([](double) { return 0.0; }, 1.7, 0.9, -10.0, 10.0) - 1.7) <=
          1e-9);
    CHECK(std::abs(prox_numeric_1d([](double v) { return std::abs(v); }, 3.0, 1.0, -5.0, 5.0) -
                   2.0) <= 1e-8);
    // Indicator of [0,1] realized through the bracket: h is zero on it.
    CHECK(std::abs(prox_numeric_1d([](double) { return 0.0; }, 2.0, 1.0, 0.0, 1.0) - 1.0) <= 1e-8);
}

TEST_CASE("numeric prox oracle rejects concave integrands") {
    CHECK(throws_code(
        [] { prox_numeric_1d([](double v) { return -v * v; }, 0.3, 1.0, -4.0, 4.0); },
        ErrorCode::BracketNotConvex));
}

TEST_CASE("closed-form proxes agree with the numeric oracle on random triples") {
    Rng rng(202);
    for (int trial = 0; trial < 1000; ++trial) {
        const double u = 8.0 * rng.normal();
        const double w = std::abs(rng.normal()) + 1e-3;
        const double a = 0.01 + 3.0 * rng.uniform();
        const double closed = prox_l1(scalar(u), w, a)(0);
        const double lo = std::min(u, 0.0) - a * w - 1.0;
        const double hi = std::max(u, 0.0) + a * w + 1.0;
        const double numeric =
            prox_numeric_1d([w](double v) { return w * std::abs(v); }, u, a, lo, hi);
        CHECK(std::abs(closed - numeric) <= 1e-8);
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const double b1 = 3.0 * rng.normal(), b2 = 3.0 * rng.normal();
        const double lo = std::min(b1, b2), hi = std::max(b1, b2);
        const double u = 8.0 * rng.normal();
        const double a = 0.01 + 3.0 * rng.uniform();
        const double closed = prox_box(scalar(u), scalar(lo), scalar(hi), a)(0);
        const double numeric = prox_numeric_1d([](double) { return 0.0; }, u, a, lo, hi);
        CHECK(std::abs(closed - numeric) <= 1e-8);
    }
}

TEST_CASE("every prox is firmly nonexpansive on random pairs") {
    Rng rng(303);
    WeightedL1Prox l1(1.3);
    BoxProx box(scalar(-0.7), scalar(2.1));
    ZeroProx zero;
    const ProxFn* proxes[] = {&l1, &box, &zero};
    for (const ProxFn* h : proxes) {
        for (int trial = 0; trial < 1000; ++trial) {
            const Vec u = scalar(6.0 * rng.normal());
            const Vec v = scalar(6.0 * rng.normal());
            const double a = 0.01 + 2.0 * rng.uniform();
            const Vec pu = h->prox(u, a);
            const Vec pv = h->prox(v, a);
            const double lhs = (pu - pv).squaredNorm();
            const double rhs = (pu - pv).dot(u - v);
            CHECK(lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("prox outputs land inside the indicator domain") {
    Rng rng(404);
    BoxProx box(scalar(0.0), scalar(113.23));
    for (int trial = 0; trial < 200; ++trial) {
        const Vec u = scalar(500.0 * rng.normal());
        CHECK(box.evaluate(box.prox(u, 1.0)) == 0.0);
    }
}

TEST_CASE("function kinds round-trip through json") {
    Rng rng(505);
    Mat Q(2, 2);
    Q << 3.0, 0.5, 0.5, 2.0;
    Vec c(2);
    c << -1.0, 0.25;
    QuadraticSmooth quad(Q, c, 1.5);
    auto quad2 = smooth_from_json(quad.to_json());
    CappedUtilitySmooth cap(12.28, 0.0417);
    auto cap2 = smooth_from_json(cap.to_json());
    for (int trial = 0; trial < 25; ++trial) {
        const Vec x = random_vec(rng, 2, 2.0);
        CHECK(quad.evaluate(x) == quad2->evaluate(x));
        CHECK((quad.gradient(x) - quad2->gradient(x)).norm() == 0.0);
        const Vec y = scalar(100.0 * rng.uniform());
        CHECK(cap.evaluate(y) == cap2->evaluate(y));
    }

    WeightedL1Prox l1(2.0);
    auto l12 = prox_from_json(l1.to_json());
    BoxProx box(scalar(0.0), scalar(kInf));
    auto box2 = prox_from_json(box.to_json());
    for (int trial = 0; trial < 25; ++trial) {
        const Vec u = scalar(10.0 * rng.normal());
        CHECK(l1.prox(u, 0.7)(0) == l12->prox(u, 0.7)(0));
        CHECK(box.prox(u, 0.7)(0) == box2->prox(u, 0.7)(0));
    }

    CHECK(throws_code([] { smooth_from_json({{"kind", "mystery"}}); }, ErrorCode::ParseError));
    CHECK(throws_code([] { prox_from_json({{"kind", "mystery"}}); }, ErrorCode::ParseError));
}

TEST_CASE("slack regularizer provides strictly positive curvature") {
    auto slack = make_slack_smooth(3, 1e-6);
    CHECK(slack->strong_convexity() > 0.0);
    CHECK(close_rel(slack->strong_convexity(), 2e-6, 1e-9, 1e-12));
    CHECK(slack->dimension() == 3);
}
