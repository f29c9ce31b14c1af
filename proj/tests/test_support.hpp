// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdlib>
#include <utility>

#include "asynppg/errors.hpp"
#include "asynppg/rng.hpp"
#include "asynppg/types.hpp"

namespace asynppg::testing {

// True iff fn() throws an asynppg Error carrying exactly the wanted code.
template <class Fn>
bool throws_code(Fn&& fn, ErrorCode want) {
    try {
        std::forward<Fn>(fn)();
    } catch (const Error& e) {
        return e.code() == want;
    } catch (...) {
        return false;
    }
    return false;
}

inline Vec random_vec(Rng& rng, int n, double scale = 1.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

// |a - b| <= rtol * max(|a|, |b|, floor). The floor keeps comparisons near
// zero from demanding exact equality.
inline bool close_rel(double a, double b, double rtol, double floor = 1.0) {
    return std::abs(a - b) <= rtol * std::max({std::abs(a), std::abs(b), floor});
}

} // namespace asynppg::testing
