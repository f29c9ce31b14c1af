// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace asynppg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

} // namespace asynppg
