/*
 * Copyright 2026 The stmv Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef STMV_OPTIMIZE_HPP
#define STMV_OPTIMIZE_HPP

#include <functional>

#include <Eigen/Dense>

namespace stmv {

struct BfgsOptions {
  double tol = 1e-4;        // stop when an accepted step lowers f by less than this
  int max_iter = 50;
  double grad_step = 1e-6;  // central-difference step on the transformed scale
  double max_step = 1.0;    // cap on the first step length
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient; falls back to a one-sided difference when one
/// side is not finite and to 0 when neither is.
Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double fx, double step,
                                   int* evaluations = nullptr);

/// Quasi-Newton minimisation with BFGS updates and Armijo backtracking.
/// Requires f(x0) == f0 finite.
BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, double f0, const BfgsOptions& opts = {});

}  // namespace stmv

#endif  // STMV_OPTIMIZE_HPP
