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

#ifndef STMV_SIMULATE_HPP
#define STMV_SIMULATE_HPP

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "stmv/covmodel.hpp"
#include "stmv/errors.hpp"

namespace stmv {

/// Jitter ladder: rung 0 adds nothing, rung k >= 1 adds
/// initial_rel * mean(diag) * growth^{k-1} to the diagonal.
struct JitterPolicy {
  double initial_rel = 1e-10;
  double growth = 10.0;
  int max_retries = 4;
};

struct CholeskyFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
};

CholeskyFactor chol_pd(const Eigen::MatrixXd& sigma, const JitterPolicy& policy = {});

/// Seed of substream k derived from a master seed with SplitMix64, so that
/// replicate k does not depend on how many replicates are drawn.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t k);

/// Per-substream engine (MT19937-64 seeded from the SplitMix64 output).
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t k);

struct SimulationRequest {
  AnyModel model;
  PointSet points;
  SiteTable sites;
  int n_reps = 1;
  std::uint64_t seed = 0;
  JitterPolicy jitter;
  int threads = 1;
};

struct SimulationResult {
  Eigen::MatrixXd values;  // n_reps x |points|
  double jitter = 0.0;
};

/// Draws replicate k as L z_k with z_k from substream k.
SimulationResult simulate(const SimulationRequest& req);

/// Same, with an already factorised covariance.
Eigen::MatrixXd simulate_from_factor(const Eigen::MatrixXd& L, int n_reps, std::uint64_t seed, int threads = 1);

}  // namespace stmv

#endif  // STMV_SIMULATE_HPP
