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

#include "stmv/simulate.hpp"

#include <cmath>
#include <sstream>

#include "stmv/parallel.hpp"

namespace stmv {

CholeskyFactor chol_pd(const Eigen::MatrixXd& sigma, const JitterPolicy& policy) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("chol_pd: matrix must be square");
  const auto n = sigma.rows();
  if (n == 0) return {Eigen::MatrixXd(0, 0), 0.0};
  if (!sigma.allFinite()) throw NotPositiveDefinite("chol_pd: matrix has non-finite entries");
  const double mean_diag = sigma.diagonal().mean();
  double eps = 0.0;
  for (int rung = 0; rung <= policy.max_retries; ++rung) {
    if (rung > 0) eps = policy.initial_rel * mean_diag * std::pow(policy.growth, rung - 1);
    Eigen::MatrixXd work = sigma;
    work.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite() && (L.diagonal().array() > 0.0).all()) return {std::move(L), eps};
    }
  }
  std::ostringstream msg;
  msg << "chol_pd: matrix is not positive definite even with jitter " << eps;
  throw NotPositiveDefinite(msg.str());
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t k) {
  // SplitMix64 (Steele, Lea & Flood 2014) applied to seed + (k + 1) * golden gamma.
  std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t k) { return std::mt19937_64(substream_seed(seed, k)); }

Eigen::MatrixXd simulate_from_factor(const Eigen::MatrixXd& L, int n_reps, std::uint64_t seed, int threads) {
  if (n_reps < 1) throw std::invalid_argument("simulate: n_reps must be >= 1");
  const auto n = L.rows();
  Eigen::MatrixXd out(n_reps, n);
  parallel_for(static_cast<std::size_t>(n_reps), threads, [&](std::size_t k) {
    auto engine = make_engine(seed, k);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(engine);
    out.row(static_cast<Eigen::Index>(k)) = (L.triangularView<Eigen::Lower>() * z).transpose();
  });
  return out;
}

SimulationResult simulate(const SimulationRequest& req) {
  if (req.n_reps < 1) throw std::invalid_argument("simulate: n_reps must be >= 1");
  const Eigen::MatrixXd sigma = assemble_sigma(req.model, req.points, req.sites, req.threads);
  CholeskyFactor f = chol_pd(sigma, req.jitter);
  SimulationResult res;
  res.values = simulate_from_factor(f.L, req.n_reps, req.seed, req.threads);
  res.jitter = f.jitter;
  return res;
}

}  // namespace stmv
