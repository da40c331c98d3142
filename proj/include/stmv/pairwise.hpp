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

#ifndef STMV_PAIRWISE_HPP
#define STMV_PAIRWISE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stmv/covmodel.hpp"
#include "stmv/dataset.hpp"

namespace stmv {

/// Cut-off weights: a pair enters when h <= d_s_km and |u| <= d_t_days.
struct Window {
  double d_s_km = 500.0;
  double d_t_days = 2.0;
};

void check_window(const Window& w);

/// 0.5 (log D + A / D) with D = var_i var_j - c^2 and
/// A = var_j zi^2 - 2 c zi zj + var_i zj^2. Throws DegeneratePair when D <= 0.
double pair_nll(double zi, double zj, double var_i, double var_j, double c);

/// A spatial/temporal lag (h in km, u = |u| in days).
struct Lag {
  double h = 0.0;
  double u = 0.0;
};

/// Pairs sharing variables (i, j) and lag, reduced to their count and
/// second moments. For i == j, zi and zj are the two members of the pair.
struct LagClass {
  std::uint32_t lag = 0;
  double n = 0.0;
  double sii = 0.0;
  double sjj = 0.0;
  double sij = 0.0;
};

/// Sufficient statistics of the pair set used by the weighted pairwise
/// likelihood. Same-variable pairs are unordered distinct space-time points;
/// cross-variable pairs (i < j) are all ordered point pairs, co-located ones
/// included. Replicates are pooled.
class PairSummary {
 public:
  PairSummary(const Dataset& data, const Window& window);

  int p() const { return p_; }
  const Window& window() const { return window_; }
  const std::vector<Lag>& lags() const { return lags_; }
  /// Classes for the variable pair (i, j), i <= j.
  const std::vector<LagClass>& classes(int i, int j) const { return classes_[combo(i, j)]; }

  double pairs_used() const { return used_; }
  double pairs_total() const { return total_; }
  double pair_fraction() const { return total_ > 0.0 ? used_ / total_ : 0.0; }

  std::size_t combo(int i, int j) const;

 private:
  int p_ = 0;
  Window window_;
  std::vector<Lag> lags_;
  std::vector<std::vector<LagClass>> classes_;
  double used_ = 0.0;
  double total_ = 0.0;
};

/// Negative weighted pairwise log-likelihood over a fixed PairSummary.
/// Kernel values are cached per variable pair and reused while the
/// parameters they depend on are unchanged, so one evaluator should be
/// used per optimisation run and not shared between threads.
class WplEvaluator {
 public:
  explicit WplEvaluator(const PairSummary& summary);

  /// +infinity when a pair is degenerate or a value is not finite; see diagnostic().
  double operator()(const AnyModel& model);
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  struct CacheKey {
    double r = 0, nu = 0, lambda = 0, alpha = 0, a = 0, b = 0, tau = 0;
    int family = -1;
    friend bool operator==(const CacheKey&, const CacheKey&) = default;
  };
  struct Entry {
    CacheKey key;
    bool filled = false;
    std::vector<double> shape;
  };

  const PairSummary& summary_;
  std::vector<Entry> cache_;
  std::string diagnostic_;
};

/// One-shot weighted pairwise negative log-likelihood.
double wpl(const AnyModel& model, const Dataset& data, const Window& window);

/// Exact Gaussian negative log-likelihood (with the log 2 pi constant) summed
/// over replicates; missing cells are marginalised out. +infinity when Sigma
/// is not positive definite.
double full_nll(const AnyModel& model, const Dataset& data, int threads = 1);

}  // namespace stmv

#endif  // STMV_PAIRWISE_HPP
