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

#ifndef STMV_EMPIRICAL_HPP
#define STMV_EMPIRICAL_HPP

#include <vector>

#include <Eigen/Dense>

#include "stmv/dataset.hpp"

namespace stmv {

/// One cell of a binned empirical moment table. Variables are 0-based; the
/// bin is [h_lo, h_hi).
struct EmpiricalEntry {
  int i = 0;
  int j = 0;
  int bin = 0;
  double h_lo = 0.0;
  double h_hi = 0.0;
  double h_mean = 0.0;  // average distance of the contributing pairs
  int u = 0;
  double n_pairs = 0.0;
  double value = 0.0;
  bool empty = true;
};

/// Average of z_i(s, t) z_j(s', t + u) over all ordered site pairs with
/// |s - s'| in each bin, for every (i, j), bin and u >= 0. Empty cells are flagged.
std::vector<EmpiricalEntry> empirical_cov(const Dataset& data, const std::vector<double>& edges,
                                          const std::vector<int>& lags);

/// Half the average squared difference z_i(s, t) - z_i(s', t + u), i = j only.
std::vector<EmpiricalEntry> empirical_variogram(const Dataset& data, const std::vector<double>& edges,
                                                const std::vector<int>& lags);

/// Correlation of co-located simultaneous observations of each variable pair.
Eigen::MatrixXd colocated_correlation(const Dataset& data);

/// Higham's alternating projections onto the nearest correlation matrix,
/// with eigenvalues then floored at min_eig and the diagonal rescaled to 1.
Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& a, double min_eig = 1e-6, int max_iter = 200);

/// Bin edges splitting the distinct positive inter-site distances into
/// `n_bins` groups of (nearly) equal size.
std::vector<double> quantile_bin_edges(const SiteTable& sites, int n_bins);

}  // namespace stmv

#endif  // STMV_EMPIRICAL_HPP
