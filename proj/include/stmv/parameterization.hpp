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

#ifndef STMV_PARAMETERIZATION_HPP
#define STMV_PARAMETERIZATION_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stmv/covmodel.hpp"

namespace stmv {

inline constexpr double kNuCap = 10.0;
inline constexpr double kMinInverseRange = 1.0e-4;  // 1/r <= 10^4 km

struct ParamOptions {
  Family family = Family::GneitingMatern;
  int p = 1;
  int d = 2;
  Variant variant = Variant::NSD;
  bool composite = false;
  bool fit_tau = false;
  double tau = 1.0;
  bool fit_lambda = true;
  double lambda = 1.0;
};

/// Correlation matrix from canonical partial correlations tanh(z), p(p-1)/2 of them.
Eigen::MatrixXd correlation_from_unconstrained(const Eigen::VectorXd& z, int p);
/// Inverse of correlation_from_unconstrained for a positive-definite correlation matrix.
Eigen::VectorXd unconstrained_from_correlation(const Eigen::MatrixXd& c);

/// Maps an unconstrained vector to a feasible model for a fixed b. Layout
/// (non-composite): sigma (log), beta (partial correlations), nu (10 logistic)
/// and r (1e-4 + exp) per variable or shared, alpha (log), a (logistic),
/// tau - b d / 2 (log, optional), lambda / 2 (logistic, Cauchy only).
/// Composite models replace sigma by sigma^X (logistic) and append beta^X,
/// alpha^X and a^X.
class ParameterMap {
 public:
  struct Block {
    std::string name;
    std::vector<int> index;
  };

  ParameterMap(ParamOptions opts, double b);

  int size() const { return static_cast<int>(names_.size()); }
  double b() const { return b_; }
  const ParamOptions& options() const { return opts_; }
  const std::vector<std::string>& names() const { return names_; }
  /// Blocks in optimisation order.
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Nearest interior point of the transformed domain; values on or beyond
  /// a bound are pulled just inside it.
  Eigen::VectorXd encode(const AnyModel& model) const;
  AnyModel decode(const Eigen::VectorXd& theta) const;

 private:
  int add(const std::string& name);

  ParamOptions opts_;
  double b_;
  std::vector<std::string> names_;
  std::vector<Block> blocks_;
  int sigma0_ = 0, beta0_ = 0, nu0_ = 0, r0_ = 0, alpha_ = 0, a_ = 0, tau_ = -1, lambda_ = -1;
  int betax0_ = -1, alphax_ = -1, ax_ = -1;
};

}  // namespace stmv

#endif  // STMV_PARAMETERIZATION_HPP
