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

#ifndef STMV_PREDICT_HPP
#define STMV_PREDICT_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stmv/covmodel.hpp"
#include "stmv/dataset.hpp"
#include "stmv/simulate.hpp"

namespace stmv {

struct PredictiveDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd sd;
};

/// Gaussian conditioning of `targets` on `cond`. Sigma_cc is factorised once;
/// the kriging weights and the conditional covariance do not depend on the
/// conditioning values, so one instance serves every day of a fixed design.
class Conditioner {
 public:
  Conditioner(const AnyModel& model, const SiteTable& sites, const PointSet& cond, const PointSet& targets,
              const JitterPolicy& jitter = {});

  std::size_t n_cond() const { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t n_targets() const { return static_cast<std::size_t>(weights_.rows()); }
  double jitter() const { return jitter_; }
  /// Sigma_tc Sigma_cc^{-1}
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::VectorXd& sd() const { return sd_; }

  Eigen::VectorXd mean(const Eigen::VectorXd& z_cond) const;
  PredictiveDistribution operator()(const Eigen::VectorXd& z_cond) const;

 private:
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd sd_;
  double jitter_ = 0.0;
};

PredictiveDistribution conditional(const AnyModel& model, const SiteTable& sites, const PointSet& cond,
                                   const Eigen::VectorXd& z_cond, const PointSet& targets,
                                   const JitterPolicy& jitter = {});

/// Target of the rolling scheme: a validation site (index into the data's
/// site table) and a variable.
struct Target {
  int site = 0;
  int var = 0;
};

struct DayForecast {
  int rep = 0;  // replicate index
  int t = 0;    // day label
  PredictiveDistribution dist;
  Eigen::VectorXd obs;  // NaN where the target is unobserved
};

struct RollingForecast {
  std::vector<Target> targets;
  std::vector<DayForecast> days;
  std::vector<std::string> diagnostics;
};

/// For each replicate and each day t whose labels t-1, ..., t-q are all
/// present, conditions on every observed value at days t-q..t-1 and on the
/// observed values of the non-validation sites at day t, and predicts all
/// variables at the validation sites on day t.
RollingForecast rolling_predict(const Dataset& data, const AnyModel& model, int q,
                                const std::vector<std::string>& validation_sites, const JitterPolicy& jitter = {},
                                int threads = 1);

/// CRPS of N(mean, sd^2) at z; |z - mean| when sd = 0.
double crps_normal(double mean, double sd, double z);

struct ScoreTable {
  double rmse = 0.0;
  double mae = 0.0;
  double crps = 0.0;
  double logs1 = 0.0;
  double logs6 = 0.0;  // joint score over the m targets of a day (m = 6 for two sites, three variables)
  double logs6_displayed = 0.0;
  int m = 0;                // targets per day
  int n_days = 0;           // forecasts scored
  int n_skipped = 0;        // forecasts with an unobserved target
};

/// Averages over days and targets with the 1/(m |T|) normalisation. The log
/// scores omit the log(2 pi) terms: LogS1 averages log sd + e^2 / (2 sd^2) and
/// LogS6 averages (log det S + e' S^{-1} e) / 2 per day, which reduces to
/// LogS1 for m = 1. logs6_displayed keeps the full log det S instead.
ScoreTable score(const std::vector<DayForecast>& forecasts);

}  // namespace stmv

#endif  // STMV_PREDICT_HPP
