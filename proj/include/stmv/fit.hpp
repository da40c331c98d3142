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

#ifndef STMV_FIT_HPP
#define STMV_FIT_HPP

#include <optional>
#include <string>
#include <vector>
#include <utility>

#include "json.hpp"
#include "stmv/covmodel.hpp"
#include "stmv/dataset.hpp"
#include "stmv/errors.hpp"
#include "stmv/optimize.hpp"
#include "stmv/pairwise.hpp"
#include "stmv/parameterization.hpp"

namespace stmv {

enum class ObjectiveKind { WPL, FL };

std::string to_string(ObjectiveKind k);
ObjectiveKind objective_from_string(const std::string& s);

struct FitOptions {
  Family family = Family::GneitingMatern;
  Variant variant = Variant::NSD;
  ObjectiveKind objective = ObjectiveKind::WPL;
  bool composite = false;
  int d = 2;
  std::vector<double> b_grid;  // empty: 0, 0.1, ..., 1 (or {0} for separable variants)
  double outer_tol = 1.0;
  int max_outer = 30;
  BfgsOptions inner;
  bool fit_tau = false;
  double tau = 1.0;
  bool fit_lambda = true;
  double lambda = 1.0;  // initial (or fixed) Cauchy shape
  int threads = 1;      // b levels are fitted concurrently
};

struct BLevel {
  double b = 0.0;
  bool ok = false;
  std::string message;
  double objective = 0.0;
  std::vector<double> trace;  // objective after each outer cycle, starting with the initial value
  int outer_iterations = 0;
  int evaluations = 0;
  AnyModel model;
};

struct FitReport {
  AnyModel model;
  Variant variant = Variant::NSD;
  ObjectiveKind objective = ObjectiveKind::WPL;
  Window window;
  double final_objective = 0.0;
  std::vector<double> trace;
  std::vector<BLevel> levels;
  int iterations = 0;
  int evaluations = 0;
  double pair_fraction = 0.0;
  double wall_time_s = 0.0;
};

/// Thrown when no b level could be fitted; carries the per-level diagnostics.
class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, FitReport partial) : NumericalError(what), partial_(std::move(partial)) {}
  const FitReport& partial() const { return partial_; }

 private:
  FitReport partial_;
};

/// Initial values from marginal moments: sigma from sample standard deviations,
/// (nu, r) per variable by weighted least squares on the spatial empirical
/// covariance, (alpha, a) from the temporal empirical covariance of variable 1,
/// and beta from co-located correlations projected to a correlation matrix.
/// The scale search is confined to 1/r in [1, 10^4] km.
AnyModel init_params(const Dataset& data, const FitOptions& opts);

FitReport fit(const Dataset& data, const Window& window, const FitOptions& opts,
              const std::optional<AnyModel>& init = std::nullopt);

nlohmann::json to_json(const FitReport& report, bool include_timing = false);

/// b profile of a report; also usable on FitFailure::partial().
nlohmann::json b_profile_json(const FitReport& report);

}  // namespace stmv

#endif  // STMV_FIT_HPP
