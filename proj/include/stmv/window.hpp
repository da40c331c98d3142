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

#ifndef STMV_WINDOW_HPP
#define STMV_WINDOW_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "stmv/fit.hpp"
#include "stmv/simulate.hpp"

namespace stmv {

/// Simulation design of a window study: every dataset covers all sites and
/// days, with n_reps independent replicates.
struct StudyDesign {
  SiteTable sites;
  std::vector<int> days;
  int n_reps = 1;
};

struct WindowScore {
  Window window;
  double criterion = 0.0;      // sum of the empirical variances of the estimates
  double pair_fraction = 0.0;  // share of all pairs inside the window
  double b_mean = 0.0;
  double b_sd = 0.0;
  int n_fits = 0;
  int n_failed = 0;
  std::vector<std::string> failures;
};

/// Estimates entering the window criterion: sigma_i, beta_ij (i < j), nu_i and
/// r_i (once when margins are shared), alpha, a, and b for non-separable
/// variants; composite models add the temporal sigma, beta, alpha and a.
std::vector<double> criterion_parameters(const AnyModel& model, Variant variant);

/// Simulates n_sims datasets from `model` over the design and fits each with
/// every candidate window. Dataset k uses substream k of `seed`. Failed fits
/// are excluded and counted. The result is sorted by increasing criterion;
/// ties keep the candidate order.
std::vector<WindowScore> select_window(const AnyModel& model, const StudyDesign& design,
                                       const std::vector<Window>& candidates, int n_sims, std::uint64_t seed,
                                       const FitOptions& fit_opts, const JitterPolicy& jitter = {}, int threads = 1);

nlohmann::json to_json(const std::vector<WindowScore>& scores);

}  // namespace stmv

#endif  // STMV_WINDOW_HPP
