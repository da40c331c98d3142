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

#include "stmv/window.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stmv/errors.hpp"
#include "stmv/parallel.hpp"

namespace stmv {

namespace {

void spacetime_parameters(const ModelSpec& m, Variant variant, std::vector<double>& out) {
  for (const auto& mg : m.marginals) out.push_back(mg.sigma);
  for (int i = 0; i < m.p; ++i)
    for (int j = i + 1; j < m.p; ++j) out.push_back(m.beta(i, j));
  const std::size_t n_margins = shares_margins(variant) ? 1 : m.marginals.size();
  for (std::size_t i = 0; i < n_margins; ++i) {
    out.push_back(m.marginals[i].nu);
    out.push_back(m.marginals[i].r);
  }
  out.push_back(m.temporal.alpha);
  out.push_back(m.temporal.a);
  if (!is_separable(variant)) out.push_back(m.temporal.b);
}

struct Accumulator {
  std::vector<double> sum, sumsq;
  double b_sum = 0.0, b_sumsq = 0.0, frac = 0.0;
  int n = 0;
};

}  // namespace

std::vector<double> criterion_parameters(const AnyModel& model, Variant variant) {
  std::vector<double> out;
  if (const auto* m = std::get_if<ModelSpec>(&model)) {
    spacetime_parameters(*m, variant, out);
    return out;
  }
  const auto& cm = std::get<CompositeModel>(model);
  spacetime_parameters(cm.spacetime, variant, out);
  const auto& x = cm.temporal;
  for (double s : x.sigma) out.push_back(s);
  for (Eigen::Index i = 0; i < x.beta.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.beta.cols(); ++j) out.push_back(x.beta(i, j));
  out.push_back(x.alpha);
  out.push_back(x.a);
  return out;
}

std::vector<WindowScore> select_window(const AnyModel& model, const StudyDesign& design,
                                       const std::vector<Window>& candidates, int n_sims, std::uint64_t seed,
                                       const FitOptions& fit_opts, const JitterPolicy& jitter, int threads) {
  if (candidates.empty()) throw ConfigError("select_window: no candidate windows");
  if (n_sims < 2) throw ConfigError("select_window: n_sims must be >= 2");
  if (design.n_reps < 1) throw ConfigError("select_window: n_reps must be >= 1");
  if (design.days.empty() || design.sites.size() == 0) throw ConfigError("select_window: empty design");
  for (const auto& w : candidates) check_window(w);
  const ValidityReport rep = validate(model);
  if (!rep.valid) throw ConfigError("select_window: invalid model: " + rep.violations.front());

  const int p = num_variables(model);
  std::vector<int> site_idx(design.sites.size());
  std::iota(site_idx.begin(), site_idx.end(), 0);
  const PointSet pts = PointSet::grid(site_idx, design.days, p);
  const CholeskyFactor factor = chol_pd(assemble_sigma(model, pts, design.sites, threads), jitter);

  FitOptions inner = fit_opts;
  inner.threads = 1;
  const std::size_t nw = candidates.size();
  // One slot per (simulation, window); filled independently, reduced in order.
  struct Slot {
    bool ok = false;
    std::string message;
    std::vector<double> theta;
    double b = 0.0;
    double frac = 0.0;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(n_sims) * nw);
  parallel_for(static_cast<std::size_t>(n_sims), threads, [&](std::size_t k) {
    const Eigen::MatrixXd values = simulate_from_factor(factor.L, design.n_reps, substream_seed(seed, k));
    const Dataset data = dataset_from_simulation(design.sites, design.days, p, values);
    for (std::size_t w = 0; w < nw; ++w) {
      Slot& s = slots[k * nw + w];
      try {
        const FitReport r = fit(data, candidates[w], inner);
        s.theta = criterion_parameters(r.model, inner.variant);
        const ModelSpec& st = std::holds_alternative<ModelSpec>(r.model) ? std::get<ModelSpec>(r.model)
                                                                          : std::get<CompositeModel>(r.model).spacetime;
        s.b = st.temporal.b;
        s.frac = r.pair_fraction;
        s.ok = true;
      } catch (const NumericalError& e) {
        s.message = "simulation " + std::to_string(k) + ": " + e.what();
      }
    }
  });

  std::vector<WindowScore> out(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    WindowScore& ws = out[w];
    ws.window = candidates[w];
    Accumulator acc;
    for (int k = 0; k < n_sims; ++k) {
      const Slot& s = slots[static_cast<std::size_t>(k) * nw + w];
      if (!s.ok) {
        ++ws.n_failed;
        ws.failures.push_back(s.message);
        continue;
      }
      if (acc.sum.empty()) {
        acc.sum.assign(s.theta.size(), 0.0);
        acc.sumsq.assign(s.theta.size(), 0.0);
      }
      for (std::size_t q = 0; q < s.theta.size(); ++q) {
        acc.sum[q] += s.theta[q];
        acc.sumsq[q] += s.theta[q] * s.theta[q];
      }
      acc.b_sum += s.b;
      acc.b_sumsq += s.b * s.b;
      acc.frac = s.frac;
      ++acc.n;
    }
    ws.n_fits = acc.n;
    ws.pair_fraction = acc.frac;
    if (acc.n < 2) {
      ws.criterion = ws.b_mean = ws.b_sd = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double n = acc.n;
    ws.criterion = 0.0;
    for (std::size_t q = 0; q < acc.sum.size(); ++q)
      ws.criterion += std::max(0.0, (acc.sumsq[q] - acc.sum[q] * acc.sum[q] / n) / (n - 1.0));
    ws.b_mean = acc.b_sum / n;
    ws.b_sd = std::sqrt(std::max(0.0, (acc.b_sumsq - acc.b_sum * acc.b_sum / n) / (n - 1.0)));
  }
  std::stable_sort(out.begin(), out.end(), [](const WindowScore& a, const WindowScore& b) {
    if (std::isnan(a.criterion)) return false;
    if (std::isnan(b.criterion)) return true;
    return a.criterion < b.criterion;
  });
  return out;
}

nlohmann::json to_json(const std::vector<WindowScore>& scores) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& s = scores[k];
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    rows.push_back({{"rank", k + 1},
                    {"d_s_km", s.window.d_s_km},
                    {"d_t_days", s.window.d_t_days},
                    {"criterion", num(s.criterion)},
                    {"pair_fraction", s.pair_fraction},
                    {"b_mean", num(s.b_mean)},
                    {"b_sd", num(s.b_sd)},
                    {"n_fits", s.n_fits},
                    {"n_failed", s.n_failed},
                    {"failures", s.failures}});
  }
  return {{"kind", "window_selection"}, {"windows", rows}};
}

}  // namespace stmv
