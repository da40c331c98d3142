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

#include "stmv/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stmv/empirical.hpp"
#include "stmv/errors.hpp"
#include "stmv/io.hpp"
#include "stmv/parallel.hpp"

namespace stmv {

std::string to_string(ObjectiveKind k) { return k == ObjectiveKind::WPL ? "WPL" : "FL"; }

ObjectiveKind objective_from_string(const std::string& s) {
  if (s == "WPL" || s == "wpl") return ObjectiveKind::WPL;
  if (s == "FL" || s == "fl") return ObjectiveKind::FL;
  throw std::invalid_argument("unknown objective '" + s + "' (expected WPL or FL)");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Minimises f over a log-scaled box by a grid scan followed by BFGS on a
/// logistic reparameterisation of the box.
std::vector<double> fit_box(const std::function<double(const std::vector<double>&)>& f,
                            const std::vector<std::pair<double, double>>& box, int grid) {
  const std::size_t n = box.size();
  auto from_unit = [&](const std::vector<double>& t) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
      v[k] = box[k].first * std::pow(box[k].second / box[k].first, std::clamp(t[k], 0.0, 1.0));
    return v;
  };
  std::vector<double> best_t(n, 0.5);
  double best = kInf;
  std::vector<int> ctr(n, 0);
  for (;;) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = (ctr[k] + 0.5) / grid;
    const double v = f(from_unit(t));
    if (v < best) {
      best = v;
      best_t = t;
    }
    std::size_t k = 0;
    while (k < n && ++ctr[k] == grid) ctr[k++] = 0;
    if (k == n) break;
  }
  Eigen::VectorXd x0(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) x0(static_cast<Eigen::Index>(k)) = std::log(best_t[k] / (1.0 - best_t[k]));
  auto g = [&](const Eigen::VectorXd& x) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = logistic(x(static_cast<Eigen::Index>(k)));
    return f(from_unit(t));
  };
  BfgsOptions bo;
  bo.tol = 1e-10;
  bo.max_iter = 100;
  const BfgsResult r = bfgs_minimize(g, x0, g(x0), bo);
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = logistic(r.x(static_cast<Eigen::Index>(k)));
  return from_unit(t);
}

struct SpatialInit {
  double nu;
  double r;
  double plateau;  // fraction of the variance that does not decay in space
};

SpatialInit fit_spatial(const std::vector<EmpiricalEntry>& cov, int i, double var, const FitOptions& opts) {
  std::vector<double> h, c, w;
  for (const auto& e : cov)
    if (e.i == i && e.j == i && e.u == 0 && !e.empty) {
      h.push_back(e.h_mean);
      c.push_back(e.value / var);
      w.push_back(e.n_pairs);
    }
  if (h.size() < 3) {
    std::ostringstream msg;
    msg << "init_params: fewer than 3 non-empty spatial lag classes for variable " << i + 1;
    throw DataError(msg.str());
  }
  double plateau = 0.0;
  if (opts.composite) plateau = std::clamp(c.back(), 0.05, 0.9);
  for (double& x : c) x = (x - plateau) / (1.0 - plateau);
  auto sse = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double r = 1.0 / v[1];
      const double m = opts.family == Family::GneitingMatern ? kernels::matern_corr(h[k], r, v[0])
                                                              : kernels::cauchy_corr(h[k], r, v[0], opts.lambda);
      s += w[k] * (c[k] - m) * (c[k] - m);
    }
    return s;
  };
  const auto best = fit_box(sse, {{0.1, 5.0}, {1.0, 1.0e4}}, 12);
  return {best[0], 1.0 / best[1], plateau};
}

std::pair<double, double> fit_temporal(const Dataset& data, const FitOptions& opts) {
  const int span = data.days().back() - data.days().front();
  std::vector<int> lags;
  for (int u = 0; u <= std::min(span, 6); ++u) lags.push_back(u);
  const auto cov = empirical_cov(data, {0.0, 1e-9}, lags);
  std::vector<double> u, g, w;
  double c0 = 0.0;
  for (const auto& e : cov)
    if (e.i == 0 && e.j == 0 && !e.empty) {
      if (e.u == 0) c0 = e.value;
      else {
        u.push_back(e.u);
        g.push_back(e.value);
        w.push_back(e.n_pairs);
      }
    }
  if (u.empty() || !(c0 > 0.0)) return {1.0, 0.5};
  for (double& x : g) x /= c0;
  auto sse = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double m = std::pow(v[0] * std::pow(u[k], 2.0 * v[1]) + 1.0, -opts.tau);
      s += w[k] * (g[k] - m) * (g[k] - m);
    }
    return s;
  };
  const auto best = fit_box(sse, {{1e-3, 1e3}, {0.05, 1.0}}, 12);
  return {best[0], std::min(best[1], 1.0 - 1e-6)};
}

}  // namespace

AnyModel init_params(const Dataset& data, const FitOptions& opts) {
  const int p = data.p();
  if (data.n_days() < 2) throw DataError("init_params: need at least two days");
  ModelSpec m;
  m.family = opts.family;
  m.p = p;
  m.d = opts.d;
  m.lambda = opts.lambda;
  m.marginals.resize(static_cast<std::size_t>(p));
  std::vector<double> var(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    double n = 0, s = 0, ss = 0;
    for (int r = 0; r < data.n_reps(); ++r)
      for (int d = 0; d < data.n_days(); ++d)
        for (int k = 0; k < data.n_sites(); ++k)
          if (data.observed(r, d, k, i)) {
            const double x = data.at(r, d, k, i);
            n += 1;
            s += x;
            ss += x * x;
          }
    if (n < 2) throw DataError("init_params: fewer than two observations of variable " + std::to_string(i + 1));
    var[static_cast<std::size_t>(i)] = std::max((ss - s * s / n) / (n - 1.0), 1e-12);
    m.marginals[static_cast<std::size_t>(i)].sigma = std::sqrt(var[static_cast<std::size_t>(i)]);
  }

  const auto edges = quantile_bin_edges(data.sites(), 8);
  if (edges.size() < 4) throw DataError("init_params: fewer than 3 spatial lag classes");
  const auto cov = empirical_cov(data, edges, {0});
  std::vector<SpatialInit> sp;
  for (int i = 0; i < p; ++i) sp.push_back(fit_spatial(cov, i, var[static_cast<std::size_t>(i)], opts));
  for (int i = 0; i < p; ++i) {
    m.marginals[static_cast<std::size_t>(i)].nu = sp[static_cast<std::size_t>(i)].nu;
    m.marginals[static_cast<std::size_t>(i)].r = sp[static_cast<std::size_t>(i)].r;
  }
  const auto [alpha, a] = fit_temporal(data, opts);
  m.temporal.alpha = alpha;
  m.temporal.a = a;
  m.temporal.b = 0.0;
  m.temporal.tau = opts.tau;
  m.beta = nearest_correlation(colocated_correlation(data));
  m = restrict(m, opts.variant);
  if (!opts.composite) return m;

  CompositeModel cm;
  cm.spacetime = m;
  cm.temporal.sigma.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) cm.temporal.sigma[static_cast<std::size_t>(i)] = std::sqrt(sp[static_cast<std::size_t>(i)].plateau);
  cm.temporal.beta = m.beta;
  cm.temporal.alpha = alpha;
  cm.temporal.a = a;
  apply_variance_constraint(cm);
  return cm;
}

namespace {

AnyModel with_b(AnyModel m, double b, Variant v) {
  if (auto* ms = std::get_if<ModelSpec>(&m)) {
    ms->temporal.b = b;
    return restrict(*ms, v);
  }
  auto& cm = std::get<CompositeModel>(m);
  cm.spacetime.temporal.b = b;
  return restrict(cm, v);
}

}  // namespace

FitReport fit(const Dataset& data, const Window& window, const FitOptions& opts, const std::optional<AnyModel>& init) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opts.objective == ObjectiveKind::WPL) check_window(window);
  if (opts.outer_tol <= 0.0 || opts.max_outer < 1) throw std::invalid_argument("fit: invalid outer stopping rule");

  std::vector<double> grid = opts.b_grid;
  if (is_separable(opts.variant)) grid = {0.0};
  else if (grid.empty())
    for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  for (double b : grid)
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("fit: b grid values must lie in [0, 1]");

  const AnyModel start = init ? *init : init_params(data, opts);
  if (num_variables(start) != data.p()) throw std::invalid_argument("fit: initial model has the wrong number of variables");
  if (std::holds_alternative<CompositeModel>(start) != opts.composite)
    throw std::invalid_argument("fit: initial model kind does not match the composite option");

  std::optional<PairSummary> summary;
  if (opts.objective == ObjectiveKind::WPL) summary.emplace(data, window);

  ParamOptions po;
  po.family = opts.family;
  po.p = data.p();
  po.d = opts.d;
  po.variant = opts.variant;
  po.composite = opts.composite;
  po.fit_tau = opts.fit_tau;
  po.tau = opts.tau;
  po.fit_lambda = opts.fit_lambda;
  po.lambda = opts.lambda;

  std::vector<BLevel> levels(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t k) {
    BLevel& lv = levels[k];
    lv.b = grid[k];
    lv.model = with_b(start, lv.b, opts.variant);
    if (!opts.fit_tau && opts.tau < 0.5 * lv.b * opts.d - 1e-12) {
      lv.message = "fixed tau is below b d / 2";
      return;
    }
    const ParameterMap pm(po, lv.b);
    std::optional<WplEvaluator> eval;
    if (summary) eval.emplace(*summary);
    auto objective = [&](const Eigen::VectorXd& th) {
      ++lv.evaluations;
      const AnyModel m = pm.decode(th);
      return eval ? (*eval)(m) : full_nll(m, data, 1);
    };
    Eigen::VectorXd theta = pm.encode(lv.model);
    double f = objective(theta);
    if (!std::isfinite(f)) {
      lv.message = "non-finite objective at the initial values";
      if (eval && !eval->diagnostic().empty()) lv.message += " (" + eval->diagnostic() + ")";
      return;
    }
    lv.trace.push_back(f);
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      const double before = f;
      for (const auto& block : pm.blocks()) {
        const auto nb = static_cast<Eigen::Index>(block.index.size());
        Eigen::VectorXd y0(nb);
        for (Eigen::Index q = 0; q < nb; ++q) y0(q) = theta(block.index[static_cast<std::size_t>(q)]);
        auto sub = [&](const Eigen::VectorXd& y) {
          Eigen::VectorXd th = theta;
          for (Eigen::Index q = 0; q < nb; ++q) th(block.index[static_cast<std::size_t>(q)]) = y(q);
          return objective(th);
        };
        const BfgsResult r = bfgs_minimize(sub, y0, f, opts.inner);
        if (r.f <= f) {
          for (Eigen::Index q = 0; q < nb; ++q) theta(block.index[static_cast<std::size_t>(q)]) = r.x(q);
          f = r.f;
        }
      }
      lv.trace.push_back(f);
      lv.outer_iterations = outer + 1;
      if (before - f < opts.outer_tol) break;
    }
    lv.objective = f;
    lv.model = pm.decode(theta);
    lv.ok = true;
  });

  FitReport rep;
  rep.variant = opts.variant;
  rep.objective = opts.objective;
  rep.window = window;
  rep.levels = levels;
  if (summary) rep.pair_fraction = summary->pair_fraction();
  const BLevel* best = nullptr;
  for (const auto& lv : rep.levels) {
    rep.evaluations += lv.evaluations;
    if (lv.ok && (!best || lv.objective < best->objective)) best = &lv;
  }
  if (!best) {
    std::string why = rep.levels.empty() ? std::string("empty b grid") : rep.levels.front().message;
    throw FitFailure("fit: no b level could be fitted (" + why + "); re-initialise the parameters", rep);
  }
  rep.model = best->model;
  rep.final_objective = best->objective;
  rep.trace = best->trace;
  rep.iterations = best->outer_iterations;
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

nlohmann::json b_profile_json(const FitReport& r) {
  nlohmann::json prof = nlohmann::json::array();
  for (const auto& lv : r.levels) {
    nlohmann::json e;
    e["b"] = lv.b;
    e["ok"] = lv.ok;
    e["objective"] = lv.ok ? nlohmann::json(lv.objective) : nlohmann::json(nullptr);
    e["outer_iterations"] = lv.outer_iterations;
    e["trace"] = lv.trace;
    if (!lv.message.empty()) e["message"] = lv.message;
    prof.push_back(e);
  }
  return prof;
}

nlohmann::json to_json(const FitReport& r, bool include_timing) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "fit_report";
  j["variant"] = to_string(r.variant);
  j["objective"] = to_string(r.objective);
  j["window"] = {{"d_s_km", r.window.d_s_km}, {"d_t_days", r.window.d_t_days}};
  j["final_objective"] = r.final_objective;
  j["model"] = io::to_json(r.model);
  j["trace"] = r.trace;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["pair_fraction"] = r.pair_fraction;
  j["b_profile"] = b_profile_json(r);
  if (include_timing) j["wall_time_s"] = r.wall_time_s;
  return j;
}

}  // namespace stmv
