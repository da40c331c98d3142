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

#include "stmv/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stmv/errors.hpp"
#include "stmv/parallel.hpp"
#include "stmv/specialfn.hpp"

namespace stmv {

Conditioner::Conditioner(const AnyModel& model, const SiteTable& sites, const PointSet& cond, const PointSet& targets,
                         const JitterPolicy& jitter) {
  const ValidityReport rep = validate(model);
  if (!rep.valid) throw ConfigError("conditional: invalid model: " + rep.violations.front());
  const auto m = static_cast<Eigen::Index>(targets.size());
  const Eigen::MatrixXd stt = assemble_sigma(model, targets, sites);
  if (cond.size() == 0) {
    weights_.resize(m, 0);
    cov_ = stt;
  } else {
    const CholeskyFactor f = chol_pd(assemble_sigma(model, cond, sites), jitter);
    jitter_ = f.jitter;
    const auto L = f.L.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd v = L.solve(assemble_cross(model, cond, targets, sites));
    weights_ = L.transpose().solve(v).transpose();
    cov_ = stt - v.transpose() * v;
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  }
  sd_ = cov_.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::VectorXd Conditioner::mean(const Eigen::VectorXd& z_cond) const {
  if (z_cond.size() != weights_.cols()) throw std::invalid_argument("conditional: value vector does not match the conditioning set");
  return weights_ * z_cond;
}

PredictiveDistribution Conditioner::operator()(const Eigen::VectorXd& z_cond) const {
  return {mean(z_cond), cov_, sd_};
}

PredictiveDistribution conditional(const AnyModel& model, const SiteTable& sites, const PointSet& cond,
                                   const Eigen::VectorXd& z_cond, const PointSet& targets, const JitterPolicy& jitter) {
  return Conditioner(model, sites, cond, targets, jitter)(z_cond);
}

namespace {

PointSet select(const PointSet& pts, const std::vector<bool>& keep) {
  std::vector<SpaceTimePoint> out;
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (keep[k]) out.push_back(pts[k]);
  return PointSet(std::move(out));
}

}  // namespace

RollingForecast rolling_predict(const Dataset& data, const AnyModel& model, int q,
                                const std::vector<std::string>& validation_sites, const JitterPolicy& jitter,
                                int threads) {
  if (q < 1) throw ConfigError("rolling_predict: q must be >= 1");
  if (validation_sites.empty()) throw ConfigError("rolling_predict: no validation sites given");
  if (num_variables(model) != data.p()) throw ConfigError("rolling_predict: model and data have different numbers of variables");
  const SiteTable& sites = data.sites();
  std::vector<bool> is_val(sites.size(), false);
  std::vector<int> val_idx;
  for (const auto& id : validation_sites) {
    if (!sites.contains(id)) throw ConfigError("rolling_predict: unknown validation site '" + id + "'");
    const auto k = sites.index_of(id);
    if (is_val[k]) throw ConfigError("rolling_predict: validation site '" + id + "' listed twice");
    is_val[k] = true;
    val_idx.push_back(static_cast<int>(k));
  }

  RollingForecast out;
  std::vector<SpaceTimePoint> tpts;
  for (int s : val_idx)
    for (int v = 0; v < data.p(); ++v) {
      out.targets.push_back({s, v});
      tpts.push_back({s, 0, v});
    }
  // Design in days relative to the forecast day.
  std::vector<SpaceTimePoint> cpts;
  for (int k = q; k >= 0; --k)
    for (int s = 0; s < data.n_sites(); ++s) {
      if (k == 0 && is_val[static_cast<std::size_t>(s)]) continue;
      for (int v = 0; v < data.p(); ++v) cpts.push_back({s, -k, v});
    }
  const PointSet cond(cpts);
  const PointSet targets(tpts);

  std::vector<int> eligible;
  for (int d = 0; d < data.n_days(); ++d) {
    const int t = data.days()[static_cast<std::size_t>(d)];
    bool history = true;
    for (int k = 1; k <= q && history; ++k) history = data.day_index(t - k) >= 0;
    if (history) {
      eligible.push_back(d);
    } else {
      std::ostringstream msg;
      msg << "day " << t << " skipped: fewer than " << q << " preceding days available";
      out.diagnostics.push_back(msg.str());
    }
  }
  if (eligible.empty()) {
    out.diagnostics.push_back("no day has the required history; nothing predicted");
    return out;
  }

  const Conditioner full(model, sites, cond, targets, jitter);
  const std::size_t n_items = static_cast<std::size_t>(data.n_reps()) * eligible.size();
  out.days.resize(n_items);
  std::vector<char> reduced(n_items, 0);
  parallel_for(n_items, threads, [&](std::size_t item) {
    const int rep = static_cast<int>(item / eligible.size());
    const int d = eligible[item % eligible.size()];
    const int t = data.days()[static_cast<std::size_t>(d)];
    Eigen::VectorXd z(static_cast<Eigen::Index>(cond.size()));
    std::vector<bool> seen(cond.size());
    bool complete = true;
    for (std::size_t k = 0; k < cond.size(); ++k) {
      const auto& c = cond[k];
      z(static_cast<Eigen::Index>(k)) = data.at(rep, data.day_index(t + c.t), c.site, c.var);
      seen[k] = !std::isnan(z(static_cast<Eigen::Index>(k)));
      complete = complete && seen[k];
    }
    DayForecast& f = out.days[item];
    f.rep = rep;
    f.t = t;
    if (complete) {
      f.dist = full(z);
    } else {
      reduced[item] = 1;
      Eigen::VectorXd zs(static_cast<Eigen::Index>(std::count(seen.begin(), seen.end(), true)));
      Eigen::Index m = 0;
      for (std::size_t k = 0; k < cond.size(); ++k)
        if (seen[k]) zs(m++) = z(static_cast<Eigen::Index>(k));
      f.dist = Conditioner(model, sites, select(cond, seen), targets, jitter)(zs);
    }
    f.obs.resize(static_cast<Eigen::Index>(out.targets.size()));
    for (std::size_t j = 0; j < out.targets.size(); ++j)
      f.obs(static_cast<Eigen::Index>(j)) = data.at(rep, d, out.targets[j].site, out.targets[j].var);
  });
  const auto n_reduced = std::count(reduced.begin(), reduced.end(), 1);
  if (n_reduced > 0) {
    std::ostringstream msg;
    msg << n_reduced << " forecast(s) conditioned on a reduced set because of missing values";
    out.diagnostics.push_back(msg.str());
  }
  return out;
}

double crps_normal(double mean, double sd, double z) {
  if (!(sd >= 0.0)) throw std::domain_error("crps_normal: sd must be nonnegative");
  if (sd == 0.0) return std::abs(z - mean);
  const double zt = (z - mean) / sd;
  return sd * (zt * (2.0 * specialfn::std_normal_cdf(zt) - 1.0) + 2.0 * specialfn::std_normal_pdf(zt) -
               1.0 / std::sqrt(std::numbers::pi));
}

ScoreTable score(const std::vector<DayForecast>& forecasts) {
  ScoreTable s;
  double se = 0.0, ae = 0.0, cr = 0.0, l1 = 0.0, lj = 0.0, ld = 0.0;
  for (const auto& f : forecasts) {
    const auto m = f.dist.mean.size();
    if (f.obs.size() != m || f.dist.cov.rows() != m || f.dist.cov.cols() != m || f.dist.sd.size() != m)
      throw std::invalid_argument("score: forecast and observation sizes differ");
    if (s.n_days + s.n_skipped == 0) s.m = static_cast<int>(m);
    if (static_cast<int>(m) != s.m) throw std::invalid_argument("score: forecasts have different target counts");
    if (!f.obs.allFinite()) {
      ++s.n_skipped;
      continue;
    }
    const Eigen::VectorXd e = f.dist.mean - f.obs;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double sd = f.dist.sd(j);
      if (!(sd > 0.0)) throw NumericalError("score: zero predictive standard deviation");
      se += e(j) * e(j);
      ae += std::abs(e(j));
      cr += crps_normal(f.dist.mean(j), sd, f.obs(j));
      l1 += std::log(sd) + e(j) * e(j) / (2.0 * sd * sd);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(f.dist.cov);
    if (llt.info() != Eigen::Success) throw NumericalError("score: predictive covariance is singular");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(e);
    const double half_logdet = L.diagonal().array().log().sum();
    lj += half_logdet + 0.5 * y.squaredNorm();
    ld += 2.0 * half_logdet + 0.5 * y.squaredNorm();
    ++s.n_days;
  }
  if (s.n_days == 0) throw DataError("score: no forecast with every target observed");
  const double n = static_cast<double>(s.m) * s.n_days;
  s.rmse = std::sqrt(se / n);
  s.mae = ae / n;
  s.crps = cr / n;
  s.logs1 = l1 / n;
  s.logs6 = lj / n;
  s.logs6_displayed = ld / n;
  return s;
}

}  // namespace stmv
