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

#include "stmv/pairwise.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stmv/errors.hpp"

namespace stmv {

void check_window(const Window& w) {
  if (!(w.d_s_km > 0.0) || !(w.d_t_days > 0.0) || std::isnan(w.d_s_km) || std::isnan(w.d_t_days))
    throw std::invalid_argument("window: d_S and d_T must be positive");
}

double pair_nll(double zi, double zj, double var_i, double var_j, double c) {
  const double delta = var_i * var_j - c * c;
  if (!(delta > 0.0)) {
    std::ostringstream msg;
    msg << "degenerate pair: var_i var_j - c^2 = " << delta;
    throw DegeneratePair(msg.str());
  }
  const double a = var_j * zi * zi - 2.0 * c * zi * zj + var_i * zj * zj;
  return 0.5 * (std::log(delta) + a / delta);
}

std::size_t PairSummary::combo(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= p_) throw std::out_of_range("PairSummary: variable index out of range");
  // row-major upper triangle including the diagonal
  return static_cast<std::size_t>(i * p_ - i * (i - 1) / 2 + (j - i));
}

PairSummary::PairSummary(const Dataset& data, const Window& window) : p_(data.p()), window_(window) {
  check_window(window);
  const int S = data.n_sites();
  const int T = data.n_days();
  const auto& days = data.days();
  const Eigen::MatrixXd dist = data.sites().distance_matrix();
  const int span = T > 0 ? days.back() - days.front() : 0;
  const int uw = static_cast<int>(std::min<double>(std::floor(window.d_t_days), span));
  const std::size_t n_raw = static_cast<std::size_t>(S) * static_cast<std::size_t>(S) * static_cast<std::size_t>(uw + 1);
  const std::size_t n_combo = static_cast<std::size_t>(p_ * (p_ + 1) / 2);

  struct Acc {
    double n = 0, sii = 0, sjj = 0, sij = 0;
  };
  std::vector<std::vector<Acc>> acc(n_combo, std::vector<Acc>(n_raw));

  for (int r = 0; r < data.n_reps(); ++r) {
    for (int da = 0; da < T; ++da) {
      for (int db = 0; db < T; ++db) {
        const int au = std::abs(days[static_cast<std::size_t>(db)] - days[static_cast<std::size_t>(da)]);
        const bool t_in = au <= window.d_t_days;
        for (int sa = 0; sa < S; ++sa) {
          for (int sb = 0; sb < S; ++sb) {
            const bool in = t_in && dist(sa, sb) <= window.d_s_km;
            const int lo = std::min(sa, sb);
            const int hi = std::max(sa, sb);
            const std::size_t raw =
                in ? (static_cast<std::size_t>(lo) * static_cast<std::size_t>(S) + static_cast<std::size_t>(hi)) *
                             static_cast<std::size_t>(uw + 1) +
                         static_cast<std::size_t>(au)
                   : 0;
            const bool same_ok = da < db || (da == db && sa < sb);
            std::size_t c = 0;
            for (int i = 0; i < p_; ++i) {
              const double zi = data.at(r, da, sa, i);
              for (int j = i; j < p_; ++j, ++c) {
                if (i == j && !same_ok) continue;
                if (std::isnan(zi)) continue;
                const double zj = data.at(r, db, sb, j);
                if (std::isnan(zj)) continue;
                total_ += 1.0;
                if (!in) continue;
                used_ += 1.0;
                Acc& x = acc[c][raw];
                x.n += 1.0;
                x.sii += zi * zi;
                x.sjj += zj * zj;
                x.sij += zi * zj;
              }
            }
          }
        }
      }
    }
  }

  std::map<std::size_t, std::uint32_t> lag_index;
  for (std::size_t c = 0; c < n_combo; ++c)
    for (std::size_t raw = 0; raw < n_raw; ++raw)
      if (acc[c][raw].n > 0.0 && !lag_index.count(raw)) lag_index.emplace(raw, 0);
  for (auto& [raw, idx] : lag_index) {
    idx = static_cast<std::uint32_t>(lags_.size());
    const std::size_t sp = raw / static_cast<std::size_t>(uw + 1);
    const auto u = static_cast<double>(raw % static_cast<std::size_t>(uw + 1));
    const auto a = static_cast<Eigen::Index>(sp / static_cast<std::size_t>(S));
    const auto b = static_cast<Eigen::Index>(sp % static_cast<std::size_t>(S));
    lags_.push_back({dist(a, b), u});
  }
  classes_.resize(n_combo);
  for (std::size_t c = 0; c < n_combo; ++c)
    for (std::size_t raw = 0; raw < n_raw; ++raw) {
      const Acc& x = acc[c][raw];
      if (x.n > 0.0) classes_[c].push_back({lag_index.at(raw), x.n, x.sii, x.sjj, x.sij});
    }
}

WplEvaluator::WplEvaluator(const PairSummary& summary) : summary_(summary) {
  cache_.resize(static_cast<std::size_t>(summary.p() * (summary.p() + 1) / 2));
}

double WplEvaluator::operator()(const AnyModel& model) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  diagnostic_.clear();
  const int p = summary_.p();
  if (num_variables(model) != p) throw std::invalid_argument("wpl: model and data have different numbers of variables");
  const ValidityReport rep = validate(model);
  if (!rep.valid) {
    diagnostic_ = "invalid parameters: " + rep.violations.front();
    return inf;
  }
  const CompositeModel* cm = std::get_if<CompositeModel>(&model);
  const ModelSpec& w = cm ? cm->spacetime : std::get<ModelSpec>(model);
  const auto& lags = summary_.lags();

  std::vector<double> x_decay;
  if (cm) {
    double umax = 0.0;
    for (const auto& l : lags) umax = std::max(umax, l.u);
    x_decay.resize(static_cast<std::size_t>(umax) + 1);
    for (std::size_t u = 0; u < x_decay.size(); ++u)
      x_decay[u] = u == 0 ? 1.0 : 1.0 / (cm->temporal.alpha * std::pow(static_cast<double>(u), 2.0 * cm->temporal.a) + 1.0);
  }

  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      const auto& classes = summary_.classes(i, j);
      if (classes.empty()) continue;
      const auto& mi = w.marginals[static_cast<std::size_t>(i)];
      const auto& mj = w.marginals[static_cast<std::size_t>(j)];
      const CrossParams cp = w.family == Family::GneitingMatern
                                 ? kernels::cross_params_matern(mi, mj, w.beta(i, j))
                                 : kernels::cross_params_cauchy(mi, mj, w.beta(i, j));
      const double rho = i == j ? 1.0 : cp.rho;
      Entry& e = cache_[summary_.combo(i, j)];
      const CacheKey key{cp.r,
                         cp.nu,
                         w.family == Family::GneitingCauchy ? w.lambda : 0.0,
                         w.temporal.alpha,
                         w.temporal.a,
                         w.temporal.b,
                         w.temporal.tau,
                         static_cast<int>(w.family)};
      if (!e.filled || !(e.key == key)) {
        ModelSpec one;
        one.family = w.family;
        one.p = 1;
        one.d = w.d;
        one.marginals = {{1.0, cp.nu, cp.r}};
        one.beta = Eigen::MatrixXd::Identity(1, 1);
        one.temporal = w.temporal;
        one.lambda = w.lambda;
        const GneitingCovariance g(one);
        e.shape.resize(classes.size());
        for (std::size_t k = 0; k < classes.size(); ++k) {
          const Lag& l = lags[classes[k].lag];
          e.shape[k] = g(0, 0, l.h, l.u);
        }
        e.key = key;
        e.filled = true;
      }
      double var_i = mi.sigma * mi.sigma;
      double var_j = mj.sigma * mj.sigma;
      double xs = 0.0;
      if (cm) {
        const double sxi = cm->temporal.sigma[static_cast<std::size_t>(i)];
        const double sxj = cm->temporal.sigma[static_cast<std::size_t>(j)];
        var_i += sxi * sxi;
        var_j += sxj * sxj;
        xs = i == j ? sxi * sxj : sxi * sxj * cm->temporal.beta(i, j);
      }
      const double ws = mi.sigma * mj.sigma * rho;
      double part = 0.0;
      for (std::size_t k = 0; k < classes.size(); ++k) {
        const LagClass& lc = classes[k];
        double c = ws * e.shape[k];
        if (cm) c += xs * x_decay[static_cast<std::size_t>(lags[lc.lag].u)];
        const double delta = var_i * var_j - c * c;
        if (!(delta > 0.0) || !std::isfinite(delta)) {
          std::ostringstream msg;
          msg << "degenerate pair for variables (" << i + 1 << ", " << j + 1 << ") at h = " << lags[lc.lag].h
              << " km, u = " << lags[lc.lag].u << ": var_i var_j - c^2 = " << delta;
          diagnostic_ = msg.str();
          return inf;
        }
        part += lc.n * std::log(delta) + (var_j * lc.sii - 2.0 * c * lc.sij + var_i * lc.sjj) / delta;
      }
      total += 0.5 * part;
    }
  }
  if (!std::isfinite(total)) {
    diagnostic_ = "non-finite objective";
    return inf;
  }
  return total;
}

double wpl(const AnyModel& model, const Dataset& data, const Window& window) {
  const PairSummary s(data, window);
  WplEvaluator eval(s);
  return eval(model);
}

double full_nll(const AnyModel& model, const Dataset& data, int threads) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (num_variables(model) != data.p()) throw std::invalid_argument("full_nll: model and data have different numbers of variables");
  if (!validate(model).valid) return inf;
  const PointSet pts = data.grid_points();
  const Eigen::MatrixXd sigma = assemble_sigma(model, pts, data.sites(), threads);
  const auto n = static_cast<Eigen::Index>(pts.size());
  std::map<std::vector<bool>, std::vector<int>> groups;
  for (int r = 0; r < data.n_reps(); ++r) {
    const Eigen::VectorXd z = data.replicate_vector(r);
    std::vector<bool> mask(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) mask[static_cast<std::size_t>(k)] = !std::isnan(z(k));
    groups[mask].push_back(r);
  }
  double total = 0.0;
  for (const auto& [mask, reps] : groups) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < n; ++k)
      if (mask[static_cast<std::size_t>(k)]) idx.push_back(k);
    const auto m = static_cast<Eigen::Index>(idx.size());
    if (m == 0) continue;
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = sigma(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) return inf;
    const Eigen::MatrixXd L = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (!(L(k, k) > 0.0)) return inf;
      logdet += 2.0 * std::log(L(k, k));
    }
    for (int r : reps) {
      const Eigen::VectorXd z = data.replicate_vector(r);
      Eigen::VectorXd zs(m);
      for (Eigen::Index a = 0; a < m; ++a) zs(a) = z(idx[static_cast<std::size_t>(a)]);
      const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(zs);
      total += 0.5 * (logdet + y.squaredNorm() + static_cast<double>(m) * std::log(2.0 * std::numbers::pi));
    }
  }
  return std::isfinite(total) ? total : inf;
}

}  // namespace stmv
