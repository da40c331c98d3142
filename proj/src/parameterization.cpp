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

#include "stmv/parameterization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stmv {

namespace {

double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double logit(double y) { return std::log(y) - std::log1p(-y); }

double inside(double v, double lo, double hi) {
  const double pad = 1e-9 * (hi - lo);
  return std::clamp(v, lo + pad, hi - pad);
}

std::string idx(int i) { return std::to_string(i + 1); }

}  // namespace

Eigen::MatrixXd correlation_from_unconstrained(const Eigen::VectorXd& z, int p) {
  if (z.size() != p * (p - 1) / 2) throw std::invalid_argument("correlation_from_unconstrained: wrong length");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  L(0, 0) = 1.0;
  int k = 0;
  for (int i = 1; i < p; ++i) {
    double rem = 1.0;
    for (int j = 0; j < i; ++j) {
      const double c = std::tanh(z(k++));
      L(i, j) = c * std::sqrt(rem);
      rem -= L(i, j) * L(i, j);
    }
    L(i, i) = std::sqrt(std::max(rem, 0.0));
  }
  Eigen::MatrixXd c = L * L.transpose();
  for (int i = 0; i < p; ++i) {
    c(i, i) = 1.0;
    for (int j = i + 1; j < p; ++j) c(j, i) = c(i, j);
  }
  return c;
}

Eigen::VectorXd unconstrained_from_correlation(const Eigen::MatrixXd& c) {
  const auto p = static_cast<int>(c.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw std::domain_error("unconstrained_from_correlation: matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::VectorXd z(p * (p - 1) / 2);
  int k = 0;
  for (int i = 1; i < p; ++i) {
    double rem = 1.0;
    for (int j = 0; j < i; ++j) {
      const double pc = std::clamp(L(i, j) / std::sqrt(std::max(rem, 1e-300)), -1.0 + 1e-12, 1.0 - 1e-12);
      z(k++) = std::atanh(pc);
      rem -= L(i, j) * L(i, j);
    }
  }
  return z;
}

int ParameterMap::add(const std::string& name) {
  names_.push_back(name);
  return static_cast<int>(names_.size()) - 1;
}

ParameterMap::ParameterMap(ParamOptions opts, double b) : opts_(opts), b_(b) {
  const int p = opts_.p;
  if (p < 1) throw std::invalid_argument("ParameterMap: p must be >= 1");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("ParameterMap: b must lie in [0, 1]");
  const bool shared = shares_margins(opts_.variant);
  const int nm = shared ? 1 : p;

  sigma0_ = static_cast<int>(names_.size());
  for (int i = 0; i < p; ++i) add((opts_.composite ? "sigmaX_" : "sigma_") + idx(i));
  beta0_ = static_cast<int>(names_.size());
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) add("beta_" + idx(i) + idx(j));
  nu0_ = static_cast<int>(names_.size());
  for (int i = 0; i < nm; ++i) add(shared ? std::string("nu") : "nu_" + idx(i));
  r0_ = static_cast<int>(names_.size());
  for (int i = 0; i < nm; ++i) add(shared ? std::string("r") : "r_" + idx(i));
  alpha_ = add("alpha");
  a_ = add("a");
  if (opts_.fit_tau) tau_ = add("tau");
  if (opts_.family == Family::GneitingCauchy && opts_.fit_lambda) lambda_ = add("lambda");
  if (opts_.composite) {
    betax0_ = static_cast<int>(names_.size());
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) add("betaX_" + idx(i) + idx(j));
    alphax_ = add("alphaX");
    ax_ = add("aX");
  }

  const int nb = p * (p - 1) / 2;
  auto range = [](int start, int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = start + k;
    return v;
  };
  if (nb > 0) blocks_.push_back({"beta", range(beta0_, nb)});
  if (opts_.composite && nb > 0) blocks_.push_back({"betaX", range(betax0_, nb)});
  for (int i = 0; i < p; ++i) {
    blocks_.push_back({names_[static_cast<std::size_t>(sigma0_ + i)], {sigma0_ + i}});
    if (!shared) blocks_.push_back({"nu_r_" + idx(i), {nu0_ + i, r0_ + i}});
  }
  if (shared) blocks_.push_back({"nu_r", {nu0_, r0_}});
  Block temporal{"temporal", {a_, alpha_}};
  if (tau_ >= 0) temporal.index.push_back(tau_);
  blocks_.push_back(temporal);
  if (opts_.composite) blocks_.push_back({"temporalX", {ax_, alphax_}});
  if (lambda_ >= 0) blocks_.push_back({"lambda", {lambda_}});
}

Eigen::VectorXd ParameterMap::encode(const AnyModel& model) const {
  const int p = opts_.p;
  if (num_variables(model) != p) throw std::invalid_argument("ParameterMap::encode: wrong number of variables");
  if (std::holds_alternative<CompositeModel>(model) != opts_.composite)
    throw std::invalid_argument("ParameterMap::encode: model kind does not match the parameter map");
  const CompositeModel* cm = std::get_if<CompositeModel>(&model);
  const ModelSpec& w = cm ? cm->spacetime : std::get<ModelSpec>(model);
  Eigen::VectorXd th(size());

  auto pd_corr = [p](Eigen::MatrixXd c) {
    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-6);
    Eigen::MatrixXd q = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd d = q.diagonal().cwiseSqrt().cwiseInverse();
    q = d.asDiagonal() * q * d.asDiagonal();
    for (int i = 0; i < p; ++i) q(i, i) = 1.0;
    return q;
  };

  for (int i = 0; i < p; ++i) {
    if (cm) th(sigma0_ + i) = logit(inside(cm->temporal.sigma[static_cast<std::size_t>(i)], 0.0, 1.0));
    else th(sigma0_ + i) = std::log(w.marginals[static_cast<std::size_t>(i)].sigma);
  }
  if (p > 1) th.segment(beta0_, p * (p - 1) / 2) = unconstrained_from_correlation(pd_corr(w.beta));
  const int nm = shares_margins(opts_.variant) ? 1 : p;
  for (int i = 0; i < nm; ++i) {
    const auto& mg = w.marginals[static_cast<std::size_t>(i)];
    th(nu0_ + i) = logit(inside(mg.nu, 0.0, kNuCap) / kNuCap);
    th(r0_ + i) = std::log(std::max(mg.r - kMinInverseRange, 1e-9 * kMinInverseRange));
  }
  th(alpha_) = std::log(w.temporal.alpha);
  th(a_) = logit(inside(w.temporal.a, 0.0, 1.0));
  if (tau_ >= 0) th(tau_) = std::log(std::max(w.temporal.tau - 0.5 * b_ * opts_.d, 1e-9));
  if (lambda_ >= 0) th(lambda_) = logit(inside(w.lambda, 0.0, 2.0) / 2.0);
  if (cm) {
    if (p > 1) th.segment(betax0_, p * (p - 1) / 2) = unconstrained_from_correlation(pd_corr(cm->temporal.beta));
    th(alphax_) = std::log(cm->temporal.alpha);
    th(ax_) = logit(inside(cm->temporal.a, 0.0, 1.0));
  }
  return th;
}

AnyModel ParameterMap::decode(const Eigen::VectorXd& th) const {
  if (th.size() != size()) throw std::invalid_argument("ParameterMap::decode: wrong vector length");
  const int p = opts_.p;
  const bool shared = shares_margins(opts_.variant);
  ModelSpec w;
  w.family = opts_.family;
  w.p = p;
  w.d = opts_.d;
  w.marginals.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    auto& mg = w.marginals[static_cast<std::size_t>(i)];
    const int k = shared ? 0 : i;
    mg.sigma = opts_.composite ? 1.0 : std::exp(th(sigma0_ + i));
    mg.nu = kNuCap * logistic(th(nu0_ + k));
    mg.r = kMinInverseRange + std::exp(th(r0_ + k));
  }
  w.beta = p > 1 ? correlation_from_unconstrained(th.segment(beta0_, p * (p - 1) / 2), p) : Eigen::MatrixXd::Identity(1, 1);
  w.temporal.alpha = std::exp(th(alpha_));
  w.temporal.a = logistic(th(a_));
  w.temporal.b = b_;
  w.temporal.tau = tau_ >= 0 ? 0.5 * b_ * opts_.d + std::exp(th(tau_)) : opts_.tau;
  w.lambda = lambda_ >= 0 ? 2.0 * logistic(th(lambda_)) : opts_.lambda;
  if (!opts_.composite) return w;

  CompositeModel cm;
  cm.spacetime = std::move(w);
  cm.temporal.sigma.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) cm.temporal.sigma[static_cast<std::size_t>(i)] = logistic(th(sigma0_ + i));
  cm.temporal.beta =
      p > 1 ? correlation_from_unconstrained(th.segment(betax0_, p * (p - 1) / 2), p) : Eigen::MatrixXd::Identity(1, 1);
  cm.temporal.alpha = std::exp(th(alphax_));
  cm.temporal.a = logistic(th(ax_));
  apply_variance_constraint(cm);
  return cm;
}

}  // namespace stmv
