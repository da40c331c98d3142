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

#include "stmv/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "stmv/specialfn.hpp"

namespace stmv {

std::string to_string(Family f) {
  return f == Family::GneitingMatern ? "matern" : "cauchy";
}

Family family_from_string(const std::string& s) {
  if (s == "matern" || s == "GneitingMatern") return Family::GneitingMatern;
  if (s == "cauchy" || s == "GneitingCauchy") return Family::GneitingCauchy;
  throw std::invalid_argument("unknown model family '" + s + "'");
}

namespace kernels {

namespace {

constexpr double kOriginThreshold = 1.0e-12;

void check_scale_smoothness(double r, double nu, const char* who) {
  if (!(r > 0.0) || !(nu > 0.0) || !std::isfinite(r) || !std::isfinite(nu)) {
    std::ostringstream msg;
    msg << who << ": requires r > 0 and nu > 0 (r=" << r << ", nu=" << nu << ")";
    throw std::domain_error(msg.str());
  }
}

double matern_log_coef(double nu) {
  return (1.0 - nu) * std::numbers::ln2 - specialfn::log_gamma(nu);
}

double matern_eval(double x, double nu, double log_coef) {
  if (x < kOriginThreshold) return 1.0;
  const double k = specialfn::bessel_k(nu, x);
  if (k == 0.0) return 0.0;
  const double v = std::exp(log_coef + nu * std::log(x) + std::log(k));
  return v > 1.0 ? 1.0 : v;
}

}  // namespace

MaternCorrelation::MaternCorrelation(double r, double nu) : r_(r), nu_(nu) {
  check_scale_smoothness(r, nu, "matern_corr");
  log_coef_ = matern_log_coef(nu);
}

double MaternCorrelation::operator()(double h) const { return matern_eval(r_ * h, nu_, log_coef_); }

double matern_corr(double h, double r, double nu) {
  if (h < 0.0) throw std::domain_error("matern_corr: negative distance");
  return MaternCorrelation(r, nu)(h);
}

double cauchy_corr(double h, double r, double nu, double lambda) {
  if (h < 0.0) throw std::domain_error("cauchy_corr: negative distance");
  check_scale_smoothness(r, nu, "cauchy_corr");
  if (!(lambda > 0.0 && lambda <= 2.0)) throw std::domain_error("cauchy_corr: lambda must lie in (0, 2]");
  if (h == 0.0) return 1.0;
  return std::pow(1.0 + r * std::pow(h, lambda), -nu);
}

double psi(double x, const TemporalParams& t) {
  if (x < 0.0) throw std::domain_error("psi: negative argument");
  if (t.b == 0.0) return 1.0;
  return std::pow(t.alpha * std::pow(x, t.a) + 1.0, t.b);
}

namespace {

double gamma_ratio(double nu_i, double nu_j, double nu_ij) {
  return std::exp(specialfn::log_gamma(nu_ij) - 0.5 * specialfn::log_gamma(nu_i) -
                  0.5 * specialfn::log_gamma(nu_j));
}

}  // namespace

CrossParams cross_params_matern(const MarginalParams& i, const MarginalParams& j, double beta_ij) {
  CrossParams c;
  c.r = std::sqrt(0.5 * (i.r * i.r + j.r * j.r));
  c.nu = 0.5 * (i.nu + j.nu);
  // r_i^{nu_i} r_j^{nu_j} / r_ij^{2 nu_ij} in log form to avoid underflow at km scales
  const double log_scale = i.nu * std::log(i.r) + j.nu * std::log(j.r) - 2.0 * c.nu * std::log(c.r);
  c.rho = beta_ij * gamma_ratio(i.nu, j.nu, c.nu) * std::exp(log_scale);
  return c;
}

CrossParams cross_params_cauchy(const MarginalParams& i, const MarginalParams& j, double beta_ij) {
  CrossParams c;
  c.r = 1.0 / (0.5 * (1.0 / i.r + 1.0 / j.r));
  c.nu = 0.5 * (i.nu + j.nu);
  const double log_scale = c.nu * std::log(c.r) - 0.5 * (i.nu * std::log(i.r) + j.nu * std::log(j.r));
  c.rho = beta_ij * gamma_ratio(i.nu, j.nu, c.nu) * std::exp(log_scale);
  return c;
}

double mixture_density_matern(double xi, double r, double nu) {
  if (!(xi > 0.0)) throw std::domain_error("mixture_density_matern: xi must be positive");
  check_scale_smoothness(r, nu, "mixture_density_matern");
  const double q = 0.25 * r * r;
  return std::exp(nu * std::log(q) - (1.0 + nu) * std::log(xi) - specialfn::log_gamma(nu) - q / xi);
}

double mixture_density_cauchy(double xi, double r, double nu) {
  if (!(xi > 0.0)) throw std::domain_error("mixture_density_cauchy: xi must be positive");
  check_scale_smoothness(r, nu, "mixture_density_cauchy");
  return std::exp(-nu * std::log(r) + (nu - 1.0) * std::log(xi) - specialfn::log_gamma(nu) - xi / r);
}

ValidityReport validate(const ModelSpec& m) {
  ValidityReport rep;
  auto fail = [&rep](std::string msg) {
    rep.valid = false;
    rep.violations.push_back(std::move(msg));
  };
  if (m.p < 1) fail("p must be >= 1");
  if (m.d < 1) fail("spatial dimension d must be >= 1");
  if (static_cast<int>(m.marginals.size()) != m.p) fail("number of marginals differs from p");
  for (std::size_t i = 0; i < m.marginals.size(); ++i) {
    const auto& mg = m.marginals[i];
    const std::string tag = "variable " + std::to_string(i + 1) + ": ";
    if (!(mg.sigma > 0.0) || !std::isfinite(mg.sigma)) fail(tag + "sigma must be positive");
    if (!(mg.nu > 0.0) || !std::isfinite(mg.nu)) fail(tag + "nu must be positive");
    if (!(mg.r > 0.0) || !std::isfinite(mg.r)) fail(tag + "r must be positive");
  }
  if (m.beta.rows() != m.p || m.beta.cols() != m.p) {
    fail("beta must be p x p");
  } else {
    bool finite = m.beta.allFinite();
    if (!finite) fail("beta has non-finite entries");
    for (int i = 0; i < m.p && finite; ++i) {
      if (std::abs(m.beta(i, i) - 1.0) > 1e-12) fail("beta diagonal must be 1");
      for (int j = i + 1; j < m.p; ++j) {
        if (std::abs(m.beta(i, j) - m.beta(j, i)) > 1e-12) fail("beta must be symmetric");
        if (std::abs(m.beta(i, j)) > 1.0) fail("|beta_ij| must not exceed 1");
      }
    }
    if (finite) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m.beta + m.beta.transpose()),
                                                         Eigen::EigenvaluesOnly);
      const double min_ev = es.eigenvalues().minCoeff();
      if (min_ev < -1e-10 * m.p) {
        std::ostringstream msg;
        msg << "beta is not positive semi-definite (min eigenvalue " << min_ev << ")";
        fail(msg.str());
      }
    }
  }
  const auto& t = m.temporal;
  if (!(t.alpha > 0.0) || !std::isfinite(t.alpha)) fail("alpha must be positive");
  if (!(t.a > 0.0 && t.a <= 1.0)) fail("a must lie in (0, 1]");
  if (!(t.b >= 0.0 && t.b <= 1.0)) fail("b must lie in [0, 1]");
  if (!(t.tau > 0.0) || !std::isfinite(t.tau)) fail("tau must be positive");
  if (t.tau < 0.5 * t.b * m.d - 1e-12) {
    std::ostringstream msg;
    msg << "tau = " << t.tau << " violates tau >= b d / 2 = " << 0.5 * t.b * m.d;
    fail(msg.str());
  }
  if (m.family == Family::GneitingCauchy && !(m.lambda > 0.0 && m.lambda <= 2.0))
    fail("lambda must lie in (0, 2]");
  return rep;
}

}  // namespace kernels

GneitingCovariance::GneitingCovariance(const ModelSpec& model) : model_(model), p_(model.p) {
  if (static_cast<int>(model.marginals.size()) != p_ || model.beta.rows() != p_ || model.beta.cols() != p_)
    throw std::invalid_argument("GneitingCovariance: inconsistent model dimensions");
  cross_.resize(static_cast<std::size_t>(p_ * p_));
  log_coef_.resize(cross_.size());
  for (int i = 0; i < p_; ++i) {
    for (int j = i; j < p_; ++j) {
      const auto& mi = model.marginals[i];
      const auto& mj = model.marginals[j];
      CrossParams c = model.family == Family::GneitingMatern
                          ? kernels::cross_params_matern(mi, mj, model.beta(i, j))
                          : kernels::cross_params_cauchy(mi, mj, model.beta(i, j));
      if (i == j) c.rho = 1.0;
      if (!(c.r > 0.0) || !(c.nu > 0.0)) throw std::domain_error("GneitingCovariance: invalid cross parameters");
      cross_[i * p_ + j] = cross_[j * p_ + i] = c;
      log_coef_[i * p_ + j] = log_coef_[j * p_ + i] =
          model.family == Family::GneitingMatern ? kernels::matern_log_coef(c.nu) : 0.0;
    }
  }
}

double GneitingCovariance::temporal_factor(double u) const {
  const auto& t = model_.temporal;
  if (u == 0.0) return 1.0;
  const double g = t.alpha * std::pow(std::abs(u), 2.0 * t.a) + 1.0;
  return std::pow(g, -t.tau);
}

double GneitingCovariance::spatial_corr(int i, int j, double h, double u) const {
  const auto& t = model_.temporal;
  double hs = h;
  if (u != 0.0 && t.b != 0.0) {
    const double g = t.alpha * std::pow(std::abs(u), 2.0 * t.a) + 1.0;
    hs = h / std::pow(g, 0.5 * t.b);
  }
  const CrossParams& c = cross_[i * p_ + j];
  if (model_.family == Family::GneitingMatern) return kernels::matern_eval(c.r * hs, c.nu, log_coef_[i * p_ + j]);
  if (hs == 0.0) return 1.0;
  return std::pow(1.0 + c.r * std::pow(hs, model_.lambda), -c.nu);
}

double GneitingCovariance::operator()(int i, int j, double h, double u) const {
  if (i > j) std::swap(i, j);
  const CrossParams& c = cross_[i * p_ + j];
  return model_.marginals[i].sigma * model_.marginals[j].sigma * c.rho * temporal_factor(u) *
         spatial_corr(i, j, h, u);
}

double cov(const ModelSpec& model, int i, int j, double h, double u) {
  if (i < 0 || j < 0 || i >= model.p || j >= model.p) throw std::out_of_range("cov: variable index out of range");
  if (h < 0.0) throw std::domain_error("cov: negative spatial lag");
  return GneitingCovariance(model)(i, j, h, u);
}

}  // namespace stmv
