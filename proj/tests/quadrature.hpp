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

#ifndef STMV_TESTS_QUADRATURE_HPP
#define STMV_TESTS_QUADRATURE_HPP

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "stmv/kernels.hpp"
#include "stmv/specialfn.hpp"

namespace stmv::testing {

/// int_0^inf exp(-s (r h)^2 / 4) s^{-1-nu} e^{-1/s} / Gamma(nu) ds, the Matern
/// mixture integral after xi = (r^2 / 4) s.
inline double matern_by_mixture(double h, double r, double nu) {
  const double q = 0.25 * (r * h) * (r * h);
  const double lg = specialfn::log_gamma(nu);
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(-q * s - (1.0 + nu) * std::log(s) - 1.0 / s - lg);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 1e-14);
}

/// Cauchy mixture after xi = r s: int exp(-r h^lambda s) s^{nu-1} e^{-s} / Gamma(nu) ds.
inline double cauchy_by_mixture(double h, double r, double nu, double lambda) {
  const double q = r * std::pow(h, lambda);
  const double lg = specialfn::log_gamma(nu);
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(-(q + 1.0) * s + (nu - 1.0) * std::log(s) - lg);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 1e-14);
}

/// C_ij(h, u) rebuilt from the mixture representation of the spatial part.
inline double cov_by_mixture(const ModelSpec& m, int i, int j, double h, double u) {
  const auto& mi = m.marginals[i];
  const auto& mj = m.marginals[j];
  const CrossParams c = m.family == Family::GneitingMatern ? kernels::cross_params_matern(mi, mj, m.beta(i, j))
                                                           : kernels::cross_params_cauchy(mi, mj, m.beta(i, j));
  const double rho = i == j ? 1.0 : c.rho;
  const double g = m.temporal.alpha * std::pow(std::abs(u), 2.0 * m.temporal.a) + 1.0;
  const double hs = h / std::pow(g, 0.5 * m.temporal.b);
  const double f = m.family == Family::GneitingMatern ? matern_by_mixture(hs, c.r, c.nu)
                                                      : cauchy_by_mixture(hs, c.r, c.nu, m.lambda);
  return mi.sigma * mj.sigma * rho * std::pow(g, -m.temporal.tau) * f;
}

}  // namespace stmv::testing

#endif  // STMV_TESTS_QUADRATURE_HPP
