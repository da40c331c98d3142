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

#include "stmv/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace stmv {

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double fx, double step,
                                   int* evaluations) {
  const auto n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd y = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    y(k) = x(k) + step;
    const double fp = f(y);
    y(k) = x(k) - step;
    const double fm = f(y);
    y(k) = x(k);
    if (evaluations) *evaluations += 2;
    const bool okp = std::isfinite(fp);
    const bool okm = std::isfinite(fm);
    if (okp && okm) g(k) = (fp - fm) / (2.0 * step);
    else if (okp) g(k) = (fp - fx) / step;
    else if (okm) g(k) = (fx - fm) / step;
    else g(k) = 0.0;
  }
  return g;
}

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, double f0, const BfgsOptions& opts) {
  const auto n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.f = f0;
  if (n == 0 || !std::isfinite(f0)) return res;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = numerical_gradient(f, res.x, res.f, opts.grad_step, &res.evaluations);
  bool scaled = false;
  constexpr double c1 = 1e-4;

  for (int it = 0; it < opts.max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    Eigen::VectorXd d = -H * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      d = -g;
      slope = g.dot(d);
    }
    if (!scaled) {
      const double len = d.norm();
      if (len > opts.max_step) {
        d *= opts.max_step / len;
        slope = g.dot(d);
      }
    }

    double step = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = res.x + step * d;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.f + c1 * step * slope) {
        accepted = true;
        break;
      }
      if (std::isfinite(f_new)) {
        // minimiser of the quadratic through f(0), f'(0), f(step)
        const double denom = 2.0 * (f_new - res.f - slope * step);
        double trial = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
        step = std::clamp(trial, 0.1 * step, 0.5 * step);
      } else {
        step *= 0.25;
      }
    }
    if (!accepted) break;

    const double gain = res.f - f_new;
    const Eigen::VectorXd g_new = numerical_gradient(f, x_new, f_new, opts.grad_step, &res.evaluations);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    res.iterations = it + 1;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (gain < opts.tol) break;
  }
  return res;
}

}  // namespace stmv
