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

#ifndef STMV_TESTS_SUPPORT_HPP
#define STMV_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stmv/kernels.hpp"

namespace stmv::testing {

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

/// Three-variable Matern model used throughout the estimation study.
inline ModelSpec reference_model() {
  ModelSpec m;
  m.family = Family::GneitingMatern;
  m.p = 3;
  m.d = 2;
  m.marginals = {{1.0, 0.7, 1.0 / 250.0}, {1.0, 0.8, 1.0 / 200.0}, {1.0, 0.4, 1.0 / 350.0}};
  m.beta = Eigen::MatrixXd::Identity(3, 3);
  m.beta(0, 1) = m.beta(1, 0) = -0.40;
  m.beta(0, 2) = m.beta(2, 0) = -0.40;
  m.beta(1, 2) = m.beta(2, 1) = 0.25;
  m.temporal = {0.9, 0.5, 0.8, 1.0};
  return m;
}

/// Random correlation matrix from random unit-norm rows of a factor.
inline Eigen::MatrixXd random_correlation(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd a(p, p + 2);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p + 2; ++j) a(i, j) = n01(rng);
  for (int i = 0; i < p; ++i) a.row(i).normalize();
  Eigen::MatrixXd c = a * a.transpose();
  for (int i = 0; i < p; ++i) c(i, i) = 1.0;
  return c;
}

/// Random feasible model of either family.
inline ModelSpec random_model(std::mt19937_64& rng, Family family, int p) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ModelSpec m;
  m.family = family;
  m.p = p;
  m.d = 2;
  for (int i = 0; i < p; ++i) {
    MarginalParams mp;
    mp.sigma = 0.5 + 1.5 * u01(rng);
    mp.nu = 0.2 + 2.3 * u01(rng);
    mp.r = family == Family::GneitingMatern ? 1.0 / (50.0 + 450.0 * u01(rng)) : 1.0 / (50.0 + 450.0 * u01(rng));
    m.marginals.push_back(mp);
  }
  m.beta = random_correlation(p, rng);
  m.temporal.alpha = 0.2 + 2.0 * u01(rng);
  m.temporal.a = 0.1 + 0.9 * u01(rng);
  m.temporal.b = u01(rng);
  m.temporal.tau = m.temporal.b * m.d / 2.0 + 1.5 * u01(rng);
  m.lambda = 0.3 + 1.7 * u01(rng);
  return m;
}

}  // namespace stmv::testing

#endif  // STMV_TESTS_SUPPORT_HPP
