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

#include <cmath>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "doctest.h"
#include "quadrature.hpp"
#include "stmv/kernels.hpp"
#include "support.hpp"

using namespace stmv;
using stmv::testing::rel_err;

TEST_CASE("matern_corr special orders") {
  CHECK(kernels::matern_corr(0.0, 0.3, 1.7) == 1.0);
  CHECK(rel_err(kernels::matern_corr(2.0, 0.7, 1.5), 2.4 * std::exp(-1.4)) < 1e-12);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lh(std::log(1e-3), std::log(30.0));
  std::uniform_real_distribution<double> lr(std::log(0.05), std::log(3.0));
  for (int k = 0; k < 1000; ++k) {
    const double h = std::exp(lh(rng));
    const double r = std::exp(lr(rng));
    const double x = r * h;
    CHECK(rel_err(kernels::matern_corr(h, r, 0.5), std::exp(-x)) < 1e-11);
    CHECK(rel_err(kernels::matern_corr(h, r, 1.5), (1.0 + x) * std::exp(-x)) < 1e-11);
    CHECK(rel_err(kernels::matern_corr(h, r, 2.5), (1.0 + x + x * x / 3.0) * std::exp(-x)) < 1e-11);
  }
}

TEST_CASE("cauchy_corr values") {
  CHECK(kernels::cauchy_corr(0.0, 1.0, 1.0, 1.0) == 1.0);
  CHECK(rel_err(kernels::cauchy_corr(2.0, 0.5, 1.5, 2.0), std::pow(3.0, -1.5)) < 1e-14);
  CHECK(rel_err(kernels::cauchy_corr(1.3, 0.8, 0.6, 1.2), 0.641448271079008489) < 1e-13);
  CHECK(rel_err(stmv::testing::cauchy_by_mixture(1.3, 0.8, 0.6, 1.2), 0.641448271079008489) < 1e-9);
  CHECK_THROWS_AS(kernels::cauchy_corr(1.0, 1.0, 1.0, 2.5), std::domain_error);
}

TEST_CASE("kernels are nonincreasing in distance") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double r = 0.1 + 2.0 * u01(rng);
    const double nu = 0.1 + 4.0 * u01(rng);
    const double lambda = 0.1 + 1.9 * u01(rng);
    double pm = 1.0;
    double pc = 1.0;
    for (int s = 0; s <= 400; ++s) {
      const double h = 0.05 * s;
      const double m = kernels::matern_corr(h, r, nu);
      const double c = kernels::cauchy_corr(h, r, nu, lambda);
      CHECK(m <= pm);
      CHECK(c <= pc);
      CHECK(m >= 0.0);
      CHECK(c > 0.0);
      pm = m;
      pc = c;
    }
  }
}

TEST_CASE("psi") {
  TemporalParams t{0.8, 0.75, 1.0, 1.0};
  CHECK(kernels::psi(0.0, t) == 1.0);
  CHECK(rel_err(kernels::psi(1.0, t), 1.8) < 1e-15);
  t.b = 0.0;
  CHECK(kernels::psi(17.0, t) == 1.0);
}

TEST_CASE("Matern cross parameters") {
  const MarginalParams a{1.0, 0.9, 0.02};
  const CrossParams same = kernels::cross_params_matern(a, a, 0.35);
  CHECK(rel_err(same.r, 0.02) < 1e-15);
  CHECK(same.nu == 0.9);
  CHECK(rel_err(same.rho, 0.35) < 1e-14);

  const ModelSpec m = stmv::testing::reference_model();
  const CrossParams c12 = kernels::cross_params_matern(m.marginals[0], m.marginals[1], m.beta(0, 1));
  CHECK(rel_err(1.0 / c12.r, 220.86305214969308845) < 1e-14);
  CHECK(c12.nu == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(rel_err(c12.rho, -0.39580424340562595547) < 1e-13);
  const CrossParams c13 = kernels::cross_params_matern(m.marginals[0], m.marginals[2], m.beta(0, 2));
  CHECK(rel_err(c13.rho, -0.38863099267537697187) < 1e-13);
  const CrossParams c23 = kernels::cross_params_matern(m.marginals[1], m.marginals[2], m.beta(1, 2));
  CHECK(rel_err(c23.rho, 0.23694495054453940523) < 1e-13);
  CHECK(std::abs(c12.rho) <= std::abs(m.beta(0, 1)));
}

TEST_CASE("Cauchy cross parameters") {
  const MarginalParams a{1.0, 0.5, 1.0};
  const MarginalParams b{1.0, 1.5, 4.0};
  const CrossParams c = kernels::cross_params_cauchy(a, b, 0.3);
  CHECK(rel_err(c.r, 1.6) < 1e-15);
  CHECK(c.nu == 1.0);
  CHECK(rel_err(c.rho, 0.13540550005146150887) < 1e-13);
  const CrossParams same = kernels::cross_params_cauchy(b, b, -0.2);
  CHECK(rel_err(same.r, 4.0) < 1e-15);
  CHECK(rel_err(same.rho, -0.2) < 1e-14);
}

TEST_CASE("nu_ij is the arithmetic mean and |rho_ij| <= |beta_ij|") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    for (Family f : {Family::GneitingMatern, Family::GneitingCauchy}) {
      const ModelSpec m = stmv::testing::random_model(rng, f, 2);
      const CrossParams c = f == Family::GneitingMatern
                                ? kernels::cross_params_matern(m.marginals[0], m.marginals[1], m.beta(0, 1))
                                : kernels::cross_params_cauchy(m.marginals[0], m.marginals[1], m.beta(0, 1));
      CHECK(c.nu == doctest::Approx(0.5 * (m.marginals[0].nu + m.marginals[1].nu)).epsilon(1e-15));
      CHECK(c.r > 0.0);
      CHECK(std::abs(c.rho) <= std::abs(m.beta(0, 1)) * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("mixture densities integrate to one and reproduce the kernels") {
  boost::math::quadrature::exp_sinh<double> q;
  auto mm = [](double x) { return x <= 0.0 ? 0.0 : kernels::mixture_density_matern(x, 2.0, 0.7); };
  auto mc = [](double x) { return x <= 0.0 ? 0.0 : kernels::mixture_density_cauchy(x, 2.0, 0.7); };
  CHECK(std::abs(q.integrate(mm, 1e-13) - 1.0) < 1e-9);
  CHECK(std::abs(q.integrate(mc, 1e-13) - 1.0) < 1e-9);
  auto lap = [](double x) { return x <= 0.0 ? 0.0 : std::exp(-2.25 * x) * kernels::mixture_density_matern(x, 0.9, 1.1); };
  const double via_mix = q.integrate(lap, 1e-13);
  CHECK(rel_err(via_mix, 0.49979792742820898771) < 1e-9);
  CHECK(rel_err(kernels::matern_corr(1.5, 0.9, 1.1), 0.49979792742820898771) < 1e-13);
  CHECK_THROWS_AS(kernels::mixture_density_matern(0.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kernels::mixture_density_cauchy(-1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("validate") {
  const ModelSpec m = stmv::testing::reference_model();
  CHECK(kernels::validate(m).valid);

  ModelSpec bad = m;
  bad.beta.setConstant(-0.9);
  bad.beta.diagonal().setOnes();
  auto rep = kernels::validate(bad);
  CHECK_FALSE(rep.valid);
  CHECK(rep.violations.size() == 1);

  bad = m;
  bad.temporal.tau = 0.3;
  rep = kernels::validate(bad);
  CHECK_FALSE(rep.valid);
  CHECK(rep.violations.size() == 1);

  bad = m;
  bad.temporal.a = 1.5;
  bad.marginals[1].nu = -1.0;
  CHECK(kernels::validate(bad).violations.size() == 2);

  bad = m;
  bad.family = Family::GneitingCauchy;
  bad.lambda = 2.5;
  CHECK_FALSE(kernels::validate(bad).valid);
}

TEST_CASE("cov origin, symmetry and bounds") {
  const ModelSpec m = stmv::testing::reference_model();
  CHECK(cov(m, 1, 1, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  const CrossParams c12 = kernels::cross_params_matern(m.marginals[0], m.marginals[1], m.beta(0, 1));
  CHECK(cov(m, 0, 1, 0.0, 0.0) == doctest::Approx(c12.rho).epsilon(1e-15));
  CHECK(rel_err(cov(m, 0, 1, 150.0, 2.0), -0.10932325502192561620) < 1e-12);
  CHECK(rel_err(stmv::testing::cov_by_mixture(m, 0, 1, 150.0, 2.0), -0.10932325502192561620) < 1e-8);
  CHECK_THROWS_AS(cov(m, 0, 3, 1.0, 0.0), std::out_of_range);
  CHECK_THROWS_AS(cov(m, -1, 0, 1.0, 0.0), std::out_of_range);

  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> uh(0.0, 800.0);
  std::uniform_real_distribution<double> uu(-6.0, 6.0);
  for (int k = 0; k < 300; ++k) {
    for (Family f : {Family::GneitingMatern, Family::GneitingCauchy}) {
      const ModelSpec rm = stmv::testing::random_model(rng, f, 3);
      const GneitingCovariance g(rm);
      const double h = uh(rng);
      const double u = std::round(uu(rng));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double v = g(i, j, h, u);
          CHECK(v == g(j, i, h, u));
          CHECK(v == g(i, j, h, -u));
          CHECK(std::abs(v) <= rm.marginals[i].sigma * rm.marginals[j].sigma * (1.0 + 1e-14));
        }
    }
  }
}

TEST_CASE("b = 0 factorises into temporal and spatial parts") {
  ModelSpec m = stmv::testing::reference_model();
  m.temporal.b = 0.0;
  const double h = 100.0;
  const double u = 3.0;
  const double ct = cov(m, 0, 1, 0.0, u);
  const double cs = cov(m, 0, 1, h, 0.0);
  const double c0 = cov(m, 0, 1, 0.0, 0.0);
  CHECK(rel_err(cov(m, 0, 1, h, u), ct * cs / c0) < 1e-13);
}

TEST_CASE("mixture representation matches cov for random models") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> uh(0.0, 600.0);
  std::uniform_int_distribution<int> uu(-5, 5);
  std::uniform_int_distribution<int> ui(0, 2);
  for (int k = 0; k < 100; ++k) {
    for (Family f : {Family::GneitingMatern, Family::GneitingCauchy}) {
      const ModelSpec m = stmv::testing::random_model(rng, f, 3);
      const int i = ui(rng);
      const int j = ui(rng);
      const double h = uh(rng);
      const double u = uu(rng);
      CHECK(rel_err(stmv::testing::cov_by_mixture(m, i, j, h, u), cov(m, i, j, h, u)) < 1e-7);
    }
  }
}
