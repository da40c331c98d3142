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
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"
#include "stmv/specialfn.hpp"
#include "support.hpp"

using stmv::testing::rel_err;
namespace sf = stmv::specialfn;

TEST_CASE("log_gamma reference values") {
  CHECK(sf::log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rel_err(sf::log_gamma(0.5), 0.5 * std::log(std::numbers::pi)) < 1e-13);
  CHECK(rel_err(sf::log_gamma(7.3), 7.147892523022249033) < 1e-13);
  CHECK(std::abs(sf::log_gamma(2.0)) < 1e-15);
  CHECK_THROWS_AS(sf::log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(sf::log_gamma(-1.5), std::domain_error);
}

TEST_CASE("log_gamma recurrence on [1e-3, 1e3]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lx(std::log(1e-3), std::log(1e3));
  for (int k = 0; k < 2000; ++k) {
    const double x = std::exp(lx(rng));
    const double lhs = sf::log_gamma(x + 1.0);
    const double rhs = sf::log_gamma(x) + std::log(x);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    CHECK(rel_err(sf::log_gamma(x), std::lgamma(x)) < 1e-12 + 1e-14 / std::max(1e-3, std::abs(std::lgamma(x))));
  }
}

TEST_CASE("bessel_k closed forms") {
  CHECK(rel_err(sf::bessel_k(0.5, 1.0), 0.4610685044478945) < 1e-13);
  CHECK(rel_err(sf::bessel_k(1.5, 2.0), std::sqrt(std::numbers::pi / 4.0) * std::exp(-2.0) * 1.5) < 1e-13);
  CHECK(rel_err(sf::bessel_k(0.7, 0.35), 1.7834048615345070941) < 1e-12);
  CHECK(sf::bessel_k(-0.7, 0.35) == sf::bessel_k(0.7, 0.35));
  CHECK_THROWS_AS(sf::bessel_k(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(sf::bessel_k(1.0, -2.0), std::domain_error);
}

TEST_CASE("bessel_k half order matches the exponential form for all x") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> lx(std::log(1e-6), std::log(50.0));
  for (int k = 0; k < 2000; ++k) {
    const double x = std::exp(lx(rng));
    const double want = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
    CHECK(rel_err(sf::bessel_k(0.5, x), want) < 1e-12);
  }
}

TEST_CASE("bessel_k agrees with an independent implementation over the supported box") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> un(0.0, 5.0);
  std::uniform_real_distribution<double> lx(std::log(1e-6), std::log(50.0));
  for (int k = 0; k < 3000; ++k) {
    const double nu = un(rng);
    const double x = std::exp(lx(rng));
    CHECK(rel_err(sf::bessel_k(nu, x), boost::math::cyl_bessel_k(nu, x)) < 1e-10);
  }
}

TEST_CASE("bessel_k three-term recurrence") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> un(1.0, 4.0);
  std::uniform_real_distribution<double> lx(std::log(1e-3), std::log(50.0));
  for (int k = 0; k < 2000; ++k) {
    const double nu = un(rng);
    const double x = std::exp(lx(rng));
    const double lhs = sf::bessel_k(nu + 1.0, x);
    const double rhs = sf::bessel_k(nu - 1.0, x) + 2.0 * nu / x * sf::bessel_k(nu, x);
    CHECK(rel_err(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("bessel_k branches agree at the switch point") {
  for (double nu : {0.0, 0.3, 0.5, 1.2, 2.7, 4.9}) {
    const double below = sf::bessel_k(nu, std::nextafter(sf::kBesselSeriesSwitch, 0.0));
    const double at = sf::bessel_k(nu, sf::kBesselSeriesSwitch);
    CHECK(rel_err(below, at) < 1e-13);
  }
}

TEST_CASE("bessel_k saturates to zero on underflow") {
  CHECK(sf::bessel_k(1.0, 800.0) == 0.0);
  CHECK(sf::bessel_k(0.0, 1e5) == 0.0);
  CHECK(sf::bessel_k(2.0, 700.0) > 0.0);
}

TEST_CASE("standard normal") {
  CHECK(rel_err(sf::std_normal_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-15);
  CHECK(sf::std_normal_cdf(0.0) == 0.5);
  CHECK(std::abs(sf::std_normal_cdf(1.96) - 0.97500210485177956586) < 1e-15);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = n(rng);
    CHECK(std::abs(sf::std_normal_cdf(x) + sf::std_normal_cdf(-x) - 1.0) < 1e-12);
  }
}
