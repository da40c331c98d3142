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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stmv/empirical.hpp"
#include "stmv/fit.hpp"
#include "stmv/optimize.hpp"
#include "stmv/parameterization.hpp"
#include "stmv/window.hpp"
#include "support.hpp"

using namespace stmv;
using namespace stmv::testing;

namespace {

double min_eig(const Eigen::MatrixXd& m) { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues()(0); }

Dataset white_noise(const SiteTable& sites, int days, int reps, int p, std::uint64_t seed) {
  std::vector<int> t(static_cast<std::size_t>(days));
  for (int k = 0; k < days; ++k) t[static_cast<std::size_t>(k)] = k + 1;
  std::vector<int> ids(static_cast<std::size_t>(reps));
  for (int k = 0; k < reps; ++k) ids[static_cast<std::size_t>(k)] = k + 1;
  Dataset d(sites, t, p, ids);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int r = 0; r < reps; ++r)
    for (int k = 0; k < days; ++k)
      for (int s = 0; s < d.n_sites(); ++s)
        for (int v = 0; v < p; ++v) d.at(r, k, s, v) = n01(rng);
  return d;
}

FitOptions quick_options(Variant v) {
  FitOptions o;
  o.variant = v;
  o.max_outer = 4;
  o.inner.max_iter = 15;
  return o;
}

}  // namespace

TEST_CASE("correlation factor parameterisation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int p : {1, 2, 3, 5}) {
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd z(p * (p - 1) / 2);
      for (Eigen::Index q = 0; q < z.size(); ++q) z(q) = n01(rng);
      const Eigen::MatrixXd c = correlation_from_unconstrained(z, p);
      CHECK(c.diagonal().isOnes(1e-12));
      CHECK((c - c.transpose()).norm() == 0.0);
      CHECK(min_eig(c) > 0.0);
      CHECK((unconstrained_from_correlation(c) - z).norm() < 1e-8);
      const Eigen::MatrixXd wide = correlation_from_unconstrained(3.0 * z, p);
      CHECK(min_eig(wide) > 0.0);
      CHECK((correlation_from_unconstrained(unconstrained_from_correlation(wide), p) - wide).norm() < 1e-12);
    }
  }
  const Eigen::MatrixXd c = correlation_from_unconstrained(Eigen::VectorXd::Constant(3, 40.0), 3);
  CHECK(min_eig(c) > -1e-12);
}

TEST_CASE("parameter map round trip and feasibility") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (Variant v : {Variant::SE, Variant::NSE, Variant::SD, Variant::NSD}) {
    for (int k = 0; k < 10; ++k) {
      ModelSpec m = restrict(random_model(rng, Family::GneitingMatern, 3), v);
      ParamOptions po;
      po.p = 3;
      po.variant = v;
      po.fit_tau = k % 2 == 1;
      po.tau = m.temporal.tau;
      const ParameterMap map(po, m.temporal.b);
      const auto back = std::get<ModelSpec>(map.decode(map.encode(m)));
      for (int i = 0; i < 3; ++i) {
        const auto& x = m.marginals[static_cast<std::size_t>(i)];
        const auto& y = back.marginals[static_cast<std::size_t>(i)];
        CHECK(rel_err(y.sigma, x.sigma) < 1e-9);
        CHECK(rel_err(y.nu, x.nu) < 1e-9);
        CHECK(rel_err(y.r, x.r) < 1e-9);
      }
      CHECK((back.beta - m.beta).norm() < 1e-9);
      CHECK(rel_err(back.temporal.alpha, m.temporal.alpha) < 1e-9);
      CHECK(rel_err(back.temporal.a, m.temporal.a) < 1e-9);
      CHECK(back.temporal.b == m.temporal.b);
      CHECK(rel_err(back.temporal.tau, m.temporal.tau) < 1e-9);

      Eigen::VectorXd theta(map.size());
      for (Eigen::Index q = 0; q < theta.size(); ++q) theta(q) = 3.0 * n01(rng);
      const AnyModel any = map.decode(theta);
      CHECK(validate(any).valid);
      const auto& d = std::get<ModelSpec>(any);
      for (const auto& mp : d.marginals) {
        CHECK(mp.nu < kNuCap);
        CHECK(1.0 / mp.r <= 1.0 / kMinInverseRange);
      }
      if (shares_margins(v)) {
        CHECK(d.marginals[1].nu == d.marginals[0].nu);
        CHECK(d.marginals[2].r == d.marginals[0].r);
      }
    }
  }
  ParamOptions pc;
  pc.p = 2;
  pc.composite = true;
  const ParameterMap cmap(pc, 0.4);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(cmap.size(), 0.3);
  const auto cm = std::get<CompositeModel>(cmap.decode(theta));
  CHECK(validate(AnyModel(cm)).valid);
  for (int i = 0; i < 2; ++i) {
    const double sx = cm.temporal.sigma[static_cast<std::size_t>(i)];
    const double sw = cm.spacetime.marginals[static_cast<std::size_t>(i)].sigma;
    CHECK(sx * sx + sw * sw == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK((cmap.encode(cm) - theta).norm() < 1e-8);
}

TEST_CASE("numerical gradient and BFGS") {
  const Objective rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  Eigen::VectorXd x(2);
  x << -0.7, 1.3;
  const Eigen::VectorXd g = numerical_gradient(rosen, x, rosen(x), 1e-6);
  const double g0 = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
  const double g1 = 200.0 * (x(1) - x(0) * x(0));
  CHECK(rel_err(g(0), g0) < 1e-5);
  CHECK(rel_err(g(1), g1) < 1e-5);

  const Objective one_sided = [](const Eigen::VectorXd& v) { return v(0) < 0.0 ? HUGE_VAL : v(0) * v(0); };
  Eigen::VectorXd at0 = Eigen::VectorXd::Zero(1);
  CHECK(std::isfinite(numerical_gradient(one_sided, at0, 0.0, 1e-6)(0)));

  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Eigen::Vector3d c(1.0, -2.0, 0.5);
  const Objective quad = [&](const Eigen::VectorXd& v) { return 0.5 * (v - c).dot(a * (v - c)); };
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  BfgsOptions o;
  o.tol = 1e-12;
  o.max_iter = 200;
  const BfgsResult res = bfgs_minimize(quad, x0, quad(x0), o);
  CHECK((res.x - c).norm() < 1e-4);
  CHECK(res.f <= quad(x0));
  CHECK(res.iterations <= 200);
}

TEST_CASE("empirical moments against direct sums") {
  std::mt19937_64 rng(23);
  const ModelSpec m = random_model(rng, Family::GneitingMatern, 2);
  const SiteTable sites = random_sites(rng, 4, 300.0);
  Dataset data = simulate_dataset(m, sites, 5, 3, 61);
  data.at(1, 2, 3, 0) = std::nan("");
  const std::vector<double> edges{0.0, 1e-9, 150.0, 450.0};
  const std::vector<int> lags{0, 2};
  const auto cov = empirical_cov(data, edges, lags);
  const auto vg = empirical_variogram(data, edges, lags);
  for (const auto& e : cov) {
    double n = 0.0, s = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int t = 0; t + e.u < 5; ++t)
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            const double h = distance(sites[static_cast<std::size_t>(a)], sites[static_cast<std::size_t>(b)]);
            if (h < e.h_lo || h >= e.h_hi) continue;
            const double x = data.at(r, t, a, e.i), y = data.at(r, t + e.u, b, e.j);
            if (std::isnan(x) || std::isnan(y)) continue;
            n += 1.0;
            s += x * y;
          }
    CHECK(e.n_pairs == n);
    CHECK(e.empty == (n == 0.0));
    if (n > 0.0) CHECK(rel_err(e.value, s / n) < 1e-12);
  }
  for (const auto& e : vg) {
    CHECK(e.i == e.j);
    CHECK(e.value >= 0.0);
    if (e.bin == 0 && e.u == 0) CHECK(e.value == 0.0);
  }
  CHECK_THROWS(empirical_cov(data, {0.0}, lags));
  CHECK_THROWS(empirical_cov(data, {0.0, 5.0, 5.0}, lags));
  CHECK_THROWS(empirical_cov(data, edges, {}));
  CHECK_THROWS(empirical_variogram(data, edges, {-1}));
}

TEST_CASE("nearest correlation and quantile edges") {
  std::mt19937_64 rng(29);
  const Eigen::MatrixXd c = random_correlation(4, rng);
  CHECK((nearest_correlation(c, 0.0) - c).norm() < 1e-10);
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  const Eigen::MatrixXd fixed = nearest_correlation(bad);
  CHECK(fixed.diagonal().isOnes(1e-12));
  CHECK(min_eig(fixed) > 0.0);

  const SiteTable sites = random_sites(rng, 9, 500.0);
  for (int nb : {1, 3, 6}) {
    const auto e = quantile_bin_edges(sites, nb);
    CHECK(e.size() == static_cast<std::size_t>(nb) + 1);
    CHECK(std::is_sorted(e.begin(), e.end()));
    std::vector<int> counts(static_cast<std::size_t>(nb), 0);
    for (std::size_t a = 0; a < sites.size(); ++a)
      for (std::size_t b = a + 1; b < sites.size(); ++b) {
        const double h = distance(sites[a], sites[b]);
        const auto it = std::upper_bound(e.begin(), e.end(), h);
        REQUIRE(it != e.begin());
        REQUIRE(it != e.end());
        ++counts[static_cast<std::size_t>(it - e.begin() - 1)];
      }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("initial values") {
  std::mt19937_64 rng(31);
  const SiteTable sites = random_sites(rng, 8, 600.0);
  const Dataset data = simulate_dataset(reference_model(), sites, 8, 4, 71);
  const FitOptions o;
  const auto m = std::get<ModelSpec>(init_params(data, o));
  CHECK((m.beta - nearest_correlation(colocated_correlation(data))).norm() < 1e-12);
  CHECK(validate(AnyModel(m)).valid);

  const Dataset noise = white_noise(sites, 8, 4, 3, 5);
  const auto w = std::get<ModelSpec>(init_params(noise, o));
  double dmin = 1e300;
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = a + 1; b < sites.size(); ++b) dmin = std::min(dmin, distance(sites[a], sites[b]));
  for (const auto& mp : w.marginals) {
    CHECK(1.0 / mp.r >= 1.0);
    CHECK(1.0 / mp.r < dmin);
  }
}

TEST_CASE("fit: monotone trace and separable variants") {
  std::mt19937_64 rng(37);
  const SiteTable sites = random_sites(rng, 6, 500.0);
  const Dataset data = simulate_dataset(reference_model(), sites, 6, 3, 81);
  const Window w{400.0, 2.0};

  FitOptions o = quick_options(Variant::NSD);
  o.b_grid = {0.2, 0.8};
  o.threads = 2;
  const FitReport rep = fit(data, w, o);
  REQUIRE(rep.trace.size() >= 2);
  for (std::size_t k = 1; k < rep.trace.size(); ++k) CHECK(rep.trace[k] <= rep.trace[k - 1]);
  CHECK(rel_err(rep.final_objective, wpl(rep.model, data, w)) < 1e-10);
  CHECK(rep.levels.size() == 2);
  for (const auto& lv : rep.levels) CHECK(lv.objective >= rep.final_objective);
  const double b = std::get<ModelSpec>(rep.model).temporal.b;
  CHECK((b == 0.2 || b == 0.8));
  o.threads = 1;
  const FitReport serial = fit(data, w, o);
  CHECK(serial.final_objective == rep.final_objective);

  const FitReport se = fit(data, w, quick_options(Variant::SE));
  const auto ms = std::get<ModelSpec>(se.model);
  CHECK(ms.temporal.b == 0.0);
  CHECK(ms.marginals[1].nu == ms.marginals[0].nu);
  CHECK(ms.marginals[2].r == ms.marginals[0].r);
  CHECK(validate(se.model).valid);

  FitOptions fl = quick_options(Variant::SD);
  fl.objective = ObjectiveKind::FL;
  const FitReport f = fit(data, w, fl);
  CHECK(rel_err(f.final_objective, full_nll(f.model, data)) < 1e-10);
}

TEST_CASE("window study on a small design") {
  std::mt19937_64 rng(41);
  const StudyDesign design{random_sites(rng, 6, 600.0), {1, 2, 3, 4, 5}, 2};
  FitOptions o = quick_options(Variant::NSD);
  o.b_grid = {0.5};
  const std::vector<Window> cands{{100.0, 1.0}, {800.0, 3.0}};
  const auto scores = select_window(reference_model(), design, cands, 3, 9, o, {}, 2);
  REQUIRE(scores.size() == 2);
  const auto narrow = std::find_if(scores.begin(), scores.end(), [](const WindowScore& s) { return s.window.d_s_km == 100.0; });
  const auto wide = std::find_if(scores.begin(), scores.end(), [](const WindowScore& s) { return s.window.d_s_km == 800.0; });
  CHECK(wide->pair_fraction > narrow->pair_fraction);
  CHECK(scores[0].criterion <= scores[1].criterion);
  for (const auto& s : scores) {
    CHECK(s.n_fits + s.n_failed == 3);
    CHECK(s.b_mean == 0.5);
  }
  const auto again = select_window(reference_model(), design, cands, 3, 9, o, {}, 1);
  CHECK(to_json(again).dump() == to_json(scores).dump());
  CHECK(criterion_parameters(reference_model(), Variant::NSD).size() == 3 + 3 + 3 + 3 + 3);
  CHECK(criterion_parameters(reference_model(), Variant::SE).size() == 3 + 3 + 1 + 1 + 2);
}
