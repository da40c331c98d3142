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
#include <sstream>

#include "doctest.h"
#include "stmv/errors.hpp"
#include "stmv/io.hpp"
#include "support.hpp"

using namespace stmv;

namespace {

SiteTable four_sites() {
  return SiteTable({{"A", 0.0, 0.0}, {"B", 30.0, 40.0}, {"C", -20.0, 10.0}, {"D", 60.0, -5.0}});
}

Dataset random_dataset(std::mt19937_64& rng, int n_reps, int n_days, int p) {
  std::normal_distribution<double> n01;
  std::vector<int> days(static_cast<std::size_t>(n_days));
  for (int d = 0; d < n_days; ++d) days[static_cast<std::size_t>(d)] = 3 + 2 * d;
  std::vector<int> reps(static_cast<std::size_t>(n_reps));
  for (int r = 0; r < n_reps; ++r) reps[static_cast<std::size_t>(r)] = 2003 + r;
  Dataset ds(four_sites(), days, p, reps);
  for (int r = 0; r < n_reps; ++r)
    for (int d = 0; d < n_days; ++d)
      for (int s = 0; s < ds.n_sites(); ++s)
        for (int v = 0; v < p; ++v) ds.at(r, d, s, v) = 10.0 * (s + 1) + (v + 1) * n01(rng);
  return ds;
}

}  // namespace

TEST_CASE("standardize has unit sample variance and destandardize inverts it") {
  std::mt19937_64 rng(11);
  Dataset raw = random_dataset(rng, 3, 7, 2);
  raw.at(1, 2, 3, 1) = std::nan("");
  const Dataset z = standardize(raw);
  REQUIRE(z.standardization);
  for (int s = 0; s < z.n_sites(); ++s)
    for (int v = 0; v < z.p(); ++v) {
      double n = 0, sum = 0, ss = 0;
      for (int r = 0; r < z.n_reps(); ++r)
        for (int d = 0; d < z.n_days(); ++d)
          if (z.observed(r, d, s, v)) {
            n += 1;
            sum += z.at(r, d, s, v);
            ss += z.at(r, d, s, v) * z.at(r, d, s, v);
          }
      CHECK(std::abs(sum / n) < 1e-12);
      CHECK(ss / (n - 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
  const Dataset back = destandardize(z);
  CHECK_FALSE(back.observed(1, 2, 3, 1));
  for (int r = 0; r < raw.n_reps(); ++r)
    for (int d = 0; d < raw.n_days(); ++d)
      for (int s = 0; s < raw.n_sites(); ++s)
        for (int v = 0; v < raw.p(); ++v)
          if (raw.observed(r, d, s, v)) CHECK(std::abs(back.at(r, d, s, v) - raw.at(r, d, s, v)) <= 1e-12 * std::abs(raw.at(r, d, s, v)));
}

TEST_CASE("standardize rejects constant series and names the station") {
  std::mt19937_64 rng(2);
  Dataset raw = random_dataset(rng, 2, 4, 1);
  for (int r = 0; r < 2; ++r)
    for (int d = 0; d < 4; ++d) raw.at(r, d, 2, 0) = 5.0;
  try {
    standardize(raw);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'C'") != std::string::npos);
  }
}

TEST_CASE("dataset CSV round trip is exact and stable") {
  std::mt19937_64 rng(5);
  Dataset ds = random_dataset(rng, 2, 5, 3);
  ds.at(0, 1, 2, 0) = std::nan("");
  std::ostringstream a;
  io::write_dataset(a, ds);
  std::istringstream in(a.str());
  const Dataset back = io::read_dataset(in, ds.sites());
  CHECK(back.rep_ids() == ds.rep_ids());
  CHECK(back.days() == ds.days());
  CHECK(back.p() == 3);
  CHECK(back.n_observed() == ds.n_observed());
  for (int r = 0; r < ds.n_reps(); ++r)
    for (int d = 0; d < ds.n_days(); ++d)
      for (int s = 0; s < ds.n_sites(); ++s)
        for (int v = 0; v < ds.p(); ++v)
          if (ds.observed(r, d, s, v)) CHECK(back.at(r, d, s, v) == ds.at(r, d, s, v));
  std::ostringstream b;
  io::write_dataset(b, back);
  CHECK(a.str() == b.str());
}

TEST_CASE("dataset reader: missing markers, duplicates, headers") {
  const SiteTable sites = four_sites();
  std::istringstream ok("rep,site_id,t,variable,value\n1,A,1,1,0.5\n1,B,1,1,NA\n1,C,1,1,\n1,D,1,1,nan\n1,A,2,2,1e-3\n");
  const Dataset ds = io::read_dataset(ok, sites);
  CHECK(ds.p() == 2);
  CHECK(ds.n_observed() == 2);
  CHECK(ds.at(0, 1, 0, 1) == 1e-3);

  std::istringstream dup("rep,site_id,t,variable,value\n1,A,1,1,0.5\n1,A,1,1,0.7\n");
  CHECK_THROWS_AS(io::read_dataset(dup, sites), DataError);
  std::istringstream hdr("rep,site,t,variable,value\n1,A,1,1,0.5\n");
  CHECK_THROWS_AS(io::read_dataset(hdr, sites), DataError);
  std::istringstream unknown("rep,site_id,t,variable,value\n1,Z,1,1,0.5\n");
  CHECK_THROWS_AS(io::read_dataset(unknown, sites), DataError);
  std::istringstream junk("rep,site_id,t,variable,value\n1,A,1,1,abc\n");
  CHECK_THROWS_AS(io::read_dataset(junk, sites), DataError);
}

TEST_CASE("sites CSV round trip") {
  const SiteTable sites = four_sites();
  std::ostringstream a;
  io::write_sites(a, sites);
  std::istringstream in(a.str());
  const SiteTable back = io::read_sites(in);
  REQUIRE(back.size() == sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    CHECK(back[k].id == sites[k].id);
    CHECK(back[k].x == sites[k].x);
    CHECK(back[k].y == sites[k].y);
  }
  std::istringstream dup("site_id,x,y\nA,0,0\nA,1,1\n");
  CHECK_THROWS(io::read_sites(dup));
}

TEST_CASE("model JSON round trip and strict reading") {
  std::mt19937_64 rng(9);
  for (Family f : {Family::GneitingMatern, Family::GneitingCauchy}) {
    const ModelSpec m = testing::random_model(rng, f, 3);
    const AnyModel back = io::model_from_json(nlohmann::json::parse(io::to_json(m).dump()));
    CHECK(io::to_json(back) == io::to_json(m));
    CHECK(io::model_hash(back) == io::model_hash(AnyModel(m)));
  }
  CompositeModel cm;
  cm.spacetime = testing::reference_model();
  cm.temporal.sigma = {0.5, 0.6, 0.3};
  cm.temporal.beta = Eigen::MatrixXd::Identity(3, 3);
  cm.temporal.beta(0, 1) = cm.temporal.beta(1, 0) = -0.3;
  cm.temporal.alpha = 0.2;
  cm.temporal.a = 0.9;
  apply_variance_constraint(cm);
  const AnyModel cback = io::model_from_json(io::to_json(cm));
  CHECK(io::to_json(cback) == io::to_json(cm));

  nlohmann::json j = io::to_json(testing::reference_model());
  j["colour"] = "blue";
  CHECK_THROWS_AS(io::model_from_json(j), ConfigError);

  nlohmann::json r = io::to_json(testing::reference_model());
  r.erase("inv_range_km");
  r["range_km"] = {250.0, 200.0, 350.0};
  const auto m = std::get<ModelSpec>(io::model_from_json(r));
  CHECK(m.marginals[1].r == doctest::Approx(1.0 / 200.0).epsilon(1e-15));

  nlohmann::json bad = io::to_json(testing::reference_model());
  bad["beta"][0][1] = 0.99;
  bad["beta"][1][0] = 0.99;
  bad["beta"][0][2] = -0.99;
  bad["beta"][2][0] = -0.99;
  CHECK_THROWS_AS(io::model_from_json(bad), ConfigError);
}

TEST_CASE("format_double is shortest round trip") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
}

TEST_CASE("predictions CSV round trip") {
  Dataset ds(four_sites(), {1, 2, 3}, 2, {7});
  RollingForecast f;
  f.targets = {{1, 0}, {1, 1}};
  DayForecast d;
  d.rep = 0;
  d.t = 3;
  d.dist.mean = Eigen::Vector2d(0.25, -1.0 / 3.0);
  d.dist.sd = Eigen::Vector2d(0.5, 0.125);
  d.dist.cov = Eigen::Matrix2d::Identity();
  d.obs = Eigen::Vector2d(1.5, std::nan(""));
  f.days.push_back(d);
  std::ostringstream out;
  io::write_predictions(out, ds, f);
  std::istringstream in(out.str());
  const auto rows = io::read_predictions(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rep == 7);
  CHECK(rows[0].t == 3);
  CHECK(rows[0].site_id == "B");
  CHECK(rows[1].variable == 2);
  CHECK(rows[1].mean == -1.0 / 3.0);
  CHECK(rows[0].obs == 1.5);
  CHECK(std::isnan(rows[1].obs));
}
