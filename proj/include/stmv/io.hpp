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

#ifndef STMV_IO_HPP
#define STMV_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "stmv/covmodel.hpp"
#include "stmv/dataset.hpp"
#include "stmv/predict.hpp"

namespace stmv::io {

inline constexpr int kModelSchemaVersion = 1;

/// Header "site_id,x,y".
SiteTable read_sites(std::istream& in, DistanceMode mode = DistanceMode::Euclidean);
SiteTable read_sites_file(const std::string& path, DistanceMode mode = DistanceMode::Euclidean);
void write_sites(std::ostream& out, const SiteTable& sites);

/// Long format "rep,site_id,t,variable,value" with 1-based variables. Empty,
/// "NA" or "nan" values are missing cells. Every site_id must be in `sites`.
Dataset read_dataset(std::istream& in, const SiteTable& sites);
Dataset read_dataset_file(const std::string& path, const SiteTable& sites);
/// Rows ordered by replicate, day, site, variable; missing cells omitted.
void write_dataset(std::ostream& out, const Dataset& data);

/// One row of a predictions file "rep,t,site_id,variable,mean,sd,obs";
/// rep is the replicate label and obs is NaN (empty field) when unobserved.
struct PredictionRow {
  int rep = 0;
  int t = 0;
  std::string site_id;
  int variable = 0;  // 1-based
  double mean = 0.0;
  double sd = 0.0;
  double obs = 0.0;
};

void write_predictions(std::ostream& out, const Dataset& data, const RollingForecast& forecast);
std::vector<PredictionRow> read_predictions(std::istream& in);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

nlohmann::json to_json(const ModelSpec& m);
nlohmann::json to_json(const CompositeModel& m);
nlohmann::json to_json(const AnyModel& m);

/// Strict readers: unknown keys, missing keys and wrong shapes throw ConfigError.
ModelSpec model_spec_from_json(const nlohmann::json& j);
CompositeModel composite_from_json(const nlohmann::json& j);
/// Dispatches on "kind" ("gneiting" when absent, or "composite").
AnyModel model_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
AnyModel read_model_file(const std::string& path);

/// FNV-1a 64-bit hash of the canonical JSON dump, as 16 hex digits.
std::string model_hash(const AnyModel& m);

}  // namespace stmv::io

#endif  // STMV_IO_HPP
