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

#include "stmv/dataset.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stmv/errors.hpp"

namespace stmv {

Dataset::Dataset(SiteTable sites, std::vector<int> days, int p, std::vector<int> rep_ids)
    : sites_(std::move(sites)), days_(std::move(days)), rep_ids_(std::move(rep_ids)), p_(p) {
  if (p_ < 1) throw std::invalid_argument("Dataset: p must be >= 1");
  if (!std::is_sorted(days_.begin(), days_.end()) ||
      std::adjacent_find(days_.begin(), days_.end()) != days_.end())
    throw std::invalid_argument("Dataset: days must be strictly increasing");
  if (std::set<int>(rep_ids_.begin(), rep_ids_.end()).size() != rep_ids_.size())
    throw std::invalid_argument("Dataset: duplicate replicate id");
  values_.assign(rep_ids_.size() * days_.size() * sites_.size() * static_cast<std::size_t>(p_),
                 std::numeric_limits<double>::quiet_NaN());
}

int Dataset::day_index(int t) const {
  auto it = std::lower_bound(days_.begin(), days_.end(), t);
  if (it == days_.end() || *it != t) return -1;
  return static_cast<int>(it - days_.begin());
}

std::size_t Dataset::n_observed() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return !std::isnan(v); }));
}

Dataset Dataset::subset_sites(const std::vector<std::size_t>& keep) const {
  Dataset out(sites_.subset(keep), days_, p_, rep_ids_);
  for (int r = 0; r < n_reps(); ++r)
    for (int d = 0; d < n_days(); ++d)
      for (std::size_t k = 0; k < keep.size(); ++k)
        for (int v = 0; v < p_; ++v) out.at(r, d, static_cast<int>(k), v) = at(r, d, static_cast<int>(keep[k]), v);
  if (standardization) {
    Standardization s;
    s.mean.resize(static_cast<Eigen::Index>(keep.size()), p_);
    s.sd.resize(static_cast<Eigen::Index>(keep.size()), p_);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      s.mean.row(static_cast<Eigen::Index>(k)) = standardization->mean.row(static_cast<Eigen::Index>(keep[k]));
      s.sd.row(static_cast<Eigen::Index>(k)) = standardization->sd.row(static_cast<Eigen::Index>(keep[k]));
    }
    out.standardization = std::move(s);
  }
  return out;
}

Eigen::VectorXd Dataset::replicate_vector(int rep) const {
  const std::size_t n = days_.size() * sites_.size() * static_cast<std::size_t>(p_);
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  const std::size_t base = offset(rep, 0, 0, 0);
  for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(k)) = values_[base + k];
  return out;
}

PointSet Dataset::grid_points() const {
  std::vector<int> s(sites_.size()), d(days_.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<int>(k);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = days_[k];
  return PointSet::grid(s, d, p_);
}

Dataset dataset_from_simulation(const SiteTable& sites, const std::vector<int>& days, int p,
                                const Eigen::MatrixXd& values) {
  const auto n = static_cast<Eigen::Index>(sites.size() * days.size() * static_cast<std::size_t>(p));
  if (values.cols() != n) throw std::invalid_argument("dataset_from_simulation: column count does not match the grid");
  std::vector<int> reps(static_cast<std::size_t>(values.rows()));
  for (std::size_t k = 0; k < reps.size(); ++k) reps[k] = static_cast<int>(k) + 1;
  Dataset ds(sites, days, p, reps);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    Eigen::Index k = 0;
    for (int d = 0; d < ds.n_days(); ++d)
      for (int s = 0; s < ds.n_sites(); ++s)
        for (int v = 0; v < p; ++v) ds.at(static_cast<int>(r), d, s, v) = values(r, k++);
  }
  return ds;
}

Dataset standardize(const Dataset& raw) {
  Dataset out = raw;
  Standardization st;
  st.mean.resize(raw.n_sites(), raw.p());
  st.sd.resize(raw.n_sites(), raw.p());
  for (int s = 0; s < raw.n_sites(); ++s) {
    for (int v = 0; v < raw.p(); ++v) {
      double n = 0.0, sum = 0.0;
      for (int r = 0; r < raw.n_reps(); ++r)
        for (int d = 0; d < raw.n_days(); ++d)
          if (raw.observed(r, d, s, v)) {
            n += 1.0;
            sum += raw.at(r, d, s, v);
          }
      std::ostringstream where;
      where << "site '" << raw.sites()[static_cast<std::size_t>(s)].id << "', variable " << v + 1;
      if (n < 2.0) throw DataError("standardize: fewer than two observations at " + where.str());
      const double mean = sum / n;
      double ss = 0.0;
      for (int r = 0; r < raw.n_reps(); ++r)
        for (int d = 0; d < raw.n_days(); ++d)
          if (raw.observed(r, d, s, v)) ss += (raw.at(r, d, s, v) - mean) * (raw.at(r, d, s, v) - mean);
      const double sd = std::sqrt(ss / (n - 1.0));
      if (!(sd > 0.0) || !std::isfinite(sd)) throw DataError("standardize: zero variance at " + where.str());
      st.mean(s, v) = mean;
      st.sd(s, v) = sd;
      for (int r = 0; r < raw.n_reps(); ++r)
        for (int d = 0; d < raw.n_days(); ++d)
          if (raw.observed(r, d, s, v)) out.at(r, d, s, v) = (raw.at(r, d, s, v) - mean) / sd;
    }
  }
  out.standardization = std::move(st);
  return out;
}

Dataset destandardize(const Dataset& z) {
  if (!z.standardization) throw std::invalid_argument("destandardize: dataset carries no standardization factors");
  Dataset out = z;
  const auto& st = *z.standardization;
  for (int r = 0; r < z.n_reps(); ++r)
    for (int d = 0; d < z.n_days(); ++d)
      for (int s = 0; s < z.n_sites(); ++s)
        for (int v = 0; v < z.p(); ++v)
          if (z.observed(r, d, s, v)) out.at(r, d, s, v) = z.at(r, d, s, v) * st.sd(s, v) + st.mean(s, v);
  out.standardization.reset();
  return out;
}

}  // namespace stmv
