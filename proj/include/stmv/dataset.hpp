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

#ifndef STMV_DATASET_HPP
#define STMV_DATASET_HPP

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stmv/covmodel.hpp"

namespace stmv {

/// Per (site, variable) location and scale removed by standardize().
struct Standardization {
  Eigen::MatrixXd mean;  // sites x p
  Eigen::MatrixXd sd;    // sites x p
};

/// Replicated observations on a site x day x variable grid. Missing cells
/// are NaN and are skipped by every consumer.
class Dataset {
 public:
  Dataset() = default;
  Dataset(SiteTable sites, std::vector<int> days, int p, std::vector<int> rep_ids);

  const SiteTable& sites() const { return sites_; }
  const std::vector<int>& days() const { return days_; }
  const std::vector<int>& rep_ids() const { return rep_ids_; }
  int p() const { return p_; }
  int n_sites() const { return static_cast<int>(sites_.size()); }
  int n_days() const { return static_cast<int>(days_.size()); }
  int n_reps() const { return static_cast<int>(rep_ids_.size()); }

  double& at(int rep, int day, int site, int var) { return values_[offset(rep, day, site, var)]; }
  double at(int rep, int day, int site, int var) const { return values_[offset(rep, day, site, var)]; }
  bool observed(int rep, int day, int site, int var) const { return !std::isnan(at(rep, day, site, var)); }

  /// Index of a day label, or -1.
  int day_index(int t) const;

  std::size_t n_observed() const;

  /// Same days and replicates, restricted to the given site indices.
  Dataset subset_sites(const std::vector<std::size_t>& keep) const;

  /// Values of replicate rep on the full grid in canonical point order.
  Eigen::VectorXd replicate_vector(int rep) const;

  /// Full grid in canonical point order; t holds day labels.
  PointSet grid_points() const;

  std::optional<Standardization> standardization;

 private:
  std::size_t offset(int rep, int day, int site, int var) const {
    return ((static_cast<std::size_t>(rep) * days_.size() + static_cast<std::size_t>(day)) * sites_.size() +
            static_cast<std::size_t>(site)) *
               static_cast<std::size_t>(p_) +
           static_cast<std::size_t>(var);
  }

  SiteTable sites_;
  std::vector<int> days_;
  std::vector<int> rep_ids_;
  int p_ = 0;
  std::vector<double> values_;
};

/// Builds a dataset from simulate() output drawn on PointSet::grid(all sites, day indices, p).
Dataset dataset_from_simulation(const SiteTable& sites, const std::vector<int>& days, int p,
                                const Eigen::MatrixXd& values);

/// Per (site, variable): subtract the mean and divide by the sample standard
/// deviation over all days and replicates. Throws DataError on zero variance
/// or fewer than two observations.
Dataset standardize(const Dataset& raw);

/// Inverse of standardize(); requires stored factors.
Dataset destandardize(const Dataset& z);

}  // namespace stmv

#endif  // STMV_DATASET_HPP
