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

#ifndef STMV_COVMODEL_HPP
#define STMV_COVMODEL_HPP

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stmv/kernels.hpp"

namespace stmv {

enum class DistanceMode { Euclidean, Haversine };

/// Projected coordinates in km, or (lon, lat) in degrees under Haversine.
struct Site {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;

double distance(const Site& a, const Site& b, DistanceMode mode = DistanceMode::Euclidean);

class SiteTable {
 public:
  SiteTable() = default;
  explicit SiteTable(std::vector<Site> sites, DistanceMode mode = DistanceMode::Euclidean);

  std::size_t size() const { return sites_.size(); }
  const Site& operator[](std::size_t k) const { return sites_[k]; }
  const std::vector<Site>& sites() const { return sites_; }
  DistanceMode mode() const { return mode_; }

  /// Index of a site id; throws std::out_of_range when absent.
  std::size_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  /// Dense matrix of pairwise distances.
  Eigen::MatrixXd distance_matrix() const;

  SiteTable subset(const std::vector<std::size_t>& keep) const;

 private:
  std::vector<Site> sites_;
  DistanceMode mode_ = DistanceMode::Euclidean;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SpaceTimePoint {
  int site = 0;
  int t = 0;
  int var = 0;

  friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

/// Ordered (site, day, variable) coordinates; the canonical order is
/// time-major, then site, then variable.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::vector<SpaceTimePoint> points);

  /// Full design in canonical order.
  static PointSet grid(const std::vector<int>& sites, const std::vector<int>& days, int p);

  std::size_t size() const { return points_.size(); }
  const SpaceTimePoint& operator[](std::size_t k) const { return points_[k]; }
  const std::vector<SpaceTimePoint>& points() const { return points_; }

 private:
  std::vector<SpaceTimePoint> points_;
};

enum class Variant { SE, NSE, SD, NSD };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool is_separable(Variant v);
bool shares_margins(Variant v);

/// Purely temporal multivariate process X with
/// C^X_ij(u) = sigma_i sigma_j beta_ij / (alpha |u|^{2a} + 1).
struct TemporalProcess {
  std::vector<double> sigma;
  Eigen::MatrixXd beta;
  double alpha = 1.0;
  double a = 1.0;
};

/// Z = X + W with X temporal and W a Gneiting-family space-time process.
struct CompositeModel {
  TemporalProcess temporal;
  ModelSpec spacetime;
  bool constrained = true;  // (sigma^X_i)^2 + (sigma^W_i)^2 = 1
};

using AnyModel = std::variant<ModelSpec, CompositeModel>;

int num_variables(const AnyModel& m);

/// Sets sigma^W_i = sqrt(1 - (sigma^X_i)^2); requires sigma^X_i in [0, 1].
void apply_variance_constraint(CompositeModel& cm);

ValidityReport validate(const CompositeModel& cm);
ValidityReport validate(const AnyModel& m);

double temporal_cov(const TemporalProcess& x, int i, int j, double u);
double composite_cov(const CompositeModel& cm, int i, int j, double h, double u);

/// Evaluates C_ij(h, u) for either model kind with cross parameters prepared once.
class PreparedCovariance {
 public:
  explicit PreparedCovariance(const AnyModel& model);
  int p() const { return p_; }
  double operator()(int i, int j, double h, double u) const;

 private:
  int p_;
  GneitingCovariance w_;
  std::optional<TemporalProcess> x_;
};

/// Sigma over a point set; assembled from the upper triangle so it is exactly
/// symmetric. Rows are distributed over `threads` workers.
Eigen::MatrixXd assemble_sigma(const AnyModel& model, const PointSet& pts, const SiteTable& sites,
                               int threads = 1);

/// Cross-covariance block between two point sets.
Eigen::MatrixXd assemble_cross(const AnyModel& model, const PointSet& rows, const PointSet& cols,
                               const SiteTable& sites);

/// Applies the variant's constraints: b = 0 for SE/SD, (nu, r) of variable 1 for SE/NSE.
ModelSpec restrict(const ModelSpec& model, Variant variant);
CompositeModel restrict(const CompositeModel& model, Variant variant);

}  // namespace stmv

#endif  // STMV_COVMODEL_HPP
