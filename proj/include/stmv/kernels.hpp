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

#ifndef STMV_KERNELS_HPP
#define STMV_KERNELS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stmv {

enum class Family { GneitingMatern, GneitingCauchy };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Per-variable spatial margin. r is the inverse range in 1/km.
struct MarginalParams {
  double sigma = 1.0;
  double nu = 0.5;
  double r = 1.0;
};

struct CrossParams {
  double r = 1.0;
  double nu = 0.5;
  double rho = 1.0;
};

/// psi(x) = (alpha x^a + 1)^b with temporal decay exponent tau.
struct TemporalParams {
  double alpha = 1.0;
  double a = 1.0;
  double b = 0.0;
  double tau = 1.0;
};

/// Full parameter set of a p-variate Gneiting-Matern / Gneiting-Cauchy model.
/// Variables are indexed 0..p-1 in the C++ API.
struct ModelSpec {
  Family family = Family::GneitingMatern;
  int p = 1;
  int d = 2;
  std::vector<MarginalParams> marginals;
  Eigen::MatrixXd beta;
  TemporalParams temporal;
  double lambda = 1.0;  // Cauchy shape, ignored for Matern
};

struct ValidityReport {
  bool valid = true;
  std::vector<std::string> violations;
};

namespace kernels {

/// 2^{1-nu}/Gamma(nu) (r h)^nu K_nu(r h); exactly 1 for r h < 1e-12.
double matern_corr(double h, double r, double nu);

/// (1 + r h^lambda)^{-nu}
double cauchy_corr(double h, double r, double nu, double lambda);

/// (alpha x^a + 1)^b
double psi(double x, const TemporalParams& t);

CrossParams cross_params_matern(const MarginalParams& i, const MarginalParams& j, double beta_ij);
CrossParams cross_params_cauchy(const MarginalParams& i, const MarginalParams& j, double beta_ij);

/// Scale-mixture densities: matern_corr(h) = int exp(-h^2 xi) m^M(xi) dxi and
/// cauchy_corr(h) = int exp(-h^lambda xi) m^C(xi) dxi.
double mixture_density_matern(double xi, double r, double nu);
double mixture_density_cauchy(double xi, double r, double nu);

ValidityReport validate(const ModelSpec& model);

/// Matern correlation with the normalising constant hoisted out of the loop.
class MaternCorrelation {
 public:
  MaternCorrelation(double r, double nu);
  double operator()(double h) const;

 private:
  double r_;
  double nu_;
  double log_coef_;
};

}  // namespace kernels

/// Precomputed cross parameters of a ModelSpec; evaluates C_ij(h, u).
class GneitingCovariance {
 public:
  explicit GneitingCovariance(const ModelSpec& model);

  int p() const { return p_; }
  const ModelSpec& model() const { return model_; }
  const CrossParams& cross(int i, int j) const { return cross_[i * p_ + j]; }

  /// Time-lag factor (alpha |u|^{2a} + 1)^{-tau}.
  double temporal_factor(double u) const;
  /// Spatial correlation F(h / psi(u^2)^{1/2}; r_ij, nu_ij[, lambda]).
  double spatial_corr(int i, int j, double h, double u) const;
  double operator()(int i, int j, double h, double u) const;

 private:
  ModelSpec model_;
  int p_;
  std::vector<CrossParams> cross_;
  std::vector<double> log_coef_;
};

/// Convenience single-shot evaluation. Throws std::out_of_range on bad indices.
double cov(const ModelSpec& model, int i, int j, double h, double u);

}  // namespace stmv

#endif  // STMV_KERNELS_HPP
