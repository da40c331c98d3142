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

#include "stmv/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stmv {

namespace {

void check_bins(const std::vector<double>& edges, const std::vector<int>& lags) {
  if (edges.size() < 2) throw std::invalid_argument("empirical moments: need at least one spatial bin");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw std::invalid_argument("empirical moments: bin edges must increase");
  if (edges.front() < 0.0) throw std::invalid_argument("empirical moments: bin edges must be nonnegative");
  if (lags.empty()) throw std::invalid_argument("empirical moments: need at least one temporal lag");
  for (int u : lags)
    if (u < 0) throw std::invalid_argument("empirical moments: temporal lags must be nonnegative");
}

int find_bin(const std::vector<double>& edges, double h) {
  if (h < edges.front() || h >= edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), h);
  return static_cast<int>(it - edges.begin()) - 1;
}

template <typename Term>
std::vector<EmpiricalEntry> binned(const Dataset& data, const std::vector<double>& edges, const std::vector<int>& lags,
                                   bool same_only, Term term) {
  check_bins(edges, lags);
  const int p = data.p();
  const int S = data.n_sites();
  const int nb = static_cast<int>(edges.size()) - 1;
  const int nl = static_cast<int>(lags.size());
  const Eigen::MatrixXd dist = data.sites().distance_matrix();
  auto cell = [&](int i, int j, int b, int l) {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)) *
                static_cast<std::size_t>(nb) +
            static_cast<std::size_t>(b)) *
               static_cast<std::size_t>(nl) +
           static_cast<std::size_t>(l);
  };
  const std::size_t ncell = static_cast<std::size_t>(p) * static_cast<std::size_t>(p) * static_cast<std::size_t>(nb) *
                            static_cast<std::size_t>(nl);
  std::vector<double> n(ncell, 0.0), sum(ncell, 0.0), hsum(ncell, 0.0);

  for (int l = 0; l < nl; ++l) {
    const int u = lags[static_cast<std::size_t>(l)];
    for (int d = 0; d < data.n_days(); ++d) {
      const int d2 = data.day_index(data.days()[static_cast<std::size_t>(d)] + u);
      if (d2 < 0) continue;
      for (int sa = 0; sa < S; ++sa)
        for (int sb = 0; sb < S; ++sb) {
          const double h = dist(sa, sb);
          const int b = find_bin(edges, h);
          if (b < 0) continue;
          for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
              if (same_only && i != j) continue;
              const std::size_t c = cell(i, j, b, l);
              for (int r = 0; r < data.n_reps(); ++r) {
                const double x = data.at(r, d, sa, i);
                const double y = data.at(r, d2, sb, j);
                if (std::isnan(x) || std::isnan(y)) continue;
                n[c] += 1.0;
                sum[c] += term(x, y);
                hsum[c] += h;
              }
            }
        }
    }
  }

  std::vector<EmpiricalEntry> out;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (same_only && i != j) continue;
      for (int b = 0; b < nb; ++b)
        for (int l = 0; l < nl; ++l) {
          const std::size_t c = cell(i, j, b, l);
          EmpiricalEntry e;
          e.i = i;
          e.j = j;
          e.bin = b;
          e.h_lo = edges[static_cast<std::size_t>(b)];
          e.h_hi = edges[static_cast<std::size_t>(b) + 1];
          e.u = lags[static_cast<std::size_t>(l)];
          e.n_pairs = n[c];
          e.empty = n[c] == 0.0;
          if (!e.empty) {
            e.value = sum[c] / n[c];
            e.h_mean = hsum[c] / n[c];
          }
          out.push_back(e);
        }
    }
  return out;
}

}  // namespace

std::vector<EmpiricalEntry> empirical_cov(const Dataset& data, const std::vector<double>& edges,
                                          const std::vector<int>& lags) {
  return binned(data, edges, lags, false, [](double x, double y) { return x * y; });
}

std::vector<EmpiricalEntry> empirical_variogram(const Dataset& data, const std::vector<double>& edges,
                                                const std::vector<int>& lags) {
  return binned(data, edges, lags, true, [](double x, double y) { return 0.5 * (x - y) * (x - y); });
}

Eigen::MatrixXd colocated_correlation(const Dataset& data) {
  const int p = data.p();
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int r = 0; r < data.n_reps(); ++r)
        for (int d = 0; d < data.n_days(); ++d)
          for (int s = 0; s < data.n_sites(); ++s) {
            const double x = data.at(r, d, s, i);
            const double y = data.at(r, d, s, j);
            if (std::isnan(x) || std::isnan(y)) continue;
            n += 1;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
          }
      double v = 0.0;
      if (n >= 2) {
        const double cxy = sxy - sx * sy / n;
        const double cxx = sxx - sx * sx / n;
        const double cyy = syy - sy * sy / n;
        if (cxx > 0 && cyy > 0) v = cxy / std::sqrt(cxx * cyy);
      }
      c(i, j) = c(j, i) = std::clamp(v, -1.0, 1.0);
    }
  return c;
}

Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& a, double min_eig, int max_iter) {
  const auto p = a.rows();
  if (a.cols() != p) throw std::invalid_argument("nearest_correlation: matrix must be square");
  Eigen::MatrixXd y = 0.5 * (a + a.transpose());
  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd x = y;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd r = y - ds;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    x = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    ds = x - r;
    const Eigen::MatrixXd y_old = y;
    y = x;
    y.diagonal().setOnes();
    if ((y - y_old).norm() <= 1e-12 * std::max(1.0, y.norm())) break;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (y + y.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(min_eig);
  Eigen::MatrixXd c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  c = s.asDiagonal() * c * s.asDiagonal();
  for (Eigen::Index i = 0; i < p; ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < p; ++j) c(j, i) = c(i, j);
  }
  return c;
}

std::vector<double> quantile_bin_edges(const SiteTable& sites, int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("quantile_bin_edges: need at least one bin");
  const Eigen::MatrixXd d = sites.distance_matrix();
  std::vector<double> h;
  for (Eigen::Index a = 0; a < d.rows(); ++a)
    for (Eigen::Index b = a + 1; b < d.cols(); ++b)
      if (d(a, b) > 0.0) h.push_back(d(a, b));
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  std::vector<double> edges{0.0};
  if (h.empty()) return edges;
  const auto n = h.size();
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(n_bins), n);
  for (std::size_t b = 1; b < k; ++b) {
    const std::size_t at = b * n / k;
    edges.push_back(0.5 * (h[at - 1] + h[at]));
  }
  edges.push_back(h.back() * (1.0 + 1e-9) + 1e-9);
  // the first bin starts above zero so co-located pairs stay out of spatial bins
  edges[0] = 0.5 * h.front();
  return edges;
}

}  // namespace stmv
