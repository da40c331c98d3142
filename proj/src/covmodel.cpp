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

#include "stmv/covmodel.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "stmv/parallel.hpp"

namespace stmv {

double distance(const Site& a, const Site& b, DistanceMode mode) {
  if (mode == DistanceMode::Euclidean) return std::hypot(a.x - b.x, a.y - b.y);
  for (const Site* s : {&a, &b}) {
    if (!(std::abs(s->x) <= 180.0) || !(std::abs(s->y) <= 90.0))
      throw std::domain_error("haversine distance: site '" + s->id + "' has out-of-range lon/lat");
  }
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (b.y - a.y) * deg;
  const double dlon = (b.x - a.x) * deg;
  const double sl = std::sin(0.5 * dlat);
  const double so = std::sin(0.5 * dlon);
  const double hav = sl * sl + std::cos(a.y * deg) * std::cos(b.y * deg) * so * so;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(hav)));
}

SiteTable::SiteTable(std::vector<Site> sites, DistanceMode mode) : sites_(std::move(sites)), mode_(mode) {
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const Site& s = sites_[k];
    if (!std::isfinite(s.x) || !std::isfinite(s.y))
      throw std::invalid_argument("site '" + s.id + "' has non-finite coordinates");
    if (!index_.emplace(s.id, k).second) throw std::invalid_argument("duplicate site id '" + s.id + "'");
  }
}

std::size_t SiteTable::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown site id '" + id + "'");
  return it->second;
}

Eigen::MatrixXd SiteTable::distance_matrix() const {
  const auto n = static_cast<Eigen::Index>(sites_.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance(sites_[i], sites_[j], mode_);
  return d;
}

SiteTable SiteTable::subset(const std::vector<std::size_t>& keep) const {
  std::vector<Site> out;
  out.reserve(keep.size());
  for (auto k : keep) out.push_back(sites_.at(k));
  return SiteTable(std::move(out), mode_);
}

PointSet::PointSet(std::vector<SpaceTimePoint> points) : points_(std::move(points)) {
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& q : points_) {
    if (q.site < 0 || q.var < 0) throw std::invalid_argument("PointSet: negative site or variable index");
    if (!seen.emplace(q.t, q.site, q.var).second) throw std::invalid_argument("PointSet: duplicate point");
  }
}

PointSet PointSet::grid(const std::vector<int>& sites, const std::vector<int>& days, int p) {
  std::vector<SpaceTimePoint> pts;
  pts.reserve(sites.size() * days.size() * static_cast<std::size_t>(p));
  for (int t : days)
    for (int s : sites)
      for (int v = 0; v < p; ++v) pts.push_back({s, t, v});
  return PointSet(std::move(pts));
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::SE: return "SE";
    case Variant::NSE: return "NSE";
    case Variant::SD: return "SD";
    case Variant::NSD: return "NSD";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "SE" || s == "S-E") return Variant::SE;
  if (s == "NSE" || s == "NS-E") return Variant::NSE;
  if (s == "SD" || s == "S-D") return Variant::SD;
  if (s == "NSD" || s == "NS-D") return Variant::NSD;
  throw std::invalid_argument("unknown variant '" + s + "' (expected SE, NSE, SD or NSD)");
}

bool is_separable(Variant v) { return v == Variant::SE || v == Variant::SD; }
bool shares_margins(Variant v) { return v == Variant::SE || v == Variant::NSE; }

int num_variables(const AnyModel& m) {
  return std::visit(
      [](const auto& x) {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ModelSpec>) return x.p;
        else return x.spacetime.p;
      },
      m);
}

void apply_variance_constraint(CompositeModel& cm) {
  for (int i = 0; i < cm.spacetime.p; ++i) {
    const double sx = cm.temporal.sigma.at(i);
    if (!(sx >= 0.0 && sx <= 1.0)) throw std::domain_error("variance constraint needs sigma^X in [0, 1]");
    cm.spacetime.marginals.at(i).sigma = std::sqrt(std::max(0.0, 1.0 - sx * sx));
  }
  cm.constrained = true;
}

ValidityReport validate(const CompositeModel& cm) {
  ValidityReport rep = kernels::validate(cm.spacetime);
  auto fail = [&rep](std::string msg) {
    rep.valid = false;
    rep.violations.push_back(std::move(msg));
  };
  const int p = cm.spacetime.p;
  const auto& x = cm.temporal;
  if (static_cast<int>(x.sigma.size()) != p) fail("temporal process: sigma has wrong length");
  for (double s : x.sigma)
    if (!(s >= 0.0) || !std::isfinite(s)) fail("temporal process: sigma must be non-negative");
  if (!(x.alpha > 0.0)) fail("temporal process: alpha must be positive");
  if (!(x.a > 0.0 && x.a <= 1.0)) fail("temporal process: a must lie in (0, 1]");
  if (x.beta.rows() != p || x.beta.cols() != p) {
    fail("temporal process: beta must be p x p");
  } else if (x.beta.allFinite()) {
    for (int i = 0; i < p; ++i) {
      if (std::abs(x.beta(i, i) - 1.0) > 1e-12) fail("temporal process: beta diagonal must be 1");
      for (int j = i + 1; j < p; ++j)
        if (std::abs(x.beta(i, j) - x.beta(j, i)) > 1e-12) fail("temporal process: beta must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.beta, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * p) fail("temporal process: beta is not positive semi-definite");
  } else {
    fail("temporal process: beta has non-finite entries");
  }
  if (cm.constrained && static_cast<int>(x.sigma.size()) == p &&
      static_cast<int>(cm.spacetime.marginals.size()) == p) {
    for (int i = 0; i < p; ++i) {
      const double sw = cm.spacetime.marginals[i].sigma;
      const double total = x.sigma[i] * x.sigma[i] + sw * sw;
      if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "variable " << i + 1 << ": (sigma^X)^2 + (sigma^W)^2 = " << total << " != 1";
        fail(msg.str());
      }
    }
  }
  return rep;
}

ValidityReport validate(const AnyModel& m) {
  return std::visit(
      [](const auto& x) {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ModelSpec>) return kernels::validate(x);
        else return validate(x);
      },
      m);
}

double temporal_cov(const TemporalProcess& x, int i, int j, double u) {
  if (i > j) std::swap(i, j);
  const double g = u == 0.0 ? 1.0 : x.alpha * std::pow(std::abs(u), 2.0 * x.a) + 1.0;
  return x.sigma[i] * x.sigma[j] * x.beta(i, j) / g;
}

double composite_cov(const CompositeModel& cm, int i, int j, double h, double u) {
  return temporal_cov(cm.temporal, i, j, u) + cov(cm.spacetime, i, j, h, u);
}

namespace {

const ModelSpec& spacetime_part(const AnyModel& m) {
  if (const auto* ms = std::get_if<ModelSpec>(&m)) return *ms;
  return std::get<CompositeModel>(m).spacetime;
}

}  // namespace

PreparedCovariance::PreparedCovariance(const AnyModel& model)
    : p_(num_variables(model)), w_(spacetime_part(model)) {
  if (const auto* cm = std::get_if<CompositeModel>(&model)) x_ = cm->temporal;
}

double PreparedCovariance::operator()(int i, int j, double h, double u) const {
  double c = w_(i, j, h, u);
  if (x_) c += temporal_cov(*x_, i, j, u);
  return c;
}

Eigen::MatrixXd assemble_sigma(const AnyModel& model, const PointSet& pts, const SiteTable& sites, int threads) {
  const PreparedCovariance c(model);
  const Eigen::MatrixXd dist = sites.distance_matrix();
  const auto n = static_cast<Eigen::Index>(pts.size());
  for (const auto& q : pts.points()) {
    if (q.var >= c.p()) throw std::out_of_range("assemble_sigma: variable index out of range");
    if (q.site >= static_cast<int>(sites.size())) throw std::out_of_range("assemble_sigma: site index out of range");
  }
  Eigen::MatrixXd sigma(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
    const auto k = static_cast<Eigen::Index>(row);
    const auto& a = pts[row];
    for (Eigen::Index l = k; l < n; ++l) {
      const auto& b = pts[static_cast<std::size_t>(l)];
      sigma(k, l) = c(a.var, b.var, dist(a.site, b.site), static_cast<double>(a.t - b.t));
    }
  });
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l) sigma(l, k) = sigma(k, l);
  return sigma;
}

Eigen::MatrixXd assemble_cross(const AnyModel& model, const PointSet& rows, const PointSet& cols,
                               const SiteTable& sites) {
  const PreparedCovariance c(model);
  const Eigen::MatrixXd dist = sites.distance_matrix();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t l = 0; l < cols.size(); ++l) {
      const auto& a = rows[k];
      const auto& b = cols[l];
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          c(a.var, b.var, dist(a.site, b.site), static_cast<double>(a.t - b.t));
    }
  return out;
}

ModelSpec restrict(const ModelSpec& model, Variant variant) {
  ModelSpec out = model;
  if (is_separable(variant)) out.temporal.b = 0.0;
  if (shares_margins(variant) && !out.marginals.empty()) {
    const double nu = out.marginals.front().nu;
    const double r = out.marginals.front().r;
    for (auto& m : out.marginals) {
      m.nu = nu;
      m.r = r;
    }
  }
  return out;
}

CompositeModel restrict(const CompositeModel& model, Variant variant) {
  CompositeModel out = model;
  out.spacetime = restrict(model.spacetime, variant);
  return out;
}

}  // namespace stmv
