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

#include "stmv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "stmv/errors.hpp"

namespace stmv::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::string& what, std::size_t line_no) {
  return what + " line " + std::to_string(line_no);
}

void check_header(const std::string& line, const std::vector<std::string>& want, const std::string& what) {
  if (split_csv(line) != want) {
    std::string h;
    for (std::size_t k = 0; k < want.size(); ++k) h += (k ? "," : "") + want[k];
    throw DataError(what + ": expected header '" + h + "'");
  }
}

double parse_double(const std::string& s, const std::string& ctx) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw DataError(ctx + ": cannot parse number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& ctx) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(ctx + ": cannot parse integer '" + s + "'");
  return v;
}

bool is_missing(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return l.empty() || l == "na" || l == "nan";
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "' for reading");
  return in;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(what + ": unknown key '" + k + "'");
}

const json& need(const json& j, const std::string& key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(what + ": missing key '" + key + "'");
  return *it;
}

double get_number(const json& j, const std::string& key, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_number()) throw ConfigError(what + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> get_vector(const json& j, const std::string& key, std::size_t n, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_array() || v.size() != n) throw ConfigError(what + ": '" + key + "' must be an array of length " + std::to_string(n));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(what + ": '" + key + "' must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& key, int p, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_array() || static_cast<int>(v.size()) != p) throw ConfigError(what + ": '" + key + "' must be p x p");
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != p) throw ConfigError(what + ": '" + key + "' must be p x p");
    for (int k = 0; k < p; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) throw ConfigError(what + ": '" + key + "' must contain numbers");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

void check_version(const json& j, const std::string& what) {
  auto it = j.find("schema_version");
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<int>() != kModelSchemaVersion)
    throw ConfigError(what + ": unsupported schema_version (expected " + std::to_string(kModelSchemaVersion) + ")");
}

}  // namespace

SiteTable read_sites(std::istream& in, DistanceMode mode) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("sites: empty input");
  check_header(line, {"site_id", "x", "y"}, "sites");
  std::vector<Site> sites;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw DataError(where("sites: expected 3 fields on", no));
    if (f[0].empty()) throw DataError(where("sites: empty site_id on", no));
    sites.push_back({f[0], parse_double(f[1], where("sites", no)), parse_double(f[2], where("sites", no))});
  }
  try {
    return SiteTable(std::move(sites), mode);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("sites: ") + e.what());
  }
}

SiteTable read_sites_file(const std::string& path, DistanceMode mode) {
  auto in = open_in(path);
  return read_sites(in, mode);
}

void write_sites(std::ostream& out, const SiteTable& sites) {
  out << "site_id,x,y\n";
  for (const auto& s : sites.sites()) out << s.id << ',' << format_double(s.x) << ',' << format_double(s.y) << '\n';
}

Dataset read_dataset(std::istream& in, const SiteTable& sites) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset: empty input");
  check_header(line, {"rep", "site_id", "t", "variable", "value"}, "dataset");
  struct Row {
    int rep, site, t, var;
    double value;
  };
  std::vector<Row> rows;
  std::size_t no = 1;
  int p = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string ctx = where("dataset", no);
    if (f.size() != 5) throw DataError(ctx + ": expected 5 fields");
    if (!sites.contains(f[1])) throw DataError(ctx + ": unknown site_id '" + f[1] + "'");
    Row r{parse_int(f[0], ctx), static_cast<int>(sites.index_of(f[1])), parse_int(f[2], ctx), parse_int(f[3], ctx),
          std::numeric_limits<double>::quiet_NaN()};
    if (r.var < 1) throw DataError(ctx + ": variable must be >= 1");
    if (!is_missing(f[4])) {
      r.value = parse_double(f[4], ctx);
      if (!std::isfinite(r.value)) throw DataError(ctx + ": non-finite value");
    }
    p = std::max(p, r.var);
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("dataset: no rows");
  std::set<int> reps, days;
  for (const auto& r : rows) {
    reps.insert(r.rep);
    days.insert(r.t);
  }
  Dataset ds(sites, std::vector<int>(days.begin(), days.end()), p, std::vector<int>(reps.begin(), reps.end()));
  std::map<int, int> rep_index;
  for (int k = 0; k < ds.n_reps(); ++k) rep_index[ds.rep_ids()[static_cast<std::size_t>(k)]] = k;
  std::set<std::tuple<int, int, int, int>> seen;
  for (const auto& r : rows) {
    const int ri = rep_index[r.rep];
    const int di = ds.day_index(r.t);
    if (!seen.emplace(ri, di, r.site, r.var).second) {
      std::ostringstream msg;
      msg << "dataset: duplicate cell (rep " << r.rep << ", site " << sites[static_cast<std::size_t>(r.site)].id
          << ", t " << r.t << ", variable " << r.var << ")";
      throw DataError(msg.str());
    }
    ds.at(ri, di, r.site, r.var - 1) = r.value;
  }
  return ds;
}

Dataset read_dataset_file(const std::string& path, const SiteTable& sites) {
  auto in = open_in(path);
  return read_dataset(in, sites);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "rep,site_id,t,variable,value\n";
  for (int r = 0; r < data.n_reps(); ++r)
    for (int d = 0; d < data.n_days(); ++d)
      for (int s = 0; s < data.n_sites(); ++s)
        for (int v = 0; v < data.p(); ++v)
          if (data.observed(r, d, s, v))
            out << data.rep_ids()[static_cast<std::size_t>(r)] << ',' << data.sites()[static_cast<std::size_t>(s)].id
                << ',' << data.days()[static_cast<std::size_t>(d)] << ',' << v + 1 << ','
                << format_double(data.at(r, d, s, v)) << '\n';
}

void write_predictions(std::ostream& out, const Dataset& data, const RollingForecast& forecast) {
  out << "rep,t,site_id,variable,mean,sd,obs\n";
  for (const auto& f : forecast.days) {
    for (std::size_t j = 0; j < forecast.targets.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      const Target& tg = forecast.targets[j];
      out << data.rep_ids()[static_cast<std::size_t>(f.rep)] << ',' << f.t << ',' << data.sites()[static_cast<std::size_t>(tg.site)].id
          << ',' << tg.var + 1 << ',' << format_double(f.dist.mean(k)) << ',' << format_double(f.dist.sd(k)) << ',';
      if (!std::isnan(f.obs(k))) out << format_double(f.obs(k));
      out << '\n';
    }
  }
}

std::vector<PredictionRow> read_predictions(std::istream& in) {
  const std::string what = "predictions";
  std::string line;
  if (!std::getline(in, line)) throw DataError(what + ": empty input");
  check_header(line, {"rep", "t", "site_id", "variable", "mean", "sd", "obs"}, what);
  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string ctx = where(what, line_no);
    if (f.size() != 7) throw DataError(ctx + ": expected 7 fields");
    PredictionRow r;
    r.rep = parse_int(f[0], ctx);
    r.t = parse_int(f[1], ctx);
    r.site_id = f[2];
    r.variable = parse_int(f[3], ctx);
    r.mean = parse_double(f[4], ctx);
    r.sd = parse_double(f[5], ctx);
    r.obs = is_missing(f[6]) ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[6], ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

json to_json(const ModelSpec& m) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = "gneiting";
  j["family"] = to_string(m.family);
  j["p"] = m.p;
  j["d"] = m.d;
  json sigma = json::array(), nu = json::array(), r = json::array();
  for (const auto& mg : m.marginals) {
    sigma.push_back(mg.sigma);
    nu.push_back(mg.nu);
    r.push_back(mg.r);
  }
  j["sigma"] = sigma;
  j["nu"] = nu;
  j["inv_range_km"] = r;
  j["beta"] = matrix_json(m.beta);
  j["alpha"] = m.temporal.alpha;
  j["a"] = m.temporal.a;
  j["b"] = m.temporal.b;
  j["tau"] = m.temporal.tau;
  if (m.family == Family::GneitingCauchy) j["lambda"] = m.lambda;
  return j;
}

json to_json(const CompositeModel& m) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = "composite";
  json t;
  t["sigma"] = m.temporal.sigma;
  t["beta"] = matrix_json(m.temporal.beta);
  t["alpha"] = m.temporal.alpha;
  t["a"] = m.temporal.a;
  j["temporal"] = t;
  j["spacetime"] = to_json(m.spacetime);
  j["constrained"] = m.constrained;
  return j;
}

json to_json(const AnyModel& m) {
  return std::visit([](const auto& x) { return to_json(x); }, m);
}

ModelSpec model_spec_from_json(const json& j) {
  const std::string what = "model";
  check_keys(j, {"schema_version", "kind", "family", "p", "d", "sigma", "nu", "inv_range_km", "range_km", "beta",
                 "alpha", "a", "b", "tau", "lambda"},
             what);
  check_version(j, what);
  if (j.contains("kind") && j["kind"] != "gneiting") throw ConfigError(what + ": kind must be 'gneiting'");
  ModelSpec m;
  const json& fam = need(j, "family", what);
  if (!fam.is_string()) throw ConfigError(what + ": 'family' must be a string");
  try {
    m.family = family_from_string(fam.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
  const json& p = need(j, "p", what);
  if (!p.is_number_integer() || p.get<int>() < 1) throw ConfigError(what + ": 'p' must be a positive integer");
  m.p = p.get<int>();
  if (j.contains("d")) {
    if (!j["d"].is_number_integer() || j["d"].get<int>() < 1) throw ConfigError(what + ": 'd' must be a positive integer");
    m.d = j["d"].get<int>();
  }
  const auto n = static_cast<std::size_t>(m.p);
  const auto sigma = get_vector(j, "sigma", n, what);
  const auto nu = get_vector(j, "nu", n, what);
  if (j.contains("inv_range_km") == j.contains("range_km"))
    throw ConfigError(what + ": give exactly one of 'inv_range_km' and 'range_km'");
  std::vector<double> r;
  if (j.contains("inv_range_km")) {
    r = get_vector(j, "inv_range_km", n, what);
  } else {
    r = get_vector(j, "range_km", n, what);
    for (double& x : r) x = 1.0 / x;
  }
  for (std::size_t i = 0; i < n; ++i) m.marginals.push_back({sigma[i], nu[i], r[i]});
  m.beta = get_matrix(j, "beta", m.p, what);
  m.temporal.alpha = get_number(j, "alpha", what);
  m.temporal.a = get_number(j, "a", what);
  m.temporal.b = get_number(j, "b", what);
  m.temporal.tau = j.contains("tau") ? get_number(j, "tau", what) : 1.0;
  if (m.family == Family::GneitingCauchy) m.lambda = get_number(j, "lambda", what);
  else if (j.contains("lambda")) throw ConfigError(what + ": 'lambda' applies to the cauchy family only");
  const ValidityReport rep = kernels::validate(m);
  if (!rep.valid) throw ConfigError(what + ": invalid model: " + rep.violations.front());
  return m;
}

CompositeModel composite_from_json(const json& j) {
  const std::string what = "composite model";
  check_keys(j, {"schema_version", "kind", "temporal", "spacetime", "constrained"}, what);
  check_version(j, what);
  CompositeModel cm;
  cm.spacetime = model_spec_from_json(need(j, "spacetime", what));
  const json& t = need(j, "temporal", what);
  check_keys(t, {"sigma", "beta", "alpha", "a"}, what + " temporal");
  const int p = cm.spacetime.p;
  cm.temporal.sigma = get_vector(t, "sigma", static_cast<std::size_t>(p), what + " temporal");
  cm.temporal.beta = get_matrix(t, "beta", p, what + " temporal");
  cm.temporal.alpha = get_number(t, "alpha", what + " temporal");
  cm.temporal.a = get_number(t, "a", what + " temporal");
  if (j.contains("constrained")) {
    if (!j["constrained"].is_boolean()) throw ConfigError(what + ": 'constrained' must be a boolean");
    cm.constrained = j["constrained"].get<bool>();
  }
  const ValidityReport rep = validate(cm);
  if (!rep.valid) throw ConfigError(what + ": invalid model: " + rep.violations.front());
  return cm;
}

AnyModel model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model: expected a JSON object");
  auto it = j.find("kind");
  if (it != j.end() && *it == "composite") return composite_from_json(j);
  return model_spec_from_json(j);
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

AnyModel read_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

std::string model_hash(const AnyModel& m) {
  const std::string s = to_json(m).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stmv::io
