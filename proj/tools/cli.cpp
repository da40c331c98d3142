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

#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stmv/empirical.hpp"
#include "stmv/errors.hpp"
#include "stmv/fit.hpp"
#include "stmv/io.hpp"
#include "stmv/predict.hpp"
#include "stmv/simulate.hpp"
#include "stmv/window.hpp"

namespace stmv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Strict view of a JSON object: every key must be consumed before finish().
class Doc {
 public:
  Doc(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    auto it = j_.find(k);
    if (it == j_.end()) throw ConfigError(where_ + ": missing key '" + k + "'");
    return *it;
  }

  double number(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_number()) throw ConfigError(where_ + ": '" + k + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& k, double def) { return has(k) ? number(k) : def; }

  long long integer(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_number_integer()) throw ConfigError(where_ + ": '" + k + "' must be an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& k, long long def) { return has(k) ? integer(k) : def; }

  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_boolean()) throw ConfigError(where_ + ": '" + k + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_string()) throw ConfigError(where_ + ": '" + k + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& k, const std::string& def) { return has(k) ? string(k) : def; }

  std::vector<std::string> strings(const std::string& k) {
    const json& v = raw(k);
    std::vector<std::string> out;
    if (!v.is_array()) throw ConfigError(where_ + ": '" + k + "' must be an array of strings");
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(where_ + ": '" + k + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& k) {
    const json& v = raw(k);
    std::vector<double> out;
    if (!v.is_array()) throw ConfigError(where_ + ": '" + k + "' must be an array of numbers");
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where_ + ": '" + k + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Doc section(const std::string& k) { return Doc(raw(k), where_ + "." + k); }
  const std::string& where() const { return where_; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

struct Run {
  std::string command;
  fs::path config_path;
  json config;
  std::optional<std::uint64_t> seed_flag;
  int threads = 0;
  fs::path out_dir;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  std::vector<std::string> outputs;

  std::string path(const std::string& p) const {
    const fs::path q(p);
    if (q.is_absolute()) return q.lexically_normal().string();
    return (config_path.parent_path() / q).lexically_normal().string();
  }

  std::uint64_t seed(Doc& d) const {
    std::uint64_t s = 0;
    if (d.has("seed")) {
      const json& v = d.raw("seed");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError(d.where() + ": 'seed' must be a nonnegative integer");
      s = v.get<std::uint64_t>();
    }
    return seed_flag ? *seed_flag : s;
  }

  std::ofstream open(const std::string& name) {
    fs::create_directories(out_dir);
    const fs::path p = out_dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + p.string() + "' for writing");
    outputs.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream f = open(name);
    f << j.dump(2) << '\n';
  }

  /// Manifest with everything needed to repeat the run; thread counts and
  /// timings are left out so that outputs do not depend on them.
  void write_manifest(std::uint64_t seed, json extra) {
    json m;
    m["schema_version"] = 1;
    m["kind"] = "manifest";
    m["command"] = command;
    m["version"] = STMV_VERSION;
    m["seed"] = seed;
    m["config"] = config;
    for (auto& [k, v] : extra.items()) m[k] = v;
    std::vector<std::string> files = outputs;
    m["outputs"] = files;
    std::ofstream f = open("manifest.json");
    f << m.dump(2) << '\n';
  }
};

AnyModel load_model(const Run& run, const json& v, const std::string& where) {
  AnyModel m;
  if (v.is_string()) {
    m = io::read_model_file(run.path(v.get<std::string>()));
  } else if (v.is_object()) {
    m = io::model_from_json(v);
  } else {
    throw ConfigError(where + ": 'model' must be an object or a path to a model file");
  }
  const ValidityReport rep = validate(m);
  if (!rep.valid) {
    std::string msg = where + ": invalid model:";
    for (const auto& s : rep.violations) msg += " " + s + ";";
    throw ConfigError(msg);
  }
  return m;
}

std::vector<int> parse_days(const json& v, const std::string& where) {
  std::vector<int> days;
  if (v.is_number_integer()) {
    const long long n = v.get<long long>();
    if (n < 1) throw ConfigError(where + ": 'days' must be positive");
    for (long long t = 1; t <= n; ++t) days.push_back(static_cast<int>(t));
    return days;
  }
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": 'days' must be a day count or a nonempty array of day labels");
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(where + ": 'days' must contain integers");
    const int t = e.get<int>();
    if (!days.empty() && t <= days.back()) throw ConfigError(where + ": 'days' must be strictly increasing");
    days.push_back(t);
  }
  return days;
}

JitterPolicy parse_jitter(Doc& d) {
  JitterPolicy j;
  if (!d.has("jitter")) return j;
  Doc s = d.section("jitter");
  j.initial_rel = s.number("initial_rel", j.initial_rel);
  j.growth = s.number("growth", j.growth);
  j.max_retries = static_cast<int>(s.integer("max_retries", j.max_retries));
  s.finish();
  if (!(j.initial_rel > 0.0) || !(j.growth > 1.0) || j.max_retries < 0)
    throw ConfigError(s.where() + ": need initial_rel > 0, growth > 1 and max_retries >= 0");
  return j;
}

json jitter_json(const JitterPolicy& j) {
  return {{"initial_rel", j.initial_rel}, {"growth", j.growth}, {"max_retries", j.max_retries}};
}

Window parse_window(Doc& d) {
  Window w;
  if (!d.has("window")) return w;
  Doc s = d.section("window");
  w.d_s_km = s.number("d_s_km");
  w.d_t_days = s.number("d_t_days");
  s.finish();
  try {
    check_window(w);
  } catch (const std::exception& e) {
    throw ConfigError(s.where() + ": " + e.what());
  }
  return w;
}

/// Keys shared by the fit command and the "fit" section of select-window.
void parse_fit_options(Doc& d, FitOptions& fo) {
  try {
    fo.variant = variant_from_string(d.string("variant", "NSD"));
    fo.family = family_from_string(d.string("family", "matern"));
    fo.objective = objective_from_string(d.string("objective", "WPL"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(d.where() + ": " + e.what());
  }
  fo.composite = d.boolean("composite", false);
  fo.d = static_cast<int>(d.integer("d", 2));
  if (fo.d < 1) throw ConfigError(d.where() + ": 'd' must be >= 1");
  if (d.has("b_grid")) {
    fo.b_grid = d.numbers("b_grid");
    if (fo.b_grid.empty()) throw ConfigError(d.where() + ": 'b_grid' must not be empty");
    for (double b : fo.b_grid)
      if (!(b >= 0.0 && b <= 1.0)) throw ConfigError(d.where() + ": 'b_grid' values must lie in [0, 1]");
  }
  fo.fit_tau = d.boolean("fit_tau", false);
  fo.tau = d.number("tau", 1.0);
  fo.fit_lambda = d.boolean("fit_lambda", true);
  fo.lambda = d.number("lambda", 1.0);
  if (!(fo.tau > 0.0)) throw ConfigError(d.where() + ": 'tau' must be positive");
  if (!(fo.lambda > 0.0 && fo.lambda <= 2.0)) throw ConfigError(d.where() + ": 'lambda' must lie in (0, 2]");
  if (d.has("optimizer")) {
    Doc o = d.section("optimizer");
    fo.inner.tol = o.number("tol", fo.inner.tol);
    fo.inner.max_iter = static_cast<int>(o.integer("max_iter", fo.inner.max_iter));
    fo.inner.grad_step = o.number("grad_step", fo.inner.grad_step);
    fo.inner.max_step = o.number("max_step", fo.inner.max_step);
    fo.outer_tol = o.number("outer_tol", fo.outer_tol);
    fo.max_outer = static_cast<int>(o.integer("max_outer", fo.max_outer));
    o.finish();
    if (!(fo.inner.tol > 0.0) || fo.inner.max_iter < 1 || !(fo.inner.grad_step > 0.0) || !(fo.inner.max_step > 0.0) ||
        !(fo.outer_tol > 0.0) || fo.max_outer < 1)
      throw ConfigError(o.where() + ": tolerances, steps and iteration limits must be positive");
  }
}

std::vector<std::size_t> kept_sites(const SiteTable& sites, const std::vector<std::string>& exclude, const std::string& where) {
  std::set<std::string> ex;
  for (const auto& id : exclude) {
    if (!sites.contains(id)) throw ConfigError(where + ": unknown site '" + id + "' in exclude_sites");
    ex.insert(id);
  }
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < sites.size(); ++k)
    if (!ex.count(sites[k].id)) keep.push_back(k);
  if (keep.empty()) throw ConfigError(where + ": every site is excluded");
  return keep;
}

/// Reads "data" and "sites", drops "exclude_sites" when `allow_exclude`, and
/// standardizes when "standardize" is true.
Dataset load_dataset(const Run& run, Doc& d, bool allow_exclude) {
  const SiteTable sites = io::read_sites_file(run.path(d.string("sites")));
  Dataset data = io::read_dataset_file(run.path(d.string("data")), sites);
  if (allow_exclude && d.has("exclude_sites")) data = data.subset_sites(kept_sites(sites, d.strings("exclude_sites"), d.where()));
  if (d.boolean("standardize", false)) data = standardize(data);
  return data;
}

void check_p(const AnyModel& m, int p, const std::string& where) {
  if (num_variables(m) != p)
    throw ConfigError(where + ": model has " + std::to_string(num_variables(m)) + " variables, data have " +
                      std::to_string(p));
}

int cmd_simulate(Run& run) {
  Doc d(run.config, "simulate config");
  SiteTable sites = io::read_sites_file(run.path(d.string("sites")));
  if (d.has("site_ids")) {
    std::vector<std::size_t> keep;
    for (const auto& id : d.strings("site_ids")) {
      if (!sites.contains(id)) throw ConfigError(d.where() + ": unknown site '" + id + "' in site_ids");
      keep.push_back(sites.index_of(id));
    }
    sites = sites.subset(keep);
  }
  const AnyModel model = load_model(run, d.raw("model"), d.where());
  const std::vector<int> days = parse_days(d.raw("days"), d.where());
  const long long n_reps = d.integer("n_reps");
  if (n_reps < 1) throw ConfigError(d.where() + ": 'n_reps' must be >= 1");
  const JitterPolicy jitter = parse_jitter(d);
  const std::uint64_t seed = run.seed(d);
  d.finish();

  const int p = num_variables(model);
  std::vector<int> site_idx(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) site_idx[k] = static_cast<int>(k);
  SimulationRequest req{model, PointSet::grid(site_idx, days, p), sites, static_cast<int>(n_reps), seed, jitter,
                        run.threads};
  const SimulationResult res = simulate(req);
  const Dataset data = dataset_from_simulation(sites, days, p, res.values);
  {
    std::ofstream f = run.open("data.csv");
    io::write_dataset(f, data);
  }
  json extra;
  extra["model_hash"] = io::model_hash(model);
  extra["jitter_policy"] = jitter_json(jitter);
  extra["jitter_used"] = res.jitter;
  extra["values_per_replicate"] = req.points.size();
  run.write_manifest(seed, extra);
  *run.out << "simulate: " << n_reps << " replicate(s) of " << req.points.size() << " values written to "
           << (run.out_dir / "data.csv").string() << '\n';
  return kExitOk;
}

int cmd_fit(Run& run) {
  Doc d(run.config, "fit config");
  const Dataset data = load_dataset(run, d, true);
  FitOptions fo;
  parse_fit_options(d, fo);
  const Window window = parse_window(d);
  std::optional<AnyModel> init;
  if (d.has("init")) init = load_model(run, d.raw("init"), d.where() + ".init");
  const std::uint64_t seed = run.seed(d);
  d.finish();
  if (init) check_p(*init, data.p(), d.where());
  fo.threads = run.threads;

  FitReport rep;
  try {
    rep = fit(data, window, fo, init);
  } catch (const FitFailure& e) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "fit_failure";
    j["message"] = e.what();
    j["variant"] = to_string(fo.variant);
    j["objective"] = to_string(fo.objective);
    j["b_profile"] = b_profile_json(e.partial());
    run.write_json("fit_report.json", j);
    run.write_manifest(seed, json::object());
    throw;
  }
  run.write_json("fit_report.json", to_json(rep));
  run.write_json("model.json", io::to_json(rep.model));
  json extra;
  extra["model_hash"] = io::model_hash(rep.model);
  extra["standardized"] = data.standardization.has_value();
  run.write_manifest(seed, extra);
  const ModelSpec& st = std::holds_alternative<ModelSpec>(rep.model) ? std::get<ModelSpec>(rep.model)
                                                                      : std::get<CompositeModel>(rep.model).spacetime;
  *run.out << "fit: " << to_string(fo.variant) << ' ' << to_string(fo.objective) << " b = " << st.temporal.b
           << " objective = " << io::format_double(rep.final_objective) << " after " << rep.iterations
           << " outer iteration(s)\n";
  return kExitOk;
}

struct PredictSetup {
  Dataset data;
  AnyModel model;
  int q = 2;
  std::vector<std::string> validation;
  JitterPolicy jitter;
  std::uint64_t seed = 0;
};

PredictSetup parse_predict(Run& run, const std::string& what) {
  Doc d(run.config, what + " config");
  PredictSetup s;
  s.data = load_dataset(run, d, false);
  s.model = load_model(run, d.raw("model"), d.where());
  s.validation = d.strings("validation_sites");
  s.q = static_cast<int>(d.integer("q", 2));
  if (s.q < 1) throw ConfigError(d.where() + ": 'q' must be >= 1");
  s.jitter = parse_jitter(d);
  s.seed = run.seed(d);
  d.finish();
  check_p(s.model, s.data.p(), d.where());
  return s;
}

json predict_manifest(const PredictSetup& s, const RollingForecast& f) {
  json extra;
  extra["model_hash"] = io::model_hash(s.model);
  extra["q"] = s.q;
  extra["validation_sites"] = s.validation;
  extra["jitter_policy"] = jitter_json(s.jitter);
  extra["forecasts"] = f.days.size();
  extra["diagnostics"] = f.diagnostics;
  extra["standardized"] = s.data.standardization.has_value();
  return extra;
}

int cmd_predict(Run& run) {
  const PredictSetup s = parse_predict(run, "predict");
  const RollingForecast f = rolling_predict(s.data, s.model, s.q, s.validation, s.jitter, run.threads);
  for (const auto& msg : f.diagnostics) *run.err << "predict: " << msg << '\n';
  {
    std::ofstream out = run.open("predictions.csv");
    io::write_predictions(out, s.data, f);
  }
  run.write_manifest(s.seed, predict_manifest(s, f));
  *run.out << "predict: " << f.days.size() << " forecast(s) of " << f.targets.size() << " target(s)\n";
  return kExitOk;
}

int cmd_score(Run& run) {
  const PredictSetup s = parse_predict(run, "score");
  const RollingForecast f = rolling_predict(s.data, s.model, s.q, s.validation, s.jitter, run.threads);
  for (const auto& msg : f.diagnostics) *run.err << "score: " << msg << '\n';
  if (f.days.empty()) throw DataError("score: no forecast could be made");
  const ScoreTable t = score(f.days);
  json j;
  j["schema_version"] = 1;
  j["kind"] = "scores";
  j["rmse"] = t.rmse;
  j["mae"] = t.mae;
  j["crps"] = t.crps;
  j["logs1"] = t.logs1;
  j["logs6"] = t.logs6;
  j["logs6_displayed"] = t.logs6_displayed;
  j["targets_per_day"] = t.m;
  j["forecasts"] = t.n_days;
  j["skipped"] = t.n_skipped;
  run.write_json("scores.json", j);
  run.write_manifest(s.seed, predict_manifest(s, f));
  *run.out << "score: RMSE " << io::format_double(t.rmse) << " MAE " << io::format_double(t.mae) << " CRPS "
           << io::format_double(t.crps) << " LogS1 " << io::format_double(t.logs1) << " LogS6 "
           << io::format_double(t.logs6) << '\n';
  return kExitOk;
}

int cmd_variogram(Run& run) {
  Doc d(run.config, "variogram config");
  const Dataset data = load_dataset(run, d, true);
  std::vector<double> edges;
  if (d.has("edges")) {
    if (d.has("bins")) throw ConfigError(d.where() + ": give either 'bins' or 'edges', not both");
    edges = d.numbers("edges");
    if (edges.size() < 2) throw ConfigError(d.where() + ": 'edges' needs at least two values");
    for (std::size_t k = 1; k < edges.size(); ++k)
      if (!(edges[k] > edges[k - 1])) throw ConfigError(d.where() + ": 'edges' must be strictly increasing");
    if (edges.front() < 0.0) throw ConfigError(d.where() + ": 'edges' must be nonnegative");
  } else {
    const long long bins = d.integer("bins", 8);
    if (bins < 1) throw ConfigError(d.where() + ": 'bins' must be >= 1");
    edges = quantile_bin_edges(data.sites(), static_cast<int>(bins));
  }
  std::vector<int> lags;
  if (d.has("lags")) {
    const json& v = d.raw("lags");
    if (v.is_number_integer()) {
      if (v.get<long long>() < 0) throw ConfigError(d.where() + ": 'lags' must be nonnegative");
      for (int u = 0; u <= v.get<int>(); ++u) lags.push_back(u);
    } else if (v.is_array() && !v.empty()) {
      for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long long>() < 0)
          throw ConfigError(d.where() + ": 'lags' must contain nonnegative integers");
        lags.push_back(e.get<int>());
      }
    } else {
      throw ConfigError(d.where() + ": 'lags' must be a maximum lag or an array of lags");
    }
  } else {
    for (int u = 0; u <= 5; ++u) lags.push_back(u);
  }
  std::optional<AnyModel> model;
  if (d.has("model")) model = load_model(run, d.raw("model"), d.where());
  const long long n_curve = d.integer("curve_points", 50);
  if (n_curve < 2) throw ConfigError(d.where() + ": 'curve_points' must be >= 2");
  const std::uint64_t seed = run.seed(d);
  d.finish();
  if (model) check_p(*model, data.p(), d.where());

  {
    std::ofstream f = run.open("empirical.csv");
    f << "kind,i,j,bin,h_lo,h_hi,h_mean,u,n_pairs,value\n";
    auto emit = [&f](const char* kind, const std::vector<EmpiricalEntry>& rows) {
      for (const auto& e : rows) {
        f << kind << ',' << e.i + 1 << ',' << e.j + 1 << ',' << e.bin << ',' << io::format_double(e.h_lo) << ','
          << io::format_double(e.h_hi) << ',';
        if (!e.empty) f << io::format_double(e.h_mean);
        f << ',' << e.u << ',' << io::format_double(e.n_pairs) << ',';
        if (!e.empty) f << io::format_double(e.value);
        f << '\n';
      }
    };
    emit("cov", empirical_cov(data, edges, lags));
    emit("variogram", empirical_variogram(data, edges, lags));
  }
  json extra;
  extra["edges"] = edges;
  extra["lags"] = lags;
  if (model) {
    const PreparedCovariance c(*model);
    std::ofstream f = run.open("model.csv");
    f << "i,j,h,u,cov,variogram\n";
    const double h_max = edges.back();
    for (int i = 0; i < c.p(); ++i)
      for (int j = i; j < c.p(); ++j)
        for (int u : lags)
          for (long long k = 0; k < n_curve; ++k) {
            const double h = h_max * static_cast<double>(k) / static_cast<double>(n_curve - 1);
            const double v = c(i, j, h, u);
            f << i + 1 << ',' << j + 1 << ',' << io::format_double(h) << ',' << u << ',' << io::format_double(v) << ','
              << io::format_double(c(i, j, 0.0, 0.0) - v) << '\n';
          }
    extra["model_hash"] = io::model_hash(*model);
  }
  run.write_manifest(seed, extra);
  *run.out << "variogram: " << edges.size() - 1 << " bin(s), " << lags.size() << " lag(s)\n";
  return kExitOk;
}

int cmd_select_window(Run& run) {
  Doc d(run.config, "select-window config");
  const AnyModel model = load_model(run, d.raw("model"), d.where());
  StudyDesign design;
  const SiteTable sites = io::read_sites_file(run.path(d.string("sites")));
  design.sites = d.has("exclude_sites") ? sites.subset(kept_sites(sites, d.strings("exclude_sites"), d.where())) : sites;
  design.days = parse_days(d.raw("days"), d.where());
  design.n_reps = static_cast<int>(d.integer("n_reps"));
  if (design.n_reps < 1) throw ConfigError(d.where() + ": 'n_reps' must be >= 1");
  const long long n_sims = d.integer("n_sims");
  if (n_sims < 2) throw ConfigError(d.where() + ": 'n_sims' must be >= 2");
  std::vector<Window> candidates;
  if (d.has("candidates")) {
    if (d.has("grid")) throw ConfigError(d.where() + ": give either 'candidates' or 'grid', not both");
    const json& v = d.raw("candidates");
    if (!v.is_array() || v.empty()) throw ConfigError(d.where() + ": 'candidates' must be a nonempty array");
    for (std::size_t k = 0; k < v.size(); ++k) {
      Doc c(v[k], d.where() + ".candidates[" + std::to_string(k) + "]");
      candidates.push_back({c.number("d_s_km"), c.number("d_t_days")});
      c.finish();
    }
  } else {
    Doc g = d.section("grid");
    const auto ds = g.numbers("d_s_km");
    const auto dt = g.numbers("d_t_days");
    g.finish();
    for (double s : ds)
      for (double t : dt) candidates.push_back({s, t});
    if (candidates.empty()) throw ConfigError(g.where() + ": empty candidate grid");
  }
  for (const auto& w : candidates) {
    try {
      check_window(w);
    } catch (const std::exception& e) {
      throw ConfigError(d.where() + ": " + e.what());
    }
  }
  FitOptions fo;
  if (d.has("fit")) {
    Doc f = d.section("fit");
    parse_fit_options(f, fo);
    f.finish();
  }
  if (fo.objective != ObjectiveKind::WPL) throw ConfigError(d.where() + ": window selection needs the WPL objective");
  const JitterPolicy jitter = parse_jitter(d);
  const std::uint64_t seed = run.seed(d);
  d.finish();

  const auto scores = select_window(model, design, candidates, static_cast<int>(n_sims), seed, fo, jitter, run.threads);
  run.write_json("windows.json", to_json(scores));
  {
    std::ofstream f = run.open("windows.csv");
    f << "rank,d_s_km,d_t_days,criterion,pair_fraction,b_mean,b_sd,n_fits,n_failed\n";
    auto num = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); };
    for (std::size_t k = 0; k < scores.size(); ++k) {
      const auto& s = scores[k];
      f << k + 1 << ',' << io::format_double(s.window.d_s_km) << ',' << io::format_double(s.window.d_t_days) << ','
        << num(s.criterion) << ',' << io::format_double(s.pair_fraction) << ',' << num(s.b_mean) << ','
        << num(s.b_sd) << ',' << s.n_fits << ',' << s.n_failed << '\n';
    }
  }
  json extra;
  extra["model_hash"] = io::model_hash(model);
  extra["jitter_policy"] = jitter_json(jitter);
  run.write_manifest(seed, extra);
  *run.out << "select-window: best window (" << scores.front().window.d_s_km << " km, "
           << scores.front().window.d_t_days << " days)\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multivariate space-time Gneiting models: simulation, pairwise-likelihood fitting, prediction"};
  app.name("stmv");
  app.set_version_flag("--version", std::string(STMV_VERSION));
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out = ".";
  } flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate replicated data from a model"},
      {"fit", "fit a model by weighted pairwise or full likelihood"},
      {"predict", "rolling conditional prediction at validation sites"},
      {"score", "prediction scores at validation sites"},
      {"variogram", "empirical covariances and variograms, with model curves"},
      {"select-window", "rank cut-off windows by simulation"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON configuration file")->required();
    sub->add_option("--seed", flags.seed, "random seed (overrides the config)");
    sub->add_option("--threads", flags.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", flags.out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  Run r;
  r.command = app.get_subcommands().front()->get_name();
  r.config_path = flags.config;
  r.seed_flag = flags.seed;
  r.threads = flags.threads;
  r.out_dir = flags.out;
  r.out = &out;
  r.err = &err;
  try {
    r.config = io::read_json_file(flags.config);
    if (r.command == "simulate") return cmd_simulate(r);
    if (r.command == "fit") return cmd_fit(r);
    if (r.command == "predict") return cmd_predict(r);
    if (r.command == "score") return cmd_score(r);
    if (r.command == "variogram") return cmd_variogram(r);
    return cmd_select_window(r);
  } catch (const NumericalError& e) {
    err << "stmv " << r.command << ": numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "stmv " << r.command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "stmv " << r.command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "stmv " << r.command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::logic_error& e) {
    err << "stmv " << r.command << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "stmv " << r.command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace stmv::cli
