// anderson_lab: config-driven experiment runner.
//
//   anderson_lab run <config.json> [--out DIR]
//   anderson_lab report <run_dir>
//
// `run` writes manifest.json, records.csv and summary.json into a timestamped
// subdirectory of the configured output directory. Records are a pure
// function of the config: identical configs produce byte-identical
// records.csv. `report` renders the tables and, for clt runs, a QQ TSV.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anderson/eigensolve.hpp"
#include "anderson/errors.hpp"
#include "anderson/fluctuations.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/perturbation.hpp"
#include "anderson/potential.hpp"
#include "anderson/rng.hpp"
#include "anderson/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anderson;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Config parsing. Every error is collected; nothing stops at the first one.

struct ProbeConfig {
  int n_sites = 20;
  double eps = 1.0;
  int k = 1;
  int k_max = 3;
  int n_draws = 10;
  double h = 1e-4;
  int site = 0;
  double xi_from = 0;
  double xi_to = 0.5;
  int n_quad = 64;
  std::uint64_t xi_seed = 1;
};

struct RunConfig {
  std::string experiment;
  ContinuumDomain domain = ContinuumDomain::unit_box(1);
  PotentialModel model;
  EnsembleConfig ensemble;
  ProbeConfig probe;
  std::optional<double> fine_eps;
  std::string output_dir = "runs";
  json echo;  // verbatim config for the manifest
};

const std::set<std::string> kExperiments = {
    "converge",        "clt",        "diagnostics",    "tail-divergence",
    "truncation-gap",  "derivative-check", "green-check"};

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where, std::vector<std::string>& errors) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      errors.push_back(where + ": unknown key '" + it.key() + "'");
}

double get_num(const json& obj, const std::string& key, double fallback,
               std::vector<std::string>& errors, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    errors.push_back(where + "." + key + ": expected a number");
    return fallback;
  }
  return obj[key].get<double>();
}

ContinuumDomain parse_domain(const json& j, std::vector<std::string>& errors) {
  ContinuumDomain dom = ContinuumDomain::unit_box(1);
  if (!j.is_object()) {
    errors.push_back("domain: expected an object");
    return dom;
  }
  check_keys(j, {"kind", "intervals", "center", "radius"}, "domain", errors);
  std::string kind = j.value("kind", "box");
  if (kind == "box") {
    if (!j.contains("intervals") || !j["intervals"].is_array()) {
      errors.push_back("domain.intervals: required array of [lo, hi] pairs");
      return dom;
    }
    std::vector<std::pair<double, double>> iv;
    for (const auto& pair : j["intervals"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        errors.push_back("domain.intervals: each entry must be [lo, hi]");
        return dom;
      }
      iv.emplace_back(pair[0].get<double>(), pair[1].get<double>());
      if (!(iv.back().first < iv.back().second))
        errors.push_back("domain.intervals: empty interval [" +
                         fmt17(iv.back().first) + ", " + fmt17(iv.back().second) + "]");
    }
    if (iv.empty()) errors.push_back("domain.intervals: must be nonempty");
    if (errors.empty()) dom = ContinuumDomain::box(std::move(iv));
  } else if (kind == "ball") {
    if (!j.contains("center") || !j["center"].is_array() || !j.contains("radius")) {
      errors.push_back("domain: ball needs 'center' (array) and 'radius'");
      return dom;
    }
    std::vector<double> c;
    for (const auto& v : j["center"]) c.push_back(v.get<double>());
    double radius = get_num(j, "radius", 0, errors, "domain");
    if (!(radius > 0)) errors.push_back("domain.radius: must be > 0");
    if (c.empty()) errors.push_back("domain.center: must be nonempty");
    if (!c.empty() && radius > 0) dom = ContinuumDomain::ball(std::move(c), radius);
  } else {
    errors.push_back("domain.kind: '" + kind + "' is not 'box' or 'ball'");
  }
  return dom;
}

PotentialModel parse_model(const json& j, std::vector<std::string>& errors) {
  PotentialModel model;
  if (!j.is_object()) {
    errors.push_back("model: expected an object");
    return model;
  }
  check_keys(j, {"family", "halfwidth", "tail_index", "mean", "variance"}, "model",
             errors);
  std::string family = j.value("family", "uniform");
  if (family == "uniform")
    model.family = PotentialFamily::Uniform;
  else if (family == "gaussian")
    model.family = PotentialFamily::Gaussian;
  else if (family == "pareto-symmetric")
    model.family = PotentialFamily::ParetoSymmetric;
  else if (family == "pareto-negative")
    model.family = PotentialFamily::ParetoNegative;
  else
    errors.push_back("model.family: '" + family +
                     "' is not uniform|gaussian|pareto-symmetric|pareto-negative");
  model.uniform_halfwidth = get_num(j, "halfwidth", 1.0, errors, "model");
  model.tail_index = get_num(j, "tail_index",
                             std::numeric_limits<double>::infinity(), errors, "model");
  if (j.contains("mean")) {
    double mean = get_num(j, "mean", 0, errors, "model");
    model.mean_profile = constant_profile(mean);
  }
  if (j.contains("variance")) {
    double variance = get_num(j, "variance", 1, errors, "model");
    if (!(variance >= 0)) errors.push_back("model.variance: must be >= 0");
    model.variance_profile = constant_profile(variance);
  }
  try {
    model.validate();
  } catch (const std::exception& ex) {
    errors.push_back(std::string("model: ") + ex.what());
  }
  return model;
}

void parse_overrides(const json& j, RunConfig& cfg, std::vector<std::string>& errors) {
  check_keys(j, {"kappa", "r", "rho", "gamma", "solver_tol", "event_constant"},
             "overrides", errors);
  if (j.contains("kappa")) cfg.ensemble.kappa = get_num(j, "kappa", 0, errors, "overrides");
  if (j.contains("r")) cfg.ensemble.r = get_num(j, "r", 0, errors, "overrides");
  if (j.contains("rho")) cfg.ensemble.rho = get_num(j, "rho", 0, errors, "overrides");
  cfg.ensemble.gamma = get_num(j, "gamma", cfg.ensemble.gamma, errors, "overrides");
  cfg.ensemble.solver_tol =
      get_num(j, "solver_tol", cfg.ensemble.solver_tol, errors, "overrides");
  cfg.ensemble.event_constant =
      get_num(j, "event_constant", cfg.ensemble.event_constant, errors, "overrides");
}

// Window check for a kappa override, naming the legal interval in the error.
void check_kappa_window(const RunConfig& cfg, std::vector<std::string>& errors) {
  if (!cfg.ensemble.kappa) return;
  double kappa = *cfg.ensemble.kappa;
  int d = cfg.domain.dim;
  double K = cfg.model.moment_index();
  double lo, hi;
  if (cfg.experiment == "tail-divergence") {
    lo = 2.0;
    hi = d / K;
  } else if (cfg.experiment == "clt" || cfg.experiment == "diagnostics") {
    lo = d / K;
    hi = std::min(2.0, d / 2.0);
  } else {
    lo = d / K;
    hi = std::min<double>(d, 2.0);
  }
  if (!(kappa > lo && kappa < hi))
    errors.push_back("overrides.kappa: " + fmt17(kappa) +
                     " outside the legal interval (" + fmt17(lo) + ", " + fmt17(hi) +
                     ")");
}

ProbeConfig parse_probe(const json& j, const std::string& experiment,
                        std::vector<std::string>& errors) {
  ProbeConfig p;
  check_keys(j,
             {"n_sites", "eps", "k", "k_max", "n_draws", "h", "site", "xi_from",
              "xi_to", "n_quad", "xi_seed"},
             "probe", errors);
  p.n_sites = static_cast<int>(get_num(j, "n_sites", p.n_sites, errors, "probe"));
  p.eps = get_num(j, "eps", p.eps, errors, "probe");
  p.k = static_cast<int>(get_num(j, "k", p.k, errors, "probe"));
  p.k_max = static_cast<int>(get_num(j, "k_max", p.k_max, errors, "probe"));
  p.n_draws = static_cast<int>(get_num(j, "n_draws", p.n_draws, errors, "probe"));
  p.h = get_num(j, "h", p.h, errors, "probe");
  p.site = static_cast<int>(get_num(j, "site", p.site, errors, "probe"));
  p.xi_from = get_num(j, "xi_from", p.xi_from, errors, "probe");
  p.xi_to = get_num(j, "xi_to", p.xi_to, errors, "probe");
  p.n_quad = static_cast<int>(get_num(j, "n_quad", p.n_quad, errors, "probe"));
  if (j.contains("xi_seed")) p.xi_seed = j["xi_seed"].get<std::uint64_t>();
  if (p.n_sites < 1) errors.push_back("probe.n_sites: must be >= 1");
  if (!(p.eps > 0)) errors.push_back("probe.eps: must be > 0");
  if (!(p.h > 0)) errors.push_back("probe.h: must be > 0");
  if (p.n_quad < 1) errors.push_back("probe.n_quad: must be >= 1");
  (void)experiment;
  return p;
}

RunConfig parse_config(const json& j, std::vector<std::string>& errors) {
  RunConfig cfg;
  cfg.echo = j;
  if (!j.is_object()) {
    errors.push_back("config: top level must be an object");
    return cfg;
  }
  check_keys(j,
             {"experiment", "domain", "model", "eps_list", "k_indices", "n_samples",
              "base_seed", "n_threads", "output_dir", "fine_eps", "overrides",
              "probe"},
             "config", errors);

  cfg.experiment = j.value("experiment", "");
  if (!kExperiments.count(cfg.experiment))
    errors.push_back("experiment: '" + cfg.experiment +
                     "' is not one of converge|clt|diagnostics|tail-divergence|"
                     "truncation-gap|derivative-check|green-check");

  if (j.contains("domain")) cfg.domain = parse_domain(j["domain"], errors);
  if (j.contains("model")) cfg.model = parse_model(j["model"], errors);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  if (j.contains("fine_eps")) {
    cfg.fine_eps = get_num(j, "fine_eps", 0, errors, "config");
    if (!(*cfg.fine_eps > 0)) errors.push_back("fine_eps: must be > 0");
  }

  bool is_probe = cfg.experiment == "derivative-check" || cfg.experiment == "green-check";
  if (is_probe) {
    if (j.contains("probe")) cfg.probe = parse_probe(j["probe"], cfg.experiment, errors);
    return cfg;
  }

  cfg.ensemble.domain = cfg.domain;
  cfg.ensemble.model = cfg.model;
  if (!j.contains("eps_list") || !j["eps_list"].is_array() || j["eps_list"].empty()) {
    errors.push_back("eps_list: required nonempty descending array");
  } else {
    for (const auto& v : j["eps_list"]) {
      if (!v.is_number()) {
        errors.push_back("eps_list: entries must be numbers");
        break;
      }
      cfg.ensemble.eps_list.push_back(v.get<double>());
    }
  }
  if (j.contains("k_indices")) {
    cfg.ensemble.k_indices.clear();
    for (const auto& v : j["k_indices"])
      cfg.ensemble.k_indices.push_back(v.get<int>());
  }
  cfg.ensemble.n_samples =
      static_cast<int>(get_num(j, "n_samples", 2, errors, "config"));
  if (j.contains("base_seed")) cfg.ensemble.base_seed = j["base_seed"].get<std::uint64_t>();
  cfg.ensemble.n_threads =
      static_cast<int>(get_num(j, "n_threads", 1, errors, "config"));
  if (j.contains("overrides")) parse_overrides(j["overrides"], cfg, errors);
  cfg.ensemble.diagnostics = cfg.experiment == "diagnostics";
  cfg.ensemble.window_mode = cfg.experiment == "converge"
                                 ? WindowMode::Homogenization
                                 : WindowMode::Clt;

  int d = cfg.domain.dim;
  double K = cfg.model.moment_index();
  if (cfg.experiment == "tail-divergence") {
    cfg.ensemble.k_indices = {1};
    if (d < 3 || !(K < d / 2.0))
      errors.push_back("tail-divergence: requires d >= 3 and tail_index < d/2");
  } else if (cfg.experiment == "truncation-gap") {
    cfg.ensemble.k_indices = {1};
    if (!(K > std::max(1.0, d / 2.0) && K < d / 2.0 + 1.0))
      errors.push_back("truncation-gap: requires 1 v d/2 < tail_index < d/2 + 1");
    cfg.ensemble.window_mode = WindowMode::Homogenization;
  }
  check_kappa_window(cfg, errors);

  try {
    cfg.ensemble.validate();
  } catch (const std::exception& ex) {
    errors.push_back(std::string("config: ") + ex.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Output files.

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

fs::path make_outdir(const RunConfig& cfg, const std::string& out_override) {
  if (!out_override.empty()) {
    fs::create_directories(out_override);
    return out_override;
  }
  fs::path base = fs::path(cfg.output_dir) / (cfg.experiment + "-" + timestamp_now());
  fs::path dir = base;
  for (int suffix = 1; fs::exists(dir); ++suffix)
    dir = base.string() + "-" + std::to_string(suffix);
  fs::create_directories(dir);
  return dir;
}

void write_records_csv(const fs::path& path, const EnsembleResult& result) {
  std::ofstream out(path, std::ios::binary);
  out << "eps,sample_id,seed,k,lambda_raw,lambda_trunc,truncation_hit,in_E,in_F\n";
  const auto& ks = result.config.k_indices;
  for (const auto& rec : result.records) {
    for (std::size_t kpos = 0; kpos < ks.size(); ++kpos) {
      out << fmt17(rec.eps) << ',' << rec.sample_id << ',' << rec.seed << ','
          << ks[kpos] << ',';
      if (rec.error.empty()) {
        out << fmt17(rec.lambda_raw[kpos]) << ',' << fmt17(rec.lambda_trunc[kpos]);
      } else {
        out << ',';
      }
      out << ',' << (rec.truncation_hit ? 1 : 0) << ',';
      if (rec.has_events)
        out << (rec.in_E ? 1 : 0) << ',' << (rec.in_F ? 1 : 0);
      else
        out << ',';
      out << '\n';
    }
  }
}

void write_empty_records_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << "eps,sample_id,seed,k,lambda_raw,lambda_trunc,truncation_hit,in_E,in_F\n";
}

json ensemble_warnings(const EnsembleResult& result) {
  json warnings = json::array();
  for (const auto& w : result.warnings) warnings.push_back(w);
  for (const auto& rec : result.records)
    if (!rec.error.empty())
      warnings.push_back("sample (eps=" + fmt17(rec.eps) + ", id=" +
                         std::to_string(rec.sample_id) + "): " + rec.error);
  return warnings;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Experiment bodies: each returns the summary JSON.

json run_converge(const RunConfig& cfg, const EnsembleResult& result) {
  int k_max = *std::max_element(cfg.ensemble.k_indices.begin(),
                                cfg.ensemble.k_indices.end());
  double fine = cfg.fine_eps ? *cfg.fine_eps : cfg.ensemble.eps_list.back() / 4.0;
  auto ref = continuum_reference(cfg.domain, cfg.model.mean_profile, k_max, fine);
  json rows = json::array();
  for (const auto& row : convergence_table(result, ref))
    rows.push_back({{"eps", row.eps},
                    {"k", row.k},
                    {"median_lambda", row.median_lambda},
                    {"continuum_lambda", row.continuum_lambda},
                    {"spread", row.spread}});
  json summary;
  summary["experiment"] = "converge";
  summary["rows"] = rows;
  summary["kappa"] = result.kappa_used;
  json err = json::array();
  for (double e : ref.error_estimate()) err.push_back(e);
  summary["continuum_error_estimate"] = err;
  return summary;
}

json run_clt(const RunConfig& cfg, const EnsembleResult& result) {
  const auto& ks = cfg.ensemble.k_indices;
  int k_max = *std::max_element(ks.begin(), ks.end());
  double fine = cfg.fine_eps ? *cfg.fine_eps : cfg.ensemble.eps_list.back() / 4.0;
  auto ref = continuum_reference(cfg.domain, cfg.model.mean_profile, k_max + 1, fine);
  Profile V = cfg.model.variance_profile ? cfg.model.variance_profile
                                         : constant_profile(1.0);
  Eigen::MatrixXd predicted = predicted_covariance(ref, V, ks);

  json per_eps = json::array();
  for (double eps : cfg.ensemble.eps_list) {
    json entry;
    entry["eps"] = eps;
    std::vector<std::vector<double>> fluct;
    json per_k = json::array();
    for (std::size_t kpos = 0; kpos < ks.size(); ++kpos) {
      std::vector<double> x = rescaled_fluctuations(result, eps, ks[kpos]);
      fluct.push_back(x);
      json stats;
      stats["k"] = ks[kpos];
      MomentStats ms = moment_stats(x);
      stats["variance"] = ms.variance;
      stats["predicted_variance"] = predicted(kpos, kpos);
      stats["skewness"] = ms.skewness;
      stats["excess_kurtosis"] = ms.excess_kurtosis;
      if (x.size() >= 100) {
        NormalityReport rep = normality_tests(x, predicted(kpos, kpos));
        stats["ks_stat"] = rep.ks_stat;
        stats["ks_p"] = rep.ks_p;
      }
      per_k.push_back(stats);
    }
    entry["per_k"] = per_k;
    entry["empirical_covariance"] = matrix_to_json(empirical_covariance(fluct));
    per_eps.push_back(entry);
  }
  json summary;
  summary["experiment"] = "clt";
  summary["kappa"] = result.kappa_used;
  summary["predicted_covariance"] = matrix_to_json(predicted);
  summary["per_eps"] = per_eps;
  return summary;
}

json run_diagnostics(const RunConfig& cfg, const EnsembleResult& result) {
  json rows = json::array();
  for (double eps : cfg.ensemble.eps_list) {
    int n = 0, n_e = 0, n_f = 0;
    for (const auto& rec : result.records) {
      if (rec.eps != eps || !rec.has_events) continue;
      ++n;
      n_e += rec.in_E;
      n_f += rec.in_F;
    }
    if (n == 0) continue;
    rows.push_back({{"eps", eps},
                    {"n", n},
                    {"fraction_in_E", static_cast<double>(n_e) / n},
                    {"fraction_in_F", static_cast<double>(n_f) / n}});
  }
  json summary;
  summary["experiment"] = "diagnostics";
  summary["kappa"] = result.kappa_used;
  summary["r"] = result.r_used;
  summary["rho"] = result.rho_used;
  summary["gamma"] = cfg.ensemble.gamma;
  summary["rows"] = rows;
  return summary;
}

json run_tail_divergence(const EnsembleResult& result) {
  json rows = json::array();
  for (const auto& row : heavy_tail_table(result))
    rows.push_back({{"eps", row.eps},
                    {"median_lambda1", row.median_lambda1},
                    {"fraction_deep", row.fraction_deep},
                    {"certificate_ok", row.certificate_ok},
                    {"fraction_min_below", row.fraction_min_below}});
  json summary;
  summary["experiment"] = "tail-divergence";
  summary["kappa"] = result.kappa_used;
  summary["rows"] = rows;
  return summary;
}

json run_truncation_gap(const EnsembleResult& result) {
  TruncationGapTable table = truncation_gap_table(result);
  json rows = json::array();
  for (const auto& row : table.rows) {
    json j = {{"eps", row.eps},
              {"mean_raw", row.mean_raw},
              {"mean_trunc", row.mean_trunc},
              {"gap", row.gap},
              {"se_gap", row.se_gap},
              {"n_truncated", row.n_truncated}};
    if (row.has_cv) {
      j["gap_cv"] = row.gap_cv;
      j["se_cv"] = row.se_cv;
    }
    rows.push_back(j);
  }
  json summary;
  summary["experiment"] = "truncation-gap";
  summary["kappa"] = result.kappa_used;
  summary["rows"] = rows;
  summary["fitted_slope"] = table.fitted_slope;
  summary["predicted_slope"] = table.predicted_slope;
  return summary;
}

json run_derivative_check(const RunConfig& cfg) {
  const ProbeConfig& p = cfg.probe;
  LatticeDomain lattice = LatticeDomain::path(p.n_sites, p.eps);
  json rows = json::array();
  double max_rel_err = 0;
  for (int draw = 0; draw < p.n_draws; ++draw) {
    PotentialSample xi =
        sample_potential(cfg.model, lattice, mix_keys(p.xi_seed, draw));
    for (int k = 1; k <= p.k_max; ++k) {
      double worst = 0;
      for (int site = 0; site < lattice.size(); ++site) {
        DerivativeCheck c = hadamard_derivative_check(lattice, xi.values, k, site, p.h);
        worst = std::max(worst, c.rel_err);
      }
      rows.push_back({{"draw", draw}, {"k", k}, {"max_rel_err", worst}});
      max_rel_err = std::max(max_rel_err, worst);
    }
  }
  json summary;
  summary["experiment"] = "derivative-check";
  summary["h"] = p.h;
  summary["rows"] = rows;
  summary["max_rel_err"] = max_rel_err;
  return summary;
}

json run_green_check(const RunConfig& cfg) {
  const ProbeConfig& p = cfg.probe;
  LatticeDomain lattice = LatticeDomain::path(p.n_sites, p.eps);
  PotentialSample xi = sample_potential(cfg.model, lattice, p.xi_seed);
  GreenDiag g = spectral_green_diag(lattice, xi.values, p.k, p.site);
  SecondVariationCheck c = second_variation_check(lattice, xi.values, p.k, p.site,
                                                  p.xi_from, p.xi_to, p.n_quad);
  json summary;
  summary["experiment"] = "green-check";
  summary["green_diag"] = g.value;
  summary["lhs"] = c.lhs;
  summary["rhs"] = c.rhs;
  summary["rel_err"] = c.rel_err;
  return summary;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  json raw;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return 2;
    }
    try {
      in >> raw;
    } catch (const std::exception& ex) {
      std::cerr << "error: config is not valid JSON: " << ex.what() << '\n';
      return 2;
    }
  }

  std::vector<std::string> errors;
  RunConfig cfg = parse_config(raw, errors);
  if (!errors.empty()) {
    json err;
    err["status"] = "error";
    err["errors"] = errors;
    std::cout << err.dump(2) << '\n';
    return 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  fs::path outdir = make_outdir(cfg, out_override);

  json summary;
  json warnings = json::array();
  try {
    if (cfg.experiment == "derivative-check") {
      summary = run_derivative_check(cfg);
      write_empty_records_csv(outdir / "records.csv");
    } else if (cfg.experiment == "green-check") {
      summary = run_green_check(cfg);
      write_empty_records_csv(outdir / "records.csv");
    } else {
      EnsembleConfig ec = cfg.ensemble;
      if (cfg.experiment == "tail-divergence" && !ec.kappa)
        ec.kappa = heavy_tail_kappa(ec);
      EnsembleResult result = run_ensemble(ec);
      write_records_csv(outdir / "records.csv", result);
      warnings = ensemble_warnings(result);
      if (cfg.experiment == "converge")
        summary = run_converge(cfg, result);
      else if (cfg.experiment == "clt")
        summary = run_clt(cfg, result);
      else if (cfg.experiment == "diagnostics")
        summary = run_diagnostics(cfg, result);
      else if (cfg.experiment == "tail-divergence")
        summary = run_tail_divergence(result);
      else
        summary = run_truncation_gap(result);
    }
  } catch (const std::exception& ex) {
    json err;
    err["status"] = "error";
    err["errors"] = {std::string("run failed: ") + ex.what()};
    std::ofstream(outdir / "summary.json") << err.dump(2) << '\n';
    std::cout << err.dump(2) << '\n';
    return 1;
  }
  summary["warnings"] = warnings;
  auto t1 = std::chrono::steady_clock::now();

  json manifest;
  manifest["version"] = kVersion;
  manifest["experiment"] = cfg.experiment;
  manifest["config"] = cfg.echo;
  manifest["created"] = timestamp_now();
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  std::ofstream(outdir / "manifest.json") << manifest.dump(2) << '\n';
  std::ofstream(outdir / "summary.json") << summary.dump(2) << '\n';
  std::cout << outdir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct CsvRecord {
  double eps;
  int sample_id;
  std::uint64_t seed;
  int k;
  bool has_lambda = false;
  double lambda_raw = 0, lambda_trunc = 0;
};

std::vector<CsvRecord> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing records.csv");
  std::vector<CsvRecord> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    fields.resize(9);
    CsvRecord rec;
    rec.eps = std::stod(fields[0]);
    rec.sample_id = std::stoi(fields[1]);
    rec.seed = std::stoull(fields[2]);
    rec.k = std::stoi(fields[3]);
    if (!fields[4].empty()) {
      rec.has_lambda = true;
      rec.lambda_raw = std::stod(fields[4]);
      rec.lambda_trunc = std::stod(fields[5]);
    }
    out.push_back(rec);
  }
  return out;
}

int cmd_report(const std::string& run_dir) {
  fs::path dir(run_dir);
  json manifest;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
      std::cerr << "error: no manifest.json in '" << run_dir << "'\n";
      return 2;
    }
    try {
      in >> manifest;
    } catch (const std::exception& ex) {
      std::cerr << "error: corrupt manifest: " << ex.what() << '\n';
      return 2;
    }
  }
  json summary;
  {
    std::ifstream in(dir / "summary.json");
    if (in) in >> summary;
  }
  std::string experiment = manifest.value("experiment", "");
  std::cout << "experiment: " << experiment << "  (version "
            << manifest.value("version", "?") << ")\n";

  if (summary.contains("rows")) {
    const auto& rows = summary["rows"];
    if (!rows.empty()) {
      // Header from the first row's keys, then one line per row.
      std::vector<std::string> cols;
      for (auto it = rows[0].begin(); it != rows[0].end(); ++it)
        cols.push_back(it.key());
      std::ofstream tsv(dir / "report.tsv", std::ios::binary);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        std::cout << (c ? "\t" : "") << cols[c];
        tsv << (c ? "\t" : "") << cols[c];
      }
      std::cout << '\n';
      tsv << '\n';
      for (const auto& row : rows) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          std::string v = row[cols[c]].is_number()
                              ? fmt17(row[cols[c]].get<double>())
                              : row[cols[c]].dump();
          std::cout << (c ? "\t" : "") << v;
          tsv << (c ? "\t" : "") << v;
        }
        std::cout << '\n';
        tsv << '\n';
      }
    }
  }

  if (experiment == "clt") {
    auto records = read_records(dir / "records.csv");
    int dim = 1;
    if (manifest["config"].contains("domain")) {
      const auto& dj = manifest["config"]["domain"];
      if (dj.contains("intervals"))
        dim = static_cast<int>(dj["intervals"].size());
      else if (dj.contains("center"))
        dim = static_cast<int>(dj["center"].size());
    }
    // QQ pairs per (eps, k): sorted X against the normal quantile with the
    // predicted variance when available.
    std::map<std::pair<double, int>, std::vector<const CsvRecord*>> groups;
    for (const auto& rec : records)
      if (rec.has_lambda) groups[{rec.eps, rec.k}].push_back(&rec);
    std::ofstream qq(dir / "qq.tsv", std::ios::binary);
    qq << "eps\tk\tx\tquantile\n";
    for (const auto& [key, recs] : groups) {
      auto [eps, k] = key;
      double mean_trunc = 0;
      for (const auto* r : recs) mean_trunc += r->lambda_trunc;
      mean_trunc /= recs.size();
      double scale = std::pow(eps, dim / 2.0);
      std::vector<double> x;
      for (const auto* r : recs) x.push_back((r->lambda_raw - mean_trunc) / scale);
      std::sort(x.begin(), x.end());
      double sigma2 = 0;
      if (summary.contains("per_eps")) {
        for (const auto& entry : summary["per_eps"])
          if (entry["eps"].get<double>() == eps)
            for (const auto& stats : entry["per_k"])
              if (stats["k"].get<int>() == k)
                sigma2 = stats.value("predicted_variance", 0.0);
      }
      if (!(sigma2 > 0)) {
        MomentStats ms = moment_stats(x);
        sigma2 = ms.variance;
      }
      double sigma = std::sqrt(sigma2);
      for (std::size_t i = 0; i < x.size(); ++i) {
        double q = normal_quantile((i + 0.5) / x.size()) * sigma;
        qq << fmt17(eps) << '\t' << k << '\t' << fmt17(x[i]) << '\t' << fmt17(q)
           << '\n';
      }
    }
    std::cout << "wrote " << (dir / "qq.tsv").string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Anderson Hamiltonian experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_override, run_dir;
  auto* run = app.add_subcommand("run", "Execute a config file");
  run->add_option("config", config_path, "JSON config path")->required();
  run->add_option("--out", out_override, "Output directory (default: timestamped)");
  auto* report = app.add_subcommand("report", "Render tables for a finished run");
  report->add_option("run_dir", run_dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_override);
    return cmd_report(run_dir);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}
