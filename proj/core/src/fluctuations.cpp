#include "anderson/fluctuations.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "anderson/errors.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::thread> pool;
  int t = std::min(n_threads, n);
  pool.reserve(t);
  for (int i = 0; i < t; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void EnsembleConfig::validate() const {
  model.validate();
  if (eps_list.empty()) throw std::invalid_argument("EnsembleConfig: eps_list empty");
  for (double e : eps_list)
    if (!(e > 0)) throw std::invalid_argument("EnsembleConfig: eps must be positive");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("EnsembleConfig: eps_list must be descending");
  if (k_indices.empty()) throw std::invalid_argument("EnsembleConfig: k_indices empty");
  for (int k : k_indices)
    if (k < 1) throw std::invalid_argument("EnsembleConfig: k indices must be >= 1");
  std::vector<int> ks = k_indices;
  std::sort(ks.begin(), ks.end());
  if (std::adjacent_find(ks.begin(), ks.end()) != ks.end())
    throw std::invalid_argument("EnsembleConfig: k indices must be distinct");
  if (n_samples < 2) throw std::invalid_argument("EnsembleConfig: n_samples must be >= 2");
  if (!(gamma > 0)) throw std::invalid_argument("EnsembleConfig: gamma must be positive");
}

std::uint64_t derive_sample_seed(std::uint64_t base_seed, int eps_index,
                                 int sample_index) {
  return mix_keys(mix_keys(base_seed, static_cast<std::uint64_t>(eps_index)),
                  static_cast<std::uint64_t>(sample_index));
}

EnsembleResult run_ensemble(const EnsembleConfig& config) {
  config.validate();
  const int d = config.domain.dim;
  const double K = config.model.moment_index();

  EnsembleResult result;
  result.config = config;
  result.kappa_used =
      config.kappa ? *config.kappa : choose_kappa(K, d, config.window_mode);
  // r and rho only matter for the event diagnostics; an empty window is fatal
  // only when those are requested.
  try {
    result.r_used = config.r ? *config.r : choose_r(d, result.kappa_used);
    double rho_hi = 1.0 - result.kappa_used * result.r_used / d;
    if (config.rho)
      result.rho_used = *config.rho;
    else if (rho_hi > 0)
      result.rho_used = 0.5 * rho_hi;
    else if (config.diagnostics)
      throw EmptyWindow("run_ensemble: rho window (0, 1 - kappa r / d) is empty");
  } catch (const EmptyWindow&) {
    if (config.diagnostics) throw;
    result.r_used = 0;
    result.rho_used = 0;
  }

  const int k_max = *std::max_element(config.k_indices.begin(), config.k_indices.end());

  // Diagnostics need the continuum eigenfunctions; built once.
  std::vector<Profile> eigfns;
  Profile U = config.model.mean_profile ? config.model.mean_profile
                                        : constant_profile(0.0);
  if (config.diagnostics) {
    double fine = config.eps_list.back() / 4.0;
    auto ref = continuum_reference(config.domain, config.model.mean_profile, k_max, fine);
    for (int k = 1; k <= k_max; ++k) eigfns.push_back(ref.eigenfunction_profile(k));
    if (static_cast<int>(ref.eigenvalues().size()) > k_max) {
      for (int k : config.k_indices) {
        double gap_lo = k > 1 ? ref.eigenvalues()[k - 1] - ref.eigenvalues()[k - 2]
                              : std::numeric_limits<double>::infinity();
        double gap_hi = ref.eigenvalues()[k] - ref.eigenvalues()[k - 1];
        double tol = 1e-6 * (std::abs(ref.eigenvalues()[k]) +
                             std::abs(ref.eigenvalues()[0]));
        if (std::min(gap_lo, gap_hi) <= tol)
          result.warnings.push_back("continuum eigenvalue " + std::to_string(k) +
                                    " is near-degenerate; CLT analysis is unreliable");
      }
    }
  }

  const int n_eps = static_cast<int>(config.eps_list.size());
  result.records.resize(static_cast<std::size_t>(n_eps) * config.n_samples);

  for (int e = 0; e < n_eps; ++e) {
    const double eps = config.eps_list[e];
    const LatticeDomain lattice = discretize(config.domain, eps);
    parallel_for(config.n_samples, config.n_threads, [&](int s) {
      SampleRecord& rec = result.records[static_cast<std::size_t>(e) * config.n_samples + s];
      rec.eps = eps;
      rec.sample_id = s;
      rec.seed = derive_sample_seed(config.base_seed, e, s);
      try {
        PotentialSample xi = sample_potential(config.model, lattice, rec.seed);
        PotentialSample xibar = truncate(xi, result.kappa_used);
        rec.truncation_hit = xibar.truncation_changed;

        Eigen::VectorXd raw =
            lowest_k_values(assemble(lattice, xi), k_max, config.solver_tol);
        for (int k : config.k_indices) rec.lambda_raw.push_back(raw[k - 1]);

        if (!rec.truncation_hit) {
          rec.lambda_trunc = rec.lambda_raw;
        } else {
          Eigen::VectorXd tr =
              lowest_k_values(assemble(lattice, xibar), k_max, config.solver_tol);
          for (int k : config.k_indices) rec.lambda_trunc.push_back(tr[k - 1]);
        }

        if (config.diagnostics) {
          auto rep = event_diagnostics(xi, lattice, config.domain, config.model, eigfns,
                                       U, config.gamma, result.r_used, result.rho_used,
                                       config.event_constant);
          rec.has_events = true;
          rec.in_E = rep.in_E;
          rec.in_F = rep.in_F;
        }
      } catch (const std::exception& ex) {
        rec.error = ex.what();
      }
    });
  }
  return result;
}

std::vector<double> rescaled_fluctuations(const EnsembleResult& result, double eps,
                                          int k) {
  auto kit = std::find(result.config.k_indices.begin(), result.config.k_indices.end(), k);
  if (kit == result.config.k_indices.end())
    throw std::invalid_argument("rescaled_fluctuations: k not in the ensemble");
  std::size_t kpos = kit - result.config.k_indices.begin();

  std::vector<double> raw, trunc;
  for (const auto& rec : result.records) {
    if (rec.eps != eps || !rec.error.empty()) continue;
    raw.push_back(rec.lambda_raw[kpos]);
    trunc.push_back(rec.lambda_trunc[kpos]);
  }
  if (raw.size() < 2)
    throw std::invalid_argument("rescaled_fluctuations: missing records at this eps");

  double centering = mean_of(trunc);
  double scale = std::pow(eps, result.config.domain.dim / 2.0);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - centering) / scale;
  return out;
}

Eigen::MatrixXd predicted_covariance(const ContinuumReference& ref, const Profile& V,
                                     const std::vector<int>& k_indices) {
  const int n = static_cast<int>(k_indices.size());
  const auto& lambda = ref.eigenvalues();
  for (int k : k_indices) {
    if (k > static_cast<int>(lambda.size()))
      throw std::invalid_argument("predicted_covariance: reference lacks index k");
    double tol = 1e-6 * (std::abs(lambda.back()) + std::abs(lambda.front()));
    if ((k > 1 && lambda[k - 1] - lambda[k - 2] <= tol) ||
        (k < static_cast<int>(lambda.size()) && lambda[k] - lambda[k - 1] <= tol))
      throw DegenerateEigenvalue("predicted_covariance: index " + std::to_string(k) +
                                 " is near-degenerate");
  }

  // Midpoint quadrature at the fine-grid cell centers eps*x, weight eps^d.
  const LatticeDomain grid = discretize(ref.domain(), ref.fine_eps());
  const int d = grid.dim();
  const double w = std::pow(grid.eps(), d);

  Eigen::MatrixXd phi2(grid.size(), n);
  Eigen::VectorXd Vx(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    auto pos = grid.position(i);
    Vx[i] = V(pos);
    for (int c = 0; c < n; ++c) {
      double p = ref.eigenfunction(k_indices[c], pos);
      phi2(i, c) = p * p;
    }
  }
  Eigen::MatrixXd sigma(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      double s = 0;
      for (int i = 0; i < grid.size(); ++i) s += phi2(i, a) * phi2(i, b) * Vx[i];
      sigma(a, b) = sigma(b, a) = s * w;
    }
  return sigma;
}

Eigen::MatrixXd discrete_covariance_estimate(const LatticeDomain& lattice,
                                             const SpectrumResult& spectrum,
                                             const Profile& V,
                                             const std::vector<int>& k_indices) {
  const int n = static_cast<int>(k_indices.size());
  const int d = lattice.dim();
  const double scale = std::pow(lattice.eps(), -d);
  Eigen::MatrixXd sigma(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      double s = 0;
      for (int i = 0; i < lattice.size(); ++i) {
        auto pos = lattice.position(i);
        double ga = spectrum.eigenvectors(i, k_indices[a] - 1);
        double gb = spectrum.eigenvectors(i, k_indices[b] - 1);
        s += ga * ga * gb * gb * V(pos);
      }
      sigma(a, b) = sigma(b, a) = s * scale;
    }
  return sigma;
}

Eigen::MatrixXd empirical_covariance(const std::vector<std::vector<double>>& fluct) {
  return sample_covariance(fluct);
}

NormalityReport normality_tests(std::span<const double> fluct, double sigma2) {
  if (fluct.size() < 100)
    throw std::invalid_argument("normality_tests: need >= 100 samples");
  if (!(sigma2 > 0)) throw std::invalid_argument("normality_tests: sigma2 must be > 0");
  MomentStats ms = moment_stats(fluct);  // throws on degenerate input
  KsResult ks = ks_test_normal(fluct, sigma2);
  return {ks.stat, ks.p_value, ms.skewness, ms.excess_kurtosis};
}

std::vector<ConvergenceRow> convergence_table(const EnsembleResult& result,
                                              const ContinuumReference& ref) {
  const auto& config = result.config;
  std::vector<ConvergenceRow> table;
  for (double eps : config.eps_list) {
    for (std::size_t kpos = 0; kpos < config.k_indices.size(); ++kpos) {
      int k = config.k_indices[kpos];
      std::vector<double> lam;
      for (const auto& rec : result.records)
        if (rec.eps == eps && rec.error.empty()) lam.push_back(rec.lambda_raw[kpos]);
      if (lam.empty()) continue;
      ConvergenceRow row;
      row.eps = eps;
      row.k = k;
      row.median_lambda = median(lam);
      row.continuum_lambda = ref.eigenvalue(k);
      row.spread = lam.size() >= 4 ? interquartile_range(lam) : 0.0;
      table.push_back(row);
    }
  }
  return table;
}

std::vector<ConvergenceRow> convergence_experiment(const EnsembleConfig& config,
                                                   const ContinuumReference& ref) {
  return convergence_table(run_ensemble(config), ref);
}

double heavy_tail_kappa(const EnsembleConfig& config) {
  const int d = config.domain.dim;
  const double K = config.model.moment_index();
  if (d < 3 || !(K < d / 2.0))
    throw EmptyWindow("heavy_tail_divergence: requires d >= 3 and K < d/2");
  if (config.kappa) {
    if (!(*config.kappa > 2.0 && *config.kappa < d / K))
      throw EmptyWindow("heavy_tail_divergence: kappa outside the Appendix window");
    return *config.kappa;
  }
  double K_prime = 0.5 * (K + d / 2.0);  // any K' in (K, d/2) works
  double hi = d / K_prime;
  if (!(hi > 2.0)) throw EmptyWindow("heavy_tail_divergence: window (2, d/K') empty");
  return 0.5 * (2.0 + hi);
}

std::vector<HeavyTailRow> heavy_tail_table(const EnsembleResult& result) {
  const auto& config = result.config;
  const int d = config.domain.dim;
  const double kappa = result.kappa_used;
  auto kit = std::find(config.k_indices.begin(), config.k_indices.end(), 1);
  if (kit == config.k_indices.end())
    throw std::invalid_argument("heavy_tail_table: ensemble lacks k = 1");
  std::size_t kpos = kit - config.k_indices.begin();

  std::vector<HeavyTailRow> table;
  for (double eps : config.eps_list) {
    const LatticeDomain lattice = discretize(config.domain, eps);
    const double threshold = std::pow(eps, -kappa);
    const double diag_free = 2.0 * d / (eps * eps);

    HeavyTailRow row;
    row.eps = eps;
    row.certificate_ok = true;
    std::vector<double> lam1;
    int n = 0;
    for (const auto& rec : result.records) {
      if (rec.eps != eps || !rec.error.empty()) continue;
      ++n;
      double l1 = rec.lambda_raw[kpos];
      lam1.push_back(l1);
      // Sampling is pure, so the draw can be re-materialized from its seed.
      PotentialSample xi = sample_potential(config.model, lattice, rec.seed);
      double min_xi = *std::min_element(xi.values.begin(), xi.values.end());
      // Delta-function certificate from the Rayleigh quotient of 1_{x}.
      if (!(l1 <= diag_free + min_xi + 1e-7 * (std::abs(l1) + diag_free)))
        row.certificate_ok = false;
      if (l1 <= -threshold / 2.0) row.fraction_deep += 1;
      if (min_xi <= -threshold) row.fraction_min_below += 1;
    }
    if (n == 0) continue;
    row.median_lambda1 = median(lam1);
    row.fraction_deep /= n;
    row.fraction_min_below /= n;
    table.push_back(row);
  }
  return table;
}

std::vector<HeavyTailRow> heavy_tail_divergence(const EnsembleConfig& config) {
  config.validate();
  EnsembleConfig cfg = config;
  cfg.kappa = heavy_tail_kappa(config);
  cfg.k_indices = {1};
  return heavy_tail_table(run_ensemble(cfg));
}

double expected_deep_excess(int n_sites, double tail_index, double depth) {
  if (n_sites < 1) throw std::invalid_argument("expected_deep_excess: n_sites < 1");
  if (!(tail_index > 1.0))
    throw std::invalid_argument("expected_deep_excess: tail_index must exceed 1");
  if (!(depth >= 1.0)) throw std::invalid_argument("expected_deep_excess: depth < 1");
  // E = -Integral_depth^inf [1 - (1 - t^-K)^n] dt with t = depth * u^-p.
  // p > 1/(K-1) makes the transformed integrand vanish at u = 0, so composite
  // Simpson converges at full order despite the algebraic tail.
  const double K = tail_index;
  const double p = std::max(2.0, 2.0 / (K - 1.0));
  const int m = 1 << 14;  // intervals; integrand is smooth on (0, 1]
  auto f = [&](double u) {
    if (u <= 0.0) return 0.0;
    double x = std::pow(u, p * K) * std::pow(depth, -K);  // t^-K
    double tail = -std::expm1(n_sites * std::log1p(-x));  // 1 - (1-x)^n
    return tail * p * depth * std::pow(u, -p - 1.0);
  };
  double sum = f(0.0) + f(1.0);
  for (int i = 1; i < m; ++i) sum += f(i / double(m)) * (i % 2 ? 4.0 : 2.0);
  return -sum / (3.0 * m);
}

TruncationGapTable truncation_gap_table(const EnsembleResult& result) {
  const auto& config = result.config;
  const int d = config.domain.dim;
  const double K = config.model.moment_index();
  auto kit = std::find(config.k_indices.begin(), config.k_indices.end(), 1);
  if (kit == config.k_indices.end())
    throw std::invalid_argument("truncation_gap_table: ensemble lacks k = 1");
  std::size_t kpos = kit - config.k_indices.begin();

  const bool pareto_neg = config.model.family == PotentialFamily::ParetoNegative;

  TruncationGapTable out;
  for (double eps : config.eps_list) {
    std::vector<double> raw, trunc, controls;
    int n_truncated = 0;
    double depth = 2.0 * d / (eps * eps);
    const LatticeDomain lattice =
        pareto_neg ? discretize(config.domain, eps) : LatticeDomain::path(1, eps);
    for (const auto& rec : result.records) {
      if (rec.eps != eps || !rec.error.empty()) continue;
      raw.push_back(rec.lambda_raw[kpos]);
      trunc.push_back(rec.lambda_trunc[kpos]);
      n_truncated += rec.truncation_hit;
      if (pareto_neg) {
        // Sampling is pure, so the draw can be re-materialized from its seed.
        PotentialSample xi = sample_potential(config.model, lattice, rec.seed);
        double min_xi = *std::min_element(xi.values.begin(), xi.values.end());
        controls.push_back(std::min(0.0, depth + min_xi));
      }
    }
    if (raw.size() < 2) continue;
    TruncationGapRow row;
    row.eps = eps;
    row.n_truncated = n_truncated;
    row.mean_raw = mean_of(raw);
    row.mean_trunc = mean_of(trunc);
    row.gap = row.mean_raw - row.mean_trunc;
    double var = 0;
    for (std::size_t s = 0; s < raw.size(); ++s) {
      double g = raw[s] - trunc[s] - row.gap;
      var += g * g;
    }
    var /= (raw.size() - 1.0);
    row.se_gap = std::sqrt(var / raw.size());
    if (pareto_neg) {
      // Unbiased control-variate estimate of the same mean gap: subtract the
      // per-sample certificate excess and add back its exact expectation.
      double ec = expected_deep_excess(lattice.size(), K, depth);
      std::vector<double> resid(raw.size());
      for (std::size_t s = 0; s < raw.size(); ++s)
        resid[s] = raw[s] - trunc[s] - controls[s];
      double rm = mean_of(resid);
      double rvar = 0;
      for (double v : resid) rvar += (v - rm) * (v - rm);
      rvar /= (resid.size() - 1.0);
      row.has_cv = true;
      row.gap_cv = rm + ec;
      row.se_cv = std::sqrt(rvar / resid.size());
    }
    out.rows.push_back(row);
  }

  // Log-log fit of |gap| against eps over rows with a negative gap; the
  // control-variate estimate is used whenever it is available.
  std::vector<double> xs, ys;
  for (const auto& row : out.rows) {
    double g = row.has_cv ? row.gap_cv : row.gap;
    if (g < 0) {
      xs.push_back(std::log(row.eps));
      ys.push_back(std::log(-g));
    }
  }
  if (xs.size() >= 2) {
    double mx = mean_of(xs), my = mean_of(ys);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      num += (xs[i] - mx) * (ys[i] - my);
      den += (xs[i] - mx) * (xs[i] - mx);
    }
    out.fitted_slope = num / den;
  }
  out.predicted_slope = -d + 2.0 * (K - 1.0);
  return out;
}

TruncationGapTable truncation_mean_gap(const EnsembleConfig& config) {
  config.validate();
  const int d = config.domain.dim;
  const double K = config.model.moment_index();
  if (!(K > std::max(1.0, d / 2.0) && K < d / 2.0 + 1.0))
    throw EmptyWindow("truncation_mean_gap: requires 1 v d/2 < K < d/2 + 1");
  EnsembleConfig cfg = config;
  if (!cfg.kappa) cfg.kappa = choose_kappa(K, d, WindowMode::Homogenization);
  cfg.k_indices = {1};
  return truncation_gap_table(run_ensemble(cfg));
}

}  // namespace anderson
