#include "anderson/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "anderson/errors.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_pareto(PotentialFamily f) {
  return f == PotentialFamily::ParetoSymmetric || f == PotentialFamily::ParetoNegative;
}

}  // namespace

void PotentialModel::validate() const {
  switch (family) {
    case PotentialFamily::Uniform:
      if (!(uniform_halfwidth > 0))
        throw std::invalid_argument("PotentialModel: uniform halfwidth must be positive");
      break;
    case PotentialFamily::Gaussian:
      break;
    case PotentialFamily::ParetoSymmetric:
    case PotentialFamily::ParetoNegative:
      if (!(tail_index > 0))
        throw std::invalid_argument("PotentialModel: Pareto tail index must be positive");
      if (mean_profile || variance_profile)
        throw std::invalid_argument(
            "PotentialModel: Pareto families are fixed laws; mean/variance profiles "
            "are not supported");
      break;
  }
}

double PotentialModel::moment_index() const {
  return is_pareto(family) ? tail_index : kInf;
}

double PotentialModel::native_support_bound() const {
  if (family == PotentialFamily::Uniform) return uniform_halfwidth;
  return kInf;
}

double PotentialModel::abs_moment(double r, std::span<const double> pos) const {
  if (!(r > 0)) throw std::invalid_argument("abs_moment: r must be positive");
  double central;
  switch (family) {
    case PotentialFamily::Uniform: {
      double a = uniform_halfwidth;
      double s = 1.0;
      if (variance_profile) {
        double v = variance_profile(pos);
        s = std::sqrt(std::max(v, 0.0) / (a * a / 3.0));
      }
      central = std::pow(s * a, r) / (r + 1.0);
      break;
    }
    case PotentialFamily::Gaussian: {
      double sigma = variance_profile ? std::sqrt(std::max(variance_profile(pos), 0.0))
                                      : 1.0;
      central = std::pow(sigma, r) * std::pow(2.0, r / 2.0) *
                std::tgamma((r + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
      break;
    }
    case PotentialFamily::ParetoSymmetric:
    case PotentialFamily::ParetoNegative:
      if (r >= tail_index) return kInf;
      return tail_index / (tail_index - r);
  }
  double mean = mean_profile ? mean_profile(pos) : 0.0;
  if (mean == 0.0) return central;
  return std::pow(std::pow(central, 1.0 / r) + std::abs(mean), r);
}

PotentialSample sample_potential(const PotentialModel& model,
                                 const LatticeDomain& lattice, std::uint64_t seed) {
  model.validate();
  PotentialSample out;
  out.seed = seed;
  out.eps = lattice.eps();
  out.values.resize(lattice.size());

  for (int i = 0; i < lattice.size(); ++i) {
    Rng rng(mix_keys(seed, static_cast<std::uint64_t>(i)));
    double v;
    switch (model.family) {
      case PotentialFamily::Uniform:
        v = model.uniform_halfwidth * (2.0 * rng.uniform01() - 1.0);
        break;
      case PotentialFamily::Gaussian:
        v = rng.standard_normal();
        break;
      case PotentialFamily::ParetoSymmetric: {
        double mag = std::pow(rng.uniform01_open_left(), -1.0 / model.tail_index);
        v = rng.fair_bit() ? mag : -mag;
        break;
      }
      case PotentialFamily::ParetoNegative:
        v = -std::pow(rng.uniform01_open_left(), -1.0 / model.tail_index);
        break;
    }
    if (!is_pareto(model.family)) {
      auto pos = lattice.position(i);
      if (model.variance_profile) {
        double native_var = model.family == PotentialFamily::Uniform
                                ? model.uniform_halfwidth * model.uniform_halfwidth / 3.0
                                : 1.0;
        v *= std::sqrt(std::max(model.variance_profile(pos), 0.0) / native_var);
      }
      if (model.mean_profile) v += model.mean_profile(pos);
    }
    out.values[i] = v;
  }
  return out;
}

PotentialSample truncate(const PotentialSample& sample, double kappa) {
  if (!(kappa > 0)) throw std::invalid_argument("truncate: kappa must be positive");
  double threshold = std::pow(sample.eps, -kappa);
  PotentialSample out = sample;
  out.truncated = true;
  out.kappa = kappa;
  out.truncation_changed = false;
  for (double& v : out.values) {
    if (std::abs(v) > threshold) {
      v = 0.0;
      out.truncation_changed = true;
    }
  }
  return out;
}

namespace {

double midpoint_window(double lo, double hi, const char* what) {
  if (!(lo < hi))
    throw EmptyWindow(std::string(what) + ": empty window (" + std::to_string(lo) +
                      ", " + std::to_string(hi) + ")");
  return 0.5 * (lo + hi);
}

}  // namespace

double choose_kappa(double K, int d, WindowMode mode) {
  if (d < 1) throw std::invalid_argument("choose_kappa: d must be >= 1");
  if (!(K > 0)) throw std::invalid_argument("choose_kappa: K must be positive");
  double lo = d / K;
  double hi = mode == WindowMode::Homogenization ? std::min<double>(d, 2.0)
                                                 : std::min(2.0, d / 2.0);
  return midpoint_window(lo, hi, "choose_kappa");
}

double choose_r(int d, double kappa) {
  if (d < 1) throw std::invalid_argument("choose_r: d must be >= 1");
  if (!(kappa > 0)) throw std::invalid_argument("choose_r: kappa must be positive");
  double lo = std::max(1.0, d / 2.0);
  double hi = d / kappa;
  return midpoint_window(lo, hi, "choose_r");
}

EventReport event_diagnostics(const PotentialSample& sample,
                              const LatticeDomain& lattice,
                              const ContinuumDomain& domain,
                              const PotentialModel& model,
                              const std::vector<Profile>& continuum_eigfns,
                              const Profile& U, double gamma, double r, double rho,
                              double event_constant) {
  if (!(gamma > 0)) throw std::invalid_argument("event_diagnostics: gamma must be positive");
  if (static_cast<int>(sample.values.size()) != lattice.size())
    throw std::invalid_argument("event_diagnostics: sample/lattice mismatch");
  double eps = lattice.eps();
  int d = lattice.dim();
  if (!(rho > 0))
    throw std::invalid_argument("event_diagnostics: rho must be positive");
  // When a truncation exponent is attached, rho must sit below 1 - kappa*r/d.
  if (sample.kappa && !(rho < 1.0 - *sample.kappa * r / d))
    throw std::invalid_argument("event_diagnostics: rho outside (0, 1 - kappa*r/d)");

  EventReport rep;

  // Residual field xi - U(eps .), projected on the squared eigenfunctions.
  std::vector<double> centered(lattice.size());
  for (int i = 0; i < lattice.size(); ++i) {
    auto pos = lattice.position(i);
    centered[i] = sample.values[i] - U(pos);
  }
  for (const auto& phi : continuum_eigfns) {
    double s = 0;
    for (int i = 0; i < lattice.size(); ++i) {
      auto pos = lattice.position(i);
      double p = phi(pos);
      s += centered[i] * p * p;
    }
    rep.projection_stats = std::max(rep.projection_stats, std::abs(s) * std::pow(eps, d));
  }

  rep.xi_r_norm = scaled_norm(sample.values, eps, d, r);

  double max_moment = 0;
  for (int i = 0; i < lattice.size(); ++i) {
    auto pos = lattice.position(i);
    max_moment = std::max(max_moment, model.abs_moment(r, pos));
  }
  rep.moment_bound = event_constant * domain.volume() * max_moment;
  rep.in_E = rep.projection_stats < gamma && rep.xi_r_norm < rep.moment_bound;

  rep.L = std::max(1, static_cast<int>(std::llround(std::pow(eps, -rho))));
  std::vector<double> neg_centered(centered.size());
  for (std::size_t i = 0; i < centered.size(); ++i) neg_centered[i] = -centered[i];
  auto blocked = block_average(lattice.sites(), neg_centered, d, rep.L);
  rep.blocked_norm = scaled_norm(blocked.values, eps, d, r);
  rep.in_F = rep.blocked_norm < gamma;
  return rep;
}

}  // namespace anderson
