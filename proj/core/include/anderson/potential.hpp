#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "anderson/lattice.hpp"

namespace anderson {

enum class PotentialFamily {
  Uniform,         // uniform on [-a, a], optionally shifted/scaled to (U, V)
  Gaussian,        // centered normal, optionally shifted/scaled to (U, V)
  ParetoSymmetric, // P(|xi| > r) = r^-K for r >= 1, sign by a fair bit
  ParetoNegative,  // P(xi <= -r) = r^-K for r >= 1
};

/// Distribution of the i.i.d. potential field. For the uniform and Gaussian
/// families a mean profile U and variance profile V may be attached; the
/// Pareto families are fixed laws (their profiles are implied by the tail
/// index) and reject user profiles.
struct PotentialModel {
  PotentialFamily family = PotentialFamily::Uniform;
  double uniform_halfwidth = 1.0;  // a, Uniform only
  double tail_index = std::numeric_limits<double>::infinity();  // K, Pareto only
  Profile mean_profile;      // null => 0 (Uniform/Gaussian)
  Profile variance_profile;  // null => native variance

  void validate() const;

  /// Finite moment order: sup{r : E|xi|^r < inf}. +inf for Uniform/Gaussian.
  double moment_index() const;

  /// Largest value any draw can take in magnitude before shift/scale;
  /// +inf for unbounded families. Used to detect truncation no-ops.
  double native_support_bound() const;

  /// Closed-form E|xi(x)|^r at the embedded position pos. For a nonzero mean
  /// shift the Minkowski bound ((E|centered|^r)^{1/r} + |U|)^r is returned.
  double abs_moment(double r, std::span<const double> pos) const;
};

/// One realization of the field on a lattice, tagged with its seed.
struct PotentialSample {
  std::vector<double> values;
  std::uint64_t seed = 0;
  double eps = 0;
  bool truncated = false;
  std::optional<double> kappa;
  bool truncation_changed = false;  // set by truncate()
};

/// Draw the field. Each site's stream is keyed by (seed, site index), so the
/// result is a pure function of (model, lattice, seed) independent of
/// evaluation order.
PotentialSample sample_potential(const PotentialModel& model,
                                 const LatticeDomain& lattice, std::uint64_t seed);

/// Zero out entries with |xi(x)| > eps^-kappa.
PotentialSample truncate(const PotentialSample& sample, double kappa);

enum class WindowMode { Homogenization, Clt };

/// Midpoint of the truncation-exponent window: (d/K, d ^ 2) for
/// homogenization, (d/K, 2 ^ d/2) for the CLT. Throws EmptyWindow when the
/// moment assumption fails.
double choose_kappa(double K, int d, WindowMode mode);

/// Midpoint of (1 v d/2, d/kappa).
double choose_r(int d, double kappa);

struct EventReport {
  double projection_stats = 0;  // max_j |<xi - U(e.), phi_j(e.)^2>_{e,2}|
  double xi_r_norm = 0;         // ||xi||_{e,r}
  double blocked_norm = 0;      // ||(U(e.) - xi)_L||_{e,r}
  int L = 1;
  bool in_E = false;
  bool in_F = false;
  double moment_bound = 0;      // c * |D| * max_x E|xi(x)|^r
};

/// Diagnostics for the good events: in_E iff projection_stats < gamma and
/// ||xi||_{e,r} < event_constant * |D| * max_x E|xi(x)|^r; in_F iff the
/// block-averaged norm at scale L = round(eps^-rho) is below gamma.
EventReport event_diagnostics(const PotentialSample& sample,
                              const LatticeDomain& lattice,
                              const ContinuumDomain& domain,
                              const PotentialModel& model,
                              const std::vector<Profile>& continuum_eigfns,
                              const Profile& U, double gamma, double r, double rho,
                              double event_constant = 4.0);

}  // namespace anderson
