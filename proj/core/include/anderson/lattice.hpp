#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace anderson {

/// A continuum domain D ⊂ R^d. Only convex shapes (boxes and balls) are
/// supported; for these the lattice containment test is exact.
struct ContinuumDomain {
  enum class Kind { Box, Ball };

  Kind kind = Kind::Box;
  int dim = 1;
  // Box: per-axis open intervals (lo, hi).
  std::vector<std::pair<double, double>> intervals;
  // Ball: center and radius.
  std::vector<double> center;
  double radius = 0.0;

  static ContinuumDomain box(std::vector<std::pair<double, double>> intervals);
  static ContinuumDomain unit_box(int d);
  static ContinuumDomain ball(std::vector<double> center, double radius);

  /// Membership in the open set D.
  bool contains(std::span<const double> point) const;
  double volume() const;
};

using Profile = std::function<double(std::span<const double>)>;

inline Profile constant_profile(double c) {
  return [c](std::span<const double>) { return c; };
}

/// The site set D_eps = {x in Z^d : dist_inf(eps*x, D^c) > eps}, stored in
/// lexicographic order. Immutable after construction.
class LatticeDomain {
 public:
  LatticeDomain(double eps, int dim, std::vector<std::vector<int>> sites);

  double eps() const { return eps_; }
  int dim() const { return dim_; }
  int size() const { return static_cast<int>(sites_.size()); }
  const std::vector<std::vector<int>>& sites() const { return sites_; }
  const std::vector<int>& site(int i) const { return sites_[i]; }

  /// Index of a site, or -1 when the site is outside D_eps.
  int index_of(const std::vector<int>& site) const;

  /// eps * site, the embedded position in D.
  std::vector<double> position(int i) const;

  /// Neighbor index in direction +-e_axis, or -1 (zero exterior).
  int neighbor(int i, int axis, int dir) const;

  /// True when d == 1 and the sites form a contiguous integer range.
  bool is_contiguous_path() const;

  /// Order-independent content hash, used to tag dumped samples.
  std::uint64_t content_hash() const;

  /// A d=1 lattice of n consecutive sites (1..n) at spacing eps. Handy for
  /// small closed-form test instances.
  static LatticeDomain path(int n_sites, double eps);

 private:
  double eps_;
  int dim_;
  std::vector<std::vector<int>> sites_;
  std::unordered_map<std::uint64_t, int> index_;

  static std::uint64_t pack(const std::vector<int>& site);
};

/// Discretize per the corner test: the closed linf-ball of radius eps around
/// eps*x must lie inside D, checked at the 2^d corners (exact for convex D).
LatticeDomain discretize(const ContinuumDomain& domain, double eps);

/// (eps^d sum |f|^p)^{1/p}; p = infinity gives max|f|.
double scaled_norm(std::span<const double> f, double eps, int dim, double p);

/// eps^d sum f g. Throws on length mismatch.
double scaled_inner(std::span<const double> f, std::span<const double> g, double eps,
                    int dim);

/// Block averaging over B_L(y) = L*y + {0,...,L-1}^d with zero extension.
/// The result covers the union of all blocks meeting the input support.
struct BlockAveraged {
  std::vector<std::vector<int>> sites;  // lexicographic
  std::vector<double> values;
};
BlockAveraged block_average(const std::vector<std::vector<int>>& sites,
                            std::span<const double> values, int dim, int L);

/// Sample a continuum function at the embedded lattice points eps*x.
std::vector<double> sample_profile(const Profile& fn, const LatticeDomain& lattice);

}  // namespace anderson
