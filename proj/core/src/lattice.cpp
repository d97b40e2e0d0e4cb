#include "anderson/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "anderson/errors.hpp"
#include "anderson/rng.hpp"

namespace anderson {

ContinuumDomain ContinuumDomain::box(std::vector<std::pair<double, double>> intervals) {
  if (intervals.empty()) throw std::invalid_argument("box: need at least one interval");
  for (const auto& [lo, hi] : intervals) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("box: intervals must be nonempty and finite");
  }
  ContinuumDomain d;
  d.kind = Kind::Box;
  d.dim = static_cast<int>(intervals.size());
  d.intervals = std::move(intervals);
  return d;
}

ContinuumDomain ContinuumDomain::unit_box(int dim) {
  return box(std::vector<std::pair<double, double>>(dim, {0.0, 1.0}));
}

ContinuumDomain ContinuumDomain::ball(std::vector<double> center, double radius) {
  if (center.empty()) throw std::invalid_argument("ball: need a center");
  if (!(radius > 0)) throw std::invalid_argument("ball: radius must be positive");
  ContinuumDomain d;
  d.kind = Kind::Ball;
  d.dim = static_cast<int>(center.size());
  d.center = std::move(center);
  d.radius = radius;
  return d;
}

bool ContinuumDomain::contains(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != dim)
    throw std::invalid_argument("contains: dimension mismatch");
  if (kind == Kind::Box) {
    for (int i = 0; i < dim; ++i)
      if (!(intervals[i].first < point[i] && point[i] < intervals[i].second)) return false;
    return true;
  }
  double s = 0;
  for (int i = 0; i < dim; ++i) {
    double t = point[i] - center[i];
    s += t * t;
  }
  return s < radius * radius;
}

double ContinuumDomain::volume() const {
  if (kind == Kind::Box) {
    double v = 1;
    for (const auto& [lo, hi] : intervals) v *= hi - lo;
    return v;
  }
  // Unit-ball volume pi^{d/2}/Gamma(d/2+1), scaled by radius^d.
  double unit = std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
  return unit * std::pow(radius, dim);
}

LatticeDomain::LatticeDomain(double eps, int dim, std::vector<std::vector<int>> sites)
    : eps_(eps), dim_(dim), sites_(std::move(sites)) {
  if (!(eps > 0)) throw std::invalid_argument("LatticeDomain: eps must be positive");
  if (dim < 1) throw std::invalid_argument("LatticeDomain: dim must be >= 1");
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  index_.reserve(sites_.size() * 2);
  for (int i = 0; i < static_cast<int>(sites_.size()); ++i) {
    if (static_cast<int>(sites_[i].size()) != dim)
      throw std::invalid_argument("LatticeDomain: site dimension mismatch");
    index_.emplace(pack(sites_[i]), i);
  }
}

std::uint64_t LatticeDomain::pack(const std::vector<int>& site) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (int c : site) h = mix_keys(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return h;
}

int LatticeDomain::index_of(const std::vector<int>& site) const {
  auto it = index_.find(pack(site));
  if (it == index_.end()) return -1;
  // Guard against hash collisions.
  if (sites_[it->second] != site) return -1;
  return it->second;
}

std::vector<double> LatticeDomain::position(int i) const {
  std::vector<double> p(dim_);
  for (int a = 0; a < dim_; ++a) p[a] = eps_ * sites_[i][a];
  return p;
}

int LatticeDomain::neighbor(int i, int axis, int dir) const {
  std::vector<int> s = sites_[i];
  s[axis] += dir;
  return index_of(s);
}

bool LatticeDomain::is_contiguous_path() const {
  if (dim_ != 1 || sites_.empty()) return false;
  return sites_.back()[0] - sites_.front()[0] + 1 == static_cast<int>(sites_.size());
}

std::uint64_t LatticeDomain::content_hash() const {
  std::uint64_t h = mix_keys(0x9d2c5680cafef00dULL, static_cast<std::uint64_t>(dim_));
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(eps_));
  std::memcpy(&bits, &eps_, sizeof(bits));
  h = mix_keys(h, bits);
  for (const auto& s : sites_) h = mix_keys(h, pack(s));
  return h;
}

LatticeDomain LatticeDomain::path(int n_sites, double eps) {
  if (n_sites < 1) throw std::invalid_argument("path: need at least one site");
  std::vector<std::vector<int>> sites;
  sites.reserve(n_sites);
  for (int i = 1; i <= n_sites; ++i) sites.push_back({i});
  return LatticeDomain(eps, 1, std::move(sites));
}

namespace {

// Bounding box of integer candidates per axis.
std::pair<std::vector<int>, std::vector<int>> candidate_box(const ContinuumDomain& d,
                                                            double eps) {
  std::vector<int> lo(d.dim), hi(d.dim);
  for (int a = 0; a < d.dim; ++a) {
    double l, h;
    if (d.kind == ContinuumDomain::Kind::Box) {
      l = d.intervals[a].first;
      h = d.intervals[a].second;
    } else {
      l = d.center[a] - d.radius;
      h = d.center[a] + d.radius;
    }
    lo[a] = static_cast<int>(std::floor(l / eps)) - 2;
    hi[a] = static_cast<int>(std::ceil(h / eps)) + 2;
  }
  return {lo, hi};
}

bool corners_inside(const ContinuumDomain& d, const std::vector<int>& site, double eps) {
  int n_corners = 1 << d.dim;
  std::vector<double> corner(d.dim);
  for (int m = 0; m < n_corners; ++m) {
    for (int a = 0; a < d.dim; ++a)
      corner[a] = eps * site[a] + ((m >> a) & 1 ? eps : -eps);
    if (!d.contains(corner)) return false;
  }
  return true;
}

}  // namespace

LatticeDomain discretize(const ContinuumDomain& domain, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("discretize: eps must be positive");
  if (domain.kind != ContinuumDomain::Kind::Box &&
      domain.kind != ContinuumDomain::Kind::Ball)
    throw UnsupportedDomain("discretize: only box and ball domains are supported");

  auto [lo, hi] = candidate_box(domain, eps);
  std::vector<std::vector<int>> sites;
  std::vector<int> cur(lo);
  while (true) {
    if (corners_inside(domain, cur, eps)) sites.push_back(cur);
    int a = domain.dim - 1;
    while (a >= 0) {
      if (++cur[a] <= hi[a]) break;
      cur[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
  if (sites.empty())
    throw EmptyLattice("discretize: no lattice site qualifies at eps=" + std::to_string(eps));
  return LatticeDomain(eps, domain.dim, std::move(sites));
}

double scaled_norm(std::span<const double> f, double eps, int dim, double p) {
  if (!(eps > 0)) throw std::invalid_argument("scaled_norm: eps must be positive");
  if (dim < 1) throw std::invalid_argument("scaled_norm: dim must be >= 1");
  if (std::isinf(p)) {
    double m = 0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1)) throw std::invalid_argument("scaled_norm: p must be >= 1");
  double s = 0;
  for (double v : f) s += std::pow(std::abs(v), p);
  return std::pow(std::pow(eps, dim) * s, 1.0 / p);
}

double scaled_inner(std::span<const double> f, std::span<const double> g, double eps,
                    int dim) {
  if (f.size() != g.size())
    throw std::invalid_argument("scaled_inner: mismatched lattices");
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return std::pow(eps, dim) * s;
}

BlockAveraged block_average(const std::vector<std::vector<int>>& sites,
                            std::span<const double> values, int dim, int L) {
  if (L <= 0) throw std::invalid_argument("block_average: L must be positive");
  if (sites.size() != values.size())
    throw std::invalid_argument("block_average: sites/values length mismatch");

  auto fdiv = [](int x, int L) { return x >= 0 ? x / L : -((-x + L - 1) / L); };

  std::map<std::vector<int>, double> block_sum;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::vector<int> b(dim);
    for (int a = 0; a < dim; ++a) b[a] = fdiv(sites[i][a], L);
    block_sum[b] += values[i];
  }

  double cells = std::pow(static_cast<double>(L), dim);
  BlockAveraged out;
  for (const auto& [b, sum] : block_sum) {
    double mean = sum / cells;
    // Enumerate all L^d cells of the block, lexicographically.
    std::vector<int> off(dim, 0);
    while (true) {
      std::vector<int> cell(dim);
      for (int a = 0; a < dim; ++a) cell[a] = b[a] * L + off[a];
      out.sites.push_back(std::move(cell));
      out.values.push_back(mean);
      int a = dim - 1;
      while (a >= 0) {
        if (++off[a] < L) break;
        off[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  // Blocks came from an ordered map but cells within blocks of negative
  // coordinate interleave; sort jointly.
  std::vector<std::size_t> order(out.sites.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return out.sites[i] < out.sites[j];
  });
  BlockAveraged sorted;
  sorted.sites.reserve(order.size());
  sorted.values.reserve(order.size());
  for (std::size_t i : order) {
    sorted.sites.push_back(std::move(out.sites[i]));
    sorted.values.push_back(out.values[i]);
  }
  return sorted;
}

std::vector<double> sample_profile(const Profile& fn, const LatticeDomain& lattice) {
  std::vector<double> out(lattice.size());
  for (int i = 0; i < lattice.size(); ++i) {
    auto p = lattice.position(i);
    out[i] = fn(p);
  }
  return out;
}

}  // namespace anderson
