#include "anderson/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace anderson {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1))
    throw std::invalid_argument("normal_quantile: p must be in (0, 1)");
  // Acklam's rational approximation, then one Halley step for full precision.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double ks_p_value(double d_stat, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d_stat;
  if (lambda < 0.2) return 1.0;
  double sum = 0;
  double sign = 1;
  for (int j = 1; j <= 100; ++j) {
    double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::span<const double> samples, double sigma2) {
  if (samples.size() < 2) throw std::invalid_argument("ks_test_normal: need >= 2 samples");
  if (!(sigma2 > 0)) throw std::invalid_argument("ks_test_normal: sigma2 must be > 0");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double n = static_cast<double>(sorted.size());
  double sigma = std::sqrt(sigma2);
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double F = normal_cdf(sorted[i] / sigma);
    d = std::max(d, std::max((i + 1) / n - F, F - i / n));
  }
  return {d, ks_p_value(d, sorted.size())};
}

MomentStats moment_stats(std::span<const double> samples) {
  std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("moment_stats: need >= 2 samples");
  MomentStats s;
  for (double x : samples) s.mean += x;
  s.mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : samples) {
    double c = x - s.mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  s.variance = m2 / (n - 1);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0) throw std::invalid_argument("moment_stats: degenerate (zero variance)");
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

Eigen::MatrixXd sample_covariance(const std::vector<std::vector<double>>& series) {
  if (series.empty()) throw std::invalid_argument("sample_covariance: no series");
  std::size_t n = series[0].size();
  if (n < 2) throw std::invalid_argument("sample_covariance: need >= 2 samples");
  for (const auto& s : series)
    if (s.size() != n) throw std::invalid_argument("sample_covariance: length mismatch");
  int m = static_cast<int>(series.size());
  Eigen::VectorXd mean(m);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (double x : series[i]) s += x;
    mean[i] = s / n;
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t t = 0; t < n; ++t)
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j)
        C(i, j) += (series[i][t] - mean[i]) * (series[j][t] - mean[j]);
  C /= static_cast<double>(n - 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) C(i, j) = C(j, i);
  return C;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

double interquartile_range(std::vector<double> v) {
  if (v.size() < 4) throw std::invalid_argument("interquartile_range: need >= 4 samples");
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    double pos = q * (v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - lo;
    return lo + 1 < v.size() ? v[lo] * (1 - frac) + v[lo + 1] * frac : v[lo];
  };
  return quantile(0.75) - quantile(0.25);
}

}  // namespace anderson
