#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace anderson {

double normal_cdf(double x);       // standard normal
double normal_quantile(double p);  // inverse of normal_cdf, p in (0, 1)

/// Asymptotic Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{j-1}
/// exp(-2 j^2 lambda^2), with the Stephens small-sample correction.
double ks_p_value(double d_stat, std::size_t n);

struct KsResult {
  double stat = 0;
  double p_value = 0;
};

/// One-sample KS test against Normal(0, sigma2).
KsResult ks_test_normal(std::span<const double> samples, double sigma2);

struct MomentStats {
  double mean = 0;
  double variance = 0;  // unbiased
  double skewness = 0;
  double excess_kurtosis = 0;
};
MomentStats moment_stats(std::span<const double> samples);

/// Unbiased sample covariance of equal-length series (rows = samples).
Eigen::MatrixXd sample_covariance(const std::vector<std::vector<double>>& series);

double median(std::vector<double> v);
double interquartile_range(std::vector<double> v);

}  // namespace anderson
