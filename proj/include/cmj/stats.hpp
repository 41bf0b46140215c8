#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cmj {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

struct Interval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t hits, std::size_t n, double z = 1.959963984540054);

struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
    int dof = 0;
};

// Pearson χ² against expected counts; dof = bins - 1 - fitted.
TestResult chi_square_test(std::span<const double> observed, std::span<const double> expected, int fitted = 0);

// Two-sample Kolmogorov-Smirnov, asymptotic p-value with Stephens' correction.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// linear interpolation between order statistics (type 7)
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

// least-squares slope of y on x
double ols_slope(std::span<const double> x, std::span<const double> y);

// sample covariance; se is that of the mean of centred products
MeanSe covariance(std::span<const double> x, std::span<const double> y);

}  // namespace cmj
