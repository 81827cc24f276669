#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace osgrf {

double normal_cdf(double x);

struct Moments {
    double mean = 0.0;
    double sd = 0.0; // divisor n - 1
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

Moments sample_moments(std::span<const double> x);

// Leave-one-out jackknife of the mean of y (value and standard error).
struct JackknifeMean {
    double value = 0.0;
    double se = 0.0;
};

JackknifeMean jackknife_mean(std::span<const double> y);

struct GaussianityResult {
    std::size_t n = 0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks_distance = 0.0;
    double ks_critical = 0.0; // two-sided 1% level, 1.6276 / sqrt(n)
    bool degenerate = false;
    bool pass = false;
};

// Standardizes by the sample mean and SD, then runs Kolmogorov-Smirnov
// against N(0,1). Needs at least 100 samples (DomainError otherwise).
GaussianityResult gaussianity_test(std::span<const double> samples);

} // namespace osgrf
