#include "osgrf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "osgrf/errors.hpp"

namespace osgrf {

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

Moments sample_moments(std::span<const double> x)
{
    Moments m;
    const auto n = static_cast<double>(x.size());
    if (x.empty()) return m;
    double s = 0.0;
    for (double v : x) s += v;
    m.mean = s / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double e = v - m.mean;
        m2 += e * e;
        m3 += e * e * e;
        m4 += e * e * e * e;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.sd = x.size() > 1 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

JackknifeMean jackknife_mean(std::span<const double> y)
{
    JackknifeMean out;
    const std::size_t n = y.size();
    if (n == 0) return out;
    double total = 0.0;
    for (double v : y) total += v;
    out.value = total / static_cast<double>(n);
    if (n < 2) return out;
    const double nm1 = static_cast<double>(n - 1);
    double mean_loo = 0.0;
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = (total - y[i]) / nm1;
        mean_loo += loo[i];
    }
    mean_loo /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
    out.se = std::sqrt(ss * nm1 / static_cast<double>(n));
    return out;
}

GaussianityResult gaussianity_test(std::span<const double> samples)
{
    if (samples.size() < 100) throw DomainError("gaussianity_test needs at least 100 samples");
    GaussianityResult r;
    r.n = samples.size();
    r.ks_critical = 1.6276 / std::sqrt(static_cast<double>(r.n));
    const Moments m = sample_moments(samples);
    if (!(m.sd > 0.0) || !std::isfinite(m.sd)) {
        r.degenerate = true;
        return r;
    }
    r.skewness = m.skewness;
    r.excess_kurtosis = m.excess_kurtosis;
    std::vector<double> z(samples.begin(), samples.end());
    for (auto& v : z) v = (v - m.mean) / m.sd;
    std::sort(z.begin(), z.end());
    const auto n = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double F = normal_cdf(z[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    r.ks_distance = d;
    r.pass = d < r.ks_critical;
    return r;
}

} // namespace osgrf
