#include <doctest.h>

#include <cmath>
#include <vector>

#include "osgrf/errors.hpp"
#include "osgrf/rng.hpp"
#include "osgrf/stats.hpp"

using namespace osgrf;

TEST_SUITE("stats") {

TEST_CASE("normal cdf")
{
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316301).epsilon(1e-10));
}

TEST_CASE("moments")
{
    const std::vector<double> x{1, 2, 3, 4, 10};
    const auto m = sample_moments(x);
    CHECK(m.mean == doctest::Approx(4.0));
    CHECK(m.sd == doctest::Approx(std::sqrt(12.5)));
    CHECK(m.skewness > 0.0);
}

TEST_CASE("jackknife of a mean is the usual standard error")
{
    const std::vector<double> y{0.3, 1.2, -0.4, 2.2, 0.9, 1.1};
    const auto j = jackknife_mean(y);
    const auto m = sample_moments(y);
    CHECK(j.value == doctest::Approx(m.mean));
    CHECK(j.se == doctest::Approx(m.sd / std::sqrt(6.0)).epsilon(1e-12));
}

TEST_CASE("KS accepts normal and rejects uniform samples")
{
    Stream s(12);
    std::vector<double> z, u;
    for (int i = 0; i < 1000; ++i) {
        z.push_back(s.normal_pair().first);
        u.push_back(s.uniform());
    }
    const auto g = gaussianity_test(z);
    CHECK(g.pass);
    CHECK(g.ks_critical == doctest::Approx(1.6276 / std::sqrt(1000.0)));
    std::vector<double> e;
    for (double x : u) e.push_back(-std::log(x));
    CHECK_FALSE(gaussianity_test(e).pass);
    CHECK_THROWS_AS(gaussianity_test(std::vector<double>(50, 1.0)), DomainError);
    const auto deg = gaussianity_test(std::vector<double>(200, 1.0));
    CHECK(deg.degenerate);
    CHECK_FALSE(deg.pass);
}

}
