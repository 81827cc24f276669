#include <doctest.h>

#include <set>

#include "osgrf/rng.hpp"

using namespace osgrf;

TEST_SUITE("rng") {

TEST_CASE("splitmix finalizer reference values")
{
    // splitmix64 output for state 0x9e3779b97f4a7c15 is the finalizer of that value
    CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(0) == 0);
}

TEST_CASE("streams are pure functions of key and counter")
{
    Stream a(42, StreamDomain::Step), b(42, StreamDomain::Step);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Stream c(42, StreamDomain::Sign);
    Stream d(42, StreamDomain::Step);
    CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform lies in (0,1]")
{
    CHECK(to_unit_open0(0) > 0.0);
    CHECK(to_unit_open0(~std::uint64_t{0}) == 1.0);
    Stream s(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal pairs have unit variance")
{
    Stream s(11);
    double m = 0.0, v = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        auto [x, y] = s.normal_pair();
        m += x + y;
        v += x * x + y * y;
    }
    m /= 2 * n;
    v /= 2 * n;
    CHECK(std::abs(m) < 4.0 / std::sqrt(2.0 * n));
    CHECK(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / (2 * n)));
}

TEST_CASE("point keys are distinct over a small box")
{
    std::set<std::uint64_t> keys;
    for (int i = -10; i < 10; ++i) {
        for (int j = -10; j < 10; ++j) keys.insert(derive_point(5, LatticePoint{i, j, 0, 0}));
    }
    CHECK(keys.size() == 400);
}

}
