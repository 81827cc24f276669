#include <doctest.h>

#include <cmath>

#include "osgrf/config.hpp"
#include "osgrf/errors.hpp"
#include "osgrf/montecarlo.hpp"

using namespace osgrf;

namespace {
ExperimentPlan small_plan()
{
    ExperimentPlan p;
    p.model = SpectralModel::product_pareto({0.3}, 0.5);
    p.alpha_primes = {0.3};
    p.n_schedule = {256, 512};
    p.units = ScheduleUnits::Window;
    p.replicas = 40;
    p.t_grid = {{0.5}};
    p.seed = 9;
    p.gaussianity = false;
    return p;
}
}

TEST_SUITE("montecarlo") {

TEST_CASE("plan validation")
{
    auto p = small_plan();
    CHECK_NOTHROW(p.validate());
    p.n_schedule = {512, 256};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = small_plan();
    p.t_grid = {{1.5}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = small_plan();
    p.alpha_primes = {0.3, 0.3};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = small_plan();
    p.prelimit = false;
    p.z_target = ZTarget::Prelimit;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(schedule_units_from_string("window") == ScheduleUnits::Window);
    CHECK_THROWS_AS(schedule_units_from_string("cells"), ConfigError);
}

TEST_CASE("invalid regimes are rejected")
{
    auto p = small_plan();
    p.model = SpectralModel::product_pareto({0.6}, 0.5);
    p.alpha_primes = {0.6};
    CHECK_THROWS_AS(run_invariance_experiment(p), ConfigError);
}

TEST_CASE("reports do not depend on the worker count")
{
    auto p = small_plan();
    const auto a = run_invariance_experiment(p);
    p.workers = 3;
    const auto b = run_invariance_experiment(p);
    CHECK(to_json(a).dump() == to_json(b).dump());
    REQUIRE(a.scales.size() == 2);
    CHECK(a.scales[0].extents == std::vector<std::int64_t>{256});
    CHECK(a.scales[1].buffer_depth == std::int64_t{1} << 24);
    // the all-ones point is added
    CHECK(a.t_grid.size() == 2);
    for (const auto& e : a.scales[1].entries) {
        CHECK(e.se > 0.0);
        CHECK(e.z == doctest::Approx((e.empirical - e.target) / e.se));
        REQUIRE(e.prelimit.has_value());
    }
}

TEST_CASE("scale units give ceil(n^{1/alpha'}) windows")
{
    auto p = small_plan();
    p.units = ScheduleUnits::Scale;
    p.n_schedule = {8.0};
    p.replicas = 4;
    p.prelimit = false;
    const auto r = run_invariance_experiment(p);
    CHECK(r.scales[0].extents[0] == 1024); // 8^{10/3} = 2^10 exactly
    CHECK(r.scales[0].normalization == doctest::Approx(std::pow(8.0, 1.0 + 1.0 / 0.6)));
}

TEST_CASE("z-score convention")
{
    CHECK(z_score(1.0, 1.0, 0.0) == 0.0);
    CHECK(z_score(2.0, 1.0, 0.5) == 2.0);
    CHECK(std::isinf(z_score(2.0, 1.0, 0.0)));
}

TEST_CASE("sum of squares sources")
{
    CHECK(exact_sum_sq(SpectralModel::product_pareto({0.3}, 0.5)).source.find("spectral") != std::string::npos);
    const auto atom = SpectralModel::custom({0.3}, {}, {PmfEntry{{1, 0, 0, 0}, 1.0}}, 0.5);
    CHECK(std::isinf(exact_sum_sq(atom).value));
}

TEST_CASE("identities: single atom is degenerate")
{
    const auto atom = SpectralModel::custom({0.3}, {}, {PmfEntry{{1, 0, 0, 0}, 1.0}}, 0.5);
    IdentityConfig c;
    c.replicas = 20;
    c.K = 8;
    const auto r = verify_identities(atom, c);
    CHECK(r.degenerate);
    CHECK(r.var_xstar.value == 0.0);
    CHECK(r.z_var_xstar == 0.0);
    for (const auto& m : r.meetings) {
        CHECK(m.estimate == 1.0);
        CHECK(m.exact == 1.0);
    }
}

TEST_CASE("identities at small replica counts")
{
    IdentityConfig c;
    c.replicas = 600;
    c.seed = 3;
    const auto r = verify_identities(SpectralModel::product_pareto({0.3}, 0.5), c);
    CHECK(r.target_var_xstar == doctest::Approx(1.0 / 1.15120077).epsilon(1e-7));
    CHECK(std::abs(r.z_var_xstar) < 4.0);
    for (const auto& m : r.meetings) CHECK(std::abs(m.z) < 4.0);
}

}
