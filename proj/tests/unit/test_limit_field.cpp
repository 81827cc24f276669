#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "osgrf/errors.hpp"
#include "osgrf/limit_field.hpp"
#include "osgrf/montecarlo.hpp"
#include "osgrf/rng.hpp"

using namespace osgrf;

namespace {
struct Setup {
    RegimeReport rep;
    SpectralModel model;
    double s2;
};

Setup setup(std::vector<double> a, std::vector<double> ap, double s2 = 1.0)
{
    return {classify(a, ap), SpectralModel::product_pareto(a, 0.5), s2};
}
}

TEST_SUITE("limit_field") {

TEST_CASE("C_H")
{
    CHECK(C_H(0.5) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-14));
    CHECK_THROWS_AS(C_H(1.0), DomainError);
    CHECK_THROWS_AS(C_H(0.0), DomainError);
    CHECK(C_H(0.999) > 100.0);
    for (double H : {0.55, 0.8, 0.95}) {
        for (double t : {0.5, 1.0}) {
            const auto q = fbm_spectral_integral(H, t);
            CHECK(q.value == doctest::Approx(C_H(H) * std::pow(t, 2 * H)).epsilon(1e-6));
        }
    }
    CHECK(fbm_cov(0.7, 1.0, 0.5) == doctest::Approx(0.5 * (1 + std::pow(0.5, 1.4) - std::pow(0.5, 1.4))));
}

TEST_CASE("zero boxes and symmetry")
{
    const auto s = setup({0.3}, {0.3});
    CHECK(cov_W(s.rep, s.model, 1.0, {0.0}, {1.0}).value == 0.0);
    const auto s2 = setup({0.7, 0.4}, {0.7, 0.6});
    CHECK(cov_W(s2.rep, s2.model, 1.0, {0.5, 0.0}, {1.0, 1.0}).value == 0.0);
    const LimitCovariance lc(s2.rep, s2.model, 1.0, {}, QueryScale::from_points({{0.3, 0.8}, {0.9, 0.2}}));
    CHECK(lc.cov({0.3, 0.8}, {0.9, 0.2}).value == doctest::Approx(lc.cov({0.9, 0.2}, {0.3, 0.8}).value).epsilon(1e-13));
    CHECK(lc.cov({0.3, 0.8}, {0.3, 0.8}).value > 0.0);
}

TEST_CASE("d = 1 critical closed form")
{
    const auto s = setup({0.3}, {0.3});
    const double lp = std::abs(s.model.log_psi(std::vector<double>{1.0}));
    const double expect = C_H(0.8) / (2 * std::numbers::pi) / (lp * lp);
    CHECK(cov_W(s.rep, s.model, 1.0, {1.0}, {1.0}).value == doctest::Approx(expect).epsilon(1e-4));
    CHECK(closed_form_cov(s.rep, s.model, 1.0, {1.0}, {1.0}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(closed_form_cov(s.rep, s.model, 1.0, {0.5}, {1.0}) == doctest::Approx(expect * fbm_cov(0.8, 0.5, 1.0)).epsilon(1e-12));
}

TEST_CASE("frozen limit values")
{
    // sigma_X^2 from the exact sum of squares
    const auto m = SpectralModel::product_pareto({0.3}, 0.5);
    const double s2 = 1.0 / 1.15120077;
    CHECK(cov_W(classify({0.3}, {0.3}), m, s2, {1.0}, {1.0}).value == doctest::Approx(0.613509).epsilon(1e-5));
    const auto c = setup({0.6, 0.6}, {0.6, 0.6});
    const LimitCovariance lc(c.rep, c.model, 1.0, {}, QueryScale::from_points({{1.0, 1.0}, {0.5, 1.0}, {1.0, 0.5}}));
    CHECK(lc.cov({1.0, 1.0}, {1.0, 1.0}).value == doctest::Approx(0.075196).epsilon(2e-4));
    CHECK(lc.cov({0.5, 1.0}, {1.0, 0.5}).value == doctest::Approx(0.017968).epsilon(5e-4));
}

TEST_CASE("sheet closed forms against quadrature")
{
    const auto s = setup({0.7, 0.4}, {0.7, 0.6});
    for (auto [t, u] : {std::pair{std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0}},
                        std::pair{std::vector<double>{0.5, 1.0}, std::vector<double>{1.0, 0.3}}}) {
        CHECK(cov_W(s.rep, s.model, 1.0, t, u).value == doctest::Approx(closed_form_cov(s.rep, s.model, 1.0, t, u)).epsilon(1e-3));
    }
    const auto g = setup({0.3, 0.6}, {0.3, 0.9});
    CHECK(cov_W(g.rep, g.model, 1.0, {1.0, 1.0}, {0.5, 0.7}).value ==
          doctest::Approx(closed_form_cov(g.rep, g.model, 1.0, {1.0, 1.0}, {0.5, 0.7})).epsilon(1e-3));
    const auto c = setup({0.6, 0.6}, {0.6, 0.6});
    CHECK_THROWS_AS(closed_form_cov(c.rep, c.model, 1.0, {1.0, 1.0}, {1.0, 1.0}), DomainError);
    // case (iii): product of fBm variances with H = (0.8, 0.5)
    const auto iii = setup({0.3, 0.6}, {0.3, 0.4});
    const double v = closed_form_cov(iii.rep, iii.model, 1.0, {1.0, 0.5}, {1.0, 0.5});
    const double one = closed_form_cov(iii.rep, iii.model, 1.0, {1.0, 1.0}, {1.0, 1.0});
    CHECK(v / one == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degenerate directions")
{
    const auto g = setup({0.3, 0.6}, {0.3, 0.9}); // axis 1 is I_>
    const LimitCovariance lc(g.rep, g.model, 1.0, {}, QueryScale::from_points({{0.7, 0.2}, {0.4, 0.4}, {0.4, 0.3}}));
    const double a = lc.cov({0.7, 0.2}, {0.4, 0.3}).value;
    const double b = lc.cov({0.7, 0.4}, {0.4, 0.3}).value;
    CHECK(b == doctest::Approx(2 * a).epsilon(1e-12));
    const auto l = setup({0.7, 0.4}, {0.7, 0.6}); // axis 0 is I_<
    const LimitCovariance ll(l.rep, l.model, 1.0, {}, QueryScale::from_points({{0.3, 0.5}, {0.8, 0.9}}));
    const double x = ll.cov({0.3, 0.5}, {0.8, 0.9}).value;
    const double y = ll.cov({0.3, 0.5}, {0.6, 0.9}).value;
    CHECK(x == doctest::Approx(y).epsilon(1e-12));
}

TEST_CASE("operator scaling")
{
    const auto s = setup({0.3}, {0.3});
    CHECK(operator_scaling_check(s.rep, s.model, 1.0, 1.0, {0.7}, {0.4}).residual < 1e-12);
    CHECK(operator_scaling_check(s.rep, s.model, 1.0, 2.0, {0.7}, {0.4}).residual < 1e-3);
    const auto i = setup({0.7, 0.4}, {0.7, 0.6});
    CHECK(operator_scaling_check(i.rep, i.model, 1.0, 0.5, {0.6, 0.9}, {0.3, 0.7}).residual < 1e-2);
}

TEST_CASE("increments")
{
    const auto s = setup({0.3}, {0.3});
    const double base = var_increment(s.rep, s.model, 1.0, 0, 0.25, {0.3}).value / std::pow(0.25, 1.6);
    for (double dlt : {0.125, 0.0625}) {
        CHECK(var_increment(s.rep, s.model, 1.0, 0, dlt, {0.3}).value / std::pow(dlt, 1.6) == doctest::Approx(base).epsilon(1e-3));
    }
    const auto g = setup({0.3, 0.6}, {0.3, 0.9});
    const double d2 = var_increment(g.rep, g.model, 1.0, 1, 0.2, {0.5, 0.1}).value;
    const double w = cov_W(g.rep, g.model, 1.0, {0.5, 1.0}, {0.5, 1.0}).value;
    CHECK(d2 == doctest::Approx(0.04 * w).epsilon(1e-6));
    const auto l = setup({0.7, 0.4}, {0.7, 0.6});
    const double d0 = var_increment(l.rep, l.model, 1.0, 0, 0.2, {0.1, 0.5}).value;
    const double w0 = cov_W(l.rep, l.model, 1.0, {1.0, 0.5}, {1.0, 0.5}).value;
    CHECK(d0 == doctest::Approx(0.2 * w0).epsilon(1e-6));
}

TEST_CASE("Gram matrices are positive semidefinite")
{
    const auto c = setup({0.6, 0.6}, {0.6, 0.6});
    Stream s(4);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 8; ++i) pts.push_back({0.05 + 0.95 * s.uniform(), 0.05 + 0.95 * s.uniform()});
        const LimitCovariance lc(c.rep, c.model, 1.0, {}, QueryScale::from_points(pts));
        const auto g = lc.gram(pts);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(g.data(), 8, 8);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * M.trace());
    }
}

TEST_CASE("three I_= axes use quasi Monte Carlo")
{
    const auto r = setup({0.6, 0.6, 0.6}, {0.6, 0.6, 0.6});
    const LimitCovariance lc(r.rep, r.model, 1.0, {}, QueryScale::from_points({{1.0, 1.0, 1.0}}));
    CHECK(lc.mode() == QuadratureMode::QuasiMonteCarlo);
    const auto v = lc.cov({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
    CHECK(v.value > 0.0);
    CHECK(v.error < 0.2 * v.value);
}

TEST_CASE("synthesis")
{
    const auto s = setup({0.3}, {0.3});
    const std::vector<std::vector<double>> grid{{0.0}, {0.5}, {1.0}};
    const auto a = synthesize_W(s.rep, s.model, 1.0, grid, {}, 7, 4);
    const auto b = synthesize_W(s.rep, s.model, 1.0, grid, {}, 7, 4, 2);
    CHECK(a.values == b.values);
    const auto c = synthesize_W(s.rep, s.model, 1.0, grid, {}, 8, 4);
    CHECK(c.values != a.values);
    for (std::size_t r = 0; r < 4; ++r) CHECK(a.values[r * 3] == 0.0);
    CHECK(a.grid_var[2] == doctest::Approx(a.target_var[2]).epsilon(1e-3));
    CHECK(a.warnings.empty());

    const auto i = setup({0.7, 0.4}, {0.7, 0.6});
    const SpectralSynthesizer syn(i.rep, i.model, 1.0);
    const double gv = syn.grid_cov({1.0, 1.0}, {0.5, 0.5});
    CHECK(gv == doctest::Approx(closed_form_cov(i.rep, i.model, 1.0, {1.0, 1.0}, {0.5, 0.5})).epsilon(0.01));
}

}
