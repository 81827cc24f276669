// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers
// and runtimes. Usage: osgrf_acceptance --cli <osgrf binary> --workdir <dir> [--only 1,4,9]

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "osgrf/config.hpp"
#include "osgrf/graph_field.hpp"
#include "osgrf/limit_field.hpp"
#include "osgrf/montecarlo.hpp"
#include "osgrf/qtable.hpp"
#include "osgrf/regime.hpp"
#include "osgrf/stats.hpp"

using namespace osgrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...)
{
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

fs::path g_cli;
fs::path g_work;

// 1. Sheet cases: classify against the closed forms, written out here independently.
Outcome regime_golden()
{
    double worst = 0.0, worst_crit = 0.0;
    int cases[4] = {0, 0, 0, 0};
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double a1 = (i + 0.5) / 20.0, a2 = (j + 0.5) / 20.0;
            for (int k = 0; k < 20; ++k) {
                const double a2p = 0.03 + 0.05 * k;
                double beta, h1, h2;
                int id;
                if (a2p > a2 && a2 < 0.5) {
                    id = 0;
                    beta = a2 / a2p + 0.5 * (1 / a1 + 1 / a2p);
                    h1 = 0.5;
                    h2 = 0.5 + a2;
                } else if (a2p > a2) {
                    id = 1;
                    beta = 1 + 1 / (2 * a1) + 1 / a2p - 1 / (2 * a2);
                    h1 = 0.5 + a1 * (1 - 1 / (2 * a2));
                    h2 = 1;
                } else if (a1 < 0.5) {
                    id = 2;
                    beta = 1 + 0.5 * (1 / a1 + 1 / a2p);
                    h1 = 0.5 + a1;
                    h2 = 0.5;
                } else {
                    id = 3;
                    beta = (a2 / a2p) * (1 - 1 / (2 * a1)) + 1 / a1 + 1 / (2 * a2p);
                    h1 = 1;
                    h2 = 0.5 + a2 * (1 - 1 / (2 * a1));
                }
                ++cases[id];
                const auto r = classify({a1, a2}, {a1, a2p});
                if (!r.valid || !r.hurst) return {false, fmt("invalid report at (%g,%g,%g)", a1, a2, a2p)};
                const auto sc = sheet_case(a1, a2, a2p);
                if (static_cast<int>(sc.case_id) != id) return {false, fmt("case mismatch at (%g,%g,%g)", a1, a2, a2p)};
                for (double diff : {r.H - beta, (*r.hurst)[0] - h1, (*r.hurst)[1] - h2, sc.beta - beta, sc.H1 - h1, sc.H2 - h2}) {
                    worst = std::max(worst, std::abs(diff));
                }
            }
            const auto c = classify({a1, a2}, {a1, a2});
            worst_crit = std::max(worst_crit, std::abs(c.H - (1 + (1 / a1 + 1 / a2) / 2)));
        }
    }
    const bool pass = worst <= 1e-12 && worst_crit <= 1e-12 && cases[0] && cases[1] && cases[2] && cases[3];
    return {pass, fmt("8000 points (cases %d/%d/%d/%d), max |diff| %.2e, critical max |H - 1 - q(E)/2| %.2e", cases[0],
                      cases[1], cases[2], cases[3], worst, worst_crit)};
}

// 2. gamma0 defining sums on random draws.
Outcome gamma0_property()
{
    Stream s(0x6a30);
    int n = 0, bad = 0;
    while (n < 10000) {
        const int d = 1 + static_cast<int>(s.next_u64() % 4);
        std::vector<double> a(d), ap(d);
        double q = 0.0;
        for (int k = 0; k < d; ++k) {
            a[k] = 0.01 + 0.98 * s.uniform();
            ap[k] = 0.01 + 2.0 * s.uniform();
            q += 1 / a[k];
        }
        if (q <= 2.0 || (d == 1 && a[0] >= 0.5)) continue;
        ++n;
        const auto r = classify(a, ap);
        double geq = 0.0, gt = 0.0;
        int ngt = 0, neq = 0;
        for (int k = 0; k < d; ++k) {
            if (r.gamma0 >= r.rhos[k]) geq += 1 / a[k];
            if (r.gamma0 > r.rhos[k]) gt += 1 / a[k];
            ngt += r.partition[k] == AxisClass::Greater;
            neq += r.partition[k] == AxisClass::Equal;
        }
        if (!(geq > 2.0) || !(gt <= 2.0) || ngt > 1 || neq < 1) ++bad;
    }
    return {bad == 0, fmt("%d draws, %d violations", n, bad)};
}

// 3. Parseval.
Outcome parseval()
{
    const auto m1 = SpectralModel::product_pareto({0.3}, 0.5);
    const auto p1 = parseval_check(m1, build_qtable(m1, 1 << 14));
    const auto m2 = SpectralModel::product_pareto({0.6, 0.6}, 0.5);
    const auto p2 = parseval_check(m2, build_qtable(m2, 256));
    return {p1.discrepancy < 0.02 && p2.discrepancy < 0.05,
            fmt("d=1: %.3e (< 2e-2), d=2: %.3e (< 5e-2)", p1.discrepancy, p2.discrepancy)};
}

IdentityReport identities(std::size_t replicas)
{
    IdentityConfig c;
    c.replicas = replicas;
    c.seed = 4;
    return verify_identities(SpectralModel::product_pareto({0.3}, 0.5), c);
}

// 4. Var(X*_0) against 1 / sum q^2.
Outcome var_xstar()
{
    const auto r = identities(10000);
    return {std::abs(r.z_var_xstar) < 3.0,
            fmt("MC %.5f +- %.5f, target %.5f, z = %.2f (|z| < 3), truncation bound %.1e", r.var_xstar.value,
                r.var_xstar.se, r.target_var_xstar, r.z_var_xstar, r.var_xstar.truncation_bound)};
}

// 5. Meeting probabilities.
Outcome meetings()
{
    const auto r = identities(10000);
    bool ok = true;
    std::string s;
    for (const auto& m : r.meetings) {
        ok = ok && std::abs(m.z) < 3.0;
        s += fmt("m=%lld: %.4f +- %.4f vs %.4f (z %.2f); ", static_cast<long long>(m.offset[0]), m.estimate, m.se,
                 m.exact, m.z);
    }
    return {ok, s + "|z| < 3"};
}

// 6. C_H identity.
Outcome c_h_identity()
{
    double worst = 0.0;
    for (double H : {0.55, 0.8, 0.95}) {
        for (double t : {0.5, 1.0}) {
            const auto q = fbm_spectral_integral(H, t);
            worst = std::max(worst, std::abs(q.value / (C_H(H) * std::pow(t, 2 * H)) - 1));
        }
    }
    return {worst < 1e-6, fmt("max rel %.2e (< 1e-6)", worst)};
}

// 7. Closed forms against quadrature.
Outcome closed_forms()
{
    const auto m1 = SpectralModel::product_pareto({0.3}, 0.5);
    const auto r1 = classify({0.3}, {0.3});
    const double lp = std::abs(m1.log_psi(std::vector<double>{1.0}));
    const double closed1 = C_H(0.8) / (2 * std::numbers::pi) / (lp * lp);
    const double rel1 = std::abs(cov_W(r1, m1, 1.0, {1.0}, {1.0}).value / closed1 - 1);

    const auto m2 = SpectralModel::product_pareto({0.7, 0.4}, 0.5);
    const auto r2 = classify({0.7, 0.4}, {0.7, 0.6});
    const std::vector<std::pair<std::vector<double>, std::vector<double>>> pts{
        {{1, 1}, {1, 1}}, {{0.5, 1}, {1, 0.5}}, {{0.25, 0.75}, {0.6, 0.3}}, {{0.9, 0.2}, {0.9, 0.8}}, {{0.1, 0.1}, {1, 1}}};
    std::vector<std::vector<double>> flat;
    for (const auto& p : pts) {
        flat.push_back(p.first);
        flat.push_back(p.second);
    }
    const LimitCovariance lc(r2, m2, 1.0, {}, QueryScale::from_points(flat));
    double rel2 = 0.0;
    for (const auto& [t, s] : pts) {
        rel2 = std::max(rel2, std::abs(lc.cov(t, s).value / closed_form_cov(r2, m2, 1.0, t, s) - 1));
    }
    return {rel1 < 1e-3 && rel2 < 1e-2, fmt("d=1 critical rel %.2e (< 1e-3), d=2 case (i) max rel %.2e (< 1e-2)", rel1, rel2)};
}

// 8. Operator scaling.
Outcome operator_scaling()
{
    struct Case {
        const char* name;
        std::vector<double> a, ap, t, s;
    };
    const std::vector<Case> cases{{"d=1 critical", {0.3}, {0.3}, {0.7}, {0.4}},
                                  {"case (i)", {0.7, 0.4}, {0.7, 0.6}, {0.6, 0.9}, {0.3, 0.7}},
                                  {"case (ii)", {0.3, 0.6}, {0.3, 0.9}, {0.08, 0.5}, {0.05, 0.3}}};
    bool ok = true;
    std::string out;
    for (const auto& c : cases) {
        const auto m = SpectralModel::product_pareto(c.a, 0.5);
        const auto r = classify(c.a, c.ap);
        double worst = 0.0;
        for (double lam : {0.5, 2.0}) worst = std::max(worst, operator_scaling_check(r, m, 1.0, lam, c.t, c.s).residual);
        ok = ok && worst < 1e-2;
        out += fmt("%s %.2e; ", c.name, worst);
    }
    return {ok, out + "all < 1e-2"};
}

// 9. Invariance principle, d = 1, and the d = 2 substitute.
Outcome invariance_d1()
{
    ExperimentPlan p;
    p.model = SpectralModel::product_pareto({0.3}, 0.5);
    p.alpha_primes = {0.3};
    p.n_schedule = {4096, 8192, 16384};
    p.units = ScheduleUnits::Window;
    p.replicas = 200;
    p.t_grid = {{0.5}, {1.0}};
    p.seed = 1;
    p.gaussianity = false;
    const auto v = run_invariance_experiment(p);
    std::string s;
    for (const auto& sc : v.scales) s += fmt("n=%g ratio %.3f +- %.3f; ", sc.n, sc.var_ratio, sc.var_ratio_se);

    ExperimentPlan k = p;
    k.n_schedule = {16384};
    k.replicas = 500;
    k.seed = 2;
    k.gaussianity = true;
    k.prelimit = false;
    const auto g = run_invariance_experiment(k);
    const auto& gs = *g.scales.back().gaussianity;
    const bool ok = v.var_within_tolerance && v.trend_ok && gs.pass;
    return {ok, s + fmt("within 15%%: %s, trend: %s; KS (R=500) %.4f vs %.4f, skew %.3f, kurt %.3f",
                         v.var_within_tolerance ? "yes" : "no", v.trend_ok ? "yes" : "no", gs.ks_distance, gs.ks_critical,
                         gs.skewness, gs.excess_kurtosis)};
}

Outcome invariance_d2()
{
    ExperimentPlan p;
    p.model = SpectralModel::product_pareto({0.6, 0.6}, 0.5);
    p.alpha_primes = {0.6, 0.6};
    p.n_schedule = {64};
    p.units = ScheduleUnits::Window;
    p.replicas = 200;
    p.t_grid = {{0.5, 0.5}, {1.0, 0.5}, {0.5, 1.0}, {1.0, 1.0}};
    p.seed = 1;
    p.gaussianity = false;
    p.z_target = ZTarget::Prelimit;
    const auto v = run_invariance_experiment(p);
    const auto& sc = v.scales.back();
    double lim_ratio = 0.0;
    for (const auto& e : sc.entries) {
        if (e.a == e.b && e.a == 3) lim_ratio = *e.prelimit / e.target;
    }
    return {v.z_ok, fmt("max |z| vs exact n=64 covariance %.2f (< 4) over %zu entries; limit z max %.2f, "
                        "exact/limit variance at t=1 %.3f",
                        sc.max_abs_z_prelimit, sc.entries.size(), sc.max_abs_z, lim_ratio)};
}

// 10. Spectral synthesis against cov_W.
Outcome synthesis()
{
    const double disc_tol = 0.01; // stated discretization tolerance, relative
    struct Case {
        const char* name;
        std::vector<double> a, ap;
        std::vector<std::vector<double>> grid;
    };
    const std::vector<Case> cases{
        {"d=1 critical", {0.3}, {0.3}, {{0.2}, {0.4}, {0.6}, {0.8}, {1.0}}},
        {"d=2 case (i)", {0.7, 0.4}, {0.7, 0.6}, {{0.3, 0.3}, {0.5, 1.0}, {1.0, 0.5}, {0.7, 0.7}, {1.0, 1.0}}}};
    bool ok = true;
    std::string out;
    for (const auto& c : cases) {
        const auto m = SpectralModel::product_pareto(c.a, 0.5);
        const auto r = classify(c.a, c.ap);
        const double s2 = sigma_x2_from_sum_sq(exact_sum_sq(m).value, 0.5);
        const std::size_t R = 10000, np = c.grid.size();
        const auto res = synthesize_W(r, m, s2, c.grid, {}, 31, R);
        const LimitCovariance lc(r, m, s2, {}, QueryScale::from_points(c.grid));
        double worst_z = 0.0, worst_disc = 0.0;
        std::vector<double> y(R);
        for (std::size_t a = 0; a < np; ++a) {
            const std::size_t b = np - 1; // pair every point with t = 1
            for (std::size_t k = 0; k < R; ++k) y[k] = res.values[k * np + a] * res.values[k * np + b];
            const auto jm = jackknife_mean(y);
            const double target = lc.cov(c.grid[a], c.grid[b]).value;
            const double excess = std::abs(jm.value - target) - disc_tol * std::abs(target);
            worst_z = std::max(worst_z, excess / jm.se);
            SpectralSynthesizer syn(r, m, s2);
            worst_disc = std::max(worst_disc, std::abs(syn.grid_cov(c.grid[a], c.grid[b]) / target - 1));
        }
        const bool pass = worst_z < 3.0 && worst_disc <= disc_tol;
        ok = ok && pass;
        out += fmt("%s: max (|emp - cov_W| - tol)/SE %.2f (< 3), grid mismatch %.2e (<= %.0e); ", c.name, worst_z,
                   worst_disc, disc_tol);
    }
    return {ok, out};
}

// 11. Gram matrices are PSD.
Outcome psd()
{
    const auto m = SpectralModel::product_pareto({0.6, 0.6}, 0.5);
    const auto r = classify({0.6, 0.6}, {0.6, 0.6});
    Stream s(0x9a11);
    double worst = 1.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 8; ++i) pts.push_back({0.02 + 0.98 * s.uniform(), 0.02 + 0.98 * s.uniform()});
        const LimitCovariance lc(r, m, 1.0, {}, QueryScale::from_points(pts));
        const auto g = lc.gram(pts);
        Eigen::Map<const Eigen::Matrix<double, 8, 8, Eigen::RowMajor>> M(g.data());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(M);
        worst = std::min(worst, es.eigenvalues().minCoeff() / M.trace());
    }
    return {worst >= -1e-8, fmt("100 trials of 8 points, min eigenvalue / trace %.3e (>= -1e-8)", worst)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 12. verify through the CLI with 1 and 4 workers, twice.
Outcome determinism()
{
    if (g_cli.empty()) return {false, "no --cli given"};
    fs::create_directories(g_work);
    const fs::path cfg = g_work / "verify.json";
    std::ofstream(cfg) << R"({"seed": 20, "model": {"alphas": [0.3], "p": 0.5},
 "scaling": {"alpha_primes": [0.3], "n_schedule": [4096, 8192, 16384], "units": "window"},
 "verify": {"replicas": 200, "t_grid": [[0.5], [1.0]]}})";
    std::vector<std::string> reports;
    int k = 0;
    for (int workers : {1, 4, 1, 4}) {
        const fs::path out = g_work / ("run" + std::to_string(k++));
        fs::remove_all(out);
        const std::string cmd = g_cli.string() + " verify -c " + cfg.string() + " --workers " + std::to_string(workers) +
                                " -o " + out.string() + " > " + (out.string() + ".log") + " 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0 && WEXITSTATUS(rc) != 3) return {false, "verify failed: " + cmd};
        reports.push_back(slurp(out / "verdict.json") + slurp(out / "verify.csv"));
        if (reports.back().empty()) return {false, "no report written"};
    }
    const bool same = std::all_of(reports.begin(), reports.end(), [&](const std::string& r) { return r == reports[0]; });
    return {same, fmt("4 runs (workers 1,4,1,4): reports %s, %zu bytes", same ? "byte-identical" : "DIFFER", reports[0].size())};
}

} // namespace

int main(int argc, char** argv)
{
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    std::set<int> only;
    g_work = fs::temp_directory_path() / "osgrf_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc) g_cli = fs::absolute(argv[++i]);
        else if (a == "--workdir" && i + 1 < argc) g_work = fs::absolute(argv[++i]);
        else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else {
            std::fprintf(stderr, "usage: %s --cli <osgrf> [--workdir dir] [--only 1,2,...]\n", argv[0]);
            return 2;
        }
    }

    struct Criterion {
        int id;
        const char* title;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "regime golden table", 1, regime_golden},
        {2, "gamma0 defining property", 5, gamma0_property},
        {3, "Parseval identity", 120, parseval},
        {4, "Var(X*_0) = 1/sum q^2", 300, var_xstar},
        {5, "meeting probabilities", 300, meetings},
        {6, "C_H identity", 10, c_h_identity},
        {7, "closed forms vs quadrature", 120, closed_forms},
        {8, "operator scaling", 120, operator_scaling},
        {9, "invariance principle d=1", 1800, invariance_d1},
        {9, "invariance substitute d=2", 3600, invariance_d2},
        {10, "spectral synthesis", 600, synthesis},
        {11, "Gram matrices PSD", 300, psd},
        {12, "determinism across workers", 3600, determinism},
    };

    int failed = 0;
    double c9_seconds = 0.0; // criterion 12 may take at most twice criterion 9
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.id == 9) c9_seconds += dt;
        const double limit = c.id == 12 && c9_seconds > 0.0 ? 2.0 * c9_seconds : c.limit_s;
        const bool in_time = dt < limit;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("[%s] %2d %-28s %s (%.1fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                    dt, limit, in_time ? "" : ", TOO SLOW");
    }
    std::printf("%s: %d failing\n", failed ? "FAILED" : "ALL PASSED", failed);
    return failed ? 1 : 0;
}
