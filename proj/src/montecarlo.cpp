#include "osgrf/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "osgrf/errors.hpp"
#include "osgrf/parallel.hpp"
#include "osgrf/qtable.hpp"
#include "osgrf/rng.hpp"

namespace osgrf {

namespace {

bool single_atom(const SpectralModel& model)
{
    return model.family() == StepFamily::CustomPmf && model.table().size() == 1;
}

std::int64_t extent_for(double scale, double alpha_prime)
{
    const double v = std::pow(scale, 1.0 / alpha_prime);
    // guard against pow landing a hair above an integer
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(v * (1.0 - 1e-12))));
}

// Distinct for distinct (n index, replica) because mix64 is a bijection.
std::uint64_t experiment_seed(std::uint64_t seed, std::size_t n_index, std::size_t replica)
{
    const std::uint64_t base = derive(seed, static_cast<std::uint64_t>(StreamDomain::Replica));
    return mix64(base ^ ((static_cast<std::uint64_t>(n_index) << 32) | static_cast<std::uint64_t>(replica)));
}

} // namespace

std::string to_string(ScheduleUnits u)
{
    return u == ScheduleUnits::Scale ? "scale" : "window";
}

ScheduleUnits schedule_units_from_string(const std::string& s)
{
    if (s == "scale") return ScheduleUnits::Scale;
    if (s == "window") return ScheduleUnits::Window;
    throw ConfigError("unknown schedule units '" + s + "' (scale|window)");
}

std::string to_string(ZTarget t)
{
    return t == ZTarget::Limit ? "limit" : "prelimit";
}

ZTarget z_target_from_string(const std::string& s)
{
    if (s == "limit") return ZTarget::Limit;
    if (s == "prelimit") return ZTarget::Prelimit;
    throw ConfigError("unknown z target '" + s + "' (limit|prelimit)");
}

double z_score(double empirical, double target, double se)
{
    const double diff = empirical - target;
    if (se > 0.0) return diff / se;
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

void ExperimentPlan::validate() const
{
    const int d = model.dim();
    if (static_cast<int>(alpha_primes.size()) != d) throw ConfigError("alpha_primes must have one entry per axis");
    if (n_schedule.empty()) throw ConfigError("n-schedule is empty");
    for (std::size_t i = 0; i < n_schedule.size(); ++i) {
        if (!(n_schedule[i] >= 1.0)) throw ConfigError("n-schedule entries must be >= 1");
        if (i > 0 && !(n_schedule[i] > n_schedule[i - 1])) throw ConfigError("n-schedule must be strictly increasing");
    }
    if (replicas < 2) throw ConfigError("at least 2 replicas are needed");
    if (replicas >= (std::size_t{1} << 32)) throw ConfigError("too many replicas");
    for (const auto& t : t_grid) {
        if (static_cast<int>(t.size()) != d) throw ConfigError("t-grid point has the wrong dimension");
        for (double x : t) {
            if (!(x > 0.0 && x <= 1.0)) throw ConfigError("t-grid coordinates must lie in (0,1]");
        }
    }
    if (!(var_tolerance > 0.0) || !(z_tolerance > 0.0) || !(trend_sigmas >= 0.0)) {
        throw ConfigError("tolerances must be positive");
    }
    if (z_target == ZTarget::Prelimit && !(prelimit && d <= 2)) {
        throw ConfigError("z target 'prelimit' needs prelimit enabled and d <= 2");
    }
}

SumSq exact_sum_sq(const SpectralModel& model)
{
    SumSq out;
    if (single_atom(model)) {
        out.value = std::numeric_limits<double>::infinity();
        out.source = "single-atom pmf: one component";
        return out;
    }
    if (model.dim() <= 2) {
        const auto s = spectral_pair_sum(model, LatticePoint{});
        out.value = s.value;
        out.error = s.error;
        out.source = "spectral";
        return out;
    }
    std::int64_t extent = 1;
    const auto budget = kDefaultQTableBudget / 4;
    while (std::pow(static_cast<double>(2 * extent + 1), model.dim()) <= static_cast<double>(budget)) extent *= 2;
    const QTable t = build_qtable(model, extent);
    out.value = t.sum_sq;
    out.source = "q-table extent " + std::to_string(extent);
    return out;
}

VerdictReport run_invariance_experiment(const ExperimentPlan& plan)
{
    plan.validate();
    const SpectralModel& model = plan.model;
    const int d = model.dim();
    VerdictReport rep;
    rep.regime = classify(model.exponent().alphas, plan.alpha_primes);
    if (!rep.regime.valid) {
        std::string why = "plan rejected: regime is not valid";
        for (const auto& r : rep.regime.reasons) why += "; " + r;
        throw ConfigError(why);
    }
    const SumSq ss = exact_sum_sq(model);
    rep.sum_sq = ss.value;
    rep.sum_sq_source = ss.source;
    rep.sigma_x2 = sigma_x2_from_sum_sq(ss.value, model.p());

    auto pts = plan.t_grid;
    const std::vector<double> ones(static_cast<std::size_t>(d), 1.0);
    auto it = std::find(pts.begin(), pts.end(), ones);
    if (it == pts.end()) {
        pts.push_back(ones);
        it = pts.end() - 1;
    }
    const auto one = static_cast<std::size_t>(it - pts.begin());
    rep.t_grid = pts;
    rep.z_target = plan.z_target;
    const std::size_t m = pts.size();

    // analytic targets
    std::vector<Integral> target(m * m);
    if (rep.sigma_x2 > 0.0) {
        LimitCovariance lc(rep.regime, model, rep.sigma_x2, plan.quadrature, QueryScale::from_points(pts));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) target[a * m + b] = lc.cov(pts[a], pts[b]);
    }

    for (std::size_t ni = 0; ni < plan.n_schedule.size(); ++ni) {
        ScaleVerdict sv;
        sv.n = plan.n_schedule[ni];
        sv.scale = plan.units == ScheduleUnits::Scale ? sv.n : std::pow(sv.n, plan.alpha_primes[0]);
        for (int k = 0; k < d; ++k) {
            if (plan.units == ScheduleUnits::Window && k == 0) {
                if (sv.n != std::floor(sv.n)) throw ConfigError("window units need integer n");
                sv.extents.push_back(static_cast<std::int64_t>(sv.n));
            } else {
                sv.extents.push_back(extent_for(sv.scale, plan.alpha_primes[k]));
            }
        }
        const std::int64_t largest = *std::max_element(sv.extents.begin(), sv.extents.end());
        // d = 1 chains leave a deep region in few steps; in d >= 2 they rarely merge and
        // walk ~D^alpha steps each, so the depth follows the window there.
        std::int64_t depth = 64 * largest;
        if (d == 1) depth = std::max<std::int64_t>(std::int64_t{1} << 24, depth);
        sv.buffer_depth = plan.buffer_depth > 0 ? plan.buffer_depth : depth;
        sv.normalization = std::pow(sv.scale, rep.regime.H);

        const std::size_t R = plan.replicas;
        std::vector<double> x(R * m, 0.0);
        std::vector<double> trunc(R, 0.0);
        WindowOptions opt;
        opt.buffer_depth = sv.buffer_depth;
        opt.site_budget = plan.site_budget;
        parallel_for(R, plan.workers, [&](std::size_t r) {
            const FieldWindow w = simulate_window(model, sv.extents, experiment_seed(plan.seed, ni, r), opt);
            const PartialSumGrid ps = partial_sums(w, pts, model.p());
            for (std::size_t a = 0; a < m; ++a) x[r * m + a] = ps.centered[a] / sv.normalization;
            trunc[r] = w.total_components ? static_cast<double>(w.truncated_components) / static_cast<double>(w.total_components) : 0.0;
        });

        std::vector<double> y(R);
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t r = 0; r < R; ++r) y[r] = x[r * m + a];
            const auto jm = jackknife_mean(y);
            sv.centered_mean.push_back(jm.value);
            sv.centered_mean_se.push_back(jm.se);
            if (std::abs(jm.value) > 4.0 * jm.se && !(jm.value == 0.0)) sv.centering_ok = false;
        }
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a; b < m; ++b) {
                for (std::size_t r = 0; r < R; ++r) y[r] = x[r * m + a] * x[r * m + b];
                const auto jm = jackknife_mean(y);
                CovarianceEntry e;
                e.a = a;
                e.b = b;
                e.empirical = jm.value;
                e.se = jm.se;
                e.target = target[a * m + b].value;
                e.target_error = target[a * m + b].error;
                e.z = z_score(e.empirical, e.target, e.se);
                if (plan.prelimit && d <= 2 && rep.sigma_x2 > 0.0) {
                    const auto pre = prelimit_cov_exact(model, rep.sum_sq, sv.extents, pts[a], pts[b]);
                    e.prelimit = pre.value / (sv.normalization * sv.normalization);
                    e.z_prelimit = z_score(e.empirical, *e.prelimit, e.se);
                    sv.max_abs_z_prelimit = std::max(sv.max_abs_z_prelimit, std::abs(*e.z_prelimit));
                }
                sv.max_abs_z = std::max(sv.max_abs_z, std::abs(e.z));
                if (a == one && b == one) {
                    if (e.target != 0.0) {
                        sv.var_ratio = e.empirical / e.target;
                        sv.var_ratio_se = e.se / std::abs(e.target);
                    } else {
                        sv.var_ratio = e.empirical == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
                    }
                }
                sv.entries.push_back(std::move(e));
            }
        }
        double tsum = 0.0;
        for (double t : trunc) tsum += t;
        sv.mean_truncated_fraction = tsum / static_cast<double>(R);
        if (plan.gaussianity && R >= 100) {
            for (std::size_t r = 0; r < R; ++r) y[r] = x[r * m + one];
            sv.gaussianity = gaussianity_test(y);
        }
        rep.scales.push_back(std::move(sv));
    }

    const ScaleVerdict& last = rep.scales.back();
    rep.var_within_tolerance = std::abs(last.var_ratio - 1.0) <= plan.var_tolerance;
    rep.trend_ok = true;
    for (std::size_t i = 1; i < rep.scales.size(); ++i) {
        const auto& p = rep.scales[i - 1];
        const auto& c = rep.scales[i];
        const double slack = plan.trend_sigmas * std::hypot(p.var_ratio_se, c.var_ratio_se);
        if (std::abs(c.var_ratio - 1.0) > std::abs(p.var_ratio - 1.0) + slack) rep.trend_ok = false;
    }
    rep.z_ok = (plan.z_target == ZTarget::Prelimit ? last.max_abs_z_prelimit : last.max_abs_z) <= plan.z_tolerance;
    if (last.gaussianity) {
        rep.gaussian_ok = last.gaussianity->pass;
        if (last.gaussianity->degenerate) rep.notes.push_back("S_n(1) is degenerate; Gaussianity not testable");
    }
    rep.passed = rep.var_within_tolerance && rep.trend_ok && rep.z_ok && rep.gaussian_ok;
    rep.notes.push_back("tolerances are engineering choices; the limit theorem gives no convergence rates");
    return rep;
}

IdentityReport verify_identities(const SpectralModel& model, const IdentityConfig& config)
{
    if (config.replicas < 2) throw ConfigError("at least 2 replicas are needed");
    IdentityReport rep;
    rep.degenerate = single_atom(model);
    const SumSq ss = exact_sum_sq(model);
    rep.sum_sq = ss.value;
    rep.sum_sq_source = ss.source;
    rep.target_var_xstar = sigma_x2_from_sum_sq(ss.value, model.p());
    rep.var_xstar = estimate_var_xstar(model, config.replicas, config.K, derive(config.seed, 1), config.xstar_depth,
                                       config.workers, config.site_budget);
    rep.z_var_xstar = z_score(rep.var_xstar.value, rep.target_var_xstar, rep.var_xstar.se);

    std::optional<QTable> table;
    if (!rep.degenerate && !config.offsets.empty()) {
        std::int64_t reach = 0;
        for (const auto& o : config.offsets)
            for (int k = 0; k < model.dim(); ++k) reach = std::max<std::int64_t>(reach, std::abs(o[k]));
        std::int64_t extent = std::max<std::int64_t>(4 * reach, model.dim() == 1 ? 16384 : 256);
        table = build_qtable(model, extent);
    }
    for (std::size_t i = 0; i < config.offsets.size(); ++i) {
        const auto& off = config.offsets[i];
        MeetingCheck mc;
        mc.offset = off;
        const auto est = estimate_meeting_prob(model, off, config.replicas, config.meeting_depth,
                                               derive(config.seed, 2 + i), config.workers, config.site_budget);
        mc.estimate = est.value;
        mc.se = est.se;
        mc.caveat = est.caveat;
        if (rep.degenerate) {
            // a single atom a: A_0 and A_m meet iff m is a multiple of a
            const auto& a = model.table().front().k;
            std::int64_t ratio = -1;
            bool ok = true;
            for (int k = 0; k < model.dim(); ++k) {
                if (off[k] % a[k] != 0) {
                    ok = false;
                    break;
                }
                const std::int64_t r = std::abs(off[k] / a[k]);
                if (ratio < 0) ratio = r;
                ok = ok && r == ratio;
            }
            mc.exact = ok ? 1.0 : 0.0;
            mc.table = mc.exact;
        } else {
            mc.exact = (model.dim() <= 2 ? spectral_pair_sum(model, off).value : pair_meeting_prob(*table, off).numerator) / ss.value;
            mc.table = pair_meeting_prob(*table, off).value;
        }
        mc.z = z_score(mc.estimate, mc.exact, mc.se);
        rep.meetings.push_back(std::move(mc));
    }
    return rep;
}

} // namespace osgrf
