#pragma once

// Replica experiments: normalized partial-sum covariances against the limit,
// Gaussianity of S_n(1), and the second-order identities of the graph field.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osgrf/graph_field.hpp"
#include "osgrf/limit_field.hpp"
#include "osgrf/regime.hpp"
#include "osgrf/spectral_model.hpp"
#include "osgrf/stats.hpp"

namespace osgrf {

inline constexpr int kSchemaVersion = 1;

// How the n-schedule is read. Scale: windows are ceil(n^{1/alpha'_k}) and the
// normalization is n^H. Window: n is the extent of axis 0, i.e. the scale is
// n^{alpha'_1}.
enum class ScheduleUnits { Scale, Window };
std::string to_string(ScheduleUnits u);
ScheduleUnits schedule_units_from_string(const std::string& s);

// What the z-scores checked by the verdict compare against: the limit
// covariance, or the exact covariance at the simulated n (d <= 2).
enum class ZTarget { Limit, Prelimit };
std::string to_string(ZTarget t);
ZTarget z_target_from_string(const std::string& s);

struct ExperimentPlan {
    SpectralModel model = SpectralModel::product_pareto({0.3}, 0.5);
    std::vector<double> alpha_primes{0.3};
    std::vector<double> n_schedule;
    ScheduleUnits units = ScheduleUnits::Scale;
    std::size_t replicas = 200;
    std::vector<std::vector<double>> t_grid; // the all-ones point is always evaluated
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::int64_t buffer_depth = 0; // 0: 64 * largest extent, at least 2^24 when d = 1
    std::size_t site_budget = kDefaultSiteBudget;
    // engineering tolerances, not theory
    double var_tolerance = 0.15;  // |Var(S_n(1)) / target - 1| at the largest n
    double z_tolerance = 4.0;     // |z| per covariance entry at the largest n
    double trend_sigmas = 2.0;    // slack, in SEs, for the monotone trend
    bool gaussianity = true;
    bool prelimit = true;         // exact finite-n covariance for d <= 2
    ZTarget z_target = ZTarget::Limit;
    LimitQuadratureConfig quadrature;

    void validate() const;
};

struct CovarianceEntry {
    std::size_t a = 0;
    std::size_t b = 0;
    double empirical = 0.0;
    double se = 0.0;
    double target = 0.0;
    double target_error = 0.0;
    double z = 0.0;
    std::optional<double> prelimit;
    std::optional<double> z_prelimit;
};

struct ScaleVerdict {
    double n = 0.0;
    double scale = 0.0;
    std::vector<std::int64_t> extents;
    std::int64_t buffer_depth = 0;
    double normalization = 0.0;    // scale^H
    std::vector<CovarianceEntry> entries;
    std::vector<double> centered_mean;
    std::vector<double> centered_mean_se;
    bool centering_ok = true;      // |mean| <= 4 SE everywhere
    double var_ratio = 0.0;        // Var(S_n(1)) / target
    double var_ratio_se = 0.0;
    double max_abs_z = 0.0;
    double max_abs_z_prelimit = 0.0;
    double mean_truncated_fraction = 0.0;
    std::optional<GaussianityResult> gaussianity;
};

struct VerdictReport {
    int schema_version = kSchemaVersion;
    RegimeReport regime;
    double sum_sq = 0.0;
    std::string sum_sq_source;
    double sigma_x2 = 0.0;
    ZTarget z_target = ZTarget::Limit;
    std::vector<std::vector<double>> t_grid;
    std::vector<ScaleVerdict> scales;
    bool var_within_tolerance = false;
    bool trend_ok = false;
    bool z_ok = false;
    bool gaussian_ok = true;
    bool passed = false;
    std::vector<std::string> notes;
};

VerdictReport run_invariance_experiment(const ExperimentPlan& plan);

// Sum of q_k^2 over Z^d: exact spectral integral for d <= 2, q-table otherwise.
struct SumSq {
    double value = 0.0;
    double error = 0.0;
    std::string source;
};

SumSq exact_sum_sq(const SpectralModel& model);

struct IdentityConfig {
    std::size_t replicas = 10000;
    std::int64_t K = 1024;
    std::int64_t xstar_depth = 0;            // 0: window default
    std::vector<LatticePoint> offsets{LatticePoint{8, 0, 0, 0}, LatticePoint{32, 0, 0, 0}, LatticePoint{128, 0, 0, 0}};
    std::int64_t meeting_depth = std::int64_t{1} << 24;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::size_t site_budget = kDefaultSiteBudget;
};

struct MeetingCheck {
    LatticePoint offset{};
    double estimate = 0.0;
    double se = 0.0;
    double exact = 0.0;
    double table = 0.0;       // from the truncated q-table
    double z = 0.0;
    std::string caveat;
};

struct IdentityReport {
    int schema_version = kSchemaVersion;
    double sum_sq = 0.0;
    std::string sum_sq_source;
    double target_var_xstar = 0.0;
    XStarEstimate var_xstar;
    double z_var_xstar = 0.0;
    std::vector<MeetingCheck> meetings;
    bool degenerate = false;  // a single-atom pmf: everything is one component
};

IdentityReport verify_identities(const SpectralModel& model, const IdentityConfig& config);

// z with the convention 0 when both the difference and the SE vanish.
double z_score(double empirical, double target, double se);

} // namespace osgrf
