#pragma once

// Step distribution mu on N*^d and the operator-stable limit law nu.
//
// The product-pareto family uses independent axes with exact discrete tails
// P(Z_k >= n) = n^{-alpha_k}. Its limit log-characteristic function is
//
//   log psi(x) = -sum_k gamma_k |x_k|^{alpha_k} (1 - i sgn(x_k) tan(pi alpha_k / 2)),
//
// which is E-homogeneous for E = diag(1/alpha_1, ..., 1/alpha_d):
// log psi(t^E x) = t log psi(x).

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "osgrf/lattice.hpp"
#include "osgrf/rng.hpp"

namespace osgrf {

// Diagonal exponent E = diag(1/alpha_1, ..., 1/alpha_d).
struct ExponentMatrix {
    std::vector<double> alphas;

    int dim() const noexcept { return static_cast<int>(alphas.size()); }
    double entry(int k) const { return 1.0 / alphas.at(static_cast<std::size_t>(k)); }
    // q(E) = trace(E).
    double trace() const noexcept;
    // Throws ConfigError unless 1 <= d <= kMaxDim and every alpha lies in (0,1).
    void validate() const;
};

enum class StepFamily { ProductPareto, CustomPmf };

std::string to_string(StepFamily f);
StepFamily step_family_from_string(const std::string& s);

struct PmfEntry {
    LatticePoint k{};
    double prob = 0.0;
};

struct FourierSum {
    std::complex<double> value;
    double neglected_mass = 0.0;
};

// Default scale weight for a discrete Pareto tail n^{-alpha}:
// gamma = Gamma(1 - alpha) cos(pi alpha / 2).
double calibrated_gamma(double alpha);

// Inverse-CDF step for one axis: floor(u^{-1/alpha}), saturated at 2^62.
std::int64_t pareto_step(double alpha, double u);

// Exact (untruncated) 1 - P(x) for one discrete Pareto axis with tail
// n^{-alpha}, via the polylogarithm expansion
//   Li_s(e^{i theta}) = Gamma(1-s) (-i theta)^{s-1} + sum_k zeta(s-k) (i theta)^k / k!.
class ParetoAxisTransform {
public:
    explicit ParetoAxisTransform(double alpha);
    double alpha() const noexcept { return alpha_; }
    std::complex<double> one_minus_P(double x) const;

private:
    std::complex<double> polylog(double theta) const;

    double alpha_;
    double gamma_one_minus_s_;
    std::vector<double> zeta_coeffs_; // zeta(s - k) / k!
};

class SpectralModel {
public:
    using LogPsiEvaluator = std::function<std::complex<double>(std::span<const double>)>;

    static SpectralModel product_pareto(std::vector<double> alphas, double p,
                                        std::vector<double> gammas = {});

    // Custom finite pmf on N*^d. When no evaluator is given, log psi uses the
    // product closed form with the supplied alphas and gammas.
    static SpectralModel custom(std::vector<double> alphas, std::vector<double> gammas,
                                std::vector<PmfEntry> table, double p,
                                LogPsiEvaluator evaluator = {});

    int dim() const noexcept { return exponent_.dim(); }
    const ExponentMatrix& exponent() const noexcept { return exponent_; }
    std::span<const double> gammas() const noexcept { return gammas_; }
    double p() const noexcept { return p_; }
    StepFamily family() const noexcept { return family_; }
    const std::vector<PmfEntry>& table() const noexcept { return table_; }
    bool aperiodic() const noexcept { return aperiodic_; }
    bool has_custom_evaluator() const noexcept { return static_cast<bool>(evaluator_); }

    SpectralModel with_p(double p) const;
    SpectralModel with_gammas(std::vector<double> gammas) const;

    std::complex<double> log_psi(std::span<const double> x) const;

    // mu({k}); throws DomainError when k is outside N*^d.
    double pmf(const LatticePoint& k) const;
    // Marginal pmf and tail of one axis (product-pareto only).
    double axis_pmf(int axis, std::int64_t n) const;
    double axis_tail(int axis, std::int64_t n) const;

    LatticePoint sample_step(Stream& rng) const;

    // sum over k in [1,N]^d of mu({k}) e^{i x.k}, with 1 - mu([1,N]^d).
    FourierSum fourier_P(std::span<const double> x, std::int64_t truncation) const;
    // 1 - P for the measure truncated to [1,N]^d (P(0) = 1 - tail mass).
    std::complex<double> one_minus_P_truncated(std::span<const double> x, std::int64_t truncation) const;
    // Exact 1 - P(x). Product-pareto: closed form; custom: finite table sum.
    std::complex<double> one_minus_P(std::span<const double> x) const;

    // 1 - mu([1,N]^d).
    double tail_mass_outside_box(std::int64_t n) const;
    // Smallest N with tail_mass_outside_box(N) < target, capped at `cap`.
    std::int64_t truncation_for_tail(double target, std::int64_t cap = std::int64_t{1} << 20) const;

    // Largest coordinate of the custom table support (0 for product-pareto).
    std::int64_t support_extent() const noexcept { return support_extent_; }

private:
    SpectralModel() = default;
    void validate_common() const;

    ExponentMatrix exponent_;
    std::vector<double> gammas_;
    double p_ = 0.5;
    StepFamily family_ = StepFamily::ProductPareto;
    std::vector<PmfEntry> table_;
    std::vector<double> table_cdf_;
    std::int64_t support_extent_ = 0;
    bool aperiodic_ = true;
    LogPsiEvaluator evaluator_;
    std::vector<ParetoAxisTransform> axis_transforms_;
};

// Closed-form product log psi (used by product models and as the default
// evaluator of custom models).
std::complex<double> product_log_psi(std::span<const double> alphas, std::span<const double> gammas,
                                     std::span<const double> x);

struct GRatioRow {
    std::size_t direction = 0;
    double scale = 0.0;
    double ratio = 0.0;
};

struct GRatioTable {
    std::vector<GRatioRow> rows;
    double tolerance = 0.05;
    // Every ratio at the largest scale lies within tolerance of 1.
    bool calibrated = false;
    // Ratios approach 1 monotonically in the scale for every direction.
    bool monotone = false;
};

// |1 - P(t^{-E} theta)| / |log psi(t^{-E} theta)| per (direction, scale).
GRatioTable g_ratio_check(const SpectralModel& model, const std::vector<std::vector<double>>& directions,
                          const std::vector<double>& scales, double tolerance = 0.05);

// |phi|^{-p} is locally integrable for E-homogeneous phi iff q(E) > p.
bool local_integrability_flag(const ExponentMatrix& exponent, double p);

} // namespace osgrf
