#pragma once

// Ancestral probabilities q_k = P(0 in A_k) on a box [0,N]^d, and the
// second-order quantities built from them.

#include <cstdint>
#include <vector>

#include "osgrf/lattice.hpp"
#include "osgrf/spectral_model.hpp"

namespace osgrf {

struct QTable {
    int dim = 1;
    std::int64_t extent = 0;   // box [0, extent]^d
    std::vector<double> values; // colex order, axis 0 fastest
    double sum_sq = 0.0;
    double pmf_tail_mass = 0.0; // 1 - mu([1,N]^d)
    // q along the main diagonal is nonincreasing past its first few cells.
    bool diagonal_monotone = true;

    std::int64_t side() const noexcept { return extent + 1; }
    std::size_t cells() const noexcept { return values.size(); }
    std::size_t index(const LatticePoint& k) const noexcept;
    // q_k, 0 outside the box.
    double at(const LatticePoint& k) const noexcept;
};

inline constexpr std::size_t kDefaultQTableBudget = std::size_t{1} << 27;

// Recursion q_k = sum_{j in [1,N]^d, j <= k} mu({j}) q_{k-j}, q_0 = 1, filled in
// colex order. Product models use an exact separable convolution.
QTable build_qtable(const SpectralModel& model, std::int64_t extent,
                    std::size_t max_cells = kDefaultQTableBudget);

// Reference implementation of the same recursion with the d-fold direct sum.
QTable build_qtable_direct(const SpectralModel& model, std::int64_t extent,
                           std::size_t max_cells = kDefaultQTableBudget);

// max_k |q_k - sum_j mu({j}) q_{k-j}| over 0 < k <= N.
double recursion_residual(const SpectralModel& model, const QTable& table);

// 4p(1-p) / sum_sq.
double sigma_x2(const QTable& table, double p);
double sigma_x2_from_sum_sq(double sum_sq, double p);

struct PairMeeting {
    double value = 0.0;     // sum_k q_k q_{k+m} / sum_k q_k^2
    double numerator = 0.0;
    // Contribution of the outer half of the box to the numerator, relative to
    // the total. Large values mean the box is too small for this offset.
    double residue = 0.0;
};

PairMeeting pair_meeting_prob(const QTable& table, const LatticePoint& offset);

struct ParsevalResult {
    double sum_sq = 0.0;
    double integral = 0.0;      // (2pi)^{-d} int |1 - P_N|^{-2}
    double quad_error = 0.0;    // estimated absolute error of the integral
    double discrepancy = 0.0;   // |sum_sq - integral| / sum_sq
    std::size_t evaluations = 0;
};

struct QuadratureConfig {
    int levels = 48;            // dyadic levels toward the origin
    double max_width = 0.1;     // panel width cap away from the origin
    double rel_tol = 1e-3;      // accepted relative quadrature error
};

// Parseval cross-check with the pmf truncated to [1,N]^d on both sides.
ParsevalResult parseval_check(const SpectralModel& model, const QTable& table, const QuadratureConfig& cfg = {});

struct SpectralSum {
    double value = 0.0;
    double error = 0.0;
};

// Untruncated (2pi)^{-d} int cos(m.x) |1 - P(x)|^{-2} dx = sum_{k in Z^d} q_k q_{k+m},
// using the exact characteristic function. d <= 2.
SpectralSum spectral_pair_sum(const SpectralModel& model, const LatticePoint& offset,
                              const QuadratureConfig& cfg = {});

// Box R(n,t): per-axis lengths L_a = ceil(n_a t_a).
struct BCoefficients {
    double norm_sq = 0.0;
    double sup = 0.0;
    double ratio = 0.0; // sup / sqrt(norm_sq)
};

std::vector<std::int64_t> box_lengths(const std::vector<std::int64_t>& extents, const std::vector<double>& t);

// b_j = sum_{k in box} q_{k-j}, over every j with a nonzero term.
BCoefficients b_coefficients(const QTable& table, const std::vector<std::int64_t>& lengths);

// sum_j b_j(t) b_j(s) for boxes given by per-axis lengths.
double b_inner_product(const QTable& table, const std::vector<std::int64_t>& lt, const std::vector<std::int64_t>& ls);
// Same quantity from the trigonometric polynomial Q_N with an exact trapezoid rule.
double b_inner_product_spectral(const QTable& table, const std::vector<std::int64_t>& lt,
                                const std::vector<std::int64_t>& ls);
// Same quantity for the untruncated q, through (2pi)^{-d} int |1-P|^{-2} K_t conj(K_s). d <= 2.
SpectralSum b_inner_product_exact(const SpectralModel& model, const std::vector<std::int64_t>& lt,
                                  const std::vector<std::int64_t>& ls, const QuadratureConfig& cfg = {});

enum class PrelimitPath { Coefficients, Spectral, ExactSpectral };

struct PrelimitResult {
    double value = 0.0;
    double error = 0.0;
    PrelimitPath path = PrelimitPath::Coefficients;
};

// sigma_x2 * <b_n(t), b_n(s)>, window extents n_a given directly.
PrelimitResult prelimit_cov(const QTable& table, double p, const std::vector<std::int64_t>& extents,
                            const std::vector<double>& t, const std::vector<double>& s,
                            PrelimitPath path = PrelimitPath::Coefficients);
PrelimitResult prelimit_cov_exact(const SpectralModel& model, double sum_sq, const std::vector<std::int64_t>& extents,
                                  const std::vector<double>& t, const std::vector<double>& s,
                                  const QuadratureConfig& cfg = {});

} // namespace osgrf
