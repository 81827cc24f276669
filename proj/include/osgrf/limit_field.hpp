#pragma once

// The limiting Gaussian field W: covariance by spectral quadrature, closed
// forms for fractional Brownian sheets, increments, operator scaling, and
// spectral synthesis of sample fields.
//
// For oriented intervals A_k = [a_k, b_k] the covariance of box functionals is
//
//   sigma_X^2 prod_{I_<} |A_k cap B_k| prod_{I_>} |A_k||B_k| / 2pi
//     * int_{H_>=} |log psi(y)|^{-2} prod_{I_=} K_A(y_k) conj(K_B(y_k)) / 2pi dy,
//
// with K_[a,b](y) = (e^{iby} - e^{iay}) / (iy). W(t) uses A_k = [0, t_k].

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "osgrf/regime.hpp"
#include "osgrf/spectral_model.hpp"

namespace osgrf {

struct Integral {
    double value = 0.0;
    double error = 0.0;
};

// pi / (H Gamma(2H) sin(H pi)); DomainError outside (0,1).
double C_H(double H);
double fbm_cov(double H, double t, double s);
// int_R |e^{ity} - 1|^2 / |y|^{1+2H} dy by direct quadrature (equals C_H |t|^{2H}).
Integral fbm_spectral_integral(double H, double t);

struct Interval {
    double a = 0.0;
    double b = 0.0;
};
using IntervalBox = std::vector<Interval>;

IntervalBox origin_box(const std::vector<double>& t);

enum class QuadratureMode { Line, LineMarginal, Tensor, QuasiMonteCarlo };
std::string to_string(QuadratureMode m);

struct LimitQuadratureConfig {
    double tail_tol = 1e-5;      // target relative tail beyond the truncation radius
    double max_radius_line = 2e4;
    double max_radius_tensor = 600.0;
    int levels = 40;             // dyadic levels toward the origin
    double oscillation_width = 3.0; // panel width times the largest frequency
    std::size_t max_tensor_points = 60'000'000;
    std::size_t qmc_points = 1 << 15;
    int qmc_rotations = 8;
    std::uint64_t qmc_seed = 0x51a7u;
};

// Range of box geometry the quadrature has to resolve.
struct QueryScale {
    double omega_max = 1.0;  // largest |endpoint|
    double min_length = 1.0; // smallest nonzero |endpoint| or interval length

    static QueryScale from_boxes(const std::vector<IntervalBox>& boxes);
    static QueryScale from_points(const std::vector<std::vector<double>>& points);
};

// Quadrature of the covariance on a fixed node set. Every query uses the same
// nodes and positive weights, so Gram matrices are positive semidefinite.
class LimitCovariance {
public:
    LimitCovariance(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                    const LimitQuadratureConfig& config = {}, const QueryScale& scale = {});

    Integral cov(const std::vector<double>& t, const std::vector<double>& s) const;
    Integral cov_box(const IntervalBox& A, const IntervalBox& B) const;
    // Row-major n x n matrix.
    std::vector<double> gram(const std::vector<std::vector<double>>& points) const;

    QuadratureMode mode() const noexcept { return mode_; }
    std::size_t node_count() const noexcept { return node_count_; }
    const RegimeReport& report() const noexcept { return report_; }
    double sigma_x2() const noexcept { return sigma_x2_; }
    const std::vector<double>& radii() const noexcept { return radii_; }

private:
    struct Grid {
        std::vector<std::vector<double>> x;     // per I_= axis (Line / Tensor)
        std::vector<double> weight;              // combined weights (flattened tensor)
        std::vector<std::vector<double>> points; // QMC: I_= coordinates per point
        std::vector<std::size_t> rotation;       // QMC rotation index per point
        std::vector<std::uint8_t> shell;         // node lies in the outermost radial shell
    };

    double integrate(const Grid& g, const IntervalBox& A, const IntervalBox& B, double* shell_abs,
                     double* rotation_sd) const;
    double prefactor(const IntervalBox& A, const IntervalBox& B) const;
    void build_line(const LimitQuadratureConfig& cfg, const QueryScale& scale);
    void build_tensor(const LimitQuadratureConfig& cfg, const QueryScale& scale);
    void build_qmc(const LimitQuadratureConfig& cfg, const QueryScale& scale);

    RegimeReport report_;
    SpectralModel model_;
    double sigma_x2_;
    QuadratureMode mode_ = QuadratureMode::Line;
    std::vector<int> less_, equal_, greater_;
    Grid hi_, lo_;
    std::vector<double> radii_;
    std::vector<double> tail_exponent_; // per I_= axis
    std::size_t node_count_ = 0;
    int rotations_ = 1;
};

Integral cov_W(const RegimeReport& report, const SpectralModel& model, double sigma_x2, const std::vector<double>& t,
               const std::vector<double>& s, const LimitQuadratureConfig& config = {});

// Requires |I_=| = 1. Sheet covariance times the exact constant.
double closed_form_cov(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                       const std::vector<double>& t, const std::vector<double>& s);
// |log psi(e_j)|^{-2} when I_> is empty, int |log psi(e_j + y e_k)|^{-2} dy otherwise.
double closed_form_factor(const RegimeReport& report, const SpectralModel& model);

Integral var_increment(const RegimeReport& report, const SpectralModel& model, double sigma_x2, int axis, double delta,
                       const std::vector<double>& u, const LimitQuadratureConfig& config = {});

struct ScalingCheck {
    double scaled = 0.0;   // cov(lambda^{E'} t, lambda^{E'} s)
    double expected = 0.0; // lambda^{2H} cov(t, s)
    double residual = 0.0; // relative
    double error = 0.0;    // combined quadrature error, relative
};

ScalingCheck operator_scaling_check(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                                    double lambda, const std::vector<double>& t, const std::vector<double>& s,
                                    const LimitQuadratureConfig& config = {});

struct SynthesisConfig {
    int octaves = 12;          // frequencies span [2^-octaves, 2^octaves] per axis
    int cells_per_octave = 12;
    std::size_t max_cells = 4'000'000;
};

// Riemann discretization of the harmonizable representation on a geometric
// frequency grid, with control measure dy / (2pi)^d.
class SpectralSynthesizer {
public:
    SpectralSynthesizer(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                        const SynthesisConfig& config = {});

    // One realization at every point of t_grid.
    std::vector<double> realize(const std::vector<std::vector<double>>& t_grid, std::uint64_t seed,
                                std::uint64_t realization) const;
    // Exact covariance of the discretized field.
    double grid_cov(const std::vector<double>& t, const std::vector<double>& s) const;
    std::size_t cells() const noexcept { return cell_weight_.size(); }

private:
    struct AxisCells {
        std::vector<double> center;
        std::vector<double> width;
    };

    std::vector<std::complex<double>> axis_kernel(int axis, double t) const;

    RegimeReport report_;
    double sigma_x2_;
    std::vector<AxisCells> axes_;
    std::vector<double> cell_weight_; // sqrt(volume / (2pi)^d) / |log psi|, flattened, axis 0 fastest
    std::vector<std::size_t> shape_;
};

struct SynthesisResult {
    std::vector<std::vector<double>> t_grid;
    std::size_t realizations = 0;
    std::vector<double> values;   // realization-major
    std::vector<double> grid_var; // discretized-field variance per point
    std::vector<double> target_var;
    std::vector<std::string> warnings;
};

SynthesisResult synthesize_W(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                             const std::vector<std::vector<double>>& t_grid, const SynthesisConfig& grid,
                             std::uint64_t seed, std::size_t realizations, unsigned workers = 1,
                             const LimitQuadratureConfig& quad = {});

} // namespace osgrf
