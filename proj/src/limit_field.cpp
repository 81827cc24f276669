#include "osgrf/limit_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "osgrf/errors.hpp"
#include "osgrf/parallel.hpp"
#include "osgrf/quadrature.hpp"
#include "osgrf/rng.hpp"

namespace osgrf {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// (e^{iby} - e^{iay}) / (iy), continuous at y = 0.
cplx interval_kernel(const Interval& I, double y)
{
    const double len = I.b - I.a;
    if (len == 0.0) return 0.0;
    const double h = 0.5 * len * y;
    const double amp = std::abs(h) < 1e-8 ? len : 2.0 * std::sin(h) / y;
    const double phase = 0.5 * (I.a + I.b) * y;
    return {amp * std::cos(phase), amp * std::sin(phase)};
}

// Integral of 1_A 1_B for oriented intervals: the two-sided Brownian covariance.
double oriented_overlap(const Interval& A, const Interval& B)
{
    const double sa = A.b >= A.a ? 1.0 : -1.0;
    const double sb = B.b >= B.a ? 1.0 : -1.0;
    const double lo = std::max(std::min(A.a, A.b), std::min(B.a, B.b));
    const double hi = std::min(std::max(A.a, A.b), std::max(B.a, B.b));
    return hi > lo ? sa * sb * (hi - lo) : 0.0;
}

void require_valid(const RegimeReport& report)
{
    if (!report.valid) {
        std::string why = "regime is not valid";
        for (const auto& r : report.reasons) why += "; " + r;
        throw DomainError(why);
    }
}

void require_box(const RegimeReport& report, const IntervalBox& A)
{
    if (static_cast<int>(A.size()) != report.dim()) throw DomainError("box dimension does not match the regime");
}

// The I_= marginal integrand decays like |y|^{-1-2H_j}; returns 2 H_j.
double tail_power(const RegimeReport& report, int j)
{
    return 2.0 * report.alphas[j] * (1.0 - report.q_greater / 2.0) + 1.0;
}

double radical_inverse(std::uint64_t i, unsigned base)
{
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

constexpr std::array<unsigned, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

// Positive-half panels for an oscillatory axis: dyadic toward 0 below y0,
// growing panels up to R with width capped by the oscillation scale.
NodeSet equal_axis(const GaussRule& rule, double y0, double R, double osc, int levels)
{
    NodeSet s;
    s.add_panels(graded_panels(y0, levels, nullptr), rule);
    double a = y0;
    while (a < R) {
        const double b = std::min(R, a + std::min(0.5 * a, osc));
        s.add_panel({a, b}, rule);
        a = b;
    }
    s.mirror();
    return s;
}

// Non-oscillatory heavy-tailed axis: [0,1] dyadic, [1, inf) through y = w^{-c}.
NodeSet greater_axis(const GaussRule& rule, double alpha, int levels)
{
    NodeSet s;
    s.add_panels(graded_panels(1.0, levels, nullptr), rule);
    const double c = 1.0 / (2.0 * alpha - 1.0);
    NodeSet w;
    w.add_panels(graded_panels(1.0, 30, [](double a) { return 0.25 * a; }), rule);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double y = std::pow(w.x[i], -c);
        if (!std::isfinite(y)) continue;
        s.x.push_back(y);
        s.w.push_back(w.w[i] * c * y / w.x[i]);
    }
    s.mirror();
    return s;
}

} // namespace

double C_H(double H)
{
    if (!(H > 0.0 && H < 1.0)) throw DomainError("C_H requires H in (0,1)");
    return kPi / (H * std::tgamma(2.0 * H) * std::sin(H * kPi));
}

double fbm_cov(double H, double t, double s)
{
    return 0.5 * (std::pow(std::abs(t), 2 * H) + std::pow(std::abs(s), 2 * H) - std::pow(std::abs(t - s), 2 * H));
}

Integral fbm_spectral_integral(double H, double t)
{
    if (!(H > 0.0 && H < 1.0)) throw DomainError("fbm_spectral_integral requires H in (0,1)");
    if (t == 0.0) return {0.0, 0.0};
    // int_R |e^{ity}-1|^2 |y|^{-1-2H} dy = 4 |t|^{2H} int_0^inf (1 - cos u) u^{-1-2H} du
    const double p = 1.0 + 2.0 * H;
    boost::math::quadrature::tanh_sinh<double> ts;
    double err_near = 0.0;
    const double near = ts.integrate(
        [&](double u) {
            if (u <= 0.0) return 0.0;
            const double r = std::sin(0.5 * u) / u;
            return 2.0 * r * r * std::pow(u, 2.0 - p);
        },
        0.0, 1.0, 1e-14, &err_near);
    boost::math::quadrature::ooura_fourier_cos<double> oc(1e-13);
    boost::math::quadrature::ooura_fourier_sin<double> os(1e-13);
    auto shifted = [&](double v) { return std::pow(1.0 + v, -p); };
    const auto [ic, ec] = oc.integrate(shifted, 1.0);
    const auto [is, es] = os.integrate(shifted, 1.0);
    const double cos_tail = std::cos(1.0) * ic - std::sin(1.0) * is;
    const double J = near + 1.0 / (2.0 * H) - cos_tail;
    const double scale = 4.0 * std::pow(std::abs(t), 2.0 * H);
    return {scale * J, scale * (std::abs(err_near) + std::abs(ec) + std::abs(es))};
}

IntervalBox origin_box(const std::vector<double>& t)
{
    IntervalBox b(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) b[k] = {0.0, t[k]};
    return b;
}

std::string to_string(QuadratureMode m)
{
    switch (m) {
    case QuadratureMode::Line: return "line";
    case QuadratureMode::LineMarginal: return "line-marginal";
    case QuadratureMode::Tensor: return "tensor";
    case QuadratureMode::QuasiMonteCarlo: return "quasi-monte-carlo";
    }
    return "?";
}

QueryScale QueryScale::from_boxes(const std::vector<IntervalBox>& boxes)
{
    double omega = 0.0, len = INFINITY;
    for (const auto& box : boxes) {
        for (const auto& I : box) {
            omega = std::max({omega, std::abs(I.a), std::abs(I.b)});
            const double l = std::abs(I.b - I.a);
            if (l > 0.0) len = std::min(len, l);
        }
    }
    QueryScale q;
    q.omega_max = std::max(omega, 1e-3);
    q.min_length = std::isfinite(len) ? len : 1.0;
    return q;
}

QueryScale QueryScale::from_points(const std::vector<std::vector<double>>& points)
{
    std::vector<IntervalBox> boxes;
    boxes.reserve(points.size());
    for (const auto& p : points) boxes.push_back(origin_box(p));
    return from_boxes(boxes);
}

LimitCovariance::LimitCovariance(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                                 const LimitQuadratureConfig& config, const QueryScale& scale)
    : report_(report), model_(model), sigma_x2_(sigma_x2)
{
    require_valid(report);
    if (model.dim() != report.dim()) throw DomainError("model and regime dimensions differ");
    if (!(sigma_x2 >= 0.0)) throw DomainError("sigma_X^2 must be nonnegative");
    less_ = report.axes(AxisClass::Less);
    equal_ = report.axes(AxisClass::Equal);
    greater_ = report.axes(AxisClass::Greater);
    if (equal_.empty()) throw InternalError("regime without an I_= axis");
    for (int j : equal_) tail_exponent_.push_back(tail_power(report, j));

    if (equal_.size() == 1 && greater_.empty()) {
        mode_ = QuadratureMode::Line;
        build_line(config, scale);
    } else if (equal_.size() == 1 && greater_.size() == 1) {
        mode_ = QuadratureMode::LineMarginal;
        build_line(config, scale);
    } else if (equal_.size() == 2 && greater_.empty()) {
        mode_ = QuadratureMode::Tensor;
        build_tensor(config, scale);
    } else {
        mode_ = QuadratureMode::QuasiMonteCarlo;
        build_qmc(config, scale);
    }
}

void LimitCovariance::build_line(const LimitQuadratureConfig& cfg, const QueryScale& scale)
{
    const int j = equal_[0];
    const double R = std::clamp(std::pow(cfg.tail_tol, -1.0 / tail_exponent_[0]) / scale.min_length,
                                16.0 / scale.min_length, cfg.max_radius_line);
    radii_ = {R};
    const double y0 = std::min(1.0 / scale.omega_max, 0.25 * R);
    const double osc = cfg.oscillation_width / scale.omega_max;
    const int d = model_.dim();
    const bool separable = !model_.has_custom_evaluator();
    // near 0 the integrand behaves like |y|^{1 - 2 H_j}; grade until the
    // uncovered piece [0, y0 2^-L] is below ~1e-10 of its scale
    const double near = 2.0 - tail_exponent_[0];
    const int levels = std::clamp(static_cast<int>(std::ceil(33.0 / near)), cfg.levels, 600);

    auto fill = [&](Grid& g, const GaussRule& rule) {
        const NodeSet ax = equal_axis(rule, y0, R, osc, levels);
        g.x = {ax.x};
        g.weight.assign(ax.size(), 0.0);
        g.shell.assign(ax.size(), 0);
        std::vector<double> y(d, 0.0);
        if (mode_ == QuadratureMode::Line) {
            for (std::size_t i = 0; i < ax.size(); ++i) {
                y[j] = ax.x[i];
                g.weight[i] = ax.w[i] / std::norm(model_.log_psi(y)) / kTwoPi;
            }
        } else {
            const int k = greater_[0];
            const NodeSet gk = greater_axis(rule, report_.alphas[k], cfg.levels);
            std::vector<cplx> phi_k(gk.size());
            if (separable) {
                std::vector<double> e(d, 0.0);
                for (std::size_t l = 0; l < gk.size(); ++l) {
                    e[k] = gk.x[l];
                    phi_k[l] = model_.log_psi(e);
                }
            }
            for (std::size_t i = 0; i < ax.size(); ++i) {
                y.assign(d, 0.0);
                y[j] = ax.x[i];
                double m = 0.0;
                if (separable) {
                    const cplx phi_j = model_.log_psi(y);
                    for (std::size_t l = 0; l < gk.size(); ++l) m += gk.w[l] / std::norm(phi_j + phi_k[l]);
                } else {
                    for (std::size_t l = 0; l < gk.size(); ++l) {
                        y[k] = gk.x[l];
                        m += gk.w[l] / std::norm(model_.log_psi(y));
                    }
                }
                g.weight[i] = ax.w[i] * m / kTwoPi;
            }
        }
        for (std::size_t i = 0; i < ax.size(); ++i) g.shell[i] = std::abs(ax.x[i]) >= 0.5 * R ? 1 : 0;
        return ax.size();
    };
    node_count_ = fill(hi_, gauss_legendre(10));
    fill(lo_, gauss_legendre(6));
}

void LimitCovariance::build_tensor(const LimitQuadratureConfig& cfg, const QueryScale& scale)
{
    const int d = model_.dim();
    const double y0 = 1.0 / scale.omega_max;
    const double osc = cfg.oscillation_width / scale.omega_max;
    radii_.clear();
    for (std::size_t a = 0; a < equal_.size(); ++a) {
        radii_.push_back(std::clamp(std::pow(cfg.tail_tol, -1.0 / tail_exponent_[a]) / scale.min_length,
                                    16.0 / scale.min_length, cfg.max_radius_tensor));
    }
    const bool separable = !model_.has_custom_evaluator();

    auto fill = [&](Grid& g, const GaussRule& rule) {
        std::array<NodeSet, 2> ax;
        for (int a = 0; a < 2; ++a) ax[a] = equal_axis(rule, std::min(y0, 0.25 * radii_[a]), radii_[a], osc, cfg.levels);
        const std::size_t n0 = ax[0].size(), n1 = ax[1].size();
        if (n0 * n1 > cfg.max_tensor_points) {
            throw ResourceError("covariance tensor grid of " + std::to_string(n0 * n1) + " points exceeds the budget");
        }
        g.x = {ax[0].x, ax[1].x};
        g.weight.assign(n0 * n1, 0.0);
        g.shell.assign(n0 * n1, 0);
        std::array<std::vector<cplx>, 2> phi;
        if (separable) {
            for (int a = 0; a < 2; ++a) {
                std::vector<double> e(d, 0.0);
                phi[a].resize(ax[a].size());
                for (std::size_t i = 0; i < ax[a].size(); ++i) {
                    e[equal_[a]] = ax[a].x[i];
                    phi[a][i] = model_.log_psi(e);
                }
            }
        }
        std::vector<double> y(d, 0.0);
        for (std::size_t i0 = 0; i0 < n0; ++i0) {
            const bool s0 = std::abs(ax[0].x[i0]) >= 0.5 * radii_[0];
            for (std::size_t i1 = 0; i1 < n1; ++i1) {
                double inv;
                if (separable) {
                    inv = 1.0 / std::norm(phi[0][i0] + phi[1][i1]);
                } else {
                    y[equal_[0]] = ax[0].x[i0];
                    y[equal_[1]] = ax[1].x[i1];
                    inv = 1.0 / std::norm(model_.log_psi(y));
                }
                g.weight[i0 * n1 + i1] = ax[0].w[i0] * ax[1].w[i1] * inv / (kTwoPi * kTwoPi);
                g.shell[i0 * n1 + i1] = (s0 || std::abs(ax[1].x[i1]) >= 0.5 * radii_[1]) ? 1 : 0;
            }
        }
        return n0 * n1;
    };
    node_count_ = fill(hi_, gauss_legendre(10));
    fill(lo_, gauss_legendre(6));
}

void LimitCovariance::build_qmc(const LimitQuadratureConfig& cfg, const QueryScale& scale)
{
    std::vector<int> axes = equal_;
    axes.insert(axes.end(), greater_.begin(), greater_.end());
    if (axes.size() > kPrimes.size()) throw DomainError("too many integration axes");
    const int d = model_.dim();
    std::vector<double> kappa;
    for (int k : equal_) {
        (void)k;
        kappa.push_back(2.0);
    }
    for (int k : greater_) kappa.push_back(std::max(2.0, 1.0 / (2.0 * report_.alphas[k] - 1.0)));
    const double inv_norm = std::pow(kTwoPi, -static_cast<double>(equal_.size()));
    const double scale_len = 1.0 / scale.omega_max;
    rotations_ = std::max(2, cfg.qmc_rotations);
    const std::size_t n = cfg.qmc_points;
    hi_ = Grid{};
    for (int r = 0; r < rotations_; ++r) {
        std::vector<double> shift(axes.size());
        for (std::size_t a = 0; a < axes.size(); ++a) {
            shift[a] = Stream(derive(cfg.qmc_seed, static_cast<std::uint64_t>(r), a)).uniform();
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> y(d, 0.0), coords;
            double w = inv_norm / static_cast<double>(n);
            bool ok = true;
            for (std::size_t a = 0; a < axes.size(); ++a) {
                double u = radical_inverse(i + 1, kPrimes[a]) + shift[a];
                u -= std::floor(u);
                const double v = 2.0 * u - 1.0;
                const double av = std::abs(v);
                if (av <= 0.0 || av >= 1.0) {
                    ok = false;
                    break;
                }
                const double rr = av / (1.0 - av);
                const double s = a < equal_.size() ? scale_len : 1.0;
                y[axes[a]] = std::copysign(s * std::pow(rr, kappa[a]), v);
                w *= 2.0 * s * kappa[a] * std::pow(rr, kappa[a] - 1.0) / ((1.0 - av) * (1.0 - av));
            }
            if (!ok) continue;
            w /= std::norm(model_.log_psi(y));
            if (!std::isfinite(w)) continue;
            for (int k : equal_) coords.push_back(y[k]);
            hi_.points.push_back(std::move(coords));
            hi_.weight.push_back(w);
            hi_.rotation.push_back(static_cast<std::size_t>(r));
        }
    }
    // averaging over rotations
    for (auto& w : hi_.weight) w /= static_cast<double>(rotations_);
    node_count_ = hi_.weight.size();
    radii_.assign(equal_.size(), INFINITY);
}

double LimitCovariance::prefactor(const IntervalBox& A, const IntervalBox& B) const
{
    double f = sigma_x2_;
    for (int k : less_) f *= oriented_overlap(A[k], B[k]);
    for (int k : greater_) f *= (A[k].b - A[k].a) * (B[k].b - B[k].a) / kTwoPi;
    return f;
}

double LimitCovariance::integrate(const Grid& g, const IntervalBox& A, const IntervalBox& B, double* shell_abs,
                                  double* rotation_sd) const
{
    if (shell_abs) *shell_abs = 0.0;
    if (rotation_sd) *rotation_sd = 0.0;
    switch (mode_) {
    case QuadratureMode::Line:
    case QuadratureMode::LineMarginal: {
        const int j = equal_[0];
        const auto& x = g.x[0];
        double sum = 0.0, shell = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double term = g.weight[i] * (interval_kernel(A[j], x[i]) * std::conj(interval_kernel(B[j], x[i]))).real();
            sum += term;
            if (g.shell[i]) shell += std::abs(term);
        }
        if (shell_abs) *shell_abs = shell;
        return sum;
    }
    case QuadratureMode::Tensor: {
        const int j0 = equal_[0], j1 = equal_[1];
        const auto& x0 = g.x[0];
        const auto& x1 = g.x[1];
        std::vector<cplx> k0(x0.size()), k1(x1.size());
        for (std::size_t i = 0; i < x0.size(); ++i) k0[i] = interval_kernel(A[j0], x0[i]) * std::conj(interval_kernel(B[j0], x0[i]));
        for (std::size_t i = 0; i < x1.size(); ++i) k1[i] = interval_kernel(A[j1], x1[i]) * std::conj(interval_kernel(B[j1], x1[i]));
        double sum = 0.0, shell = 0.0;
        const std::size_t n1 = x1.size();
        for (std::size_t i0 = 0; i0 < x0.size(); ++i0) {
            const double* w = g.weight.data() + i0 * n1;
            const std::uint8_t* sh = g.shell.data() + i0 * n1;
            double re = 0.0, im = 0.0, sh_abs = 0.0;
            for (std::size_t i1 = 0; i1 < n1; ++i1) {
                re += w[i1] * k1[i1].real();
                im += w[i1] * k1[i1].imag();
            }
            if (shell_abs) {
                for (std::size_t i1 = 0; i1 < n1; ++i1) {
                    if (sh[i1]) sh_abs += w[i1] * std::abs(k1[i1]);
                }
            }
            sum += k0[i0].real() * re - k0[i0].imag() * im;
            shell += std::abs(k0[i0]) * sh_abs;
        }
        if (shell_abs) *shell_abs = shell;
        return sum;
    }
    case QuadratureMode::QuasiMonteCarlo: {
        std::vector<double> per(static_cast<std::size_t>(rotations_), 0.0);
        for (std::size_t i = 0; i < g.weight.size(); ++i) {
            cplx k = 1.0;
            for (std::size_t a = 0; a < equal_.size(); ++a) {
                const int j = equal_[a];
                k *= interval_kernel(A[j], g.points[i][a]) * std::conj(interval_kernel(B[j], g.points[i][a]));
            }
            per[g.rotation[i]] += g.weight[i] * k.real();
        }
        double sum = 0.0;
        for (double v : per) sum += v;
        if (rotation_sd) {
            // per[r] carries weight 1/rotations; rotation estimates are rotations * per[r]
            const double mean = sum;
            double ss = 0.0;
            for (double v : per) {
                const double e = v * rotations_ - mean;
                ss += e * e;
            }
            *rotation_sd = std::sqrt(ss / (rotations_ - 1) / rotations_);
        }
        return sum;
    }
    }
    return 0.0;
}

Integral LimitCovariance::cov_box(const IntervalBox& A, const IntervalBox& B) const
{
    require_box(report_, A);
    require_box(report_, B);
    const double pre = prefactor(A, B);
    if (pre == 0.0) return {0.0, 0.0};
    for (int j : equal_) {
        if (A[j].a == A[j].b || B[j].a == B[j].b) return {0.0, 0.0};
    }
    double shell = 0.0, sd = 0.0;
    const double hi = integrate(hi_, A, B, &shell, &sd);
    double err;
    if (mode_ == QuadratureMode::QuasiMonteCarlo) {
        err = sd;
    } else {
        const double lo = integrate(lo_, A, B, nullptr, nullptr);
        const double p = *std::min_element(tail_exponent_.begin(), tail_exponent_.end());
        err = std::abs(hi - lo) + shell / (std::pow(2.0, p) - 1.0);
    }
    return {pre * hi, std::abs(pre) * err};
}

Integral LimitCovariance::cov(const std::vector<double>& t, const std::vector<double>& s) const
{
    return cov_box(origin_box(t), origin_box(s));
}

std::vector<double> LimitCovariance::gram(const std::vector<std::vector<double>>& points) const
{
    const std::size_t n = points.size();
    std::vector<double> G(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            const auto A = origin_box(points[a]);
            const auto B = origin_box(points[b]);
            require_box(report_, A);
            require_box(report_, B);
            const double v = prefactor(A, B) * integrate(hi_, A, B, nullptr, nullptr);
            G[a * n + b] = v;
            G[b * n + a] = v;
        }
    }
    return G;
}

Integral cov_W(const RegimeReport& report, const SpectralModel& model, double sigma_x2, const std::vector<double>& t,
               const std::vector<double>& s, const LimitQuadratureConfig& config)
{
    LimitCovariance lc(report, model, sigma_x2, config, QueryScale::from_points({t, s}));
    return lc.cov(t, s);
}

double closed_form_factor(const RegimeReport& report, const SpectralModel& model)
{
    require_valid(report);
    const auto eq = report.axes(AxisClass::Equal);
    const auto gt = report.axes(AxisClass::Greater);
    if (eq.size() != 1) throw DomainError("closed form requires exactly one I_= axis");
    const int d = report.dim();
    const int j = eq[0];
    std::vector<double> e(d, 0.0);
    e[j] = 1.0;
    if (gt.empty()) return 1.0 / std::norm(model.log_psi(e));
    if (gt.size() != 1) throw InternalError("more than one I_> axis");
    const int k = gt[0];
    const double ak = report.alphas[k];
    const double aj = report.alphas[j];
    auto F = [&](double y) {
        std::vector<double> x(d, 0.0);
        x[j] = 1.0;
        x[k] = y;
        return 1.0 / std::norm(model.log_psi(x));
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double e1 = 0.0, e2 = 0.0;
    const double inner = GK::integrate([&](double y) { return F(y) + F(-y); }, 0.0, 1.0, 20, 1e-13, &e1);
    // [1, inf) with y = w^{-c}; homogeneity log psi(e_j + y e_k) = y^{a_k} log psi(y^{-a_k/a_j} e_j + e_k)
    // turns the integrand into c (G(w, +1) + G(w, -1)), bounded at w = 0.
    const double c = 1.0 / (2.0 * ak - 1.0);
    auto G = [&](double w, double sign) {
        std::vector<double> x(d, 0.0);
        x[j] = std::pow(w, c * ak / aj);
        x[k] = sign;
        return 1.0 / std::norm(model.log_psi(x));
    };
    const double outer = GK::integrate([&](double w) { return c * (G(w, 1.0) + G(w, -1.0)); }, 0.0, 1.0, 20, 1e-13, &e2);
    return inner + outer;
}

double closed_form_cov(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                       const std::vector<double>& t, const std::vector<double>& s)
{
    require_valid(report);
    if (static_cast<int>(t.size()) != report.dim() || static_cast<int>(s.size()) != report.dim()) {
        throw DomainError("point dimension does not match the regime");
    }
    const auto eq = report.axes(AxisClass::Equal);
    if (eq.size() != 1) throw DomainError("closed form requires exactly one I_= axis");
    const int j = eq[0];
    const double H = report.alphas[j] * (1.0 - report.q_greater / 2.0) + 0.5;
    double v = sigma_x2;
    for (int k : report.axes(AxisClass::Less)) v *= fbm_cov(0.5, t[k], s[k]);
    for (int k : report.axes(AxisClass::Greater)) v *= t[k] * s[k] / kTwoPi;
    if (v == 0.0) return 0.0;
    return v * closed_form_factor(report, model) * C_H(H) / kTwoPi * fbm_cov(H, t[j], s[j]);
}

Integral var_increment(const RegimeReport& report, const SpectralModel& model, double sigma_x2, int axis, double delta,
                       const std::vector<double>& u, const LimitQuadratureConfig& config)
{
    if (axis < 0 || axis >= report.dim()) throw DomainError("increment axis out of range");
    if (static_cast<int>(u.size()) != report.dim()) throw DomainError("point dimension does not match the regime");
    for (double x : u) {
        if (!(x >= -1.0 && x <= 1.0)) throw DomainError("increment base point must lie in [-1,1]^d");
    }
    IntervalBox A = origin_box(u);
    A[axis] = {u[axis], u[axis] + delta};
    LimitCovariance lc(report, model, sigma_x2, config, QueryScale::from_boxes({A}));
    return lc.cov_box(A, A);
}

ScalingCheck operator_scaling_check(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                                    double lambda, const std::vector<double>& t, const std::vector<double>& s,
                                    const LimitQuadratureConfig& config)
{
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    auto scaled = [&](const std::vector<double>& x) {
        std::vector<double> y(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::pow(lambda, 1.0 / report.alpha_primes[k]) * x[k];
        return y;
    };
    const auto ts = scaled(t), ss = scaled(s);
    LimitCovariance lc(report, model, sigma_x2, config, QueryScale::from_points({t, s, ts, ss}));
    const auto base = lc.cov(t, s);
    const auto big = lc.cov(ts, ss);
    const double factor = std::pow(lambda, 2.0 * report.H);
    ScalingCheck out;
    out.scaled = big.value;
    out.expected = factor * base.value;
    const double denom = std::abs(out.expected) > 0.0 ? std::abs(out.expected) : 1.0;
    out.residual = std::abs(out.scaled - out.expected) / denom;
    out.error = (big.error + factor * base.error) / denom;
    return out;
}

SpectralSynthesizer::SpectralSynthesizer(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                                         const SynthesisConfig& config)
    : report_(report), sigma_x2_(sigma_x2)
{
    require_valid(report);
    if (config.octaves < 1 || config.cells_per_octave < 1) throw ConfigError("synthesis grid needs octaves, cells >= 1");
    const int d = report.dim();
    const GaussRule& rule = gauss_legendre(6);
    // sub-nodes used to integrate |log psi|^{-2} over each cell
    std::vector<std::vector<NodeSet>> sub(d);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) {
        int m = config.octaves;
        if (report.partition[k] == AxisClass::Greater) {
            m = std::min(200, static_cast<int>(std::ceil(config.octaves / (2.0 * report.alphas[k] - 1.0))));
        }
        const bool flat_axis = report.partition[k] == AxisClass::Less;
        AxisCells ax;
        auto add_cell = [&](double a, double b, bool origin) {
            ax.center.push_back(origin ? 0.5 * b : std::sqrt(a * b));
            ax.width.push_back(b - a);
            NodeSet ns;
            if (flat_axis) {
                ns.x.push_back(ax.center.back());
                ns.w.push_back(b - a);
            } else if (origin) {
                ns.add_panels(graded_panels(b, 60, nullptr), rule);
            } else {
                ns.add_panel({a, b}, rule);
            }
            sub[k].push_back(std::move(ns));
        };
        const double base = std::ldexp(1.0, -m);
        add_cell(0.0, base, true);
        const int cells = 2 * m * config.cells_per_octave;
        for (int i = 0; i < cells; ++i) {
            add_cell(base * std::exp2(static_cast<double>(i) / config.cells_per_octave),
                     base * std::exp2(static_cast<double>(i + 1) / config.cells_per_octave), false);
        }
        if (k > 0) {
            // axis 0 spans the positive half-space; the others take both signs
            const std::size_t n = ax.center.size();
            for (std::size_t i = 0; i < n; ++i) {
                ax.center.push_back(-ax.center[i]);
                ax.width.push_back(ax.width[i]);
                NodeSet ns = sub[k][i];
                for (auto& x : ns.x) x = -x;
                sub[k].push_back(std::move(ns));
            }
        }
        shape_.push_back(ax.center.size());
        total *= ax.center.size();
        axes_.push_back(std::move(ax));
    }
    if (total > config.max_cells) {
        throw ResourceError("synthesis grid of " + std::to_string(total) + " cells exceeds the budget");
    }
    cell_weight_.resize(total);
    const double norm = std::pow(kTwoPi, -static_cast<double>(d));
    std::vector<double> y(d, 0.0);
    std::vector<std::size_t> idx(d), pos(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        for (int k = 0; k < d; ++k) {
            idx[k] = rest % shape_[k];
            rest /= shape_[k];
            pos[k] = 0;
        }
        // tensor sum over the cell's sub-nodes
        double mass = 0.0;
        while (true) {
            double w = norm;
            for (int k = 0; k < d; ++k) {
                const NodeSet& ns = sub[k][idx[k]];
                w *= ns.w[pos[k]];
                y[k] = report.partition[k] == AxisClass::Less ? 0.0 : ns.x[pos[k]];
            }
            mass += w / std::norm(model.log_psi(y));
            int k = 0;
            while (k < d && ++pos[k] == sub[k][idx[k]].size()) pos[k++] = 0;
            if (k == d) break;
        }
        cell_weight_[flat] = std::sqrt(mass);
    }
}

std::vector<cplx> SpectralSynthesizer::axis_kernel(int axis, double t) const
{
    const auto& ax = axes_[axis];
    std::vector<cplx> k(ax.center.size());
    if (report_.partition[axis] == AxisClass::Greater) {
        std::fill(k.begin(), k.end(), cplx(t, 0.0));
    } else {
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = interval_kernel({0.0, t}, ax.center[i]);
    }
    return k;
}

namespace {

// Contracts a tensor (axis 0 fastest) with per-axis vectors.
cplx contract(std::vector<cplx> T, const std::vector<std::size_t>& shape, const std::vector<std::vector<cplx>>& kernels)
{
    std::size_t size = T.size();
    for (std::size_t k = 0; k < shape.size(); ++k) {
        const std::size_t n = shape[k];
        const std::size_t outer = size / n;
        for (std::size_t o = 0; o < outer; ++o) {
            cplx acc = 0.0;
            const cplx* row = T.data() + o * n;
            for (std::size_t i = 0; i < n; ++i) acc += row[i] * kernels[k][i];
            T[o] = acc;
        }
        size = outer;
    }
    return T[0];
}

} // namespace

std::vector<double> SpectralSynthesizer::realize(const std::vector<std::vector<double>>& t_grid, std::uint64_t seed,
                                                 std::uint64_t realization) const
{
    const int d = report_.dim();
    Stream rng(derive(derive(seed, static_cast<std::uint64_t>(StreamDomain::Synthesis)), realization));
    std::vector<cplx> Z(cell_weight_.size());
    for (std::size_t i = 0; i < Z.size(); ++i) {
        const auto [a, b] = rng.normal_pair();
        Z[i] = cplx(a, b) * (cell_weight_[i] * std::numbers::sqrt2 / 2.0);
    }
    const double sx = std::sqrt(sigma_x2_);
    std::vector<double> out;
    out.reserve(t_grid.size());
    for (const auto& t : t_grid) {
        if (static_cast<int>(t.size()) != d) throw DomainError("point dimension does not match the regime");
        bool zero = false;
        for (double x : t) zero = zero || x == 0.0;
        if (zero) {
            out.push_back(0.0);
            continue;
        }
        std::vector<std::vector<cplx>> kernels;
        for (int k = 0; k < d; ++k) kernels.push_back(axis_kernel(k, t[k]));
        out.push_back(2.0 * sx * contract(Z, shape_, kernels).real());
    }
    return out;
}

double SpectralSynthesizer::grid_cov(const std::vector<double>& t, const std::vector<double>& s) const
{
    const int d = report_.dim();
    std::vector<std::vector<cplx>> kt, ks;
    for (int k = 0; k < d; ++k) {
        kt.push_back(axis_kernel(k, t[k]));
        ks.push_back(axis_kernel(k, s[k]));
    }
    double sum = 0.0;
    for (std::size_t flat = 0; flat < cell_weight_.size(); ++flat) {
        std::size_t rest = flat;
        cplx f = 1.0;
        for (int k = 0; k < d; ++k) {
            const std::size_t i = rest % shape_[k];
            rest /= shape_[k];
            f *= kt[k][i] * std::conj(ks[k][i]);
        }
        sum += 2.0 * cell_weight_[flat] * cell_weight_[flat] * f.real();
    }
    return sigma_x2_ * sum;
}

SynthesisResult synthesize_W(const RegimeReport& report, const SpectralModel& model, double sigma_x2,
                             const std::vector<std::vector<double>>& t_grid, const SynthesisConfig& grid,
                             std::uint64_t seed, std::size_t realizations, unsigned workers,
                             const LimitQuadratureConfig& quad)
{
    SpectralSynthesizer syn(report, model, sigma_x2, grid);
    SynthesisResult res;
    res.t_grid = t_grid;
    res.realizations = realizations;
    const std::size_t m = t_grid.size();
    res.values.assign(realizations * m, 0.0);
    parallel_for(realizations, workers, [&](std::size_t r) {
        const auto v = syn.realize(t_grid, seed, r);
        std::copy(v.begin(), v.end(), res.values.begin() + static_cast<std::ptrdiff_t>(r * m));
    });
    LimitCovariance lc(report, model, sigma_x2, quad, QueryScale::from_points(t_grid));
    for (const auto& t : t_grid) {
        res.grid_var.push_back(syn.grid_cov(t, t));
        res.target_var.push_back(lc.cov(t, t).value);
        const double target = res.target_var.back();
        if (target > 0.0 && std::abs(res.grid_var.back() - target) > 0.05 * target) {
            res.warnings.push_back("synthesis grid variance deviates from the target by more than 5% at a grid point");
        }
    }
    std::sort(res.warnings.begin(), res.warnings.end());
    res.warnings.erase(std::unique(res.warnings.begin(), res.warnings.end()), res.warnings.end());
    return res;
}

} // namespace osgrf
