#include "osgrf/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "osgrf/errors.hpp"

namespace osgrf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPolylogTerms = 90;
constexpr std::int64_t kStepCap = std::int64_t{1} << 62;

double axis_tail_pareto(double alpha, std::int64_t n)
{
    if (n <= 1) return 1.0;
    return std::pow(static_cast<double>(n), -alpha);
}

double axis_pmf_pareto(double alpha, std::int64_t n)
{
    if (n < 1) return 0.0;
    // n^{-a} - (n+1)^{-a} = n^{-a} (1 - (1 + 1/n)^{-a}), the second factor via expm1
    const double x = static_cast<double>(n);
    return std::pow(x, -alpha) * -std::expm1(-alpha * std::log1p(1.0 / x));
}

std::int64_t gcd_nonneg(std::int64_t a, std::int64_t b) { return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b); }

} // namespace

double ExponentMatrix::trace() const noexcept
{
    double q = 0.0;
    for (double a : alphas) q += 1.0 / a;
    return q;
}

void ExponentMatrix::validate() const
{
    if (alphas.empty() || alphas.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ConfigError("dimension must be between 1 and " + std::to_string(kMaxDim));
    }
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("every alpha must lie in (0,1), got " + std::to_string(a));
    }
}

std::string to_string(StepFamily f)
{
    return f == StepFamily::ProductPareto ? "product-pareto" : "custom-pmf";
}

StepFamily step_family_from_string(const std::string& s)
{
    if (s == "product-pareto") return StepFamily::ProductPareto;
    if (s == "custom-pmf") return StepFamily::CustomPmf;
    throw ConfigError("unknown model family '" + s + "'");
}

double calibrated_gamma(double alpha)
{
    return std::tgamma(1.0 - alpha) * std::cos(kPi * alpha / 2.0);
}

std::int64_t pareto_step(double alpha, double u)
{
    const double z = std::pow(u, -1.0 / alpha);
    if (!(z < static_cast<double>(kStepCap))) return kStepCap;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(z)));
}

ParetoAxisTransform::ParetoAxisTransform(double alpha)
    : alpha_(alpha), gamma_one_minus_s_(std::tgamma(1.0 - alpha))
{
    zeta_coeffs_.resize(kPolylogTerms);
    double inv_fact = 1.0;
    for (int k = 0; k < kPolylogTerms; ++k) {
        if (k > 0) inv_fact /= k;
        zeta_coeffs_[static_cast<std::size_t>(k)] = boost::math::zeta(alpha - k) * inv_fact;
    }
}

// Li_s(e^{i theta}) for 0 < theta <= pi.
std::complex<double> ParetoAxisTransform::polylog(double theta) const
{
    const std::complex<double> mu(0.0, theta);
    std::complex<double> sum = gamma_one_minus_s_ * std::pow(-mu, alpha_ - 1.0);
    std::complex<double> mu_k(1.0, 0.0);
    for (int k = 0; k < kPolylogTerms; ++k) {
        const std::complex<double> term = zeta_coeffs_[static_cast<std::size_t>(k)] * mu_k;
        sum += term;
        if (k > 4 && std::abs(term) < 1e-18 * std::abs(sum)) break;
        mu_k *= mu;
    }
    return sum;
}

// P(x) = 1 + (1 - e^{-ix}) Li_alpha(e^{ix}).
std::complex<double> ParetoAxisTransform::one_minus_P(double x) const
{
    double theta = std::remainder(x, 2.0 * kPi);
    if (theta == 0.0) return {0.0, 0.0};
    const bool negative = theta < 0.0;
    theta = std::abs(theta);
    const double h = std::sin(0.5 * theta);
    const std::complex<double> factor(2.0 * h * h, std::sin(theta)); // 1 - e^{-i theta}
    const std::complex<double> value = -factor * polylog(theta);
    return negative ? std::conj(value) : value;
}

std::complex<double> product_log_psi(std::span<const double> alphas, std::span<const double> gammas,
                                     std::span<const double> x)
{
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const double xk = x[k];
        if (xk == 0.0) continue;
        const double a = alphas[k];
        const double mag = gammas[k] * std::pow(std::abs(xk), a);
        const double sgn = xk > 0.0 ? 1.0 : -1.0;
        acc -= std::complex<double>(mag, -mag * sgn * std::tan(kPi * a / 2.0));
    }
    return acc;
}

void SpectralModel::validate_common() const
{
    exponent_.validate();
    if (gammas_.size() != exponent_.alphas.size()) throw ConfigError("gammas must have one entry per axis");
    for (double g : gammas_) {
        if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("gammas must be positive");
    }
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw ConfigError("p must lie in [0,1]");
}

SpectralModel SpectralModel::product_pareto(std::vector<double> alphas, double p, std::vector<double> gammas)
{
    SpectralModel m;
    m.exponent_.alphas = std::move(alphas);
    m.exponent_.validate();
    if (gammas.empty()) {
        for (double a : m.exponent_.alphas) gammas.push_back(calibrated_gamma(a));
    }
    m.gammas_ = std::move(gammas);
    m.p_ = p;
    m.family_ = StepFamily::ProductPareto;
    m.validate_common();
    for (double a : m.exponent_.alphas) m.axis_transforms_.emplace_back(a);
    return m;
}

SpectralModel SpectralModel::custom(std::vector<double> alphas, std::vector<double> gammas,
                                    std::vector<PmfEntry> table, double p, LogPsiEvaluator evaluator)
{
    SpectralModel m;
    m.exponent_.alphas = std::move(alphas);
    m.exponent_.validate();
    if (gammas.empty()) {
        for (double a : m.exponent_.alphas) gammas.push_back(calibrated_gamma(a));
    }
    m.gammas_ = std::move(gammas);
    m.p_ = p;
    m.family_ = StepFamily::CustomPmf;
    m.evaluator_ = std::move(evaluator);
    m.validate_common();
    if (table.empty()) throw ConfigError("custom pmf table is empty");

    const int d = m.dim();
    std::sort(table.begin(), table.end(), [](const PmfEntry& a, const PmfEntry& b) { return colex_less(a.k, b.k); });
    double total = 0.0;
    std::vector<std::int64_t> gcds(static_cast<std::size_t>(d), 0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& e = table[i];
        if (i > 0 && e.k == table[i - 1].k) throw ConfigError("duplicate point in pmf table");
        if (!(e.prob >= 0.0)) throw ConfigError("negative probability in pmf table");
        for (int a = 0; a < kMaxDim; ++a) {
            if (a < d && e.k[a] < 1) throw ConfigError("pmf support must lie in N*^d");
            if (a >= d && e.k[a] != 0) throw ConfigError("pmf point has more coordinates than the dimension");
        }
        for (int a = 0; a < d; ++a) {
            m.support_extent_ = std::max(m.support_extent_, e.k[a]);
            if (e.prob > 0.0) gcds[a] = gcd_nonneg(gcds[a], e.k[a]);
        }
        total += e.prob;
        m.table_cdf_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("pmf table must sum to 1 (sum = " + std::to_string(total) + ")");
    m.aperiodic_ = std::all_of(gcds.begin(), gcds.end(), [](std::int64_t g) { return g == 1; });
    m.table_ = std::move(table);
    return m;
}

SpectralModel SpectralModel::with_p(double p) const
{
    SpectralModel m = *this;
    m.p_ = p;
    m.validate_common();
    return m;
}

SpectralModel SpectralModel::with_gammas(std::vector<double> gammas) const
{
    SpectralModel m = *this;
    m.gammas_ = std::move(gammas);
    m.validate_common();
    return m;
}

std::complex<double> SpectralModel::log_psi(std::span<const double> x) const
{
    if (evaluator_) return evaluator_(x);
    return product_log_psi(exponent_.alphas, gammas_, x.first(static_cast<std::size_t>(dim())));
}

double SpectralModel::pmf(const LatticePoint& k) const
{
    const int d = dim();
    for (int a = 0; a < d; ++a) {
        if (k[a] < 1) throw DomainError("pmf argument outside N*^d");
    }
    if (family_ == StepFamily::ProductPareto) {
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= axis_pmf_pareto(exponent_.alphas[a], k[a]);
        return v;
    }
    auto it = std::lower_bound(table_.begin(), table_.end(), k,
                               [](const PmfEntry& e, const LatticePoint& p) { return colex_less(e.k, p); });
    return (it != table_.end() && it->k == k) ? it->prob : 0.0;
}

double SpectralModel::axis_pmf(int axis, std::int64_t n) const
{
    if (family_ != StepFamily::ProductPareto) throw DomainError("axis_pmf requires a product model");
    return axis_pmf_pareto(exponent_.alphas.at(static_cast<std::size_t>(axis)), n);
}

double SpectralModel::axis_tail(int axis, std::int64_t n) const
{
    if (family_ != StepFamily::ProductPareto) throw DomainError("axis_tail requires a product model");
    return axis_tail_pareto(exponent_.alphas.at(static_cast<std::size_t>(axis)), n);
}

LatticePoint SpectralModel::sample_step(Stream& rng) const
{
    LatticePoint z{};
    if (family_ == StepFamily::ProductPareto) {
        for (int a = 0; a < dim(); ++a) z[a] = pareto_step(exponent_.alphas[a], rng.uniform());
        return z;
    }
    const double u = rng.uniform() * table_cdf_.back();
    auto it = std::lower_bound(table_cdf_.begin(), table_cdf_.end(), u);
    if (it == table_cdf_.end()) --it;
    return table_[static_cast<std::size_t>(it - table_cdf_.begin())].k;
}

double SpectralModel::tail_mass_outside_box(std::int64_t n) const
{
    const int d = dim();
    if (family_ == StepFamily::ProductPareto) {
        // 1 - prod(1 - t_k), accumulated without cancellation
        double r = 0.0;
        for (int a = 0; a < d; ++a) {
            const double t = axis_tail_pareto(exponent_.alphas[a], n + 1);
            r = r + t - r * t;
        }
        return r;
    }
    double outside = 0.0;
    for (const auto& e : table_) {
        for (int a = 0; a < d; ++a) {
            if (e.k[a] > n) {
                outside += e.prob;
                break;
            }
        }
    }
    return outside;
}

std::int64_t SpectralModel::truncation_for_tail(double target, std::int64_t cap) const
{
    if (tail_mass_outside_box(cap) >= target) return cap;
    std::int64_t lo = 1, hi = cap;
    if (tail_mass_outside_box(lo) < target) return lo;
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (tail_mass_outside_box(mid) < target) hi = mid;
        else lo = mid;
    }
    return hi;
}

FourierSum SpectralModel::fourier_P(std::span<const double> x, std::int64_t truncation) const
{
    if (truncation < 1) throw DomainError("fourier_P truncation must be >= 1");
    const int d = dim();
    FourierSum out;
    out.neglected_mass = tail_mass_outside_box(truncation);
    if (family_ == StepFamily::ProductPareto) {
        std::complex<double> prod(1.0, 0.0);
        for (int a = 0; a < d; ++a) {
            std::complex<double> s(0.0, 0.0);
            const std::complex<double> step = std::polar(1.0, x[a]);
            std::complex<double> w = step;
            for (std::int64_t n = 1; n <= truncation; ++n) {
                s += axis_pmf_pareto(exponent_.alphas[a], n) * w;
                if ((n & 1023) == 0) w = std::polar(1.0, x[a] * static_cast<double>(n + 1));
                else w *= step;
            }
            prod *= s;
        }
        out.value = prod;
        return out;
    }
    std::complex<double> s(0.0, 0.0);
    for (const auto& e : table_) {
        bool inside = true;
        double phase = 0.0;
        for (int a = 0; a < d; ++a) {
            if (e.k[a] > truncation) inside = false;
            phase += x[a] * static_cast<double>(e.k[a]);
        }
        if (inside) s += e.prob * std::polar(1.0, phase);
    }
    out.value = s;
    return out;
}

std::complex<double> SpectralModel::one_minus_P_truncated(std::span<const double> x, std::int64_t truncation) const
{
    const FourierSum f = fourier_P(x, truncation);
    return (1.0 - f.neglected_mass) - f.value;
}

std::complex<double> SpectralModel::one_minus_P(std::span<const double> x) const
{
    const int d = dim();
    if (family_ == StepFamily::ProductPareto) {
        // 1 - prod(1 - a_k) folded as r + a - r a
        std::complex<double> r(0.0, 0.0);
        for (int a = 0; a < d; ++a) {
            const std::complex<double> ak = axis_transforms_[static_cast<std::size_t>(a)].one_minus_P(x[a]);
            r = r + ak - r * ak;
        }
        return r;
    }
    std::complex<double> s(0.0, 0.0);
    for (const auto& e : table_) {
        double phase = 0.0;
        for (int a = 0; a < d; ++a) phase += x[a] * static_cast<double>(e.k[a]);
        // 1 - e^{i phase} = -2i sin(phase/2) e^{i phase/2}
        const double h = 0.5 * phase;
        s += e.prob * std::complex<double>(2.0 * std::sin(h) * std::sin(h), -std::sin(phase));
    }
    return s;
}

GRatioTable g_ratio_check(const SpectralModel& model, const std::vector<std::vector<double>>& directions,
                          const std::vector<double>& scales, double tolerance)
{
    const int d = model.dim();
    GRatioTable table;
    table.tolerance = tolerance;
    for (std::size_t i = 1; i < scales.size(); ++i) {
        if (!(scales[i] > scales[i - 1])) throw DomainError("scales must be increasing");
    }
    table.monotone = true;
    table.calibrated = !scales.empty() && !directions.empty();
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t di = 0; di < directions.size(); ++di) {
        const auto& theta = directions[di];
        if (static_cast<int>(theta.size()) != d) throw DomainError("direction has wrong dimension");
        double prev_gap = INFINITY;
        for (double t : scales) {
            for (int a = 0; a < d; ++a) x[a] = std::pow(t, -model.exponent().entry(a)) * theta[a];
            const double num = std::abs(model.one_minus_P(x));
            const double den = std::abs(model.log_psi(x));
            const double ratio = num / den;
            table.rows.push_back({di, t, ratio});
            const double gap = std::abs(ratio - 1.0);
            if (gap > prev_gap + 1e-12) table.monotone = false;
            prev_gap = gap;
        }
        if (!(prev_gap <= tolerance)) table.calibrated = false;
    }
    return table;
}

bool local_integrability_flag(const ExponentMatrix& exponent, double p)
{
    if (!(p > 0.0)) throw DomainError("p must be positive");
    return exponent.trace() > p;
}

} // namespace osgrf
