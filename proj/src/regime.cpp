#include "osgrf/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "osgrf/errors.hpp"

namespace osgrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool near(double a, double b, double eps) { return std::abs(a - b) <= eps * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace

std::string to_string(AxisClass c)
{
    switch (c) {
    case AxisClass::Less: return "LESS";
    case AxisClass::Equal: return "EQUAL";
    case AxisClass::Greater: return "GREATER";
    }
    return "?";
}

std::string to_string(IncrementClass c)
{
    switch (c) {
    case IncrementClass::Independent: return "INDEPENDENT";
    case IncrementClass::Invariant: return "INVARIANT";
    case IncrementClass::LongRange: return "LONG_RANGE";
    }
    return "?";
}

std::string to_string(SheetCase c)
{
    switch (c) {
    case SheetCase::I: return "i";
    case SheetCase::II: return "ii";
    case SheetCase::III: return "iii";
    case SheetCase::IV: return "iv";
    }
    return "?";
}

std::vector<int> RegimeReport::axes(AxisClass c) const
{
    std::vector<int> out;
    for (int k = 0; k < dim(); ++k) {
        if (partition[static_cast<std::size_t>(k)] == c) out.push_back(k);
    }
    return out;
}

RegimeReport classify(const std::vector<double>& alphas, const std::vector<double>& alpha_primes,
                      const RegimeOptions& options)
{
    if (alphas.empty() || alphas.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ConfigError("dimension must be between 1 and " + std::to_string(kMaxDim));
    }
    if (alpha_primes.size() != alphas.size()) throw ConfigError("alpha and alpha-prime must have the same length");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("every alpha must lie in (0,1)");
    }
    for (double a : alpha_primes) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("every alpha-prime must be positive");
    }
    const double eps = options.tie_epsilon;
    const int d = static_cast<int>(alphas.size());
    RegimeReport r;
    r.alphas = alphas;
    r.alpha_primes = alpha_primes;
    for (int k = 0; k < d; ++k) {
        r.rhos.push_back(alphas[k] / alpha_primes[k]);
        r.qE += 1.0 / alphas[k];
        r.qE_prime += 1.0 / alpha_primes[k];
    }

    if (d == 1 && !(alphas[0] < 0.5)) {
        r.valid = false;
        r.reasons.push_back("α_1 < 1/2 required for d=1");
    }
    if (!(r.qE > 2.0 + eps)) {
        r.valid = false;
        r.reasons.push_back("q(E) > 2 required");
        r.gamma0 = kNaN;
        r.H = kNaN;
        r.q_greater = kNaN;
        r.q_geq = kNaN;
        r.qE_doubleprime = kNaN;
        return r;
    }

    // gamma0: smallest candidate rho satisfying both defining sums
    std::vector<double> candidates = r.rhos;
    std::sort(candidates.begin(), candidates.end());
    bool found = false;
    for (double g : candidates) {
        double geq = 0.0, gt = 0.0;
        for (int k = 0; k < d; ++k) {
            const double rho = r.rhos[static_cast<std::size_t>(k)];
            const bool tie = near(g, rho, eps);
            if (tie || g > rho) geq += 1.0 / alphas[k];
            if (!tie && g > rho) gt += 1.0 / alphas[k];
            if (tie && g != rho) r.warnings.push_back("tie between rho values resolved with tolerance");
        }
        if (near(geq, 2.0, 1e-9) || near(gt, 2.0, 1e-9)) {
            r.warnings.push_back("defining sum for gamma0 lies on the boundary 2");
        }
        if (geq > 2.0 + eps && gt <= 2.0 + eps) {
            r.gamma0 = g;
            found = true;
            break;
        }
    }
    if (!found) throw InternalError("no candidate satisfies the gamma0 defining property although q(E) > 2");

    for (int k = 0; k < d; ++k) {
        const double rho = r.rhos[static_cast<std::size_t>(k)];
        AxisClass c = near(r.gamma0, rho, eps) ? AxisClass::Equal : (r.gamma0 < rho ? AxisClass::Less : AxisClass::Greater);
        r.partition.push_back(c);
        const double gk = std::max(r.gamma0 / rho, 1.0);
        const double epp = gk / alpha_primes[k];
        r.e_doubleprime.push_back(epp);
        r.qE_doubleprime += epp;
        if (c == AxisClass::Greater) r.q_greater += 1.0 / alphas[k];
        if (c != AxisClass::Less) r.q_geq += 1.0 / alphas[k];
        r.increment_class.push_back(c == AxisClass::Greater ? IncrementClass::Invariant
                                    : c == AxisClass::Less  ? IncrementClass::Independent
                                                            : IncrementClass::LongRange);
    }
    std::sort(r.warnings.begin(), r.warnings.end());
    r.warnings.erase(std::unique(r.warnings.begin(), r.warnings.end()), r.warnings.end());
    r.H = r.gamma0 + r.qE_prime - r.qE_doubleprime / 2.0;
    r.is_critical = std::all_of(r.partition.begin(), r.partition.end(), [](AxisClass c) { return c == AxisClass::Equal; });

    if (near(r.q_greater, 2.0, eps)) {
        r.valid = false;
        r.reasons.push_back("q(π_>E) = 2: boundary case not covered");
    } else if (r.q_greater > 2.0) {
        r.valid = false;
        r.reasons.push_back("q(π_>E) < 2 required");
    }

    const FbsResult fbs = fbs_detect(r);
    r.is_fbs = fbs.is_fbs;
    r.hurst = fbs.hurst;
    const HolderResult h = holder_exponents(r, options.boundary_holder);
    r.holder = h.exponents;
    r.holder_boundary = h.boundary_flag;
    return r;
}

FbsResult fbs_detect(const RegimeReport& report)
{
    FbsResult out;
    const auto eq = report.axes(AxisClass::Equal);
    const auto gt = report.axes(AxisClass::Greater);
    out.is_fbs = eq.size() == 1;
    if (!out.is_fbs) return out;
    std::vector<double> h(static_cast<std::size_t>(report.dim()));
    for (int k = 0; k < report.dim(); ++k) {
        const double a = report.alphas[static_cast<std::size_t>(k)];
        switch (report.partition[static_cast<std::size_t>(k)]) {
        case AxisClass::Less: h[k] = 0.5; break;
        case AxisClass::Greater: h[k] = 1.0; break;
        case AxisClass::Equal:
            if (!gt.empty()) {
                h[k] = a * (1.0 - 1.0 / (2.0 * report.alphas[static_cast<std::size_t>(gt[0])])) + 0.5;
            } else {
                h[k] = a < 0.5 ? a + 0.5 : 1.0;
            }
            break;
        }
    }
    out.hurst = std::move(h);
    return out;
}

HolderResult holder_exponents(const RegimeReport& report, double boundary_value)
{
    HolderResult out;
    const bool no_greater = report.axes(AxisClass::Greater).empty();
    for (int k = 0; k < report.dim(); ++k) {
        const double a = report.alphas[static_cast<std::size_t>(k)];
        switch (report.partition[static_cast<std::size_t>(k)]) {
        case AxisClass::Less: out.exponents.push_back(0.5); break;
        case AxisClass::Greater: out.exponents.push_back(1.0); break;
        case AxisClass::Equal:
            if (!no_greater || a < 0.5) {
                out.exponents.push_back(a * (1.0 - report.q_greater / 2.0) + 0.5);
            } else if (a == 0.5) {
                out.exponents.push_back(boundary_value);
                out.boundary_flag = true;
            } else {
                out.exponents.push_back(1.0);
            }
            break;
        }
    }
    return out;
}

SheetCaseResult sheet_case(double a1, double a2, double a2p)
{
    for (double a : {a1, a2}) {
        if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha_1 and alpha_2 must lie in (0,1)");
    }
    if (!(a2p > 0.0)) throw DomainError("alpha_2' must be positive");
    if (a2 == a2p) throw DomainError("alpha_2 = alpha_2' is the critical regime, not covered by the four cases");
    SheetCaseResult r;
    if (a2p > a2) {
        if (a2 == 0.5) throw DomainError("alpha_2 = 1/2 lies on the boundary between cases (i) and (ii)");
        if (a2 < 0.5) {
            r.case_id = SheetCase::I;
            r.beta = a2 / a2p + 0.5 * (1.0 / a1 + 1.0 / a2p);
            r.H1 = 0.5;
            r.H2 = 0.5 + a2;
            r.sigma2_formula = "C_H2*|logpsi(0,1)|^-2";
        } else {
            r.case_id = SheetCase::II;
            r.beta = 1.0 + 1.0 / (2.0 * a1) + 1.0 / a2p - 1.0 / (2.0 * a2);
            r.H1 = 0.5 + a1 * (1.0 - 1.0 / (2.0 * a2));
            r.H2 = 1.0;
            r.sigma2_formula = "C_H1*int|logpsi(1,y)|^-2dy";
        }
    } else {
        if (a1 == 0.5) throw DomainError("alpha_1 = 1/2 lies on the boundary between cases (iii) and (iv)");
        if (a1 < 0.5) {
            r.case_id = SheetCase::III;
            r.beta = 1.0 + 0.5 * (1.0 / a1 + 1.0 / a2p);
            r.H1 = 0.5 + a1;
            r.H2 = 0.5;
            r.sigma2_formula = "C_H1*|logpsi(1,0)|^-2";
        } else {
            r.case_id = SheetCase::IV;
            r.beta = (a2 / a2p) * (1.0 - 1.0 / (2.0 * a1)) + 1.0 / a1 + 1.0 / (2.0 * a2p);
            r.H1 = 1.0;
            r.H2 = 0.5 + a2 * (1.0 - 1.0 / (2.0 * a1));
            r.sigma2_formula = "C_H2*int|logpsi(y,1)|^-2dy";
        }
    }
    return r;
}

} // namespace osgrf
