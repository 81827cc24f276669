#pragma once

// Scaling regime of the pair (E, E') with E = diag(1/alpha_k), E' = diag(1/alpha'_k).

#include <optional>
#include <string>
#include <vector>

#include "osgrf/spectral_model.hpp"

namespace osgrf {

enum class AxisClass { Less, Equal, Greater };
enum class IncrementClass { Independent, Invariant, LongRange };

std::string to_string(AxisClass c);
std::string to_string(IncrementClass c);

struct RegimeOptions {
    double tie_epsilon = 1e-12;
    // exponent reported for an I_= axis with alpha_j = 1/2 and I_> empty
    double boundary_holder = 1.0 - 1e-3;
};

struct RegimeReport {
    std::vector<double> alphas;
    std::vector<double> alpha_primes;
    std::vector<double> rhos;
    double gamma0 = 0.0;
    std::vector<AxisClass> partition;
    std::vector<double> e_doubleprime; // diagonal of E''
    double H = 0.0;
    double qE = 0.0;
    double qE_prime = 0.0;
    double qE_doubleprime = 0.0;
    double q_greater = 0.0; // q(pi_> E)
    double q_geq = 0.0;     // q(pi_>= E)
    bool valid = true;
    std::vector<std::string> reasons;
    std::vector<std::string> warnings;
    bool is_critical = false;
    bool is_fbs = false;
    std::optional<std::vector<double>> hurst;
    std::vector<double> holder;
    bool holder_boundary = false; // some axis used the configurable boundary exponent
    std::vector<IncrementClass> increment_class;

    int dim() const noexcept { return static_cast<int>(alphas.size()); }
    std::vector<int> axes(AxisClass c) const;
};

RegimeReport classify(const std::vector<double>& alphas, const std::vector<double>& alpha_primes,
                      const RegimeOptions& options = {});

struct FbsResult {
    bool is_fbs = false;
    std::optional<std::vector<double>> hurst;
};

FbsResult fbs_detect(const RegimeReport& report);

struct HolderResult {
    std::vector<double> exponents;
    bool boundary_flag = false;
};

HolderResult holder_exponents(const RegimeReport& report, double boundary_value = 1.0 - 1e-3);

enum class SheetCase { I, II, III, IV };
std::string to_string(SheetCase c);

struct SheetCaseResult {
    SheetCase case_id = SheetCase::I;
    double beta = 0.0;
    double H1 = 0.0;
    double H2 = 0.0;
    // Which constant multiplies the sheet covariance:
    //   "C_H2*|logpsi(0,1)|^-2", "C_H1*int|logpsi(1,y)|^-2dy",
    //   "C_H1*|logpsi(1,0)|^-2", "C_H2*int|logpsi(y,1)|^-2dy"
    std::string sigma2_formula;
};

// d = 2 with alpha'_1 = alpha_1; closed forms of the four cases.
SheetCaseResult sheet_case(double alpha1, double alpha2, double alpha2_prime);

} // namespace osgrf
