#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cwp/bcwp.hpp"
#include "cwp/rational.hpp"

namespace cwp {

// (psi,mu)-bcwp: metric psi^{2 mu} g_B + psi^2 g_F with one positive base
// function psi and a real exponent mu.
struct SbcwpParams {
    int m = 1;   // base dimension, >= 1
    int k = 0;   // fiber dimension, >= 0
    double mu = 0.0;
};

// One (zeta, eta) pair and its reduced coefficients; alpha = zeta/eta and
// beta = zeta^2/eta exist exactly when both are nonzero.
template <typename T>
struct CoefficientPair {
    T zeta{};
    T eta{};
    bool valid = false;
    T alpha{};
    T beta{};
};

template <typename T>
struct CoefficientSet {
    CoefficientPair<T> scalar; // scalar-curvature relation
    CoefficientPair<T> hess;   // Hessian family of the Ricci relation
    CoefficientPair<T> lap;    // Laplacian family of the Ricci relation
    CoefficientPair<T> trace;  // g_B-trace of the Ricci relation
    T p{};                     // 2 mu alpha + 1 (scalar pair)
    T q{};                     // p - 2 alpha
    bool pq_valid = false;
    bool near_exceptional = false; // double mode: mu within 1e-9 of an exceptional value
};

// Closed forms, any m >= 1, k >= 0:
//   zeta   = 2[k + (m-1)mu]
//   eta    = (m-1)(m-2)mu^2 + 2(m-2)k mu + (k+1)k
//   zeta^H = -[(m-2)mu + k]        eta^H = mu[(m-2)mu + k] + k(mu - 1)
//   zeta^D = mu                    eta^D = mu[(m-2)mu + k]
//   zeta_tr = zeta^H - m zeta^D    eta_tr = eta^H - m eta^D
template <typename T>
CoefficientSet<T> coefficient_set(int m, int k, const T& mu);

CoefficientSet<Rational> coefficients_exact(int m, int k, const Rational& mu);
CoefficientSet<double> coefficients(const SbcwpParams& p);

// Parameter values at which a zeta or eta coefficient vanishes.
struct ExceptionalSet {
    // Ricci relation: always 0 and 1, plus per dimension regime
    //   m >= 3: mu_bar = -k/(m-2) and mu_bar_pm = mu_bar -+ sqrt(mu_bar^2 - mu_bar)
    //   m = 2 : 1/2
    //   m = 1 : k and k -+ sqrt(k^2 - k)
    std::vector<double> ricci;
    std::optional<Rational> mu_bar;        // m >= 3 only
    std::optional<QuadExt> mu_bar_plus;    // root with + radical sign
    std::optional<QuadExt> mu_bar_minus;
    // Scalar relation: -k/(m-1) for m >= 2, (k+1)/2 for m = 1.
    Rational scalar_exceptional;
    // Scalar-relation values where the reduced u-form is replaced by a
    // dedicated branch (the u-form itself stays valid at 0 and 1).
};

ExceptionalSet exceptional_mus(int m, int k);

// Errata channel: known cells where a published coefficient table disagrees
// with the closed forms. The independent rational route is authoritative.
std::optional<std::string> published_value_note(int m, int k, const Rational& mu);

bool is_scalar_exceptional(int m, int k, double mu, double tol = 1e-9);

// ---- residual evaluation against the grid oracle ---------------------------

BcwpSpec make_sbcwp(const MetricField& base, const MetricField& fiber, const ScalarField& psi,
                    double mu);

struct RicciResidual {
    double base_unreduced = 0.0; // max |formula - oracle| over the base block
    double fiber_unreduced = 0.0;
    double mixed = 0.0;          // max |oracle| over the mixed block
    bool reduced_valid = false;
    double base_reduced = 0.0;
    double fiber_reduced = 0.0;
    double forms_agreement = 0.0; // max |unreduced formula - reduced formula|
};

// Evaluates the always-valid unreduced Ricci system and, when mu is not
// Ricci-exceptional, the reduced (alpha,beta) form, against the oracle Ricci
// of the assembled product.
RicciResidual ricci_residual(const MetricField& base, const MetricField& fiber,
                             const ScalarField& psi, double mu, int order = 2);
// Fiber known to be Einstein with constant nu (Ric_F = nu g_F).
RicciResidual ricci_residual_einstein_fiber(const MetricField& base, const MetricField& fiber,
                                            double nu, const ScalarField& psi, double mu,
                                            int order = 2);

enum class ScalarBranch {
    ReducedU,         // -beta Lap u + S_B u = S u^p - S_F u^q, u = psi^{1/alpha}
    ZetaEtaSpecial,   // m >= 2, mu = -k/(m-1)
    M1HalfK1,         // m = 1, mu = (k+1)/2, k > 1
    M1K1Mu1,          // m = 1, k = 1, mu = 1
};

std::string branch_name(ScalarBranch b);
ScalarBranch select_scalar_branch(int m, int k, double mu);

struct ScalarResidual {
    ScalarBranch branch;
    double max_branch_residual = 0.0;   // selected-branch equation
    double max_zeta_eta_residual = 0.0; // universal psi-form
    ScalarField branch_residual;        // on the base grid
    ScalarField zeta_eta_residual;
};

// S may be supplied externally (base-grid field); S_F must be a constant for
// the reduced branch (the relation separates variables only then).
ScalarResidual scalar_residual(const MetricField& base, int k, double SF, const ScalarField& psi,
                               double mu, const ScalarField& S, int order = 2);

// Oracle S of the assembled (psi,mu)-bcwp restricted to the base grid
// (central fiber slice; exact when S_F is constant).
ScalarField oracle_scalar_on_base(const MetricField& base, const MetricField& fiber,
                                  const ScalarField& psi, double mu, int order = 2);

} // namespace cwp
