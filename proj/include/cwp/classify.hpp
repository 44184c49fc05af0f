#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cwp/rational.hpp"
#include "cwp/sbcwp.hpp"

namespace cwp {

// Regime of one exponent: position relative to 0 and 1.
enum class ExponentType { SuperLin, SubLin, NonHom, Sing, Lin };

std::string exponent_type_name(ExponentType t);
ExponentType classify_exponent(const Rational& e);

// Exponents of the scalar-curvature relation: p = 2 mu alpha + 1,
// q = p - 2 alpha. Exact rational arithmetic. Throws on scalar-exceptional mu.
struct PqResult {
    Rational alpha, beta, p, q;
};
PqResult pq(int m, int k, const Rational& mu);

// Set D: dimension pairs whose q-polynomial
//   rho(m,k,mu) = (m-1)(m+2)mu^2 + 2(mk - 2(m-1))mu + (k-3)k
// has negative discriminant discr = -4((m-2)k - 4(m-1))(k+m-1).
struct MembershipD {
    bool in_D = false;
    long long discriminant = 0;
    bool on_D0 = false; // discriminant exactly zero
};
MembershipD membership_D(int m, int k);

std::vector<std::pair<int, int>> enumerate_D0(int m_max, int k_max);

// Roots mu_- <= mu_+ of rho(m,k,.), defined when the discriminant is >= 0.
struct QRoots {
    double mu_minus = 0.0;
    double mu_plus = 0.0;
    bool double_root = false;
    std::optional<Rational> mu_minus_exact; // set when the root is rational
    std::optional<Rational> mu_plus_exact;
};
QRoots q_roots(int m, int k);

// One classification row for a concrete (m, k, mu).
struct RegimeRow {
    int m = 0, k = 0;
    Rational mu;
    std::string interval;   // bracket describing which mu-cell the value lies in
    Rational alpha, beta, p, q;
    int alpha_sign = 0;
    std::string ordering;   // e.g. "q<0<p<1" or "q=1<p=3"
    std::string label;      // e.g. "sub-lin/sing"
    bool q_suppressed = false; // m=1, k=1: S_F = 0 so q is non-influent
    bool excluded = false;     // scalar-exceptional mu: no p,q regime
    std::string note;          // branch name for excluded rows
    // the exponent labels are exact only when S and S_F are strictly
    // positive constants; carried verbatim on every row
    std::string disclaimer = "labels assume S and S_F strictly positive constants";
};

RegimeRow regime(int m, int k, const Rational& mu);

// Sobolev thresholds for m >= 3: crossing mu_pY (resp. mu_qY) moves p (resp.
// q) across the critical exponent p_Y = (m+2)/(m-2).
struct SobolevThresholds {
    Rational mu_pY;   // -(k+1)/(m-2)
    Rational mu_qY;   // -k/(m-2)
    Rational p_Y;     // (m+2)/(m-2)
    Rational alpha_at_pY; // -2/(k+1)
    Rational beta_at_pY;  // 4(m-1)/(m-2) - 4k/(k+1)
};
SobolevThresholds sobolev_thresholds(int m, int k);

// alpha, beta, p, q evaluated along a mu sequence, with the mu -> +-infinity
// limits beta_Y = 4(m-1)/(m-2), p_Y = q_Y = 4/(m-2) + 1, alpha*mu -> 2/(m-2).
struct AsymptoticsReport {
    struct Sample {
        double mu, alpha, beta, p, q, alpha_mu;
    };
    std::vector<Sample> samples;
    double beta_limit = 0.0;
    double p_limit = 0.0;
    double alpha_mu_limit = 0.0;
    double max_beta_deviation = 0.0; // max |beta(mu) - beta_Y| over samples
    double max_p_deviation = 0.0;
};
AsymptoticsReport asymptotics(int m, int k, const std::vector<double>& mu_sequence);

// Full table emission. `which` is 4..8 (regime tables) and rows are produced
// for a fixed set of representative (m,k) per table: one rational sample per
// open interval plus every breakpoint.
std::vector<RegimeRow> table_rows(int which);

// Provenance header shared by the CLI emission and the golden-file tests:
// tool version, table id, representative parameters, sampling policy.
std::string table_header(int which);

std::string render_rows_csv(const std::vector<RegimeRow>& rows, const std::string& header);
std::string render_rows_md(const std::vector<RegimeRow>& rows, const std::string& header);

} // namespace cwp
