#pragma once

#include <vector>

#include "cwp/geometry.hpp"
#include "cwp/rational.hpp"

namespace cwp {

// Operator family L v = sum_i r_i Delta(v^{a_i}) / v^{a_i} (and its Hessian
// analogue), characterized by zeta = sum r_i a_i and eta = sum r_i a_i^2.
struct OpFamily {
    struct Term {
        double r;
        double a;
    };
    std::vector<Term> terms;

    explicit OpFamily(std::vector<Term> t) : terms(std::move(t)) {
        if (terms.empty()) throw DomainError("OpFamily: needs at least one term");
    }

    double zeta() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.r * t.a;
        return s;
    }
    double eta() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.r * t.a * t.a;
        return s;
    }
};

struct ReducedForm {
    double alpha = 0.0; // zeta / eta
    double beta = 0.0;  // zeta^2 / eta
    bool valid = false; // both zeta and eta nonzero
};

ReducedForm reduce(const OpFamily& family);

// Scalar identity: the literal term-by-term sum, the always-valid
// (eta - zeta, zeta) closed form, and (when reducible) the single-term
// beta Delta(v^{1/alpha}) / v^{1/alpha} form.
struct OpFamilyEval {
    ScalarField literal;
    ScalarField closed;
    ScalarField reduced;
    bool reduced_valid = false;
};

OpFamilyEval eval_L(const OpFamily& family, const MetricField& g, const ScalarField& v,
                    int order = 2);

// Tensor (Hessian) identity: literal sum of H(v^{a_i})/v^{a_i}, closed form
// (eta - zeta) dv (x) dv / v^2 + zeta H(v)/v, and the reduced single-term
// form when defined.
struct OpFamilyHessEval {
    TensorField literal;
    TensorField closed;
    TensorField reduced;
    bool reduced_valid = false;
};

OpFamilyHessEval eval_H_family(const OpFamily& family, const MetricField& g, const ScalarField& v,
                               int order = 2);

// Delta(v^t) three ways: direct differentiation of the power, the power-rule
// identity t[(t-1)v^{t-2}|grad v|^2 + v^{t-1} Delta v], and their difference.
struct LapPowerEval {
    ScalarField direct;
    ScalarField identity;
    ScalarField difference;
};

LapPowerEval lap_power(const MetricField& g, const ScalarField& v, double t, int order = 2);

// Residual of the conformal-rescaling rule for the Laplace-Beltrami operator:
//   u^r Delta_{u^r g} f - [ r (n-2)/2 g(grad u / u, grad f) + Delta_g f ]
// computed with the scaled-metric Laplacian on the left.
ScalarField conformal_laplacian_identity(const MetricField& g, const ScalarField& u, double r,
                                         const ScalarField& f, int order = 2);

// Residual of the scalar-curvature rule under g~ = v^r g:
//   n >= 3:  v^r S_{g~} - [ S_g - (n-1) 4/(n-2) Delta(v^e)/v^e ],  e = (n-2) r / 4
//   n  = 2:  v^r S_{g~} - [ S_g + r (|grad v|^2/v^2 - Delta v / v) ]
ScalarField conformal_scalar_identity(const MetricField& g, const ScalarField& v, double r,
                                      int order = 2);

} // namespace cwp
