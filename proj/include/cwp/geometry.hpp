#pragma once

#include "cwp/field.hpp"

namespace cwp {

// Grid-based pseudo-Riemannian tensor engine. All derivatives are central
// differences (order 2 or 4); pure second derivatives use direct
// second-difference stencils rather than nested first differences. Every
// result carries per-axis validity margins; derived fields accumulate them,
// so curvature quantities are valid only at distance >= 2 * stencil radius
// from non-periodic boundaries.

int stencil_radius(int order); // 1 for order 2, 2 for order 4

// d/dx^axis of a scalar or tensor field, componentwise for tensors.
ScalarField partial_derivative(const ScalarField& f, int axis, int order = 2);
TensorField partial_derivative(const TensorField& f, int axis, int order = 2);

// d^2/dx^a dx^b; direct stencil when a == b, nested first differences when
// a != b (cross stencil at order 2).
ScalarField second_derivative(const ScalarField& f, int a, int b, int order = 2);

// Levi-Civita connection coefficients Gamma^k_{ij}; storage (k,i,j),
// symmetric in (i,j).
TensorField christoffel(const MetricField& g, int order = 2);

// Riemann tensor with the convention
//   R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z.
// Storage riem(l,i,j,k) = component of R(e_j, e_k) e_i along e_l, i.e.
//   riem(l,i,j,k) = d_j Gamma^l_{ki} - d_k Gamma^l_{ji}
//                 + Gamma^m_{ki} Gamma^l_{jm} - Gamma^m_{ji} Gamma^l_{km};
// antisymmetric in (j,k).
TensorField riemann(const MetricField& g, int order = 2);

// Ric(X,Y) = sum_i h(E_i,E_i) h(R(E_i,Y)X, E_i) over an orthonormal frame;
// in coordinates Ric_ij = riem(a,i,a,j). Computed by contracting on the fly
// (the full Riemann tensor is never materialized). Unit 2-sphere has S = 2.
TensorField ricci(const MetricField& g, int order = 2);
ScalarField scalar_curvature(const MetricField& g, int order = 2);

// (grad f)^i = g^{ij} d_j f
TensorField gradient(const MetricField& g, const ScalarField& f, int order = 2);

// H_ij = d_i d_j f - Gamma^k_{ij} d_k f; symmetric.
TensorField hessian(const MetricField& g, const ScalarField& f, int order = 2);

// Delta f = g^{ij} H_ij (metric trace of the Hessian).
ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f, int order = 2);

// g(grad u, grad v) = g^{ij} d_i u d_j v
ScalarField grad_inner(const MetricField& g, const ScalarField& u, const ScalarField& v,
                       int order = 2);

// Ricci of g minus lambda * g, as a rank-2 field (Einstein-condition residual).
TensorField einstein_residual(const MetricField& g, double lambda, int order = 2);

// Metric scaled pointwise by a positive conformal factor field (same grid).
MetricField conformal_scale(const MetricField& g, const ScalarField& factor);

} // namespace cwp
