#pragma once

#include <functional>
#include <optional>

#include "cwp/geometry.hpp"

namespace cwp {

// Base conformal warped product: product manifold B x F with metric
// c^2 g_B (+) w^2 g_F, where the conformal factor c and warping function w
// are positive functions on the base.
struct BcwpSpec {
    MetricField base;
    MetricField fiber;
    ScalarField conformal_factor; // c, on the base grid
    ScalarField warping_function; // w, on the base grid

    BcwpSpec(MetricField b, MetricField f, ScalarField c, ScalarField w);

    int m() const { return base.dim(); }
    int k() const { return fiber.dim(); }
};

// Product-grid layout: base axes 0..m-1, fiber axes m..m+k-1.
GridPtr product_grid(const BcwpSpec& spec);

// Broadcast a base (resp. fiber) field along the other factor's axes.
ScalarField lift_base(const BcwpSpec& spec, const ScalarField& f);
ScalarField lift_fiber(const BcwpSpec& spec, const ScalarField& f);

// Block-diagonal product metric: c^2 g_B on the base block, w^2 g_F on the
// fiber block, zero off-diagonal.
MetricField assemble(const BcwpSpec& spec);

// Gradient of a lifted base function: base components (1/c^2) grad_B phi,
// fiber components zero.
TensorField bcwp_gradient(const BcwpSpec& spec, const ScalarField& phi, int order = 2);

// Connection coefficients of the product assembled from the three block
// formulas (base-base, base-fiber, fiber-fiber); same storage as
// christoffel().
TensorField bcwp_connection(const BcwpSpec& spec, int order = 2);

// Hessian of a lifted base function phi (or fiber function psi) assembled
// from the six block formulas.
TensorField bcwp_hessian_base(const BcwpSpec& spec, const ScalarField& phi, int order = 2);
TensorField bcwp_hessian_fiber(const BcwpSpec& spec, const ScalarField& psi, int order = 2);

// Laplace-Beltrami of lifted functions:
//   Delta phi = Delta_B phi / c^2 + ((m-2)/c^3) g_B(grad phi, grad c)
//             + (k/(c^2 w)) g_B(grad w, grad phi)
//   Delta psi = Delta_F psi / w^2
ScalarField bcwp_laplacian_base(const BcwpSpec& spec, const ScalarField& phi, int order = 2);
ScalarField bcwp_laplacian_fiber(const BcwpSpec& spec, const ScalarField& psi, int order = 2);

// Full product Riemann / Ricci / scalar curvature assembled from the block
// formulas (same component conventions as the grid oracle).
TensorField bcwp_riemann(const BcwpSpec& spec, int order = 2);
TensorField bcwp_ricci(const BcwpSpec& spec, int order = 2);
ScalarField bcwp_scalar(const BcwpSpec& spec, int order = 2); // lifted to the product grid

// Scalar curvature as a base-grid field (the relation is base-only).
ScalarField bcwp_scalar_base(const BcwpSpec& spec, int order = 2);

// ---- geodesics -------------------------------------------------------------

// Function-backed factor data for trajectory integration (grids cannot be
// interpolated; geodesics need off-node evaluation).
struct BcwpFunctions {
    int m = 0;
    int k = 0;
    std::function<double(int, int, std::span<const double>)> base_metric;
    std::function<double(int, int, std::span<const double>)> fiber_metric;
    std::function<double(std::span<const double>)> c;
    std::function<double(std::span<const double>)> w;
};

struct GeodesicResult {
    std::vector<double> times;
    std::vector<std::vector<double>> base_points;      // alpha(t)
    std::vector<std::vector<double>> fiber_points;     // beta(t)
    std::vector<std::vector<double>> base_velocity;
    std::vector<std::vector<double>> fiber_velocity;
    // independent second-difference residuals of the two governing equations
    double max_base_residual = 0.0;
    double max_fiber_residual = 0.0;
    // max deviation of fiber acceleration from collinearity with beta'
    double max_pregeodesic_defect = 0.0;
};

// Classical fixed-step 4th-order integration of the two coupled equations
//   alpha'' = -2 (alpha'(c)/c) alpha' + (g_B(alpha',alpha')/c) grad_B c
//             + (w g_F(beta',beta')/c^2) grad_B w      (covariant in B)
//   beta''  = -2 (alpha'(w)/w) beta'                   (covariant in F)
GeodesicResult geodesic_integrate(const BcwpFunctions& fns, std::span<const double> base0,
                                  std::span<const double> fiber0, std::span<const double> vbase0,
                                  std::span<const double> vfiber0, double step, int steps);

} // namespace cwp
