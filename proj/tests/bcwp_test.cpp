#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cwp/bcwp.hpp"
#include "test_support.hpp"

using namespace cwp;
using namespace cwp::testsupport;

namespace {

BcwpSpec trivial_spec(GridPtr bg, GridPtr fg) {
    ScalarField one_b = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
    return BcwpSpec(flat_metric(bg), flat_metric(fg), one_b, one_b);
}

struct RandomSpec {
    BcwpSpec spec;
    double h;
};

RandomSpec random_spec(std::mt19937& rng, int m, int k, double h, int count,
                       bool lorentzian_base = false) {
    std::vector<Axis> baxes, faxes;
    for (int a = 0; a < m; ++a) baxes.push_back(Axis{"b" + std::to_string(a), 0.1, h, count});
    for (int a = 0; a < k; ++a) faxes.push_back(Axis{"f" + std::to_string(a), 0.2, h, count});
    GridPtr bg = make_grid(baxes), fg = make_grid(faxes);
    MetricField base = random_metric(bg, rng, lorentzian_base);
    MetricField fiber = random_metric(fg, rng);
    ScalarField c = random_positive_field(bg, rng);
    ScalarField w = random_positive_field(bg, rng);
    return RandomSpec{BcwpSpec(std::move(base), std::move(fiber), std::move(c), std::move(w)), h};
}

} // namespace

TEST_CASE("assemble") {
    auto bg = grid2d(0.0, 0.0, 0.05, 9);
    auto fg = grid2d(0.5, 0.5, 0.05, 9);

    SUBCASE("c = w = 1: direct product metric") {
        BcwpSpec spec = trivial_spec(bg, fg);
        MetricField p = assemble(spec);
        for (std::size_t n = 0; n < p.grid().node_count(); ++n) {
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) CHECK(p(n, i, j) == (i == j ? 1.0 : 0.0));
        }
    }

    SUBCASE("singly warped: oracle scalar curvature matches the base-only relation") {
        std::mt19937 rng(42);
        GridPtr bg2 = grid2d(0.0, 0.0, 0.02, 9);
        GridPtr fg2 = make_grid({Axis{"th", 1.0, 0.02, 9}, Axis{"ph", 0.0, 0.02, 9}});
        ScalarField one = ScalarField::sample(bg2, [](std::span<const double>) { return 1.0; });
        ScalarField w = random_positive_field(bg2, rng);
        BcwpSpec spec(flat_metric(bg2), sphere_metric(fg2), one, w);

        ScalarField formula = bcwp_scalar_base(spec);
        MetricField p = assemble(spec);
        ScalarField oracle = scalar_curvature(p);
        // compare on the product grid
        ScalarField lifted = lift_base(spec, formula);
        double worst = max_abs_diff_interior(lifted, oracle);
        CHECK(worst < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("Schwarzschild as a singly warped product: Ricci-flat") {
        double M = 1.0;
        auto u2 = [M](double r) { return 1.0 - 2.0 * M / r; };
        double h = 0.02;
        GridPtr bg2 = make_grid({Axis{"r", 3.0, h, 9}, Axis{"t", 0.0, h, 9}});
        GridPtr fg2 = make_grid({Axis{"th", 1.0, h, 9}, Axis{"ph", 0.0, h, 9}});
        MetricField base(bg2, {1, -1});
        for (std::size_t n = 0; n < bg2->node_count(); ++n) {
            std::vector<double> x(2);
            bg2->coordinates(n, x);
            base.set(n, 0, 0, 1.0 / u2(x[0]));
            base.set(n, 1, 1, -u2(x[0]));
        }
        ScalarField one = ScalarField::sample(bg2, [](std::span<const double>) { return 1.0; });
        ScalarField w = ScalarField::sample(bg2, [](std::span<const double> x) { return x[0]; });
        BcwpSpec spec(base, sphere_metric(fg2), one, w);
        TensorField ric = ricci(assemble(spec));
        CHECK(ric.max_abs_interior() < 5e-3);
    }

    SUBCASE("non-positive warping function is rejected") {
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        ScalarField bad = ScalarField::sample(bg, [](std::span<const double> x) { return x[0] - 0.1; });
        CHECK_THROWS_AS(BcwpSpec(flat_metric(bg), flat_metric(fg), one, bad), DomainError);
    }
}

TEST_CASE("lifted gradient") {
    std::mt19937 rng(7);
    auto bg = grid2d(0.0, 0.0, 0.02, 9);
    auto fg = grid1d(0.0, 0.02, 9);
    ScalarField phi = ScalarField::sample(bg, [](std::span<const double> x) {
        return std::sin(x[0]) + 0.3 * x[1];
    });

    SUBCASE("c = 1: ordinary base gradient, zero fiber components") {
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, one);
        TensorField grad = bcwp_gradient(spec, phi);
        TensorField base_grad = gradient(spec.base, phi);
        std::size_t fiber_nodes = fg->node_count();
        detail::for_each_valid(grad.grid(), grad.margins(), [&](std::size_t n) {
            CHECK(grad.at(n, 0) == doctest::Approx(base_grad.at(n / fiber_nodes, 0)));
            CHECK(grad.at(n, 2) == 0.0);
        });
    }

    SUBCASE("c = 2: gradient scales by 1/4") {
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        ScalarField two = ScalarField::sample(bg, [](std::span<const double>) { return 2.0; });
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), two, one);
        TensorField grad = bcwp_gradient(spec, phi);
        TensorField base_grad = gradient(spec.base, phi);
        std::size_t fiber_nodes = fg->node_count();
        detail::for_each_valid(grad.grid(), grad.margins(), [&](std::size_t n) {
            CHECK(grad.at(n, 0) == doctest::Approx(base_grad.at(n / fiber_nodes, 0) / 4.0));
        });
    }

    SUBCASE("random spec: matches the oracle gradient of the lifted function") {
        RandomSpec rs = random_spec(rng, 2, 1, 0.02, 9);
        ScalarField phi_b = ScalarField::sample(rs.spec.base.grid_ptr(), [](std::span<const double> x) {
            return std::sin(x[0]) + 0.3 * x[1];
        });
        TensorField formula = bcwp_gradient(rs.spec, phi_b);
        TensorField oracle = gradient(assemble(rs.spec), lift_base(rs.spec, phi_b));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 10.0));
    }
}

TEST_CASE("connection block formulas") {
    SUBCASE("trivial product: factor Christoffels only") {
        auto bg = make_grid({Axis{"r", 1.0, 0.02, 9}, Axis{"th", 0.2, 0.02, 9}});
        auto fg = grid1d(0.0, 0.02, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(polar_metric(bg), flat_metric(fg), one, one);
        TensorField formula = bcwp_connection(spec);
        TensorField oracle = christoffel(assemble(spec));
        CHECK(max_abs_diff_interior(formula, oracle) < 1e-10);
    }

    SUBCASE("w = e^x, c = 1, flat factors: mixed block is exactly 1") {
        auto bg = grid1d(0.0, 0.02, 9);
        auto fg = grid1d(0.0, 0.02, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        ScalarField w = ScalarField::sample(bg, [](std::span<const double> x) { return std::exp(x[0]); });
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, w);
        TensorField gamma = bcwp_connection(spec);
        detail::for_each_valid(gamma.grid(), gamma.margins(), [&](std::size_t n) {
            CHECK(gamma(n, {1, 0, 1}) == doctest::Approx(1.0).epsilon(2e-4)); // d_x w / w = 1, FD at h^2
        });
    }

    SUBCASE("random spec matches oracle") {
        std::mt19937 rng(19);
        RandomSpec rs = random_spec(rng, 2, 2, 0.02, 9);
        TensorField formula = bcwp_connection(rs.spec);
        TensorField oracle = christoffel(assemble(rs.spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 10.0));
    }
}

TEST_CASE("hessian block formulas") {
    std::mt19937 rng(23);
    auto bg = grid2d(0.0, 0.0, 0.02, 9);
    auto fg = grid1d(0.3, 0.02, 9);

    SUBCASE("constant base function: zero Hessian") {
        RandomSpec rs = random_spec(rng, 2, 1, 0.02, 9);
        ScalarField phi = ScalarField::sample(rs.spec.base.grid_ptr(),
                                              [](std::span<const double>) { return 3.0; });
        TensorField h = bcwp_hessian_base(rs.spec, phi);
        CHECK(h.max_abs_interior() < 1e-12);
    }

    SUBCASE("base function: formula equals oracle Hessian of the lift") {
        RandomSpec rs = random_spec(rng, 2, 1, 0.02, 9);
        ScalarField phi = ScalarField::sample(rs.spec.base.grid_ptr(), [](std::span<const double> x) {
            return std::sin(x[0]) * std::cos(0.5 * x[1]);
        });
        TensorField formula = bcwp_hessian_base(rs.spec, phi);
        TensorField oracle = hessian(assemble(rs.spec), lift_base(rs.spec, phi));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 10.0));

        // mixed block H(X,V) vanishes identically in the formula
        detail::for_each_valid(formula.grid(), formula.margins(), [&](std::size_t n) {
            CHECK(formula(n, {0, 2}) == 0.0);
            CHECK(formula(n, {2, 1}) == 0.0);
        });
    }

    SUBCASE("fiber function: formula equals oracle Hessian of the lift") {
        RandomSpec rs = random_spec(rng, 2, 1, 0.02, 9);
        ScalarField psi = ScalarField::sample(rs.spec.fiber.grid_ptr(), [](std::span<const double> y) {
            return std::cos(y[0]);
        });
        TensorField formula = bcwp_hessian_fiber(rs.spec, psi);
        TensorField oracle = hessian(assemble(rs.spec), lift_fiber(rs.spec, psi));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 10.0));
    }

    SUBCASE("warped-only fiber block: H(V,W) = w g_F(V,W) g_B(grad w, grad phi)") {
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        std::mt19937 rng2(5);
        ScalarField w = random_positive_field(bg, rng2);
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, w);
        ScalarField phi = ScalarField::sample(bg, [](std::span<const double> x) {
            return std::sin(x[0] + 0.2 * x[1]);
        });
        TensorField formula = bcwp_hessian_base(spec, phi);
        TensorField oracle = hessian(assemble(spec), lift_base(spec, phi));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));
    }
}

TEST_CASE("laplacian block formulas") {
    std::mt19937 rng(31);

    SUBCASE("trivial product: Lap phi = Lap_B phi") {
        auto bg = grid2d(0.0, 0.0, 0.02, 9);
        auto fg = grid1d(0.0, 0.02, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, one);
        ScalarField phi = ScalarField::sample(bg, [](std::span<const double> x) {
            return x[0] * x[0] + x[1] * x[1];
        });
        ScalarField lap = bcwp_laplacian_base(spec, phi);
        detail::for_each_valid(lap.grid(), lap.margins(), [&](std::size_t n) {
            CHECK(lap[n] == doctest::Approx(4.0).epsilon(1e-8));
        });
    }

    SUBCASE("base function against oracle, m = 2 with c = w") {
        auto bg = grid2d(0.0, 0.0, 0.02, 9);
        auto fg = grid1d(0.0, 0.02, 9);
        ScalarField cw = random_positive_field(bg, rng);
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), cw, cw);
        ScalarField phi = ScalarField::sample(bg, [](std::span<const double> x) {
            return std::sin(x[0]) + std::cos(x[1]);
        });
        ScalarField formula = bcwp_laplacian_base(spec, phi);
        ScalarField oracle = laplace_beltrami(assemble(spec), lift_base(spec, phi));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("fiber function: Lap psi = Lap_F psi / w^2") {
        std::mt19937 rng2(13);
        RandomSpec rs = random_spec(rng2, 1, 2, 0.02, 9);
        ScalarField psi = ScalarField::sample(rs.spec.fiber.grid_ptr(), [](std::span<const double> y) {
            return std::sin(y[0]) * std::cos(y[1]);
        });
        ScalarField formula = bcwp_laplacian_fiber(rs.spec, psi);
        ScalarField oracle = laplace_beltrami(assemble(rs.spec), lift_fiber(rs.spec, psi));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));
    }
}

TEST_CASE("riemann block formulas") {
    SUBCASE("flat factors, trivial functions: zero curvature") {
        auto bg = grid2d(0.0, 0.0, 0.05, 9);
        auto fg = grid1d(0.0, 0.05, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, one);
        TensorField r = bcwp_riemann(spec);
        CHECK(r.max_abs_interior() < 1e-12);
        TensorField oracle = riemann(assemble(spec));
        CHECK(oracle.max_abs_interior() < 1e-12);
    }

    SUBCASE("random spec: all blocks match the oracle (incl. the two zero blocks)") {
        std::mt19937 rng(101);
        RandomSpec rs = random_spec(rng, 2, 2, 0.02, 9);
        TensorField formula = bcwp_riemann(rs.spec);
        TensorField oracle = riemann(assemble(rs.spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 20.0));
    }

    SUBCASE("flat base, c = 1: fiber block gains the -|grad w|^2 term") {
        auto bg = grid1d(0.0, 0.02, 9);
        auto fg = grid2d(1.0, 0.0, 0.02, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        ScalarField w = ScalarField::sample(bg, [](std::span<const double> x) { return 1.0 + 0.3 * x[0]; });
        BcwpSpec spec(flat_metric(bg), sphere_metric(fg), one, w);
        TensorField formula = bcwp_riemann(spec);
        TensorField oracle = riemann(assemble(spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));
    }
}

TEST_CASE("ricci block formulas") {
    SUBCASE("trivial product: Ric_B (+) Ric_F") {
        auto bg = make_grid({Axis{"r", 1.0, 0.02, 9}, Axis{"th", 0.2, 0.02, 9}});
        auto fg = make_grid({Axis{"a", 1.0, 0.02, 9}, Axis{"b", 0.0, 0.02, 9}});
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(polar_metric(bg), sphere_metric(fg), one, one);
        TensorField formula = bcwp_ricci(spec);
        TensorField oracle = ricci(assemble(spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("warped case c = 1 matches oracle; mixed block vanishes") {
        std::mt19937 rng(55);
        auto bg = grid2d(0.0, 0.0, 0.02, 9);
        auto fg = grid1d(0.0, 0.02, 9);
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        ScalarField w = random_positive_field(bg, rng);
        BcwpSpec spec(flat_metric(bg), flat_metric(fg), one, w);
        TensorField formula = bcwp_ricci(spec);
        TensorField oracle = ricci(assemble(spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(0.02, 10.0));

        double worst_mixed = 0.0;
        detail::for_each_valid(oracle.grid(), oracle.margins(), [&](std::size_t n) {
            worst_mixed = std::max(worst_mixed, std::abs(oracle(n, {0, 2})));
            worst_mixed = std::max(worst_mixed, std::abs(oracle(n, {2, 1})));
        });
        CHECK(worst_mixed < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("random spec matches oracle at FD tolerance") {
        std::mt19937 rng(77);
        RandomSpec rs = random_spec(rng, 2, 2, 0.02, 9);
        TensorField formula = bcwp_ricci(rs.spec);
        TensorField oracle = ricci(assemble(rs.spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 20.0));
    }
}

TEST_CASE("scalar curvature relation") {
    SUBCASE("trivial product: S = S_B + S_F") {
        auto bg = make_grid({Axis{"a", 1.0, 0.02, 9}, Axis{"b", 0.0, 0.02, 9}});
        auto fg = make_grid({Axis{"c", 1.0, 0.02, 9}, Axis{"d", 0.0, 0.02, 9}});
        ScalarField one = ScalarField::sample(bg, [](std::span<const double>) { return 1.0; });
        BcwpSpec spec(sphere_metric(bg, 1.0), sphere_metric(fg, 2.0), one, one);
        ScalarField s = bcwp_scalar(spec);
        // S = 2 + 2/4
        detail::for_each_valid(s.grid(), s.margins(), [&](std::size_t n) {
            CHECK(s[n] == doctest::Approx(2.5).epsilon(1e-3));
        });
    }

    SUBCASE("exponential conformal pair on flat base with sphere fiber") {
        // c = psi^0.3, w = psi, psi = e^{0.1 x}; full assembly at h = 1e-3
        double h = 1e-3;
        auto bg = grid2d(0.0, 0.0, h, 9);
        auto fg = make_grid({Axis{"th", 1.0, h, 9}, Axis{"ph", 0.0, h, 9}});
        ScalarField psi = ScalarField::sample(bg, [](std::span<const double> x) {
            return std::exp(0.1 * x[0]);
        });
        BcwpSpec spec(flat_metric(bg), sphere_metric(fg), psi.pow(0.3), psi);
        ScalarField formula = lift_base(spec, bcwp_scalar_base(spec));
        ScalarField oracle = scalar_curvature(assemble(spec));
        double scale = 0.0;
        detail::for_each_valid(oracle.grid(), oracle.margins(), [&](std::size_t n) {
            scale = std::max(scale, std::abs(oracle[n]));
        });
        CHECK(max_abs_diff_interior(formula, oracle) < 1e-4 * std::max(1.0, scale));
    }

    SUBCASE("random spec matches oracle (fiber S_F varies: full product form)") {
        std::mt19937 rng(99);
        RandomSpec rs = random_spec(rng, 2, 2, 0.02, 9);
        ScalarField formula = bcwp_scalar(rs.spec);
        ScalarField oracle = scalar_curvature(assemble(rs.spec));
        CHECK(max_abs_diff_interior(formula, oracle) < fd_tolerance(rs.h, 30.0));
    }
}

TEST_CASE("Lorentzian base robustness") {
    std::mt19937 rng(303);
    RandomSpec rs = random_spec(rng, 2, 1, 0.02, 9, true);
    CHECK(max_abs_diff_interior(bcwp_ricci(rs.spec), ricci(assemble(rs.spec))) <
          fd_tolerance(rs.h, 20.0));
    CHECK(max_abs_diff_interior(bcwp_connection(rs.spec), christoffel(assemble(rs.spec))) <
          fd_tolerance(rs.h, 10.0));
}

TEST_CASE("5D product (m=2, k=3): pivoted inversion path, formulas still match") {
    std::mt19937 rng(515);
    RandomSpec rs = random_spec(rng, 2, 3, 0.02, 9);
    MetricField product = assemble(rs.spec);
    CHECK(product.dim() == 5);
    CHECK(max_abs_diff_interior(bcwp_connection(rs.spec), christoffel(product)) <
          fd_tolerance(rs.h, 10.0));
    CHECK(max_abs_diff_interior(bcwp_ricci(rs.spec), ricci(product)) < fd_tolerance(rs.h, 20.0));
    CHECK(max_abs_diff_interior(bcwp_scalar(rs.spec), scalar_curvature(product)) <
          fd_tolerance(rs.h, 30.0));
}

TEST_CASE("order-4 stencils tighten the oracle agreement") {
    std::mt19937 rng(404);
    RandomSpec rs = random_spec(rng, 2, 1, 0.01, 9);
    double e2 = max_abs_diff_interior(bcwp_ricci(rs.spec, 2), ricci(assemble(rs.spec), 2));
    double e4 = max_abs_diff_interior(bcwp_ricci(rs.spec, 4), ricci(assemble(rs.spec), 4));
    CHECK(e4 < e2);
    CHECK(e4 < 1e-5);
}

TEST_CASE("geodesic integration") {
    SUBCASE("flat trivial product: straight lines, zero residual") {
        BcwpFunctions fns;
        fns.m = 1;
        fns.k = 1;
        fns.base_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.fiber_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.c = [](std::span<const double>) { return 1.0; };
        fns.w = [](std::span<const double>) { return 1.0; };
        double x0[] = {0.0}, y0[] = {0.0}, vx0[] = {0.3}, vy0[] = {0.4};
        GeodesicResult res = geodesic_integrate(fns, x0, y0, vx0, vy0, 0.01, 100);
        CHECK(res.base_points.back()[0] == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(res.fiber_points.back()[0] == doctest::Approx(0.4).epsilon(1e-9));
        CHECK(res.max_base_residual < 1e-8);
        CHECK(res.max_fiber_residual < 1e-8);
    }

    SUBCASE("zero initial fiber velocity: fiber coordinate stays constant") {
        BcwpFunctions fns;
        fns.m = 1;
        fns.k = 1;
        fns.base_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.fiber_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.c = [](std::span<const double> x) { return 1.0 + 0.1 * x[0] * x[0]; };
        fns.w = [](std::span<const double> x) { return std::exp(0.2 * x[0]); };
        double x0[] = {0.1}, y0[] = {0.7}, vx0[] = {0.5}, vy0[] = {0.0};
        GeodesicResult res = geodesic_integrate(fns, x0, y0, vx0, vy0, 0.01, 100);
        for (const auto& y : res.fiber_points) CHECK(y[0] == doctest::Approx(0.7).epsilon(1e-12));
    }

    SUBCASE("warped c=1, w=r: w^4 |beta'|^2 is conserved") {
        BcwpFunctions fns;
        fns.m = 1;
        fns.k = 1;
        fns.base_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.fiber_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.c = [](std::span<const double>) { return 1.0; };
        fns.w = [](std::span<const double> x) { return x[0]; }; // r > 0 on the trajectory
        double x0[] = {2.0}, y0[] = {0.0}, vx0[] = {0.1}, vy0[] = {0.25};
        GeodesicResult res = geodesic_integrate(fns, x0, y0, vx0, vy0, 0.005, 200);
        double c0 = std::pow(res.base_points[0][0], 4) * vy0[0] * vy0[0];
        double worst = 0.0;
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            double w = res.base_points[i][0];
            double q = std::pow(w, 4) * res.fiber_velocity[i][0] * res.fiber_velocity[i][0];
            worst = std::max(worst, std::abs(q - c0));
        }
        CHECK(worst < 1e-6);
        CHECK(res.max_pregeodesic_defect < 1e-9); // 1D fiber: always collinear
    }

    SUBCASE("geodesic tangent to the base leaf stays in it") {
        BcwpFunctions fns;
        fns.m = 2;
        fns.k = 1;
        fns.base_metric = [](int i, int j, std::span<const double> x) {
            if (i != j) return 0.0;
            return i == 0 ? 1.0 : 1.0 + 0.2 * std::sin(x[0]);
        };
        fns.fiber_metric = [](int, int, std::span<const double>) { return 1.0; };
        fns.c = [](std::span<const double> x) { return 1.0 + 0.05 * x[0]; };
        fns.w = [](std::span<const double> x) { return 1.0 + 0.1 * x[1]; };
        double x0[] = {0.2, 0.1}, y0[] = {0.5}, vx0[] = {0.3, -0.2}, vy0[] = {0.0};
        GeodesicResult res = geodesic_integrate(fns, x0, y0, vx0, vy0, 0.01, 80);
        for (const auto& y : res.fiber_points) CHECK(std::abs(y[0] - 0.5) < 1e-12);
    }
}
