#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cwp/opfamilies.hpp"
#include "test_support.hpp"

using namespace cwp;
using namespace cwp::testsupport;

namespace {

ScalarField wavy_field(GridPtr g) {
    return ScalarField::sample(g, [](std::span<const double> x) {
        double y = x.size() > 1 ? x[1] : 0.0;
        return 1.0 + 0.2 * std::sin(x[0]) * std::cos(y);
    });
}

} // namespace

TEST_CASE("reduce: zeta/eta arithmetic") {
    SUBCASE("single identity term") {
        OpFamily fam({{1.0, 1.0}});
        ReducedForm rf = reduce(fam);
        CHECK(rf.valid);
        CHECK(rf.alpha == doctest::Approx(1.0));
        CHECK(rf.beta == doctest::Approx(1.0));
    }

    SUBCASE("scalar-curvature family at (m,k,mu) = (3,2,2)") {
        // r1 = 2(m-1) + sigma/(mu(mu-1)), r2 = 2k - sigma/(mu-1), a = (mu, 1)
        double m = 3, k = 2, mu = 2;
        double sigma = (m - 4) * (m - 1) * mu * mu + 2 * k * (m - 2) * mu + k * (k - 1);
        OpFamily fam({{2 * (m - 1) + sigma / (mu * (mu - 1)), mu}, {2 * k - sigma / (mu - 1), 1.0}});
        CHECK(fam.zeta() == doctest::Approx(12.0)); // 2[k + (m-1) mu]
        CHECK(fam.eta() == doctest::Approx(22.0));
    }

    SUBCASE("conformal-group family, n = 3") {
        double n = 3;
        OpFamily fam({{1.0 / (n - 1), n - 1}, {-1.0 / (n + 2), n}});
        CHECK(fam.zeta() == doctest::Approx(2.0 / 5.0));
        CHECK(fam.eta() == doctest::Approx(1.0 / 5.0));
        ReducedForm rf = reduce(fam);
        CHECK(rf.alpha == doctest::Approx(2.0));
        CHECK(rf.beta == doctest::Approx(4.0 / 5.0));
    }

    SUBCASE("zeta = 0 family is flagged invalid, not an error") {
        OpFamily fam({{1.0, 1.0}, {-1.0, 1.0}});
        ReducedForm rf = reduce(fam);
        CHECK_FALSE(rf.valid);
    }
}

TEST_CASE("eval_L: scalar operator identity") {
    auto g = grid2d(0.0, 0.0, 0.02, 11);
    MetricField flat = flat_metric(g);

    SUBCASE("constant field: every form vanishes") {
        ScalarField v = ScalarField::sample(g, [](std::span<const double>) { return 1.4; });
        OpFamilyEval ev = eval_L(OpFamily({{1.0, 2.0}, {2.0, 1.0}}), flat, v);
        CHECK(ev.literal.max_abs_interior() < 1e-12);
        CHECK(ev.closed.max_abs_interior() < 1e-12);
        CHECK(ev.reduced.max_abs_interior() < 1e-12);
    }

    SUBCASE("single term (1,1): L v = Lap v / v") {
        ScalarField v = wavy_field(g);
        OpFamilyEval ev = eval_L(OpFamily({{1.0, 1.0}}), flat, v);
        ScalarField lap = laplace_beltrami(flat, v);
        double worst = 0.0;
        detail::for_each_valid(*g, lap.margins(), [&](std::size_t n) {
            worst = std::max(worst, std::abs(ev.literal[n] - lap[n] / v[n]));
        });
        CHECK(worst < 1e-12);
    }

    SUBCASE("terms {(1,2),(2,1)}: literal equals (8/3) Lap(v^{3/2})/v^{3/2}") {
        ScalarField v = wavy_field(g);
        OpFamily fam({{1.0, 2.0}, {2.0, 1.0}});
        CHECK(fam.zeta() == doctest::Approx(4.0));
        CHECK(fam.eta() == doctest::Approx(6.0));
        ReducedForm rf = reduce(fam);
        CHECK(rf.alpha == doctest::Approx(2.0 / 3.0));
        CHECK(rf.beta == doctest::Approx(8.0 / 3.0));

        OpFamilyEval ev = eval_L(fam, flat, v);
        CHECK(ev.reduced_valid);
        CHECK(max_abs_diff_interior(ev.literal, ev.reduced) < fd_tolerance(0.02));
        CHECK(max_abs_diff_interior(ev.literal, ev.closed) < fd_tolerance(0.02));
    }

    SUBCASE("non-positive v is rejected") {
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) { return x[0]; });
        CHECK_THROWS_AS(eval_L(OpFamily({{1.0, 1.0}}), flat, v), DomainError);
    }
}

TEST_CASE("eval_H_family: tensor operator identity") {
    auto g = grid2d(0.0, 0.0, 0.02, 11);
    MetricField flat = flat_metric(g);

    SUBCASE("constant field: zero tensor") {
        ScalarField v = ScalarField::sample(g, [](std::span<const double>) { return 2.0; });
        OpFamilyHessEval ev = eval_H_family(OpFamily({{1.0, 2.0}, {2.0, 1.0}}), flat, v);
        CHECK(ev.literal.max_abs_interior() < 1e-12);
    }

    SUBCASE("single term: H(v)/v exactly") {
        ScalarField v = wavy_field(g);
        OpFamilyHessEval ev = eval_H_family(OpFamily({{1.0, 1.0}}), flat, v);
        TensorField h = hessian(flat, v);
        double worst = 0.0;
        detail::for_each_valid(*g, h.margins(), [&](std::size_t n) {
            for (std::size_t c = 0; c < h.comps(); ++c)
                worst = std::max(worst, std::abs(ev.literal.at(n, c) - h.at(n, c) / v[n]));
        });
        CHECK(worst < 1e-12);
    }

    SUBCASE("terms {(1,2),(2,1)}: equals (8/3) H(v^{3/2})/v^{3/2}") {
        ScalarField v = wavy_field(g);
        OpFamilyHessEval ev = eval_H_family(OpFamily({{1.0, 2.0}, {2.0, 1.0}}), flat, v);
        CHECK(ev.reduced_valid);
        CHECK(max_abs_diff_interior(ev.literal, ev.reduced) < fd_tolerance(0.02));
        CHECK(max_abs_diff_interior(ev.literal, ev.closed) < fd_tolerance(0.02));
    }
}

TEST_CASE("lap_power identity") {
    SUBCASE("t = 1: identity reduces to Lap v") {
        auto g = grid1d(0.0, 0.01, 21);
        MetricField flat = flat_metric(g);
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) { return 1.0 + x[0] * x[0]; });
        LapPowerEval ev = lap_power(flat, v, 1.0);
        CHECK(ev.difference.max_abs_interior() < 1e-10);
    }

    SUBCASE("t = 0: both sides vanish") {
        auto g = grid1d(0.0, 0.01, 21);
        MetricField flat = flat_metric(g);
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) { return 1.0 + x[0] * x[0]; });
        LapPowerEval ev = lap_power(flat, v, 0.0);
        CHECK(ev.direct.max_abs_interior() < 1e-10);
        CHECK(ev.identity.max_abs_interior() < 1e-10);
    }

    SUBCASE("t = 2, v = 1 + x^2 on flat 1D: Lap v^2 = 2|v'|^2 + 2 v Lap v = 12 x^2 + 4") {
        auto g = grid1d(-0.1, 0.01, 21);
        MetricField flat = flat_metric(g);
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) { return 1.0 + x[0] * x[0]; });
        LapPowerEval ev = lap_power(flat, v, 2.0, 4); // v^2 is quartic: order 4 is exact
        double worst = 0.0;
        detail::for_each_valid(*g, ev.direct.margins(), [&](std::size_t n) {
            double x = g->coordinate(0, static_cast<int>(n));
            worst = std::max(worst, std::abs(ev.direct[n] - (12.0 * x * x + 4.0)));
            worst = std::max(worst, std::abs(ev.identity[n] - (12.0 * x * x + 4.0)));
        });
        CHECK(worst < 1e-8);
        CHECK(ev.difference.max_abs_interior() < 1e-8);
    }
}

TEST_CASE("conformal Laplacian rescaling rule") {
    SUBCASE("n = 2: the operator is conformally covariant, any u") {
        auto g = grid2d(0.0, 0.0, 0.02, 11);
        MetricField flat = flat_metric(g);
        ScalarField u = ScalarField::sample(g, [](std::span<const double> x) {
            return 1.0 + 0.1 * x[0] + 0.05 * x[1];
        });
        ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return std::sin(x[1]); });
        ScalarField res = conformal_laplacian_identity(flat, u, 3.0, f);
        CHECK(res.max_abs_interior() < fd_tolerance(0.02));
    }

    SUBCASE("constant u = kappa: both sides equal Lap f") {
        auto g = grid2d(0.0, 0.0, 0.02, 11);
        MetricField flat = flat_metric(g);
        ScalarField u = ScalarField::sample(g, [](std::span<const double>) { return 1.7; });
        ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return std::sin(x[0]); });
        ScalarField res = conformal_laplacian_identity(flat, u, 2.5, f);
        CHECK(res.max_abs_interior() < 1e-10);
    }

    SUBCASE("n = 3, r = 4, u = 1 + 0.1 x, f = sin y") {
        auto g = make_grid({Axis{"x", 0.0, 0.02, 9}, Axis{"y", 0.0, 0.02, 9}, Axis{"z", 0.0, 0.02, 9}});
        MetricField flat = flat_metric(g);
        ScalarField u = ScalarField::sample(g, [](std::span<const double> x) { return 1.0 + 0.1 * x[0]; });
        ScalarField f = ScalarField::sample(g, [](std::span<const double> x) { return std::sin(x[1]); });
        ScalarField res = conformal_laplacian_identity(flat, u, 4.0, f);
        CHECK(res.max_abs_interior() < fd_tolerance(0.02));
    }
}

TEST_CASE("conformal scalar-curvature rule") {
    SUBCASE("n = 3") {
        auto g = make_grid({Axis{"x", 0.0, 0.02, 9}, Axis{"y", 0.0, 0.02, 9}, Axis{"z", 0.0, 0.02, 9}});
        MetricField flat = flat_metric(g);
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) {
            return 1.0 + 0.1 * x[0] + 0.05 * std::sin(x[1]);
        });
        ScalarField res = conformal_scalar_identity(flat, v, 4.0, 2);
        CHECK(res.max_abs_interior() < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("n = 2 variant") {
        auto g = grid2d(0.0, 0.0, 0.02, 11);
        MetricField flat = flat_metric(g);
        ScalarField v = ScalarField::sample(g, [](std::span<const double> x) {
            return 1.0 + 0.15 * std::sin(x[0]) * std::cos(x[1]);
        });
        ScalarField res = conformal_scalar_identity(flat, v, 2.0, 2);
        CHECK(res.max_abs_interior() < fd_tolerance(0.02, 10.0));
    }
}

TEST_CASE("property: randomized families reduce correctly at FD tolerance") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    auto g = grid2d(0.0, 0.0, 0.02, 11);
    MetricField flat = flat_metric(g);
    std::mt19937 rng_field(77);
    ScalarField v = random_positive_field(g, rng_field);

    int tested = 0;
    while (tested < 40) {
        OpFamily fam({{coef(rng), coef(rng)}, {coef(rng), coef(rng)}});
        ReducedForm rf = reduce(fam);
        if (!rf.valid || std::abs(rf.alpha) < 0.25) continue; // keep 1/alpha powers tame
        ++tested;
        OpFamilyEval ev = eval_L(fam, flat, v);
        double scale = std::max(1.0, ev.closed.max_abs_interior());
        CHECK(max_abs_diff_interior(ev.literal, ev.reduced) < fd_tolerance(0.02, scale));
        CHECK(max_abs_diff_interior(ev.literal, ev.closed) < fd_tolerance(0.02, scale));

        // trace consistency: g-trace of the Hessian family equals the scalar family
        OpFamilyHessEval eh = eval_H_family(fam, flat, v);
        double worst = 0.0;
        Margins mg = detail::max_margins(eh.literal.margins(), ev.literal.margins());
        detail::for_each_valid(*g, mg, [&](std::size_t n) {
            double tr = eh.literal.at(n, 0) + eh.literal.at(n, 3); // flat inverse metric
            worst = std::max(worst, std::abs(tr - ev.literal[n]));
        });
        CHECK(worst < 1e-10);
    }
}
