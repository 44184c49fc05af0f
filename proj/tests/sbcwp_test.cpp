#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cwp/sbcwp.hpp"
#include "test_support.hpp"

using namespace cwp;
using namespace cwp::testsupport;

TEST_CASE("coefficient closed forms") {
    SUBCASE("mu = 0 reduces to the singly-warped coefficients") {
        for (int k = 1; k <= 20; ++k) {
            CoefficientSet<Rational> cs = coefficients_exact(4, k, Rational(0));
            CHECK(cs.scalar.valid);
            CHECK(cs.scalar.alpha == Rational(2, k + 1));
            CHECK(cs.scalar.beta == Rational(4 * k, k + 1));
        }
    }

    SUBCASE("(3,8,-2): alpha 1/6, beta 4/3, p 1/3, q 0") {
        CoefficientSet<Rational> cs = coefficients_exact(3, 8, Rational(-2));
        CHECK(cs.scalar.alpha == Rational(1, 6));
        CHECK(cs.scalar.beta == Rational(4, 3));
        CHECK(cs.p == Rational(1, 3));
        CHECK(cs.q == Rational(0));
    }

    SUBCASE("(4,6,-1): alpha 1/4, beta 3/2, p 1/2, q 0") {
        CoefficientSet<Rational> cs = coefficients_exact(4, 6, Rational(-1));
        CHECK(cs.scalar.alpha == Rational(1, 4));
        CHECK(cs.scalar.beta == Rational(3, 2));
        CHECK(cs.p == Rational(1, 2));
        CHECK(cs.q == Rational(0));
    }

    SUBCASE("(6,5,-1/2): zeta 5, eta 15, alpha 1/3, beta 5/3 by the closed forms") {
        // beta = zeta^2/eta = alpha * zeta; the independent rational route
        // confirms 5/3 (the same formulas also give the quoted alpha = 1/3,
        // p = 2/3, q = 0, which pins the zeta and eta values down).
        CoefficientSet<Rational> cs = coefficients_exact(6, 5, Rational(-1, 2));
        CHECK(cs.scalar.zeta == Rational(5));
        CHECK(cs.scalar.eta == Rational(15));
        CHECK(cs.scalar.alpha == Rational(1, 3));
        CHECK(cs.scalar.beta == Rational(5, 3));
        CHECK(cs.scalar.beta == cs.scalar.alpha * cs.scalar.zeta);
        CHECK(cs.p == Rational(2, 3));
        CHECK(cs.q == Rational(0));
    }

    SUBCASE("Ricci-relation coefficients in closed form") {
        // alpha^D = 1/((m-2)mu+k), beta^D = mu/((m-2)mu+k)
        CoefficientSet<Rational> cs = coefficients_exact(4, 3, Rational(2));
        CHECK(cs.lap.alpha == Rational(1, 7));
        CHECK(cs.lap.beta == Rational(2, 7));
        CHECK(cs.hess.zeta == Rational(-7));
        CHECK(cs.hess.eta == Rational(2 * 7 + 3 * (2 - 1)));
    }

    SUBCASE("property: beta = alpha * 2[k+(m-1)mu] and eta > 0 for m >= 2") {
        std::mt19937 rng(17);
        std::uniform_int_distribution<int> md(2, 8), kd(1, 9);
        std::uniform_int_distribution<long long> num(-60, 60);
        std::uniform_int_distribution<long long> den(1, 12);
        for (int trial = 0; trial < 1000; ++trial) {
            int m = md(rng), k = kd(rng);
            Rational mu(num(rng), den(rng));
            CoefficientSet<Rational> cs = coefficients_exact(m, k, mu);
            Rational zeta = Rational(2) * (Rational(k) + Rational(m - 1) * mu);
            CHECK(cs.scalar.eta > Rational(0));
            if (cs.scalar.valid) CHECK(cs.scalar.beta == cs.scalar.alpha * zeta);
        }
    }

    SUBCASE("trace identities hold over randomized parameters") {
        std::mt19937 rng(23);
        std::uniform_int_distribution<int> md(1, 7), kd(0, 9);
        std::uniform_int_distribution<long long> num(-40, 40);
        std::uniform_int_distribution<long long> den(1, 10);
        for (int trial = 0; trial < 1000; ++trial) {
            int m = md(rng), k = kd(rng);
            Rational mu(num(rng), den(rng));
            CoefficientSet<Rational> cs = coefficients_exact(m, k, mu);
            Rational mT(m);
            CHECK(cs.trace.zeta == cs.hess.zeta - mT * cs.lap.zeta);
            CHECK(cs.trace.eta == cs.hess.eta - mT * cs.lap.eta);
            CHECK(cs.trace.zeta == Rational(-2 * (m - 1)) * mu - Rational(k));
            CHECK(cs.trace.eta ==
                  -Rational(m - 1) * mu * (Rational(m - 2) * mu + Rational(k)) +
                      Rational(k) * (mu - Rational(1)));
        }
    }
}

TEST_CASE("exceptional parameter sets") {
    SUBCASE("(3,1): mu_bar = -1, mu_bar_pm = -1 -+ sqrt(2)") {
        ExceptionalSet e = exceptional_mus(3, 1);
        REQUIRE(e.mu_bar.has_value());
        CHECK(*e.mu_bar == Rational(-1));
        REQUIRE(e.mu_bar_plus.has_value());
        CHECK(e.mu_bar_plus->to_double() == doctest::Approx(-1.0 + std::sqrt(2.0)));
        CHECK(e.mu_bar_minus->to_double() == doctest::Approx(-1.0 - std::sqrt(2.0)));
    }

    SUBCASE("m = 2: exceptional values are 0, 1, 1/2 for every k") {
        for (int k = 1; k <= 6; ++k) {
            ExceptionalSet e = exceptional_mus(2, k);
            REQUIRE(e.ricci.size() == 3);
            CHECK(e.ricci[0] == 0.0);
            CHECK(e.ricci[1] == 1.0);
            CHECK(e.ricci[2] == 0.5);
        }
    }

    SUBCASE("(1,4): {0, 1, 4, 4 -+ sqrt(12)}") {
        ExceptionalSet e = exceptional_mus(1, 4);
        REQUIRE(e.mu_bar_plus.has_value());
        CHECK(e.mu_bar_plus->to_double() == doctest::Approx(4.0 - std::sqrt(12.0)));
        CHECK(e.mu_bar_minus->to_double() == doctest::Approx(4.0 + std::sqrt(12.0)));
        bool has_k = false;
        for (double v : e.ricci) has_k |= (v == 4.0);
        CHECK(has_k);
    }

    SUBCASE("every tabulated exceptional value zeroes its coefficient exactly") {
        // m >= 3 rows
        for (int m = 3; m <= 6; ++m)
            for (int k = 1; k <= 5; ++k) {
                Rational mu_bar(-k, m - 2);
                CoefficientSet<Rational> at_bar = coefficients_exact(m, k, mu_bar);
                CHECK(at_bar.hess.zeta.is_zero());
                CHECK(at_bar.lap.eta.is_zero());
                CHECK(at_bar.hess.eta == Rational(k) * (mu_bar - Rational(1)));
                CHECK(at_bar.lap.zeta == mu_bar);

                Rational disc = mu_bar * mu_bar - mu_bar;
                for (int sign : {+1, -1}) {
                    QuadExt mu_pm(mu_bar, Rational(sign), disc);
                    CoefficientSet<QuadExt> at_pm = coefficient_set<QuadExt>(m, k, mu_pm);
                    CHECK(at_pm.hess.eta.is_zero());
                    CHECK(at_pm.lap.zeta == mu_pm);
                    // eta^D = -k (mu - 1) on that locus
                    CHECK(at_pm.lap.eta == QuadExt(Rational(-k)) * (mu_pm - QuadExt(Rational(1))));
                    // zeta^H = k (mu - 1) / mu
                    CHECK(at_pm.hess.zeta ==
                          QuadExt(Rational(k)) * (mu_pm - QuadExt(Rational(1))) / mu_pm);
                }
            }

        // m = 1 rows (k > 1)
        for (int k = 2; k <= 5; ++k) {
            CoefficientSet<Rational> at_k = coefficients_exact(1, k, Rational(k));
            CHECK(at_k.hess.zeta.is_zero());
            CHECK(at_k.lap.eta.is_zero());
            CHECK(at_k.hess.eta == Rational(static_cast<long long>(k) * (k - 1)));

            Rational kk(k);
            Rational disc = kk * kk - kk;
            for (int sign : {+1, -1}) {
                QuadExt mu_pm(kk, Rational(sign), disc);
                CoefficientSet<QuadExt> at_pm = coefficient_set<QuadExt>(1, k, mu_pm);
                CHECK(at_pm.hess.eta.is_zero());
                CHECK(at_pm.lap.eta == QuadExt(Rational(-k)) * (mu_pm - QuadExt(Rational(1))));
            }
        }

        // m = 2 rows: zeta^H = -k always, eta^H = 0 at mu = 1/2
        for (int k = 1; k <= 5; ++k) {
            CoefficientSet<Rational> at_half = coefficients_exact(2, k, Rational(1, 2));
            CHECK(at_half.hess.zeta == Rational(-k));
            CHECK(at_half.hess.eta.is_zero());
            CHECK(at_half.lap.zeta == Rational(1, 2));
            CHECK(at_half.lap.eta == Rational(k, 2));
        }

        // scalar-relation exception: zeta = 0 at mu = -k/(m-1)
        for (int m = 2; m <= 5; ++m)
            for (int k = 1; k <= 5; ++k) {
                CoefficientSet<Rational> cs = coefficients_exact(m, k, Rational(-k, m - 1));
                CHECK(cs.scalar.zeta.is_zero());
                CHECK(cs.scalar.eta > Rational(0));
            }
        // m = 1: eta = 0 at mu = (k+1)/2
        for (int k = 1; k <= 5; ++k) {
            CoefficientSet<Rational> cs = coefficients_exact(1, k, Rational(k + 1, 2));
            CHECK(cs.scalar.eta.is_zero());
            CHECK(cs.scalar.zeta == Rational(2 * k));
        }
    }

    SUBCASE("near-exceptional doubles raise the warning flag") {
        CoefficientSet<double> cs = coefficients({3, 2, -2.0 + 5e-10});
        CHECK(cs.near_exceptional); // mu_bar = -2 for (3,2)
    }
}

namespace {

struct SmallSbcwp {
    MetricField base;
    MetricField fiber;
    ScalarField psi;
};

SmallSbcwp flat_sphere_setup(double h, int count) {
    GridPtr bg = make_grid({Axis{"x", 0.0, h, count}, Axis{"y", 0.0, h, count}});
    GridPtr fg = make_grid({Axis{"th", 1.0, h, count}, Axis{"ph", 0.0, h, count}});
    ScalarField psi = ScalarField::sample(bg, [](std::span<const double> x) {
        return std::exp(0.1 * x[0]);
    });
    return SmallSbcwp{flat_metric(bg), sphere_metric(fg), std::move(psi)};
}

} // namespace

TEST_CASE("Ricci residual against the oracle") {
    SUBCASE("psi = 1: plain product blocks") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        ScalarField one = ScalarField::sample(s.base.grid_ptr(), [](std::span<const double>) {
            return 1.0;
        });
        RicciResidual r = ricci_residual(s.base, s.fiber, one, 0.7);
        CHECK(r.base_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.fiber_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.mixed < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("mu = 0 reproduces the singly-warped Ricci") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        RicciResidual r = ricci_residual(s.base, s.fiber, s.psi, 0.0);
        CHECK(r.base_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.fiber_unreduced < fd_tolerance(0.02, 10.0));
        CHECK_FALSE(r.reduced_valid); // mu = 0 is exceptional for the reduced form
    }

    SUBCASE("(2,2,1/2) exceptional: the unreduced system still matches") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        RicciResidual r = ricci_residual(s.base, s.fiber, s.psi, 0.5);
        CHECK(r.base_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.fiber_unreduced < fd_tolerance(0.02, 10.0));
        CHECK_FALSE(r.reduced_valid);
    }

    SUBCASE("generic mu: reduced and unreduced agree and match the oracle") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        RicciResidual r = ricci_residual(s.base, s.fiber, s.psi, -0.7);
        CHECK(r.reduced_valid);
        CHECK(r.base_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.fiber_unreduced < fd_tolerance(0.02, 10.0));
        CHECK(r.base_reduced < fd_tolerance(0.02, 10.0));
        CHECK(r.fiber_reduced < fd_tolerance(0.02, 10.0));
        CHECK(r.forms_agreement < fd_tolerance(0.02, 10.0));
        CHECK(r.mixed < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("Einstein fiber variant: unit sphere has nu = 1") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        RicciResidual r = ricci_residual_einstein_fiber(s.base, s.fiber, 1.0, s.psi, -0.7);
        CHECK(r.fiber_unreduced < fd_tolerance(0.02, 10.0));
    }
}

TEST_CASE("scalar residual branches") {
    SUBCASE("mu = 0 branch with oracle S") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        ScalarField S = oracle_scalar_on_base(s.base, s.fiber, s.psi, 0.0);
        ScalarResidual r = scalar_residual(s.base, 2, 2.0, s.psi, 0.0, S);
        CHECK(r.branch == ScalarBranch::ReducedU);
        CHECK(r.max_branch_residual < fd_tolerance(0.02, 10.0));
        CHECK(r.max_zeta_eta_residual < fd_tolerance(0.02, 10.0));
    }

    SUBCASE("constant psi: S collapses to S_B kappa^{-2mu} + S_F kappa^{-2}") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        double kappa = 1.3, mu = 0.8;
        ScalarField kpsi = ScalarField::sample(s.base.grid_ptr(), [=](std::span<const double>) {
            return kappa;
        });
        double SF = 2.0;
        double S_expect = SF * std::pow(kappa, -2.0); // S_B = 0 on the flat base
        ScalarField S = ScalarField::sample(s.base.grid_ptr(), [=](std::span<const double>) {
            return S_expect;
        });
        ScalarResidual r = scalar_residual(s.base, 2, SF, kpsi, mu, S);
        CHECK(r.max_branch_residual < 1e-10);
        CHECK(r.max_zeta_eta_residual < 1e-10);
    }

    SUBCASE("m=2, k=2, mu = -k/(m-1) = -2 exceptional branch") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        double mu = -2.0;
        CHECK(select_scalar_branch(2, 2, mu) == ScalarBranch::ZetaEtaSpecial);
        ScalarField S = oracle_scalar_on_base(s.base, s.fiber, s.psi, mu);
        ScalarResidual r = scalar_residual(s.base, 2, 2.0, s.psi, mu, S);
        CHECK(r.max_branch_residual < fd_tolerance(0.02, 30.0));
        CHECK(r.max_zeta_eta_residual < fd_tolerance(0.02, 30.0));
    }

    SUBCASE("m=1 branch selection") {
        CHECK(select_scalar_branch(1, 3, 2.0) == ScalarBranch::M1HalfK1);
        CHECK(select_scalar_branch(1, 1, 1.0) == ScalarBranch::M1K1Mu1);
        CHECK(select_scalar_branch(1, 3, 1.0) == ScalarBranch::ReducedU);
        CHECK(branch_name(ScalarBranch::M1HalfK1) == "m1-half-k1");
    }

    SUBCASE("m=1, k=1, mu=1: conformal-product relation against the oracle") {
        double h = 0.01;
        GridPtr bg = make_grid({Axis{"x", 0.0, h, 11}});
        GridPtr fg = make_grid({Axis{"y", 0.0, h, 11}});
        ScalarField psi = ScalarField::sample(bg, [](std::span<const double> x) {
            return 1.0 + 0.2 * std::sin(x[0]);
        });
        MetricField base = flat_metric(bg);
        MetricField fiber = flat_metric(fg);
        ScalarField S = oracle_scalar_on_base(base, fiber, psi, 1.0);
        ScalarResidual r = scalar_residual(base, 1, 0.0, psi, 1.0, S);
        CHECK(r.branch == ScalarBranch::M1K1Mu1);
        CHECK(r.max_branch_residual < fd_tolerance(h, 10.0));
    }

    SUBCASE("reduction consistency: u-form and psi-form residuals vanish together") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        for (double mu : {0.3, -0.7, 2.0}) {
            ScalarField S = oracle_scalar_on_base(s.base, s.fiber, s.psi, mu);
            ScalarResidual r = scalar_residual(s.base, 2, 2.0, s.psi, mu, S);
            CHECK(r.max_branch_residual < fd_tolerance(0.02, 30.0));
            CHECK(r.max_zeta_eta_residual < fd_tolerance(0.02, 30.0));
        }
    }

    SUBCASE("non-positive psi rejected") {
        SmallSbcwp s = flat_sphere_setup(0.02, 9);
        ScalarField bad = ScalarField::sample(s.base.grid_ptr(), [](std::span<const double> x) {
            return x[0] - 0.05;
        });
        ScalarField S(s.base.grid_ptr());
        CHECK_THROWS_AS(scalar_residual(s.base, 2, 2.0, bad, 0.5, S), DomainError);
    }
}
