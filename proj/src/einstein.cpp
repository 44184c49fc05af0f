#include "cwp/einstein.hpp"

#include <algorithm>
#include <cmath>

#include "cwp/bcwp.hpp"
#include "cwp/quadrature.hpp"

namespace cwp {

FirstIntegralResidual first_integral_residual(const EinsteinProblem& prob,
                                              const std::vector<double>& r,
                                              const std::vector<double>& v,
                                              const std::vector<double>* dv_analytic) {
    if (prob.k < 2)
        throw DomainError("first_integral_residual: vacuous for k = 1 (no information)");
    if (prob.mu == 0.0 || prob.mu == 1.0 || prob.mu == static_cast<double>(prob.k))
        throw DomainError("first_integral_residual: mu must avoid the exceptional values 0, 1, k");
    if (r.size() != v.size() || r.size() < 3)
        throw DomainError("first_integral_residual: need >= 3 samples");
    for (double x : v)
        if (!(x > 0.0)) throw DomainError("first_integral_residual: v must be positive");

    const double s = prob.metric_sign;
    const double mu = prob.mu, k = prob.k, lam = prob.lambda, nu = prob.nu;
    const double h = r[1] - r[0];
    const double e = (k - mu) / (1.0 - mu);

    FirstIntegralResidual out;
    out.first_integral.assign(r.size(), 0.0);
    out.eq_a.assign(r.size(), 0.0);
    out.eq_b.assign(r.size(), 0.0);

    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        double dv = dv_analytic ? (*dv_analytic)[i] : (v[i + 1] - v[i - 1]) / (2.0 * h);
        double fi = (k - 1.0) * (s * dv * dv / ((1.0 - mu) * (1.0 - mu)) +
                                 (lam / k) * std::pow(v[i], 2.0 / (1.0 - mu))) -
                    nu;
        out.first_integral[i] = fi;
        out.max_first_integral = std::max(out.max_first_integral, std::abs(fi));

        double d2v = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        double ra = lam * std::pow(v[i], 2.0 * mu / (1.0 - mu)) - s * (k / (mu - 1.0)) * d2v / v[i];
        out.eq_a[i] = ra;
        out.max_eq_a = std::max(out.max_eq_a, std::abs(ra));

        double ve_m = std::pow(v[i - 1], e), ve_0 = std::pow(v[i], e), ve_p = std::pow(v[i + 1], e);
        double d2ve = (ve_p - 2.0 * ve_0 + ve_m) / (h * h);
        double rb = lam * std::pow(v[i], 2.0 / (1.0 - mu)) - nu +
                    s * v[i] * v[i] * (1.0 / (k - mu)) * d2ve / ve_0;
        out.eq_b[i] = rb;
        out.max_eq_b = std::max(out.max_eq_b, std::abs(rb));
    }
    return out;
}

EinsteinSolution solve_quadrature(const EinsteinProblem& prob, double v0, double r0, double r1,
                                  int samples) {
    if (prob.k < 2) throw DomainError("solve_quadrature: needs k >= 2");
    if (prob.mu == 1.0) throw DomainError("solve_quadrature: mu = 1 is excluded");
    if (!(v0 > 0.0)) throw DomainError("solve_quadrature: v0 must be positive");
    const double s = prob.metric_sign;
    const double mu = prob.mu, k = prob.k, lam = prob.lambda, nu = prob.nu;
    const double om = 1.0 - mu;

    const double c_exp = 2.0 / om;
    auto radicand_plain = [&](double w) {
        return s * om * om * (nu / (k - 1.0) - (lam / k) * std::pow(w, c_exp));
    };

    // single possible turning point: the radicand is monotone in w
    std::optional<double> wstar;
    if (lam != 0.0) {
        double base = (k * nu) / ((k - 1.0) * lam);
        if (base > 0.0) {
            double cand = std::pow(base, om / 2.0);
            if (cand > v0) wstar = cand; // algebraic zero of the radicand
        }
    }

    // Near the turning point the plain difference cancels catastrophically;
    // factoring through expm1/log1p keeps full relative precision.
    auto radicand = [&](double w) {
        if (wstar) {
            double t = s * om * om * (lam / k) * std::pow(*wstar, c_exp);
            return t * (-std::expm1(c_exp * std::log1p((w - *wstar) / *wstar)));
        }
        return radicand_plain(w);
    };
    double rad0 = radicand(v0);
    if (rad0 < 0.0) throw DomainError("solve_quadrature: radicand negative at v0");
    if (rad0 == 0.0) throw DomainError("solve_quadrature: turning point at v0 (zero radicand)");

    auto integrand = [&](double w) { return 1.0 / std::sqrt(std::max(radicand(w), 1e-300)); };

    // Segment integral ending exactly at the turning point, computed in the
    // substituted variable w = w* - t^2 so the radicand keeps full relative
    // precision all the way into the singularity.
    auto integral_to_turning = [&](double w1) {
        double T = s * om * om * (lam / k) * std::pow(*wstar, c_exp);
        auto g = [&](double t) {
            if (t == 0.0) return 2.0 / std::sqrt(T * c_exp / *wstar);
            double rad = T * (-std::expm1(c_exp * std::log1p(-t * t / *wstar)));
            return 2.0 * t / std::sqrt(std::max(rad, 1e-300));
        };
        return adaptive_simpson(g, 0.0, std::sqrt(*wstar - w1), 1e-12);
    };

    // total available r-extent and the v upper bound over this run
    double target = r1 - r0;
    double vmax;
    double phi_max;
    bool turned = false;
    if (wstar) {
        phi_max = integral_to_turning(v0);
        if (phi_max <= target * (1.0 + 1e-9)) {
            turned = true;
            vmax = *wstar;
            target = phi_max;
        } else {
            vmax = *wstar;
        }
    } else {
        // expand until the quadrature covers the requested extent
        vmax = v0 + std::max(1.0, std::abs(v0));
        phi_max = adaptive_simpson(integrand, v0, vmax, 1e-10);
        int guard = 0;
        while (phi_max < target && guard++ < 200) {
            double vnext = v0 + 2.0 * (vmax - v0);
            phi_max += adaptive_simpson(integrand, vmax, vnext, 1e-10);
            vmax = vnext;
        }
    }

    // cumulative quadrature table on a fine v-mesh, then monotone inversion
    const int ntab = 4000;
    std::vector<double> vt(ntab + 1), phi(ntab + 1, 0.0);
    for (int i = 0; i <= ntab; ++i) vt[i] = v0 + (vmax - v0) * i / ntab;
    for (int i = 1; i <= ntab; ++i) {
        double seg;
        if (wstar && i == ntab)
            seg = integral_to_turning(vt[i - 1]);
        else
            seg = adaptive_simpson(integrand, vt[i - 1], vt[i], 1e-12);
        phi[i] = phi[i - 1] + seg;
    }

    EinsteinSolution sol;
    sol.kind = SolutionKind::FirstIntegralQuadrature;
    sol.metric_sign = prob.metric_sign;
    sol.hit_turning_point = turned;
    double r_end = r0 + std::min(target, phi[ntab]);
    for (int i = 0; i < samples; ++i) {
        double r = r0 + (r_end - r0) * i / (samples - 1);
        double want = r - r0;
        auto it = std::lower_bound(phi.begin(), phi.end(), want);
        double v;
        if (it == phi.begin()) v = v0;
        else if (it == phi.end()) v = vmax;
        else {
            std::size_t j = static_cast<std::size_t>(it - phi.begin());
            double t = (want - phi[j - 1]) / (phi[j] - phi[j - 1]);
            v = vt[j - 1] + t * (vt[j] - vt[j - 1]);
            // refine by bisection on the local segment
            v = bisect(
                [&](double x) {
                    double seg = (x >= vt[j - 1])
                                     ? adaptive_simpson(integrand, vt[j - 1], x, 1e-12)
                                     : -adaptive_simpson(integrand, x, vt[j - 1], 1e-12);
                    return phi[j - 1] + seg - want;
                },
                vt[j - 1], vt[j], 1e-13);
        }
        sol.r.push_back(r);
        sol.profile.push_back(v);
        double rad = std::max(radicand(v), 0.0);
        sol.derivative.push_back(std::sqrt(rad));
    }
    sol.positive_lo = sol.r.front();
    sol.positive_hi = sol.r.back();

    // self-consistency: first integral with the solver's analytic derivative
    if (prob.k >= 2 && mu != 0.0) {
        FirstIntegralResidual res =
            first_integral_residual(prob, sol.r, sol.profile, &sol.derivative);
        sol.max_residual = res.max_first_integral;
    }
    return sol;
}

EinsteinSolution closed_form_mu_minus1(int k, double nu, double lambda, double gamma,
                                       int metric_sign) {
    if (k < 2) throw DomainError("closed_form_mu_minus1: needs k >= 2");
    if (lambda == 0.0)
        throw DomainError("closed_form_mu_minus1: lambda = 0 (use the quadrature branch)");
    const double s = metric_sign;
    const double A = -s * lambda / k;
    const double B = (nu / lambda) * k / (k - 1.0);

    EinsteinSolution sol;
    sol.kind = SolutionKind::ClosedFormMuMinus1;
    sol.metric_sign = metric_sign;
    sol.gamma = gamma;

    double lo, hi;
    if (A < 0.0) {
        if (B <= 0.0) throw DomainError("closed_form_mu_minus1: profile never positive");
        double half = std::sqrt(B / -A);
        lo = -gamma - half;
        hi = -gamma + half;
    } else {
        if (B >= 0.0) {
            lo = -std::numeric_limits<double>::infinity();
            hi = std::numeric_limits<double>::infinity();
        } else {
            double half = std::sqrt(-B / A);
            lo = -gamma + half; // right ray; the left ray is its mirror image
            hi = std::numeric_limits<double>::infinity();
        }
    }
    sol.positive_lo = lo;
    sol.positive_hi = hi;

    double a = std::isfinite(lo) ? lo : -gamma - 10.0;
    double b = std::isfinite(hi) ? hi : -gamma + 10.0;
    const int n = 201;
    for (int i = 0; i < n; ++i) {
        double r = a + (b - a) * (i + 0.5) / n; // stay inside the open interval
        sol.r.push_back(r);
        sol.profile.push_back(A * (r + gamma) * (r + gamma) + B);
        sol.derivative.push_back(2.0 * A * (r + gamma));
    }
    return sol;
}

std::pair<Rational, Rational> closed_form_residual_exact(int k, const Rational& nu,
                                                         const Rational& lambda,
                                                         int metric_sign) {
    if (lambda.is_zero()) throw DomainError("closed_form_residual_exact: lambda must be nonzero");
    Rational s(metric_sign);
    Rational kk(k);
    Rational A = -s * lambda / kk;
    Rational B = (nu / lambda) * kk / (kk - Rational(1));
    // first integral at mu = -1: (k-1)( s (v')^2 / 4 + (lambda/k) v ) - nu
    // v = A (r+gamma)^2 + B, v' = 2A (r+gamma)
    Rational quad_coeff = (kk - Rational(1)) * (s * A * A + (lambda / kk) * A);
    Rational const_term = (kk - Rational(1)) * (lambda / kk) * B - nu;
    return {quad_coeff, const_term};
}

EinsteinSolution k1_profile(const std::vector<double>& lambda_samples, double r0, double h,
                            int metric_sign, double a, double b) {
    if (lambda_samples.size() < 5) throw DomainError("k1_profile: need >= 5 samples");
    const double s = metric_sign;
    std::vector<double> first = cumulative_trapezoid(lambda_samples, h);
    std::vector<double> second = cumulative_trapezoid(first, h);

    EinsteinSolution sol;
    sol.kind = SolutionKind::K1DoubleIntegral;
    sol.metric_sign = metric_sign;
    bool any_positive = false;
    for (std::size_t i = 0; i < lambda_samples.size(); ++i) {
        double r = r0 + i * h;
        double v = -2.0 * s * second[i] + a * r + b;
        sol.r.push_back(r);
        sol.profile.push_back(v);
        sol.derivative.push_back(-2.0 * s * first[i] + a);
        if (v > 0.0) any_positive = true;
    }
    if (!any_positive) throw DomainError("k1_profile: v nowhere positive on the domain");

    // residual of v'' = -2 s lambda by second differences
    for (std::size_t i = 1; i + 1 < sol.profile.size(); ++i) {
        double d2 = (sol.profile[i + 1] - 2.0 * sol.profile[i] + sol.profile[i - 1]) / (h * h);
        sol.max_residual = std::max(sol.max_residual, std::abs(d2 + 2.0 * s * lambda_samples[i]));
    }

    // positivity interval around the first positive sample
    std::size_t first_pos = 0;
    while (first_pos < sol.profile.size() && sol.profile[first_pos] <= 0.0) ++first_pos;
    std::size_t last_pos = first_pos;
    while (last_pos + 1 < sol.profile.size() && sol.profile[last_pos + 1] > 0.0) ++last_pos;
    sol.positive_lo = sol.r[first_pos];
    sol.positive_hi = sol.r[last_pos];
    return sol;
}

TraceCompat trace_compat(int m, int k) {
    if (m < 2 || k < 2) throw DomainError("trace_compat: needs m >= 2, k >= 2");
    TraceCompat out;
    if (m == 2) {
        out.mu_tilde = Rational(1 - k, 2);
        return out;
    }
    // roots of (m-1)(m-2) mu^2 + 2(m-1)k mu + k(k-1)
    Rational denom(static_cast<long long>(m - 1) * (m - 2));
    Rational a(-k, m - 2); // -(m-1)k / ((m-1)(m-2))
    Rational d = Rational(static_cast<long long>(m - 1) * k * (k + m - 2)) / (denom * denom);
    out.mu_tilde_plus = QuadExt(a, Rational(1), d);
    out.mu_tilde_minus = QuadExt(a, Rational(-1), d);
    return out;
}

// ---- generalized Schwarzschild ----------------------------------------------

double PowerProfile::eval(double r) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coeff.to_double() * std::pow(r, t.expnt.to_double());
    return s;
}

double PowerProfile::eval_d1(double r) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double a = t.expnt.to_double();
        s += t.coeff.to_double() * a * std::pow(r, a - 1.0);
    }
    return s;
}

double PowerProfile::eval_d2(double r) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double a = t.expnt.to_double();
        s += t.coeff.to_double() * a * (a - 1.0) * std::pow(r, a - 2.0);
    }
    return s;
}

namespace {

void add_term(std::vector<PowerTerm>& terms, const Rational& coeff, const Rational& expnt) {
    if (coeff.is_zero()) return;
    for (auto& t : terms) {
        if (t.expnt == expnt) {
            t.coeff += coeff;
            return;
        }
    }
    terms.push_back({coeff, expnt});
}

bool all_zero(const std::vector<PowerTerm>& terms) {
    for (const auto& t : terms)
        if (!t.coeff.is_zero()) return false;
    return true;
}

} // namespace

PowerProfile euler_apply(const PowerProfile& f) {
    PowerProfile out;
    for (const auto& t : f.terms)
        add_term(out.terms, t.coeff * (Rational(1) - t.expnt * t.expnt), t.expnt);
    return out;
}

PowerProfile l_operator_apply(const PowerProfile& f) {
    PowerProfile out;
    for (const auto& t : f.terms)
        add_term(out.terms, Rational(2) * t.coeff * (Rational(1) + t.expnt), t.expnt - Rational(1));
    return out;
}

SchwarzschildSolution schwarzschild_general(int k, const Rational& lambda, const Rational& nu,
                                            const Rational& C, double r_lo, double r_hi,
                                            int samples) {
    if (k < 2) throw DomainError("schwarzschild_general: needs k >= 2");
    SchwarzschildSolution sol;
    sol.k = k;
    sol.lambda = lambda;
    sol.nu = nu;
    sol.C = C;

    Rational ap = Rational(1) + Rational(2, k); // 1 + 2/k
    Rational am = Rational(1) - Rational(2, k); // 1 - 2/k (zero exponent when k = 2)
    Rational dp = Rational(1) - ap * ap;        // never zero for k >= 1
    Rational dm = Rational(1) - am * am;        // equals 1 when k = 2

    add_term(sol.u2.terms, lambda / dp, ap);
    add_term(sol.u2.terms, nu / dm, am);
    add_term(sol.u2.terms, C, Rational(-1));

    // exact Euler residual: r^3 S_B u^2 - (lambda r^{1+2/k} + nu r^{1-2/k})
    PowerProfile lhs = euler_apply(sol.u2);
    add_term(lhs.terms, -lambda, ap);
    add_term(lhs.terms, -nu, am);
    sol.euler_residual_zero = all_zero(lhs.terms);

    // exact first-order residual: lambda r^{2/k} - nu r^{-2/k} + (1/k) L u^2
    PowerProfile fo = l_operator_apply(sol.u2);
    for (auto& t : fo.terms) t.coeff = t.coeff / Rational(k);
    add_term(fo.terms, lambda, ap - Rational(1));
    add_term(fo.terms, -nu, am - Rational(1));
    sol.first_order_residual_zero = all_zero(fo.terms);

    // numeric Euler residual with analytic power-law derivatives
    for (int i = 0; i < samples; ++i) {
        double r = r_lo + (r_hi - r_lo) * i / (samples - 1);
        double f = sol.u2.eval(r), f1 = sol.u2.eval_d1(r), f2 = sol.u2.eval_d2(r);
        double left = f - r * f1 - r * r * f2;
        double right = lambda.to_double() * std::pow(r, ap.to_double()) +
                       nu.to_double() * std::pow(r, am.to_double());
        sol.max_numeric_residual = std::max(sol.max_numeric_residual, std::abs(left - right));
    }
    return sol;
}

SpuriousCheck spurious_filter(int k, const Rational& r_coefficient,
                              const Rational& inv_r_coefficient) {
    (void)inv_r_coefficient; // C/r always passes: L(1/r) = 0
    SpuriousCheck out;
    out.accepted = r_coefficient.is_zero();
    // L(a r) = 2 a (1 + 1) r^0 = 4a; the block equation picks up -(1/k) L
    out.residual_coefficient = -Rational(4) * r_coefficient / Rational(k);
    return out;
}

double functional_equation_residual(const SchwarzschildSolution& sol, double r_lo, double r_hi,
                                    int samples) {
    // m = 2, mu = (1-k)/2, psi = r^{2/k}: both bracket coefficients equal 1, so
    //   lambda psi^{1-k} + nu psi^{-(k+1)} = S_B,  S_B = r^{-3} (euler form)
    double worst = 0.0;
    const double k = sol.k;
    for (int i = 0; i < samples; ++i) {
        double r = r_lo + (r_hi - r_lo) * i / (samples - 1);
        double psi = std::pow(r, 2.0 / k);
        double lhs = sol.lambda.to_double() * std::pow(psi, 1.0 - k) +
                     sol.nu.to_double() * std::pow(psi, -(k + 1.0));
        double f = sol.u2.eval(r), f1 = sol.u2.eval_d1(r), f2 = sol.u2.eval_d2(r);
        double SB = (f - r * f1 - r * r * f2) / (r * r * r);
        worst = std::max(worst, std::abs(lhs - SB));
    }
    return worst;
}

NestedCheck nested_bcwp_check(const PowerProfile& u2, double lambda, int metric_sign, double r_lo,
                              double r_hi, double h, int order) {
    // charts: s in [r_lo^2, r_hi^2] with spacing giving dr <= h near r_lo
    double s_lo = r_lo * r_lo, s_hi = r_hi * r_hi;
    double ds = 2.0 * r_lo * h;
    int s_count = static_cast<int>(std::ceil((s_hi - s_lo) / ds)) + 1;

    auto u_at = [&](double s) { return std::sqrt(u2.eval(std::sqrt(s))); };
    auto psi1 = [&](double s) { return 2.0 * std::pow(s, 0.25) * u_at(s); };

    // passive axes (the metric is y- and phi-independent) still need enough
    // nodes to host the stencil margins
    int passive_count = 4 * stencil_radius(order) + 1;
    GridPtr s_grid = make_grid_1d("s", s_lo, ds, s_count);
    GridPtr y_grid = make_grid_1d("y", 0.0, ds, passive_count);

    MetricField inner_base(s_grid, {1});
    for (std::size_t n = 0; n < s_grid->node_count(); ++n) inner_base.set(n, 0, 0, 1.0);
    MetricField inner_fiber(y_grid, {metric_sign});
    for (std::size_t n = 0; n < y_grid->node_count(); ++n)
        inner_fiber.set(n, 0, 0, static_cast<double>(metric_sign));

    ScalarField c1 = ScalarField::sample(s_grid, [&](std::span<const double> x) {
        return 1.0 / psi1(x[0]); // psi_1^{mu_1}, mu_1 = -1
    });
    ScalarField w1 = ScalarField::sample(s_grid, [&](std::span<const double> x) {
        return psi1(x[0]);
    });
    BcwpSpec inner(inner_base, inner_fiber, c1, w1);
    MetricField base2 = assemble(inner); // metric on the (s,y) grid

    // outer fiber: unit-sphere patch away from the poles; the angular
    // truncation error scales with the u^2 magnitude, so keep the spacing
    // well below the radial resolution
    double h_ang = 0.004;
    GridPtr sph_grid = make_grid(
        {Axis{"theta", 1.0, h_ang, std::max(9, passive_count)}, Axis{"phi", 0.0, h_ang, passive_count}});
    MetricField sphere(sph_grid, {1, 1});
    for (std::size_t n = 0; n < sph_grid->node_count(); ++n) {
        std::vector<double> x(2);
        sph_grid->coordinates(n, x);
        sphere.set(n, 0, 0, 1.0);
        sphere.set(n, 0, 1, 0.0);
        sphere.set(n, 1, 1, std::sin(x[0]) * std::sin(x[0]));
    }

    GridPtr sy_grid = base2.grid_ptr();
    ScalarField c2 = ScalarField::sample(sy_grid, [&](std::span<const double> x) {
        return std::pow(std::sqrt(x[0]), -0.5); // psi_2^{mu_2}, psi_2 = s^{1/2}, mu_2 = -1/2
    });
    ScalarField w2 = ScalarField::sample(sy_grid, [&](std::span<const double> x) {
        return std::sqrt(x[0]);
    });
    BcwpSpec outer(base2, sphere, c2, w2);
    MetricField product = assemble(outer);

    // closed form in the (s, y, theta, phi) chart
    NestedCheck out;
    const int n4 = 4;
    std::vector<double> x(n4);
    for (std::size_t node = 0; node < product.grid().node_count(); ++node) {
        product.grid().coordinates(node, x);
        double s = x[0], th = x[2];
        double expect_ss = 1.0 / (4.0 * s * u2.eval(std::sqrt(s)));
        double expect_yy = metric_sign * 4.0 * u2.eval(std::sqrt(s));
        double expect_tt = s;
        double expect_pp = s * std::sin(th) * std::sin(th);
        out.metric_mismatch = std::max(out.metric_mismatch,
                                       std::abs(product(node, 0, 0) - expect_ss));
        out.metric_mismatch = std::max(out.metric_mismatch,
                                       std::abs(product(node, 1, 1) - expect_yy));
        out.metric_mismatch = std::max(out.metric_mismatch,
                                       std::abs(product(node, 2, 2) - expect_tt));
        out.metric_mismatch = std::max(out.metric_mismatch,
                                       std::abs(product(node, 3, 3) - expect_pp));
        for (int i = 0; i < n4; ++i)
            for (int j = i + 1; j < n4; ++j)
                out.metric_mismatch = std::max(out.metric_mismatch, std::abs(product(node, i, j)));
    }

    TensorField res = einstein_residual(product, lambda, order);
    out.ricci_residual = res.max_abs_interior();
    return out;
}

double compact_integrated_identity(const MetricField& base_periodic, const ScalarField& psi,
                                   int k, double mu, int order) {
    const int m = base_periodic.dim();
    for (int a = 0; a < m; ++a)
        if (!base_periodic.grid().axis(a).periodic)
            throw DomainError("compact_integrated_identity: base grid must be periodic");
    CoefficientSet<double> cs = coefficient_set<double>(m, k, mu);
    if (!cs.trace.valid) throw DomainError("compact_integrated_identity: trace pair undefined");
    double inv_alpha_tr = 1.0 / cs.trace.alpha;
    double beta_tr = cs.trace.beta;

    ScalarField SB = scalar_curvature(base_periodic, order);
    ScalarField pw = psi.pow(inv_alpha_tr);
    ScalarField lap_pw = laplace_beltrami(base_periodic, pw, order);

    // lambda m psi^{2 mu} := S_B + beta_tr psi^{-1/alpha_tr} Lap psi^{1/alpha_tr}
    double lhs = 0.0, rhs = 0.0, cell = 1.0;
    for (int a = 0; a < m; ++a) cell *= base_periodic.grid().axis(a).spacing;
    std::vector<double> lhs_terms, rhs_terms;
    for (std::size_t n = 0; n < base_periodic.grid().node_count(); ++n) {
        double vol = std::sqrt(std::abs(base_periodic.determinant_at(n))) * cell;
        double lam_m_psi2mu = SB[n] + beta_tr * lap_pw[n] / pw[n];
        lhs_terms.push_back(lam_m_psi2mu * pw[n] * vol);
        rhs_terms.push_back(SB[n] * pw[n] * vol);
    }
    lhs = pairwise_sum(lhs_terms);
    rhs = pairwise_sum(rhs_terms);
    return std::abs(lhs - rhs);
}

} // namespace cwp
