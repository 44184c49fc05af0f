#include "cwp/sbcwp.hpp"

#include <cmath>

namespace cwp {

namespace {

template <typename T>
bool value_is_zero(const T& v) {
    return v.is_zero();
}
bool value_is_zero(double v) { return v == 0.0; }

template <typename T>
CoefficientPair<T> make_pair_t(const T& zeta, const T& eta) {
    CoefficientPair<T> p;
    p.zeta = zeta;
    p.eta = eta;
    p.valid = !value_is_zero(zeta) && !value_is_zero(eta);
    if (p.valid) {
        p.alpha = zeta / eta;
        p.beta = zeta * zeta / eta;
    }
    return p;
}

} // namespace

template <typename T>
CoefficientSet<T> coefficient_set(int m, int k, const T& mu) {
    const T mT = T(m), kT = T(k);
    const T one = T(1), two = T(2);

    T zeta = two * (kT + (mT - one) * mu);
    T eta = (mT - one) * (mT - two) * mu * mu + two * (mT - two) * kT * mu + (kT + one) * kT;

    T bracket = (mT - two) * mu + kT; // (m-2)mu + k
    T zetaH = -bracket;
    T etaH = mu * bracket + kT * (mu - one);
    T zetaD = mu;
    T etaD = mu * bracket;

    CoefficientSet<T> out;
    out.scalar = make_pair_t(zeta, eta);
    out.hess = make_pair_t(zetaH, etaH);
    out.lap = make_pair_t(zetaD, etaD);
    out.trace = make_pair_t(zetaH - mT * zetaD, etaH - mT * etaD);
    if (out.scalar.valid) {
        out.p = two * mu * out.scalar.alpha + one;
        out.q = out.p - two * out.scalar.alpha;
        out.pq_valid = true;
    }
    return out;
}

template CoefficientSet<double> coefficient_set<double>(int, int, const double&);
template CoefficientSet<Rational> coefficient_set<Rational>(int, int, const Rational&);
template CoefficientSet<QuadExt> coefficient_set<QuadExt>(int, int, const QuadExt&);

CoefficientSet<Rational> coefficients_exact(int m, int k, const Rational& mu) {
    if (m < 1 || k < 0) throw DomainError("coefficients: need m >= 1, k >= 0");
    return coefficient_set<Rational>(m, k, mu);
}

CoefficientSet<double> coefficients(const SbcwpParams& p) {
    if (p.m < 1 || p.k < 0) throw DomainError("coefficients: need m >= 1, k >= 0");
    CoefficientSet<double> out = coefficient_set<double>(p.m, p.k, p.mu);
    // Exceptional detection by proximity: the closed forms degrade smoothly,
    // so a coefficient can be tiny-but-nonzero in floating point.
    ExceptionalSet exc = exceptional_mus(p.m, p.k);
    for (double e : exc.ricci)
        if (std::abs(p.mu - e) < 1e-9) out.near_exceptional = true;
    double se = exc.scalar_exceptional.to_double();
    if (std::abs(p.mu - se) < 1e-9) out.near_exceptional = true;
    if (out.near_exceptional) {
        // invalidate any pair whose zeta or eta is within rounding of zero
        auto snap = [](CoefficientPair<double>& cp) {
            if (std::abs(cp.zeta) < 1e-7 || std::abs(cp.eta) < 1e-7) cp.valid = false;
        };
        snap(out.scalar);
        snap(out.hess);
        snap(out.lap);
        snap(out.trace);
        out.pq_valid = out.scalar.valid;
    }
    return out;
}

ExceptionalSet exceptional_mus(int m, int k) {
    if (m < 1 || k < 0) throw DomainError("exceptional_mus: need m >= 1, k >= 0");
    ExceptionalSet out;
    out.ricci = {0.0, 1.0};
    if (m == 1) {
        out.ricci.push_back(k);
        if (k > 1) {
            Rational kk(k);
            Rational disc = kk * kk - kk; // k^2 - k
            out.mu_bar_plus = QuadExt(kk, Rational(-1), disc);  // k - sqrt(k^2-k)
            out.mu_bar_minus = QuadExt(kk, Rational(1), disc);  // k + sqrt(k^2-k)
            out.ricci.push_back(out.mu_bar_plus->to_double());
            out.ricci.push_back(out.mu_bar_minus->to_double());
        }
        out.scalar_exceptional = Rational(k + 1, 2);
    } else if (m == 2) {
        out.ricci.push_back(0.5);
        out.scalar_exceptional = Rational(-k, 1);
    } else {
        Rational mu_bar(-k, m - 2);
        out.mu_bar = mu_bar;
        out.ricci.push_back(mu_bar.to_double());
        Rational disc = mu_bar * mu_bar - mu_bar; // mu_bar^2 - mu_bar > 0 for k >= 1
        out.mu_bar_plus = QuadExt(mu_bar, Rational(1), disc);
        out.mu_bar_minus = QuadExt(mu_bar, Rational(-1), disc);
        out.ricci.push_back(out.mu_bar_plus->to_double());
        out.ricci.push_back(out.mu_bar_minus->to_double());
        out.scalar_exceptional = Rational(-k, m - 1);
    }
    return out;
}

std::optional<std::string> published_value_note(int m, int k, const Rational& mu) {
    if (m == 6 && k == 5 && mu == Rational(-1, 2)) {
        return "note: beta = zeta^2/eta = 5/3 here (zeta = 5, eta = 15); a published table "
               "lists 10/3 for this cell, which is inconsistent with its own alpha = 1/3, "
               "p = 2/3, q = 0 (beta must equal alpha * zeta)";
    }
    return std::nullopt;
}

bool is_scalar_exceptional(int m, int k, double mu, double tol) {
    ExceptionalSet exc = exceptional_mus(m, k);
    return std::abs(mu - exc.scalar_exceptional.to_double()) < tol;
}

BcwpSpec make_sbcwp(const MetricField& base, const MetricField& fiber, const ScalarField& psi,
                    double mu) {
    if (!psi.positive()) throw DomainError("sbcwp: psi must be positive");
    return BcwpSpec(base, fiber, psi.pow(mu), psi);
}

namespace {

// Max |a - b| over base-block, fiber-block, and mixed-block components of two
// product-grid rank-2 tensors.
struct BlockDiff {
    double base = 0.0, fiber = 0.0, mixed = 0.0;
};

BlockDiff block_diff(const TensorField& a, const TensorField& b, int m) {
    const int n = a.grid().dim();
    Margins mg = detail::max_margins(a.margins(), b.margins());
    BlockDiff out;
    detail::for_each_valid(a.grid(), mg, [&](std::size_t node) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double d = std::abs(a.at(node, static_cast<std::size_t>(i) * n + j) -
                                    b.at(node, static_cast<std::size_t>(i) * n + j));
                if (i < m && j < m) out.base = std::max(out.base, d);
                else if (i >= m && j >= m) out.fiber = std::max(out.fiber, d);
                else out.mixed = std::max(out.mixed, d);
            }
    });
    return out;
}

TensorField assemble_ricci_formula(const MetricField& base, const MetricField& fiber,
                                   const TensorField& ricF_like, const TensorField& base_block,
                                   const ScalarField& fiber_factor, GridPtr pg) {
    const int m = base.dim(), k = fiber.dim();
    const int n = m + k;
    TensorField out(pg, {Var::Lower, Var::Lower});
    std::size_t fiber_nodes = fiber.grid().node_count();
    for (std::size_t node = 0; node < pg->node_count(); ++node) {
        std::size_t nb = node / fiber_nodes, nf = node % fiber_nodes;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                out.at(node, static_cast<std::size_t>(i) * n + j) =
                    base_block.at(nb, static_cast<std::size_t>(i) * m + j);
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
                out.at(node, static_cast<std::size_t>(m + u) * n + (m + v)) =
                    ricF_like.at(nf, static_cast<std::size_t>(u) * k + v) -
                    fiber_factor[nb] * fiber(nf, u, v);
    }
    Margins pm(n, 0);
    for (int a = 0; a < m; ++a)
        pm[a] = std::max(base_block.margins()[a], fiber_factor.margins()[a]);
    for (int a = 0; a < k; ++a) pm[m + a] = ricF_like.margins()[a];
    out.set_margins(pm);
    return out;
}

RicciResidual ricci_residual_impl(const MetricField& base, const MetricField& fiber,
                                  const TensorField& ricF, const ScalarField& psi, double mu,
                                  int order) {
    const int m = base.dim(), k = fiber.dim();
    BcwpSpec spec = make_sbcwp(base, fiber, psi, mu);
    MetricField product = assemble(spec);
    TensorField oracle = ricci(product, order);
    GridPtr pg = product_grid(spec);

    TensorField ricB = ricci(base, order);
    ScalarField psi_mu = psi.pow(mu);
    TensorField hess_psi = hessian(base, psi, order);
    TensorField hess_psi_mu = hessian(base, psi_mu, order);
    ScalarField lap_psi = laplace_beltrami(base, psi, order);
    ScalarField lap_psi_mu = laplace_beltrami(base, psi_mu, order);
    ScalarField norm2 = grad_inner(base, psi, psi, order);
    std::vector<ScalarField> dpsi;
    for (int a = 0; a < m; ++a) dpsi.push_back(partial_derivative(psi, a, order));

    Margins base_mg = ricB.margins();
    base_mg = detail::max_margins(base_mg, hess_psi.margins());
    base_mg = detail::max_margins(base_mg, hess_psi_mu.margins());
    base_mg = detail::max_margins(base_mg, lap_psi_mu.margins());
    base_mg = detail::max_margins(base_mg, norm2.margins());

    // unreduced base block (valid for every mu)
    TensorField base_unred(base.grid_ptr(), {Var::Lower, Var::Lower});
    ScalarField fiber_factor_unred(base.grid_ptr());
    for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
        double p = psi[nb], pmu = psi_mu[nb];
        double bracket = ((m - 3) * mu * mu + k * mu) * norm2[nb] / (p * p) + lap_psi_mu[nb] / pmu;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double v = ricB.at(nb, static_cast<std::size_t>(a) * m + b);
                v -= (m - 2) / pmu * hess_psi_mu.at(nb, static_cast<std::size_t>(a) * m + b);
                v -= k / p * hess_psi.at(nb, static_cast<std::size_t>(a) * m + b);
                v += 2.0 * mu * ((m - 2) * mu + k) / (p * p) * dpsi[a][nb] * dpsi[b][nb];
                v -= bracket * base(nb, a, b);
                base_unred.at(nb, static_cast<std::size_t>(a) * m + b) = v;
            }
        fiber_factor_unred[nb] = std::pow(p, -2.0 * (mu - 1.0)) *
                                 (((m - 2) * mu + k - 1) * norm2[nb] / (p * p) + lap_psi[nb] / p);
    }
    base_unred.set_margins(base_mg);
    fiber_factor_unred.margins() = base_mg;

    TensorField formula_unred =
        assemble_ricci_formula(base, fiber, ricF, base_unred, fiber_factor_unred, pg);

    RicciResidual out;
    BlockDiff d = block_diff(formula_unred, oracle, m);
    out.base_unreduced = d.base;
    out.fiber_unreduced = d.fiber;
    out.mixed = d.mixed;

    // reduced form, when defined
    CoefficientSet<double> cs = coefficients({m, k, mu});
    if (cs.hess.valid && cs.lap.valid && mu != 0.0 && mu != 1.0 && !cs.near_exceptional) {
        out.reduced_valid = true;
        ScalarField psi_aH = psi.pow(1.0 / cs.hess.alpha);
        ScalarField psi_aD = psi.pow(1.0 / cs.lap.alpha);
        TensorField hess_aH = hessian(base, psi_aH, order);
        ScalarField lap_aD = laplace_beltrami(base, psi_aD, order);

        TensorField base_red(base.grid_ptr(), {Var::Lower, Var::Lower});
        ScalarField fiber_factor_red(base.grid_ptr());
        for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
            double lap_term = cs.lap.beta * lap_aD[nb] / psi_aD[nb];
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) {
                    double v = ricB.at(nb, static_cast<std::size_t>(a) * m + b);
                    v += cs.hess.beta / psi_aH[nb] *
                         hess_aH.at(nb, static_cast<std::size_t>(a) * m + b);
                    v -= lap_term * base(nb, a, b);
                    base_red.at(nb, static_cast<std::size_t>(a) * m + b) = v;
                }
            fiber_factor_red[nb] =
                std::pow(psi[nb], -2.0 * (mu - 1.0)) * (cs.lap.beta / mu) * lap_aD[nb] / psi_aD[nb];
        }
        Margins red_mg = detail::max_margins(base_mg, hess_aH.margins());
        red_mg = detail::max_margins(red_mg, lap_aD.margins());
        base_red.set_margins(red_mg);
        fiber_factor_red.margins() = red_mg;

        TensorField formula_red =
            assemble_ricci_formula(base, fiber, ricF, base_red, fiber_factor_red, pg);
        BlockDiff dr = block_diff(formula_red, oracle, m);
        out.base_reduced = dr.base;
        out.fiber_reduced = dr.fiber;
        BlockDiff agree = block_diff(formula_red, formula_unred, m);
        out.forms_agreement = std::max({agree.base, agree.fiber, agree.mixed});
    }
    return out;
}

} // namespace

RicciResidual ricci_residual(const MetricField& base, const MetricField& fiber,
                             const ScalarField& psi, double mu, int order) {
    return ricci_residual_impl(base, fiber, ricci(fiber, order), psi, mu, order);
}

RicciResidual ricci_residual_einstein_fiber(const MetricField& base, const MetricField& fiber,
                                            double nu, const ScalarField& psi, double mu,
                                            int order) {
    TensorField ricF(fiber.grid_ptr(), {Var::Lower, Var::Lower});
    const int k = fiber.dim();
    for (std::size_t nf = 0; nf < fiber.grid().node_count(); ++nf)
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
                ricF.at(nf, static_cast<std::size_t>(u) * k + v) = nu * fiber(nf, u, v);
    return ricci_residual_impl(base, fiber, ricF, psi, mu, order);
}

std::string branch_name(ScalarBranch b) {
    switch (b) {
        case ScalarBranch::ReducedU: return "reduced-u";
        case ScalarBranch::ZetaEtaSpecial: return "zeta-eta-exceptional";
        case ScalarBranch::M1HalfK1: return "m1-half-k1";
        case ScalarBranch::M1K1Mu1: return "m1-k1-mu1";
    }
    return "?";
}

ScalarBranch select_scalar_branch(int m, int k, double mu) {
    if (m >= 2) {
        if (std::abs(mu - (-static_cast<double>(k) / (m - 1))) < 1e-9)
            return ScalarBranch::ZetaEtaSpecial;
        return ScalarBranch::ReducedU;
    }
    // m == 1
    double k1 = (k + 1) / 2.0;
    if (std::abs(mu - k1) < 1e-9) {
        return (k == 1) ? ScalarBranch::M1K1Mu1 : ScalarBranch::M1HalfK1;
    }
    return ScalarBranch::ReducedU;
}

ScalarResidual scalar_residual(const MetricField& base, int k, double SF, const ScalarField& psi,
                               double mu, const ScalarField& S, int order) {
    if (!psi.positive()) throw DomainError("scalar_residual: psi must be positive");
    const int m = base.dim();
    ScalarBranch branch = select_scalar_branch(m, k, mu);

    ScalarField SB = scalar_curvature(base, order);
    ScalarField lap_psi = laplace_beltrami(base, psi, order);
    ScalarField norm2 = grad_inner(base, psi, psi, order);
    CoefficientSet<double> cs = coefficient_set<double>(m, k, mu);

    Margins mg = SB.margins();
    mg = detail::max_margins(mg, lap_psi.margins());
    mg = detail::max_margins(mg, norm2.margins());
    mg = detail::max_margins(mg, S.margins());

    // universal psi-form:
    //   psi^{2 mu} S = S_B + S_F psi^{2(mu-1)}
    //                - [(eta - zeta)|grad psi|^2/psi^2 + zeta Lap psi / psi]
    ScalarField ze(base.grid_ptr());
    for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
        double p = psi[nb];
        double lhs = std::pow(p, 2.0 * mu) * S[nb];
        double rhs = SB[nb] + SF * std::pow(p, 2.0 * (mu - 1.0)) -
                     ((cs.scalar.eta - cs.scalar.zeta) * norm2[nb] / (p * p) +
                      cs.scalar.zeta * lap_psi[nb] / p);
        ze[nb] = lhs - rhs;
    }
    ze.margins() = mg;

    ScalarField br(base.grid_ptr());
    switch (branch) {
        case ScalarBranch::ReducedU: {
            if (!cs.scalar.valid)
                throw DomainError("scalar_residual: reduced branch undefined at this mu");
            double alpha = cs.scalar.alpha, beta = cs.scalar.beta;
            ScalarField u = psi.pow(1.0 / alpha);
            ScalarField lap_u = laplace_beltrami(base, u, order);
            double p_exp = 2.0 * mu * alpha + 1.0;
            double q_exp = p_exp - 2.0 * alpha;
            for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
                br[nb] = -beta * lap_u[nb] + SB[nb] * u[nb] - S[nb] * std::pow(u[nb], p_exp) +
                         SF * std::pow(u[nb], q_exp);
            }
            br.margins() = detail::max_margins(mg, lap_u.margins());
            break;
        }
        case ScalarBranch::ZetaEtaSpecial: {
            // -k[1 + k/(m-1)] |grad psi|^2/psi^2
            //   = psi^{-2k/(m-1)} S - S_B - S_F psi^{-2(1 + k/(m-1))}
            double kk = k;
            double ratio = kk / (m - 1);
            for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
                double p = psi[nb];
                double lhs = -kk * (1.0 + ratio) * norm2[nb] / (p * p);
                double rhs = std::pow(p, -2.0 * ratio) * S[nb] - SB[nb] -
                             SF * std::pow(p, -2.0 * (1.0 + ratio));
                br[nb] = lhs - rhs;
            }
            br.margins() = mg;
            break;
        }
        case ScalarBranch::M1HalfK1: {
            // psi^{k+1} S = 2k (-Lap psi/psi + |grad psi|^2/psi^2) + S_F psi^{k-1}
            for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
                double p = psi[nb];
                double lhs = std::pow(p, k + 1.0) * S[nb];
                double rhs = 2.0 * k * (-lap_psi[nb] / p + norm2[nb] / (p * p)) +
                             SF * std::pow(p, k - 1.0);
                br[nb] = lhs - rhs;
            }
            br.margins() = mg;
            break;
        }
        case ScalarBranch::M1K1Mu1: {
            // psi^2 S = 2 (-Lap psi/psi + |grad psi|^2/psi^2)
            for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb) {
                double p = psi[nb];
                br[nb] = p * p * S[nb] - 2.0 * (-lap_psi[nb] / p + norm2[nb] / (p * p));
            }
            br.margins() = mg;
            break;
        }
    }

    ScalarResidual out{branch, 0.0, 0.0, br, ze};
    out.max_branch_residual = br.max_abs_interior();
    out.max_zeta_eta_residual = ze.max_abs_interior();
    return out;
}

ScalarField oracle_scalar_on_base(const MetricField& base, const MetricField& fiber,
                                  const ScalarField& psi, double mu, int order) {
    BcwpSpec spec = make_sbcwp(base, fiber, psi, mu);
    MetricField product = assemble(spec);
    ScalarField S = scalar_curvature(product, order);
    // central fiber slice
    const int kf = fiber.grid().dim();
    std::vector<int> central(kf);
    for (int a = 0; a < kf; ++a) central[a] = fiber.grid().axis(a).count / 2;
    std::size_t nf = fiber.grid().flatten(central);
    std::size_t fiber_nodes = fiber.grid().node_count();
    ScalarField out(base.grid_ptr());
    for (std::size_t nb = 0; nb < base.grid().node_count(); ++nb)
        out[nb] = S[nb * fiber_nodes + nf];
    Margins mg(base.grid().dim());
    for (int a = 0; a < base.grid().dim(); ++a) mg[a] = S.margins()[a];
    out.margins() = mg;
    return out;
}

} // namespace cwp
