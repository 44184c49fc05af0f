#include "cwp/opfamilies.hpp"

#include <cmath>

namespace cwp {

ReducedForm reduce(const OpFamily& family) {
    ReducedForm out;
    double z = family.zeta(), e = family.eta();
    if (z != 0.0 && e != 0.0) {
        out.alpha = z / e;
        out.beta = z * z / e;
        out.valid = true;
    }
    return out;
}

OpFamilyEval eval_L(const OpFamily& family, const MetricField& g, const ScalarField& v,
                    int order) {
    if (!v.positive()) throw DomainError("eval_L: v must be positive");
    const double z = family.zeta(), e = family.eta();

    ScalarField literal(g.grid_ptr());
    Margins mg(g.grid().dim(), 0);
    for (const auto& t : family.terms) {
        ScalarField vp = v.pow(t.a);
        ScalarField lap = laplace_beltrami(g, vp, order);
        mg = detail::max_margins(mg, lap.margins());
        for (std::size_t n = 0; n < literal.grid().node_count(); ++n)
            literal[n] += t.r * lap[n] / vp[n];
    }
    literal.margins() = mg;

    ScalarField lap_v = laplace_beltrami(g, v, order);
    ScalarField norm2 = grad_inner(g, v, v, order);
    ScalarField closed(g.grid_ptr());
    for (std::size_t n = 0; n < closed.grid().node_count(); ++n)
        closed[n] = (e - z) * norm2[n] / (v[n] * v[n]) + z * lap_v[n] / v[n];
    closed.margins() = detail::max_margins(lap_v.margins(), norm2.margins());

    OpFamilyEval out{std::move(literal), std::move(closed), ScalarField(g.grid_ptr()), false};
    ReducedForm rf = reduce(family);
    if (rf.valid) {
        ScalarField u = v.pow(1.0 / rf.alpha);
        ScalarField lap_u = laplace_beltrami(g, u, order);
        ScalarField red(g.grid_ptr());
        for (std::size_t n = 0; n < red.grid().node_count(); ++n)
            red[n] = rf.beta * lap_u[n] / u[n];
        red.margins() = lap_u.margins();
        out.reduced = std::move(red);
        out.reduced_valid = true;
    }
    return out;
}

OpFamilyHessEval eval_H_family(const OpFamily& family, const MetricField& g, const ScalarField& v,
                               int order) {
    if (!v.positive()) throw DomainError("eval_H_family: v must be positive");
    const int n = g.dim();
    const double z = family.zeta(), e = family.eta();

    TensorField literal(g.grid_ptr(), {Var::Lower, Var::Lower});
    Margins mg(n, 0);
    for (const auto& t : family.terms) {
        ScalarField vp = v.pow(t.a);
        TensorField h = hessian(g, vp, order);
        mg = detail::max_margins(mg, h.margins());
        for (std::size_t node = 0; node < g.grid().node_count(); ++node)
            for (std::size_t c = 0; c < literal.comps(); ++c)
                literal.at(node, c) += t.r * h.at(node, c) / vp[node];
    }
    literal.set_margins(mg);

    TensorField hv = hessian(g, v, order);
    std::vector<ScalarField> dv;
    for (int a = 0; a < n; ++a) dv.push_back(partial_derivative(v, a, order));
    TensorField closed(g.grid_ptr(), {Var::Lower, Var::Lower});
    Margins cm = hv.margins();
    for (int a = 0; a < n; ++a) cm = detail::max_margins(cm, dv[a].margins());
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        double vv = v[node];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                closed.at(node, static_cast<std::size_t>(i) * n + j) =
                    (e - z) * dv[i][node] * dv[j][node] / (vv * vv) +
                    z * hv.at(node, static_cast<std::size_t>(i) * n + j) / vv;
    }
    closed.set_margins(cm);

    OpFamilyHessEval out{std::move(literal), std::move(closed),
                         TensorField(g.grid_ptr(), {Var::Lower, Var::Lower}), false};
    ReducedForm rf = reduce(family);
    if (rf.valid) {
        ScalarField u = v.pow(1.0 / rf.alpha);
        TensorField hu = hessian(g, u, order);
        TensorField red(g.grid_ptr(), {Var::Lower, Var::Lower});
        for (std::size_t node = 0; node < g.grid().node_count(); ++node)
            for (std::size_t c = 0; c < red.comps(); ++c)
                red.at(node, c) = rf.beta * hu.at(node, c) / u[node];
        red.set_margins(hu.margins());
        out.reduced = std::move(red);
        out.reduced_valid = true;
    }
    return out;
}

LapPowerEval lap_power(const MetricField& g, const ScalarField& v, double t, int order) {
    if (!v.positive()) throw DomainError("lap_power: v must be positive");
    ScalarField vp = v.pow(t);
    ScalarField direct = laplace_beltrami(g, vp, order);
    ScalarField lap_v = laplace_beltrami(g, v, order);
    ScalarField norm2 = grad_inner(g, v, v, order);
    ScalarField identity(g.grid_ptr());
    for (std::size_t n = 0; n < identity.grid().node_count(); ++n)
        identity[n] = t * ((t - 1.0) * std::pow(v[n], t - 2.0) * norm2[n] +
                           std::pow(v[n], t - 1.0) * lap_v[n]);
    identity.margins() = detail::max_margins(lap_v.margins(), norm2.margins());
    ScalarField difference = direct - identity;
    return LapPowerEval{std::move(direct), std::move(identity), std::move(difference)};
}

ScalarField conformal_laplacian_identity(const MetricField& g, const ScalarField& u, double r,
                                         const ScalarField& f, int order) {
    if (!u.positive()) throw DomainError("conformal_laplacian_identity: u must be positive");
    const int n = g.dim();
    ScalarField factor = u.pow(r);
    MetricField scaled = conformal_scale(g, factor);
    ScalarField lap_scaled = laplace_beltrami(scaled, f, order);
    ScalarField inner = grad_inner(g, u, f, order);
    ScalarField lap_f = laplace_beltrami(g, f, order);

    ScalarField res(g.grid_ptr());
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        double lhs = factor[node] * lap_scaled[node];
        double rhs = r * (n - 2) / 2.0 * inner[node] / u[node] + lap_f[node];
        res[node] = lhs - rhs;
    }
    res.margins() = detail::max_margins(lap_scaled.margins(),
                                        detail::max_margins(inner.margins(), lap_f.margins()));
    return res;
}

ScalarField conformal_scalar_identity(const MetricField& g, const ScalarField& v, double r,
                                      int order) {
    if (!v.positive()) throw DomainError("conformal_scalar_identity: v must be positive");
    const int n = g.dim();
    ScalarField factor = v.pow(r);
    MetricField scaled = conformal_scale(g, factor);
    ScalarField S_scaled = scalar_curvature(scaled, order);
    ScalarField S = scalar_curvature(g, order);

    ScalarField res(g.grid_ptr());
    if (n >= 3) {
        double expo = (n - 2) * r / 4.0;
        ScalarField ve = v.pow(expo);
        ScalarField lap_ve = laplace_beltrami(g, ve, order);
        for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
            double lhs = factor[node] * S_scaled[node];
            double rhs = S[node] - (n - 1) * 4.0 / (n - 2) * lap_ve[node] / ve[node];
            res[node] = lhs - rhs;
        }
        res.margins() = detail::max_margins(S_scaled.margins(),
                                            detail::max_margins(S.margins(), lap_ve.margins()));
    } else {
        ScalarField lap_v = laplace_beltrami(g, v, order);
        ScalarField norm2 = grad_inner(g, v, v, order);
        for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
            double lhs = factor[node] * S_scaled[node];
            double rhs = S[node] + r * (norm2[node] / (v[node] * v[node]) - lap_v[node] / v[node]);
            res[node] = lhs - rhs;
        }
        res.margins() = detail::max_margins(
            S_scaled.margins(), detail::max_margins(S.margins(), detail::max_margins(
                                                                     lap_v.margins(), norm2.margins())));
    }
    return res;
}

} // namespace cwp
