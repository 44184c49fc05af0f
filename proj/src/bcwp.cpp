#include "cwp/bcwp.hpp"

#include <cmath>

namespace cwp {

BcwpSpec::BcwpSpec(MetricField b, MetricField f, ScalarField c, ScalarField w)
    : base(std::move(b)), fiber(std::move(f)), conformal_factor(std::move(c)),
      warping_function(std::move(w)) {
    if (!conformal_factor.grid().same_layout(base.grid()) ||
        !warping_function.grid().same_layout(base.grid()))
        throw DomainError("BcwpSpec: c and w must live on the base grid");
    if (!conformal_factor.positive()) throw DomainError("BcwpSpec: conformal factor must be positive");
    if (!warping_function.positive()) throw DomainError("BcwpSpec: warping function must be positive");
}

GridPtr product_grid(const BcwpSpec& spec) {
    return ChartGrid::product(spec.base.grid(), spec.fiber.grid());
}

namespace {

struct SplitIndex {
    std::size_t base_nodes;
    std::size_t fiber_nodes;
    std::size_t base(std::size_t product_node) const { return product_node / fiber_nodes; }
    std::size_t fiber(std::size_t product_node) const { return product_node % fiber_nodes; }
};

SplitIndex splitter(const BcwpSpec& spec) {
    return SplitIndex{spec.base.grid().node_count(), spec.fiber.grid().node_count()};
}

// Per-axis margins for a product field: base-axis widths from base-side
// contributors, fiber-axis widths from fiber-side ones.
Margins product_margins(const BcwpSpec& spec, const std::vector<const Margins*>& base_parts,
                        const std::vector<const Margins*>& fiber_parts) {
    const int m = spec.m(), k = spec.k();
    Margins out(m + k, 0);
    for (const Margins* mp : base_parts)
        for (int a = 0; a < m; ++a) out[a] = std::max(out[a], (*mp)[a]);
    for (const Margins* mp : fiber_parts)
        for (int a = 0; a < k; ++a) out[m + a] = std::max(out[m + a], (*mp)[a]);
    return out;
}

} // namespace

ScalarField lift_base(const BcwpSpec& spec, const ScalarField& f) {
    GridPtr pg = product_grid(spec);
    ScalarField out(pg);
    SplitIndex sp = splitter(spec);
    for (std::size_t n = 0; n < pg->node_count(); ++n) out[n] = f[sp.base(n)];
    out.margins() = product_margins(spec, {&f.margins()}, {});
    return out;
}

ScalarField lift_fiber(const BcwpSpec& spec, const ScalarField& f) {
    GridPtr pg = product_grid(spec);
    ScalarField out(pg);
    SplitIndex sp = splitter(spec);
    for (std::size_t n = 0; n < pg->node_count(); ++n) out[n] = f[sp.fiber(n)];
    out.margins() = product_margins(spec, {}, {&f.margins()});
    return out;
}

MetricField assemble(const BcwpSpec& spec) {
    const int m = spec.m(), k = spec.k();
    GridPtr pg = product_grid(spec);
    std::vector<int> signature = spec.base.signature();
    signature.insert(signature.end(), spec.fiber.signature().begin(), spec.fiber.signature().end());
    MetricField out(pg, signature);
    SplitIndex sp = splitter(spec);
    for (std::size_t n = 0; n < pg->node_count(); ++n) {
        std::size_t nb = sp.base(n), nf = sp.fiber(n);
        double c2 = spec.conformal_factor[nb] * spec.conformal_factor[nb];
        double w2 = spec.warping_function[nb] * spec.warping_function[nb];
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) out.set(n, i, j, c2 * spec.base(nb, i, j));
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) out.set(n, m + i, m + j, w2 * spec.fiber(nf, i, j));
    }
    return out;
}

// Everything the block formulas consume, computed once per call on the
// factor grids.
namespace {

struct BaseData {
    const ScalarField& c;
    const ScalarField& w;
    std::vector<ScalarField> dc, dw;   // coordinate partials
    TensorField grad_c, grad_w;        // index raised with g_B
    TensorField hess_c, hess_w;        // H_B
    ScalarField lap_c, lap_w;
    ScalarField norm2_c, norm2_w;      // |grad|^2_B
    ScalarField inner_cw;              // g_B(grad w, grad c)
    TensorField gamma;                 // base Christoffels

    BaseData(const BcwpSpec& spec, int order)
        : c(spec.conformal_factor), w(spec.warping_function),
          grad_c(gradient(spec.base, c, order)), grad_w(gradient(spec.base, w, order)),
          hess_c(hessian(spec.base, c, order)), hess_w(hessian(spec.base, w, order)),
          lap_c(laplace_beltrami(spec.base, c, order)), lap_w(laplace_beltrami(spec.base, w, order)),
          norm2_c(grad_inner(spec.base, c, c, order)), norm2_w(grad_inner(spec.base, w, w, order)),
          inner_cw(grad_inner(spec.base, w, c, order)), gamma(christoffel(spec.base, order)) {
        for (int a = 0; a < spec.m(); ++a) {
            dc.push_back(partial_derivative(c, a, order));
            dw.push_back(partial_derivative(w, a, order));
        }
    }
};

} // namespace

TensorField bcwp_gradient(const BcwpSpec& spec, const ScalarField& phi, int order) {
    const int m = spec.m(), k = spec.k();
    TensorField gb = gradient(spec.base, phi, order);
    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Upper});
    SplitIndex sp = splitter(spec);
    for (std::size_t n = 0; n < pg->node_count(); ++n) {
        std::size_t nb = sp.base(n);
        double c2 = spec.conformal_factor[nb] * spec.conformal_factor[nb];
        for (int a = 0; a < m; ++a) out.at(n, a) = gb.at(nb, a) / c2;
        for (int u = 0; u < k; ++u) out.at(n, m + u) = 0.0;
    }
    out.set_margins(product_margins(spec, {&gb.margins()}, {}));
    return out;
}

TensorField bcwp_connection(const BcwpSpec& spec, int order) {
    const int m = spec.m(), k = spec.k();
    const int n = m + k;
    BaseData bd(spec, order);
    TensorField gammaF = christoffel(spec.fiber, order);

    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Upper, Var::Lower, Var::Lower});
    SplitIndex sp = splitter(spec);

    auto idx = [n](int a, int b, int c) {
        return (static_cast<std::size_t>(a) * n + b) * n + c;
    };
    auto bidx = [m](int a, int b, int c) {
        return (static_cast<std::size_t>(a) * m + b) * m + c;
    };
    auto fidx = [k](int a, int b, int c) {
        return (static_cast<std::size_t>(a) * k + b) * k + c;
    };

    parallel_for(pg->node_count(), [&](std::size_t node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double c = bd.c[nb], w = bd.w[nb];
        // base-base-base: conformal connection of c^2 g_B
        for (int cc = 0; cc < m; ++cc)
            for (int a = 0; a < m; ++a)
                for (int b = a; b < m; ++b) {
                    double v = bd.gamma.at(nb, bidx(cc, a, b));
                    if (cc == b) v += bd.dc[a][nb] / c;
                    if (cc == a) v += bd.dc[b][nb] / c;
                    v -= spec.base(nb, a, b) / c * bd.grad_c.at(nb, cc);
                    out.at(node, idx(cc, a, b)) = v;
                    out.at(node, idx(cc, b, a)) = v;
                }
        // mixed: Gamma^v_{a u} = (d_a w / w) delta^v_u
        for (int a = 0; a < m; ++a)
            for (int u = 0; u < k; ++u) {
                double v = bd.dw[a][nb] / w;
                out.at(node, idx(m + u, a, m + u)) = v;
                out.at(node, idx(m + u, m + u, a)) = v;
            }
        // fiber-fiber: Gamma^w'_{uv} = Gamma_F, Gamma^a_{uv} = -(w/c^2) g_F,uv grad_B w
        for (int u = 0; u < k; ++u)
            for (int v = u; v < k; ++v) {
                for (int ww = 0; ww < k; ++ww) {
                    double val = gammaF.at(nf, fidx(ww, u, v));
                    out.at(node, idx(m + ww, m + u, m + v)) = val;
                    out.at(node, idx(m + ww, m + v, m + u)) = val;
                }
                double gf = spec.fiber(nf, u, v);
                for (int a = 0; a < m; ++a) {
                    double val = -(w / (c * c)) * gf * bd.grad_w.at(nb, a);
                    out.at(node, idx(a, m + u, m + v)) = val;
                    out.at(node, idx(a, m + v, m + u)) = val;
                }
            }
    });

    out.set_margins(product_margins(
        spec, {&bd.gamma.margins(), &bd.grad_c.margins(), &bd.grad_w.margins()},
        {&gammaF.margins()}));
    return out;
}

namespace {

// Product Hessian of the conformal factor or warping function restricted to
// base vectors: H^phi(X,Y) = H_B^phi + (g_B(X,Y)/c) g_B(grad phi, grad c)
//                            - (X(c) Y(phi) + Y(c) X(phi)) / c.
TensorField product_hessian_on_base(const BcwpSpec& spec, const BaseData& bd,
                                    const ScalarField& phi, int order) {
    const int m = spec.m();
    TensorField hb = hessian(spec.base, phi, order);
    ScalarField inner = grad_inner(spec.base, phi, bd.c, order);
    std::vector<ScalarField> dphi;
    for (int a = 0; a < m; ++a) dphi.push_back(partial_derivative(phi, a, order));
    TensorField out = hb;
    for (std::size_t nb = 0; nb < spec.base.grid().node_count(); ++nb) {
        double c = bd.c[nb];
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double v = hb.at(nb, static_cast<std::size_t>(a) * m + b);
                v += spec.base(nb, a, b) / c * inner[nb];
                v -= (bd.dc[a][nb] * dphi[b][nb] + bd.dc[b][nb] * dphi[a][nb]) / c;
                out.at(nb, static_cast<std::size_t>(a) * m + b) = v;
            }
    }
    out.set_margins(detail::max_margins(hb.margins(), inner.margins()));
    return out;
}

} // namespace

TensorField bcwp_hessian_base(const BcwpSpec& spec, const ScalarField& phi, int order) {
    const int m = spec.m(), k = spec.k();
    const int n = m + k;
    BaseData bd(spec, order);
    TensorField hb = product_hessian_on_base(spec, bd, phi, order);
    ScalarField inner_wphi = grad_inner(spec.base, spec.warping_function, phi, order);

    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Lower, Var::Lower});
    SplitIndex sp = splitter(spec);
    for (std::size_t node = 0; node < pg->node_count(); ++node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double c = bd.c[nb], w = bd.w[nb];
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                out.at(node, static_cast<std::size_t>(a) * n + b) =
                    hb.at(nb, static_cast<std::size_t>(a) * m + b);
        // H^phi(X,V) = 0 blocks stay zero.
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
                out.at(node, static_cast<std::size_t>(m + u) * n + (m + v)) =
                    (w / (c * c)) * spec.fiber(nf, u, v) * inner_wphi[nb];
    }
    out.set_margins(product_margins(spec, {&hb.margins(), &inner_wphi.margins()}, {}));
    return out;
}

TensorField bcwp_hessian_fiber(const BcwpSpec& spec, const ScalarField& psi, int order) {
    const int m = spec.m(), k = spec.k();
    const int n = m + k;
    BaseData bd(spec, order);
    TensorField hf = hessian(spec.fiber, psi, order);
    std::vector<ScalarField> dpsi;
    for (int u = 0; u < k; ++u) dpsi.push_back(partial_derivative(psi, u, order));

    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Lower, Var::Lower});
    SplitIndex sp = splitter(spec);
    for (std::size_t node = 0; node < pg->node_count(); ++node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double w = bd.w[nb];
        // H^psi(X,Y) = 0 base block.
        for (int a = 0; a < m; ++a)
            for (int u = 0; u < k; ++u) {
                double v = -bd.dw[a][nb] * dpsi[u][nf] / w;
                out.at(node, static_cast<std::size_t>(a) * n + (m + u)) = v;
                out.at(node, static_cast<std::size_t>(m + u) * n + a) = v;
            }
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
                out.at(node, static_cast<std::size_t>(m + u) * n + (m + v)) =
                    hf.at(nf, static_cast<std::size_t>(u) * k + v);
    }
    std::vector<const Margins*> fparts{&hf.margins()};
    for (const auto& d : dpsi) fparts.push_back(&d.margins());
    std::vector<const Margins*> bparts{&bd.dw[0].margins()};
    for (const auto& d : bd.dw) bparts.push_back(&d.margins());
    out.set_margins(product_margins(spec, bparts, fparts));
    return out;
}

ScalarField bcwp_laplacian_base(const BcwpSpec& spec, const ScalarField& phi, int order) {
    const int m = spec.m(), k = spec.k();
    ScalarField lap = laplace_beltrami(spec.base, phi, order);
    ScalarField inner_c = grad_inner(spec.base, phi, spec.conformal_factor, order);
    ScalarField inner_w = grad_inner(spec.base, spec.warping_function, phi, order);
    ScalarField out(spec.base.grid_ptr());
    for (std::size_t nb = 0; nb < spec.base.grid().node_count(); ++nb) {
        double c = spec.conformal_factor[nb], w = spec.warping_function[nb];
        out[nb] = lap[nb] / (c * c) + (m - 2) / (c * c * c) * inner_c[nb] +
                  (1.0 / (c * c)) * (static_cast<double>(k) / w) * inner_w[nb];
    }
    out.margins() = detail::max_margins(lap.margins(),
                                        detail::max_margins(inner_c.margins(), inner_w.margins()));
    return lift_base(spec, out);
}

ScalarField bcwp_laplacian_fiber(const BcwpSpec& spec, const ScalarField& psi, int order) {
    ScalarField lap = laplace_beltrami(spec.fiber, psi, order);
    ScalarField lifted = lift_fiber(spec, lap);
    ScalarField w2 = lift_base(spec, spec.warping_function * spec.warping_function);
    return lifted / w2;
}

TensorField bcwp_ricci(const BcwpSpec& spec, int order) {
    const int m = spec.m(), k = spec.k();
    const int n = m + k;
    BaseData bd(spec, order);
    TensorField ricB = ricci(spec.base, order);
    TensorField ricF = ricci(spec.fiber, order);

    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Lower, Var::Lower});
    SplitIndex sp = splitter(spec);
    parallel_for(pg->node_count(), [&](std::size_t node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double c = bd.c[nb], w = bd.w[nb];
        double bracket_base = (m - 3) * bd.norm2_c[nb] / (c * c) + bd.lap_c[nb] / c +
                              k * bd.inner_cw[nb] / (w * c);
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                double v = ricB.at(nb, static_cast<std::size_t>(a) * m + b);
                v -= (m - 2) / c * bd.hess_c.at(nb, static_cast<std::size_t>(a) * m + b);
                v += 2.0 * (m - 2) / (c * c) * bd.dc[a][nb] * bd.dc[b][nb];
                v -= k / w * bd.hess_w.at(nb, static_cast<std::size_t>(a) * m + b);
                v -= bracket_base * spec.base(nb, a, b);
                v += k * (bd.dc[a][nb] / c) * (bd.dw[b][nb] / w);
                v += k * (bd.dc[b][nb] / c) * (bd.dw[a][nb] / w);
                out.at(node, static_cast<std::size_t>(a) * n + b) = v;
                out.at(node, static_cast<std::size_t>(b) * n + a) = v;
            }
        double bracket_fiber = (m - 2) * bd.inner_cw[nb] / (w * c) + bd.lap_w[nb] / w +
                               (k - 1) * bd.norm2_w[nb] / (w * w);
        double scale = (w * w) / (c * c) * bracket_fiber;
        for (int u = 0; u < k; ++u)
            for (int v = u; v < k; ++v) {
                double val = ricF.at(nf, static_cast<std::size_t>(u) * k + v) -
                             scale * spec.fiber(nf, u, v);
                out.at(node, static_cast<std::size_t>(m + u) * n + (m + v)) = val;
                out.at(node, static_cast<std::size_t>(m + v) * n + (m + u)) = val;
            }
        // mixed block identically zero
    });

    out.set_margins(product_margins(
        spec,
        {&ricB.margins(), &bd.hess_c.margins(), &bd.hess_w.margins(), &bd.lap_c.margins(),
         &bd.lap_w.margins(), &bd.norm2_c.margins(), &bd.norm2_w.margins(), &bd.inner_cw.margins()},
        {&ricF.margins()}));
    return out;
}

ScalarField bcwp_scalar_base(const BcwpSpec& spec, int order) {
    const int m = spec.m(), k = spec.k();
    BaseData bd(spec, order);
    ScalarField sB = scalar_curvature(spec.base, order);
    ScalarField sF = scalar_curvature(spec.fiber, order);
    // fiber scalar curvature at a central interior node (the base-only
    // relation needs S_F constant)
    std::vector<int> central(spec.fiber.grid().dim());
    for (int a = 0; a < spec.fiber.grid().dim(); ++a) central[a] = spec.fiber.grid().axis(a).count / 2;
    double SF = sF[spec.fiber.grid().flatten(central)];

    ScalarField out(spec.base.grid_ptr());
    for (std::size_t nb = 0; nb < spec.base.grid().node_count(); ++nb) {
        double c = bd.c[nb], w = bd.w[nb];
        double rhs = sB[nb] + SF * (c * c) / (w * w) - 2.0 * (m - 1) * bd.lap_c[nb] / c -
                     2.0 * k * bd.lap_w[nb] / w -
                     (m - 4) * (m - 1) * bd.norm2_c[nb] / (c * c) -
                     2.0 * k * (m - 2) * bd.inner_cw[nb] / (w * c) -
                     k * (k - 1) * bd.norm2_w[nb] / (w * w);
        out[nb] = rhs / (c * c);
    }
    Margins mg = sB.margins();
    mg = detail::max_margins(mg, bd.lap_c.margins());
    mg = detail::max_margins(mg, bd.lap_w.margins());
    mg = detail::max_margins(mg, bd.norm2_c.margins());
    mg = detail::max_margins(mg, bd.norm2_w.margins());
    mg = detail::max_margins(mg, bd.inner_cw.margins());
    out.margins() = mg;
    return out;
}

ScalarField bcwp_scalar(const BcwpSpec& spec, int order) {
    const int m = spec.m(), k = spec.k();
    BaseData bd(spec, order);
    ScalarField sB = scalar_curvature(spec.base, order);
    ScalarField sF = scalar_curvature(spec.fiber, order);
    GridPtr pg = product_grid(spec);
    ScalarField out(pg);
    SplitIndex sp = splitter(spec);
    for (std::size_t node = 0; node < pg->node_count(); ++node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double c = bd.c[nb], w = bd.w[nb];
        double rhs = sB[nb] + sF[nf] * (c * c) / (w * w) - 2.0 * (m - 1) * bd.lap_c[nb] / c -
                     2.0 * k * bd.lap_w[nb] / w -
                     (m - 4) * (m - 1) * bd.norm2_c[nb] / (c * c) -
                     2.0 * k * (m - 2) * bd.inner_cw[nb] / (w * c) -
                     k * (k - 1) * bd.norm2_w[nb] / (w * w);
        out[node] = rhs / (c * c);
    }
    Margins mg = sB.margins();
    mg = detail::max_margins(mg, bd.lap_c.margins());
    mg = detail::max_margins(mg, bd.lap_w.margins());
    mg = detail::max_margins(mg, bd.norm2_c.margins());
    mg = detail::max_margins(mg, bd.norm2_w.margins());
    mg = detail::max_margins(mg, bd.inner_cw.margins());
    Margins pm(m + k, 0);
    for (int a = 0; a < m; ++a) pm[a] = mg[a];
    for (int a = 0; a < k; ++a) pm[m + a] = sF.margins()[a];
    out.margins() = pm;
    return out;
}

TensorField bcwp_riemann(const BcwpSpec& spec, int order) {
    const int m = spec.m(), k = spec.k();
    const int n = m + k;
    BaseData bd(spec, order);
    TensorField riemB = riemann(spec.base, order);
    TensorField riemF = riemann(spec.fiber, order);
    TensorField hess_c_prod = product_hessian_on_base(spec, bd, bd.c, order);
    TensorField hess_w_prod = product_hessian_on_base(spec, bd, bd.w, order);

    GridPtr pg = product_grid(spec);
    TensorField out(pg, {Var::Upper, Var::Lower, Var::Lower, Var::Lower});
    SplitIndex sp = splitter(spec);

    const std::size_t bn = spec.base.grid().node_count();
    // (nabla^B_a grad_B c)^b = g_B^{bd} H_B(c)_{ad}, and likewise for w.
    std::vector<double> covd_gradc(bn * m * m), covd_gradw(bn * m * m);
    {
        std::vector<double> ginv(static_cast<std::size_t>(m) * m);
        for (std::size_t nb = 0; nb < bn; ++nb) {
            spec.base.invert_at(nb, ginv);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) {
                    double vc = 0.0, vw = 0.0;
                    for (int d = 0; d < m; ++d) {
                        vc += ginv[static_cast<std::size_t>(b) * m + d] *
                              bd.hess_c.at(nb, static_cast<std::size_t>(a) * m + d);
                        vw += ginv[static_cast<std::size_t>(b) * m + d] *
                              bd.hess_w.at(nb, static_cast<std::size_t>(a) * m + d);
                    }
                    covd_gradc[(nb * m + a) * m + b] = vc;
                    covd_gradw[(nb * m + a) * m + b] = vw;
                }
        }
    }

    auto ridx = [n](int l, int i, int j, int kk) {
        return ((static_cast<std::size_t>(l) * n + i) * n + j) * n + kk;
    };
    auto bridx = [m](int l, int i, int j, int kk) {
        return ((static_cast<std::size_t>(l) * m + i) * m + j) * m + kk;
    };
    auto fridx = [k](int l, int i, int j, int kk) {
        return ((static_cast<std::size_t>(l) * k + i) * k + j) * k + kk;
    };

    parallel_for(pg->node_count(), [&](std::size_t node) {
        std::size_t nb = sp.base(node), nf = sp.fiber(node);
        double c = bd.c[nb], w = bd.w[nb];

        // h^w(X): fiber-to-base curvature auxiliary
        //   h^w(e_a)^b = -2 (d_a c / c^3) grad_w^b
        //     + (1/c^2) [ (nabla_a grad w)^b + (d_a c / c) grad_w^b
        //                 + (g_B(grad w, grad c)/c) delta^b_a - (d_a w / c) grad_c^b ]
        auto hw = [&](int a, int b) {
            double v = -2.0 * bd.dc[a][nb] / (c * c * c) * bd.grad_w.at(nb, b);
            double inner = covd_gradw[(nb * m + a) * m + b] +
                           (bd.dc[a][nb] / c) * bd.grad_w.at(nb, b) -
                           (bd.dw[a][nb] / c) * bd.grad_c.at(nb, b);
            if (a == b) inner += bd.inner_cw[nb] / c;
            return v + inner / (c * c);
        };

        // all-base block: conformal curvature of c^2 g_B expressed via base data
        for (int l = 0; l < m; ++l)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int kk = j + 1; kk < m; ++kk) {
                        // R(e_j, e_kk) e_i, component l:  X=e_j, Y=e_kk, Z=e_i
                        double v = riemB.at(nb, bridx(l, i, j, kk));
                        double Hc_YZ = hess_c_prod.at(nb, static_cast<std::size_t>(kk) * m + i);
                        double Hc_XZ = hess_c_prod.at(nb, static_cast<std::size_t>(j) * m + i);
                        if (l == j) v -= Hc_YZ / c;
                        if (l == kk) v += Hc_XZ / c;
                        v += 2.0 * bd.dc[j][nb] / (c * c) * spec.base(nb, kk, i) * bd.grad_c.at(nb, l);
                        v -= 2.0 * bd.dc[kk][nb] / (c * c) * spec.base(nb, j, i) * bd.grad_c.at(nb, l);
                        v += spec.base(nb, j, i) / c * covd_gradc[(nb * m + kk) * m + l];
                        v -= spec.base(nb, kk, i) / c * covd_gradc[(nb * m + j) * m + l];
                        out.at(node, ridx(l, i, j, kk)) = v;
                        out.at(node, ridx(l, i, kk, j)) = -v;
                    }

        // R(X,V)Y = (H^w(X,Y)/w) V   [product Hessian of w]
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double h = hess_w_prod.at(nb, static_cast<std::size_t>(a) * m + b) / w;
                for (int u = 0; u < k; ++u) {
                    out.at(node, ridx(m + u, b, a, m + u)) = h;
                    out.at(node, ridx(m + u, b, m + u, a)) = -h;
                }
            }

        // R(V,X)W = w g_F(V,W) h^w(X)
        for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v) {
                double gf = spec.fiber(nf, u, v);
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) {
                        double val = w * gf * hw(a, b);
                        out.at(node, ridx(b, m + v, m + u, a)) = val;
                        out.at(node, ridx(b, m + v, a, m + u)) = -val;
                    }
            }

        // all-fiber block
        double factor = bd.norm2_w[nb] / (c * c);
        for (int l = 0; l < k; ++l)
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q)
                    for (int r = q + 1; r < k; ++r) {
                        // R(e_q, e_r) e_p, component l (fiber-local indices)
                        double v = riemF.at(nf, fridx(l, p, q, r));
                        if (l == r) v += factor * spec.fiber(nf, q, p);
                        if (l == q) v -= factor * spec.fiber(nf, r, p);
                        out.at(node, ridx(m + l, m + p, m + q, m + r)) = v;
                        out.at(node, ridx(m + l, m + p, m + r, m + q)) = -v;
                    }
        // items R(X,Y)V = 0 and R(V,W)X = 0: those slots stay zero.
    });

    out.set_margins(product_margins(
        spec,
        {&riemB.margins(), &hess_c_prod.margins(), &hess_w_prod.margins(), &bd.grad_c.margins(),
         &bd.grad_w.margins(), &bd.inner_cw.margins(), &bd.norm2_w.margins()},
        {&riemF.margins()}));
    return out;
}

// ---- geodesics -------------------------------------------------------------

namespace {

constexpr double kFnDiffStep = 1e-6;

struct PointGeometry {
    std::vector<double> g, ginv, gamma; // n x n, n x n, n^3
};

// Metric, inverse and Christoffels of a function-backed metric at a point,
// with derivatives by central differences of the component functions.
PointGeometry point_geometry(const std::function<double(int, int, std::span<const double>)>& metric,
                             int n, std::span<const double> x) {
    PointGeometry pgm;
    pgm.g.assign(static_cast<std::size_t>(n) * n, 0.0);
    pgm.ginv.assign(static_cast<std::size_t>(n) * n, 0.0);
    pgm.gamma.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pgm.g[static_cast<std::size_t>(i) * n + j] = metric(i, j, x);

    // dg[l][i][j]
    std::vector<double> dg(static_cast<std::size_t>(n) * n * n);
    std::vector<double> xp(x.begin(), x.end());
    for (int l = 0; l < n; ++l) {
        xp[l] = x[l] + kFnDiffStep;
        std::vector<double> hi(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) hi[static_cast<std::size_t>(i) * n + j] = metric(i, j, xp);
        xp[l] = x[l] - kFnDiffStep;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                dg[(static_cast<std::size_t>(l) * n + i) * n + j] =
                    (hi[static_cast<std::size_t>(i) * n + j] - metric(i, j, xp)) / (2.0 * kFnDiffStep);
        xp[l] = x[l];
    }

    // invert (small n, Gauss-Jordan without pivoting refinements)
    std::vector<double> a = pgm.g;
    for (int i = 0; i < n; ++i) pgm.ginv[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
                std::abs(a[static_cast<std::size_t>(piv) * n + col]))
                piv = r;
        for (int j = 0; j < n; ++j) {
            std::swap(a[static_cast<std::size_t>(piv) * n + j], a[static_cast<std::size_t>(col) * n + j]);
            std::swap(pgm.ginv[static_cast<std::size_t>(piv) * n + j],
                      pgm.ginv[static_cast<std::size_t>(col) * n + j]);
        }
        double p = a[static_cast<std::size_t>(col) * n + col];
        if (p == 0.0) throw SingularMetricError("degenerate metric along geodesic");
        for (int j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(col) * n + j] /= p;
            pgm.ginv[static_cast<std::size_t>(col) * n + j] /= p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[static_cast<std::size_t>(r) * n + col];
            for (int j = 0; j < n; ++j) {
                a[static_cast<std::size_t>(r) * n + j] -= f * a[static_cast<std::size_t>(col) * n + j];
                pgm.ginv[static_cast<std::size_t>(r) * n + j] -=
                    f * pgm.ginv[static_cast<std::size_t>(col) * n + j];
            }
        }
    }

    for (int kk = 0; kk < n; ++kk)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += pgm.ginv[static_cast<std::size_t>(kk) * n + l] *
                         (dg[(static_cast<std::size_t>(i) * n + j) * n + l] +
                          dg[(static_cast<std::size_t>(j) * n + i) * n + l] -
                          dg[(static_cast<std::size_t>(l) * n + i) * n + j]);
                pgm.gamma[(static_cast<std::size_t>(kk) * n + i) * n + j] = 0.5 * s;
            }
    return pgm;
}

std::vector<double> fn_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x) {
    std::vector<double> g(x.size());
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t a = 0; a < x.size(); ++a) {
        xp[a] = x[a] + kFnDiffStep;
        double hi = f(xp);
        xp[a] = x[a] - kFnDiffStep;
        g[a] = (hi - f(xp)) / (2.0 * kFnDiffStep);
        xp[a] = x[a];
    }
    return g;
}

struct GeoState {
    std::vector<double> x, y, vx, vy;
};

GeoState rhs(const BcwpFunctions& fns, const GeoState& s) {
    const int m = fns.m, k = fns.k;
    PointGeometry bg = point_geometry(fns.base_metric, m, s.x);
    PointGeometry fg = point_geometry(fns.fiber_metric, k, s.y);
    double c = fns.c(s.x), w = fns.w(s.x);
    std::vector<double> dc = fn_gradient(fns.c, s.x);
    std::vector<double> dw = fn_gradient(fns.w, s.x);

    double vc = 0.0, vw = 0.0, gBvv = 0.0, gFvv = 0.0;
    for (int a = 0; a < m; ++a) vc += s.vx[a] * dc[a];
    for (int a = 0; a < m; ++a) vw += s.vx[a] * dw[a];
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) gBvv += bg.g[static_cast<std::size_t>(a) * m + b] * s.vx[a] * s.vx[b];
    for (int u = 0; u < k; ++u)
        for (int v = 0; v < k; ++v) gFvv += fg.g[static_cast<std::size_t>(u) * k + v] * s.vy[u] * s.vy[v];

    GeoState d;
    d.x = s.vx;
    d.y = s.vy;
    d.vx.assign(m, 0.0);
    d.vy.assign(k, 0.0);
    for (int a = 0; a < m; ++a) {
        double acc = 0.0;
        for (int b = 0; b < m; ++b)
            for (int e = 0; e < m; ++e)
                acc -= bg.gamma[(static_cast<std::size_t>(a) * m + b) * m + e] * s.vx[b] * s.vx[e];
        acc -= 2.0 * (vc / c) * s.vx[a];
        double gradc_a = 0.0, gradw_a = 0.0;
        for (int b = 0; b < m; ++b) {
            gradc_a += bg.ginv[static_cast<std::size_t>(a) * m + b] * dc[b];
            gradw_a += bg.ginv[static_cast<std::size_t>(a) * m + b] * dw[b];
        }
        acc += (gBvv / c) * gradc_a;
        acc += (w * gFvv / (c * c)) * gradw_a;
        d.vx[a] = acc;
    }
    for (int u = 0; u < k; ++u) {
        double acc = 0.0;
        for (int v = 0; v < k; ++v)
            for (int e = 0; e < k; ++e)
                acc -= fg.gamma[(static_cast<std::size_t>(u) * k + v) * k + e] * s.vy[v] * s.vy[e];
        acc -= 2.0 * (vw / w) * s.vy[u];
        d.vy[u] = acc;
    }
    return d;
}

GeoState axpy(const GeoState& s, double h, const GeoState& d) {
    GeoState out = s;
    for (std::size_t i = 0; i < s.x.size(); ++i) out.x[i] += h * d.x[i];
    for (std::size_t i = 0; i < s.y.size(); ++i) out.y[i] += h * d.y[i];
    for (std::size_t i = 0; i < s.vx.size(); ++i) out.vx[i] += h * d.vx[i];
    for (std::size_t i = 0; i < s.vy.size(); ++i) out.vy[i] += h * d.vy[i];
    return out;
}

} // namespace

GeodesicResult geodesic_integrate(const BcwpFunctions& fns, std::span<const double> base0,
                                  std::span<const double> fiber0, std::span<const double> vbase0,
                                  std::span<const double> vfiber0, double step, int steps) {
    GeoState s;
    s.x.assign(base0.begin(), base0.end());
    s.y.assign(fiber0.begin(), fiber0.end());
    s.vx.assign(vbase0.begin(), vbase0.end());
    s.vy.assign(vfiber0.begin(), vfiber0.end());

    GeodesicResult res;
    auto record = [&](double t, const GeoState& st) {
        res.times.push_back(t);
        res.base_points.push_back(st.x);
        res.fiber_points.push_back(st.y);
        res.base_velocity.push_back(st.vx);
        res.fiber_velocity.push_back(st.vy);
    };
    record(0.0, s);

    for (int i = 0; i < steps; ++i) {
        GeoState k1 = rhs(fns, s);
        GeoState k2 = rhs(fns, axpy(s, step / 2.0, k1));
        GeoState k3 = rhs(fns, axpy(s, step / 2.0, k2));
        GeoState k4 = rhs(fns, axpy(s, step, k3));
        GeoState next = s;
        for (std::size_t j = 0; j < s.x.size(); ++j)
            next.x[j] += step / 6.0 * (k1.x[j] + 2 * k2.x[j] + 2 * k3.x[j] + k4.x[j]);
        for (std::size_t j = 0; j < s.y.size(); ++j)
            next.y[j] += step / 6.0 * (k1.y[j] + 2 * k2.y[j] + 2 * k3.y[j] + k4.y[j]);
        for (std::size_t j = 0; j < s.vx.size(); ++j)
            next.vx[j] += step / 6.0 * (k1.vx[j] + 2 * k2.vx[j] + 2 * k3.vx[j] + k4.vx[j]);
        for (std::size_t j = 0; j < s.vy.size(); ++j)
            next.vy[j] += step / 6.0 * (k1.vy[j] + 2 * k2.vy[j] + 2 * k3.vy[j] + k4.vy[j]);
        s = next;
        record((i + 1) * step, s);
    }

    // Independent residuals: second differences of the recorded curve against
    // the equations' right-hand side at the interior samples.
    const std::size_t nsamp = res.times.size();
    for (std::size_t i = 1; i + 1 < nsamp; ++i) {
        GeoState mid;
        mid.x = res.base_points[i];
        mid.y = res.fiber_points[i];
        mid.vx = res.base_velocity[i];
        mid.vy = res.fiber_velocity[i];
        GeoState d = rhs(fns, mid);
        for (std::size_t a = 0; a < mid.x.size(); ++a) {
            double dd = (res.base_points[i + 1][a] - 2.0 * res.base_points[i][a] +
                         res.base_points[i - 1][a]) /
                        (step * step);
            res.max_base_residual = std::max(res.max_base_residual, std::abs(dd - d.vx[a]));
        }
        for (std::size_t u = 0; u < mid.y.size(); ++u) {
            double dd = (res.fiber_points[i + 1][u] - 2.0 * res.fiber_points[i][u] +
                         res.fiber_points[i - 1][u]) /
                        (step * step);
            res.max_fiber_residual = std::max(res.max_fiber_residual, std::abs(dd - d.vy[u]));
        }

        // pre-geodesic property: covariant fiber acceleration collinear with beta'
        PointGeometry fg = point_geometry(fns.fiber_metric, fns.k, mid.y);
        std::vector<double> acc(fns.k, 0.0);
        for (int u = 0; u < fns.k; ++u) {
            acc[u] = d.vy[u];
            for (int v = 0; v < fns.k; ++v)
                for (int e = 0; e < fns.k; ++e)
                    acc[u] += fg.gamma[(static_cast<std::size_t>(u) * fns.k + v) * fns.k + e] *
                              mid.vy[v] * mid.vy[e];
        }
        double v2 = 0.0, av = 0.0;
        for (int u = 0; u < fns.k; ++u) {
            v2 += mid.vy[u] * mid.vy[u];
            av += acc[u] * mid.vy[u];
        }
        if (v2 > 1e-14) {
            double defect2 = 0.0;
            for (int u = 0; u < fns.k; ++u) {
                double orth = acc[u] - (av / v2) * mid.vy[u];
                defect2 += orth * orth;
            }
            res.max_pregeodesic_defect = std::max(res.max_pregeodesic_defect, std::sqrt(defect2));
        }
    }
    return res;
}

} // namespace cwp
