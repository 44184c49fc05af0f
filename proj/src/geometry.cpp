#include "cwp/geometry.hpp"

#include <cmath>
#include <vector>

namespace cwp {

int stencil_radius(int order) {
    if (order == 2) return 1;
    if (order == 4) return 2;
    throw DomainError("stencil order must be 2 or 4");
}

namespace {

// Neighbor of `node` shifted by `off` along `axis`; periodic axes wrap.
// Caller guarantees validity on non-periodic axes via margins.
std::size_t shifted(const ChartGrid& g, std::size_t node, int axis, int off) {
    std::size_t stride = g.stride(axis);
    int count = g.axis(axis).count;
    int i = static_cast<int>(node / stride) % count;
    int j = i + off;
    if (g.axis(axis).periodic) j = ((j % count) + count) % count;
    return node + (static_cast<std::size_t>(j) - static_cast<std::size_t>(i)) * stride;
}

bool node_ok_for_stencil(const ChartGrid& g, std::size_t node, int axis, int radius) {
    if (g.axis(axis).periodic) return true;
    std::size_t stride = g.stride(axis);
    int count = g.axis(axis).count;
    int i = static_cast<int>(node / stride) % count;
    return i >= radius && i < count - radius;
}

void check_axis(const ChartGrid& g, int axis, int order) {
    if (axis < 0 || axis >= g.dim()) throw DomainError("derivative axis out of range");
    if (g.axis(axis).count < 2 * stencil_radius(order) + 1)
        throw DomainError("grid too small for requested stencil order");
}

double first_diff(const ChartGrid& g, std::span<const double> v, std::size_t comps,
                  std::size_t node, std::size_t c, int axis, int order) {
    double h = g.axis(axis).spacing;
    auto val = [&](int off) { return v[shifted(g, node, axis, off) * comps + c]; };
    if (order == 2) return (val(1) - val(-1)) / (2.0 * h);
    return (-val(2) + 8.0 * val(1) - 8.0 * val(-1) + val(-2)) / (12.0 * h);
}

double second_diff_direct(const ChartGrid& g, std::span<const double> v, std::size_t comps,
                          std::size_t node, std::size_t c, int axis, int order) {
    double h = g.axis(axis).spacing;
    auto val = [&](int off) { return v[shifted(g, node, axis, off) * comps + c]; };
    if (order == 2) return (val(1) - 2.0 * val(0) + val(-1)) / (h * h);
    return (-val(2) + 16.0 * val(1) - 30.0 * val(0) + 16.0 * val(-1) - val(-2)) / (12.0 * h * h);
}

} // namespace

ScalarField partial_derivative(const ScalarField& f, int axis, int order) {
    check_axis(f.grid(), axis, order);
    const int radius = stencil_radius(order);
    ScalarField out(f.grid_ptr());
    out.margins() = f.margins();
    out.widen_margin(axis, f.grid().axis(axis).periodic ? 0 : radius);
    const auto& g = f.grid();
    parallel_for(g.node_count(), [&](std::size_t n) {
        if (!node_ok_for_stencil(g, n, axis, radius)) return;
        out[n] = first_diff(g, f.values(), 1, n, 0, axis, order);
    });
    return out;
}

TensorField partial_derivative(const TensorField& f, int axis, int order) {
    check_axis(f.grid(), axis, order);
    const int radius = stencil_radius(order);
    TensorField out(f.grid_ptr(), f.variance());
    out.set_margins(f.margins());
    out.widen_margin(axis, f.grid().axis(axis).periodic ? 0 : radius);
    const auto& g = f.grid();
    const std::size_t comps = f.comps();
    parallel_for(g.node_count(), [&](std::size_t n) {
        if (!node_ok_for_stencil(g, n, axis, radius)) return;
        for (std::size_t c = 0; c < comps; ++c) {
            double v = 0.0;
            double h = g.axis(axis).spacing;
            if (order == 2) {
                v = (f.at(shifted(g, n, axis, 1), c) - f.at(shifted(g, n, axis, -1), c)) / (2.0 * h);
            } else {
                v = (-f.at(shifted(g, n, axis, 2), c) + 8.0 * f.at(shifted(g, n, axis, 1), c) -
                     8.0 * f.at(shifted(g, n, axis, -1), c) + f.at(shifted(g, n, axis, -2), c)) /
                    (12.0 * h);
            }
            out.at(n, c) = v;
        }
    });
    return out;
}

ScalarField second_derivative(const ScalarField& f, int a, int b, int order) {
    check_axis(f.grid(), a, order);
    check_axis(f.grid(), b, order);
    const auto& g = f.grid();
    const int radius = stencil_radius(order);
    if (a == b) {
        ScalarField out(f.grid_ptr());
        out.margins() = f.margins();
        out.widen_margin(a, g.axis(a).periodic ? 0 : radius);
        parallel_for(g.node_count(), [&](std::size_t n) {
            if (!node_ok_for_stencil(g, n, a, radius)) return;
            out[n] = second_diff_direct(g, f.values(), 1, n, 0, a, order);
        });
        return out;
    }
    return partial_derivative(partial_derivative(f, a, order), b, order);
}

namespace {

// Shared inner loop for connection coefficients: dg[l][i][j] = d_l g_ij.
struct MetricDerivs {
    std::vector<TensorField> dg; // one per axis
    TensorField inv;             // g^{ij}
    Margins margin;              // union margin of dg entries

    MetricDerivs(const MetricField& g, int order)
        : inv(g.grid_ptr(), {Var::Upper, Var::Upper}) {
        const int n = g.dim();
        dg.reserve(n);
        for (int a = 0; a < n; ++a) dg.push_back(partial_derivative(g.tensor(), a, order));
        margin = dg[0].margins();
        for (int a = 1; a < n; ++a) margin = detail::max_margins(margin, dg[a].margins());
        std::vector<double> ginv(static_cast<std::size_t>(n) * n);
        for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
            g.invert_at(node, ginv);
            for (std::size_t c = 0; c < ginv.size(); ++c) inv.at(node, c) = ginv[c];
        }
    }
};

} // namespace

TensorField christoffel(const MetricField& g, int order) {
    const int n = g.dim();
    MetricDerivs md(g, order);
    TensorField gamma(g.grid_ptr(), {Var::Upper, Var::Lower, Var::Lower});
    gamma.set_margins(md.margin);
    parallel_for(g.grid().node_count(), [&](std::size_t node) {
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) {
                        double term = md.dg[i].at(node, static_cast<std::size_t>(j) * n + l) +
                                      md.dg[j].at(node, static_cast<std::size_t>(i) * n + l) -
                                      md.dg[l].at(node, static_cast<std::size_t>(i) * n + j);
                        s += md.inv.at(node, static_cast<std::size_t>(k) * n + l) * term;
                    }
                    double v = 0.5 * s;
                    gamma.at(node, (static_cast<std::size_t>(k) * n + i) * n + j) = v;
                    gamma.at(node, (static_cast<std::size_t>(k) * n + j) * n + i) = v;
                }
    });
    return gamma;
}

TensorField riemann(const MetricField& g, int order) {
    const int n = g.dim();
    TensorField gamma = christoffel(g, order);
    std::vector<TensorField> dgamma;
    dgamma.reserve(n);
    for (int a = 0; a < n; ++a) dgamma.push_back(partial_derivative(gamma, a, order));

    TensorField riem(g.grid_ptr(), {Var::Upper, Var::Lower, Var::Lower, Var::Lower});
    Margins m = dgamma[0].margins();
    for (int a = 1; a < n; ++a) m = detail::max_margins(m, dgamma[a].margins());
    riem.set_margins(m);

    auto gidx = [n](int k, int i, int j) {
        return (static_cast<std::size_t>(k) * n + i) * n + j;
    };
    parallel_for(g.grid().node_count(), [&](std::size_t node) {
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = j; k < n; ++k) {
                        double v = dgamma[j].at(node, gidx(l, k, i)) - dgamma[k].at(node, gidx(l, j, i));
                        for (int mm = 0; mm < n; ++mm) {
                            v += gamma.at(node, gidx(mm, k, i)) * gamma.at(node, gidx(l, j, mm)) -
                                 gamma.at(node, gidx(mm, j, i)) * gamma.at(node, gidx(l, k, mm));
                        }
                        riem.at(node, ((gidx(l, i, j)) * n) + k) = v;
                        riem.at(node, ((gidx(l, i, k)) * n) + j) = -v;
                    }
    });
    return riem;
}

TensorField ricci(const MetricField& g, int order) {
    const int n = g.dim();
    TensorField gamma = christoffel(g, order);
    const int radius = stencil_radius(order);

    TensorField ric(g.grid_ptr(), {Var::Lower, Var::Lower});
    Margins m = gamma.margins();
    for (int a = 0; a < n; ++a)
        if (!g.grid().axis(a).periodic) m[a] += radius;
    ric.set_margins(m);

    auto gidx = [n](int k, int i, int j) {
        return (static_cast<std::size_t>(k) * n + i) * n + j;
    };
    const auto& grid = g.grid();
    // Ric_ij = d_a Gamma^a_{ji} - d_j Gamma^a_{ai}
    //        + Gamma^m_{ji} Gamma^a_{am} - Gamma^m_{ai} Gamma^a_{jm}
    parallel_for(grid.node_count(), [&](std::size_t node) {
        for (int a = 0; a < n; ++a)
            if (!node_ok_for_stencil(grid, node, a, radius)) return;
        auto dG = [&](int axis, int k, int i, int j) {
            double h = grid.axis(axis).spacing;
            std::size_t c = gidx(k, i, j);
            if (order == 2) {
                return (gamma.at(shifted(grid, node, axis, 1), c) -
                        gamma.at(shifted(grid, node, axis, -1), c)) /
                       (2.0 * h);
            }
            return (-gamma.at(shifted(grid, node, axis, 2), c) +
                    8.0 * gamma.at(shifted(grid, node, axis, 1), c) -
                    8.0 * gamma.at(shifted(grid, node, axis, -1), c) +
                    gamma.at(shifted(grid, node, axis, -2), c)) /
                   (12.0 * h);
        };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = 0.0;
                for (int a = 0; a < n; ++a) {
                    v += dG(a, a, j, i) - dG(j, a, a, i);
                    for (int mm = 0; mm < n; ++mm) {
                        v += gamma.at(node, gidx(mm, j, i)) * gamma.at(node, gidx(a, a, mm)) -
                             gamma.at(node, gidx(mm, a, i)) * gamma.at(node, gidx(a, j, mm));
                    }
                }
                ric.at(node, static_cast<std::size_t>(i) * n + j) = v;
            }
    });
    return ric;
}

ScalarField scalar_curvature(const MetricField& g, int order) {
    const int n = g.dim();
    TensorField ric = ricci(g, order);
    ScalarField s(g.grid_ptr());
    s.margins() = ric.margins();
    std::vector<double> ginv(static_cast<std::size_t>(n) * n);
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        g.invert_at(node, ginv);
        double v = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                v += ginv[static_cast<std::size_t>(i) * n + j] *
                     ric.at(node, static_cast<std::size_t>(i) * n + j);
        s[node] = v;
    }
    return s;
}

TensorField gradient(const MetricField& g, const ScalarField& f, int order) {
    const int n = g.dim();
    if (!g.grid().same_layout(f.grid())) throw DomainError("gradient: field on different grid");
    std::vector<ScalarField> df;
    df.reserve(n);
    for (int a = 0; a < n; ++a) df.push_back(partial_derivative(f, a, order));
    TensorField out(g.grid_ptr(), {Var::Upper});
    Margins m = df[0].margins();
    for (int a = 1; a < n; ++a) m = detail::max_margins(m, df[a].margins());
    out.set_margins(m);
    std::vector<double> ginv(static_cast<std::size_t>(n) * n);
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        g.invert_at(node, ginv);
        for (int i = 0; i < n; ++i) {
            double v = 0.0;
            for (int j = 0; j < n; ++j) v += ginv[static_cast<std::size_t>(i) * n + j] * df[j][node];
            out.at(node, i) = v;
        }
    }
    return out;
}

TensorField hessian(const MetricField& g, const ScalarField& f, int order) {
    const int n = g.dim();
    if (!g.grid().same_layout(f.grid())) throw DomainError("hessian: field on different grid");
    TensorField gamma = christoffel(g, order);
    std::vector<ScalarField> df;
    df.reserve(n);
    for (int a = 0; a < n; ++a) df.push_back(partial_derivative(f, a, order));

    TensorField out(g.grid_ptr(), {Var::Lower, Var::Lower});
    Margins m = gamma.margins();
    for (int a = 0; a < n; ++a) m = detail::max_margins(m, df[a].margins());
    out.set_margins(m);

    auto gidx = [n](int k, int i, int j) {
        return (static_cast<std::size_t>(k) * n + i) * n + j;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            ScalarField dij = second_derivative(f, i, j, order);
            out.set_margins(detail::max_margins(out.margins(), dij.margins()));
            for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
                double v = dij[node];
                for (int k = 0; k < n; ++k) v -= gamma.at(node, gidx(k, i, j)) * df[k][node];
                out.at(node, static_cast<std::size_t>(i) * n + j) = v;
                out.at(node, static_cast<std::size_t>(j) * n + i) = v;
            }
        }
    return out;
}

ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f, int order) {
    const int n = g.dim();
    TensorField h = hessian(g, f, order);
    ScalarField out(g.grid_ptr());
    out.margins() = h.margins();
    std::vector<double> ginv(static_cast<std::size_t>(n) * n);
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        g.invert_at(node, ginv);
        double v = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                v += ginv[static_cast<std::size_t>(i) * n + j] *
                     h.at(node, static_cast<std::size_t>(i) * n + j);
        out[node] = v;
    }
    return out;
}

ScalarField grad_inner(const MetricField& g, const ScalarField& u, const ScalarField& v, int order) {
    const int n = g.dim();
    std::vector<ScalarField> du, dv;
    for (int a = 0; a < n; ++a) {
        du.push_back(partial_derivative(u, a, order));
        dv.push_back(partial_derivative(v, a, order));
    }
    ScalarField out(g.grid_ptr());
    Margins m = du[0].margins();
    for (int a = 0; a < n; ++a) {
        m = detail::max_margins(m, du[a].margins());
        m = detail::max_margins(m, dv[a].margins());
    }
    out.margins() = m;
    std::vector<double> ginv(static_cast<std::size_t>(n) * n);
    for (std::size_t node = 0; node < g.grid().node_count(); ++node) {
        g.invert_at(node, ginv);
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += ginv[static_cast<std::size_t>(i) * n + j] * du[i][node] * dv[j][node];
        out[node] = s;
    }
    return out;
}

TensorField einstein_residual(const MetricField& g, double lambda, int order) {
    TensorField ric = ricci(g, order);
    const int n = g.dim();
    for (std::size_t node = 0; node < g.grid().node_count(); ++node)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                ric.at(node, static_cast<std::size_t>(i) * n + j) -= lambda * g(node, i, j);
    return ric;
}

MetricField conformal_scale(const MetricField& g, const ScalarField& factor) {
    MetricField out = g;
    const int n = g.dim();
    for (std::size_t node = 0; node < g.grid().node_count(); ++node)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) out.set(node, i, j, g(node, i, j) * factor[node]);
    return out;
}

} // namespace cwp
