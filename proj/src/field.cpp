#include "cwp/field.hpp"

#include <array>
#include <cmath>

namespace cwp {

namespace {

double det2(double a, double b, double c, double d) { return a * d - b * c; }

double det3(const double* m) {
    return m[0] * det2(m[4], m[5], m[7], m[8]) - m[1] * det2(m[3], m[5], m[6], m[8]) +
           m[2] * det2(m[3], m[4], m[6], m[7]);
}

double det4(const double* m) {
    double d = 0.0;
    for (int c = 0; c < 4; ++c) {
        double sub[9];
        int k = 0;
        for (int i = 1; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                if (j == c) continue;
                sub[k++] = m[i * 4 + j];
            }
        d += ((c % 2) ? -1.0 : 1.0) * m[c] * det3(sub);
    }
    return d;
}

// Gaussian elimination with partial pivoting; returns det, fills inverse.
double invert_pivoted(int n, std::vector<double> a, std::span<double> inv) {
    std::vector<double> id(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) id[i * n + i] = 1.0;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a[piv * n + j], a[col * n + j]);
                std::swap(id[piv * n + j], id[col * n + j]);
            }
            det = -det;
        }
        double p = a[col * n + col];
        det *= p;
        if (p == 0.0) return 0.0;
        for (int j = 0; j < n; ++j) {
            a[col * n + j] /= p;
            id[col * n + j] /= p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                id[r * n + j] -= f * id[col * n + j];
            }
        }
    }
    std::copy(id.begin(), id.end(), inv.begin());
    return det;
}

} // namespace

double MetricField::determinant_at(std::size_t node) const {
    const int n = dim();
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i * n + j] = (*this)(node, i, j);
    switch (n) {
        case 1: return m[0];
        case 2: return det2(m[0], m[1], m[2], m[3]);
        case 3: return det3(m.data());
        case 4: return det4(m.data());
        default: {
            std::vector<double> scratch(m.size());
            return invert_pivoted(n, m, scratch);
        }
    }
}

void MetricField::invert_at(std::size_t node, std::span<double> inv, double* det_out) const {
    const int n = dim();
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    double gmax = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            m[i * n + j] = (*this)(node, i, j);
            gmax = std::max(gmax, std::abs(m[i * n + j]));
        }

    double det = 0.0;
    if (n <= 4) {
        switch (n) {
            case 1: det = m[0]; break;
            case 2: det = det2(m[0], m[1], m[2], m[3]); break;
            case 3: det = det3(m.data()); break;
            case 4: det = det4(m.data()); break;
        }
    }

    double cutoff = 1e-12 * std::pow(gmax, n);
    if (n <= 4) {
        if (!(std::abs(det) > cutoff))
            throw SingularMetricError("degenerate metric at node " + std::to_string(node));
        // cofactor inverse
        if (n == 1) {
            inv[0] = 1.0 / m[0];
        } else if (n == 2) {
            inv[0] = m[3] / det;
            inv[1] = -m[1] / det;
            inv[2] = -m[2] / det;
            inv[3] = m[0] / det;
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    std::vector<double> sub;
                    sub.reserve(static_cast<std::size_t>(n - 1) * (n - 1));
                    for (int r = 0; r < n; ++r) {
                        if (r == i) continue;
                        for (int c = 0; c < n; ++c) {
                            if (c == j) continue;
                            sub.push_back(m[r * n + c]);
                        }
                    }
                    double minor = (n == 3) ? det2(sub[0], sub[1], sub[2], sub[3]) : det3(sub.data());
                    double cof = (((i + j) % 2) ? -1.0 : 1.0) * minor;
                    inv[j * n + i] = cof / det; // adjugate transpose
                }
        }
    } else {
        det = invert_pivoted(n, m, inv);
        if (!(std::abs(det) > cutoff))
            throw SingularMetricError("degenerate metric at node " + std::to_string(node));
    }
    if (det_out) *det_out = det;
}

double max_abs_diff_interior(const TensorField& a, const TensorField& b) {
    Margins m = detail::max_margins(a.margins(), b.margins());
    double worst = 0.0;
    detail::for_each_valid(a.grid(), m, [&](std::size_t n) {
        for (std::size_t c = 0; c < a.comps(); ++c)
            worst = std::max(worst, std::abs(a.at(n, c) - b.at(n, c)));
    });
    return worst;
}

double max_abs_diff_interior(const ScalarField& a, const ScalarField& b) {
    Margins m = detail::max_margins(a.margins(), b.margins());
    double worst = 0.0;
    detail::for_each_valid(a.grid(), m, [&](std::size_t n) {
        worst = std::max(worst, std::abs(a[n] - b[n]));
    });
    return worst;
}

} // namespace cwp
