#include "cwp/quadrature.hpp"

#include <cmath>
#include <vector>

namespace cwp {

namespace {

double simpson_segment(double fa, double fm, double fb, double h) {
    return (fa + 4.0 * fm + fb) * (h / 6.0);
}

double adapt(const std::function<double(double)>& f, double a, double m, double b, double fa,
             double fm, double fb, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson_segment(fa, flm, fm, m - a);
    double right = simpson_segment(fm, frm, fb, b - m);
    double err = (left + right - whole) / 15.0;
    if (std::abs(err) <= tol || depth <= 0) return left + right + err;
    return adapt(f, a, lm, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adapt(f, m, rm, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = simpson_segment(fa, fm, fb, b - a);
    return adapt(f, a, m, b, fa, fm, fb, whole, tol, max_depth);
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& values, double h) {
    std::vector<double> out(values.size(), 0.0);
    for (std::size_t i = 1; i < values.size(); ++i)
        out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
    return out;
}

double bisect(const std::function<double(double)>& f, double a, double b, double xtol,
              int max_iter) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw DomainError("bisect: no sign change in bracket");
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

} // namespace cwp
