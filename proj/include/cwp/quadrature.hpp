#pragma once

#include <functional>

#include "cwp/util.hpp"

namespace cwp {

// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 50);

// Trapezoid cumulative integral of uniformly sampled values: out[i] =
// integral from x0 to x0 + i*h.
std::vector<double> cumulative_trapezoid(const std::vector<double>& values, double h);

// Bisection root bracket refinement to |b - a| <= xtol; f(a), f(b) must have
// opposite signs.
double bisect(const std::function<double(double)>& f, double a, double b, double xtol = 1e-12,
              int max_iter = 200);

} // namespace cwp
