#pragma once

#include <functional>

#include "sjohn/linalg.hpp"

namespace sjohn {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = true;
    long evals = 0;
};

// Adaptive Gauss-Kronrod (7,15) on [lo, hi]. Handles integrands with kinks and
// jumps by interval subdivision.
QuadResult integrate_adaptive_1d(const std::function<double(double)>& f, double lo,
                                 double hi, double rel_tol, double abs_tol,
                                 int max_intervals = 20000);

// Iterated adaptive quadrature over an axis-aligned box, dim from lo.size().
// dim 1 and 2 use nested Gauss-Kronrod, dim 3 uses Halton quasi-random
// sampling (relative accuracy ~1e-3).
QuadResult integrate_box(const std::function<double(const Vec&)>& f, const Vec& lo,
                         const Vec& hi, double rel_tol, double abs_tol = 0.0);

}  // namespace sjohn
