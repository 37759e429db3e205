#include "sjohn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "sjohn/optim.hpp"

namespace sjohn {

namespace {

// Gauss-Kronrod (7,15) nodes and weights on [-1,1].
const double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
const double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
const double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
    double lo, hi, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double lo, double hi, long* evals) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    double fc = f(c);
    *evals += 15;
    double result_g = fc * kWg[3];
    double result_k = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        double f1 = f(c - x), f2 = f(c + x);
        result_k += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) result_g += kWg[j / 2] * (f1 + f2);
    }
    Panel p;
    p.lo = lo;
    p.hi = hi;
    p.value = result_k * h;
    p.error = std::abs((result_k - result_g) * h);
    return p;
}

}  // namespace

QuadResult integrate_adaptive_1d(const std::function<double(double)>& f, double lo,
                                 double hi, double rel_tol, double abs_tol,
                                 int max_intervals) {
    QuadResult out;
    if (!(hi > lo)) return out;
    std::priority_queue<Panel> heap;
    long evals = 0;
    // Pre-split to avoid missing narrow features.
    const int pre = 16;
    double total = 0.0, total_err = 0.0;
    for (int i = 0; i < pre; ++i) {
        double a = lo + (hi - lo) * i / pre;
        double b = lo + (hi - lo) * (i + 1) / pre;
        Panel p = gk15(f, a, b, &evals);
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    int n_intervals = pre;
    while (n_intervals < max_intervals) {
        double target = std::max(abs_tol, rel_tol * std::abs(total));
        if (total_err <= target) break;
        Panel worst = heap.top();
        heap.pop();
        if (worst.hi - worst.lo < 1e-15 * (std::abs(worst.lo) + std::abs(worst.hi) + 1.0)) {
            // Cannot subdivide further (jump discontinuity); accept its error.
            total_err -= worst.error;
            worst.error = 0.0;
            heap.push(worst);
            continue;
        }
        // Slightly asymmetric split: a jump cannot stay aligned with the node
        // symmetry of both rules across refinement levels.
        double mid = worst.lo + 0.46 * (worst.hi - worst.lo);
        Panel l = gk15(f, worst.lo, mid, &evals);
        Panel r = gk15(f, mid, worst.hi, &evals);
        total += l.value + r.value - worst.value;
        total_err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++n_intervals;
    }
    out.value = total;
    out.abs_error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total)) * 1.001 + 1e-300;
    out.evals = evals;
    return out;
}

QuadResult integrate_box(const std::function<double(const Vec&)>& f, const Vec& lo,
                         const Vec& hi, double rel_tol, double abs_tol) {
    const int d = static_cast<int>(lo.size());
    if (d == 1) {
        return integrate_adaptive_1d(
            [&](double x) {
                Vec v(1);
                v(0) = x;
                return f(v);
            },
            lo(0), hi(0), rel_tol, abs_tol);
    }
    if (d == 2) {
        long evals = 0;
        bool inner_ok = true;
        auto outer = [&](double x) {
            auto inner = integrate_adaptive_1d(
                [&](double y) {
                    Vec v(2);
                    v << x, y;
                    return f(v);
                },
                lo(1), hi(1), 0.2 * rel_tol, abs_tol, 4000);
            evals += inner.evals;
            inner_ok = inner_ok && inner.converged;
            return inner.value;
        };
        auto r = integrate_adaptive_1d(outer, lo(0), hi(0), rel_tol, abs_tol, 4000);
        r.evals += evals;
        r.converged = r.converged && inner_ok;
        return r;
    }
    // Quasi-random (Halton) sampling for d >= 3.
    QuadResult out;
    static const int bases[3] = {2, 3, 5};
    double box_vol = 1.0;
    for (int i = 0; i < d; ++i) box_vol *= (hi(i) - lo(i));
    double sum = 0.0;
    long n = 0;
    long next_check = 50000;
    const long max_n = 8'000'000;
    double prev_mean = kPosInf;
    int stable = 0;
    while (n < max_n) {
        while (n < next_check) {
            auto u = halton_sequence(static_cast<int>(n + 1), d, bases);
            Vec x(d);
            for (int i = 0; i < d; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * u[i];
            sum += f(x);
            ++n;
        }
        double mean = sum / static_cast<double>(n);
        double change = std::abs(mean - prev_mean);
        prev_mean = mean;
        out.value = mean * box_vol;
        out.abs_error = change * box_vol;
        // Require two successive doublings inside the tolerance band.
        if (change <= std::max(rel_tol * std::abs(mean), abs_tol / box_vol)) {
            if (++stable >= 2) break;
        } else {
            stable = 0;
        }
        next_check *= 2;
    }
    out.evals = n;
    out.converged = out.abs_error <= std::max(rel_tol * std::abs(out.value), abs_tol) * 1.001 + 1e-300;
    return out;
}

}  // namespace sjohn
