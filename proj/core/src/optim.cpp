#include "sjohn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sjohn {

double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double xtol, int max_iters) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iters && (b - a) > xtol; ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

namespace {

NelderMeadResult nm_single(const std::function<double(const Vec&)>& f,
                           const Vec& x0, double step, const NelderMeadOptions& opt,
                           int* eval_count) {
    const int n = static_cast<int>(x0.size());
    std::vector<Vec> pts;
    std::vector<double> vals;
    pts.reserve(n + 1);
    auto eval = [&](const Vec& x) {
        ++(*eval_count);
        return f(x);
    };
    pts.push_back(x0);
    vals.push_back(eval(x0));
    for (int i = 0; i < n; ++i) {
        Vec p = x0;
        double h = step * std::max(1.0, std::abs(x0(i)));
        p(i) += h;
        double v = eval(p);
        if (!std::isfinite(v)) {  // fall back toward the interior
            p(i) = x0(i) - h;
            v = eval(p);
        }
        if (!std::isfinite(v)) {
            p(i) = x0(i) + 0.01 * h;
            v = eval(p);
        }
        pts.push_back(p);
        vals.push_back(v);
    }
    std::vector<int> order(n + 1);
    auto sort_order = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) { return vals[i] > vals[j]; });
    };
    sort_order();
    for (int it = 0; it < opt.max_iters; ++it) {
        int best = order[0], worst = order[n], second_worst = order[n - 1];
        // Centroid of all but the worst.
        Vec centroid = Vec::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= n;

        double diam = 0.0;
        for (int i = 1; i <= n; ++i) diam = std::max(diam, (pts[order[i]] - pts[best]).norm());
        double spread = vals[best] - vals[worst];
        if (diam < opt.xtol && (!std::isfinite(spread) || spread < opt.ftol)) break;

        Vec xr = centroid + (centroid - pts[worst]);
        double fr = eval(xr);
        if (fr > vals[best]) {
            Vec xe = centroid + 2.0 * (centroid - pts[worst]);
            double fe = eval(xe);
            if (fe > fr) { pts[worst] = xe; vals[worst] = fe; }
            else { pts[worst] = xr; vals[worst] = fr; }
        } else if (fr > vals[second_worst]) {
            pts[worst] = xr; vals[worst] = fr;
        } else {
            Vec xc = centroid + 0.5 * (pts[worst] - centroid);
            double fc = eval(xc);
            if (fc > vals[worst]) {
                pts[worst] = xc; vals[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
        sort_order();
    }
    sort_order();
    NelderMeadResult r;
    r.x = pts[order[0]];
    r.value = vals[order[0]];
    return r;
}

}  // namespace

NelderMeadResult nelder_mead_max(const std::function<double(const Vec&)>& f,
                                 const Vec& x0, const NelderMeadOptions& opt) {
    int evals = 0;
    Vec x = x0;
    double step = opt.init_step;
    NelderMeadResult best;
    best.x = x0;
    best.value = f(x0);
    ++evals;
    for (int r = 0; r <= opt.restarts; ++r) {
        NelderMeadResult res = nm_single(f, x, step, opt, &evals);
        if (res.value > best.value) best = res;
        x = best.x;
        step *= 0.25;  // tighter simplex around the incumbent
    }
    best.evals = evals;
    return best;
}

NelderMeadResult coordinate_polish(const std::function<double(const Vec&)>& f,
                                   const Vec& x0, double step, double xtol,
                                   int passes) {
    Vec x = x0;
    double fx = f(x);
    int evals = 1;
    const int n = static_cast<int>(x.size());
    for (int p = 0; p < passes; ++p) {
        for (int i = 0; i < n; ++i) {
            double h = step * std::max(1.0, std::abs(x(i)));
            auto line = [&](double t) {
                Vec y = x;
                y(i) = t;
                ++evals;
                return f(y);
            };
            double t = golden_max(line, x(i) - h, x(i) + h, xtol);
            Vec y = x;
            y(i) = t;
            double fy = f(y);
            ++evals;
            if (fy > fx) { x = y; fx = fy; }
        }
        step *= 0.25;
    }
    NelderMeadResult r;
    r.x = x;
    r.value = fx;
    r.evals = evals;
    return r;
}

NnlsResult nnls(const Mat& A, const Vec& b, double tol, int max_iters) {
    const int n = static_cast<int>(A.cols());
    if (max_iters <= 0) max_iters = 3 * n + 30;
    Vec x = Vec::Zero(n);
    std::vector<bool> passive(n, false);
    Vec w = A.transpose() * (b - A * x);
    double scale = std::max(1.0, b.norm());
    int iters = 0;
    while (iters < max_iters) {
        // Most violated dual among the active (zero) set.
        int t = -1;
        double wmax = tol * scale;
        for (int i = 0; i < n; ++i)
            if (!passive[i] && w(i) > wmax) { wmax = w(i); t = i; }
        if (t < 0) break;
        passive[t] = true;
        while (true) {
            ++iters;
            std::vector<int> idx;
            for (int i = 0; i < n; ++i)
                if (passive[i]) idx.push_back(i);
            Mat Ap(A.rows(), static_cast<int>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<int>(k)) = A.col(idx[k]);
            Vec z = Ap.colPivHouseholderQr().solve(b);
            bool all_pos = true;
            for (int k = 0; k < z.size(); ++k)
                if (z(k) <= tol) { all_pos = false; break; }
            if (all_pos) {
                x.setZero();
                for (size_t k = 0; k < idx.size(); ++k) x(idx[k]) = z(static_cast<int>(k));
                break;
            }
            // Step back to the feasible boundary.
            double alpha = kPosInf;
            for (size_t k = 0; k < idx.size(); ++k) {
                double zk = z(static_cast<int>(k)), xk = x(idx[k]);
                if (zk <= tol) alpha = std::min(alpha, xk / (xk - zk));
            }
            for (size_t k = 0; k < idx.size(); ++k) {
                int i = idx[k];
                x(i) += alpha * (z(static_cast<int>(k)) - x(i));
                if (x(i) <= tol) { x(i) = 0.0; passive[i] = false; }
            }
            if (iters >= max_iters) break;
        }
        w = A.transpose() * (b - A * x);
    }
    NnlsResult r;
    r.x = x;
    r.residual = b - A * x;
    r.residual_norm = r.residual.norm();
    r.iters = iters;
    return r;
}

std::vector<Vec> fibonacci_sphere(int n, int dim) {
    std::vector<Vec> out;
    out.reserve(n);
    if (dim == 1) {
        Vec p(1);
        p(0) = 1.0;
        out.push_back(p);
        p(0) = -1.0;
        out.push_back(p);
        return out;
    }
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            double th = 2.0 * M_PI * k / n;
            Vec p(2);
            p << std::cos(th), std::sin(th);
            out.push_back(p);
        }
        return out;
    }
    for (int k = 0; k < n; ++k) {
        double z = 1.0 - 2.0 * (k + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = golden * k;
        Vec p(3);
        p << r * std::cos(th), r * std::sin(th), z;
        out.push_back(p);
    }
    return out;
}

std::vector<Vec> fibonacci_ball(int n, int dim) {
    std::vector<Vec> out;
    out.reserve(n);
    if (dim == 1) {
        for (int k = 0; k < n; ++k) {
            Vec p(1);
            p(0) = -1.0 + 2.0 * (k + 0.5) / n;
            out.push_back(p);
        }
        return out;
    }
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            double r = std::sqrt((k + 0.5) / n);
            double th = golden * k;
            Vec p(2);
            p << r * std::cos(th), r * std::sin(th);
            out.push_back(p);
        }
        return out;
    }
    // Radial Halton stratification combined with the spherical lattice.
    auto dirs = fibonacci_sphere(n, 3);
    static const int bases[1] = {2};
    for (int k = 0; k < n; ++k) {
        double u = halton_sequence(k + 1, 1, bases)[0];
        double r = std::cbrt(u);
        out.push_back(r * dirs[k]);
    }
    return out;
}

std::vector<double> halton_sequence(int index, int base_count, const int* bases) {
    std::vector<double> out(base_count);
    for (int b = 0; b < base_count; ++b) {
        double f = 1.0, r = 0.0;
        int i = index;
        while (i > 0) {
            f /= bases[b];
            r += f * (i % bases[b]);
            i /= bases[b];
        }
        out[b] = r;
    }
    return out;
}

Mat Rng::spd(int d, double lo, double hi) {
    Mat G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = normal();
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    Vec ev(d);
    for (int i = 0; i < d; ++i) ev(i) = uniform(lo, hi);
    return Q * ev.asDiagonal() * Q.transpose();
}

}  // namespace sjohn
