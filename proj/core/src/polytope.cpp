#include "sjohn/polytope.hpp"

#include <algorithm>
#include <cmath>

#include "sjohn/optim.hpp"

namespace sjohn {

namespace {

void combinations(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        visit(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

std::vector<Vec> polytope_vertices(const HalfspaceList& hs, int dim, double tol) {
    std::vector<Vec> verts;
    const int m = static_cast<int>(hs.size());
    if (m < dim) return verts;
    double scale = 1.0;
    for (const auto& h : hs) scale = std::max(scale, std::abs(h.c));
    combinations(m, dim, [&](const std::vector<int>& idx) {
        Mat N(dim, dim);
        Vec c(dim);
        for (int r = 0; r < dim; ++r) {
            N.row(r) = hs[idx[r]].n.transpose();
            c(r) = hs[idx[r]].c;
        }
        Eigen::FullPivLU<Mat> lu(N);
        if (!lu.isInvertible()) return;
        Vec x = lu.solve(c);
        if (!x.allFinite()) return;
        if (satisfies(hs, x, tol * scale + tol * x.norm())) {
            for (const auto& v : verts)
                if ((v - x).norm() < 1e-8 * (1.0 + x.norm())) return;
            verts.push_back(x);
        }
    });
    return verts;
}

bool polyhedron_unbounded(const HalfspaceList& hs, int dim, double tol) {
    // Recession direction: unit u with <n_j, u> <= 0 for all j.  m(u) =
    // max_j <n_j, u> is convex on the sphere; scan a fine lattice and refine.
    if (hs.empty()) return true;
    auto slack = [&](const Vec& u) {
        double worst = kNegInf;
        for (const auto& h : hs) worst = std::max(worst, h.n.dot(u) / std::max(h.n.norm(), 1e-300));
        return worst;
    };
    int n = dim == 1 ? 2 : (dim == 2 ? 720 : 4000);
    double best = kPosInf;
    Vec best_u;
    for (const auto& u : fibonacci_sphere(n, dim)) {
        double s = slack(u);
        if (s < best) { best = s; best_u = u; }
    }
    if (best <= tol) return true;
    if (dim >= 2) {
        auto obj = [&](const Vec& v) {
            double nv = v.norm();
            if (nv < 1e-12) return kNegInf;
            return -slack(v / nv);
        };
        NelderMeadOptions opt;
        opt.max_iters = 200;
        auto r = nelder_mead_max(obj, best_u, opt);
        if (-r.value <= tol) return true;
    }
    return false;
}

std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) {
    if (pts.size() < 3) return pts;
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
    });
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
    };
    std::vector<Vec> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double polytope_volume(const std::vector<Vec>& vertices, int dim) {
    if (vertices.empty()) return 0.0;
    if (dim == 1) {
        double lo = kPosInf, hi = kNegInf;
        for (const auto& v : vertices) {
            lo = std::min(lo, v(0));
            hi = std::max(hi, v(0));
        }
        return std::max(0.0, hi - lo);
    }
    if (dim == 2) {
        auto hull = convex_hull_2d(vertices);
        if (hull.size() < 3) return 0.0;
        double a = 0.0;
        for (size_t i = 0; i < hull.size(); ++i) {
            const Vec& p = hull[i];
            const Vec& q = hull[(i + 1) % hull.size()];
            a += p(0) * q(1) - q(0) * p(1);
        }
        return 0.5 * std::abs(a);
    }
    if (dim == 3) {
        // Fan decomposition over the hull facets would need a 3-D hull; a
        // centroid-based Monte Carlo-free alternative: slice along x3 and use
        // 2-D sections.  Sufficient accuracy for the inequality checks here.
        Vec centroid = Vec::Zero(3);
        for (const auto& v : vertices) centroid += v;
        centroid /= static_cast<double>(vertices.size());
        double lo = kPosInf, hi = kNegInf;
        for (const auto& v : vertices) {
            lo = std::min(lo, v(2));
            hi = std::max(hi, v(2));
        }
        const int slices = 2000;
        double vol = 0.0;
        double dz = (hi - lo) / slices;
        for (int i = 0; i < slices; ++i) {
            double z = lo + (i + 0.5) * dz;
            // Section of conv(V) at height z: convex combinations of edges
            // crossing z.  Collect intersection points of all vertex pairs.
            std::vector<Vec> sect;
            for (size_t a = 0; a < vertices.size(); ++a) {
                for (size_t b = a + 1; b < vertices.size(); ++b) {
                    double za = vertices[a](2), zb = vertices[b](2);
                    if ((za - z) * (zb - z) > 0 || za == zb) continue;
                    double t = (z - za) / (zb - za);
                    Vec p = vertices[a] + t * (vertices[b] - vertices[a]);
                    Vec q(2);
                    q << p(0), p(1);
                    sect.push_back(q);
                }
            }
            vol += polytope_volume(sect, 2) * dz;
        }
        return vol;
    }
    throw std::invalid_argument("polytope_volume: dim > 3");
}

double polytope_volume(const HalfspaceList& hs, int dim) {
    return polytope_volume(polytope_vertices(hs, dim), dim);
}

bool in_convex_hull(const std::vector<Vec>& points, const Vec& p, double tol, Vec* coeffs) {
    if (points.empty()) return false;
    const int d = static_cast<int>(p.size());
    const int n = static_cast<int>(points.size());
    // Solve min || [P; 1] lambda - [p; 1] || over lambda >= 0.
    Mat A(d + 1, n);
    for (int j = 0; j < n; ++j) {
        A.block(0, j, d, 1) = points[j];
        A(d, j) = 1.0;
    }
    Vec b(d + 1);
    b.head(d) = p;
    b(d) = 1.0;
    auto r = nnls(A, b);
    if (coeffs) *coeffs = r.x;
    double scale = 1.0 + p.norm();
    return r.residual_norm <= tol * scale;
}

Vec caratheodory_prune(const std::vector<Vec>& phi, Vec weights, double tol) {
    const int m = static_cast<int>(phi.empty() ? 0 : phi[0].size());
    while (true) {
        std::vector<int> support;
        for (int i = 0; i < weights.size(); ++i)
            if (weights(i) > tol) support.push_back(i);
        const int k = static_cast<int>(support.size());
        if (k <= m) break;
        Mat B(m, k);
        for (int j = 0; j < k; ++j) B.col(j) = phi[support[j]];
        // Nontrivial nu with B nu = 0.
        Eigen::FullPivLU<Mat> lu(B);
        Mat null_space = lu.kernel();
        if (null_space.cols() == 0 || null_space.col(0).norm() < 1e-14) break;
        Vec nu = null_space.col(0);
        if (nu.maxCoeff() <= 0) nu = -nu;
        double t = kPosInf;
        for (int j = 0; j < k; ++j)
            if (nu(j) > 0) t = std::min(t, weights(support[j]) / nu(j));
        if (!std::isfinite(t)) break;
        for (int j = 0; j < k; ++j) {
            weights(support[j]) -= t * nu(j);
            if (weights(support[j]) < tol) weights(support[j]) = 0.0;
        }
    }
    return weights;
}

double support_function(const std::vector<Vec>& points, const Vec& u) {
    double best = kNegInf;
    for (const auto& p : points) best = std::max(best, u.dot(p));
    return best;
}

}  // namespace sjohn
