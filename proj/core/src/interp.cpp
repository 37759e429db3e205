#include "sjohn/interp.hpp"

#include <cmath>

#include "sjohn/sgeom.hpp"

namespace sjohn {

std::pair<SymEllipsoid, double> interpolate_ellipsoids(const SymEllipsoid& E1,
                                                       const SymEllipsoid& E2,
                                                       const InterpolationSpec& spec) {
    spec.validate();
    if (E1.dim() != E2.dim()) throw std::invalid_argument("interpolate_ellipsoids: dim mismatch");
    const double b1 = spec.beta1, b2 = spec.beta2();
    const double s = spec.s();
    Mat A = b1 * E1.A + b2 * E2.A;
    double log_alpha = (b1 * spec.s1 * std::log(E1.alpha) + b2 * spec.s2 * std::log(E2.alpha)) / s;
    Vec a = b1 * E1.a + b2 * E2.a;
    return {SymEllipsoid(A, std::exp(log_alpha), a), s};
}

SvolumeBoundResult svolume_lower_bound(const SymEllipsoid& E1, const SymEllipsoid& E2,
                                       double beta1, double s) {
    if (!(beta1 > 0.0) || !(beta1 < 1.0))
        throw std::invalid_argument("svolume_lower_bound: beta1 must be in (0,1)");
    SvolumeBoundResult r;
    r.bound = std::exp(beta1 * log_s_volume(E1, s) + (1.0 - beta1) * log_s_volume(E2, s));
    r.tight = (E1.A - E2.A).norm() <= 1e-10;
    return r;
}

SymEllipsoid sausage_ellipsoid(const SymEllipsoid& E, const Vec& a1, const Vec& a2) {
    if (a1.size() != E.dim() || a2.size() != E.dim())
        throw std::invalid_argument("sausage_ellipsoid: dim mismatch");
    Vec mid = 0.5 * (a1 + a2);
    Vec v = E.A.llt().solve(a1 - a2) * 0.5;
    double delta = v.norm();
    if (delta == 0.0) return SymEllipsoid(E.A, E.alpha, a1);
    Vec vhat = v / delta;
    Mat stretch = Mat::Identity(E.dim(), E.dim()) + delta * (vhat * vhat.transpose());
    return SymEllipsoid(canonical_shape(E.A * stretch), E.alpha, mid);
}

GaussianPayload interpolate_gaussians(const GaussianPayload& G1, const GaussianPayload& G2,
                                      double beta1) {
    if (!(beta1 > 0.0) || !(beta1 < 1.0))
        throw std::invalid_argument("interpolate_gaussians: beta1 must be in (0,1)");
    if (G1.A.rows() != G2.A.rows())
        throw std::invalid_argument("interpolate_gaussians: dim mismatch");
    const double b2 = 1.0 - beta1;
    GaussianPayload G;
    G.A = beta1 * G1.A + b2 * G2.A;
    G.alpha = std::exp(beta1 * std::log(G1.alpha) + b2 * std::log(G2.alpha));
    G.a = beta1 * G1.a + b2 * G2.a;
    return G;
}

double gaussian_integral(const GaussianPayload& G) {
    const int d = static_cast<int>(G.A.rows());
    return G.alpha * std::pow(M_PI, 0.5 * d) * G.A.determinant();
}

}  // namespace sjohn
