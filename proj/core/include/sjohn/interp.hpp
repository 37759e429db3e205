#pragma once

#include "sjohn/ellipsoid.hpp"
#include "sjohn/fn.hpp"

namespace sjohn {

// Weights and exponents for combining two contained ellipsoids.
struct InterpolationSpec {
    double beta1 = 0.5;  // beta2 = 1 - beta1
    double s1 = 1.0;
    double s2 = 1.0;

    double beta2() const { return 1.0 - beta1; }
    double s() const { return beta1 * s1 + beta2() * s2; }

    void validate() const {
        if (!(beta1 > 0.0) || !(beta1 < 1.0))
            throw std::invalid_argument("InterpolationSpec: beta1 must be in (0,1)");
        if (!(s1 > 0.0) || !(s2 > 0.0))
            throw std::invalid_argument("InterpolationSpec: s1, s2 must be positive");
    }
};

// Combined ellipsoid (beta1 A1 + beta2 A2, (alpha1^{b1 s1} alpha2^{b2 s2})^{1/s},
// beta1 a1 + beta2 a2) together with s = beta1 s1 + beta2 s2.
std::pair<SymEllipsoid, double> interpolate_ellipsoids(const SymEllipsoid& E1,
                                                       const SymEllipsoid& E2,
                                                       const InterpolationSpec& spec);

struct SvolumeBoundResult {
    double bound = 0.0;  // geometric mean of the two s-volumes
    bool tight = false;  // equality case A1 == A2
};

// Lower bound on the s-volume of the interpolant (requires s1 == s2 == s).
SvolumeBoundResult svolume_lower_bound(const SymEllipsoid& E1, const SymEllipsoid& E2,
                                       double beta1, double s);

// Combined ellipsoid covering two translates (A, alpha, a1), (A, alpha, a2):
// centered at the midpoint with the axis toward a1 - a2 stretched by
// 1 + |A^{-1}(a1-a2)|/2.
SymEllipsoid sausage_ellipsoid(const SymEllipsoid& E, const Vec& a1, const Vec& a2);

// Gaussian interpolation: (beta1 A1 + beta2 A2, alpha1^{beta1} alpha2^{beta2},
// beta1 a1 + beta2 a2).
GaussianPayload interpolate_gaussians(const GaussianPayload& G1, const GaussianPayload& G2,
                                      double beta1);

// Integral of the represented Gaussian density: alpha pi^{d/2} det A.
double gaussian_integral(const GaussianPayload& G);

}  // namespace sjohn
