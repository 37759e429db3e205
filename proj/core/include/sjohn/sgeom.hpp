#pragma once

#include "sjohn/config.hpp"
#include "sjohn/ellipsoid.hpp"
#include "sjohn/fn.hpp"

namespace sjohn {

// s-volume of the unit ball in R^{d+1}: pi^{d/2} Gamma(s/2+1) / Gamma(s/2+d/2+1).
// Evaluated through log-Gamma; s = 0 gives vol_d(B^d).
double kappa_s(int d, double s);
double log_kappa_s(int d, double s);

double unit_ball_volume(int d);

// s-volume of a d-symmetric ellipsoid: kappa_s * alpha^s * det A.
double s_volume(const SymEllipsoid& E, double s);
double log_s_volume(const SymEllipsoid& E, double s);

// Height function of the ellipsoid: alpha * sqrt(1 - |A^{-1}(x-a)|^2) on the
// closed domain A B^d + a, zero outside.
double height_eval(const SymEllipsoid& E, const Vec& x);
double log_height_eval(const SymEllipsoid& E, const Vec& x);

// s-marginal density of the ellipsoid: height^s.
double s_marginal_density(const SymEllipsoid& E, double s, const Vec& x);

struct ViolationReport {
    double max_violation = kNegInf;  // sup over the domain of s*log h_E - log f
    Vec witness;
    bool contained = false;
    bool grid_fallback = false;  // local refinement failed; grid value reported
};

// Containment oracle for E inside the s-lifting of f. Deterministic seed
// lattice followed by local maximization; +inf is reported with a witness when
// the domain of E leaves the support of f. u_hints are extra seeds in the
// unit-ball parameterization of the domain (warm starts along a solve).
// grid_per_axis below 20 selects a cheaper refinement schedule.
ViolationReport violation(const LogConcaveFn& f, const SymEllipsoid& E, double s,
                          const RunConfig& cfg = {}, const std::vector<Vec>& u_hints = {});

// Upper bound on f from a contact point of the unit ball with the s-lifting:
// w^s * exp(-(s/w^2) <u, x-u>), w = sqrt(1-|u|^2). Requires |u| < 1.
double tangent_tail_bound(const Vec& u, double s, const Vec& x);
double log_tangent_tail_bound(const Vec& u, double s, const Vec& x);

// Integral of f over R^d (d <= 3). Adaptive tensor quadrature for d <= 2,
// quasi-random sampling for d = 3; throws on detected divergence.
double integrate(const LogConcaveFn& f, const RunConfig& cfg = {});

// f = (h_{B^{d+1}})^s, the s-th power of the unit-ball height function.
LogConcaveFn ball_height_power(int d, double s);

}  // namespace sjohn
