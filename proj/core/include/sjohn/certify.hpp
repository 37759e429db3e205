#pragma once

#include <optional>
#include <vector>

#include "sjohn/config.hpp"
#include "sjohn/fn.hpp"
#include "sjohn/sgeom.hpp"

namespace sjohn {

struct ContactPoint {
    Vec u;      // projection onto R^d, |u| <= 1
    double w;   // last coordinate, w = sqrt(1 - |u|^2); w = 0 on the support boundary
    Vec u_bar() const {
        Vec v(u.size() + 1);
        v.head(u.size()) = u;
        v(u.size()) = w;
        return v;
    }
};

struct ContactCertificate {
    std::vector<ContactPoint> contacts;  // includes both reflections for w > 0
    std::vector<double> weights;         // parallel to contacts, positive
    double s = 1.0;
    double residual = 0.0;  // Frobenius + Euclidean residual of the moment system
};

// Affine + scale record: x = A y + a and g(y) = f(A y + a) / alpha^s.
struct NormalizationMap {
    Mat A;
    Vec a;
    double alpha = 1.0;
    double s = 1.0;

    Vec to_original(const Vec& y) const { return A * y + a; }
};

// Reduce (f, E) to the unit-ball setting: returns g with John candidate
// B^{d+1} and the invertible map record.
std::pair<LogConcaveFn, NormalizationMap> normalize_to_ball(const LogConcaveFn& f,
                                                            const SymEllipsoid& E, double s,
                                                            const RunConfig& cfg = {});

// All detected contact points of B^{d+1} with the s-lifting of g: local
// maximizers of s log h_B - log g with value >= -contact_tol, lifted with both
// reflections, plus support-boundary contacts (w = 0).
std::vector<ContactPoint> find_contacts(const LogConcaveFn& g, double s,
                                        const RunConfig& cfg = {});

struct WeightSolveOutcome {
    std::optional<ContactCertificate> certificate;
    double best_residual = kPosInf;
    // Dual separating direction (H + gamma, h) when infeasible.
    Mat dual_H;
    double dual_gamma = 0.0;
    Vec dual_h;
};

// Nonnegative least squares for the moment system sum c u_bar x u_bar = I + s,
// sum c u = 0, then Caratheodory pruning of the support.
WeightSolveOutcome solve_weights(const std::vector<ContactPoint>& contacts, double s,
                                 const RunConfig& cfg = {});

enum class OptimalityVerdict { certified_global, locally_suspect };

struct VerifyResult {
    OptimalityVerdict verdict = OptimalityVerdict::locally_suspect;
    std::optional<ContactCertificate> certificate;  // in normalized coordinates
    std::vector<ContactPoint> contacts;             // detected, normalized coordinates
    NormalizationMap map;
    Mat dual_H;          // improvement hint when locally_suspect
    double dual_gamma = 0.0;
    Vec dual_h;
};

VerifyResult verify_optimality(const LogConcaveFn& f, const SymEllipsoid& E, double s,
                               const RunConfig& cfg = {});

// Projected functional form of the certificate conditions: touching values,
// sum c u x u = I, sum c f^{2/s}(u) = s and sum c u = 0. Must agree with the
// lifted form accepted by solve_weights.
bool functional_condition_check(const ContactCertificate& cert, const LogConcaveFn& g, double s,
                                const RunConfig& cfg = {});

}  // namespace sjohn
