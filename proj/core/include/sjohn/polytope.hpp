#pragma once

#include <optional>
#include <vector>

#include "sjohn/linalg.hpp"

namespace sjohn {

// Closed halfspace {x : <n, x> <= c}.
struct Halfspace {
    Vec n;
    double c = 0.0;
};

using HalfspaceList = std::vector<Halfspace>;

inline bool satisfies(const HalfspaceList& hs, const Vec& x, double tol = 0.0) {
    for (const auto& h : hs)
        if (h.n.dot(x) > h.c + tol) return false;
    return true;
}

// Vertices of {x : <n_j, x> <= c_j} by brute-force basis enumeration.
// Intended for dimension <= 4 and a few dozen halfspaces.
std::vector<Vec> polytope_vertices(const HalfspaceList& hs, int dim, double tol = 1e-9);

// True if the polyhedron has a recession direction (is unbounded); sampled
// directions plus local refinement, adequate for dim <= 3.
bool polyhedron_unbounded(const HalfspaceList& hs, int dim, double tol = 1e-9);

// Volume of conv(vertices) for dim 1 or 2 (exact) and 3 (hull-based).
double polytope_volume(const std::vector<Vec>& vertices, int dim);

// Volume of a halfspace-described polytope (vertex-enumerates first).
double polytope_volume(const HalfspaceList& hs, int dim);

// 2-D convex hull in counterclockwise order (Andrew monotone chain).
std::vector<Vec> convex_hull_2d(std::vector<Vec> pts);

// Decide p in conv(points); optionally return the convex coefficients.
bool in_convex_hull(const std::vector<Vec>& points, const Vec& p, double tol = 1e-9,
                    Vec* coeffs = nullptr);

// Prune a conic combination sum_i c_i phi_i = target to at most dim(phi)
// support points, preserving the combination exactly. Returns new weights
// (same length, zeros outside the support).
Vec caratheodory_prune(const std::vector<Vec>& phi, Vec weights, double tol = 1e-12);

// Support function of a point cloud: max <u, p_i>.
double support_function(const std::vector<Vec>& points, const Vec& u);

}  // namespace sjohn
