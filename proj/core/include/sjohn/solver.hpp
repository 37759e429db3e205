#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sjohn/config.hpp"
#include "sjohn/fn.hpp"
#include "sjohn/sgeom.hpp"

namespace sjohn {

enum class SolveStatus { converged, max_iters, infeasible_tolerance };

std::string to_string(SolveStatus s);

struct TracePoint {
    int iteration = 0;
    double s_volume = 0.0;
    double max_violation = 0.0;
};

struct JohnResult {
    SymEllipsoid ellipsoid;
    double s = 1.0;
    double s_volume = 0.0;
    std::vector<TracePoint> ascent_trace;
    SolveStatus status = SolveStatus::infeasible_tolerance;
};

// Largest-determinant ellipsoid of the given height inside the s-lifting of f.
// Log-barrier on the violation oracle over the Cholesky factor of A and the
// center. Returns nullopt when no feasible ellipsoid of this height is found.
std::optional<SymEllipsoid> solve_fixed_height(const LogConcaveFn& f, double s, double alpha,
                                               const std::optional<SymEllipsoid>& warm_start,
                                               const RunConfig& cfg = {});

// John s-ellipsoid: golden-section over log height with nested fixed-height
// solves, then an interpolation polish.
JohnResult solve_john(const LogConcaveFn& f, double s, const RunConfig& cfg = {},
                      const std::optional<SymEllipsoid>& warm_start = std::nullopt);

// Exhaustive d=1 oracle: grid over (A, alpha, a), refined twice around the
// incumbent, containment checked on a dense 1-D grid. Independent of the
// violation oracle and of solve_john.
SymEllipsoid brute_force_1d(const LogConcaveFn& f, double s, int grid_resolution = 48);

// John s-function density of a converged result.
double john_s_function_eval(const JohnResult& result, const Vec& x);

// Sampled (t = log alpha, log Psi(alpha)) profile of the fixed-height
// subproblem; log Psi(e^t)^{1/d} is concave in t.
struct HeightProfile {
    std::vector<std::pair<double, double>> samples;  // (t, log det A_t)
};

HeightProfile height_profile(const LogConcaveFn& f, double s, int n_samples,
                             const RunConfig& cfg = {});

}  // namespace sjohn
