#pragma once

#include <cstdint>
#include <stdexcept>

namespace sjohn {

// Shared numeric configuration. The seed fixes every stochastic choice so that
// identical configs give identical results.
struct RunConfig {
    double tol = 1e-7;          // containment tolerance, absolute on the log scale
    int grid_per_axis = 33;     // seed density of the violation oracle
    std::uint64_t seed = 42;
    double rel_tol = 1e-6;      // integration relative tolerance (1e-3 used for d=3)
    double contact_tol = 1e-5;  // contact detection band on the log scale
    double cert_tol = 1e-6;     // certificate residual acceptance
    double collar = 0.05;       // boundary collar fraction for uniform-distance sweeps
    int max_iters = 400;        // per-stage iteration budget of local optimizers

    void validate() const {
        if (tol <= 0 || rel_tol <= 0 || contact_tol <= 0 || cert_tol <= 0 || collar <= 0)
            throw std::invalid_argument("RunConfig: tolerances must be positive");
        if (grid_per_axis < 3) throw std::invalid_argument("RunConfig: grid_per_axis < 3");
    }
};

}  // namespace sjohn
