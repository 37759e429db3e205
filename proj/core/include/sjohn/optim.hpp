#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sjohn/linalg.hpp"

namespace sjohn {

// Golden-section maximization of a unimodal function on [lo, hi].
// Returns the abscissa of the maximum; |bracket| shrinks below xtol.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double xtol, int max_iters = 200);

struct NelderMeadOptions {
    int max_iters = 400;
    double xtol = 1e-10;    // simplex diameter stop
    double ftol = 1e-12;    // objective spread stop
    double init_step = 0.1; // initial simplex edge
    int restarts = 1;       // re-seed simplex around incumbent
};

struct NelderMeadResult {
    Vec x;
    double value = kNegInf;
    int evals = 0;
};

// Derivative-free maximization. The objective may return -inf outside its
// domain; the initial point must be finite-valued.
NelderMeadResult nelder_mead_max(const std::function<double(const Vec&)>& f,
                                 const Vec& x0, const NelderMeadOptions& opt);

// One pass of per-coordinate golden refinement around x, searching +-step.
NelderMeadResult coordinate_polish(const std::function<double(const Vec&)>& f,
                                   const Vec& x0, double step, double xtol,
                                   int passes = 2);

struct NnlsResult {
    Vec x;          // nonnegative weights
    Vec residual;   // b - A x
    double residual_norm = 0.0;
    int iters = 0;
};

// Lawson-Hanson active-set nonnegative least squares: min ||A x - b||, x >= 0.
NnlsResult nnls(const Mat& A, const Vec& b, double tol = 1e-12, int max_iters = 0);

// Deterministic quasi-random direction/point sets.
std::vector<Vec> fibonacci_sphere(int n, int dim);      // unit vectors, dim in {1,2,3}
std::vector<Vec> fibonacci_ball(int n, int dim);        // points in the closed unit ball
std::vector<double> halton_sequence(int index, int base_count, const int* bases);

// Seeded RNG stream; all stochastic choices in the library run through this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double normal(double mu = 0.0, double sigma = 1.0) {
        return std::normal_distribution<double>(mu, sigma)(gen_);
    }
    int uniform_int(int lo, int hi) {  // inclusive
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }
    Vec normal_vec(int d, double sigma = 1.0) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v(i) = normal(0.0, sigma);
        return v;
    }
    // Random SPD matrix with eigenvalues in [lo, hi].
    Mat spd(int d, double lo, double hi);

private:
    std::mt19937_64 gen_;
};

}  // namespace sjohn
