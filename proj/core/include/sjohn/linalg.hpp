#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>

namespace sjohn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

inline bool is_spd(const Mat& A, double tol = 0.0) {
    if (A.rows() != A.cols()) return false;
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff())) return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    return es.eigenvalues().minCoeff() > tol;
}

// Symmetric positive definite square root.
inline Mat spd_sqrt(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw std::runtime_error("spd_sqrt: matrix not positive definite");
    }
    return es.operatorSqrt();
}

inline double spectral_norm(const Mat& A) {
    return A.jacobiSvd().singularValues()(0);
}

inline double smallest_singular_value(const Mat& A) {
    auto sv = A.jacobiSvd().singularValues();
    return sv(sv.size() - 1);
}

// Symmetrize and take the canonical SPD representative of the ellipsoid M*B^d,
// i.e. the SPD square root of M*M^T.
inline Mat canonical_shape(const Mat& M) {
    return spd_sqrt(M * M.transpose());
}

inline Vec unit(const Vec& v) {
    double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("unit: zero vector");
    return v / n;
}

}  // namespace sjohn
