#pragma once

#include "sjohn/linalg.hpp"

namespace sjohn {

// A d-symmetric ellipsoid in R^{d+1}, stored as the block-diagonal form
// (A + height) acting on the unit ball plus a horizontal shift:
//   E = { (A u + a, alpha v) : |u|^2 + v^2 <= 1 }.
// A is SPD and alpha > 0; the representation is unique.
struct SymEllipsoid {
    Mat A;
    double alpha = 1.0;
    Vec a;

    SymEllipsoid() = default;
    SymEllipsoid(Mat A_, double alpha_, Vec a_) : A(std::move(A_)), alpha(alpha_), a(std::move(a_)) {
        validate();
    }

    int dim() const { return static_cast<int>(A.rows()); }

    void validate() const {
        if (A.rows() != A.cols() || A.rows() != a.size())
            throw std::invalid_argument("SymEllipsoid: dimension mismatch");
        if (!(alpha > 0.0)) throw std::invalid_argument("SymEllipsoid: height must be positive");
        if (!is_spd(A)) throw std::invalid_argument("SymEllipsoid: A must be SPD");
    }

    static SymEllipsoid unit_ball(int d) {
        return SymEllipsoid(Mat::Identity(d, d), 1.0, Vec::Zero(d));
    }
};

}  // namespace sjohn
