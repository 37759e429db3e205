#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sjohn/interp.hpp"
#include "sjohn/optim.hpp"
#include "sjohn/sgeom.hpp"
#include "test_support.hpp"

using namespace sjohn;
using testsup::mat1;
using testsup::vec1;
using testsup::vec2;

TEST_CASE("interpolate_ellipsoids formulas") {
    Rng rng(101);
    SymEllipsoid E(rng.spd(2, 0.5, 1.5), 1.3, rng.normal_vec(2, 0.3));
    InterpolationSpec spec;
    spec.beta1 = 0.5;
    spec.s1 = spec.s2 = 2.0;
    auto [Em, s] = interpolate_ellipsoids(E, E, spec);
    CHECK(s == doctest::Approx(2.0));
    CHECK((Em.A - E.A).norm() < 1e-12);
    CHECK(Em.alpha == doctest::Approx(E.alpha).epsilon(1e-13));
    CHECK((Em.a - E.a).norm() < 1e-12);

    SymEllipsoid E1(Mat::Identity(1, 1), 4.0, Vec::Zero(1));
    SymEllipsoid E2(Mat::Identity(1, 1), 1.0, Vec::Zero(1));
    InterpolationSpec sp2;
    sp2.beta1 = 0.5;
    sp2.s1 = sp2.s2 = 1.0;
    auto [Eg, sg] = interpolate_ellipsoids(E1, E2, sp2);
    CHECK(sg == doctest::Approx(1.0));
    CHECK(Eg.alpha == doctest::Approx(2.0).epsilon(1e-13));  // geometric mean
}

TEST_CASE("interpolant containment in the lifting") {
    RunConfig cfg;
    Rng rng(7);
    for (int d = 1; d <= 2; ++d) {
        double s = 1.5;
        auto f = ball_height_power(d, s);
        int done = 0;
        while (done < 3) {
            Mat A1 = rng.spd(d, 0.3, 0.95);
            Mat A2 = rng.spd(d, 0.3, 0.95);
            SymEllipsoid E1(A1, rng.uniform(0.3, 0.95), 0.02 * rng.normal_vec(d));
            SymEllipsoid E2(A2, rng.uniform(0.3, 0.95), 0.02 * rng.normal_vec(d));
            if (!violation(f, E1, s, cfg).contained) continue;
            if (!violation(f, E2, s, cfg).contained) continue;
            InterpolationSpec spec;
            spec.beta1 = rng.uniform(0.2, 0.8);
            spec.s1 = spec.s2 = s;
            auto [Em, sm] = interpolate_ellipsoids(E1, E2, spec);
            CHECK(sm == doctest::Approx(s));
            CHECK(violation(f, Em, s, cfg).contained);
            ++done;
        }
    }
}

TEST_CASE("s-volume lower bound") {
    SymEllipsoid E(Mat::Identity(2, 2), 1.0, Vec::Zero(2));
    auto r = svolume_lower_bound(E, E, 0.5, 1.0);
    CHECK(r.tight);
    CHECK(r.bound == doctest::Approx(s_volume(E, 1.0)).epsilon(1e-13));

    SymEllipsoid E1(Mat::Identity(2, 2), 1.0, Vec::Zero(2));
    SymEllipsoid E2(2.0 * Mat::Identity(2, 2), 1.0, Vec::Zero(2));
    auto r2 = svolume_lower_bound(E1, E2, 0.5, 1.0);
    CHECK(!r2.tight);
    double kappa1 = kappa_s(2, 1.0);
    CHECK(r2.bound == doctest::Approx(2.0 * kappa1).epsilon(1e-12));
    InterpolationSpec spec;
    spec.beta1 = 0.5;
    spec.s1 = spec.s2 = 1.0;
    auto [Em, s] = interpolate_ellipsoids(E1, E2, spec);
    CHECK(s_volume(Em, s) == doctest::Approx(kappa1 * 2.25).epsilon(1e-12));
    CHECK(s_volume(Em, s) > r2.bound);

    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        SymEllipsoid F1(rng.spd(2, 0.4, 2.0), rng.uniform(0.5, 2.0), rng.normal_vec(2, 0.2));
        SymEllipsoid F2(rng.spd(2, 0.4, 2.0), rng.uniform(0.5, 2.0), rng.normal_vec(2, 0.2));
        double beta = rng.uniform(0.1, 0.9);
        double sv = rng.uniform(0.5, 3.0);
        InterpolationSpec sp;
        sp.beta1 = beta;
        sp.s1 = sp.s2 = sv;
        auto [Fm, sm] = interpolate_ellipsoids(F1, F2, sp);
        auto b = svolume_lower_bound(F1, F2, beta, sv);
        CHECK(s_volume(Fm, sm) >= b.bound - 1e-12);
    }
}

TEST_CASE("sausage ellipsoid") {
    SymEllipsoid E(mat1(1.0), 1.0, vec1(0.3));
    auto same = sausage_ellipsoid(E, vec1(0.3), vec1(0.3));
    CHECK((same.A - E.A).norm() < 1e-14);
    CHECK(same.a(0) == doctest::Approx(0.3));

    auto st = sausage_ellipsoid(E, vec1(0.5), vec1(-0.5));
    CHECK(st.A(0, 0) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(st.a(0) == doctest::Approx(0.0));
    CHECK(s_volume(st, 1.0) == doctest::Approx(1.5 * s_volume(E, 1.0)).epsilon(1e-12));

    // Containment: a lifting that holds both translates holds the sausage.
    RunConfig cfg;
    double s = 1.0;
    auto f = flat_ellipsoid(mat1(2.0), 1.0, vec1(0.0));  // lifting is a box
    SymEllipsoid Ec(mat1(1.0), 0.9, vec1(0.0));
    CHECK(violation(f, SymEllipsoid(Ec.A, Ec.alpha, vec1(0.5)), s, cfg).contained);
    CHECK(violation(f, SymEllipsoid(Ec.A, Ec.alpha, vec1(-0.5)), s, cfg).contained);
    auto sg = sausage_ellipsoid(Ec, vec1(0.5), vec1(-0.5));
    CHECK(violation(f, sg, s, cfg).contained);

    // General position, d=2: rotate/center and check the volume rule.
    Rng rng(19);
    Mat A = rng.spd(2, 0.7, 1.5);
    SymEllipsoid E2(A, 1.2, Vec::Zero(2));
    Vec a1 = vec2(0.4, -0.2), a2 = vec2(-0.1, 0.3);
    auto sg2 = sausage_ellipsoid(E2, a1, a2);
    double delta = (A.llt().solve(a1 - a2) * 0.5).norm();
    CHECK(sg2.A.determinant() ==
          doctest::Approx((1.0 + delta) * A.determinant()).epsilon(1e-10));
    CHECK((sg2.a - 0.5 * (a1 + a2)).norm() < 1e-12);
}

TEST_CASE("gaussian interpolation") {
    GaussianPayload G1{Mat::Identity(1, 1), 1.0, Vec::Zero(1)};
    auto same = interpolate_gaussians(G1, G1, 0.4);
    CHECK((same.A - G1.A).norm() < 1e-14);
    CHECK(same.alpha == doctest::Approx(1.0));

    GaussianPayload G2{3.0 * Mat::Identity(1, 1), 1.0, Vec::Zero(1)};
    auto mid = interpolate_gaussians(G1, G2, 0.5);
    CHECK(mid.A(0, 0) == doctest::Approx(2.0));
    CHECK(gaussian_integral(mid) == doctest::Approx(2.0 * std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(gaussian_integral(mid) >= std::sqrt(3.0) * std::sqrt(M_PI) - 1e-12);

    // Below-f preservation: G1 <= f1, G2 <= f2 implies the interpolant is
    // below (b1 * f1) star (b2 * f2).
    Rng rng(23);
    auto f1 = pointwise_min({gaussian(mat1(1.2), 1.0, vec1(0.2)),
                             gaussian(mat1(1.8), 1.4, vec1(-0.3))});
    auto f2 = pointwise_min({gaussian(mat1(0.9), 0.8, vec1(0.0)),
                             gaussian(mat1(1.5), 1.1, vec1(0.4))});
    // Gaussians below: shrink one of the members.
    GaussianPayload B1{mat1(1.2), 0.5, vec1(0.2)};
    GaussianPayload B2{mat1(0.9), 0.4, vec1(0.0)};
    auto check_below = [&](const GaussianPayload& G, const LogConcaveFn& f) {
        auto gf = gaussian(G.A, G.alpha, G.a);
        for (int i = 0; i < 50; ++i) {
            Vec x = vec1(rng.uniform(-3.0, 3.0));
            REQUIRE(gf.eval(x) <= f.eval(x) * (1.0 + 1e-12));
        }
    };
    check_below(B1, f1);
    check_below(B2, f2);
    double b1 = 0.35;
    auto Gm = interpolate_gaussians(B1, B2, b1);
    auto gm = gaussian(Gm.A, Gm.alpha, Gm.a);
    auto f = asplund(epi_product(b1, f1), epi_product(1.0 - b1, f2));
    for (int i = 0; i < 200; ++i) {
        Vec x = vec1(rng.uniform(-4.0, 4.0));
        CHECK(gm.eval(x) <= f.eval(x) * (1.0 + 1e-9) + 1e-300);
    }
}

TEST_CASE("Minkowski determinant inequality") {
    Rng rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        int d = 1 + rep % 3;
        Mat A = rng.spd(d, 0.3, 3.0);
        Mat B = rng.spd(d, 0.3, 3.0);
        double lam = rng.uniform(0.05, 0.95);
        double lhs = std::pow((lam * A + (1.0 - lam) * B).determinant(), 1.0 / d);
        double rhs = lam * std::pow(A.determinant(), 1.0 / d) +
                     (1.0 - lam) * std::pow(B.determinant(), 1.0 / d);
        CHECK(lhs - rhs >= -1e-12);
    }
}

TEST_CASE("repeated interpolation ascends strictly for distinct shapes") {
    double s = 1.0;
    RunConfig cfg;
    auto f = ball_height_power(2, s);
    Mat A1 = Vec(vec2(0.9, 0.8)).asDiagonal();
    Mat A2 = Vec(vec2(0.8, 0.9)).asDiagonal();
    SymEllipsoid E1(A1, 0.5, Vec::Zero(2));
    SymEllipsoid E2(A2, 0.5, Vec::Zero(2));
    CHECK(violation(f, E1, s, cfg).contained);
    CHECK(violation(f, E2, s, cfg).contained);
    double v1 = s_volume(E1, s);
    CHECK(s_volume(E2, s) == doctest::Approx(v1).epsilon(1e-13));
    InterpolationSpec spec;
    spec.beta1 = 0.5;
    spec.s1 = spec.s2 = s;
    auto [Em, sm] = interpolate_ellipsoids(E1, E2, spec);
    (void)sm;
    CHECK(s_volume(Em, s) > v1);
    CHECK(violation(f, Em, s, cfg).contained);

    // Repeat over random equal-s-volume pairs: strict unless the shapes agree.
    Rng rng(47);
    for (int rep = 0; rep < 10; ++rep) {
        Mat B1 = rng.spd(2, 0.3, 0.9);
        Mat B2 = rng.spd(2, 0.3, 0.9);
        B2 *= std::sqrt(B1.determinant() / B2.determinant());  // match volumes
        if (spectral_norm(B2) >= 1.0) continue;
        SymEllipsoid F1(B1, 0.5, Vec::Zero(2));
        SymEllipsoid F2(B2, 0.5, Vec::Zero(2));
        auto [Fm, fs] = interpolate_ellipsoids(F1, F2, spec);
        (void)fs;
        double v = s_volume(F1, s);
        CHECK(s_volume(F2, s) == doctest::Approx(v).epsilon(1e-12));
        if ((B1 - B2).norm() > 1e-8) {
            CHECK(s_volume(Fm, s) > v);
        } else {
            CHECK(s_volume(Fm, s) == doctest::Approx(v).epsilon(1e-12));
        }
    }
    // Equal shapes: no strict increase.
    auto [Esame, ssame] = interpolate_ellipsoids(E1, E1, spec);
    (void)ssame;
    CHECK(s_volume(Esame, s) == doctest::Approx(v1).epsilon(1e-13));
}
