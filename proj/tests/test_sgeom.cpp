#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sjohn/sgeom.hpp"
#include "sjohn/optim.hpp"
#include "sjohn/quadrature.hpp"
#include "test_support.hpp"

using namespace sjohn;
using testsup::mat1;
using testsup::vec1;
using testsup::vec2;

TEST_CASE("kappa_s against quadrature oracle") {
    CHECK(kappa_s(1, 2.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(kappa_s(1, 1.0) == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
    CHECK(kappa_s(2, 0.0) == doctest::Approx(M_PI).epsilon(1e-12));
    for (int d = 1; d <= 3; ++d) {
        for (double s : {0.5, 1.0, 2.0, 5.0}) {
            CHECK(kappa_s(d, s) == doctest::Approx(testsup::kappa_oracle(d, s)).epsilon(1e-9));
        }
    }
    CHECK_THROWS(kappa_s(0, 1.0));
    CHECK_THROWS(kappa_s(1, -0.5));
}

TEST_CASE("kappa_s monotone and large-s limit") {
    for (int d = 1; d <= 3; ++d) {
        double prev = kappa_s(d, 0.0);
        for (int i = 1; i <= 50; ++i) {
            double s = 0.25 * i;
            double cur = kappa_s(d, s);
            CHECK(cur < prev);
            prev = cur;
        }
        double s = 1e4;
        double lim = kappa_s(d, s) * std::pow(s / 2.0, 0.5 * d);
        CHECK(std::abs(lim - std::pow(M_PI, 0.5 * d)) / std::pow(M_PI, 0.5 * d) < 0.02);
    }
    // No overflow up to s = 1e6.
    CHECK(std::isfinite(log_kappa_s(3, 1e6)));
}

TEST_CASE("s_volume") {
    for (int d = 1; d <= 3; ++d) {
        auto E = SymEllipsoid::unit_ball(d);
        for (double s : {0.5, 1.0, 3.0}) {
            CHECK(s_volume(E, s) == doctest::Approx(kappa_s(d, s)).epsilon(1e-13));
        }
    }
    // d=2, A=2I, alpha=3, s=1: kappa_1(2) * 3 * 4 = 8 pi, with kappa from quadrature.
    SymEllipsoid E(2.0 * Mat::Identity(2, 2), 3.0, Vec::Zero(2));
    double kappa1 = testsup::kappa_oracle(2, 1.0);
    CHECK(kappa1 == doctest::Approx(2.0 * M_PI / 3.0).epsilon(1e-10));
    CHECK(s_volume(E, 1.0) == doctest::Approx(8.0 * M_PI).epsilon(1e-9));

    // Linear equivariance: svol((B A + beta alpha)) = det B beta^s svol.
    Rng rng(3);
    for (int rep = 0; rep < 5; ++rep) {
        Mat B = rng.spd(2, 0.5, 2.0);
        double beta = rng.uniform(0.5, 2.0);
        double s = rng.uniform(0.5, 4.0);
        SymEllipsoid E1(Mat::Identity(2, 2), 1.3, vec2(0.1, -0.2));
        SymEllipsoid E2(B, beta * E1.alpha, E1.a);
        CHECK(s_volume(E2, s) ==
              doctest::Approx(B.determinant() * std::pow(beta, s) * s_volume(E1, s)).epsilon(1e-10));
    }
}

TEST_CASE("height function and s-marginal") {
    auto E = SymEllipsoid::unit_ball(2);
    CHECK(height_eval(E, Vec::Zero(2)) == doctest::Approx(1.0));
    CHECK(height_eval(E, vec2(1.0, 0.0)) == doctest::Approx(0.0));
    CHECK(height_eval(E, vec2(1.5, 0.0)) == 0.0);

    SymEllipsoid E2(2.0 * Mat::Identity(2, 2), 5.0, vec2(0.4, -0.3));
    CHECK(height_eval(E2, E2.a) == doctest::Approx(5.0));

    CHECK(s_marginal_density(SymEllipsoid::unit_ball(2), 3.0, Vec::Zero(2)) == doctest::Approx(1.0));
    Vec half = vec2(0.5, 0.0);
    CHECK(s_marginal_density(SymEllipsoid::unit_ball(2), 2.0, half) ==
          doctest::Approx(0.75).epsilon(1e-13));

    // Marginal integral identity against the closed form, d = 1 and 2.
    for (int d = 1; d <= 2; ++d) {
        Rng rng(17 + d);
        SymEllipsoid E3(rng.spd(d, 0.6, 1.6), rng.uniform(0.5, 1.5), rng.normal_vec(d, 0.3));
        for (double s : {1.0, 2.5}) {
            auto f = [&](const Vec& x) { return s_marginal_density(E3, s, x); };
            Vec lo = E3.a.array() - 1.05 * spectral_norm(E3.A);
            Vec hi = E3.a.array() + 1.05 * spectral_norm(E3.A);
            auto q = integrate_box(f, lo, hi, 1e-8);
            CHECK(q.value == doctest::Approx(s_volume(E3, s)).epsilon(1e-6));
        }
    }
}

TEST_CASE("violation oracle") {
    RunConfig cfg;
    for (int d = 1; d <= 2; ++d) {
        for (double s : {1.0, 2.0}) {
            auto f = ball_height_power(d, s);
            auto rep = violation(f, SymEllipsoid::unit_ball(d), s, cfg);
            CHECK(std::abs(rep.max_violation) <= 1e-9);
            CHECK(rep.contained);

            SymEllipsoid big(1.1 * Mat::Identity(d, d), 1.0, Vec::Zero(d));
            auto rep2 = violation(f, big, s, cfg);
            CHECK(!rep2.contained);
            CHECK(rep2.max_violation > 0.0);
        }
    }
    // Claim: c(s) = sqrt(s) keeps the ellipsoid inside the lifting of the
    // standard Gaussian e^{-|x|^2/2}.
    for (int d = 1; d <= 2; ++d) {
        auto g = gaussian(std::sqrt(2.0) * Mat::Identity(d, d), 1.0, Vec::Zero(d));
        for (double s : {1.0, 4.0, 25.0}) {
            SymEllipsoid E(std::sqrt(s) * Mat::Identity(d, d), 1.0, Vec::Zero(d));
            auto rep = violation(g, E, s, cfg);
            CHECK(rep.contained);
        }
    }
    // A flat function with an exact support boundary: sticking out is caught.
    auto flat = flat_ellipsoid(Mat::Identity(2, 2), 1.0, Vec::Zero(2));
    SymEllipsoid out(Mat::Identity(2, 2), 1.0, vec2(0.05, 0.0));
    auto rep3 = violation(flat, out, 1.0, cfg);
    CHECK(!rep3.contained);
    CHECK(rep3.max_violation == kPosInf);
    CHECK(flat.eval(rep3.witness) == 0.0);
}

TEST_CASE("scaling equivariance of the violation pipeline") {
    RunConfig cfg;
    Rng rng(29);
    auto f = gaussian(rng.spd(2, 0.8, 1.6), 1.0, vec2(0.1, 0.0));
    SymEllipsoid E(0.8 * Mat::Identity(2, 2), 0.7, vec2(0.1, 0.05));
    for (double gamma : {7.0, 0.2}) {
        for (double s : {1.0, 3.0}) {
            auto fg = scale(gamma, f);
            SymEllipsoid Eg(E.A, std::pow(gamma, 1.0 / s) * E.alpha, E.a);
            auto r1 = violation(f, E, s, cfg);
            auto r2 = violation(fg, Eg, s, cfg);
            CHECK(r2.max_violation == doctest::Approx(r1.max_violation).epsilon(1e-8));
        }
    }
}

TEST_CASE("tangent tail bound") {
    CHECK(tangent_tail_bound(vec1(0.0), 3.0, vec1(5.0)) == doctest::Approx(1.0));
    CHECK(tangent_tail_bound(vec1(0.6), 1.0, vec1(0.6)) == doctest::Approx(0.8).epsilon(1e-13));
    Vec u_bad = vec1(1.0);
    CHECK_THROWS(tangent_tail_bound(u_bad, 1.0, vec1(0.0)));

    // The bound dominates f at random points when u is a contact point of the
    // lifting of f = (h_B)^s (equality holds everywhere on the ball).
    Rng rng(41);
    for (int d = 1; d <= 2; ++d) {
        double s = 2.0;
        auto f = ball_height_power(d, s);
        Vec u = Vec::Zero(d);
        u(0) = 0.5;
        for (int i = 0; i < 100; ++i) {
            Vec x = rng.normal_vec(d, 1.0);
            CHECK(tangent_tail_bound(u, s, x) >= f.eval(x) - 1e-12);
        }
    }
}

TEST_CASE("integrate") {
    RunConfig cfg;
    // Gaussian closed form alpha pi^{d/2} det A.
    Rng rng(59);
    for (int d = 1; d <= 2; ++d) {
        Mat A = rng.spd(d, 0.6, 1.8);
        double alpha = rng.uniform(0.5, 2.0);
        Vec a = rng.normal_vec(d, 0.4);
        auto g = gaussian(A, alpha, a);
        double expected = alpha * std::pow(M_PI, 0.5 * d) * A.determinant();
        CHECK(integrate(g, cfg) == doctest::Approx(expected).epsilon(2e-6));
    }
    {
        Mat A = rng.spd(3, 0.7, 1.4);
        auto g = gaussian(A, 1.0, Vec::Zero(3));
        double expected = std::pow(M_PI, 1.5) * A.determinant();
        CHECK(integrate(g, cfg) == doctest::Approx(expected).epsilon(5e-3));
    }
    // Indicator of the cube; tight tolerance drives the jump refinement.
    RunConfig tight = cfg;
    tight.rel_tol = 1e-10;
    for (int d = 1; d <= 2; ++d) {
        auto cube = testsup::cube_indicator(d, 1.0);
        CHECK(integrate(cube, tight) == doctest::Approx(std::pow(2.0, d)).epsilon(1e-9));
    }
    // e^{-|x|} integrates to 2.
    CHECK(integrate(testsup::exp_abs_1d(), tight) == doctest::Approx(2.0).epsilon(1e-9));

    // Divergence detection: constant function has no finite integral.
    auto one = exp_polyhedral({}, {}, 1);
    CHECK_THROWS(integrate(one, cfg));
}
