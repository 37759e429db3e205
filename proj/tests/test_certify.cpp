#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sjohn/certify.hpp"
#include "sjohn/optim.hpp"
#include "sjohn/solver.hpp"
#include "test_support.hpp"

using namespace sjohn;
using testsup::mat1;
using testsup::vec1;
using testsup::vec2;

namespace {

// The symmetric axis certificate: 4d points (+-r e_j, +-w) with equal weights
// (d+s)/(4d), r^2 = d/(d+s).
std::pair<std::vector<ContactPoint>, std::vector<double>> symmetric_axis_certificate(int d,
                                                                                     double s) {
    double r = std::sqrt(static_cast<double>(d) / (d + s));
    double w = std::sqrt(s / (d + s));
    std::vector<ContactPoint> pts;
    std::vector<double> wt;
    for (int j = 0; j < d; ++j) {
        for (double su : {1.0, -1.0}) {
            for (double sw : {1.0, -1.0}) {
                Vec u = Vec::Zero(d);
                u(j) = su * r;
                pts.push_back({u, sw * w});
                wt.push_back((d + s) / (4.0 * d));
            }
        }
    }
    return {pts, wt};
}

void check_moment_identities(const ContactCertificate& cert, int d, double s, double tol) {
    Mat S = Mat::Zero(d + 1, d + 1);
    Vec sum_u = Vec::Zero(d);
    double sum_c = 0.0;
    for (size_t i = 0; i < cert.contacts.size(); ++i) {
        Vec ub = cert.contacts[i].u_bar();
        S += cert.weights[i] * (ub * ub.transpose());
        sum_u += cert.weights[i] * cert.contacts[i].u;
        sum_c += cert.weights[i];
    }
    Mat target = Mat::Identity(d + 1, d + 1);
    target(d, d) = s;
    CHECK((S - target).norm() <= tol);
    CHECK(sum_u.norm() <= tol);
    CHECK(std::abs(sum_c - (d + s)) <= tol);
}

}  // namespace

TEST_CASE("symmetric axis weights solve the moment system exactly") {
    for (int d : {1, 2, 3}) {
        for (double s : {1.0, 2.0, 7.0}) {
            auto [pts, wt] = symmetric_axis_certificate(d, s);
            auto out = solve_weights(pts, s, RunConfig{});
            REQUIRE(out.certificate.has_value());
            CHECK(out.certificate->residual <= 1e-12);
            check_moment_identities(*out.certificate, d, s, 1e-10);
            // Direct arithmetic on the prescribed weights.
            Mat S = Mat::Zero(d + 1, d + 1);
            for (size_t i = 0; i < pts.size(); ++i) {
                Vec ub = pts[i].u_bar();
                S += wt[i] * (ub * ub.transpose());
            }
            Mat target = Mat::Identity(d + 1, d + 1);
            target(d, d) = s;
            CHECK((S - target).norm() <= 1e-12);
        }
    }
}

TEST_CASE("missing reflections make the system infeasible") {
    // All contacts share the same positive w with w^2/r^2 mismatched against s.
    int d = 1;
    double r = std::sqrt(0.5), w = std::sqrt(0.5), s = 3.0;
    std::vector<ContactPoint> pts = {{vec1(r), w}, {vec1(-r), w}};
    auto out = solve_weights(pts, s, RunConfig{});
    CHECK(!out.certificate.has_value());
    CHECK(out.best_residual > 1e-3);
    // Dual direction separates: positive on the target, nonpositive on dyads.
    Mat Sbar = Mat::Identity(d + 1, d + 1);
    Sbar(d, d) = s;
    double on_target = (out.dual_H * Mat::Identity(d, d)).trace() + out.dual_gamma * s;
    CHECK(on_target > 0.0);
    for (const auto& c : pts) {
        Vec ub = c.u_bar();
        Mat Hbar = Mat::Zero(d + 1, d + 1);
        Hbar.topLeftCorner(d, d) = out.dual_H;
        Hbar(d, d) = out.dual_gamma;
        double val = (Hbar * (ub * ub.transpose())).trace() + out.dual_h.dot(c.u);
        CHECK(val <= 1e-9);
    }
}

TEST_CASE("trace identity on feasible outputs") {
    Rng rng(97);
    for (int rep = 0; rep < 6; ++rep) {
        int d = 1 + rep % 2;
        double s = rng.uniform(0.5, 5.0);
        auto [pts, wt] = symmetric_axis_certificate(d, s);
        (void)wt;
        // Add a few redundant random sphere contacts; the solver may use them.
        for (int extra = 0; extra < 3; ++extra) {
            Vec u = rng.normal_vec(d);
            u *= rng.uniform(0.1, 0.9) / u.norm();
            double w = std::sqrt(1.0 - u.squaredNorm());
            pts.push_back({u, w});
            pts.push_back({u, -w});
        }
        auto out = solve_weights(pts, s, RunConfig{});
        REQUIRE(out.certificate.has_value());
        double sum_c = 0.0;
        for (double c : out.certificate->weights) sum_c += c;
        CHECK(sum_c == doctest::Approx(d + s).epsilon(1e-8));
        // Count bound after pruning.
        size_t k = out.certificate->contacts.size();
        CHECK(k >= static_cast<size_t>(d + 1));
        CHECK(k <= static_cast<size_t>((d + 1) * (d + 2) / 2 + d + 1));
    }
}

TEST_CASE("normalize_to_ball") {
    RunConfig cfg;
    double s = 2.0;
    auto f = ball_height_power(2, s);
    auto [g, map] = normalize_to_ball(f, SymEllipsoid::unit_ball(2), s, cfg);
    CHECK((map.A - Mat::Identity(2, 2)).norm() < 1e-14);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        Vec x = 0.8 * rng.normal_vec(2, 0.4);
        CHECK(g.eval(x) == doctest::Approx(f.eval(x)).epsilon(1e-12));
    }
    // Scaled ball power: gamma f with candidate (I, gamma^{1/s}) normalizes
    // back to the plain ball power.
    double gamma = 7.0;
    auto fg = scale(gamma, f);
    SymEllipsoid Eg(Mat::Identity(2, 2), std::pow(gamma, 1.0 / s), Vec::Zero(2));
    auto [g2, map2] = normalize_to_ball(fg, Eg, s, cfg);
    (void)map2;
    for (int i = 0; i < 10; ++i) {
        Vec x = 0.8 * rng.normal_vec(2, 0.4);
        CHECK(g2.eval(x) == doctest::Approx(f.eval(x)).epsilon(1e-10));
    }
    // Infeasible candidate is an error.
    SymEllipsoid bad(1.5 * Mat::Identity(2, 2), 1.0, Vec::Zero(2));
    CHECK_THROWS(normalize_to_ball(f, bad, s, cfg));
}

TEST_CASE("find_contacts on the ball power returns the axis family") {
    RunConfig cfg;
    for (int d = 1; d <= 2; ++d) {
        double s = 2.0;
        auto g = ball_height_power(d, s);
        auto contacts = find_contacts(g, s, cfg);
        REQUIRE(contacts.size() >= static_cast<size_t>(4 * d));
        double r = std::sqrt(static_cast<double>(d) / (d + s));
        // Every axis point is present.
        for (int j = 0; j < d; ++j) {
            for (double sign : {1.0, -1.0}) {
                bool found = false;
                for (const auto& c : contacts) {
                    Vec u = Vec::Zero(d);
                    u(j) = sign * r;
                    if ((c.u - u).norm() < 1e-6 && c.w > 0) found = true;
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("find_contacts on a constructed tangent envelope") {
    // g built as the minimum of tangent bounds at the axis contacts touches
    // the ball exactly at those contacts.
    RunConfig cfg;
    int d = 1;
    double s = 1.0;
    double r = std::sqrt(0.5), w = std::sqrt(0.5);
    // Tangent bound at u = +-r: w^s exp(-(s/w^2) u (x - u)) as exp-polyhedral.
    std::vector<LinearPiece> pieces;
    pieces.push_back({vec1(-(s / (w * w)) * r), s * std::log(w) + (s / (w * w)) * r * r});
    pieces.push_back({vec1((s / (w * w)) * r), s * std::log(w) + (s / (w * w)) * r * r});
    auto g = exp_polyhedral(pieces, {}, 1);
    // Contacts of B^2 inside slift g: exactly x = +-r (interior), value 0.
    auto contacts = find_contacts(g, s, cfg);
    std::vector<ContactPoint> interior;
    for (auto& c : contacts)
        if (c.w != 0.0) interior.push_back(c);
    REQUIRE(interior.size() == 4);  // two locations, both reflections
    for (const auto& c : interior) CHECK(std::abs(std::abs(c.u(0)) - r) < 1e-6);
    // And the whole ball is feasible for g.
    CHECK(violation(g, SymEllipsoid::unit_ball(1), s, cfg).contained);
}

TEST_CASE("verify_optimality") {
    RunConfig cfg;
    double s = 1.0;
    auto f = ball_height_power(2, s);
    auto res = verify_optimality(f, SymEllipsoid::unit_ball(2), s, cfg);
    CHECK(res.verdict == OptimalityVerdict::certified_global);
    REQUIRE(res.certificate.has_value());
    check_moment_identities(*res.certificate, 2, s, 1e-8);

    // Strictly interior candidate: no contacts, suspect.
    SymEllipsoid small(0.9 * Mat::Identity(2, 2), 0.9, Vec::Zero(2));
    auto res2 = verify_optimality(f, small, s, cfg);
    CHECK(res2.verdict == OptimalityVerdict::locally_suspect);

    // Solver output on a nontrivial function is certified.
    auto fe = testsup::exp_abs_1d();
    auto r = solve_john(fe, 1.0, cfg);
    REQUIRE(r.status == SolveStatus::converged);
    auto res3 = verify_optimality(fe, r.ellipsoid, 1.0, cfg);
    CHECK(res3.verdict == OptimalityVerdict::certified_global);

    // Certificate round trip: mapped contacts touch the original lifting.
    if (res3.certificate) {
        for (size_t i = 0; i < res3.certificate->contacts.size(); ++i) {
            const auto& c = res3.certificate->contacts[i];
            Vec x = res3.map.to_original(c.u);
            if (c.w != 0.0) {
                double lhs = s * log_height_eval(r.ellipsoid, x);
                double rhs = fe.log_eval(x);
                CHECK(std::abs(lhs - rhs) < 1e-4);
            }
        }
    }
}

TEST_CASE("soundness: certified value dominates random feasible perturbations") {
    RunConfig cfg;
    Rng rng(11);
    double s = 1.0;
    auto f = gaussian(mat1(1.2), 1.0, vec1(0.1));
    auto r = solve_john(f, s, cfg);
    REQUIRE(r.status == SolveStatus::converged);
    auto res = verify_optimality(f, r.ellipsoid, s, cfg);
    CHECK(res.verdict == OptimalityVerdict::certified_global);
    int tested = 0;
    for (int rep = 0; rep < 200 && tested < 50; ++rep) {
        SymEllipsoid E(mat1(r.ellipsoid.A(0, 0) * rng.uniform(0.7, 1.05)),
                       r.ellipsoid.alpha * rng.uniform(0.9, 1.02),
                       r.ellipsoid.a + 0.1 * rng.normal_vec(1));
        if (!violation(f, E, s, cfg).contained) continue;
        ++tested;
        CHECK(s_volume(E, s) <= r.s_volume + 1e-8);
    }
    CHECK(tested == 50);
}

TEST_CASE("completeness against the 1-D brute force optimum") {
    RunConfig cfg;
    double s = 1.0;
    auto f = flat_ellipsoid(mat1(1.3), 1.0, vec1(0.2));
    auto r = solve_john(f, s, cfg);
    REQUIRE(r.status == SolveStatus::converged);
    auto bf = brute_force_1d(f, s, 48);
    CHECK(std::abs(s_volume(bf, s) - r.s_volume) / r.s_volume < 0.01);
    auto res = verify_optimality(f, r.ellipsoid, s, cfg);
    CHECK(res.verdict == OptimalityVerdict::certified_global);
}

TEST_CASE("functional condition check") {
    RunConfig cfg;
    int d = 2;
    double s = 2.0;
    auto g = ball_height_power(d, s);
    auto [pts, wt] = symmetric_axis_certificate(d, s);
    (void)wt;
    auto out = solve_weights(pts, s, cfg);
    REQUIRE(out.certificate.has_value());
    CHECK(functional_condition_check(*out.certificate, g, s, cfg));

    // Perturbing one weight breaks it.
    auto broken = *out.certificate;
    broken.weights[0] += 1e-2;
    CHECK(!functional_condition_check(broken, g, s, cfg));

    // Agreement between the lifted acceptance and the functional form on a
    // solved instance.
    auto fe = testsup::exp_abs_1d();
    auto r = solve_john(fe, 1.0, cfg);
    REQUIRE(r.status == SolveStatus::converged);
    auto res = verify_optimality(fe, r.ellipsoid, 1.0, cfg);
    REQUIRE(res.verdict == OptimalityVerdict::certified_global);
    auto [gn, map] = normalize_to_ball(fe, r.ellipsoid, 1.0, cfg);
    (void)map;
    CHECK(functional_condition_check(*res.certificate, gn, 1.0, cfg));
}
