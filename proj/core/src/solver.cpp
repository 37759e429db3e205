#include "sjohn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sjohn/interp.hpp"
#include "sjohn/optim.hpp"

namespace sjohn {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iters: return "max_iters";
        case SolveStatus::infeasible_tolerance: return "infeasible_tolerance";
    }
    return "unknown";
}

namespace {

// theta = [log diag L, strict lower triangle of L, center a], A = L L^T.
struct Packer {
    int d;
    int size() const { return d + d * (d - 1) / 2 + d; }
    Vec pack(const Mat& A, const Vec& a) const {
        Eigen::LLT<Mat> llt(A);
        Mat L = llt.matrixL();
        Vec th(size());
        int k = 0;
        for (int i = 0; i < d; ++i) th(k++) = std::log(L(i, i));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) th(k++) = L(i, j);
        for (int i = 0; i < d; ++i) th(k++) = a(i);
        return th;
    }
    bool unpack(const Vec& th, Mat* A, Vec* a) const {
        Mat L = Mat::Zero(d, d);
        int k = 0;
        for (int i = 0; i < d; ++i) {
            if (std::abs(th(k)) > 500.0) return false;
            L(i, i) = std::exp(th(k++));
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) L(i, j) = th(k++);
        a->resize(d);
        for (int i = 0; i < d; ++i) (*a)(i) = th(k++);
        if (!L.allFinite()) return false;
        *A = L * L.transpose();
        return true;
    }
    double log_det(const Vec& th) const {
        double ld = 0.0;
        for (int i = 0; i < d; ++i) ld += th(i);
        return 2.0 * ld;
    }
};

struct InnerEffort {
    int oracle_grid = 11;      // violation seed density during the barrier stages
    int iters_early = 120;
    int iters_late = 220;
    double mu_min = 3e-7;
};

// Scale A outward to the containment boundary: largest t in [1, t_max] with
// max violation of (tA, alpha, a) below half the tolerance.
SymEllipsoid expand_to_touch(const LogConcaveFn& f, SymEllipsoid E, double s,
                             const RunConfig& cfg) {
    auto feasible = [&](double t) {
        SymEllipsoid Et(t * E.A, E.alpha, E.a);
        auto rep = violation(f, Et, s, cfg);
        return rep.max_violation <= 0.5 * cfg.tol;
    };
    if (!feasible(1.0)) return E;
    double lo = 1.0, hi = 1.0;
    double step = 0.02;
    while (step > 1e-14 || hi == 1.0) {
        if (feasible(lo + step)) {
            lo += step;
            step *= 2.0;
        } else {
            hi = lo + step;
            break;
        }
        if (lo > 8.0) { hi = lo; break; }
    }
    if (hi > lo) {
        for (int it = 0; it < 60 && (hi - lo) > 1e-14 * lo; ++it) {
            double mid = 0.5 * (lo + hi);
            if (feasible(mid)) lo = mid;
            else hi = mid;
        }
    }
    E.A *= lo;
    return E;
}

// Shrink A until the full-precision oracle accepts containment.
bool shrink_to_feasible(const LogConcaveFn& f, SymEllipsoid* E, double s,
                        const RunConfig& cfg) {
    for (int it = 0; it < 240; ++it) {
        auto rep = violation(f, *E, s, cfg);
        if (rep.max_violation <= cfg.tol * 0.5) return true;
        double shrink = std::isfinite(rep.max_violation)
                            ? std::max(1e-7, std::min(0.2, rep.max_violation / std::max(s, 1.0)))
                            : 0.2;
        E->A *= (1.0 - shrink);
    }
    return false;
}

std::optional<SymEllipsoid> fixed_height_impl(const LogConcaveFn& f, double s, double alpha,
                                              const std::optional<SymEllipsoid>& warm_start,
                                              const RunConfig& cfg, const InnerEffort& effort) {
    const int d = f.dim();
    const auto& sup = f.sup();
    const double logF = sup.log_value;
    const double log_alpha = std::log(alpha);
    if (logF == kNegInf) return std::nullopt;
    if (s * log_alpha > logF + 1e-12) return std::nullopt;

    Packer pk{d};

    // Outer bounds in the spirit of the compactness lemma: the center must lie
    // in [f >= alpha^s], and the domain inside a superlevel set determined by
    // the height profile of the ellipse.
    BallBound a_ball = f.superlevel_ball(std::min(s * log_alpha, logF - 1e-9));
    if (!std::isfinite(a_ball.radius)) a_ball = {sup.argmax, 1e6};
    BallBound dom_ball = f.superlevel_ball(s * (log_alpha + std::log(0.0999)) - 1.0);
    double cap_norm = std::isfinite(dom_ball.radius)
                          ? 1.05 * (dom_ball.radius + (a_ball.center - dom_ball.center).norm() +
                                    a_ball.radius)
                          : 1e7;

    RunConfig cfg_cheap = cfg;
    cfg_cheap.grid_per_axis = effort.oracle_grid;

    std::deque<Vec> witness_hints;  // recent oracle witnesses, in x-space
    auto oracle = [&](const SymEllipsoid& E, const RunConfig& c) {
        std::vector<Vec> hints;
        Mat Ainv = E.A.inverse();
        for (const auto& w : witness_hints) hints.push_back(Ainv * (w - E.a));
        auto rep = violation(f, E, s, c, hints);
        if (std::isfinite(rep.max_violation) || rep.max_violation == kPosInf) {
            if (rep.witness.size() == d) {
                witness_hints.push_front(rep.witness);
                if (witness_hints.size() > 3) witness_hints.pop_back();
            }
        }
        return rep;
    };

    // Initial feasible candidates.
    std::optional<Vec> best_theta;
    double best_logdet = kNegInf;
    auto consider_start = [&](SymEllipsoid E) {
        if (!shrink_to_feasible(f, &E, s, cfg_cheap)) return;
        Vec th = pk.pack(E.A, E.a);
        double ld = pk.log_det(th);
        if (ld > best_logdet) {
            best_logdet = ld;
            best_theta = th;
        }
    };
    if (warm_start) {
        SymEllipsoid E = *warm_start;
        E.alpha = alpha;
        consider_start(E);
    }
    {
        // Cold start: tiny ball at the argmax, then bisect the radius upward.
        Vec a0 = sup.argmax;
        double r_hi = std::max(cap_norm, 1e-6);
        double r = r_hi;
        bool found = false;
        for (int it = 0; it < 80; ++it) {
            SymEllipsoid E(r * Mat::Identity(d, d), alpha, a0);
            auto rep = oracle(E, cfg_cheap);
            if (rep.max_violation <= 0.25 * cfg.tol) {
                found = true;
                break;
            }
            r *= 0.5;
        }
        if (found) {
            // Grow back toward the largest feasible radius.
            double lo = r, hi = std::min(2.0 * r, r_hi);
            while (hi < r_hi) {
                SymEllipsoid E(hi * Mat::Identity(d, d), alpha, a0);
                if (oracle(E, cfg_cheap).max_violation > 0.25 * cfg.tol) break;
                lo = hi;
                hi = std::min(2.0 * hi, r_hi);
            }
            for (int it = 0; it < 40 && (hi - lo) > 1e-6 * hi; ++it) {
                double mid = 0.5 * (lo + hi);
                SymEllipsoid E(mid * Mat::Identity(d, d), alpha, a0);
                if (oracle(E, cfg_cheap).max_violation <= 0.25 * cfg.tol) lo = mid;
                else hi = mid;
            }
            consider_start(SymEllipsoid(lo * Mat::Identity(d, d), alpha, a0));
        }
    }
    if (!best_theta) return std::nullopt;

    // Barrier stages.
    auto make_objective = [&](double mu) {
        return [&, mu](const Vec& th) -> double {
            Mat A;
            Vec a;
            if (!pk.unpack(th, &A, &a)) return kNegInf;
            if (spectral_norm(A) > cap_norm) return kNegInf;
            if ((a - a_ball.center).norm() > a_ball.radius + 1e-9 * (1.0 + a_ball.radius))
                return kNegInf;
            SymEllipsoid E(A, alpha, a);
            auto rep = oracle(E, cfg_cheap);
            double slack = 0.5 * cfg.tol - rep.max_violation;
            if (!(slack > 0.0)) return kNegInf;
            return pk.log_det(th) + mu * std::log(slack);
        };
    };

    Vec theta = *best_theta;
    double mu = 0.3;
    int stage = 0;
    while (mu > effort.mu_min) {
        auto obj = make_objective(mu);
        NelderMeadOptions opt;
        opt.max_iters = stage < 2 ? effort.iters_early : effort.iters_late;
        opt.init_step = stage == 0 ? 0.25 : std::max(0.01, std::sqrt(mu) * 0.3);
        opt.xtol = 1e-10;
        opt.restarts = 1;
        auto r = nelder_mead_max(obj, theta, opt);
        if (std::isfinite(r.value)) theta = r.x;
        if (stage >= 2) {
            auto p = coordinate_polish(obj, theta, std::max(0.005, std::sqrt(mu) * 0.1), 1e-12, 1);
            if (std::isfinite(p.value)) theta = p.x;
        }
        mu *= 0.12;
        ++stage;
    }

    Mat A;
    Vec a;
    if (!pk.unpack(theta, &A, &a)) return std::nullopt;
    SymEllipsoid E(A, alpha, a);
    if (!shrink_to_feasible(f, &E, s, cfg)) return std::nullopt;
    E = expand_to_touch(f, E, s, cfg);

    if (warm_start) {
        // A warm start must never make the answer worse than itself.
        SymEllipsoid W = *warm_start;
        W.alpha = alpha;
        if (shrink_to_feasible(f, &W, s, cfg)) {
            W = expand_to_touch(f, W, s, cfg);
            if (W.A.determinant() > E.A.determinant()) E = W;
        }
    }
    return E;
}

}  // namespace

std::optional<SymEllipsoid> solve_fixed_height(const LogConcaveFn& f, double s, double alpha,
                                               const std::optional<SymEllipsoid>& warm_start,
                                               const RunConfig& cfg) {
    cfg.validate();
    if (!(s > 0)) throw std::invalid_argument("solve_fixed_height: s must be positive");
    if (!(alpha > 0)) throw std::invalid_argument("solve_fixed_height: alpha must be positive");
    InnerEffort effort;
    effort.oracle_grid = std::max(11, cfg.grid_per_axis / 2);
    effort.iters_late = 320;
    effort.mu_min = 1e-7;
    return fixed_height_impl(f, s, alpha, warm_start, cfg, effort);
}

JohnResult solve_john(const LogConcaveFn& f, double s, const RunConfig& cfg,
                      const std::optional<SymEllipsoid>& warm_start) {
    cfg.validate();
    if (!(s > 0)) throw std::invalid_argument("solve_john: s must be positive");
    const int d = f.dim();
    JohnResult result;
    result.s = s;
    const double logF = f.sup().log_value;
    if (logF == kNegInf) throw std::domain_error("solve_john: degenerate function (sup = 0)");

    const double t_hi = logF / s;
    const double t_lo = t_hi - (d + 1.5) / s;

    InnerEffort scan_effort;   // cheaper while scanning heights
    scan_effort.oracle_grid = 11;
    scan_effort.iters_early = 100;
    scan_effort.iters_late = 160;
    scan_effort.mu_min = 1e-5;

    InnerEffort final_effort;
    final_effort.oracle_grid = std::max(13, cfg.grid_per_axis / 2);
    final_effort.iters_early = 160;
    final_effort.iters_late = 400;
    final_effort.mu_min = 1e-7;

    struct Sol {
        double t;
        SymEllipsoid E;
        double objective;  // log det + s t  (= log svol - log kappa)
    };
    std::vector<Sol> cache;
    int iter_count = 0;
    double incumbent_obj = kNegInf;

    auto push_trace = [&](const SymEllipsoid& E, double obj) {
        if (obj > incumbent_obj) {
            incumbent_obj = obj;
            auto rep = violation(f, E, s, cfg);
            result.ascent_trace.push_back({iter_count, s_volume(E, s), rep.max_violation});
        }
    };

    auto value = [&](double t, const InnerEffort& effort) -> double {
        ++iter_count;
        std::optional<SymEllipsoid> warm;
        double best_dist = kPosInf;
        for (const auto& c : cache) {
            double dist = std::abs(c.t - t);
            if (dist < best_dist) {
                best_dist = dist;
                warm = c.E;
            }
        }
        if (!warm && warm_start) warm = *warm_start;
        auto E = fixed_height_impl(f, s, std::exp(t), warm, cfg, effort);
        if (!E) return kNegInf;
        Eigen::LLT<Mat> llt(E->A);
        double ld = 0.0;
        for (int i = 0; i < d; ++i) ld += std::log(llt.matrixL()(i, i));
        double obj = 2.0 * ld + s * t;
        cache.push_back({t, *E, obj});
        push_trace(*E, obj);
        return obj;
    };

    // Coarse scan, including both endpoints (flat functions peak at t_hi).
    const int n_scan = 7;
    int best_i = -1;
    double best_v = kNegInf;
    std::vector<double> ts(n_scan), vs(n_scan);
    for (int i = 0; i < n_scan; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / (n_scan - 1);
        ts[i] = t;
        vs[i] = value(t, scan_effort);
        if (vs[i] > best_v) {
            best_v = vs[i];
            best_i = i;
        }
    }
    if (best_i < 0 || best_v == kNegInf) {
        result.status = SolveStatus::infeasible_tolerance;
        result.ellipsoid = SymEllipsoid::unit_ball(d);
        result.s_volume = 0.0;
        return result;
    }
    double lo = ts[std::max(0, best_i - 1)];
    double hi = ts[std::min(n_scan - 1, best_i + 1)];
    double t_star = golden_max([&](double t) { return value(t, scan_effort); }, lo, hi,
                               std::max(1e-6, 1e-9 / s), 60);
    if (vs[n_scan - 1] >= best_v && best_i == n_scan - 1) t_star = t_hi;

    // Strong solve at the chosen height.
    double best_obj = kNegInf;
    SymEllipsoid best_E = SymEllipsoid::unit_ball(d);
    for (const auto& c : cache) {
        if (c.objective > best_obj) {
            best_obj = c.objective;
            best_E = c.E;
        }
    }
    ++iter_count;
    auto E_final = fixed_height_impl(f, s, std::exp(t_star), best_E, cfg, final_effort);
    if (E_final) {
        Eigen::LLT<Mat> llt(E_final->A);
        double ld = 0.0;
        for (int i = 0; i < d; ++i) ld += std::log(llt.matrixL()(i, i));
        double obj = 2.0 * ld + s * std::log(E_final->alpha);
        if (obj > best_obj) {
            best_obj = obj;
            best_E = *E_final;
            push_trace(best_E, obj);
        }
    }

    // Interpolation polish between recent incumbents (monotone ascent).
    std::sort(cache.begin(), cache.end(),
              [](const Sol& a, const Sol& b) { return a.objective > b.objective; });
    for (size_t k = 1; k < cache.size() && k < 4; ++k) {
        InterpolationSpec spec;
        spec.beta1 = 0.5;
        spec.s1 = spec.s2 = s;
        auto [E_mid, s_mid] = interpolate_ellipsoids(best_E, cache[k].E, spec);
        (void)s_mid;
        ++iter_count;
        auto rep = violation(f, E_mid, s, cfg);
        if (rep.max_violation <= cfg.tol) {
            double obj = log_s_volume(E_mid, s) - log_kappa_s(d, s);
            if (obj > best_obj) {
                best_obj = obj;
                best_E = E_mid;
                push_trace(best_E, obj);
                E_mid = expand_to_touch(f, E_mid, s, cfg);
                double obj2 = log_s_volume(E_mid, s) - log_kappa_s(d, s);
                if (obj2 > best_obj) {
                    best_obj = obj2;
                    best_E = E_mid;
                }
            }
        }
    }

    auto final_rep = violation(f, best_E, s, cfg);
    if (final_rep.max_violation > cfg.tol) {
        if (!shrink_to_feasible(f, &best_E, s, cfg)) {
            result.status = SolveStatus::max_iters;
            result.ellipsoid = best_E;
            result.s_volume = s_volume(best_E, s);
            return result;
        }
        final_rep = violation(f, best_E, s, cfg);
    }
    result.ellipsoid = best_E;
    result.s_volume = s_volume(best_E, s);
    result.status = SolveStatus::converged;
    result.ascent_trace.push_back({iter_count + 1, result.s_volume, final_rep.max_violation});
    return result;
}

SymEllipsoid brute_force_1d(const LogConcaveFn& f, double s, int grid_resolution) {
    if (f.dim() != 1) throw std::invalid_argument("brute_force_1d: d must be 1");
    if (!(s > 0)) throw std::invalid_argument("brute_force_1d: s must be positive");
    const auto& sup = f.sup();
    const double logF = sup.log_value;
    if (logF == kNegInf) throw std::domain_error("brute_force_1d: degenerate function");

    // Containment on a dense 1-D grid (independent of the violation oracle).
    auto contained = [&](double A, double alpha, double a) {
        const int n_check = 401;
        double log_alpha = std::log(alpha);
        for (int i = 0; i < n_check; ++i) {
            double u = -1.0 + 2.0 * i / (n_check - 1);
            double q = u * u;
            if (q >= 1.0) continue;
            Vec x(1);
            x(0) = a + A * u;
            double lf = f.node().log_eval(x);
            double lh = s * (log_alpha + 0.5 * std::log1p(-q));
            if (lf == kNegInf) return false;
            if (lh > lf + 1e-9) return false;
        }
        return true;
    };

    BallBound a_ball = f.superlevel_ball(logF - 1.3);
    double a_lo = a_ball.center(0) - a_ball.radius, a_hi = a_ball.center(0) + a_ball.radius;
    BallBound dom_ball = f.superlevel_ball(logF - 2.0 - 3.2 * s);
    double A_hi = std::isfinite(dom_ball.radius)
                      ? 1.1 * (dom_ball.radius + std::abs(dom_ball.center(0) - a_ball.center(0)) +
                               a_ball.radius)
                      : 1e4;
    double t_hi = logF / s, t_lo = t_hi - 2.5 / s;

    double best_val = kNegInf;
    double bA = 0.1 * A_hi, bt = t_hi, ba = sup.argmax(0);
    const int n = std::max(8, grid_resolution);
    double wA = A_hi, wt = t_hi - t_lo, wa = a_hi - a_lo;
    double cA = 0.5 * A_hi, ct = 0.5 * (t_lo + t_hi), ca = 0.5 * (a_lo + a_hi);

    for (int refine = 0; refine < 3; ++refine) {
        double A0 = std::max(1e-12, cA - 0.5 * wA), A1 = cA + 0.5 * wA;
        double T0 = ct - 0.5 * wt, T1 = std::min(t_hi, ct + 0.5 * wt);
        double a0 = ca - 0.5 * wa, a1 = ca + 0.5 * wa;
        for (int ia = 0; ia <= n; ++ia) {
            double A = A0 + (A1 - A0) * ia / n;
            if (A <= 0) continue;
            for (int it = 0; it <= n; ++it) {
                double t = T0 + (T1 - T0) * it / n;
                double val_t = s * t;
                for (int ic = 0; ic <= n; ++ic) {
                    double a = a0 + (a1 - a0) * ic / n;
                    double val = std::log(A) + val_t;
                    if (val <= best_val) continue;
                    if (contained(A, std::exp(t), a)) {
                        best_val = val;
                        bA = A;
                        bt = t;
                        ba = a;
                    }
                }
            }
        }
        double shrink = 4.0 / n;
        wA *= shrink;
        wt *= shrink;
        wa *= shrink;
        cA = bA;
        ct = bt;
        ca = ba;
    }
    Mat A(1, 1);
    A(0, 0) = bA;
    Vec a(1);
    a(0) = ba;
    return SymEllipsoid(A, std::exp(bt), a);
}

double john_s_function_eval(const JohnResult& result, const Vec& x) {
    if (result.status != SolveStatus::converged)
        throw std::logic_error("john_s_function_eval: result not converged");
    return s_marginal_density(result.ellipsoid, result.s, x);
}

HeightProfile height_profile(const LogConcaveFn& f, double s, int n_samples,
                             const RunConfig& cfg) {
    HeightProfile prof;
    const double logF = f.sup().log_value;
    const double t_hi = logF / s - 1e-9 / s;
    const double t_lo = logF / s - (f.dim() + 1.5) / s;
    InnerEffort effort;
    effort.oracle_grid = 11;
    effort.iters_early = 100;
    effort.iters_late = 160;
    effort.mu_min = 1e-5;
    std::optional<SymEllipsoid> warm;
    for (int i = 0; i < n_samples; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / (n_samples - 1);
        auto E = fixed_height_impl(f, s, std::exp(t), warm, cfg, effort);
        if (!E) continue;
        warm = E;
        Eigen::LLT<Mat> llt(E->A);
        double ld = 0.0;
        for (int k = 0; k < f.dim(); ++k) ld += std::log(llt.matrixL()(k, k));
        prof.samples.emplace_back(t, 2.0 * ld);
    }
    return prof;
}

}  // namespace sjohn
