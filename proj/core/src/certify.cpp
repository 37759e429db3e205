#include "sjohn/certify.hpp"

#include <algorithm>
#include <cmath>

#include "sjohn/optim.hpp"
#include "sjohn/polytope.hpp"

namespace sjohn {

namespace {

// Moment vector of a lifted point in M = Sym(d+1) x R^d; off-diagonal entries
// carry sqrt(2) so the Euclidean norm matches the Frobenius norm.
Vec moment_of(const Vec& u_bar, const Vec& u) {
    const int n = static_cast<int>(u_bar.size());
    const int d = static_cast<int>(u.size());
    Vec m(n * (n + 1) / 2 + d);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double v = u_bar(i) * u_bar(j);
            m(k++) = (i == j) ? v : M_SQRT2 * v;
        }
    }
    for (int i = 0; i < d; ++i) m(k++) = u(i);
    return m;
}

Vec moment_target(int d, double s) {
    const int n = d + 1;
    Vec t = Vec::Zero(n * (n + 1) / 2 + d);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            if (i == j) t(k) = (i == d) ? s : 1.0;
            ++k;
        }
    }
    return t;
}

void unpack_dual(const Vec& r, int d, Mat* H, double* gamma, Vec* h) {
    const int n = d + 1;
    Mat Hb = Mat::Zero(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double v = r(k++);
            if (i == j) Hb(i, i) = v;
            else Hb(i, j) = Hb(j, i) = v / M_SQRT2;
        }
    }
    *H = Hb.topLeftCorner(d, d);
    *gamma = Hb(d, d);
    h->resize(d);
    for (int i = 0; i < d; ++i) (*h)(i) = r(k++);
}

}  // namespace

std::pair<LogConcaveFn, NormalizationMap> normalize_to_ball(const LogConcaveFn& f,
                                                            const SymEllipsoid& E, double s,
                                                            const RunConfig& cfg) {
    auto rep = violation(f, E, s, cfg);
    if (!rep.contained)
        throw std::domain_error("normalize_to_ball: ellipsoid is not inside the lifting");
    NormalizationMap map;
    map.A = E.A;
    map.a = E.a;
    map.alpha = E.alpha;
    map.s = s;
    LogConcaveFn g = scale(std::pow(E.alpha, -s), affine_pullback(f, E.A, E.a));
    return {g, map};
}

std::vector<ContactPoint> find_contacts(const LogConcaveFn& g, double s, const RunConfig& cfg) {
    cfg.validate();
    const int d = g.dim();
    auto vfun = [&](const Vec& u) {
        double q = u.squaredNorm();
        if (q >= 1.0) return kNegInf;
        double lg = g.node().log_eval(u);
        if (lg == kNegInf) return kPosInf;
        return 0.5 * s * std::log1p(-q) - lg;
    };

    long n_seeds = 1;
    for (int i = 0; i < d; ++i) n_seeds *= std::max(cfg.grid_per_axis, 21);
    n_seeds = std::min<long>(n_seeds, 20000);
    auto seeds = fibonacci_ball(static_cast<int>(n_seeds), d);
    seeds.push_back(Vec::Zero(d));

    std::vector<double> vals(seeds.size());
    long n_touching = 0;
    for (size_t i = 0; i < seeds.size(); ++i) {
        vals[i] = vfun(seeds[i]);
        if (std::isfinite(vals[i]) && vals[i] >= -cfg.contact_tol) ++n_touching;
    }

    std::vector<ContactPoint> out;
    auto add_interior = [&](const Vec& u) {
        for (const auto& c : out)
            if (c.w > 0 && (c.u - u).norm() < 1e-4) return;
        double w = std::sqrt(std::max(0.0, 1.0 - u.squaredNorm()));
        if (w <= 1e-9) return;
        out.push_back({u, w});
        out.push_back({u, -w});
    };

    bool degenerate = n_touching > static_cast<long>(seeds.size()) / 2;
    if (degenerate) {
        // The lifting hugs the ball on a whole region; return the symmetric
        // axis contact family at radius sqrt(d/(d+s)).
        double r = std::sqrt(static_cast<double>(d) / (d + s));
        for (int j = 0; j < d; ++j) {
            for (double sign : {1.0, -1.0}) {
                Vec u = Vec::Zero(d);
                u(j) = sign * r;
                if (std::isfinite(vfun(u)) && vfun(u) >= -cfg.contact_tol) add_interior(u);
            }
        }
    } else {
        // Approximate lattice-local maxima, then refine each.
        double rho = d == 1 ? 2.5 / std::max<long>(n_seeds, 4) : 2.2 * std::pow(1.0 / n_seeds, 1.0 / d);
        std::vector<int> candidates;
        for (size_t i = 0; i < seeds.size(); ++i) {
            if (!std::isfinite(vals[i])) continue;
            bool is_max = true;
            for (size_t j = 0; j < seeds.size() && is_max; ++j) {
                if (i == j) continue;
                if ((seeds[i] - seeds[j]).norm() < rho && vals[j] > vals[i]) is_max = false;
            }
            if (is_max) candidates.push_back(static_cast<int>(i));
        }
        std::sort(candidates.begin(), candidates.end(),
                  [&](int a, int b) { return vals[a] > vals[b]; });
        if (candidates.size() > 40) candidates.resize(40);
        for (int ci : candidates) {
            Vec u;
            double v;
            if (d == 1) {
                double t0 = seeds[ci](0);
                auto line = [&](double t) {
                    Vec x(1);
                    x(0) = t;
                    return vfun(x);
                };
                double t = golden_max(line, std::max(-1.0, t0 - rho), std::min(1.0, t0 + rho), 1e-13);
                u.resize(1);
                u(0) = t;
                v = line(t);
            } else {
                NelderMeadOptions opt;
                opt.max_iters = 300;
                opt.init_step = 0.5 * rho;
                opt.xtol = 1e-12;
                auto r = nelder_mead_max(vfun, seeds[ci], opt);
                u = r.x;
                v = r.value;
            }
            if (std::isfinite(v) && v >= -cfg.contact_tol) add_interior(u);
        }
    }

    // Support boundary contacts: rays whose support radius is 1 within band.
    auto supp = g.support();
    if (supp.kind != SupportInfo::Kind::full) {
        auto ray_radius = [&](const Vec& dir) {
            // Largest r with g(r dir) > 0, searched up to 1.5.
            double lo = 0.0, hi = 1.5;
            if (g.node().log_eval(hi * dir) > kNegInf) return hi;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (g.node().log_eval(mid * dir) > kNegInf) lo = mid;
                else hi = mid;
            }
            return lo;
        };
        auto add_boundary = [&](const Vec& dir) {
            double r = ray_radius(dir);
            if (std::abs(r - 1.0) > 1e-6) return;
            Vec u = dir;
            for (const auto& c : out)
                if (c.w == 0.0 && (c.u - u).norm() < 1e-4) return;
            out.push_back({u, 0.0});
        };
        if (supp.kind == SupportInfo::Kind::polytope) {
            for (const auto& hsp : supp.halfspaces) {
                double nn = hsp.n.norm();
                if (nn == 0) continue;
                if (std::abs(hsp.c / nn - 1.0) <= 1e-7) add_boundary(hsp.n / nn);
            }
        }
        int n_dirs = d == 1 ? 2 : (d == 2 ? 256 : 1024);
        for (const auto& dir : fibonacci_sphere(n_dirs, d)) add_boundary(dir);
    }
    return out;
}

WeightSolveOutcome solve_weights(const std::vector<ContactPoint>& contacts, double s,
                                 const RunConfig& cfg) {
    cfg.validate();
    WeightSolveOutcome out;
    if (contacts.empty()) {
        out.best_residual = kPosInf;
        return out;
    }
    const int d = static_cast<int>(contacts.front().u.size());
    for (const auto& c : contacts) {
        double n2 = c.u.squaredNorm() + c.w * c.w;
        if (std::abs(n2 - 1.0) > 1e-6)
            throw std::invalid_argument("solve_weights: contact not on the unit sphere");
    }

    // Group reflection pairs: one variable per {(u, w), (u, -w)}; w = 0 points
    // stand alone. The mixed block vanishes identically for pairs.
    struct Group {
        Vec u;
        double w;         // absolute value
        int rep_count;    // 2 for pairs, 1 for boundary points
    };
    std::vector<Group> groups;
    for (const auto& c : contacts) {
        bool found = false;
        for (auto& g : groups) {
            if ((g.u - c.u).norm() < 1e-9 && std::abs(g.w - std::abs(c.w)) < 1e-9) {
                found = true;
                break;
            }
        }
        if (!found) groups.push_back({c.u, std::abs(c.w), std::abs(c.w) > 0 ? 2 : 1});
    }

    // Reduced system: rows = vech(u u^T) (sqrt2 off-diagonals), w^2, u.
    const int m = d * (d + 1) / 2 + 1 + d;
    Mat A(m, static_cast<int>(groups.size()));
    for (size_t jg = 0; jg < groups.size(); ++jg) {
        const auto& g = groups[jg];
        int k = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                A(k++, static_cast<int>(jg)) = (i == j ? 1.0 : M_SQRT2) * g.u(i) * g.u(j);
        A(k++, static_cast<int>(jg)) = g.w * g.w;
        for (int i = 0; i < d; ++i) A(k++, static_cast<int>(jg)) = g.u(i);
    }
    Vec b = Vec::Zero(m);
    {
        int k = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) b(k++) = (i == j) ? 1.0 : 0.0;
        b(k) = s;
    }
    auto fit = nnls(A, b);
    out.best_residual = fit.residual_norm;

    if (fit.residual_norm > cfg.cert_tol) {
        // Dual hint: the residual is the separating functional in M.
        // Rebuild it in the full space.
        Vec r_full = Vec::Zero((d + 1) * (d + 2) / 2 + d);
        {
            int k = 0, kf = 0;
            const int n = d + 1;
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    if (i < d && j < d) r_full(kf) = fit.residual(k++);
                    else if (i == d && j == d) r_full(kf) = fit.residual(d * (d + 1) / 2);
                    ++kf;
                }
            }
            for (int i = 0; i < d; ++i) r_full(kf++) = fit.residual(d * (d + 1) / 2 + 1 + i);
        }
        unpack_dual(r_full, d, &out.dual_H, &out.dual_gamma, &out.dual_h);
        return out;
    }

    // Expand group weights back to points and prune in the full moment space.
    std::vector<Vec> phis;
    std::vector<ContactPoint> pts;
    std::vector<double> w0;
    for (size_t jg = 0; jg < groups.size(); ++jg) {
        double cg = fit.x(static_cast<int>(jg));
        if (cg <= 1e-14) continue;
        const auto& g = groups[jg];
        if (g.rep_count == 2) {
            pts.push_back({g.u, g.w});
            pts.push_back({g.u, -g.w});
            w0.push_back(0.5 * cg);
            w0.push_back(0.5 * cg);
        } else {
            pts.push_back({g.u, 0.0});
            w0.push_back(cg);
        }
    }
    for (const auto& p : pts) phis.push_back(moment_of(p.u_bar(), p.u));
    Vec weights = Eigen::Map<Vec>(w0.data(), static_cast<int>(w0.size()));
    weights = caratheodory_prune(phis, weights);

    ContactCertificate cert;
    cert.s = s;
    Vec target = moment_target(d, s);
    Vec achieved = Vec::Zero(target.size());
    for (int i = 0; i < weights.size(); ++i) {
        if (weights(i) <= 0.0) continue;
        cert.contacts.push_back(pts[i]);
        cert.weights.push_back(weights(i));
        achieved += weights(i) * phis[i];
    }
    cert.residual = (achieved - target).norm();
    out.certificate = std::move(cert);
    out.best_residual = out.certificate->residual;
    return out;
}

VerifyResult verify_optimality(const LogConcaveFn& f, const SymEllipsoid& E, double s,
                               const RunConfig& cfg) {
    cfg.validate();
    VerifyResult res;
    auto [g, map] = normalize_to_ball(f, E, s, cfg);
    res.map = map;
    res.contacts = find_contacts(g, s, cfg);
    auto outcome = solve_weights(res.contacts, s, cfg);
    if (!outcome.certificate && outcome.best_residual < 100.0 * cfg.cert_tol) {
        // Marginal: re-run the contact detector at a 10x tighter band.
        RunConfig tight = cfg;
        tight.contact_tol = cfg.contact_tol / 10.0;
        tight.grid_per_axis = cfg.grid_per_axis + cfg.grid_per_axis / 2;
        auto contacts2 = find_contacts(g, s, tight);
        auto outcome2 = solve_weights(contacts2, s, cfg);
        if (outcome2.certificate || outcome2.best_residual < outcome.best_residual) {
            res.contacts = std::move(contacts2);
            outcome = std::move(outcome2);
        }
    }
    if (outcome.certificate) {
        res.verdict = OptimalityVerdict::certified_global;
        res.certificate = std::move(outcome.certificate);
    } else {
        res.verdict = OptimalityVerdict::locally_suspect;
        res.dual_H = outcome.dual_H;
        res.dual_gamma = outcome.dual_gamma;
        res.dual_h = outcome.dual_h;
    }
    return res;
}

bool functional_condition_check(const ContactCertificate& cert, const LogConcaveFn& g, double s,
                                const RunConfig& cfg) {
    cfg.validate();
    const int d = g.dim();
    const double tol = 10.0 * cfg.cert_tol;
    Mat sum_uu = Mat::Zero(d, d);
    Vec sum_u = Vec::Zero(d);
    double sum_w2 = 0.0;
    for (size_t i = 0; i < cert.contacts.size(); ++i) {
        const auto& c = cert.contacts[i];
        double ci = cert.weights[i];
        double lg = g.node().log_eval(c.u);
        if (c.w != 0.0) {
            // Touching condition f(u) = h^s(u).
            double lh = 0.5 * s * std::log1p(-std::min(1.0 - 1e-300, c.u.squaredNorm()));
            if (!(std::abs(lg - lh) <= s * cfg.contact_tol * 10.0 + 1e-9)) return false;
            double w_func = std::exp(lg / s);
            sum_w2 += ci * w_func * w_func;
        } else {
            // Support boundary: g vanishes just beyond u.
            if (g.node().log_eval((1.0 + 1e-7) * c.u) != kNegInf) return false;
        }
        sum_uu += ci * (c.u * c.u.transpose());
        sum_u += ci * c.u;
    }
    if ((sum_uu - Mat::Identity(d, d)).norm() > tol) return false;
    if (std::abs(sum_w2 - s) > tol) return false;
    if (sum_u.norm() > tol) return false;
    return true;
}

}  // namespace sjohn
