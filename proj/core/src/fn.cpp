#include "sjohn/fn.hpp"

#include <algorithm>
#include <cmath>

#include "sjohn/optim.hpp"

namespace sjohn {

namespace {

void check_point(const Vec& x, int d) {
    if (x.size() != d) throw std::invalid_argument("eval: dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("eval: non-finite point");
}

// Multistart concave maximization used by Min::sup and Asplund evaluation.
struct ConcaveMax {
    Vec x;
    double value = kNegInf;
};

ConcaveMax concave_max(const std::function<double(const Vec&)>& f,
                       const std::vector<Vec>& seeds, double step, double xtol) {
    ConcaveMax best;
    for (const auto& s : seeds) {
        double v = f(s);
        if (v > best.value) { best.value = v; best.x = s; }
    }
    if (best.value == kNegInf) return best;
    const int d = static_cast<int>(best.x.size());
    if (d == 1) {
        // Expand a bracket around the best seed, then golden section.
        double c = best.x(0);
        double h = std::max(step, 1e-8);
        auto f1 = [&](double t) {
            Vec v(1);
            v(0) = t;
            return f(v);
        };
        double lo = c - h, hi = c + h;
        // Grow the bracket until both endpoints fall below the incumbent.
        for (int it = 0; it < 60 && f1(lo) >= best.value; ++it) { lo -= h; h *= 2; }
        h = std::max(step, 1e-8);
        for (int it = 0; it < 60 && f1(hi) >= best.value; ++it) { hi += h; h *= 2; }
        double t = golden_max(f1, lo, hi, xtol);
        Vec v(1);
        v(0) = t;
        double val = f(v);
        if (val > best.value) { best.value = val; best.x = v; }
        return best;
    }
    NelderMeadOptions opt;
    opt.init_step = step;
    opt.xtol = xtol;
    opt.restarts = 2;
    auto r = nelder_mead_max(f, best.x, opt);
    auto p = coordinate_polish(f, r.x, step * 0.1, xtol);
    if (p.value > r.value) r = {p.x, p.value, 0};
    if (r.value > best.value) { best.value = r.value; best.x = r.x; }
    return best;
}

}  // namespace

int LogConcaveFn::dim() const { return node_->dim(); }
FnKind LogConcaveFn::kind() const { return node_->kind(); }
double LogConcaveFn::log_eval(const Vec& x) const {
    check_point(x, node_->dim());
    return node_->log_eval(x);
}
double LogConcaveFn::eval(const Vec& x) const { return std::exp(log_eval(x)); }
const SupInfo& LogConcaveFn::sup() const { return node_->sup(); }
BallBound LogConcaveFn::superlevel_ball(double log_beta) const {
    return node_->superlevel_ball(log_beta);
}
std::optional<HalfspaceList> LogConcaveFn::superlevel_halfspaces(double log_beta) const {
    return node_->superlevel_halfspaces(log_beta);
}
std::optional<std::pair<Mat, Vec>> LogConcaveFn::superlevel_ellipsoid(double log_beta) const {
    return node_->superlevel_ellipsoid(log_beta);
}
SupportInfo LogConcaveFn::support() const { return node_->support(); }

// ---------------------------------------------------------------------------
// Leaf nodes
// ---------------------------------------------------------------------------

class GaussianNode : public FnNode {
public:
    GaussianNode(Mat A, double alpha, Vec a)
        : FnNode(static_cast<int>(A.rows())), p_{std::move(A), alpha, std::move(a)} {
        if (!is_spd(p_.A)) throw std::invalid_argument("gaussian: A must be SPD");
        if (!(alpha > 0)) throw std::invalid_argument("gaussian: alpha must be positive");
        if (p_.a.size() != p_.A.rows()) throw std::invalid_argument("gaussian: dim mismatch");
        Ainv_ = p_.A.inverse();
        log_alpha_ = std::log(alpha);
        opnorm_ = spectral_norm(p_.A);
    }
    FnKind kind() const override { return FnKind::gaussian; }
    double log_eval(const Vec& x) const override {
        Vec u = Ainv_ * (x - p_.a);
        return log_alpha_ - u.squaredNorm();
    }
    BallBound superlevel_ball(double log_beta) const override {
        double r2 = log_alpha_ - log_beta;
        return {p_.a, r2 > 0 ? opnorm_ * std::sqrt(r2) : 0.0};
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        double r2 = log_alpha_ - log_beta;
        double r = r2 > 0 ? std::sqrt(r2) : 0.0;
        return std::make_pair(Mat(r * p_.A), p_.a);
    }
    SupportInfo support() const override {
        SupportInfo s;
        s.kind = SupportInfo::Kind::full;
        return s;
    }
    const GaussianPayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override { return {log_alpha_, p_.a}; }

private:
    GaussianPayload p_;
    Mat Ainv_;
    double log_alpha_, opnorm_;
};

class FlatNode : public FnNode {
public:
    FlatNode(Mat A, double alpha, Vec a)
        : FnNode(static_cast<int>(A.rows())), p_{std::move(A), alpha, std::move(a)} {
        if (!is_spd(p_.A)) throw std::invalid_argument("flat_ellipsoid: A must be SPD");
        if (!(alpha > 0)) throw std::invalid_argument("flat_ellipsoid: alpha must be positive");
        if (p_.a.size() != p_.A.rows()) throw std::invalid_argument("flat_ellipsoid: dim mismatch");
        Ainv_ = p_.A.inverse();
        log_alpha_ = std::log(alpha);
        opnorm_ = spectral_norm(p_.A);
    }
    FnKind kind() const override { return FnKind::flat_ellipsoid; }
    double log_eval(const Vec& x) const override {
        Vec u = Ainv_ * (x - p_.a);
        return u.squaredNorm() <= 1.0 ? log_alpha_ : kNegInf;
    }
    BallBound superlevel_ball(double log_beta) const override {
        return {p_.a, log_beta <= log_alpha_ ? opnorm_ : 0.0};
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        if (log_beta > log_alpha_) return std::nullopt;
        return std::make_pair(p_.A, p_.a);
    }
    SupportInfo support() const override {
        SupportInfo s;
        s.kind = SupportInfo::Kind::ellipsoid;
        s.A = p_.A;
        s.a = p_.a;
        return s;
    }
    const FlatPayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override { return {log_alpha_, p_.a}; }

private:
    FlatPayload p_;
    Mat Ainv_;
    double log_alpha_, opnorm_;
};

class HeightPowerNode : public FnNode {
public:
    HeightPowerNode(SymEllipsoid E, double s) : FnNode(E.dim()), p_{std::move(E), s} {
        p_.E.validate();
        if (!(s > 0)) throw std::invalid_argument("height_power: s must be positive");
        Ainv_ = p_.E.A.inverse();
        opnorm_ = spectral_norm(p_.E.A);
    }
    FnKind kind() const override { return FnKind::height_power; }
    double log_eval(const Vec& x) const override {
        Vec u = Ainv_ * (x - p_.E.a);
        double q = u.squaredNorm();
        if (q >= 1.0) return kNegInf;
        return p_.s * (std::log(p_.E.alpha) + 0.5 * std::log1p(-q));
    }
    BallBound superlevel_ball(double log_beta) const override {
        double top = p_.s * std::log(p_.E.alpha);
        return {p_.E.a, log_beta <= top ? opnorm_ : 0.0};
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        double t = log_beta / p_.s - std::log(p_.E.alpha);  // log of height fraction
        if (t > 0) return std::nullopt;
        double r = std::sqrt(std::max(0.0, 1.0 - std::exp(2.0 * t)));
        return std::make_pair(Mat(r * p_.E.A), p_.E.a);
    }
    SupportInfo support() const override {
        SupportInfo s;
        s.kind = SupportInfo::Kind::ellipsoid;
        s.A = p_.E.A;
        s.a = p_.E.a;
        return s;
    }
    const HeightPowerPayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override { return {p_.s * std::log(p_.E.alpha), p_.E.a}; }

private:
    HeightPowerPayload p_;
    Mat Ainv_;
    double opnorm_;
};

class ExpPolyhedralNode : public FnNode {
public:
    ExpPolyhedralNode(std::vector<LinearPiece> pieces, HalfspaceList domain, int d)
        : FnNode(d), p_{std::move(pieces), std::move(domain)} {
        for (auto& pc : p_.pieces)
            if (pc.g.size() != d) throw std::invalid_argument("exp_polyhedral: piece dim mismatch");
        for (auto& h : p_.domain) {
            if (h.n.size() != d) throw std::invalid_argument("exp_polyhedral: halfspace dim mismatch");
            double nn = h.n.norm();
            if (nn == 0.0) throw std::invalid_argument("exp_polyhedral: zero normal");
            h.c /= nn;
            h.n /= nn;
        }
    }
    FnKind kind() const override { return FnKind::exp_polyhedral; }
    double log_eval(const Vec& x) const override {
        if (!satisfies(p_.domain, x)) return kNegInf;
        double m = 0.0;
        bool first = true;
        for (const auto& pc : p_.pieces) {
            double v = pc.g.dot(x) + pc.b;
            if (first || v < m) { m = v; first = false; }
        }
        return m;
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        HalfspaceList hs = p_.domain;
        for (const auto& pc : p_.pieces) hs.push_back({-pc.g, pc.b - log_beta});
        return hs;
    }
    BallBound superlevel_ball(double log_beta) const override {
        auto hs = *superlevel_halfspaces(log_beta);
        if (polyhedron_unbounded(hs, dim())) return {Vec::Zero(dim()), kPosInf};
        auto verts = polytope_vertices(hs, dim());
        if (verts.empty()) return {sup().argmax, 0.0};
        Vec c = Vec::Zero(dim());
        for (const auto& v : verts) c += v;
        c /= static_cast<double>(verts.size());
        double r = 0.0;
        for (const auto& v : verts) r = std::max(r, (v - c).norm());
        return {c, r * (1.0 + 1e-12)};
    }
    SupportInfo support() const override {
        SupportInfo s;
        if (p_.domain.empty()) {
            s.kind = SupportInfo::Kind::full;
        } else {
            s.kind = SupportInfo::Kind::polytope;
            s.halfspaces = p_.domain;
        }
        return s;
    }
    const ExpPolyhedralPayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override {
        const int d = dim();
        // Collect candidate maximizers: intersections of d hyperplanes among
        // piece-piece equalities and domain facets, plus fallbacks.
        std::vector<Halfspace> planes;  // used as hyperplanes <n,x> = c
        for (size_t i = 0; i < p_.pieces.size(); ++i)
            for (size_t j = i + 1; j < p_.pieces.size(); ++j) {
                Vec n = p_.pieces[i].g - p_.pieces[j].g;
                if (n.norm() < 1e-14) continue;
                planes.push_back({n, p_.pieces[j].b - p_.pieces[i].b});
            }
        for (const auto& h : p_.domain) planes.push_back(h);
        std::vector<Vec> cand;
        cand.push_back(Vec::Zero(d));
        {
            auto hs = superlevel_halfspaces(kNegInf);  // domain + trivially wide pieces
            auto verts = polytope_vertices(p_.domain, d);
            for (auto& v : verts) cand.push_back(v);
            (void)hs;
        }
        const int m = static_cast<int>(planes.size());
        if (m >= d) {
            std::vector<int> idx(d);
            std::function<void(int, int)> rec = [&](int start, int k) {
                if (k == d) {
                    Mat N(d, d);
                    Vec c(d);
                    for (int r = 0; r < d; ++r) {
                        N.row(r) = planes[idx[r]].n.transpose();
                        c(r) = planes[idx[r]].c;
                    }
                    Eigen::FullPivLU<Mat> lu(N);
                    if (lu.isInvertible()) {
                        Vec x = lu.solve(c);
                        if (x.allFinite()) cand.push_back(x);
                    }
                    return;
                }
                for (int i = start; i < m; ++i) {
                    idx[k] = i;
                    rec(i + 1, k + 1);
                }
            };
            rec(0, 0);
        }
        SupInfo best{kNegInf, Vec::Zero(d)};
        for (const auto& x : cand) {
            double v = log_eval(x);
            if (v > best.log_value) { best.log_value = v; best.argmax = x; }
        }
        if (best.log_value == kNegInf && !p_.domain.empty()) {
            // No candidate inside the domain; probe a coarse lattice.
            for (const auto& u : fibonacci_ball(512, d)) {
                for (double r : {1.0, 4.0, 16.0}) {
                    Vec x = r * u;
                    double v = log_eval(x);
                    if (v > best.log_value) { best.log_value = v; best.argmax = x; }
                }
            }
        }
        return best;
    }

private:
    ExpPolyhedralPayload p_;
};

class GaugeSquareNode : public FnNode {
public:
    GaugeSquareNode(HalfspaceList K, int d) : FnNode(d), p_{std::move(K)} {
        if (p_.K.empty()) throw std::invalid_argument("gauge_square: empty polytope");
        for (auto& h : p_.K) {
            if (h.n.size() != d) throw std::invalid_argument("gauge_square: halfspace dim mismatch");
            if (!(h.c > 0)) throw std::invalid_argument("gauge_square: origin must be interior (c > 0)");
        }
        auto verts = polytope_vertices(p_.K, d);
        if (verts.empty() || polyhedron_unbounded(p_.K, d))
            throw std::invalid_argument("gauge_square: K must be a bounded polytope");
        RK_ = 0.0;
        for (const auto& v : verts) RK_ = std::max(RK_, v.norm());
    }
    FnKind kind() const override { return FnKind::gauge_square; }
    double gauge(const Vec& x) const {
        double m = 0.0;
        for (const auto& h : p_.K) m = std::max(m, h.n.dot(x) / h.c);
        return m;
    }
    double log_eval(const Vec& x) const override {
        double g = gauge(x);
        return -g * g;
    }
    BallBound superlevel_ball(double log_beta) const override {
        double r = log_beta < 0 ? RK_ * std::sqrt(-log_beta) : 0.0;
        return {Vec::Zero(dim()), r};
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        double s0 = log_beta < 0 ? std::sqrt(-log_beta) : 0.0;
        HalfspaceList hs = p_.K;
        for (auto& h : hs) h.c *= s0;
        return hs;
    }
    SupportInfo support() const override {
        SupportInfo s;
        s.kind = SupportInfo::Kind::full;
        return s;
    }
    const GaugeSquarePayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override { return {0.0, Vec::Zero(dim())}; }

private:
    GaugeSquarePayload p_;
    double RK_;
};

// ---------------------------------------------------------------------------
// Composite nodes
// ---------------------------------------------------------------------------

class MinNode : public FnNode {
public:
    explicit MinNode(std::vector<LogConcaveFn> children)
        : FnNode(children.front().dim()), children_(std::move(children)) {
        for (const auto& c : children_)
            if (c.dim() != dim()) throw std::invalid_argument("pointwise_min: dim mismatch");
    }
    FnKind kind() const override { return FnKind::min; }
    double log_eval(const Vec& x) const override {
        double m = kPosInf;
        for (const auto& c : children_) {
            m = std::min(m, c.node().log_eval(x));
            if (m == kNegInf) return m;
        }
        return m;
    }
    BallBound superlevel_ball(double log_beta) const override {
        BallBound best{Vec::Zero(dim()), kPosInf};
        for (const auto& c : children_) {
            BallBound b = c.superlevel_ball(log_beta);
            if (b.radius < best.radius) best = b;
        }
        if (!std::isfinite(best.radius)) {
            // Children may be individually unbounded (slabs) while the
            // intersection is bounded; use the exact halfspace form if we have
            // one.
            auto hs = superlevel_halfspaces(log_beta);
            if (hs && !polyhedron_unbounded(*hs, dim())) {
                auto verts = polytope_vertices(*hs, dim());
                if (!verts.empty()) {
                    Vec c = Vec::Zero(dim());
                    for (const auto& v : verts) c += v;
                    c /= static_cast<double>(verts.size());
                    double r = 0.0;
                    for (const auto& v : verts) r = std::max(r, (v - c).norm());
                    return {c, r * (1.0 + 1e-12)};
                }
            }
        }
        return best;
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        HalfspaceList all;
        for (const auto& c : children_) {
            auto hs = c.superlevel_halfspaces(log_beta);
            if (!hs) return std::nullopt;
            all.insert(all.end(), hs->begin(), hs->end());
        }
        return all;
    }
    SupportInfo support() const override {
        SupportInfo s;
        HalfspaceList polys;
        int n_ellipsoid = 0;
        SupportInfo ell;
        for (const auto& c : children_) {
            auto cs = c.support();
            switch (cs.kind) {
                case SupportInfo::Kind::full:
                    break;
                case SupportInfo::Kind::polytope:
                    polys.insert(polys.end(), cs.halfspaces.begin(), cs.halfspaces.end());
                    break;
                case SupportInfo::Kind::ellipsoid:
                    ++n_ellipsoid;
                    ell = cs;
                    break;
                default:
                    s.kind = SupportInfo::Kind::unknown;
                    return s;
            }
        }
        if (n_ellipsoid == 0) {
            if (polys.empty()) {
                s.kind = SupportInfo::Kind::full;
            } else {
                s.kind = SupportInfo::Kind::polytope;
                s.halfspaces = std::move(polys);
            }
        } else if (n_ellipsoid == 1 && polys.empty()) {
            s = ell;
        } else {
            s.kind = SupportInfo::Kind::unknown;
        }
        return s;
    }
    const std::vector<LogConcaveFn>& children() const { return children_; }

protected:
    SupInfo sup_impl() const override {
        const int d = dim();
        auto f = [&](const Vec& x) { return log_eval(x); };
        std::vector<Vec> seeds;
        for (const auto& c : children_) seeds.push_back(c.sup().argmax);
        for (size_t i = 0; i < children_.size(); ++i)
            for (size_t j = i + 1; j < children_.size(); ++j)
                seeds.push_back(0.5 * (children_[i].sup().argmax + children_[j].sup().argmax));
        Vec centroid = Vec::Zero(d);
        for (const auto& c : children_) centroid += c.sup().argmax;
        centroid /= static_cast<double>(children_.size());
        seeds.push_back(centroid);
        double scale0 = 1.0;
        for (const auto& c : children_) {
            BallBound b = c.superlevel_ball(c.sup().log_value - 3.0);
            if (std::isfinite(b.radius)) scale0 = std::max(scale0, b.radius);
        }
        auto r = concave_max(f, seeds, 0.25 * scale0, 1e-11);
        if (r.value == kNegInf) {
            for (const auto& u : fibonacci_ball(256, d)) {
                Vec x = centroid + scale0 * u;
                double v = f(x);
                if (v > r.value) { r.value = v; r.x = x; }
            }
            if (r.value > kNegInf) r = concave_max(f, {r.x}, 0.25 * scale0, 1e-11);
        }
        if (r.value == kNegInf) return {kNegInf, centroid};
        return {r.value, r.x};
    }

private:
    std::vector<LogConcaveFn> children_;
};

class AsplundNode : public FnNode {
public:
    AsplundNode(LogConcaveFn f, LogConcaveFn g)
        : FnNode(f.dim()), pair_{std::move(f), std::move(g)} {
        if (pair_.first.dim() != pair_.second.dim())
            throw std::invalid_argument("asplund: dim mismatch");
    }
    FnKind kind() const override { return FnKind::asplund; }
    double log_eval(const Vec& x) const override {
        const auto& sf = pair_.first.sup();
        const auto& sg = pair_.second.sup();
        if (sf.log_value == kNegInf || sg.log_value == kNegInf) return kNegInf;
        const int d = dim();
        auto phi = [&](const Vec& y) {
            double a = pair_.first.node().log_eval(y);
            if (a == kNegInf) return kNegInf;
            double b = pair_.second.node().log_eval(x - y);
            if (b == kNegInf) return kNegInf;
            return a + b;
        };
        Vec y_lo = sf.argmax;        // best for f
        Vec y_hi = x - sg.argmax;    // best for g
        std::vector<Vec> seeds;
        const int nt = 17;
        for (int k = 0; k < nt; ++k) {
            double t = static_cast<double>(k) / (nt - 1);
            seeds.push_back((1.0 - t) * y_lo + t * y_hi);
        }
        seeds.push_back(0.5 * x);
        double scale0 = std::max(1e-6, (y_hi - y_lo).norm());
        {
            BallBound bf = pair_.first.superlevel_ball(sf.log_value - 3.0);
            if (std::isfinite(bf.radius)) scale0 = std::max(scale0, bf.radius);
        }
        auto r = concave_max(phi, seeds, 0.2 * scale0, 1e-11);
        if (r.value == kNegInf) {
            Vec mid = 0.5 * (y_lo + y_hi);
            for (double rad : {0.1, 0.3, 1.0, 2.0}) {
                for (const auto& u : fibonacci_ball(64, d)) {
                    Vec y = mid + rad * scale0 * u;
                    double v = phi(y);
                    if (v > r.value) { r.value = v; r.x = y; }
                }
                if (r.value > kNegInf) break;
            }
            if (r.value > kNegInf) r = concave_max(phi, {r.x}, 0.1 * scale0, 1e-11);
        }
        return r.value;
    }
    BallBound superlevel_ball(double log_beta) const override {
        const auto& sf = pair_.first.sup();
        const auto& sg = pair_.second.sup();
        BallBound bf = pair_.first.superlevel_ball(log_beta - sg.log_value);
        BallBound bg = pair_.second.superlevel_ball(log_beta - sf.log_value);
        return {bf.center + bg.center, bf.radius + bg.radius};
    }
    SupportInfo support() const override {
        auto s1 = pair_.first.support();
        auto s2 = pair_.second.support();
        SupportInfo s;
        if (s1.kind == SupportInfo::Kind::full || s2.kind == SupportInfo::Kind::full) {
            s.kind = SupportInfo::Kind::full;
        } else {
            s.kind = SupportInfo::Kind::unknown;
        }
        return s;
    }
    const std::pair<LogConcaveFn, LogConcaveFn>& children() const { return pair_; }

protected:
    SupInfo sup_impl() const override {
        // ||f * g|| = ||f|| ||g||, attained at the sum of the argmaxes.
        const auto& sf = pair_.first.sup();
        const auto& sg = pair_.second.sup();
        return {sf.log_value + sg.log_value, sf.argmax + sg.argmax};
    }

private:
    std::pair<LogConcaveFn, LogConcaveFn> pair_;
};

class EpiProductNode : public FnNode {
public:
    EpiProductNode(double lambda, LogConcaveFn child)
        : FnNode(child.dim()), p_{lambda, std::move(child)} {
        if (!(lambda > 0)) throw std::invalid_argument("epi_product: lambda must be positive");
    }
    FnKind kind() const override { return FnKind::epi_product; }
    double log_eval(const Vec& x) const override {
        return p_.lambda * p_.child.node().log_eval(x / p_.lambda);
    }
    BallBound superlevel_ball(double log_beta) const override {
        BallBound b = p_.child.superlevel_ball(log_beta / p_.lambda);
        return {p_.lambda * b.center, p_.lambda * b.radius};
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        auto hs = p_.child.superlevel_halfspaces(log_beta / p_.lambda);
        if (!hs) return std::nullopt;
        for (auto& h : *hs) h.c *= p_.lambda;
        return hs;
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        auto e = p_.child.superlevel_ellipsoid(log_beta / p_.lambda);
        if (!e) return std::nullopt;
        return std::make_pair(Mat(p_.lambda * e->first), Vec(p_.lambda * e->second));
    }
    SupportInfo support() const override {
        auto s = p_.child.support();
        if (s.kind == SupportInfo::Kind::polytope)
            for (auto& h : s.halfspaces) h.c *= p_.lambda;
        if (s.kind == SupportInfo::Kind::ellipsoid) {
            s.A *= p_.lambda;
            s.a *= p_.lambda;
        }
        return s;
    }
    const EpiProductPayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override {
        const auto& sc = p_.child.sup();
        return {p_.lambda * sc.log_value, p_.lambda * sc.argmax};
    }

private:
    EpiProductPayload p_;
};

class AffineNode : public FnNode {
public:
    AffineNode(LogConcaveFn child, Mat T, Vec t)
        : FnNode(child.dim()), p_{std::move(T), std::move(t), std::move(child)} {
        if (p_.T.rows() != dim() || p_.T.cols() != dim() || p_.t.size() != dim())
            throw std::invalid_argument("affine_pullback: dim mismatch");
        Eigen::FullPivLU<Mat> lu(p_.T);
        if (!lu.isInvertible()) throw std::invalid_argument("affine_pullback: T must be invertible");
        Tinv_ = lu.inverse();
        sigma_min_ = smallest_singular_value(p_.T);
    }
    FnKind kind() const override { return FnKind::affine_pullback; }
    double log_eval(const Vec& x) const override {
        return p_.child.node().log_eval(p_.T * x + p_.t);
    }
    BallBound superlevel_ball(double log_beta) const override {
        BallBound b = p_.child.superlevel_ball(log_beta);
        return {Tinv_ * (b.center - p_.t), b.radius / sigma_min_};
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        auto hs = p_.child.superlevel_halfspaces(log_beta);
        if (!hs) return std::nullopt;
        for (auto& h : *hs) {
            double c = h.c - h.n.dot(p_.t);
            h.n = p_.T.transpose() * h.n;
            h.c = c;
        }
        return hs;
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        auto e = p_.child.superlevel_ellipsoid(log_beta);
        if (!e) return std::nullopt;
        Mat M = Tinv_ * e->first;
        Vec m = Tinv_ * (e->second - p_.t);
        if (M.isZero(0.0)) return std::make_pair(M, m);
        return std::make_pair(canonical_shape(M), m);
    }
    SupportInfo support() const override {
        auto s = p_.child.support();
        if (s.kind == SupportInfo::Kind::polytope) {
            for (auto& h : s.halfspaces) {
                double c = h.c - h.n.dot(p_.t);
                h.n = p_.T.transpose() * h.n;
                h.c = c;
            }
        } else if (s.kind == SupportInfo::Kind::ellipsoid) {
            Vec m = Tinv_ * (s.a - p_.t);
            s.A = canonical_shape(Tinv_ * s.A);
            s.a = m;
        }
        return s;
    }
    const AffinePayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override {
        const auto& sc = p_.child.sup();
        return {sc.log_value, Tinv_ * (sc.argmax - p_.t)};
    }

private:
    AffinePayload p_;
    Mat Tinv_;
    double sigma_min_;
};

class ScaleNode : public FnNode {
public:
    ScaleNode(double gamma, LogConcaveFn child)
        : FnNode(child.dim()), p_{gamma, std::move(child)} {
        if (!(gamma > 0)) throw std::invalid_argument("scale: gamma must be positive");
        log_gamma_ = std::log(gamma);
    }
    FnKind kind() const override { return FnKind::scale; }
    double log_eval(const Vec& x) const override {
        return log_gamma_ + p_.child.node().log_eval(x);
    }
    BallBound superlevel_ball(double log_beta) const override {
        return p_.child.superlevel_ball(log_beta - log_gamma_);
    }
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const override {
        return p_.child.superlevel_halfspaces(log_beta - log_gamma_);
    }
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const override {
        return p_.child.superlevel_ellipsoid(log_beta - log_gamma_);
    }
    SupportInfo support() const override { return p_.child.support(); }
    const ScalePayload& payload() const { return p_; }

protected:
    SupInfo sup_impl() const override {
        const auto& sc = p_.child.sup();
        return {log_gamma_ + sc.log_value, sc.argmax};
    }

private:
    ScalePayload p_;
    double log_gamma_;
};

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

LogConcaveFn gaussian(const Mat& A, double alpha, const Vec& a) {
    return LogConcaveFn(std::make_shared<GaussianNode>(A, alpha, a));
}
LogConcaveFn flat_ellipsoid(const Mat& A, double alpha, const Vec& a) {
    return LogConcaveFn(std::make_shared<FlatNode>(A, alpha, a));
}
LogConcaveFn height_power(const SymEllipsoid& E, double s) {
    return LogConcaveFn(std::make_shared<HeightPowerNode>(E, s));
}
LogConcaveFn exp_polyhedral(std::vector<LinearPiece> pieces, HalfspaceList domain, int dim) {
    return LogConcaveFn(std::make_shared<ExpPolyhedralNode>(std::move(pieces), std::move(domain), dim));
}
LogConcaveFn gauge_square(HalfspaceList K, int dim) {
    return LogConcaveFn(std::make_shared<GaugeSquareNode>(std::move(K), dim));
}
LogConcaveFn pointwise_min(std::vector<LogConcaveFn> children) {
    if (children.empty()) throw std::invalid_argument("pointwise_min: empty list");
    if (children.size() == 1) return children.front();
    std::vector<LogConcaveFn> flat;
    for (auto& c : children) {
        if (const auto* sub = as_min(c)) {
            flat.insert(flat.end(), sub->begin(), sub->end());
        } else {
            flat.push_back(std::move(c));
        }
    }
    return LogConcaveFn(std::make_shared<MinNode>(std::move(flat)));
}
LogConcaveFn asplund(const LogConcaveFn& f, const LogConcaveFn& g) {
    return LogConcaveFn(std::make_shared<AsplundNode>(f, g));
}
LogConcaveFn epi_product(double lambda, const LogConcaveFn& f) {
    return LogConcaveFn(std::make_shared<EpiProductNode>(lambda, f));
}
LogConcaveFn affine_pullback(const LogConcaveFn& f, const Mat& T, const Vec& t) {
    return LogConcaveFn(std::make_shared<AffineNode>(f, T, t));
}

LogConcaveFn scale(double gamma, const LogConcaveFn& f) {
    if (!(gamma > 0)) throw std::invalid_argument("scale: gamma must be positive");
    if (gamma == 1.0) return f;
    switch (f.kind()) {
        case FnKind::gaussian: {
            const auto& p = *as_gaussian(f);
            return gaussian(p.A, gamma * p.alpha, p.a);
        }
        case FnKind::flat_ellipsoid: {
            const auto& p = *as_flat(f);
            return flat_ellipsoid(p.A, gamma * p.alpha, p.a);
        }
        case FnKind::height_power: {
            const auto& p = *as_height_power(f);
            SymEllipsoid E = p.E;
            E.alpha *= std::pow(gamma, 1.0 / p.s);
            return height_power(E, p.s);
        }
        case FnKind::exp_polyhedral: {
            auto p = *as_exp_polyhedral(f);
            if (p.pieces.empty()) {
                p.pieces.push_back({Vec::Zero(f.dim()), std::log(gamma)});
            } else {
                for (auto& pc : p.pieces) pc.b += std::log(gamma);
            }
            return exp_polyhedral(std::move(p.pieces), std::move(p.domain), f.dim());
        }
        case FnKind::min: {
            std::vector<LogConcaveFn> ch;
            for (const auto& c : *as_min(f)) ch.push_back(scale(gamma, c));
            return pointwise_min(std::move(ch));
        }
        case FnKind::asplund: {
            const auto& p = *as_asplund(f);
            return asplund(scale(gamma, p.first), p.second);
        }
        case FnKind::epi_product: {
            const auto& p = *as_epi_product(f);
            return epi_product(p.lambda, scale(std::pow(gamma, 1.0 / p.lambda), p.child));
        }
        case FnKind::affine_pullback: {
            const auto& p = *as_affine(f);
            return affine_pullback(scale(gamma, p.child), p.T, p.t);
        }
        case FnKind::scale: {
            const auto& p = *as_scale(f);
            return scale(gamma * p.gamma, p.child);
        }
        case FnKind::gauge_square:
            break;
    }
    return LogConcaveFn(std::make_shared<ScaleNode>(gamma, f));
}

SuperlevelBody superlevel(const LogConcaveFn& f, double beta) {
    if (!(beta > 0)) throw std::invalid_argument("superlevel: beta must be positive");
    double log_beta = std::log(beta);
    if (log_beta >= f.sup().log_value)
        throw std::domain_error("superlevel: level at or above the sup norm (empty interior)");
    SuperlevelBody body;
    body.beta = beta;
    body.dim = f.dim();
    body.halfspaces = f.superlevel_halfspaces(log_beta);
    body.ellipsoid = f.superlevel_ellipsoid(log_beta);
    auto node = f.node_ptr();
    body.member = [node, log_beta](const Vec& x) {
        return node->log_eval(x) >= log_beta - 1e-12 * (1.0 + std::abs(log_beta));
    };
    body.outer = f.superlevel_ball(log_beta);
    return body;
}

// ---------------------------------------------------------------------------
// Payload accessors
// ---------------------------------------------------------------------------

const GaussianPayload* as_gaussian(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const GaussianNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const FlatPayload* as_flat(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const FlatNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const HeightPowerPayload* as_height_power(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const HeightPowerNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const ExpPolyhedralPayload* as_exp_polyhedral(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const ExpPolyhedralNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const GaugeSquarePayload* as_gauge_square(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const GaugeSquareNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const std::vector<LogConcaveFn>* as_min(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const MinNode*>(&f.node());
    return n ? &n->children() : nullptr;
}
const std::pair<LogConcaveFn, LogConcaveFn>* as_asplund(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const AsplundNode*>(&f.node());
    return n ? &n->children() : nullptr;
}
const EpiProductPayload* as_epi_product(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const EpiProductNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const AffinePayload* as_affine(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const AffineNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}
const ScalePayload* as_scale(const LogConcaveFn& f) {
    auto* n = dynamic_cast<const ScaleNode*>(&f.node());
    return n ? &n->payload() : nullptr;
}

}  // namespace sjohn
