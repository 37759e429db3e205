#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sjohn/ellipsoid.hpp"
#include "sjohn/linalg.hpp"
#include "sjohn/polytope.hpp"

namespace sjohn {

struct SupInfo {
    double log_value = kNegInf;  // log ||f||
    Vec argmax;
};

struct BallBound {
    Vec center;
    double radius = 0.0;  // +inf when the level set is unbounded
};

// Exact support description, used for deterministic containment tests at
// support boundaries.
struct SupportInfo {
    enum class Kind { full, polytope, ellipsoid, unknown };
    Kind kind = Kind::unknown;
    HalfspaceList halfspaces;  // kind == polytope
    Mat A;                     // kind == ellipsoid: support = A B^d + a
    Vec a;
};

struct LinearPiece {
    Vec g;
    double b = 0.0;
};

enum class FnKind {
    gaussian,
    flat_ellipsoid,
    height_power,
    exp_polyhedral,
    gauge_square,
    min,
    asplund,
    epi_product,
    affine_pullback,
    scale,
};

// Abstract node of the function algebra. Subclasses live in fn.cpp; the
// interface is public so that hot loops can evaluate without re-validating.
class FnNode {
public:
    explicit FnNode(int d) : d_(d) {}
    virtual ~FnNode() = default;

    int dim() const { return d_; }
    virtual FnKind kind() const = 0;
    virtual double log_eval(const Vec& x) const = 0;
    virtual BallBound superlevel_ball(double log_beta) const = 0;
    virtual std::optional<HalfspaceList> superlevel_halfspaces(double) const { return std::nullopt; }
    virtual std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double) const { return std::nullopt; }
    virtual SupportInfo support() const {
        SupportInfo s;
        s.kind = SupportInfo::Kind::unknown;
        return s;
    }

    const SupInfo& sup() const {
        std::lock_guard<std::mutex> lk(mu_);
        if (!sup_) sup_ = sup_impl();
        return *sup_;
    }

protected:
    virtual SupInfo sup_impl() const = 0;

private:
    int d_;
    mutable std::mutex mu_;
    mutable std::optional<SupInfo> sup_;
};

// Immutable handle to a node of the log-concave function algebra. Evaluation
// is pure; cached quantities (sup norm) are computed lazily under a lock.
class LogConcaveFn {
public:
    LogConcaveFn() = default;
    explicit LogConcaveFn(std::shared_ptr<const FnNode> node) : node_(std::move(node)) {}

    bool valid() const { return node_ != nullptr; }
    int dim() const;
    FnKind kind() const;

    double log_eval(const Vec& x) const;
    double eval(const Vec& x) const;

    // L_inf norm and a maximizer.
    const SupInfo& sup() const;
    double norm() const { return std::exp(sup().log_value); }

    // Ball guaranteed to contain [f >= exp(log_beta)].
    BallBound superlevel_ball(double log_beta) const;

    // Exact halfspace description of [f >= exp(log_beta)] when available.
    std::optional<HalfspaceList> superlevel_halfspaces(double log_beta) const;

    // Exact ellipsoid description of [f >= exp(log_beta)] when available:
    // returns (M, m) with the set equal to M B^d + m.
    std::optional<std::pair<Mat, Vec>> superlevel_ellipsoid(double log_beta) const;

    SupportInfo support() const;

    const FnNode& node() const { return *node_; }
    std::shared_ptr<const FnNode> node_ptr() const { return node_; }

private:
    std::shared_ptr<const FnNode> node_;
};

// Constructors of the algebra.
LogConcaveFn gaussian(const Mat& A, double alpha, const Vec& a);
LogConcaveFn flat_ellipsoid(const Mat& A, double alpha, const Vec& a);
LogConcaveFn height_power(const SymEllipsoid& E, double s);
LogConcaveFn exp_polyhedral(std::vector<LinearPiece> pieces, HalfspaceList domain, int dim);
LogConcaveFn gauge_square(HalfspaceList K, int dim);
LogConcaveFn pointwise_min(std::vector<LogConcaveFn> children);
LogConcaveFn asplund(const LogConcaveFn& f, const LogConcaveFn& g);
LogConcaveFn epi_product(double lambda, const LogConcaveFn& f);
LogConcaveFn affine_pullback(const LogConcaveFn& f, const Mat& T, const Vec& t);
// Pointwise multiple gamma * f (gamma > 0); folds into leaf payloads where the
// variant supports it and wraps otherwise.
LogConcaveFn scale(double gamma, const LogConcaveFn& f);

// Superlevel set [f >= beta] for 0 < beta < ||f||.
struct SuperlevelBody {
    double beta = 0.0;
    int dim = 0;
    std::optional<HalfspaceList> halfspaces;           // exact polytope form
    std::optional<std::pair<Mat, Vec>> ellipsoid;      // exact ellipsoid form
    std::function<bool(const Vec&)> member;            // always usable
    BallBound outer;                                   // bounding ball
};

SuperlevelBody superlevel(const LogConcaveFn& f, double beta);

// Node payload accessors used by serialization and a few algorithms.
struct GaussianPayload { Mat A; double alpha; Vec a; };
struct FlatPayload { Mat A; double alpha; Vec a; };
struct HeightPowerPayload { SymEllipsoid E; double s; };
struct ExpPolyhedralPayload { std::vector<LinearPiece> pieces; HalfspaceList domain; };
struct GaugeSquarePayload { HalfspaceList K; };
struct EpiProductPayload { double lambda; LogConcaveFn child; };
struct AffinePayload { Mat T; Vec t; LogConcaveFn child; };
struct ScalePayload { double gamma; LogConcaveFn child; };

const GaussianPayload* as_gaussian(const LogConcaveFn& f);
const FlatPayload* as_flat(const LogConcaveFn& f);
const HeightPowerPayload* as_height_power(const LogConcaveFn& f);
const ExpPolyhedralPayload* as_exp_polyhedral(const LogConcaveFn& f);
const GaugeSquarePayload* as_gauge_square(const LogConcaveFn& f);
const std::vector<LogConcaveFn>* as_min(const LogConcaveFn& f);
const std::pair<LogConcaveFn, LogConcaveFn>* as_asplund(const LogConcaveFn& f);
const EpiProductPayload* as_epi_product(const LogConcaveFn& f);
const AffinePayload* as_affine(const LogConcaveFn& f);
const ScalePayload* as_scale(const LogConcaveFn& f);

}  // namespace sjohn
