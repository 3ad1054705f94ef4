/**
 * @file system.hpp
 * @brief Linear control systems x' = A x + B u with bounded controls, their
 *        piecewise-constant control signals, the exact (variation-of-constants)
 *        flow, the lifted flow on R^{n+1}, the unique bounded solution of the
 *        hyperbolic part, and finite-time growth-rate estimates.
 */
#pragma once

#include "pflow/spectral.hpp"

#include <functional>
#include <optional>
#include <unordered_map>

namespace pflow {

/**
 * @brief Compact convex set of admissible control values containing 0 in its
 *        interior.  Boxes are first-class; general polytopes are represented
 *        by their vertex list.
 */
class ControlRange {
public:
    /// Box [lo_1, hi_1] x ... x [lo_m, hi_m]; requires lo_i < 0 < hi_i.
    static ControlRange box(const Mat& bounds);
    /// Convex hull of the given vertices; 0 must lie strictly inside.
    static ControlRange polytope(const std::vector<Vec>& vertices, int dim);

    int dim() const { return dim_; }
    bool is_box() const { return is_box_; }
    const Mat& bounds() const; ///< m x 2 (lo, hi); only valid for boxes
    /// Extreme points (box corners or the stored polytope vertices).
    const std::vector<Vec>& vertices() const { return vertices_; }
    /// Largest |u_i| over the range (used for truncation bounds).
    double max_norm() const;
    /// Evenly spaced per-axis sample including 0 and the extremes (boxes).
    std::vector<Vec> grid_sample(int per_axis) const;

private:
    ControlRange() = default;
    int dim_ = 0;
    bool is_box_ = false;
    Mat bounds_;
    std::vector<Vec> vertices_;
};

/// State of the lifted system on R^{n+1}: (x, r) with r' = 0.
struct LiftedState {
    Vec x;
    double r = 0.0;
};

/**
 * @brief x' = A x + B u, u(t) in the control range.  Validates dimensions:
 *        A square n x n, B is n x m, range dimension m.
 */
struct LinearSystem {
    Mat A;
    Mat B;
    ControlRange range;

    LinearSystem(Mat A_, Mat B_, ControlRange range_);
    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

/**
 * @brief Piecewise-constant control signal.
 *
 * value(t) = values[k] on [breakpoints[k], breakpoints[k+1]) with constant
 * extension: values.front() before the first breakpoint and values.back()
 * from the last breakpoint on.  An optional period p repeats the pattern:
 * value(t) = value(breakpoints.front() + fmod positive remainder).
 */
class ControlSignal {
public:
    ControlSignal() = default;
    ControlSignal(std::vector<double> breakpoints, std::vector<Vec> values,
                  std::optional<double> period = std::nullopt);

    static ControlSignal constant(const Vec& u);

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Vec>& values() const { return values_; }
    std::optional<double> period() const { return period_; }
    int dim() const { return values_.empty() ? 0 : static_cast<int>(values_[0].size()); }

    Vec value(double t) const;

    /// Times in the open interval (t0, t1) (or (t1, t0)) where the signal can
    /// switch, sorted in traversal order from t0 towards t1.
    std::vector<double> switch_times(double t0, double t1) const;

private:
    std::vector<double> breakpoints_;
    std::vector<Vec> values_;
    std::optional<double> period_;
};

/// Time shift: shift(u, s)(t) = u(s + t).
ControlSignal shift(const ControlSignal& u, double s);

/**
 * @brief Exact stepping engine for one system: caches the matrices
 *        (e^{A dt}, \int_0^dt e^{A s} ds B) per step length.  All flows in the
 *        library reduce to these exact affine steps, valid for dt of either
 *        sign, so trajectories carry no time-discretization error beyond the
 *        matrix exponential itself.
 */
class Propagator {
public:
    explicit Propagator(const LinearSystem& sys) : sys_(&sys) {}

    /// x <- e^{A dt} x + scale * (\int_0^dt e^{A s} ds) B u
    void step(Vec& x, double dt, const Vec& u, double scale = 1.0) const;

    /// Exact step of the lifted pair (x, r):  x' = A x + r B u, r' = 0.
    void step_lifted(LiftedState& y, double dt, const Vec& u) const {
        step(y.x, dt, u, y.r);
    }

    const LinearSystem& system() const { return *sys_; }

private:
    struct Cached {
        Mat E;
        Mat JB;
    };
    const Cached& matrices(double dt) const;
    const LinearSystem* sys_;
    mutable std::unordered_map<long long, Cached> cache_;
};

/**
 * @brief Solution of x' = A x + B u(t) from x0 at time 0, evaluated at time t
 *        (either sign), via exact variation of constants per constant piece.
 */
Vec flow(const LinearSystem& sys, double t, const Vec& x0, const ControlSignal& u);

/**
 * @brief Lifted flow on R^{n+1}: (x, r) evolves as x' = A x + r B u, r' = 0;
 *        r = 0 reproduces the uncontrolled linear flow, r = 1 the control
 *        system.  Linear (hence homogeneous) in (x, r).
 */
LiftedState lifted_flow(const LinearSystem& sys, double t, const LiftedState& y0,
                        const ControlSignal& u);

/// Result of the bounded-solution integral with its truncation error bound.
struct BoundedSolution {
    Vec value;               ///< e(u, t)
    double truncation_bound; ///< rigorous bound on the discarded tails
    double horizon;          ///< H actually used
};

/**
 * @brief The unique bounded solution e(u, t) of y' = A P_h y + P_h B u(t)
 *        (P_h the hyperbolic projection): the integral of decaying
 *        exponentials against u over (-inf, t] (stable part) minus [t, +inf)
 *        (unstable part), truncated at |s - t| <= H.
 *
 * Computed per Lyapunov space in its stored gram-orthonormal basis so only
 * decaying exponentials are evaluated.  Default horizon H = 40 / alpha with
 * alpha the smallest nonzero |exponent|.  Requires at least one nonzero
 * exponent; center components of B u are ignored by construction.
 */
BoundedSolution bounded_solution(const LinearSystem& sys, const SpectralData& sd,
                                 const ControlSignal& u, double t,
                                 double horizon = 0.0);

/**
 * @brief Finite-time growth rate (1/t) log ||phi(t, y0, u)|| of the lifted
 *        flow, with renormalization at unit steps to avoid overflow.
 *        Norm taken in the lifted adapted inner product.
 */
double lifted_exponent(const LinearSystem& sys, const SpectralData& sd,
                       const LiftedState& y0, const ControlSignal& u, double t);

} // namespace pflow
