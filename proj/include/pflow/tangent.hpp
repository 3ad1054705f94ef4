/**
 * @file tangent.hpp
 * @brief Linearization of the sphere flow: tangent vectors and the orthogonal
 *        tangent projection, the closed-form equator cocycle, the general
 *        linearized cocycle (variational or exact-lift), invariant subbundle
 *        frames over equator base points with their exact growth rates,
 *        finite-time exponent estimation, and stable-direction convergence
 *        diagnostics.
 */
#pragma once

#include "pflow/sphere.hpp"

namespace pflow {

/// Tangent vector at a sphere point: <v, base>_G' = 0.
struct TangentVector {
    Vec base; ///< unit sphere point (R^{n+1})
    Vec v;    ///< tangent coordinates (R^{n+1})
};

/**
 * @brief Derivative of the radial projection at y != 0 applied to v:
 *        (pi(y), ||y||^{-1} (v - ||y||^{-2} <v, y>_G' y)).
 *        An orthogonal projection onto the tangent space scaled by 1/||y||.
 */
TangentVector tangent_project(const Vec& y, const Vec& v, const Mat& lifted_gram);

/**
 * @brief Closed-form derivative of the projected lifted flow at an equator
 *        point s = (x, 0) applied to the tangent vector w = (v, v_r):
 *
 *   D(t) w = ||e^{At}x||^{-1} (e^{At}v + v_r I_t, v_r)
 *            - ||e^{At}x||^{-3} (e^{At}x, 0) <e^{At}v + v_r I_t, e^{At}x>_G,
 *
 * with I_t = \int_0^t e^{A(t-s)} B u(s) ds.  Norms and inner products are the
 * adapted ones.  Valid for |t| small enough that e^{At} is representable; for
 * long horizons use exponent_estimate, which renormalizes underway.
 */
TangentVector linearized_cocycle_equator(const LinearSystem& sys,
                                         const SpectralData& sd, double t,
                                         const SpherePoint& s,
                                         const ControlSignal& u,
                                         const TangentVector& w);

enum class CocycleBackend {
    kVariational, ///< integrate the variational equation with the intrinsic RK
    kExactLift    ///< propagate through the lifted linear flow, project stepwise
};

/**
 * @brief Derivative of the time-t sphere flow at any sphere point, applied to
 *        a tangent vector.  The variational backend integrates
 *        v' = DF(s(t), u(t)) v alongside the intrinsic sphere integrator; the
 *        exact-lift backend composes per-step derivatives of the projected
 *        lifted flow.  Both agree with linearized_cocycle_equator to 1e-5 on
 *        the equator.
 */
TangentVector linearized_cocycle_general(const LinearSystem& sys,
                                         const SpectralData& sd, double t,
                                         const SpherePoint& s,
                                         const ControlSignal& u,
                                         const TangentVector& w,
                                         CocycleBackend backend =
                                             CocycleBackend::kVariational);

/**
 * @brief Central finite-difference approximation of the same derivative
 *        (verification mode): (phi_t(exp_s(h w)) - phi_t(exp_s(-h w))) / 2h.
 */
Vec linearized_cocycle_fd(const LinearSystem& sys, const SpectralData& sd,
                          double t, const SpherePoint& s, const ControlSignal& u,
                          const TangentVector& w, double fd_eps = 1e-6);

/// Frame (basis) of one invariant subbundle of the linearized flow over an
/// equator base point, with its exact asymptotic growth rate.
struct SubbundleFrame {
    std::string label;           ///< "V<k>" (1-based), "Vc", or "Vi0"
    Mat basis;                   ///< (n+1) x dim tangent columns at the base
    double theoretical_exponent; ///< exact Lyapunov exponent of the subbundle
};

/**
 * @brief Frames of the invariant subbundles of the linearized sphere flow
 *        over a base point s on the Lyapunov sphere at infinity of
 *        spaces[i0].
 *
 * Layout (dimensions sum to n):
 *  - "V<k>" for every other nonzero exponent: columns (w, 0), w a basis of
 *    that Lyapunov space; rate exponents[k-1] - exponents[i0];
 *  - "Vc": tangent projections of (y, 0) for center-space basis vectors y
 *    plus of (e(u,0), 1) with e the bounded solution; rate -exponents[i0];
 *  - "Vi0" (only if dim spaces[i0] > 1): the gram-orthocomplement of the base
 *    direction inside spaces[i0], columns (w, 0); rate 0.
 *
 * Numbered labels count the emitting spaces in decreasing-exponent order: a
 * space with nonzero exponent takes the next number as "V<k>"; the base space
 * takes a slot (as "Vi0") only when it emits a frame, i.e. when its dimension
 * exceeds 1; the center space emits into "Vc" and takes no number.
 *
 * Preconditions: exponents[i0] != 0; s on the equator with x-part in
 * spaces[i0] (checked to 1e-8); throws PreconditionError otherwise.
 */
std::vector<SubbundleFrame> selgrade_frames(const LinearSystem& sys,
                                            const SpectralData& sd, int i0,
                                            const SpherePoint& s,
                                            const ControlSignal& u);

/**
 * @brief Supremal growth rate of the stable part of the subbundle
 *        decomposition over the i0 sphere at infinity, for exponents[i0] > 0:
 *        max({lambda_i : lambda_i in (0, lambda_i0)} united {0}) - lambda_i0.
 *        Exact (computed from the exponent list, not estimated).
 */
double stable_bundle_rate(const SpectralData& sd, int i0);

/// Raw renormalized log-growth accumulation along a trajectory.
struct ExponentSeries {
    std::vector<double> times;  ///< signed times 0, +/-1, ..., T
    std::vector<double> cumlog; ///< accumulated log growth of the tangent vector
};

/**
 * @brief Accumulate the log growth of the linearized cocycle applied to w
 *        along the trajectory of s, at unit renormalization steps (exact-lift
 *        propagation), up to signed time T.
 */
ExponentSeries exponent_series(const LinearSystem& sys, const SpectralData& sd,
                               const SpherePoint& s, const ControlSignal& u,
                               const Vec& w, double T);

/**
 * @brief Finite-time Lyapunov exponent estimate for tangent vector w at s.
 *
 * With burn_in_fraction = 0 this is the plain (1/T) log of the accumulated
 * growth.  The default reports the least-squares slope of the accumulated
 * log growth over the trailing window |t| >= burn_in_fraction * |T|, which
 * has the same T -> infinity limit but suppresses the O(log T / T) bias that
 * polynomial (defective-eigenvalue) factors inflict on the plain quotient.
 */
double exponent_estimate(const LinearSystem& sys, const SpectralData& sd,
                         const SpherePoint& s, const ControlSignal& u,
                         const Vec& w, double T, double burn_in_fraction = 0.8);

/// Largest column-wise exponent_estimate over a frame.
double frame_exponent_estimate(const LinearSystem& sys, const SpectralData& sd,
                               const SpherePoint& s, const ControlSignal& u,
                               const SubbundleFrame& frame, double T,
                               double burn_in_fraction = 0.8);

/// Weighted distance required below this at the end time for "converged".
inline constexpr double kConvergedTol = 1e-3;
/// Chart preimage norm that must be exceeded for "escaped to infinity".
inline constexpr double kEscapeNorm = 1e3;

/// e^{-alpha t} d(trajectory(a), trajectory(b)) sampled at unit times on
/// [0, T]; chart_norm_a tracks ||chart preimage of trajectory(a)|| (the plane
/// trajectory of its chart point), or -1 when a starts on the equator.
struct WeightedDistanceSeries {
    std::vector<double> times;
    std::vector<double> weighted;
    std::vector<double> chart_norm_a;
};

WeightedDistanceSeries weighted_distance_series(const LinearSystem& sys,
                                                const SpectralData& sd,
                                                const SpherePoint& a,
                                                const SpherePoint& b,
                                                const ControlSignal& u,
                                                double alpha, double T);

/// Outcome of the stable-direction convergence check for one seed.
struct ConvergenceCase {
    WeightedDistanceSeries series;
    bool decreasing_after_burn_in = false; ///< weighted distance monotone past burn-in
    double final_weighted = 0.0;           ///< weighted distance at T
    double max_chart_norm = -1.0;          ///< sup ||plane trajectory||, -1 if equator seed
};

/// Aggregate result of stable_convergence_check.
struct ConvergenceReport {
    std::vector<ConvergenceCase> cases;
    double stable_rate = 0.0;  ///< exact supremal rate of the stable bundle
    bool converged = false;    ///< every case decreasing and final < kConvergedTol
    bool escaped = false;      ///< every upper-hemisphere seed exceeded kEscapeNorm
    bool inconclusive = false; ///< some case had a non-monotone tail
    std::uint64_t seed = 0;    ///< generator seed used for the displacements
};

/**
 * @brief Verify stable-manifold behavior near a base point s0 over spaces[i0].
 *
 * Seeds are sphere-exp displacements of size delta from s0 along random unit
 * combinations of the stable frame columns.  For each seed the series
 * e^{-alpha t} d(phi_t(seed), phi_t(s0)) is sampled at unit times up to T and
 * must decrease beyond a short burn-in and end below kConvergedTol; seeds on
 * the upper hemisphere must additionally have their plane (chart) trajectory
 * norm exceed kEscapeNorm by time T.  Requires exponents[i0] > 0 and
 * alpha in (stable rate, 0); delta = 0 yields identically zero distances.
 */
ConvergenceReport stable_convergence_check(const LinearSystem& sys,
                                           const SpectralData& sd, int i0,
                                           const SpherePoint& s0,
                                           const ControlSignal& u,
                                           const Mat& stable_basis,
                                           double delta, double alpha, double T,
                                           int num_seeds = 5,
                                           std::uint64_t seed = 20240517);

} // namespace pflow
