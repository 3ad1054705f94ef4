/**
 * @file sphere.hpp
 * @brief Compactification of the lifted system on the unit sphere of R^{n+1}
 *        (under the adapted inner product): radial projection, the upper
 *        hemisphere chart, the induced sphere vector field, sphere flows with
 *        an exact-lift backend and an intrinsic adaptive integrator, and the
 *        equilibria on the equator (the sphere at infinity).
 */
#pragma once

#include "pflow/system.hpp"

namespace pflow {

/// Points with |last coordinate| below this are treated as equator points;
/// near the equator the exact-lift backend is mandatory.
inline constexpr double kEquatorTol = 1e-9;

/**
 * @brief Point on the unit sphere of (R^{n+1}, <.,.>_G'):  <y, y>_G' = 1 to
 *        1e-12.  hemisphere: +1 upper (r > tol), 0 equator, -1 lower.
 */
struct SpherePoint {
    Vec y;              ///< coordinates in R^{n+1}
    int hemisphere = 0; ///< +1 / 0 / -1

    int n() const { return static_cast<int>(y.size()) - 1; }
    double r() const { return y[y.size() - 1]; }
    Vec x() const { return y.head(y.size() - 1); }
};

/// Radial projection y -> y / ||y||_G' with hemisphere tag; y must be nonzero.
SpherePoint project_to_sphere(const Vec& y, const Mat& lifted_gram);

/// Chart embedding of R^n onto the upper hemisphere: x -> (x, 1)/||(x, 1)||.
SpherePoint chart_to_sphere(const Vec& x, const Mat& lifted_gram);

/// Inverse chart (y_1, ..., y_{n+1}) -> (y_1/y_{n+1}, ..., y_n/y_{n+1});
/// requires the point to lie strictly in the upper hemisphere.
Vec sphere_to_chart(const SpherePoint& s);

/// Chordal distance ||a - b||_G' between sphere points.
double sphere_distance(const SpherePoint& a, const SpherePoint& b,
                       const Mat& lifted_gram);

/// Sphere exponential used for seeding: exp_s(v) = project(s + v).
SpherePoint sphere_exp(const SpherePoint& s, const Vec& v, const Mat& lifted_gram);

/**
 * @brief The control-affine vector field induced on the sphere:
 *        F_u(s) = L_u s - <L_u s, s>_G' s with L_u (x, r) = (A x + r B u, 0).
 *        Tangency <F_u(s), s>_G' = 0 holds identically, so the equator
 *        (r = 0) is invariant and controls act trivially on it.
 */
class SphereVectorField {
public:
    SphereVectorField(const LinearSystem& sys, const SpectralData& sd);

    Vec eval(const Vec& s, const Vec& u) const;
    /// Derivative of eval in s (for the variational equation).
    Mat jacobian(const Vec& s, const Vec& u) const;
    const Mat& lifted_gram() const { return Gp_; }

private:
    const LinearSystem* sys_;
    Mat Gp_;
};

enum class SphereBackend {
    kExactLift, ///< lifted exact affine steps, renormalized each unit of time
    kIntrinsic  ///< adaptive embedded RK on the sphere, renormalized per step
};

/**
 * @brief Flow of the induced sphere system from s0 over time t (either sign).
 *
 * kExactLift is exact up to the matrix exponential and valid for all t; the
 * projection is scale-invariant, so states are renormalized at unit steps to
 * avoid overflow.  kIntrinsic integrates the sphere field with an embedded
 * RK4(5) (absolute tolerance 1e-10, renormalization each accepted step);
 * within kEquatorTol of the equator it defers to the exact lift.
 */
SpherePoint sphere_flow(const LinearSystem& sys, const SpectralData& sd,
                        double t, const SpherePoint& s0, const ControlSignal& u,
                        SphereBackend backend = SphereBackend::kExactLift);

/// One sampled trajectory point.
struct SphereSample {
    double t;
    SpherePoint s;
};

/// Equally spaced samples of the sphere flow on [0, t] (shares one stepping
/// engine across samples; exact-lift backend).
std::vector<SphereSample> sphere_trajectory(const LinearSystem& sys,
                                            const SpectralData& sd,
                                            const SpherePoint& s0,
                                            const ControlSignal& u, double t,
                                            double dt);

/// Equilibrium of the uncontrolled flow on the equator: a projected real
/// eigendirection of A, tagged with its eigenvalue.
struct EquatorEquilibrium {
    SpherePoint s;
    double eigenvalue;
};

/**
 * @brief All equilibria of the sphere system on the equator: +/- v/||v|| for
 *        every real eigendirection v of A.  (Controls vanish there, so these
 *        are equilibria of the full control system; eigenspaces of dimension
 *        >= 2 contribute a whole sphere of equilibria, represented by a
 *        gram-orthonormal basis worth of +/- directions.)
 */
std::vector<EquatorEquilibrium> equilibria_at_infinity(const LinearSystem& sys,
                                                       const SpectralData& sd);

} // namespace pflow
