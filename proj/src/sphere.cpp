#include "pflow/sphere.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace pflow {

namespace {

int hemisphere_of(double r) {
    if (r > kEquatorTol) return 1;
    if (r < -kEquatorTol) return -1;
    return 0;
}

/// Apply L_u to a lifted vector: (x, r) -> (A x + r B u, 0).
Vec lifted_generator(const LinearSystem& sys, const Vec& y, const Vec& u) {
    const int n = sys.n();
    Vec out = Vec::Zero(n + 1);
    out.head(n) = sys.A * y.head(n) + y[n] * (sys.B * u);
    return out;
}

} // namespace

SpherePoint project_to_sphere(const Vec& y, const Mat& Gp) {
    const double nrm = norm_g(y, Gp);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw PreconditionError("project_to_sphere: zero or non-finite vector");
    }
    SpherePoint s;
    s.y = y / nrm;
    s.hemisphere = hemisphere_of(s.y[y.size() - 1]);
    return s;
}

SpherePoint chart_to_sphere(const Vec& x, const Mat& Gp) {
    Vec y(x.size() + 1);
    y.head(x.size()) = x;
    y[x.size()] = 1.0;
    return project_to_sphere(y, Gp);
}

Vec sphere_to_chart(const SpherePoint& s) {
    const double r = s.r();
    if (r <= kEquatorTol) {
        throw PreconditionError(
            "sphere_to_chart: point is not strictly in the upper hemisphere");
    }
    return s.x() / r;
}

double sphere_distance(const SpherePoint& a, const SpherePoint& b, const Mat& Gp) {
    return norm_g(a.y - b.y, Gp);
}

SpherePoint sphere_exp(const SpherePoint& s, const Vec& v, const Mat& Gp) {
    return project_to_sphere(s.y + v, Gp);
}

// ---------------------------------------------------------------------------
// vector field

SphereVectorField::SphereVectorField(const LinearSystem& sys, const SpectralData& sd)
    : sys_(&sys), Gp_(lift_gram(sd.gram)) {}

Vec SphereVectorField::eval(const Vec& s, const Vec& u) const {
    const Vec Ls = lifted_generator(*sys_, s, u);
    const double q = dot_g(Ls, s, Gp_);
    return Ls - q * s;
}

Mat SphereVectorField::jacobian(const Vec& s, const Vec& u) const {
    const int N = static_cast<int>(s.size());
    const int n = N - 1;
    Mat L = Mat::Zero(N, N);
    L.topLeftCorner(n, n) = sys_->A;
    L.block(0, n, n, 1) = sys_->B * u;
    const Vec Ls = L * s;
    const double q = dot_g(Ls, s, Gp_);
    // d/ds [L s - <L s, s> s] = L - s (G' L s + L^T G' s)^T - <L s, s> I
    Mat Jm = L - q * Mat::Identity(N, N);
    const Vec w = Gp_ * Ls + L.transpose() * (Gp_ * s);
    Jm -= s * w.transpose();
    return Jm;
}

// ---------------------------------------------------------------------------
// flows

namespace {

/// Exact-lift stepping: advance the lifted representative over [0, t] with
/// per-unit renormalization.  The lifted flow is linear in (x, r), so scaling
/// never changes the projection.
SpherePoint flow_exact_lift(const LinearSystem& sys, const Mat& Gp, double t,
                            const SpherePoint& s0, const ControlSignal& u) {
    Propagator prop(sys);
    const int n = sys.n();
    LiftedState y{s0.y.head(n), s0.y[n]};
    const double dir = (t >= 0.0) ? 1.0 : -1.0;
    double remaining = std::abs(t);
    double clock = 0.0;
    auto renorm = [&]() {
        Vec z(n + 1);
        z.head(n) = y.x;
        z[n] = y.r;
        const double g = norm_g(z, Gp);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericalError("sphere_flow: lifted norm degenerated");
        }
        y.x /= g;
        y.r /= g;
    };
    while (remaining > 0.0) {
        const double dt = dir * std::min(1.0, remaining);
        std::vector<double> cuts = u.switch_times(clock, clock + dt);
        double prev = clock;
        for (double c : cuts) {
            prop.step_lifted(y, c - prev, u.value(prev + 0.5 * (c - prev)));
            prev = c;
        }
        prop.step_lifted(y, clock + dt - prev,
                         u.value(prev + 0.5 * (clock + dt - prev)));
        clock += dt;
        remaining -= std::abs(dt);
        renorm();
    }
    Vec z(n + 1);
    z.head(n) = y.x;
    z[n] = y.r;
    return project_to_sphere(z, Gp);
}

/// Cash-Karp embedded Runge-Kutta 4(5) on the sphere field with per-step
/// renormalization; integrates s' = F(s, u(t)) between control switches.
SpherePoint flow_intrinsic(const SphereVectorField& field, double t,
                           const SpherePoint& s0, const ControlSignal& u) {
    // Cash-Karp tableau (abscissae omitted: the field is autonomous per piece).
    static const double b21 = 0.2;
    static const double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static const double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0,
                        b54 = 35.0 / 27.0;
    static const double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0,
                        b63 = 575.0 / 13824.0, b64 = 44275.0 / 110592.0,
                        b65 = 253.0 / 4096.0;
    static const double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                        c6 = 512.0 / 1771.0;
    static const double d1 = 2825.0 / 27648.0, d3 = 18575.0 / 48384.0,
                        d4 = 13525.0 / 55296.0, d5 = 277.0 / 14336.0,
                        d6 = 0.25;
    constexpr double kAbsTol = 1e-10;

    const Mat& Gp = field.lifted_gram();
    Vec s = s0.y;
    const double dir = (t >= 0.0) ? 1.0 : -1.0;

    auto integrate_piece = [&](double t0, double t1, const Vec& uv) {
        double clock = t0;
        double h = dir * std::min(0.1, std::abs(t1 - t0));
        int guard = 0;
        while (dir * (t1 - clock) > 1e-14) {
            if (++guard > 2000000) {
                throw NumericalError("sphere_flow: intrinsic integrator stalled");
            }
            if (dir * (clock + h - t1) > 0.0) h = t1 - clock;
            const Vec k1 = field.eval(s, uv);
            const Vec k2 = field.eval(s + h * (b21 * k1), uv);
            const Vec k3 = field.eval(s + h * (b31 * k1 + b32 * k2), uv);
            const Vec k4 = field.eval(s + h * (b41 * k1 + b42 * k2 + b43 * k3), uv);
            const Vec k5 =
                field.eval(s + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4), uv);
            const Vec k6 = field.eval(
                s + h * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5), uv);
            const Vec s5 = s + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
            const Vec s4 =
                s + h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6);
            const double err = norm_g(s5 - s4, Gp);
            if (err <= kAbsTol || std::abs(h) < 1e-13) {
                clock += h;
                s = s5 / norm_g(s5, Gp);
                const double grow =
                    0.9 * std::pow(kAbsTol / std::max(err, 1e-300), 0.2);
                h *= std::clamp(grow, 0.2, 5.0);
            } else {
                const double shrink =
                    0.9 * std::pow(kAbsTol / err, 0.25);
                h *= std::clamp(shrink, 0.1, 0.9);
            }
        }
    };

    std::vector<double> cuts = u.switch_times(0.0, t);
    double prev = 0.0;
    for (double c : cuts) {
        integrate_piece(prev, c, u.value(prev + 0.5 * (c - prev)));
        prev = c;
    }
    integrate_piece(prev, t, u.value(prev + 0.5 * (t - prev)));
    return project_to_sphere(s, Gp);
}

} // namespace

SpherePoint sphere_flow(const LinearSystem& sys, const SpectralData& sd, double t,
                        const SpherePoint& s0, const ControlSignal& u,
                        SphereBackend backend) {
    const Mat Gp = lift_gram(sd.gram);
    if (std::abs(norm_g(s0.y, Gp) - 1.0) > 1e-9) {
        throw PreconditionError("sphere_flow: start point is not on the sphere");
    }
    if (t == 0.0) return project_to_sphere(s0.y, Gp);
    if (backend == SphereBackend::kIntrinsic &&
        std::abs(s0.r()) > kEquatorTol) {
        SphereVectorField field(sys, sd);
        return flow_intrinsic(field, t, s0, u);
    }
    // Exact lift: always valid; mandatory within kEquatorTol of the equator.
    return flow_exact_lift(sys, Gp, t, s0, u);
}

std::vector<SphereSample> sphere_trajectory(const LinearSystem& sys,
                                            const SpectralData& sd,
                                            const SpherePoint& s0,
                                            const ControlSignal& u, double t,
                                            double dt) {
    if (dt <= 0.0 || t == 0.0) {
        throw PreconditionError("sphere_trajectory: need dt > 0 and t != 0");
    }
    const Mat Gp = lift_gram(sd.gram);
    std::vector<SphereSample> out;
    SpherePoint s = project_to_sphere(s0.y, Gp);
    out.push_back({0.0, s});
    const double dir = (t > 0.0) ? 1.0 : -1.0;
    const int steps = static_cast<int>(std::ceil(std::abs(t) / dt - 1e-12));
    double clock = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double target = (k == steps) ? t : dir * k * dt;
        s = sphere_flow(sys, sd, target - clock, s, shift(u, clock));
        clock = target;
        out.push_back({clock, s});
    }
    return out;
}

// ---------------------------------------------------------------------------
// equilibria at infinity

std::vector<EquatorEquilibrium> equilibria_at_infinity(const LinearSystem& sys,
                                                       const SpectralData& sd) {
    const Mat Gp = lift_gram(sd.gram);
    const int n = sys.n();
    std::vector<EquatorEquilibrium> out;
    Eigen::EigenSolver<Mat> solver(sys.A);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("equilibria_at_infinity: eigenvalue iteration failed");
    }
    std::vector<double> seen;
    for (int k = 0; k < n; ++k) {
        const std::complex<double> mu = solver.eigenvalues()[k];
        if (std::abs(mu.imag()) > 1e-10) continue; // complex pair: no equilibrium
        const double lam = mu.real();
        bool dup = false;
        for (double s : seen) dup = dup || std::abs(s - lam) < 1e-9;
        if (dup) continue;
        seen.push_back(lam);
        // real eigenspace ker(A - lam I), gram-orthonormalized
        Mat K = sys.A - lam * Mat::Identity(n, n);
        Eigen::JacobiSVD<Mat> svd(K, Eigen::ComputeFullV);
        int d = 0;
        const double thresh = 1e-9 * std::max(1.0, K.norm());
        for (int i = 0; i < n; ++i) {
            if (svd.singularValues()[i] < thresh) ++d;
        }
        d = std::max(d, 1);
        for (int j = 0; j < d; ++j) {
            Vec v = svd.matrixV().col(n - 1 - j);
            Vec y = Vec::Zero(n + 1);
            y.head(n) = v;
            SpherePoint plus = project_to_sphere(y, Gp);
            SpherePoint minus = project_to_sphere((-y).eval(), Gp);
            out.push_back({plus, lam});
            out.push_back({minus, lam});
        }
    }
    return out;
}

} // namespace pflow
