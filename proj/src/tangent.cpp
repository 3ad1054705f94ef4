/**
 * @file tangent.cpp
 * @brief Linearized sphere-flow machinery: tangent projection, equator and
 *        general cocycles, Selgrade frames, exponent estimation, convergence
 *        verification.
 */
#include "pflow/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pflow {

namespace {

Vec cat(const LiftedState& y, int n) {
    Vec z(n + 1);
    z.head(n) = y.x;
    z[n] = y.r;
    return z;
}

/// Advance a (state, tangent) pair of lifted vectors over [clock, clock + dt]
/// through the control's constant pieces.  The lifted flow is linear in
/// (x, r), so the tangent obeys the identical piecewise-exact update.
void advance_pair(const Propagator& prop, const ControlSignal& u, double clock,
                  double dt, LiftedState& y, LiftedState& w) {
    if (dt == 0.0) return;
    const double t1 = clock + dt;
    std::vector<double> cuts = u.switch_times(clock, t1);
    double prev = clock;
    auto apply = [&](double a, double b) {
        const Vec uv = u.value(a + 0.5 * (b - a));
        prop.step_lifted(y, b - a, uv);
        prop.step_lifted(w, b - a, uv);
    };
    for (double c : cuts) {
        apply(prev, c);
        prev = c;
    }
    apply(prev, t1);
}

void check_on_sphere(const Vec& y, const Mat& Gp, const char* who) {
    if (std::abs(norm_g(y, Gp) - 1.0) > 1e-9) {
        throw PreconditionError(std::string(who) + ": base point is not on the sphere");
    }
}

void check_tangent(const Vec& v, const Vec& y, const Mat& Gp, const char* who) {
    if (std::abs(dot_g(v, y, Gp)) > 1e-8 * std::max(1.0, norm_g(v, Gp))) {
        throw PreconditionError(std::string(who) + ": vector is not tangent at the base point");
    }
}

/// One adaptive Cash-Karp 4(5) sweep of z' = f(z) from t0 to t1 (autonomous
/// per constant-control piece).  err_norm scales the embedded error estimate;
/// post renormalizes the accepted state.
void cash_karp_sweep(const std::function<Vec(const Vec&)>& f, Vec& z, double t0,
                     double t1, const std::function<double(const Vec&, const Vec&)>& err_norm,
                     const std::function<void(Vec&)>& post) {
    constexpr double kAbsTol = 1e-10;
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 3.0 / 10.0, a42 = -9.0 / 10.0, a43 = 6.0 / 5.0;
    constexpr double a51 = -11.0 / 54.0, a52 = 5.0 / 2.0, a53 = -70.0 / 27.0,
                     a54 = 35.0 / 27.0;
    constexpr double a61 = 1631.0 / 55296.0, a62 = 175.0 / 512.0,
                     a63 = 575.0 / 13824.0, a64 = 44275.0 / 110592.0,
                     a65 = 253.0 / 4096.0;
    constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                     c6 = 512.0 / 1771.0;
    constexpr double d1 = 2825.0 / 27648.0, d3 = 18575.0 / 48384.0,
                     d4 = 13525.0 / 55296.0, d5 = 277.0 / 14336.0, d6 = 0.25;

    if (t1 == t0) return;
    const double dir = (t1 > t0) ? 1.0 : -1.0;
    double clock = t0;
    double h = dir * std::min(0.1, std::abs(t1 - t0));
    long guard = 0;
    while (dir * (t1 - clock) > 1e-13) {
        if (++guard > 2000000) {
            throw NumericalError("cash_karp_sweep: step limit exceeded");
        }
        if (dir * (clock + h) > dir * t1) h = t1 - clock;
        const Vec k1 = f(z);
        const Vec k2 = f(z + h * (a21 * k1));
        const Vec k3 = f(z + h * (a31 * k1 + a32 * k2));
        const Vec k4 = f(z + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = f(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 =
            f(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec z5 = z + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
        const Vec z4 = z + h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6);
        const double err = err_norm(z5 - z4, z5);
        if (err <= kAbsTol || std::abs(h) < 1e-13) {
            clock += h;
            z = z5;
            post(z);
            const double grow = 0.9 * std::pow(kAbsTol / std::max(err, 1e-300), 0.2);
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            const double shrink = 0.9 * std::pow(kAbsTol / err, 0.25);
            h *= std::clamp(shrink, 0.1, 0.9);
        }
    }
}

/// Derivative of the projected lifted flow by co-rescaled pair propagation:
/// state and tangent move through the same piecewise-exact lifted steps and
/// are divided by the state norm after each unit step.  The radial scaling of
/// the projection derivative makes this rescaling exact, so the returned
/// vector is the true derivative value (no hidden normalization).
TangentVector cocycle_exact(const LinearSystem& sys, const Mat& Gp, double t,
                            const Vec& y0, const Vec& w0, const ControlSignal& u) {
    const int n = sys.n();
    Propagator prop(sys);
    LiftedState y{y0.head(n), y0[n]};
    LiftedState w{w0.head(n), w0[n]};
    const double dir = (t >= 0.0) ? 1.0 : -1.0;
    double remaining = std::abs(t);
    double clock = 0.0;
    while (remaining > 1e-12) {
        const double dt = dir * std::min(1.0, remaining);
        advance_pair(prop, u, clock, dt, y, w);
        clock += dt;
        remaining -= std::abs(dt);
        const double g = norm_g(cat(y, n), Gp);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericalError("linearized_cocycle: lifted norm degenerated");
        }
        y.x /= g;
        y.r /= g;
        w.x /= g;
        w.r /= g;
    }
    Vec yv = cat(y, n);
    Vec wv = cat(w, n);
    TangentVector out;
    out.base = yv / norm_g(yv, Gp);
    out.v = wv - dot_g(wv, out.base, Gp) * out.base;
    return out;
}

} // namespace

TangentVector tangent_project(const Vec& y, const Vec& v, const Mat& lifted_gram) {
    if (y.size() != v.size()) {
        throw PreconditionError("tangent_project: dimension mismatch");
    }
    const double ny = norm_g(y, lifted_gram);
    if (!(ny > 1e-14)) {
        throw PreconditionError("tangent_project: base point is degenerate");
    }
    TangentVector out;
    out.base = y / ny;
    out.v = (v - (dot_g(v, y, lifted_gram) / (ny * ny)) * y) / ny;
    return out;
}

TangentVector linearized_cocycle_equator(const LinearSystem& sys,
                                         const SpectralData& sd, double t,
                                         const SpherePoint& s,
                                         const ControlSignal& u,
                                         const TangentVector& w) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    if (static_cast<int>(s.y.size()) != n + 1 ||
        static_cast<int>(w.v.size()) != n + 1) {
        throw PreconditionError("linearized_cocycle_equator: dimension mismatch");
    }
    if (std::abs(s.r()) > kEquatorTol) {
        throw PreconditionError(
            "linearized_cocycle_equator: base point is not on the equator");
    }
    check_on_sphere(s.y, Gp, "linearized_cocycle_equator");
    check_tangent(w.v, s.y, Gp, "linearized_cocycle_equator");
    return cocycle_exact(sys, Gp, t, s.y, w.v, u);
}

TangentVector linearized_cocycle_general(const LinearSystem& sys,
                                         const SpectralData& sd, double t,
                                         const SpherePoint& s,
                                         const ControlSignal& u,
                                         const TangentVector& w,
                                         CocycleBackend backend) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    if (static_cast<int>(s.y.size()) != n + 1 ||
        static_cast<int>(w.v.size()) != n + 1) {
        throw PreconditionError("linearized_cocycle_general: dimension mismatch");
    }
    check_on_sphere(s.y, Gp, "linearized_cocycle_general");
    check_tangent(w.v, s.y, Gp, "linearized_cocycle_general");

    if (backend == CocycleBackend::kExactLift) {
        return cocycle_exact(sys, Gp, t, s.y, w.v, u);
    }

    SphereVectorField field(sys, sd);
    Vec z(2 * (n + 1));
    z.head(n + 1) = s.y;
    z.tail(n + 1) = w.v;

    auto advance_piece = [&](double a, double b, const Vec& uv) {
        auto f = [&](const Vec& zz) {
            Vec dz(2 * (n + 1));
            const Vec sp = zz.head(n + 1);
            dz.head(n + 1) = field.eval(sp, uv);
            dz.tail(n + 1) = field.jacobian(sp, uv) * zz.tail(n + 1);
            return dz;
        };
        auto err_norm = [&](const Vec& e, const Vec& zz) {
            const double es = norm_g(e.head(n + 1), Gp);
            const double ev = norm_g(e.tail(n + 1), Gp) /
                              std::max(1.0, norm_g(zz.tail(n + 1), Gp));
            return std::max(es, ev);
        };
        auto post = [&](Vec& zz) {
            Vec sp = zz.head(n + 1);
            const double g = norm_g(sp, Gp);
            if (!(g > 0.0) || !std::isfinite(g)) {
                throw NumericalError(
                    "linearized_cocycle_general: sphere point degenerated");
            }
            sp /= g;
            Vec vp = zz.tail(n + 1);
            vp -= dot_g(vp, sp, Gp) * sp;
            zz.head(n + 1) = sp;
            zz.tail(n + 1) = vp;
        };
        cash_karp_sweep(f, z, a, b, err_norm, post);
    };

    std::vector<double> cuts = u.switch_times(0.0, t);
    double prev = 0.0;
    for (double c : cuts) {
        advance_piece(prev, c, u.value(prev + 0.5 * (c - prev)));
        prev = c;
    }
    advance_piece(prev, t, u.value(prev + 0.5 * (t - prev)));

    TangentVector out;
    out.base = z.head(n + 1) / norm_g(z.head(n + 1), Gp);
    out.v = z.tail(n + 1) - dot_g(z.tail(n + 1), out.base, Gp) * out.base;
    return out;
}

Vec linearized_cocycle_fd(const LinearSystem& sys, const SpectralData& sd,
                          double t, const SpherePoint& s, const ControlSignal& u,
                          const TangentVector& w, double fd_eps) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    if (!(fd_eps > 0.0)) {
        throw PreconditionError("linearized_cocycle_fd: step must be positive");
    }
    const double nw = norm_g(w.v, Gp);
    if (nw == 0.0) return Vec::Zero(n + 1);
    const Vec dir = w.v / nw;
    const SpherePoint sp = sphere_exp(s, fd_eps * dir, Gp);
    const SpherePoint sm = sphere_exp(s, (-fd_eps) * dir, Gp);
    const SpherePoint fp = sphere_flow(sys, sd, t, sp, u, SphereBackend::kExactLift);
    const SpherePoint fm = sphere_flow(sys, sd, t, sm, u, SphereBackend::kExactLift);
    return (fp.y - fm.y) * (nw / (2.0 * fd_eps));
}

std::vector<SubbundleFrame> selgrade_frames(const LinearSystem& sys,
                                            const SpectralData& sd, int i0,
                                            const SpherePoint& s,
                                            const ControlSignal& u) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    if (i0 < 0 || i0 >= sd.space_count()) {
        throw PreconditionError("selgrade_frames: space index out of range");
    }
    if (i0 == sd.center_index) {
        throw PreconditionError("selgrade_frames: base exponent must be nonzero");
    }
    if (static_cast<int>(s.y.size()) != n + 1) {
        throw PreconditionError("selgrade_frames: dimension mismatch");
    }
    if (std::abs(s.r()) > kEquatorTol) {
        throw PreconditionError("selgrade_frames: base point must lie on the equator");
    }
    check_on_sphere(s.y, Gp, "selgrade_frames");
    const Vec x = s.x();
    const Vec resid = x - sd.proj_space(i0) * x;
    if (norm_g(resid, sd.gram) > 1e-8) {
        throw PreconditionError(
            "selgrade_frames: base direction does not lie in the chosen space");
    }

    const double li0 = sd.exponents[i0];
    auto embed = [&](const Vec& wcol) {
        Vec z = Vec::Zero(n + 1);
        z.head(n) = wcol;
        return z;
    };

    std::vector<SubbundleFrame> frames;
    int slot = 0;
    for (int i = 0; i < sd.space_count(); ++i) {
        if (i == sd.center_index) continue;
        if (i == i0) {
            if (sd.dim(i0) > 1) ++slot; // the base space's own frame holds this slot
            continue;
        }
        ++slot;
        SubbundleFrame f;
        f.label = "V" + std::to_string(slot);
        f.basis.resize(n + 1, sd.dim(i));
        for (int c = 0; c < sd.dim(i); ++c) {
            f.basis.col(c) = embed(sd.spaces[i].col(c));
        }
        f.theoretical_exponent = sd.exponents[i] - li0;
        frames.push_back(std::move(f));
    }

    {
        SubbundleFrame fc;
        fc.label = "Vc";
        const int dc = 1 + (sd.center_index >= 0 ? sd.dim(sd.center_index) : 0);
        fc.basis.resize(n + 1, dc);
        int col = 0;
        if (sd.center_index >= 0) {
            const Mat& Y = sd.spaces[sd.center_index];
            for (int c = 0; c < Y.cols(); ++c) {
                Vec z = embed(Y.col(c));
                z -= dot_g(z, s.y, Gp) * s.y;
                fc.basis.col(col++) = z;
            }
        }
        // The line spanned by (e(u,0), 1) is invariant: the lifted flow sends
        // it to (e(u,t), 1), which stays bounded, so after the projective
        // normalization it decays at exactly -exponents[i0].
        const BoundedSolution e0 = bounded_solution(sys, sd, u, 0.0);
        Vec z(n + 1);
        z.head(n) = e0.value;
        z[n] = 1.0;
        z -= dot_g(z, s.y, Gp) * s.y;
        fc.basis.col(col++) = z;
        fc.theoretical_exponent = -li0;
        frames.push_back(std::move(fc));
    }

    if (sd.dim(i0) > 1) {
        const Mat& W = sd.spaces[i0];
        const int d = sd.dim(i0);
        Vec c = W.transpose() * sd.gram * x; // unit coordinate vector of x
        // Householder reflection sending e1 to -sign(c1) c: its remaining
        // columns are an orthonormal basis of the complement of c in R^d.
        const double sgn = (c[0] >= 0.0) ? 1.0 : -1.0;
        Vec uh = c;
        uh[0] += sgn;
        const Mat H = Mat::Identity(d, d) -
                      (2.0 / uh.squaredNorm()) * (uh * uh.transpose());
        SubbundleFrame fi;
        fi.label = "Vi0";
        fi.basis.resize(n + 1, d - 1);
        for (int j = 1; j < d; ++j) {
            fi.basis.col(j - 1) = embed(W * H.col(j));
        }
        fi.theoretical_exponent = 0.0;
        frames.push_back(std::move(fi));
    }

    int total = 0;
    for (const SubbundleFrame& f : frames) total += static_cast<int>(f.basis.cols());
    if (total != n) {
        throw NumericalError(
            "selgrade_frames: subbundle dimensions do not sum to the sphere dimension");
    }
    return frames;
}

double stable_bundle_rate(const SpectralData& sd, int i0) {
    if (i0 < 0 || i0 >= sd.space_count()) {
        throw PreconditionError("stable_bundle_rate: space index out of range");
    }
    const double li0 = sd.exponents[i0];
    if (!(li0 > 0.0)) {
        throw PreconditionError("stable_bundle_rate: base exponent must be positive");
    }
    double top = 0.0; // the central direction grows like -li0, i.e. rate 0 here
    for (int i = i0 + 1; i < sd.space_count(); ++i) {
        if (i == sd.center_index) continue;
        top = std::max(top, sd.exponents[i]);
    }
    return top - li0;
}

ExponentSeries exponent_series(const LinearSystem& sys, const SpectralData& sd,
                               const SpherePoint& s, const ControlSignal& u,
                               const Vec& w, double T) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    if (static_cast<int>(s.y.size()) != n + 1 ||
        static_cast<int>(w.size()) != n + 1) {
        throw PreconditionError("exponent_series: dimension mismatch");
    }
    check_on_sphere(s.y, Gp, "exponent_series");
    check_tangent(w, s.y, Gp, "exponent_series");
    const double nw = norm_g(w, Gp);
    if (!(nw > 0.0)) {
        throw PreconditionError("exponent_series: zero tangent vector");
    }

    Propagator prop(sys);
    LiftedState y{s.x(), s.r()};
    LiftedState wv{w.head(n) / nw, w[n] / nw};
    ExponentSeries out;
    out.times.push_back(0.0);
    out.cumlog.push_back(0.0);
    const double dir = (T >= 0.0) ? 1.0 : -1.0;
    double remaining = std::abs(T);
    double clock = 0.0;
    double acc = 0.0;
    while (remaining > 1e-12) {
        const double dt = dir * std::min(1.0, remaining);
        advance_pair(prop, u, clock, dt, y, wv);
        clock += dt;
        remaining -= std::abs(dt);
        const Vec yv = cat(y, n);
        const double g = norm_g(yv, Gp);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericalError("exponent_series: lifted norm degenerated");
        }
        // Derivative of this unit-step sphere map: project the propagated
        // tangent at the un-normalized endpoint (the 1/g factor included).
        const Vec wcat = cat(wv, n);
        Vec proj = (wcat - (dot_g(wcat, yv, Gp) / (g * g)) * yv) / g;
        const double gw = norm_g(proj, Gp);
        if (!(gw > 0.0) || !std::isfinite(gw)) {
            throw NumericalError("exponent_series: tangent vector degenerated");
        }
        acc += std::log(gw);
        y = LiftedState{yv.head(n) / g, yv[n] / g};
        wv = LiftedState{proj.head(n) / gw, proj[n] / gw};
        out.times.push_back(clock);
        out.cumlog.push_back(acc);
    }
    return out;
}

double exponent_estimate(const LinearSystem& sys, const SpectralData& sd,
                         const SpherePoint& s, const ControlSignal& u,
                         const Vec& w, double T, double burn_in_fraction) {
    if (std::abs(T) < 10.0) {
        throw PreconditionError("exponent_estimate: |T| must be at least 10");
    }
    const ExponentSeries es = exponent_series(sys, sd, s, u, w, T);
    if (burn_in_fraction <= 0.0) {
        return es.cumlog.back() / T;
    }
    // Least-squares slope of the accumulated log growth over the trailing
    // window.  Same limit as the plain quotient, but free of the log(t)/t
    // bias that polynomial growth factors add at finite T.
    const double cutoff = burn_in_fraction * std::abs(T) - 1e-9;
    double st = 0.0, sc = 0.0;
    int m = 0;
    for (std::size_t k = 0; k < es.times.size(); ++k) {
        if (std::abs(es.times[k]) < cutoff) continue;
        st += es.times[k];
        sc += es.cumlog[k];
        ++m;
    }
    if (m < 2) return es.cumlog.back() / T;
    const double tbar = st / m, cbar = sc / m;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < es.times.size(); ++k) {
        if (std::abs(es.times[k]) < cutoff) continue;
        num += (es.times[k] - tbar) * (es.cumlog[k] - cbar);
        den += (es.times[k] - tbar) * (es.times[k] - tbar);
    }
    if (den <= 0.0) return es.cumlog.back() / T;
    return num / den;
}

double frame_exponent_estimate(const LinearSystem& sys, const SpectralData& sd,
                               const SpherePoint& s, const ControlSignal& u,
                               const SubbundleFrame& frame, double T,
                               double burn_in_fraction) {
    if (frame.basis.cols() == 0) {
        throw PreconditionError("frame_exponent_estimate: empty frame");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < frame.basis.cols(); ++c) {
        best = std::max(best, exponent_estimate(sys, sd, s, u, frame.basis.col(c),
                                                T, burn_in_fraction));
    }
    return best;
}

WeightedDistanceSeries weighted_distance_series(const LinearSystem& sys,
                                                const SpectralData& sd,
                                                const SpherePoint& a,
                                                const SpherePoint& b,
                                                const ControlSignal& u,
                                                double alpha, double T) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    check_on_sphere(a.y, Gp, "weighted_distance_series");
    check_on_sphere(b.y, Gp, "weighted_distance_series");
    if (!(T >= 0.0)) {
        throw PreconditionError("weighted_distance_series: horizon must be nonnegative");
    }

    Propagator prop(sys);
    LiftedState ya{a.x(), a.r()};
    LiftedState yb{b.x(), b.r()};
    const bool have_chart = a.hemisphere > 0 && std::abs(a.r()) > kEquatorTol;
    Vec xa;
    if (have_chart) xa = sphere_to_chart(a);
    bool chart_frozen = false;

    WeightedDistanceSeries out;
    auto renorm = [&](LiftedState& y) {
        const Vec z = cat(y, n);
        const double g = norm_g(z, Gp);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericalError("weighted_distance_series: lifted norm degenerated");
        }
        y.x = z.head(n) / g;
        y.r = z[n] / g;
    };
    auto record = [&](double t) {
        const SpherePoint pa = project_to_sphere(cat(ya, n), Gp);
        const SpherePoint pb = project_to_sphere(cat(yb, n), Gp);
        out.times.push_back(t);
        out.weighted.push_back(std::exp(-alpha * t) * sphere_distance(pa, pb, Gp));
        out.chart_norm_a.push_back(have_chart ? xa.norm() : -1.0);
    };
    record(0.0);

    double clock = 0.0;
    double remaining = T;
    while (remaining > 1e-12) {
        const double dt = std::min(1.0, remaining);
        const double t1 = clock + dt;
        std::vector<double> cuts = u.switch_times(clock, t1);
        double prev = clock;
        auto apply = [&](double p, double q) {
            const Vec uv = u.value(p + 0.5 * (q - p));
            prop.step_lifted(ya, q - p, uv);
            prop.step_lifted(yb, q - p, uv);
            if (have_chart && !chart_frozen) prop.step(xa, q - p, uv);
        };
        for (double c : cuts) {
            apply(prev, c);
            prev = c;
        }
        apply(prev, t1);
        clock = t1;
        remaining -= dt;
        renorm(ya);
        renorm(yb);
        // Freeze the plane trajectory once it is unambiguously escaping;
        // this keeps long horizons clear of floating-point overflow.
        if (have_chart && !chart_frozen && xa.norm() > 1e12) chart_frozen = true;
        record(clock);
    }
    return out;
}

ConvergenceReport stable_convergence_check(const LinearSystem& sys,
                                           const SpectralData& sd, int i0,
                                           const SpherePoint& s0,
                                           const ControlSignal& u,
                                           const Mat& stable_basis,
                                           double delta, double alpha, double T,
                                           int num_seeds, std::uint64_t seed) {
    const int n = sys.n();
    const Mat Gp = lift_gram(sd.gram);
    const double kappa = stable_bundle_rate(sd, i0); // also checks exponents[i0] > 0
    if (!(alpha > kappa && alpha < 0.0)) {
        throw PreconditionError(
            "stable_convergence_check: weight rate must lie between the stable "
            "bundle rate and zero");
    }
    if (static_cast<int>(stable_basis.rows()) != n + 1 || stable_basis.cols() < 1) {
        throw PreconditionError("stable_convergence_check: bad stable frame");
    }
    if (!(delta >= 0.0)) {
        throw PreconditionError("stable_convergence_check: displacement must be nonnegative");
    }
    check_on_sphere(s0.y, Gp, "stable_convergence_check");

    Rng rng(seed);
    ConvergenceReport rep;
    rep.stable_rate = kappa;
    rep.seed = seed;
    rep.converged = true;
    rep.escaped = true;

    const double burn_in = std::min(5.0, T / 4.0);
    for (int k = 0; k < num_seeds; ++k) {
        Vec v = stable_basis * rng.unit_vector(static_cast<int>(stable_basis.cols()));
        v -= dot_g(v, s0.y, Gp) * s0.y;
        const double nv = norm_g(v, Gp);
        if (!(nv > 1e-13)) {
            throw PreconditionError(
                "stable_convergence_check: stable frame produced a degenerate direction");
        }
        const SpherePoint sk =
            (delta == 0.0) ? s0 : sphere_exp(s0, (delta / nv) * v, Gp);

        ConvergenceCase cs;
        cs.series = weighted_distance_series(sys, sd, sk, s0, u, alpha, T);
        bool dec = true;
        for (std::size_t j = 1; j < cs.series.times.size(); ++j) {
            if (cs.series.times[j] < burn_in) continue;
            if (cs.series.weighted[j] >
                cs.series.weighted[j - 1] * (1.0 + 1e-9) + 1e-15) {
                dec = false;
                break;
            }
        }
        cs.decreasing_after_burn_in = dec;
        cs.final_weighted = cs.series.weighted.back();
        for (double cn : cs.series.chart_norm_a) {
            cs.max_chart_norm = std::max(cs.max_chart_norm, cn);
        }

        rep.converged = rep.converged && dec && cs.final_weighted < kConvergedTol;
        if (cs.max_chart_norm >= 0.0) {
            rep.escaped = rep.escaped && cs.max_chart_norm > kEscapeNorm;
        }
        rep.inconclusive = rep.inconclusive || !dec;
        rep.cases.push_back(std::move(cs));
    }
    return rep;
}

} // namespace pflow
