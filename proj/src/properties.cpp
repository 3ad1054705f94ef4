/**
 * @file properties.cpp
 * @brief Random system generator and the randomized invariant suites.
 */
#include "pflow/properties.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

namespace pflow {

namespace {

Mat random_change_of_basis(Rng& rng, int n) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Mat Q(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) Q(i, j) = rng.uniform(-1.0, 1.0);
        }
        Eigen::JacobiSVD<Mat> svd(Q);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (smin > 1e-3 && smax / smin < 25.0) return Q;
    }
    throw NumericalError("random_system: no well-conditioned basis found");
}

ControlSignal random_control(Rng& rng, int m) {
    auto random_value = [&]() {
        Vec v(m);
        for (int i = 0; i < m; ++i) v[i] = rng.uniform(-1.0, 1.0);
        return v;
    };
    const int kind = rng.uniform_int(0, 2);
    if (kind == 0) return ControlSignal::constant(random_value());
    const int pieces = rng.uniform_int(2, 4);
    std::vector<double> bp;
    std::vector<Vec> vals;
    double t = -6.0 + rng.uniform(0.0, 1.0);
    for (int k = 0; k < pieces; ++k) {
        bp.push_back(t);
        vals.push_back(random_value());
        t += rng.uniform(1.0, 3.0);
    }
    if (kind == 1) return ControlSignal(bp, vals);
    const double period = (bp.back() - bp.front()) + rng.uniform(0.5, 2.0);
    return ControlSignal(bp, vals, period);
}

} // namespace

RandomSystem random_system(Rng& rng, const RandomSystemOptions& opts) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        const int n = rng.uniform_int(2, 4);
        // Space count p with dims in {1, 2}: ceil(n/2) <= p <= n.
        const int p = rng.uniform_int((n + 1) / 2, n);
        std::vector<int> dims(static_cast<std::size_t>(p), 1);
        int extra = n - p;
        while (extra > 0) {
            const int i = rng.uniform_int(0, p - 1);
            if (dims[static_cast<std::size_t>(i)] == 1) {
                dims[static_cast<std::size_t>(i)] = 2;
                --extra;
            }
        }
        // Exponents: a random decreasing selection from the half-integer grid
        // (pairwise gaps automatically >= 0.5).
        std::vector<double> grid = {2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.5, -2.0};
        if (!opts.allow_center) grid.erase(grid.begin() + 4);
        std::vector<double> expo;
        {
            std::vector<double> pool = grid;
            for (int k = 0; k < p; ++k) {
                const int pick = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
                expo.push_back(pool[static_cast<std::size_t>(pick)]);
                pool.erase(pool.begin() + pick);
            }
            std::sort(expo.begin(), expo.end(), std::greater<>());
        }
        if (opts.require_positive && !(expo.front() > 0.0)) continue;
        // A zero exponent needs a block with eigenvalues exactly on the
        // imaginary axis; rotation blocks supply that for dim 2.
        Mat block = Mat::Zero(n, n);
        int at = 0;
        bool ok = true;
        for (int k = 0; k < p; ++k) {
            const double lam = expo[static_cast<std::size_t>(k)];
            const int d = dims[static_cast<std::size_t>(k)];
            if (d == 1) {
                if (lam == 0.0) { ok = false; break; } // a 1-d center is a zero row
                block(at, at) = lam;
            } else {
                const int shape = rng.uniform_int(0, 3);
                block(at, at) = lam;
                block(at + 1, at + 1) = lam;
                if (shape <= 1) {
                    const double omega = rng.uniform(0.5, 2.5);
                    block(at, at + 1) = omega;
                    block(at + 1, at) = -omega;
                } else if (shape == 2 && lam != 0.0) {
                    block(at, at + 1) = 1.0; // Jordan block
                } else if (lam == 0.0) {
                    const double omega = rng.uniform(0.5, 2.5);
                    block(at, at + 1) = omega;
                    block(at + 1, at) = -omega;
                }
            }
            at += d;
        }
        if (!ok) {
            // Retry only when the drawn structure cannot carry a center.
            continue;
        }
        const Mat Q = random_change_of_basis(rng, n);
        const Mat A = Q * block * Q.partialPivLu().solve(Mat::Identity(n, n));
        const int m = rng.uniform_int(1, 2);
        Mat B(n, m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) B(i, j) = rng.uniform(-1.0, 1.0);
        }
        Mat U(m, 2);
        for (int i = 0; i < m; ++i) {
            U(i, 0) = -1.0;
            U(i, 1) = 1.0;
        }
        // Conjugation spreads a defective eigenvalue by ~sqrt(machine eps) in
        // the QR iteration; the generated exponents are >= 0.5 apart, so a
        // 1e-4 clustering window is unambiguous and absorbs that spread.
        RandomSystem out{LinearSystem(A, B, ControlRange::box(U)),
                         spectral_decompose(A, 1e-4), Mat(), random_control(rng, m)};
        out.lifted_gram = lift_gram(out.sd.gram);
        if (static_cast<int>(out.sd.exponents.size()) != p) continue; // clustering drifted
        return out;
    }
    throw NumericalError("random_system: generation failed");
}

namespace {

using CaseFn = std::function<std::optional<std::string>(Rng&)>;

std::string num(double x) { return format_num(x); }

/// Random tangent vector at s with unit gram norm.
TangentVector random_tangent(Rng& rng, const SpherePoint& s, const Mat& Gp) {
    for (int k = 0; k < 64; ++k) {
        const Vec raw = rng.unit_vector(static_cast<int>(s.y.size()));
        TangentVector w = tangent_project(s.y, raw, Gp);
        const double nw = norm_g(w.v, Gp);
        if (nw > 1e-3) {
            w.v /= nw;
            return w;
        }
    }
    throw NumericalError("random_tangent: degenerate draws");
}

SpherePoint random_sphere_point(Rng& rng, int n, const Mat& Gp) {
    return project_to_sphere(rng.unit_vector(n + 1), Gp);
}

SpherePoint random_equator_point(Rng& rng, int n, const Mat& Gp) {
    Vec y = Vec::Zero(n + 1);
    y.head(n) = rng.unit_vector(n);
    return project_to_sphere(y, Gp);
}

/// Equator base point inside the reference Lyapunov space.
SpherePoint base_in_space(Rng& rng, const SpectralData& sd, int i0, const Mat& Gp) {
    const Mat& V = sd.spaces[static_cast<std::size_t>(i0)];
    Vec y = Vec::Zero(sd.n() + 1);
    y.head(sd.n()) = V * rng.unit_vector(static_cast<int>(V.cols()));
    return project_to_sphere(y, Gp);
}

int positive_index(const SpectralData& sd, Rng& rng) {
    std::vector<int> pos;
    for (int i = 0; i < sd.space_count(); ++i) {
        if (sd.exponents[static_cast<std::size_t>(i)] > sd.group_tol) pos.push_back(i);
    }
    return pos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pos.size()) - 1))];
}

std::optional<std::string> check_cocycle_identity(Rng& rng) {
    RandomSystem rs = random_system(rng);
    const SpherePoint s0 = rng.uniform(0.0, 1.0) < 0.5
                               ? random_sphere_point(rng, rs.sys.n(), rs.lifted_gram)
                               : random_equator_point(rng, rs.sys.n(), rs.lifted_gram);
    const TangentVector w0 = random_tangent(rng, s0, rs.lifted_gram);
    const double t = rng.uniform(-2.5, 2.5);
    const double s = rng.uniform(-2.5, 2.5);
    const auto backend = CocycleBackend::kExactLift;
    const TangentVector ws =
        linearized_cocycle_general(rs.sys, rs.sd, s, s0, rs.u, w0, backend);
    const SpherePoint mid = sphere_flow(rs.sys, rs.sd, s, s0, rs.u);
    const TangentVector wts = linearized_cocycle_general(
        rs.sys, rs.sd, t, mid, shift(rs.u, s), ws, backend);
    const TangentVector direct =
        linearized_cocycle_general(rs.sys, rs.sd, t + s, s0, rs.u, w0, backend);
    const double scale = 1.0 + norm_g(direct.v, rs.lifted_gram);
    const double err = norm_g(wts.v - direct.v, rs.lifted_gram) / scale;
    const double base_err = norm_g(wts.base - direct.base, rs.lifted_gram);
    if (err > 1e-7 || base_err > 1e-7) {
        return "cocycle composition mismatch: " + num(err) + " (base " +
               num(base_err) + ") at t=" + num(t) + ", s=" + num(s);
    }
    return std::nullopt;
}

std::optional<std::string> check_lift_consistency(Rng& rng) {
    RandomSystem rs = random_system(rng);
    const int n = rs.sys.n();
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-2.0, 2.0);
    const double t = rng.uniform(-4.0, 4.0);
    // r = 0: the drift alone.
    const LiftedState y0{x, 0.0};
    const LiftedState yt = lifted_flow(rs.sys, t, y0, rs.u);
    const Vec drift = expm(rs.sd.A * t) * x;
    const double e0 = (yt.x - drift).norm() / (1.0 + drift.norm());
    if (yt.r != 0.0 || e0 > 1e-9) {
        return "drift lift mismatch: " + num(e0) + ", r=" + num(yt.r);
    }
    // r = 1: the control system.
    const LiftedState z0{x, 1.0};
    const LiftedState zt = lifted_flow(rs.sys, t, z0, rs.u);
    const Vec ctrl = flow(rs.sys, t, x, rs.u);
    const double e1 = (zt.x - ctrl).norm() / (1.0 + ctrl.norm());
    if (zt.r != 1.0 || e1 > 1e-9) {
        return "control lift mismatch: " + num(e1) + ", r=" + num(zt.r);
    }
    // Homogeneity in r.
    const double lam = rng.uniform(0.2, 3.0);
    const LiftedState w0{lam * x, lam};
    const LiftedState wt = lifted_flow(rs.sys, t, w0, rs.u);
    const double eh = (wt.x - lam * zt.x).norm() / (1.0 + lam * zt.x.norm());
    if (eh > 1e-9) return "lift homogeneity mismatch: " + num(eh);
    return std::nullopt;
}

std::optional<std::string> check_chart_conjugacy(Rng& rng) {
    RandomSystem rs = random_system(rng);
    const int n = rs.sys.n();
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-2.0, 2.0);
    const double t = rng.uniform(-3.0, 3.0);
    const Vec xt = flow(rs.sys, t, x, rs.u);
    const SpherePoint lhs = chart_to_sphere(xt, rs.lifted_gram);
    const SpherePoint rhs = sphere_flow(rs.sys, rs.sd, t,
                                        chart_to_sphere(x, rs.lifted_gram), rs.u);
    const double err = sphere_distance(lhs, rhs, rs.lifted_gram);
    if (err > 1e-8) return "chart conjugacy mismatch: " + num(err);
    return std::nullopt;
}

std::optional<std::string> check_sphere_normalization(Rng& rng) {
    RandomSystem rs = random_system(rng);
    const bool equator = rng.uniform(0.0, 1.0) < 0.5;
    const SpherePoint s0 = equator
                               ? random_equator_point(rng, rs.sys.n(), rs.lifted_gram)
                               : random_sphere_point(rng, rs.sys.n(), rs.lifted_gram);
    const double t = rng.uniform(-6.0, 6.0);
    const SpherePoint st = sphere_flow(rs.sys, rs.sd, t, s0, rs.u);
    const double defect = std::abs(norm_g(st.y, rs.lifted_gram) - 1.0);
    if (defect > 1e-9) return "sphere norm defect " + num(defect);
    if (equator && std::abs(st.r()) > 1e-12) {
        return "equator invariance broken: r=" + num(st.r());
    }
    if (!equator && s0.hemisphere != 0 && st.hemisphere != s0.hemisphere &&
        st.hemisphere != 0) {
        return "hemisphere flipped without touching the equator";
    }
    return std::nullopt;
}

std::optional<std::string> check_tangency_preservation(Rng& rng) {
    RandomSystem rs = random_system(rng);
    const SpherePoint s0 = rng.uniform(0.0, 1.0) < 0.5
                               ? random_sphere_point(rng, rs.sys.n(), rs.lifted_gram)
                               : random_equator_point(rng, rs.sys.n(), rs.lifted_gram);
    const TangentVector w0 = random_tangent(rng, s0, rs.lifted_gram);
    const double t = rng.uniform(-5.0, 5.0);
    const TangentVector wt = linearized_cocycle_general(
        rs.sys, rs.sd, t, s0, rs.u, w0, CocycleBackend::kExactLift);
    const double nv = norm_g(wt.v, rs.lifted_gram);
    if (!(nv > 0.0)) return "cocycle annihilated a tangent vector";
    const double defect = std::abs(dot_g(wt.v, wt.base, rs.lifted_gram)) / nv;
    if (defect > 1e-9) return "tangency defect " + num(defect);
    return std::nullopt;
}

std::optional<std::string> check_bounded_solution(Rng& rng) {
    RandomSystemOptions opts;
    opts.allow_center = rng.uniform(0.0, 1.0) < 0.3;
    RandomSystem rs = random_system(rng, opts);
    while (rs.sd.center_index >= 0 && rs.sd.space_count() == 1) {
        rs = random_system(rng, opts); // the bounded solution needs a hyperbolic part
    }
    const double t = rng.uniform(-3.0, 3.0);
    const double h = rng.uniform(0.2, 2.0);
    const BoundedSolution et = bounded_solution(rs.sys, rs.sd, rs.u, t);
    const BoundedSolution eth = bounded_solution(rs.sys, rs.sd, rs.u, t + h);
    // Propagation: e(u, t+h) solves the hyperbolically projected system.
    const Mat Ph = rs.sd.proj_hyperbolic();
    LinearSystem hyp(rs.sd.A, Ph * rs.sys.B, rs.sys.range);
    const Vec prop = flow(hyp, h, et.value, shift(rs.u, t));
    const double amp = expm(rs.sd.A * h).norm();
    const double tol =
        (1.0 + amp) * (et.truncation_bound + eth.truncation_bound) + 1e-7;
    const double res = (eth.value - prop).norm();
    if (res > tol) {
        return "propagation residual " + num(res) + " > " + num(tol);
    }
    // Shift equivariance: e(u(s + .), t) = e(u, s + t).
    const double s = rng.uniform(-2.0, 2.0);
    const BoundedSolution lhs = bounded_solution(rs.sys, rs.sd, shift(rs.u, s), t);
    const BoundedSolution rhs = bounded_solution(rs.sys, rs.sd, rs.u, s + t);
    const double tol2 = lhs.truncation_bound + rhs.truncation_bound + 1e-9;
    const double dse = (lhs.value - rhs.value).norm();
    if (dse > tol2) {
        return "shift equivariance residual " + num(dse) + " > " + num(tol2);
    }
    return std::nullopt;
}

std::optional<std::string> check_frame_dimensions(Rng& rng) {
    RandomSystemOptions opts;
    opts.require_positive = true;
    RandomSystem rs = random_system(rng, opts);
    const int i0 = positive_index(rs.sd, rng);
    const SpherePoint s = base_in_space(rng, rs.sd, i0, rs.lifted_gram);
    const auto frames = selgrade_frames(rs.sys, rs.sd, i0, s, rs.u);
    int total = 0;
    Mat stacked(rs.sd.n() + 1, rs.sd.n());
    for (const auto& f : frames) {
        for (int c = 0; c < f.basis.cols(); ++c) {
            const double tang = std::abs(dot_g(f.basis.col(c), s.y, rs.lifted_gram));
            if (tang > 1e-8) {
                return "frame " + f.label + " not tangent: " + num(tang);
            }
            stacked.col(total + c) = f.basis.col(c);
        }
        total += static_cast<int>(f.basis.cols());
        if (total > rs.sd.n()) break;
    }
    if (total != rs.sd.n()) {
        return "frame dimensions sum to " + std::to_string(total) + ", expected " +
               std::to_string(rs.sd.n());
    }
    Eigen::ColPivHouseholderQR<Mat> qr(stacked);
    if (qr.rank() != rs.sd.n()) {
        return "frame columns are rank deficient: rank " +
               std::to_string(qr.rank());
    }
    return std::nullopt;
}

std::optional<std::string> check_exponential_separation(Rng& rng) {
    RandomSystemOptions opts;
    opts.require_positive = true;
    RandomSystem rs = random_system(rng, opts);
    const int i0 = positive_index(rs.sd, rng);
    const SpherePoint s = base_in_space(rng, rs.sd, i0, rs.lifted_gram);
    auto frames = selgrade_frames(rs.sys, rs.sd, i0, s, rs.u);
    std::sort(frames.begin(), frames.end(),
              [](const SubbundleFrame& a, const SubbundleFrame& b) {
                  return a.theoretical_exponent > b.theoretical_exponent;
              });
    // Columns ordered by decreasing subbundle rate, with their labels.
    std::vector<Vec> cols;
    std::vector<double> rates;
    std::vector<std::string> labels;
    for (const auto& f : frames) {
        for (int c = 0; c < f.basis.cols(); ++c) {
            Vec v = f.basis.col(c);
            v /= norm_g(v, rs.lifted_gram);
            cols.push_back(v);
            rates.push_back(f.theoretical_exponent);
            labels.push_back(f.label);
        }
    }
    // The horizon must be long enough that the linear-in-T gap dominates the
    // O(log T) polynomial factors of defective blocks and the O(1) constants
    // from the random basis conditioning.
    const double T = 40.0 + rng.uniform(0.0, 10.0);
    // Joint propagation with per-step orthonormalization: subtracting the
    // faster directions before renormalizing keeps each column's growth at
    // its own subbundle rate, instead of drifting to the fastest rate the
    // moment roundoff injects a faster component (which raw column-wise
    // propagation does after e^{gap t} ~ 1e13).
    std::vector<double> cum(cols.size(), 0.0);
    const Mat base_proj = rs.sd.proj_space(i0);
    SpherePoint base = s;
    double t = 0.0;
    while (t < T - 1e-12) {
        const double dt = std::min(1.0, T - t);
        SpherePoint next = base;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const TangentVector out = linearized_cocycle_general(
                rs.sys, rs.sd, dt, base, shift(rs.u, t), {base.y, cols[j]},
                CocycleBackend::kExactLift);
            cols[j] = out.v;
            next = SpherePoint{out.base, next.hemisphere};
        }
        // The base orbit stays in the subsphere of its Lyapunov space; enforce
        // that invariant so roundoff along faster spaces cannot accumulate and
        // drag the orbit (and with it every measured rate) off the subsphere.
        next.y.head(rs.sd.n()) = base_proj * next.y.head(rs.sd.n());
        next = project_to_sphere(next.y, rs.lifted_gram);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            Vec v = cols[j];
            v -= dot_g(v, next.y, rs.lifted_gram) * next.y;
            for (std::size_t i = 0; i < j; ++i) {
                v -= dot_g(v, cols[i], rs.lifted_gram) * cols[i];
            }
            const double nv = norm_g(v, rs.lifted_gram);
            if (!(nv > 0.0)) return "orthonormalization degenerated";
            cum[j] += std::log(nv);
            cols[j] = v / nv;
        }
        base = next;
        t += dt;
    }
    for (std::size_t j = 0; j + 1 < cum.size(); ++j) {
        const double gap = rates[j] - rates[j + 1];
        if (gap <= 0.0) continue; // same subbundle
        const double sep = cum[j] - cum[j + 1];
        if (sep < 0.5 * gap * T) {
            return "separation " + labels[j] + "/" + labels[j + 1] +
                   ": log ratio " + num(sep) + " < " + num(0.5 * gap * T);
        }
    }
    return std::nullopt;
}

} // namespace

const std::vector<std::string>& property_suite_names() {
    static const std::vector<std::string> names = {
        "cocycle-identity",       "lift-consistency",
        "chart-conjugacy",        "sphere-normalization",
        "tangency-preservation",  "bounded-solution",
        "frame-dimensions",       "exponential-separation"};
    return names;
}

std::vector<PropertySuiteResult> run_property_suites(int cases_per_suite,
                                                     std::uint64_t seed) {
    if (cases_per_suite < 1) {
        throw PreconditionError("run_property_suites: cases_per_suite must be positive");
    }
    const std::vector<std::pair<std::string, CaseFn>> suites = {
        {"cocycle-identity", check_cocycle_identity},
        {"lift-consistency", check_lift_consistency},
        {"chart-conjugacy", check_chart_conjugacy},
        {"sphere-normalization", check_sphere_normalization},
        {"tangency-preservation", check_tangency_preservation},
        {"bounded-solution", check_bounded_solution},
        {"frame-dimensions", check_frame_dimensions},
        {"exponential-separation", check_exponential_separation},
    };
    std::vector<PropertySuiteResult> out;
    std::uint64_t salt = 0;
    for (const auto& [name, fn] : suites) {
        PropertySuiteResult res;
        res.name = name;
        res.cases = cases_per_suite;
        Rng rng(seed + 0x9E3779B97F4A7C15ull * (++salt));
        const auto t0 = std::chrono::steady_clock::now();
        for (int k = 0; k < cases_per_suite; ++k) {
            std::optional<std::string> failure;
            try {
                failure = fn(rng);
            } catch (const std::exception& e) {
                failure = std::string("exception: ") + e.what();
            }
            if (failure) {
                if (res.failures == 0) {
                    res.first_failure = "case " + std::to_string(k) + ": " + *failure;
                }
                ++res.failures;
            }
        }
        res.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        out.push_back(std::move(res));
    }
    return out;
}

} // namespace pflow
