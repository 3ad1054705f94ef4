#include "pflow/system.hpp"

#include <algorithm>
#include <cmath>

namespace pflow {

namespace {
constexpr double kSwitchTol = 1e-12; // collapse switch times closer than this
} // namespace

// ---------------------------------------------------------------------------
// ControlRange

ControlRange ControlRange::box(const Mat& bounds) {
    if (bounds.cols() != 2 || bounds.rows() == 0) {
        throw PreconditionError("ControlRange::box: bounds must be m x 2");
    }
    ControlRange r;
    r.dim_ = static_cast<int>(bounds.rows());
    r.is_box_ = true;
    r.bounds_ = bounds;
    for (int i = 0; i < r.dim_; ++i) {
        if (!(bounds(i, 0) < 0.0 && 0.0 < bounds(i, 1))) {
            throw PreconditionError(
                "ControlRange::box: 0 must lie strictly inside every interval");
        }
    }
    const int corners = 1 << r.dim_;
    for (int mask = 0; mask < corners; ++mask) {
        Vec v(r.dim_);
        for (int i = 0; i < r.dim_; ++i) {
            v[i] = (mask >> i & 1) ? bounds(i, 1) : bounds(i, 0);
        }
        r.vertices_.push_back(v);
    }
    return r;
}

ControlRange ControlRange::polytope(const std::vector<Vec>& vertices, int dim) {
    if (vertices.empty()) {
        throw PreconditionError("ControlRange::polytope: vertex list is empty");
    }
    ControlRange r;
    r.dim_ = dim;
    r.is_box_ = false;
    r.vertices_ = vertices;
    for (const auto& v : vertices) {
        if (static_cast<int>(v.size()) != dim) {
            throw PreconditionError("ControlRange::polytope: vertex dimension mismatch");
        }
    }
    // 0 strictly inside: necessary condition checked per coordinate direction
    // (exact membership testing is not needed anywhere downstream).
    for (int i = 0; i < dim; ++i) {
        double lo = 0.0, hi = 0.0;
        for (const auto& v : vertices) {
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
        }
        if (!(lo < 0.0 && 0.0 < hi)) {
            throw PreconditionError(
                "ControlRange::polytope: 0 must lie strictly inside");
        }
    }
    return r;
}

const Mat& ControlRange::bounds() const {
    if (!is_box_) {
        throw PreconditionError("ControlRange::bounds: range is not a box");
    }
    return bounds_;
}

double ControlRange::max_norm() const {
    double best = 0.0;
    for (const auto& v : vertices_) {
        best = std::max(best, v.cwiseAbs().maxCoeff());
    }
    return best;
}

std::vector<Vec> ControlRange::grid_sample(int per_axis) const {
    if (!is_box_) {
        // polytope: vertices plus 0
        std::vector<Vec> out = vertices_;
        out.push_back(Vec::Zero(dim_));
        return out;
    }
    if (per_axis < 2) throw PreconditionError("grid_sample: need >= 2 per axis");
    std::vector<Vec> out;
    std::vector<int> idx(dim_, 0);
    while (true) {
        Vec v(dim_);
        for (int i = 0; i < dim_; ++i) {
            const double a = bounds_(i, 0), b = bounds_(i, 1);
            v[i] = a + (b - a) * idx[i] / (per_axis - 1);
            if (std::abs(v[i]) < 1e-15) v[i] = 0.0;
        }
        out.push_back(v);
        int k = 0;
        while (k < dim_ && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == dim_) break;
    }
    // make sure 0 itself is present even for even per_axis
    bool has_zero = false;
    for (const auto& v : out) has_zero = has_zero || v.isZero(0.0);
    if (!has_zero) out.push_back(Vec::Zero(dim_));
    return out;
}

// ---------------------------------------------------------------------------
// LinearSystem

LinearSystem::LinearSystem(Mat A_, Mat B_, ControlRange range_)
    : A(std::move(A_)), B(std::move(B_)), range(std::move(range_)) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw PreconditionError("LinearSystem: A must be square and nonempty");
    }
    if (B.rows() != A.rows() || B.cols() == 0) {
        throw PreconditionError("LinearSystem: B must be n x m with m >= 1");
    }
    if (range.dim() != B.cols()) {
        throw PreconditionError("LinearSystem: control range dimension mismatch");
    }
}

// ---------------------------------------------------------------------------
// ControlSignal

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<Vec> values,
                             std::optional<double> period)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)),
      period_(period) {
    if (values_.empty() || breakpoints_.size() != values_.size()) {
        throw PreconditionError(
            "ControlSignal: need equally many breakpoints and values (>= 1)");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i] > breakpoints_[i - 1])) {
            throw PreconditionError("ControlSignal: breakpoints must increase");
        }
    }
    const int d = static_cast<int>(values_[0].size());
    for (const auto& v : values_) {
        if (static_cast<int>(v.size()) != d) {
            throw PreconditionError("ControlSignal: value dimension mismatch");
        }
    }
    if (period_) {
        const double span = breakpoints_.back() - breakpoints_.front();
        if (*period_ <= 0.0 || *period_ < span - kSwitchTol) {
            throw PreconditionError(
                "ControlSignal: period must be positive and cover the breakpoints");
        }
    }
}

ControlSignal ControlSignal::constant(const Vec& u) {
    return ControlSignal({0.0}, {u});
}

Vec ControlSignal::value(double t) const {
    double tau = t;
    if (period_) {
        const double t0 = breakpoints_.front();
        tau = t0 + std::fmod(t - t0, *period_);
        if (tau < t0) tau += *period_;
    }
    // values_[k] on [bp_k, bp_{k+1}); constant extension on both sides
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), tau);
    if (it == breakpoints_.begin()) return values_.front();
    const std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return values_[k];
}

std::vector<double> ControlSignal::switch_times(double t0, double t1) const {
    std::vector<double> out;
    if (std::abs(t1 - t0) < kSwitchTol) return out;
    const double lo = std::min(t0, t1), hi = std::max(t0, t1);
    auto push = [&](double s) {
        if (s > lo + kSwitchTol && s < hi - kSwitchTol) out.push_back(s);
    };
    if (!period_) {
        for (double b : breakpoints_) push(b);
    } else {
        const double p = *period_;
        const double t_first = breakpoints_.front();
        // replicate each breakpoint b + k p intersecting [lo, hi]
        for (double b : breakpoints_) {
            const double k0 = std::floor((lo - b) / p);
            for (double k = k0 - 1; b + k * p <= hi + p; k += 1.0) {
                push(b + k * p);
            }
        }
        // also the period wrap point t_first + k p (end of the last piece)
        const double k0 = std::floor((lo - t_first) / p);
        for (double k = k0 - 1; t_first + k * p <= hi + p; k += 1.0) {
            push(t_first + k * p);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) < kSwitchTol; }),
              out.end());
    if (t1 < t0) std::reverse(out.begin(), out.end());
    return out;
}

ControlSignal shift(const ControlSignal& u, double s) {
    std::vector<double> bp = u.breakpoints();
    for (double& b : bp) b -= s;
    return ControlSignal(std::move(bp), u.values(), u.period());
}

// ---------------------------------------------------------------------------
// Propagator

const Propagator::Cached& Propagator::matrices(double dt) const {
    const long long key = std::llround(dt * 1e12);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    StepMatrices sm = exp_step(sys_->A, dt);
    Cached c{std::move(sm.E), sm.J * sys_->B};
    return cache_.emplace(key, std::move(c)).first->second;
}

void Propagator::step(Vec& x, double dt, const Vec& u, double scale) const {
    if (dt == 0.0) return;
    const Cached& c = matrices(dt);
    x = c.E * x + scale * (c.JB * u);
}

// ---------------------------------------------------------------------------
// flows

namespace {

/// Walk from 0 to t through the control's constant pieces, applying fn(dt, u)
/// exactly once per piece in traversal order.
void for_each_piece(const ControlSignal& u, double t,
                    const std::function<void(double, const Vec&)>& fn) {
    if (t == 0.0) return;
    std::vector<double> cuts = u.switch_times(0.0, t);
    double prev = 0.0;
    auto mid_value = [&](double a, double b) { return u.value(a + 0.5 * (b - a)); };
    for (double c : cuts) {
        fn(c - prev, mid_value(prev, c));
        prev = c;
    }
    fn(t - prev, mid_value(prev, t));
}

} // namespace

Vec flow(const LinearSystem& sys, double t, const Vec& x0, const ControlSignal& u) {
    if (static_cast<int>(x0.size()) != sys.n()) {
        throw PreconditionError("flow: state dimension mismatch");
    }
    if (u.dim() != sys.m()) {
        throw PreconditionError("flow: control dimension mismatch");
    }
    Propagator prop(sys);
    Vec x = x0;
    for_each_piece(u, t, [&](double dt, const Vec& uv) { prop.step(x, dt, uv); });
    return x;
}

LiftedState lifted_flow(const LinearSystem& sys, double t, const LiftedState& y0,
                        const ControlSignal& u) {
    if (static_cast<int>(y0.x.size()) != sys.n()) {
        throw PreconditionError("lifted_flow: state dimension mismatch");
    }
    Propagator prop(sys);
    LiftedState y = y0;
    for_each_piece(u, t, [&](double dt, const Vec& uv) { prop.step_lifted(y, dt, uv); });
    return y;
}

// ---------------------------------------------------------------------------
// bounded solution

BoundedSolution bounded_solution(const LinearSystem& sys, const SpectralData& sd,
                                 const ControlSignal& u, double t, double horizon) {
    const double alpha = sd.min_hyperbolic_rate(); // throws if no hyperbolic part
    const double H = (horizon > 0.0) ? horizon : 40.0 / alpha;
    const int n = sys.n();
    Vec e = Vec::Zero(n);
    double bound = 0.0;
    const double umax = sys.range.max_norm();

    for (int i = 0; i < sd.space_count(); ++i) {
        const double lam = sd.exponents[i];
        if (i == sd.center_index || lam == 0.0) continue;
        const Mat& W = sd.spaces[i];               // n x d, gram-orthonormal
        const Mat Ai = sd.restricted(i);           // d x d
        const Mat Ci = W.transpose() * sd.gram * sys.B; // d x m coordinates of P_i B
        const int d = static_cast<int>(W.cols());
        Vec acc = Vec::Zero(d);
        // Stable part: integral over s in [0, H] of e^{A_i s} C_i u(t - s) ds.
        // Unstable part: minus integral of e^{-A_i s} C_i u(t + s) ds.
        const double sign = (lam < 0.0) ? 1.0 : -1.0;
        const Mat M = (lam < 0.0) ? Ai : (-Ai).eval();
        // Break [0, H] at the switch times of s -> u(t -/+ s).
        std::vector<double> cuts;
        if (lam < 0.0) {
            for (double c : u.switch_times(t - H, t)) cuts.push_back(t - c);
            std::sort(cuts.begin(), cuts.end());
        } else {
            for (double c : u.switch_times(t, t + H)) cuts.push_back(c - t);
        }
        cuts.push_back(H);
        double s0 = 0.0;
        Mat Efront = Mat::Identity(d, d); // e^{M s0}
        for (double s1 : cuts) {
            if (s1 <= s0 + 1e-13) { s0 = s1; continue; }
            const double smid = 0.5 * (s0 + s1);
            const Vec uv = (lam < 0.0) ? u.value(t - smid) : u.value(t + smid);
            StepMatrices sm = exp_step(M, s1 - s0);
            acc += sign * (Efront * (sm.J * (Ci * uv)));
            Efront = Efront * sm.E;
            s0 = s1;
        }
        e += W * acc;
        // Tail bound: ||C_i|| umax * e^{-|lam| H} / |lam| per space.
        bound += Ci.norm() * umax * std::exp(-std::abs(lam) * H) / std::abs(lam);
    }
    return BoundedSolution{e, bound, H};
}

// ---------------------------------------------------------------------------
// finite-time growth rate

double lifted_exponent(const LinearSystem& sys, const SpectralData& sd,
                       const LiftedState& y0, const ControlSignal& u, double t) {
    if (t == 0.0) throw PreconditionError("lifted_exponent: t must be nonzero");
    const Mat Gp = lift_gram(sd.gram);
    Propagator prop(sys);
    auto lifted_norm = [&](const LiftedState& y) {
        Vec z(sys.n() + 1);
        z.head(sys.n()) = y.x;
        z[sys.n()] = y.r;
        return norm_g(z, Gp);
    };
    LiftedState y = y0;
    double n0 = lifted_norm(y);
    if (n0 <= 0.0) throw PreconditionError("lifted_exponent: zero initial state");
    y.x /= n0;
    y.r /= n0;
    double acc = 0.0;
    const double dir = (t > 0.0) ? 1.0 : -1.0;
    double remaining = std::abs(t);
    double clock = 0.0;
    while (remaining > 1e-12) {
        const double dt = dir * std::min(1.0, remaining);
        // step through control pieces inside [clock, clock + dt]
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
        const double g = lifted_norm(y);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericalError("lifted_exponent: trajectory norm degenerated");
        }
        acc += std::log(g);
        y.x /= g;
        y.r /= g;
    }
    return acc / t;
}

} // namespace pflow
