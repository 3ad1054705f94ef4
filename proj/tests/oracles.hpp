/**
 * @file oracles.hpp
 * @brief Independent reference implementations for the unit tests: a Taylor
 *        matrix exponential, closed-form flows of the example blocks, and a
 *        brute-force one-dimensional control-set oracle.  Everything here is
 *        deliberately naive so a disagreement points at the library, not at
 *        the oracle.
 */
#pragma once

#include <cmath>

#include "pflow/linalg.hpp"

namespace oracles {

/// Scaling-and-squaring Taylor series for e^A (30 terms after scaling).
inline pflow::Mat taylor_expm(const pflow::Mat& A) {
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    pflow::Mat S = A;
    while (norm / std::pow(2.0, squarings) > 0.5) ++squarings;
    S /= std::pow(2.0, squarings);
    pflow::Mat term = pflow::Mat::Identity(A.rows(), A.cols());
    pflow::Mat sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = (term * S / static_cast<double>(k)).eval();
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
    return sum;
}

/// e^{At} for the 2x2 block [[a, w], [-w, a]]: a spiral with frequency w.
inline pflow::Mat rotation_exp(double a, double w, double t) {
    pflow::Mat E(2, 2);
    const double c = std::cos(w * t), s = std::sin(w * t);
    E << c, s, -s, c;
    return std::exp(a * t) * E;
}

/// e^{At} for the 2x2 block [[lam, 1], [0, lam]].
inline pflow::Mat jordan_exp(double lam, double t) {
    pflow::Mat E(2, 2);
    E << 1.0, t, 0.0, 1.0;
    return std::exp(lam * t) * E;
}

/// Closed-form flow of x' = diag(1, -1) x + (1, 1)^T u for constant u:
/// x1(t) = e^t x1 + (e^t - 1) u,  x2(t) = e^{-t} x2 + (1 - e^{-t}) u.
inline pflow::Vec saddle_flow(const pflow::Vec& x0, double u, double t) {
    pflow::Vec x(2);
    x[0] = std::exp(t) * x0[0] + (std::exp(t) - 1.0) * u;
    x[1] = std::exp(-t) * x0[1] + (1.0 - std::exp(-t)) * u;
    return x;
}

/// Supremum of the states reachable from 0 along the scalar axis
/// x' = a x + u, |u| <= 1, by forward Euler under the extremal control u = 1.
/// Only meaningful for a < 0 (for a > 0 the reachable set is unbounded).
inline double scalar_reach_sup(double a, double dt = 1e-5, double T = 30.0) {
    double x = 0.0;
    for (double t = 0.0; t < T; t += dt) {
        const double next = x + dt * (a * x + 1.0);
        if (!(next > x)) break;
        x = next;
    }
    return x;
}

/// Supremum of the initial states steerable to 0 along the unstable scalar
/// axis x' = a x + u, a > 0, |u| <= 1: bisection on trajectories under the
/// extremal control u = -1.
inline double scalar_control_sup(double a, double dt = 1e-5, double T = 30.0) {
    const auto hits_zero = [&](double x0) {
        double x = x0;
        for (double t = 0.0; t < T; t += dt) {
            x += dt * (a * x - 1.0);
            if (x <= 0.0) return true;
            if (x > 10.0) return false;
        }
        return false;
    };
    double lo = 0.0, hi = 2.0;
    for (int i = 0; i < 50; ++i) {
        const double mid = 0.5 * (lo + hi);
        (hits_zero(mid) ? lo : hi) = mid;
    }
    return lo;
}

} // namespace oracles
