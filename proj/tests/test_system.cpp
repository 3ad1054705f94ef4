/**
 * @file test_system.cpp
 * @brief Unit tests for control ranges, piecewise-constant signals, the exact
 *        flow and lifted flow, and the bounded solution of the hyperbolic
 *        part.
 */
#include "doctest.h"

#include "oracles.hpp"
#include "pflow/system.hpp"

using namespace pflow;

namespace {

LinearSystem saddle_system() {
    Mat A(2, 2);
    A << 1, 0, 0, -1;
    Mat B(2, 1);
    B << 1, 1;
    return LinearSystem(A, B, ControlRange::box((Mat(1, 2) << -1, 1).finished()));
}

} // namespace

TEST_CASE("control box validation and derived quantities") {
    const ControlRange box =
        ControlRange::box((Mat(2, 2) << -1, 2, -0.5, 0.5).finished());
    CHECK(box.dim() == 2);
    CHECK(box.is_box());
    CHECK(box.vertices().size() == 4);
    CHECK(box.max_norm() == doctest::Approx(2.0));
    // 3 x 3 lattice; the rest control is appended when it is not a lattice
    // point (the first axis never samples 0 on this asymmetric box).
    const auto samples = box.grid_sample(3);
    CHECK(samples.size() == 10);
    CHECK(samples.back().isZero(0.0));
    const ControlRange sym =
        ControlRange::box((Mat(1, 2) << -1.0, 1.0).finished());
    bool has_zero = false, has_lo = false, has_hi = false;
    for (const auto& v : sym.grid_sample(3)) {
        has_zero = has_zero || v[0] == 0.0;
        has_lo = has_lo || v[0] == -1.0;
        has_hi = has_hi || v[0] == 1.0;
    }
    CHECK(has_zero);
    CHECK(has_lo);
    CHECK(has_hi);

    CHECK_THROWS_AS(ControlRange::box((Mat(1, 2) << 0.0, 1.0).finished()),
                    PreconditionError);
    CHECK_THROWS_AS(ControlRange::box((Mat(1, 2) << 1.0, -1.0).finished()),
                    PreconditionError);
}

TEST_CASE("polytope ranges require 0 strictly inside") {
    const Vec p = (Vec(1) << 1.0).finished();
    const Vec q = (Vec(1) << -0.5).finished();
    const ControlRange range = ControlRange::polytope({p, q}, 1);
    CHECK(range.dim() == 1);
    CHECK(!range.is_box());
    CHECK(range.max_norm() == doctest::Approx(1.0));
    CHECK_THROWS_AS(ControlRange::polytope({p}, 1), PreconditionError);
}

TEST_CASE("piecewise signal evaluation, switching, and shifting") {
    const Vec a = (Vec(1) << -1.0).finished();
    const Vec b = (Vec(1) << 1.0).finished();
    const ControlSignal u({0.0, 2.0}, {a, b});
    CHECK(u.value(-5.0) == a); // constant extension backwards
    CHECK(u.value(0.0) == a);
    CHECK(u.value(1.999) == a);
    CHECK(u.value(2.0) == b);
    CHECK(u.value(100.0) == b);

    const auto sw = u.switch_times(-1.0, 3.0);
    REQUIRE(sw.size() == 2);
    CHECK(sw[0] == doctest::Approx(0.0));
    CHECK(sw[1] == doctest::Approx(2.0));

    const ControlSignal v = shift(u, 1.5);
    for (double t : {-2.0, 0.4, 0.5, 0.6, 3.0}) {
        CHECK((v.value(t) - u.value(1.5 + t)).norm() == 0.0);
    }

    SUBCASE("periodic repetition") {
        const ControlSignal w({0.0, 1.0}, {a, b}, 2.0);
        CHECK(w.value(0.5) == a);
        CHECK(w.value(1.5) == b);
        CHECK(w.value(2.5) == a); // one period later
        CHECK(w.value(-0.5) == b);
        const auto wsw = w.switch_times(0.0, 4.0);
        CHECK(wsw.size() == 3); // 1, 2, 3
    }

    SUBCASE("breakpoints must increase strictly") {
        CHECK_THROWS_AS(ControlSignal({0.0, 0.0}, {a, b}), PreconditionError);
    }
}

TEST_CASE("flow reproduces the closed-form saddle solution") {
    const LinearSystem sys = saddle_system();
    const Vec x0 = (Vec(2) << 0.4, -0.7).finished();

    SUBCASE("constant control") {
        const ControlSignal u = ControlSignal::constant((Vec(1) << 0.5).finished());
        for (double t : {-2.0, -0.5, 0.0, 0.3, 1.0, 4.0}) {
            const Vec x = flow(sys, t, x0, u);
            CHECK((x - oracles::saddle_flow(x0, 0.5, t)).norm() <= 1e-12 * std::exp(std::abs(t)));
        }
    }

    SUBCASE("switching control composes piecewise") {
        const Vec ua = (Vec(1) << -1.0).finished();
        const Vec ub = (Vec(1) << 1.0).finished();
        const ControlSignal u({0.0, 1.0}, {ua, ub});
        const Vec direct = flow(sys, 2.5, x0, u);
        const Vec mid = oracles::saddle_flow(x0, -1.0, 1.0);
        const Vec ref = oracles::saddle_flow(mid, 1.0, 1.5);
        CHECK((direct - ref).norm() <= 1e-12 * ref.norm());
    }
}

TEST_CASE("lifted flow: r frozen, r = 0 linear, r = 1 controlled, homogeneous") {
    const LinearSystem sys = saddle_system();
    const ControlSignal u = ControlSignal::constant((Vec(1) << 0.8).finished());
    const Vec x0 = (Vec(2) << 0.2, 0.9).finished();

    const LiftedState free = lifted_flow(sys, 1.3, {x0, 0.0}, u);
    CHECK(free.r == 0.0);
    CHECK((free.x - oracles::saddle_flow(x0, 0.0, 1.3)).norm() <= 1e-12 * free.x.norm());

    const LiftedState ctrl = lifted_flow(sys, 1.3, {x0, 1.0}, u);
    CHECK(ctrl.r == 1.0);
    CHECK((ctrl.x - flow(sys, 1.3, x0, u)).norm() == 0.0);

    const double lam = -2.5;
    const LiftedState scaled = lifted_flow(sys, 1.3, {lam * x0, lam}, u);
    CHECK((scaled.x - lam * ctrl.x).norm() <= 1e-12 * scaled.x.norm());
    CHECK(scaled.r == lam);
}

TEST_CASE("propagator steps are cached and exact") {
    const LinearSystem sys = saddle_system();
    const Propagator prop(sys);
    const Vec u = (Vec(1) << 1.0).finished();
    Vec x = (Vec(2) << 0.0, 0.0).finished();
    prop.step(x, 0.25, u);
    Vec y = (Vec(2) << 0.0, 0.0).finished();
    prop.step(y, 0.25, u); // second use hits the cache
    CHECK((x - y).norm() == 0.0);
    CHECK((x - oracles::saddle_flow(Vec::Zero(2), 1.0, 0.25)).norm() <= 1e-13);
}

TEST_CASE("bounded solution of the saddle under u = 1 is the constant (-1, 1)") {
    const LinearSystem sys = saddle_system();
    const SpectralData sd = spectral_decompose(sys.A);
    const ControlSignal u = ControlSignal::constant((Vec(1) << 1.0).finished());
    for (double t : {-3.0, 0.0, 1.0, 7.5}) {
        const BoundedSolution e = bounded_solution(sys, sd, u, t);
        CHECK(e.value[0] == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(e.value[1] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(e.truncation_bound <= 1e-12);
    }

    SUBCASE("shift equivariance on a periodic signal") {
        const Vec a = (Vec(1) << -1.0).finished();
        const Vec b = (Vec(1) << 1.0).finished();
        const ControlSignal w({0.0, 1.0}, {a, b}, 2.0);
        const Vec direct = bounded_solution(sys, sd, w, 2.7).value;
        const Vec shifted = bounded_solution(sys, sd, shift(w, 2.7), 0.0).value;
        CHECK((direct - shifted).norm() <= 1e-9);
    }

    SUBCASE("requires a hyperbolic part") {
        Mat A(2, 2);
        A << 0, 1, -1, 0;
        Mat B(2, 1);
        B << 1, 0;
        const LinearSystem rot(A, B, ControlRange::box((Mat(1, 2) << -1, 1).finished()));
        const SpectralData rsd = spectral_decompose(rot.A);
        CHECK_THROWS_AS(bounded_solution(rot, rsd, u, 0.0), PreconditionError);
    }
}

TEST_CASE("lifted growth rate of the saddle matches the dominant exponent") {
    const LinearSystem sys = saddle_system();
    const SpectralData sd = spectral_decompose(sys.A);
    const ControlSignal u = ControlSignal::constant(Vec::Zero(1));
    const LiftedState y0{(Vec(2) << 1.0, 1.0).finished(), 0.0};
    // ||y(t)|| = sqrt(e^{2t} + e^{-2t}) / sqrt(2) relative to ||y0||, so the
    // finite-horizon quotient carries an exact -log(2)/(2T) offset.
    const double expected = 1.0 - std::log(2.0) / 80.0;
    CHECK(lifted_exponent(sys, sd, y0, u, 40.0) ==
          doctest::Approx(expected).epsilon(1e-6));
}
