/**
 * @file test_tangent.cpp
 * @brief Unit tests for the linearized sphere flow: tangent projection, the
 *        closed-form equator cocycle against both general backends and finite
 *        differences, subbundle frames and their growth rates, exponent
 *        estimation in both time directions, and the stable-direction
 *        convergence check.
 */
#include "doctest.h"

#include "pflow/scenario.hpp"
#include "pflow/tangent.hpp"

using namespace pflow;

namespace {

LinearSystem example_system(int k) {
    return scenario_preset("example" + std::to_string(k)).system();
}

SpherePoint equator_point(const Vec& x, const Mat& Gp) {
    Vec y = Vec::Zero(x.size() + 1);
    y.head(x.size()) = x;
    return project_to_sphere(y, Gp);
}

} // namespace

TEST_CASE("tangent projection is the scaled gram-orthogonal complement") {
    const Mat Gp = Mat::Identity(4, 4);
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        const Vec y = 2.5 * rng.unit_vector(4);
        const Vec v = rng.unit_vector(4);
        const TangentVector w = tangent_project(y, v, Gp);
        CHECK(std::abs(dot_g(w.v, w.base, Gp)) <= 1e-12);
        CHECK(norm_g(w.base, Gp) == doctest::Approx(1.0).epsilon(1e-12));
        // Scaling by 1/||y||: a tangent input of unit length maps to 1/2.5.
        const Vec tang = v - dot_g(v, w.base, Gp) * w.base;
        CHECK(norm_g(w.v, Gp) == doctest::Approx(norm_g(tang, Gp) / 2.5).epsilon(1e-12));
    }
}

TEST_CASE("closed-form equator cocycle agrees with both backends and FD") {
    for (int ex : {1, 3}) {
        const LinearSystem sys = example_system(ex);
        const SpectralData sd = spectral_decompose(sys.A);
        const Mat Gp = lift_gram(sd.gram);
        Rng rng(17 + static_cast<std::uint64_t>(ex));
        for (int k = 0; k < 10; ++k) {
            const SpherePoint s = equator_point(rng.unit_vector(sys.n()), Gp);
            TangentVector w = tangent_project(s.y, rng.unit_vector(sys.n() + 1), Gp);
            w.v /= norm_g(w.v, Gp);
            const double t = rng.uniform(-2.0, 2.0);
            ControlSignal u = ControlSignal::constant(
                (Vec(1) << rng.uniform(-1.0, 1.0)).finished());

            const TangentVector closed = linearized_cocycle_equator(sys, sd, t, s, u, w);
            const TangentVector lift = linearized_cocycle_general(
                sys, sd, t, s, u, w, CocycleBackend::kExactLift);
            const TangentVector vari = linearized_cocycle_general(
                sys, sd, t, s, u, w, CocycleBackend::kVariational);
            const double scale = std::max(1.0, norm_g(closed.v, Gp));
            CHECK(norm_g(closed.v - lift.v, Gp) <= 1e-9 * scale);
            CHECK(norm_g(closed.v - vari.v, Gp) <= 1e-5 * scale);
            CHECK(std::abs(dot_g(lift.v, lift.base, Gp)) <= 1e-9);

            if (t >= 0.0) {
                const Vec fd = linearized_cocycle_fd(sys, sd, t, s, u, w, 1e-5);
                CHECK(norm_g(closed.v - fd, Gp) <= 1e-5 * scale);
            }
        }
    }
}

TEST_CASE("cocycle composition over an intermediate time") {
    const LinearSystem sys = example_system(1);
    const SpectralData sd = spectral_decompose(sys.A);
    const Mat Gp = lift_gram(sd.gram);
    const ControlSignal u = ControlSignal::constant((Vec(1) << 0.4).finished());
    const SpherePoint s = equator_point((Vec(2) << 0.6, 0.8).finished(), Gp);
    TangentVector w = tangent_project(s.y, (Vec(3) << 0.1, -0.3, 0.9).finished(), Gp);

    const TangentVector direct = linearized_cocycle_general(
        sys, sd, 2.0, s, u, w, CocycleBackend::kExactLift);
    const TangentVector half = linearized_cocycle_general(
        sys, sd, 0.8, s, u, w, CocycleBackend::kExactLift);
    const SpherePoint mid = sphere_flow(sys, sd, 0.8, s, u);
    const TangentVector rest = linearized_cocycle_general(
        sys, sd, 1.2, mid, shift(u, 0.8), {mid.y, half.v}, CocycleBackend::kExactLift);
    CHECK(norm_g(direct.v - rest.v, Gp) <= 1e-9 * std::max(1.0, norm_g(direct.v, Gp)));
}

TEST_CASE("subbundle frames: labels, dimensions, rates, tangency") {
    const ControlSignal u0 = ControlSignal::constant(Vec::Zero(1));

    SUBCASE("three simple exponents") {
        const LinearSystem sys = example_system(2);
        const SpectralData sd = spectral_decompose(sys.A);
        const Mat Gp = lift_gram(sd.gram);
        const SpherePoint s = equator_point((Vec(3) << 0.0, 1.0, 0.0).finished(), Gp);
        const int i0 = sd.index_of_exponent(1.0);
        const auto frames = selgrade_frames(sys, sd, i0, s, u0);
        REQUIRE(frames.size() == 3);
        int total = 0;
        for (const auto& f : frames) {
            total += static_cast<int>(f.basis.cols());
            for (int c = 0; c < f.basis.cols(); ++c) {
                CHECK(std::abs(dot_g(f.basis.col(c), s.y, Gp)) <= 1e-8);
            }
            if (f.label == "V1") CHECK(f.theoretical_exponent == doctest::Approx(1.0));
            if (f.label == "Vc") CHECK(f.theoretical_exponent == doctest::Approx(-1.0));
            if (f.label == "V2") CHECK(f.theoretical_exponent == doctest::Approx(-2.0));
        }
        CHECK(total == sys.n());
    }

    SUBCASE("rotating plane emits a neutral frame inside its own sphere") {
        const LinearSystem sys = example_system(5);
        const SpectralData sd = spectral_decompose(sys.A);
        const Mat Gp = lift_gram(sd.gram);
        const SpherePoint s = equator_point((Vec(4) << 0.0, 1.0, 0.0, 0.0).finished(), Gp);
        const auto frames = selgrade_frames(sys, sd, sd.index_of_exponent(1.0), s, u0);
        REQUIRE(frames.size() == 4);
        std::vector<std::string> labels;
        for (const auto& f : frames) labels.push_back(f.label);
        for (const char* want : {"V1", "Vi0", "Vc", "V3"}) {
            CHECK(std::count(labels.begin(), labels.end(), std::string(want)) == 1);
        }
    }

    SUBCASE("preconditions") {
        const LinearSystem sys = example_system(2);
        const SpectralData sd = spectral_decompose(sys.A);
        const Mat Gp = lift_gram(sd.gram);
        const SpherePoint off = chart_to_sphere((Vec(3) << 0.0, 1.0, 0.0).finished(), Gp);
        CHECK_THROWS_AS(selgrade_frames(sys, sd, 1, off, u0), PreconditionError);
        const SpherePoint wrong_space =
            equator_point((Vec(3) << 1.0, 0.0, 0.0).finished(), Gp);
        CHECK_THROWS_AS(selgrade_frames(sys, sd, 1, wrong_space, u0), PreconditionError);
    }
}

TEST_CASE("the bounded-direction frame column follows the bounded solution") {
    const LinearSystem sys = example_system(1);
    const SpectralData sd = spectral_decompose(sys.A);
    const Mat Gp = lift_gram(sd.gram);
    const ControlSignal u = ControlSignal::constant((Vec(1) << 1.0).finished());
    const SpherePoint s = equator_point((Vec(2) << 1.0, 0.0).finished(), Gp);
    const auto frames = selgrade_frames(sys, sd, 0, s, u);
    for (const auto& f : frames) {
        if (f.label != "Vc") continue;
        REQUIRE(f.basis.cols() == 1);
        // The column must be tangent and proportional to (e(u,0), 1) after
        // removing the base component; e(u, 0) = (-1, 1) for this control.
        Vec dir = Vec::Zero(3);
        dir.head(2) = bounded_solution(sys, sd, u, 0.0).value;
        dir[2] = 1.0;
        const TangentVector ref = tangent_project(s.y, dir, Gp);
        const Vec a = f.basis.col(0) / norm_g(f.basis.col(0), Gp);
        const Vec b = ref.v / norm_g(ref.v, Gp);
        CHECK(std::min((a - b).norm(), (a + b).norm()) <= 1e-10);
    }
}

TEST_CASE("exponent estimation recovers the frame rates in both directions") {
    const LinearSystem sys = example_system(2);
    const SpectralData sd = spectral_decompose(sys.A);
    const Mat Gp = lift_gram(sd.gram);
    const ControlSignal u = ControlSignal::constant(Vec::Zero(1));
    const SpherePoint s = equator_point((Vec(3) << 0.0, 1.0, 0.0).finished(), Gp);
    const int i0 = sd.index_of_exponent(1.0);
    const auto frames = selgrade_frames(sys, sd, i0, s, u);

    for (const auto& f : frames) {
        const double fwd = frame_exponent_estimate(sys, sd, s, u, f, 30.0);
        CHECK(std::abs(fwd - f.theoretical_exponent) <= 0.05);
        const double bwd = frame_exponent_estimate(sys, sd, s, u, f, -30.0);
        CHECK(std::abs(bwd - f.theoretical_exponent) <= 0.05);
    }

    SUBCASE("series bookkeeping") {
        const Vec w0 = frames[0].basis.col(0);
        const ExponentSeries series = exponent_series(sys, sd, s, u, w0, 5.0);
        REQUIRE(series.times.size() == series.cumlog.size());
        CHECK(series.times.front() == 0.0);
        CHECK(series.cumlog.front() == 0.0);
        CHECK(series.times.back() == doctest::Approx(5.0));
    }
}

TEST_CASE("stable bundle rate and the convergence check") {
    const LinearSystem sys = example_system(2);
    const SpectralData sd = spectral_decompose(sys.A);
    const Mat Gp = lift_gram(sd.gram);
    const int i0 = sd.index_of_exponent(1.0);
    CHECK(stable_bundle_rate(sd, i0) == doctest::Approx(-1.0));
    CHECK(stable_bundle_rate(sd, sd.index_of_exponent(2.0)) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(stable_bundle_rate(sd, sd.index_of_exponent(-1.0)), PreconditionError);

    const ControlSignal u = ControlSignal::constant(Vec::Zero(1));
    const SpherePoint s = equator_point((Vec(3) << 0.0, 1.0, 0.0).finished(), Gp);
    const auto frames = selgrade_frames(sys, sd, i0, s, u);
    Mat basis(4, 0);
    for (const auto& f : frames) {
        if (f.theoretical_exponent < -1e-12) {
            Mat wider(4, basis.cols() + f.basis.cols());
            wider << basis, f.basis;
            basis = wider;
        }
    }
    REQUIRE(basis.cols() == 2);
    const ConvergenceReport rep =
        stable_convergence_check(sys, sd, i0, s, u, basis, 1e-3, -0.5, 20.0, 3, 99);
    CHECK(rep.converged);
    CHECK(rep.escaped);
    CHECK(!rep.inconclusive);
    CHECK(rep.stable_rate == doctest::Approx(-1.0));
    CHECK(rep.cases.size() == 3);
    CHECK(rep.seed == 99);
}
