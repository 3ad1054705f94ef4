/**
 * @file test_spectral.cpp
 * @brief Unit tests for the Lyapunov-space decomposition: exponent ordering
 *        and clustering, space dimensions and invariance, the adapted gram
 *        matrix, projectors, and the structured example matrices.
 */
#include "doctest.h"

#include "pflow/spectral.hpp"

using namespace pflow;

namespace {

Mat diag3(double a, double b, double c) {
    Mat A = Mat::Zero(3, 3);
    A(0, 0) = a;
    A(1, 1) = b;
    A(2, 2) = c;
    return A;
}

double invariance_residual(const SpectralData& sd, int i) {
    const Mat W = sd.spaces[static_cast<std::size_t>(i)];
    return (sd.A * W - W * sd.restricted(i)).norm();
}

} // namespace

TEST_CASE("diagonal system: three simple exponents in decreasing order") {
    const SpectralData sd = spectral_decompose(diag3(2.0, 1.0, -1.0));
    REQUIRE(sd.space_count() == 3);
    CHECK(sd.exponents[0] == doctest::Approx(2.0));
    CHECK(sd.exponents[1] == doctest::Approx(1.0));
    CHECK(sd.exponents[2] == doctest::Approx(-1.0));
    CHECK(sd.center_index == -1);
    for (int i = 0; i < 3; ++i) {
        CHECK(sd.dim(i) == 1);
        CHECK(invariance_residual(sd, i) <= 1e-12);
    }
    CHECK(sd.min_hyperbolic_rate() == doctest::Approx(1.0));
    CHECK(sd.index_of_exponent(1.1) == 1);
}

TEST_CASE("defective block: one two-dimensional space, gram-orthogonal split") {
    Mat A = Mat::Zero(3, 3);
    A << 1, 1, 0, 0, 1, 0, 0, 0, -1;
    const SpectralData sd = spectral_decompose(A);
    REQUIRE(sd.space_count() == 2);
    CHECK(sd.exponents[0] == doctest::Approx(1.0));
    CHECK(sd.exponents[1] == doctest::Approx(-1.0));
    CHECK(sd.dim(0) == 2);
    CHECK(sd.dim(1) == 1);
    CHECK(invariance_residual(sd, 0) <= 1e-10);

    // The two spaces must be orthogonal under the adapted gram matrix.
    const Mat W0 = sd.spaces[0], W1 = sd.spaces[1];
    CHECK((W0.transpose() * sd.gram * W1).norm() <= 1e-12);
    // spaces[0] is the plane spanned by e1, e2.
    for (int c = 0; c < 2; ++c) CHECK(std::abs(W0(2, c)) <= 1e-12);
}

TEST_CASE("spiral block: complex pair clustered into one plane") {
    Mat A = Mat::Zero(3, 3);
    A << 1, 1, 0, -1, 1, 0, 0, 0, -1;
    const SpectralData sd = spectral_decompose(A);
    REQUIRE(sd.space_count() == 2);
    CHECK(sd.exponents[0] == doctest::Approx(1.0));
    CHECK(sd.dim(0) == 2);
    CHECK(invariance_residual(sd, 0) <= 1e-10);
    // Restricted to its plane the map keeps the spiral eigenvalues.
    const Eigen::VectorXcd ev = sd.restricted(0).eigenvalues();
    CHECK(ev[0].real() == doctest::Approx(1.0));
    CHECK(std::abs(ev[0].imag()) == doctest::Approx(1.0));
}

TEST_CASE("symmetric off-diagonal matrix: eigenlines orthogonal in the adapted gram") {
    Mat A(2, 2);
    A << 0, 1, 1, 0; // eigenvalues +1 along (1,1), -1 along (1,-1)
    const SpectralData sd = spectral_decompose(A);
    REQUIRE(sd.space_count() == 2);
    const Vec v0 = sd.spaces[0].col(0), v1 = sd.spaces[1].col(0);
    CHECK(std::abs(v0.dot(Vec(sd.gram * v1))) <= 1e-12);
    CHECK(std::abs(std::abs(v0[0]) - std::abs(v0[1])) <= 1e-12);
}

TEST_CASE("projectors decompose the identity and respect the splitting") {
    const SpectralData sd = spectral_decompose(diag3(2.0, 0.0, -1.0));
    REQUIRE(sd.space_count() == 3);
    CHECK(sd.center_index == 1);
    Mat sum = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
        const Mat P = sd.proj_space(i);
        CHECK((P * P - P).norm() <= 1e-12);
        sum += P;
    }
    CHECK((sum - Mat::Identity(3, 3)).norm() <= 1e-12);
    CHECK((sd.proj_center() - sd.proj_space(1)).norm() <= 1e-12);
    CHECK((sd.proj_hyperbolic() - (sd.proj_space(0) + sd.proj_space(2))).norm() <= 1e-12);
    CHECK((sd.proj_plus() - sd.proj_space(0)).norm() <= 1e-12);
    CHECK((sd.proj_minus() - sd.proj_space(2)).norm() <= 1e-12);
}

TEST_CASE("a purely rotational system has no hyperbolic rate") {
    Mat A(2, 2);
    A << 0, 1, -1, 0;
    const SpectralData sd = spectral_decompose(A);
    REQUIRE(sd.space_count() == 1);
    CHECK(sd.center_index == 0);
    CHECK_THROWS_AS(sd.min_hyperbolic_rate(), PreconditionError);
}

TEST_CASE("nearby real parts are clustered by the grouping tolerance") {
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = 1.0 + 1e-10;
    const SpectralData sd = spectral_decompose(A);
    REQUIRE(sd.space_count() == 1);
    CHECK(sd.dim(0) == 2);

    SUBCASE("a loose tolerance merges further apart") {
        const SpectralData wide = spectral_decompose(diag3(1.0, 1.0005, -1.0), 1e-2);
        CHECK(wide.space_count() == 2);
        CHECK(wide.dim(0) == 2);
    }
}

TEST_CASE("random conjugated saddles decompose with invariant spaces") {
    Rng rng(11);
    for (int k = 0; k < 20; ++k) {
        Mat Q(3, 3);
        do {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) Q(i, j) = rng.uniform(-1.0, 1.0);
        } while (std::abs(Q.determinant()) < 0.1);
        const Mat A = Q * diag3(1.5, 0.5, -1.0) * Q.inverse();
        const SpectralData sd = spectral_decompose(A, 1e-4);
        REQUIRE(sd.space_count() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(invariance_residual(sd, i) <=
                  1e-8 * std::max(1.0, (sd.A * sd.spaces[static_cast<std::size_t>(i)]).norm()));
        }
        // The adapted gram must make the spaces mutually orthogonal.
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                CHECK((sd.spaces[static_cast<std::size_t>(i)].transpose() * sd.gram *
                       sd.spaces[static_cast<std::size_t>(j)])
                          .norm() <= 1e-9);
            }
    }
}
