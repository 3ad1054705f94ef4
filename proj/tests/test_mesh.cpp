/**
 * @file test_mesh.cpp
 * @brief Unit tests for sphere meshes (icosphere and circle decompositions),
 *        chain components of the sphere dynamics over a mesh, limit-set
 *        candidates, and trajectory limit classification.
 */
#include "doctest.h"

#include <cmath>

#include "pflow/mesh.hpp"
#include "pflow/scenario.hpp"

using namespace pflow;

namespace {

struct Decomposed {
    LinearSystem sys;
    SpectralData sd;
    Mat Gp;
};

Decomposed example_case(int k) {
    Decomposed d{scenario_preset("example" + std::to_string(k)).system(), {}, {}};
    d.sd = spectral_decompose(d.sys.A);
    d.Gp = lift_gram(d.sd.gram);
    return d;
}

} // namespace

TEST_CASE("icosphere cell counts, diameter halving, exact axis centers") {
    const Mat G = Mat::Identity(3, 3);
    double prev = 0.0;
    for (int k = 1; k <= 4; ++k) {
        const SphereMesh mesh = SphereMesh::icosphere(k, G);
        CHECK(mesh.cell_count() == 10 * (1 << (2 * k)) + 2);
        for (int i = 0; i < mesh.cell_count(); ++i) {
            CHECK(norm_g(mesh.center(i), G) == doctest::Approx(1.0).epsilon(1e-12));
        }
        if (k > 1) {
            const double ratio = mesh.diameter() / prev;
            CHECK(ratio > 0.4);
            CHECK(ratio < 0.6);
        }
        prev = mesh.diameter();

        for (int axis = 0; axis < 3; ++axis) {
            for (double sign : {1.0, -1.0}) {
                Vec e = Vec::Zero(3);
                e[axis] = sign;
                const int cell = mesh.locate(e);
                CHECK((mesh.center(cell) - e).norm() <= 1e-14);
            }
        }
    }
    CHECK_THROWS_AS(SphereMesh::icosphere(0, G), PreconditionError);
    CHECK_THROWS_AS(SphereMesh::icosphere(8, G), PreconditionError);
    CHECK_THROWS_AS(SphereMesh::icosphere(2, Mat::Identity(4, 4)), PreconditionError);
}

TEST_CASE("icosphere locate picks the chordally nearest center") {
    const Mat G = Mat::Identity(3, 3);
    const SphereMesh mesh = SphereMesh::icosphere(2, G);
    for (int i = 0; i < mesh.cell_count(); i += 7) {
        CHECK(mesh.locate(mesh.center(i)) == i);
        CHECK(mesh.locate(2.5 * mesh.center(i)) == i);
    }
}

TEST_CASE("circle mesh geometry") {
    const auto d = example_case(4);
    Mat basis = Mat::Zero(4, 2);
    basis(0, 0) = 1.0;
    basis(1, 1) = 1.0;
    basis.col(0) /= norm_g(basis.col(0), d.Gp);
    basis.col(1) -= dot_g(basis.col(1), basis.col(0), d.Gp) * basis.col(0);
    basis.col(1) /= norm_g(basis.col(1), d.Gp);

    const SphereMesh mesh = SphereMesh::circle(basis, 24, d.Gp);
    CHECK(mesh.cell_count() == 24);
    CHECK(mesh.diameter() == doctest::Approx(2.0 * std::sin(M_PI / 24.0)));
    for (int i = 0; i < 24; ++i) {
        CHECK(norm_g(mesh.center(i), d.Gp) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(mesh.locate(mesh.center(i)) == i);
    }
    CHECK_THROWS_AS(SphereMesh::circle(basis, 4, d.Gp), PreconditionError);
    CHECK_THROWS_AS(SphereMesh::circle(2.0 * basis, 24, d.Gp), PreconditionError);
}

TEST_CASE("saddle chain components over the sphere mesh") {
    const auto d = example_case(1);
    const SphereMesh mesh = SphereMesh::icosphere(4, d.Gp);
    SphereGraphParams params;
    const auto sets = sphere_chain_sets(d.sys, d.sd, mesh, params);

    REQUIRE(sets.size() == 6);
    for (std::size_t k = 1; k < sets.size(); ++k) {
        CHECK(sets[k - 1].cells.size() >= sets[k].cells.size());
    }
    // Two central components (the control-set images on each hemisphere),
    // four equator components: the attracting pair on the growing axis and
    // the repelling pair on the decaying axis.
    int equator = 0;
    for (const auto& s : sets) equator += s.equator ? 1 : 0;
    CHECK(equator == 4);
    CHECK(!sets[0].equator);
    CHECK(!sets[1].equator);
    CHECK(sets[0].cells.size() == sets[1].cells.size());
    CHECK(sets[0].cells.size() > 100);
    CHECK(sets[0].antipodal_partner == 1);
    CHECK(sets[1].antipodal_partner == 0);
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const int p = sets[k].antipodal_partner;
        REQUIRE(p >= 0);
        CHECK(sets[static_cast<std::size_t>(p)].antipodal_partner == static_cast<int>(k));
        CHECK(std::is_sorted(sets[k].cells.begin(), sets[k].cells.end()));
    }
    // The attracting equator pair sits exactly on the growing axis; the
    // repelling pair reduces to the two singletons on the decaying axis.
    CHECK(std::abs(sets[2].representative[0]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(sets[3].representative[0]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sets[4].cells.size() == 1);
    CHECK(sets[5].cells.size() == 1);
    CHECK(std::abs(sets[4].representative[1]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(sets[5].representative[1]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a periodic equator circle is one self-antipodal chain component") {
    const auto d = example_case(4);
    Mat basis = Mat::Zero(4, 2);
    basis(0, 0) = 1.0;
    basis(1, 1) = 1.0;
    basis.col(0) /= norm_g(basis.col(0), d.Gp);
    basis.col(1) -= dot_g(basis.col(1), basis.col(0), d.Gp) * basis.col(0);
    basis.col(1) /= norm_g(basis.col(1), d.Gp);
    const SphereMesh mesh = SphereMesh::circle(basis, 100, d.Gp);
    SphereGraphParams params;
    const auto sets = sphere_chain_sets(d.sys, d.sd, mesh, params);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].cells.size() == 100);
    CHECK(sets[0].equator);
    CHECK(sets[0].antipodal_partner == 0);
}

TEST_CASE("equator candidates per decomposition") {
    SUBCASE("two simple spaces give two antipodal pairs") {
        const auto d = example_case(1);
        const auto cands = equator_candidates(d.sys, d.sd);
        REQUIRE(cands.size() == 2);
        for (const auto& c : cands) {
            CHECK(c.kind == LimitCandidate::Kind::kEquatorPair);
            CHECK(c.point.size() == 3);
            CHECK(c.point[2] == 0.0);
            CHECK(norm_g(c.point, d.Gp) == doctest::Approx(1.0).epsilon(1e-12));
            const SpherePoint on = project_to_sphere(c.point, d.Gp);
            CHECK(candidate_distance(c, on, d.Gp) <= 1e-14);
            const SpherePoint anti = project_to_sphere((-c.point).eval(), d.Gp);
            CHECK(candidate_distance(c, anti, d.Gp) <= 1e-14);
        }
        CHECK(cands[0].name != cands[1].name);
    }

    SUBCASE("a plane space becomes a subsphere candidate") {
        const auto d = example_case(5);
        const auto cands = equator_candidates(d.sys, d.sd);
        REQUIRE(cands.size() == 3);
        int pairs = 0, subspheres = 0;
        for (const auto& c : cands) {
            if (c.kind == LimitCandidate::Kind::kEquatorPair) ++pairs;
            if (c.kind == LimitCandidate::Kind::kEquatorSubsphere) {
                ++subspheres;
                CHECK(c.projector.rows() == 4);
                // Rank-2 projector: trace counts the space dimension.
                CHECK(c.projector.trace() == doctest::Approx(2.0).epsilon(1e-10));
                // Any unit vector of the plane at r = 0 lies on the candidate
                // (the chordal distance is a square root of a roundoff-level
                // quantity, hence the 1e-7 slack).
                Vec y = Vec::Zero(5);
                y[1] = 1.0;
                CHECK(candidate_distance(c, project_to_sphere(y, d.Gp), d.Gp) <= 1e-7);
                y[2] = 1.0;
                CHECK(candidate_distance(c, project_to_sphere(y, d.Gp), d.Gp) <= 1e-7);
            }
        }
        CHECK(pairs == 2);
        CHECK(subspheres == 1);
    }
}

TEST_CASE("central candidate for a constant control is the chart image pair") {
    const auto d = example_case(1);
    const ControlSignal u = ControlSignal::constant((Vec(1) << 1.0).finished());
    const LimitCandidate c = central_candidate(d.sys, d.sd, u);
    CHECK(c.kind == LimitCandidate::Kind::kPointCloudPair);
    // One stored sample; the antipodal copy is implied by the pair kind.
    REQUIRE(c.cloud.cols() == 1);
    const Vec e = bounded_solution(d.sys, d.sd, u, 0.0).value;
    const SpherePoint chart = chart_to_sphere(e, d.Gp);
    CHECK((c.cloud.col(0) - chart.y).norm() <= 1e-9);
    CHECK(candidate_distance(c, chart, d.Gp) <= 1e-7);
    const SpherePoint anti = project_to_sphere((-chart.y).eval(), d.Gp);
    CHECK(candidate_distance(c, anti, d.Gp) <= 1e-7);
    CHECK(c.resolution == 0.0);
}

TEST_CASE("central candidate from computed cells mirrors every center") {
    const BoxGrid grid = BoxGrid::cube(1.0, 2, 5);
    CellSet cells(grid.cell_count());
    cells.set(0);
    cells.set(12);
    const Mat Gp = Mat::Identity(3, 3);
    const LimitCandidate c = central_candidate_from_cells(grid, cells, Gp);
    CHECK(c.kind == LimitCandidate::Kind::kPointCloudPair);
    CHECK(c.cloud.cols() == 2); // one column per cell center
    for (int k = 0; k < c.cloud.cols(); ++k) {
        CHECK(norm_g(c.cloud.col(k), Gp) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const SpherePoint mid = chart_to_sphere(grid.center(12), Gp);
    CHECK(candidate_distance(c, mid, Gp) <= 1e-7);
    const SpherePoint anti = project_to_sphere((-mid.y).eval(), Gp);
    CHECK(candidate_distance(c, anti, Gp) <= 1e-7);
    CHECK(c.resolution == doctest::Approx(grid.diameter()));

    CellSet empty(grid.cell_count());
    CHECK_THROWS_AS(central_candidate_from_cells(grid, empty, Gp), PreconditionError);
}

TEST_CASE("limit classification: uncontrolled saddle tails on the growing axis") {
    const auto d = example_case(1);
    const ControlSignal u = ControlSignal::constant(Vec::Zero(1));
    auto candidates = equator_candidates(d.sys, d.sd);
    candidates.push_back(central_candidate(d.sys, d.sd, u));

    const SpherePoint s0 = chart_to_sphere((Vec(2) << 0.37, -0.22).finished(), d.Gp);
    const LimitClassification cls =
        limit_set(d.sys, d.sd, s0, u, 20.0, 100.0, candidates, 0.1);

    REQUIRE(cls.names.size() == candidates.size());
    REQUIRE(cls.best >= 0);
    CHECK(!cls.inconclusive);
    CHECK(cls.best_distance <= 1e-6);
    CHECK(cls.tail_diameter <= 1e-6);
    CHECK(cls.distances[static_cast<std::size_t>(cls.best)] == cls.best_distance);
    // The winner is the antipodal pair on the growing axis.
    const auto& win = candidates[static_cast<std::size_t>(cls.best)];
    CHECK(win.kind == LimitCandidate::Kind::kEquatorPair);
    CHECK(std::abs(win.point[0]) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(limit_set(d.sys, d.sd, s0, u, 0.0, 10.0, candidates, 0.1),
                    PreconditionError);
    CHECK_THROWS_AS(limit_set(d.sys, d.sd, s0, u, 5.0, 10.0, {}, 0.1),
                    PreconditionError);
}
