/**
 * @file test_reach.cpp
 * @brief Unit tests for the grid machinery: box grids and cell indexing, the
 *        bitset cell container, the transition graph in both edge modes,
 *        reachable/controllable sets, the control set through the origin
 *        against a one-dimensional brute-force oracle, chain-transitive
 *        components, and CSV serialization of cell sets.
 */
#include "doctest.h"
#include "oracles.hpp"

#include "pflow/reach.hpp"
#include "pflow/scenario.hpp"

using namespace pflow;

TEST_CASE("box grid indexing round-trips and half-open cell semantics") {
    const BoxGrid g((Vec(2) << -1.0, 0.0).finished(),
                    (Vec(2) << 1.0, 4.0).finished(), {4, 8});
    CHECK(g.dims() == 2);
    CHECK(g.cell_count() == 32);
    CHECK(g.width(0) == doctest::Approx(0.5));
    CHECK(g.width(1) == doctest::Approx(0.5));
    CHECK(g.diameter() == doctest::Approx(std::sqrt(0.5)));

    for (long i = 0; i < g.cell_count(); ++i) {
        CHECK(g.flat_index(g.multi_index(i)) == i);
        const auto cell = g.locate(g.center(i));
        REQUIRE(cell.has_value());
        CHECK(*cell == i);
    }
    // Last axis fastest: stepping the second coordinate advances the index by 1.
    CHECK(g.flat_index({0, 1}) == 1);
    CHECK(g.flat_index({1, 0}) == 8);

    // Half-open cells: a shared boundary point belongs to the upper cell,
    // except at the top face which still belongs to the box.
    CHECK(*g.locate((Vec(2) << -1.0, 0.0).finished()) == 0);
    CHECK(*g.locate((Vec(2) << -0.5, 0.0).finished()) == 8);
    CHECK(g.locate((Vec(2) << 1.0, 4.0).finished()).has_value());
    CHECK_FALSE(g.locate((Vec(2) << 1.0001, 0.0).finished()).has_value());
    CHECK_FALSE(g.locate((Vec(2) << 0.0, -0.0001).finished()).has_value());

    const BoxGrid c = BoxGrid::cube(1.5, 2, 51);
    CHECK(c.lo[0] == doctest::Approx(-1.5));
    CHECK(c.hi[1] == doctest::Approx(1.5));
    CHECK(c.cell_count() == 51l * 51l);
    // Odd cell count per axis puts the origin in the exact middle cell.
    CHECK(*c.locate(Vec::Zero(2)) == (51l * 51l - 1) / 2);

    CHECK_THROWS_AS(BoxGrid(Vec::Zero(2), Vec::Ones(3), {2, 2}), PreconditionError);
    CHECK_THROWS_AS(BoxGrid(Vec::Ones(2), Vec::Zero(2), {2, 2}), PreconditionError);
    CHECK_THROWS_AS(BoxGrid(Vec::Zero(2), Vec::Ones(2), {0, 2}), PreconditionError);
}

TEST_CASE("cell set bit operations") {
    CellSet s(200);
    CHECK(s.universe() == 200);
    CHECK(s.count() == 0);
    CHECK(!s.any());
    s.set(3);
    s.set(64);
    s.set(199);
    CHECK(s.count() == 3);
    CHECK(s.test(64));
    CHECK(!s.test(63));
    CHECK(s.cells() == std::vector<long>{3, 64, 199});
    CHECK(s.next(0) == 3);
    CHECK(s.next(4) == 64);
    CHECK(s.next(65) == 199);
    CHECK(s.next(200) == -1);

    s.reset(64);
    CHECK(!s.test(64));

    CellSet r(200);
    r.set_range(60, 70);
    CHECK(r.count() == 11);
    CHECK(r.any_in_range(0, 60));
    CHECK(!r.any_in_range(0, 59));
    CHECK(r.any_in_range(70, 199));
    CHECK(!r.any_in_range(71, 199));

    CellSet u = s;
    u |= r;
    CHECK(u.count() == 13);
    u &= r;
    CHECK(u == r);
    u.subtract(r);
    CHECK(!u.any());
    r.clear();
    CHECK(r.count() == 0);
}

TEST_CASE("time reversal negates the vector field") {
    const LinearSystem sys = scenario_preset("example1").system();
    const LinearSystem rev = time_reversed(sys);
    CHECK((rev.A + sys.A).norm() == 0.0);
    CHECK((rev.B + sys.B).norm() == 0.0);
    // Running the reversed system forward retraces the original backward.
    const ControlSignal u = ControlSignal::constant((Vec(1) << 0.7).finished());
    const Vec x0 = (Vec(2) << 0.3, -0.8).finished();
    const Vec back = flow(sys, -1.3, x0, u);
    const Vec fwd = flow(rev, 1.3, x0, u);
    CHECK((back - fwd).norm() <= 1e-12);
}

TEST_CASE("center-mode graph basics") {
    const LinearSystem sys = scenario_preset("example1").system();
    const BoxGrid grid = BoxGrid::cube(1.5, 2, 15);
    GraphParams p;
    p.tau = 0.05;
    p.mode = EdgeMode::kCenter;

    SUBCASE("inflation below one cell is rejected") {
        p.eps_factor = 0.5;
        CHECK_THROWS_AS(CellGraph(sys, grid, p), PreconditionError);
    }

    SUBCASE("successors are sorted, unique, and include the short-time image") {
        const CellGraph g(sys, grid, p);
        const long origin = *grid.locate(Vec::Zero(2));
        const auto succ = g.successors(origin);
        CHECK(!succ.empty());
        CHECK(std::is_sorted(succ.begin(), succ.end()));
        CHECK(std::adjacent_find(succ.begin(), succ.end()) == succ.end());
        // For a small step the center barely moves, so the cell keeps itself.
        CHECK(std::find(succ.begin(), succ.end(), origin) != succ.end());

        CellSet marked(grid.cell_count());
        g.mark_successors(origin, marked);
        CHECK(marked.cells() == succ);
        CHECK(g.successors_intersect(origin, marked));
        CellSet far(grid.cell_count());
        far.set(grid.cell_count() - 1);
        CHECK(!g.successors_intersect(origin, far));
    }
}

TEST_CASE("reachable set growth and saturation") {
    const LinearSystem sys = scenario_preset("example1").system();
    const BoxGrid grid = BoxGrid::cube(1.5, 2, 31);
    GraphParams p;
    p.tau = 0.5;
    p.mode = EdgeMode::kEnclosure;
    const CellGraph g(sys, grid, p);
    const long origin = *grid.locate(Vec::Zero(2));

    const ReachResult one = reachable_set(g, origin, 1);
    CHECK(one.steps == 1);
    CHECK(!one.saturated);
    CHECK(one.cells.test(origin));

    const ReachResult all = reachable_set(g, origin);
    CHECK(all.saturated);
    CHECK(all.cells.count() >= one.cells.count());
    // The unstable axis drives trajectories out of the box.
    CHECK(all.escaping.any());

    CellSet bad(7);
    CHECK_THROWS_AS(reachable_set(g, bad), PreconditionError);
    CHECK_THROWS_AS(reachable_set(g, grid.cell_count()), PreconditionError);
}

TEST_CASE("saddle control set matches the per-axis brute-force bounds") {
    const LinearSystem sys = scenario_preset("example1").system();
    const BoxGrid grid = BoxGrid::cube(1.5, 2, 51);
    GraphParams p;
    p.tau = 2.0;
    p.mode = EdgeMode::kEnclosure;

    const ControlSetResult res = control_set_D0(sys, grid, p);
    CHECK(res.reach.saturated);
    CHECK(res.control.saturated);
    CHECK(res.cells.test(*grid.locate(Vec::Zero(2))));

    // Supremum of each coordinate over the true control set, measured on the
    // scalar subsystems (both have forcing coefficient 1, bound |u| <= 1).
    const double b1 = oracles::scalar_control_sup(1.0, 1e-4);
    const double b2 = oracles::scalar_reach_sup(-1.0, 1e-4);
    REQUIRE(b1 == doctest::Approx(1.0).epsilon(1e-3));
    REQUIRE(b2 == doctest::Approx(1.0).epsilon(1e-3));

    const double w = grid.width(0);
    for (long idx : res.cells.cells()) {
        const Vec c = grid.center(idx);
        CHECK(std::abs(c[0]) <= b1 + w);
        CHECK(std::abs(c[1]) <= b2 + w);
    }
    // Every cell strictly inside the product of the scalar bounds is kept.
    long missing = 0;
    for (long idx = 0; idx < grid.cell_count(); ++idx) {
        const Vec c = grid.center(idx);
        if (std::abs(c[0]) <= b1 - w && std::abs(c[1]) <= b2 - w &&
            !res.cells.test(idx)) {
            ++missing;
        }
    }
    CHECK(missing == 0);

    SUBCASE("the chain component through the origin closes up the control set") {
        const CellGraph g(sys, grid, p);
        const auto comps = chain_components(g);
        REQUIRE(!comps.empty());
        for (std::size_t k = 1; k < comps.size(); ++k) {
            CHECK(comps[k - 1].count() >= comps[k].count());
        }
        const long origin = *grid.locate(Vec::Zero(2));
        const CellSet* through = nullptr;
        for (const auto& comp : comps) {
            if (comp.test(origin)) through = &comp;
        }
        REQUIRE(through != nullptr);
        for (long idx : through->cells()) {
            const Vec c = grid.center(idx);
            CHECK(std::abs(c[0]) <= b1 + 2 * w);
            CHECK(std::abs(c[1]) <= b2 + 2 * w);
        }
        // The chain set contains the control set (every cell of it can reach
        // the origin cell and be reached back, hence sits in the same class).
        long lost = 0;
        for (long idx : res.cells.cells()) {
            if (!through->test(idx)) ++lost;
        }
        CHECK(lost == 0);
    }
}

TEST_CASE("cell-set CSV layout") {
    const BoxGrid g(Vec::Zero(2), Vec::Ones(2), {2, 2});
    CHECK(cells_csv_header(g) == "index,c1,c2,kind,flags\n");

    CellSet cells(4);
    cells.set(0);
    cells.set(3);
    CellSet esc(4);
    esc.set(3);
    std::string out;
    append_cells_csv(out, g, cells, "reachable", &esc);
    CHECK(out ==
          "0,0.25,0.25,reachable,\n"
          "3,0.75,0.75,reachable,unbounded-escape\n");

    std::string plain;
    append_cells_csv(plain, g, cells, "reachable");
    CHECK(plain ==
          "0,0.25,0.25,reachable,\n"
          "3,0.75,0.75,reachable,\n");
}
