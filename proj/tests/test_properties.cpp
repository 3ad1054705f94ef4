/**
 * @file test_properties.cpp
 * @brief Unit tests for the randomized property suites: the suite roster, a
 *        clean pass at reduced case counts, determinism across repeated runs,
 *        and the random system generator's guarantees.
 */
#include "doctest.h"

#include "pflow/properties.hpp"

using namespace pflow;

TEST_CASE("suite roster") {
    const auto& names = property_suite_names();
    const std::vector<std::string> expected = {
        "cocycle-identity",      "lift-consistency",
        "chart-conjugacy",       "sphere-normalization",
        "tangency-preservation", "bounded-solution",
        "frame-dimensions",      "exponential-separation"};
    CHECK(names == expected);
}

TEST_CASE("all suites pass at a reduced case count") {
    const auto results = run_property_suites(40, 20240517);
    REQUIRE(results.size() == property_suite_names().size());
    for (std::size_t k = 0; k < results.size(); ++k) {
        INFO(results[k].name, ": ", results[k].first_failure);
        CHECK(results[k].name == property_suite_names()[k]);
        CHECK(results[k].cases == 40);
        CHECK(results[k].failures == 0);
    }
}

TEST_CASE("suite outcomes are deterministic in the seed") {
    const auto a = run_property_suites(15, 7);
    const auto b = run_property_suites(15, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].failures == b[k].failures);
        CHECK(a[k].first_failure == b[k].first_failure);
    }
    CHECK_THROWS_AS(run_property_suites(0, 7), PreconditionError);
}

TEST_CASE("the random system generator honors its options") {
    Rng rng(42);
    RandomSystemOptions opts;
    opts.require_positive = true;
    opts.allow_center = false;
    for (int k = 0; k < 25; ++k) {
        const RandomSystem rs = random_system(rng, opts);
        CHECK(rs.sys.n() >= 2);
        CHECK(rs.sys.n() <= 4);
        CHECK(rs.sd.center_index == -1);
        CHECK(rs.sd.exponents.front() > 0.0);
        // Exponents are separated enough to decompose reliably.
        for (std::size_t i = 1; i < rs.sd.exponents.size(); ++i) {
            CHECK(rs.sd.exponents[i - 1] - rs.sd.exponents[i] >= 0.5 - 1e-12);
        }
        CHECK(rs.lifted_gram.rows() == rs.sys.n() + 1);
        // The signal respects the control range box.
        const Vec v = rs.u.value(0.3);
        const auto bounds = rs.sys.range.bounds();
        for (int i = 0; i < v.size(); ++i) {
            CHECK(v[i] >= bounds(i, 0) - 1e-12);
            CHECK(v[i] <= bounds(i, 1) + 1e-12);
        }
    }
}
