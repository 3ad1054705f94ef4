/**
 * @file properties.hpp
 * @brief Randomized invariant checks over generated systems: flow and cocycle
 *        identities, lift/chart consistency, sphere-geometry preservation,
 *        bounded-solution laws, subbundle completeness, and exponential
 *        separation of the invariant frames.
 */
#pragma once

#include "pflow/tangent.hpp"

#include <cstdint>

namespace pflow {

/// Randomly generated test system with its decomposition and a control signal.
struct RandomSystem {
    LinearSystem sys;
    SpectralData sd;
    Mat lifted_gram;
    ControlSignal u;
};

/// Options for the random system generator.
struct RandomSystemOptions {
    bool require_positive = false; ///< at least one positive Lyapunov exponent
    bool allow_center = true;      ///< permit a zero exponent
};

/**
 * @brief Draw a random linear control system: state dimension 2..4, Lyapunov
 *        exponents on the half-integer grid with pairwise gaps >= 0.5, spaces
 *        of dimension <= 2 realized as scalar, Jordan, or rotation blocks,
 *        conjugated by a random well-conditioned change of basis; 1-2 control
 *        channels with the unit box range and a random constant, piecewise,
 *        or periodic signal.
 */
RandomSystem random_system(Rng& rng, const RandomSystemOptions& opts = {});

/// Outcome of one property suite.
struct PropertySuiteResult {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure; ///< message of the first failing case, if any
    double seconds = 0.0;
    bool passed() const { return failures == 0; }
};

/// Names of the available suites, in execution order.
const std::vector<std::string>& property_suite_names();

/**
 * @brief Run every property suite with `cases_per_suite` random cases each.
 *        Deterministic for a fixed seed.
 */
std::vector<PropertySuiteResult> run_property_suites(
    int cases_per_suite = 500, std::uint64_t seed = 20240517);

} // namespace pflow
