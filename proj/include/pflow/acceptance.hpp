/**
 * @file acceptance.hpp
 * @brief End-to-end verification suite: ten numbered criteria that exercise
 *        the example systems (exponent reproduction, the periodic orbit and
 *        the equilibria at infinity, the grid control set against a
 *        brute-force oracle, closed-form vs finite-difference linearization,
 *        stable-direction convergence, the randomized property suites, and
 *        limit-set classification).
 */
#pragma once

#include <functional>
#include <string>
#include <vector>

namespace pflow {

/// Outcome of one verification criterion.
struct CriterionResult {
    int number = 0;      ///< 1-based criterion number
    std::string name;    ///< short kebab-case identifier
    bool passed = false;
    std::string detail;  ///< measured quantities, or the failure reason
    double seconds = 0.0;
};

/**
 * @brief Run all ten criteria in order.  Exceptions inside a criterion mark
 *        it failed with the message in `detail`.  `on_result`, when set, is
 *        invoked with each result as soon as it is available.
 */
std::vector<CriterionResult> run_acceptance(
    const std::function<void(const CriterionResult&)>& on_result = {});

/// True when every criterion passed.
bool acceptance_passed(const std::vector<CriterionResult>& results);

} // namespace pflow
