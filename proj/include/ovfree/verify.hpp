#ifndef OVFREE_VERIFY_HPP
#define OVFREE_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ovfree/subordination.hpp"

namespace ovfree {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double value = 0.0;     // the measured residual / quantity
    double threshold = 0.0; // what it is checked against
    double seconds = 0.0;
    std::string detail;
};

/// The acceptance suite: every criterion at its pinned parameters.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed);

/// Generic random-input residual sweep (linearization + BP identities) at a
/// caller-chosen order and dimension; used by `verify` alongside the pinned
/// criteria.
std::vector<CriterionResult> run_random_sweep(std::uint64_t seed, int order, int dim,
                                              double tol);

std::string results_to_csv(const std::vector<CriterionResult>& rows);

} // namespace ovfree

#endif
