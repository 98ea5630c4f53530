#ifndef OVFREE_ERRORS_HPP
#define OVFREE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ovfree {

// Failure categories map onto CLI exit codes: parse -> 2,
// numeric/convergence -> 3, resource guardrails -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct dimension_error : error {
    using error::error;
};

struct type_error : error {
    using error::error;
};

struct precondition_error : error {
    using error::error;
};

struct singularity_error : error {
    using error::error;
};

struct usage_error : error {
    using error::error;
};

struct model_error : error {
    using error::error;
};

struct positivity_error : error {
    using error::error;
};

struct domain_error : error {
    using error::error;
};

struct structure_error : error {
    using error::error;
};

struct resource_error : error {
    using error::error;
};

struct parse_error : error {
    using error::error;
};

struct convergence_error : error {
    convergence_error(const std::string& msg, double last_residual)
        : error(msg), residual(last_residual) {}
    double residual;
};

} // namespace ovfree

#endif
