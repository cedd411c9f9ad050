#pragma once

#include <stdexcept>
#include <string>

namespace lsle {

// One exception type per failure contract of the library API.

struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct degenerate_domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_lattice_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct singular_evaluation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_slit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct refinement_required_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_step_error : std::runtime_error {
    int step_index;
    degenerate_step_error(const std::string& what, int step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
};

struct enumeration_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct not_integrable_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct inconclusive_noise_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct attrition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct grid_range_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct scale_range_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct infeasible_conditioning_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
    double residual;
    solver_error(const std::string& what, double res)
        : std::runtime_error(what + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lsle
