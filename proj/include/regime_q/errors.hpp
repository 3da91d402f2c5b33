#pragma once

#include <stdexcept>

namespace regime_q {

// Argument outside the domain of a mathematical function (z <= 0, p < 1, ...).
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Quadratic value-function ansatz broken, e.g. A <= 0 feeding a log or a variance.
struct ansatz_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lagrange multiplier denominator vanishes.
struct degenerate_horizon : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct gradient_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace regime_q
