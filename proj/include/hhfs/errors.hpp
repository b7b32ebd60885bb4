#pragma once

#include <stdexcept>
#include <string>

namespace hhfs {

// Bad input: config values, parameter ranges, malformed files.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative routine failed: non-convergence, ill-conditioning, event not reached.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hhfs
