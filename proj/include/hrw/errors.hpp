#pragma once

#include <stdexcept>
#include <string>

namespace hrw {

// Domain error taxonomy. Every failure mode named by a module contract maps
// to one of these so callers (and the CLI exit-code policy) can dispatch on
// type rather than parse messages.

struct OrderMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CapExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidKernelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hrw
