#pragma once
// Error taxonomy shared by the library and the CLI exit-code mapping.

#include <stdexcept>
#include <string>

namespace trajmeta {

// Bad invocation: unknown flags, missing required arguments. CLI exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data or configuration. CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken internal invariant. CLI exit code 3.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace trajmeta
