#pragma once

#include <stdexcept>
#include <string>

namespace gsim {

/// Contract violation: bad dimensions, invalid configuration values,
/// non-finite inputs. Maps to exit code 1 at the CLI layer.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File and parse failure: missing files, malformed headers, truncated
/// blocks, unknown format versions. Maps to exit code 2 at the CLI layer.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gsim
