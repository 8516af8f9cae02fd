#pragma once

#include <stdexcept>
#include <string>

namespace volstab {

/// Malformed or unusable input data (CSV content, missing files).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown keys, unparsable values, out-of-range parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace volstab
