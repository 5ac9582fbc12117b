#pragma once

#include <stdexcept>
#include <string>

namespace skex {

/// Violated precondition of a library call (dimension mismatch, bad argument).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: unknown key, unparsable value, out-of-range parameter.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace skex
