#pragma once

#include <stdexcept>
#include <string>

namespace gmmsom {

// Caller misuse: bad indices, mismatched sizes, invalid configuration.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad input data or files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values produced during computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gmmsom
