#pragma once

#include <stdexcept>
#include <string>

namespace sgcn {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not satisfy an operation's preconditions.
struct ShapeError : Error {
    using Error::Error;
};

// An operation received an empty input where at least one element is required.
struct EmptyInputError : Error {
    using Error::Error;
};

// Bad user-facing configuration: invalid flags, mismatched label sets,
// missing files, checkpoint/session dimension conflicts. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input data (JSON lines, embedding files, checkpoints).
struct DataError : Error {
    using Error::Error;
};

// File unreadable/unwritable.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required (loss, gradients).
struct NumericError : Error {
    using Error::Error;
};

// API misuse: non-scalar loss, tensor from a different tape, and similar.
struct ContractError : Error {
    using Error::Error;
};

// Out-of-range class label or row index.
struct IndexError : Error {
    using Error::Error;
};

} // namespace sgcn
