// Exception types shared across the library. The CLI maps them to exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace nnreg {

// Base class so callers can catch everything the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix or layer dimensions do not line up. Message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Requested an operation the type combination does not support
// (e.g. the standalone softmax derivative).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Bad user-facing configuration: unknown keys, invalid ranges, missing files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values encountered where finiteness is required; training aborts.
class NumericalAbort : public Error {
public:
    using Error::Error;
};

// Degenerate numeric input (zero vector for angular distance, zero-span shape).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// File content violates an on-disk format. `kind` distinguishes failure modes
// so tests can assert the precise cause.
class FormatError : public Error {
public:
    enum class Kind { BadMagic, Truncated, CountMismatch, BadVersion, Io };

    FormatError(Kind k, const std::string& msg) : Error(msg), kind(k) {}

    Kind kind;
};

} // namespace nnreg
