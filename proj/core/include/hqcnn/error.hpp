#pragma once

#include <stdexcept>
#include <string>

namespace hqcnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Register or matrix dimensions outside the supported range.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Parameter bindings that do not match a circuit's slot counts.
class BindingError : public Error {
public:
    using Error::Error;
};

/// Qubit index, observable index or gate arity problems.
class ArityError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not compose.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Inputs that violate a documented precondition (range, label, finiteness).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A quantity that is mathematically undefined for the given input
/// (zero pooled variance, a single cluster, zero denominator).
class UndefinedError : public Error {
public:
    using Error::Error;
};

/// Unreadable or corrupt file content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Bad experiment configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure while writing run outputs; the CLI maps it to exit code 3.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace hqcnn
