#pragma once

#include <stdexcept>
#include <string>

namespace compocc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wrong magic, unparsable header or malformed text document.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File format version the reader does not understand.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Payload shorter or longer than the header declares.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Payload decoded fine but holds forbidden values (NaN, Inf).
class DataError : public Error {
public:
    using Error::Error;
};

/// Tensor dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A loaded object violates a type invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Hyperparameter outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Caller supplied inconsistent inputs (bad probabilities, unknown ids, ...).
class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace compocc
