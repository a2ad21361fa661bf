#pragma once

#include <stdexcept>
#include <string>

namespace pgvc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad shapes, out-of-range values).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Filesystem or decode failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A file parsed but its content violates the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a remote service.
class NetworkError : public Error {
public:
    using Error::Error;
};

}  // namespace pgvc
