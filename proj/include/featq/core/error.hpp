#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace featq {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension or shape mismatch between tensors / layers / datasets.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Caller passed a value outside the documented domain.
class InputError : public Error {
public:
    using Error::Error;
};

/// Non-finite value where a finite one is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Attempt to acquire a feature group that is already owned, or an
/// otherwise ill-formed action.
class InvalidActionError : public Error {
public:
    using Error::Error;
};

/// Malformed binary input; carries the byte offset of the problem.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    explicit FormatError(const std::string& msg) : Error(msg), offset(0) {}
    std::size_t offset;
};

/// Malformed text input; carries the 1-based line number of the problem.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    explicit ParseError(const std::string& msg) : Error(msg), line(0) {}
    std::size_t line;
};

} // namespace featq
