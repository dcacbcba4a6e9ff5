#pragma once

#include <stdexcept>
#include <string>

namespace hyperoffload {

/// Broad failure class. The CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorKind {
    validation,  // bad input value, precondition violated
    io,          // missing or unreadable file, malformed row
    internal     // an invariant the library guarantees was broken
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(ErrorKind::validation, msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& msg) : Error(ErrorKind::internal, msg) {}
};

}  // namespace hyperoffload
