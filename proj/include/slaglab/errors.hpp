#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slaglab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-range index, bad size, malformed request.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input outside the region where an operator or transform is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A rotation or Möbius map hit tan(±π/2).
class PoleError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Iteration budget exhausted (Jacobi sweeps, Newton, rejection sampling).
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed grid file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace slaglab
