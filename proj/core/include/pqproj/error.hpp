#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pqproj {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. position() is a 0-based byte offset into the input.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Evaluation left the domain of a function (log of a non-positive number, 0/0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A metric (or A-tensor) that is singular or not positive definite where it is needed.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// A family parameter t or c sits on (or too close to) the spectrum of A.
class SpectrumProximityError : public Error {
public:
    using Error::Error;
};

/// A perturbation formula was asked for on a repeated eigenvalue.
class ClusteredEigenvalueError : public Error {
public:
    using Error::Error;
};

}  // namespace pqproj
