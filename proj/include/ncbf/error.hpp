#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncbf {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not chain.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed network file, non-finite weight, bad report input.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Division by zero, sqrt of a negative number, or a non-finite result.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside of its documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a trustworthy result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Syntax or semantic error in a dynamics source file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line),
          column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace ncbf
