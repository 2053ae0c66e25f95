#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynstack {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative fit failed to reach its stopping criterion or produced a
/// non-finite objective.
class FitError : public Error {
public:
    using Error::Error;
};

} // namespace dynstack
