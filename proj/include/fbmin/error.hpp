#pragma once

#include <stdexcept>
#include <string>

namespace fbmin {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on the arguments was violated (degenerate grid, ball exits
// the domain, grid mismatch, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// An iterative numerical routine failed to reach its tolerance, or produced
// non-finite values.
class SolveError : public Error {
public:
    using Error::Error;
};

// A free-boundary diagnostic was requested on a field without free boundary.
class NoFreeBoundary : public Error {
public:
    NoFreeBoundary() : Error("no free boundary") {}
    explicit NoFreeBoundary(const std::string& what) : Error("no free boundary: " + what) {}
};

// Configuration or input-file error. Carries the offending line when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

}  // namespace fbmin
