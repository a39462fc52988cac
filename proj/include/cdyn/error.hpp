#pragma once

#include <stdexcept>
#include <string>

namespace cdyn {

/// Failure category; the CLI maps each one to a process exit code.
enum class ErrorKind {
    Invalid,  // precondition violated by the caller
    Config,   // malformed or inconsistent configuration
    Numeric,  // NaN, divergence, CFL violation, singular system
    Io,       // missing, unreadable or corrupt file
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const char* what) {
    if (!cond) fail(ErrorKind::Invalid, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::Invalid, what);
}

}  // namespace cdyn
