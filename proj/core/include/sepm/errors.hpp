#pragma once

#include <stdexcept>
#include <string>

namespace sepm {

// Bad run configuration or model specification (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing/unreadable/unwritable files, malformed inputs (CLI exit code 3).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A structural invariant failed mid-run (CLI exit code 4).
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sepm
