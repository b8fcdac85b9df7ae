#pragma once

#include <stdexcept>
#include <string>

namespace ptkit {

// Bad flags, bad config files, missing inputs. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data that violates a contract (schema violations, failed runs). Exit code 1.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unrecoverable I/O: unreadable input, unwritable output.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ptkit
