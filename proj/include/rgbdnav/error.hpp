#pragma once

#include <stdexcept>
#include <string>

namespace rgbdnav {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidState : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Structured load failures for on-disk containers.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

class MalformedHeader : public FormatError {
public:
    using FormatError::FormatError;
};

class LengthMismatch : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionMismatch : public FormatError {
public:
    VersionMismatch(int found, int expected)
        : FormatError("version mismatch: found " + std::to_string(found) + ", expected " +
                      std::to_string(expected)),
          found_(found),
          expected_(expected) {}

    int found() const noexcept { return found_; }
    int expected() const noexcept { return expected_; }

private:
    int found_;
    int expected_;
};

}  // namespace rgbdnav
