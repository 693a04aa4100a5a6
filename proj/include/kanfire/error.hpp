#pragma once

#include <stdexcept>
#include <string>

namespace kanfire {

// Base for every error raised by the library. The CLI maps these to exit status 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or truncated input files.
class FormatError : public Error {
public:
    using Error::Error;
};

// Inputs whose grids are not co-registered.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Preconditions on arguments (dimensions, ranges, empty inputs).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Non-finite loss during training.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace kanfire
