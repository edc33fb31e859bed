#pragma once

#include <stdexcept>
#include <string>

namespace aquifer {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// usage/config -> 2, data/validation/format -> 3, training divergence -> 4.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ShapeError : ValidationError {
    using ValidationError::ValidationError;
};

struct DegenerateLabelsError : ValidationError {
    using ValidationError::ValidationError;
};

struct IoError : Error {
    using Error::Error;
};

struct TrainingDivergedError : Error {
    explicit TrainingDivergedError(const std::string& msg, int epoch_)
        : Error(msg), epoch(epoch_) {}
    int epoch;
};

}  // namespace aquifer
