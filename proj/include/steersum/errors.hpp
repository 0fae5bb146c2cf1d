#pragma once

#include <stdexcept>
#include <string>

namespace steersum {

// Error taxonomy shared across the library. Each category maps to one
// failure mode a caller can act on; the CLI turns them into structured
// stderr output.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error("data error: " + msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error("parse error: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct ScheduleError : std::runtime_error {
    explicit ScheduleError(const std::string& msg) : std::runtime_error("schedule error: " + msg) {}
};

struct TokenError : std::runtime_error {
    explicit TokenError(const std::string& msg) : std::runtime_error("invalid token: " + msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

struct GuidanceNumericError : std::runtime_error {
    explicit GuidanceNumericError(const std::string& msg)
        : std::runtime_error("guidance numeric error: " + msg) {}
};

struct DecodeNumericError : std::runtime_error {
    explicit DecodeNumericError(const std::string& msg)
        : std::runtime_error("decode numeric error: " + msg) {}
};

struct TrainingDivergedError : std::runtime_error {
    explicit TrainingDivergedError(const std::string& msg)
        : std::runtime_error("training diverged: " + msg) {}
};

}  // namespace steersum
