#pragma once

#include <stdexcept>
#include <string>

namespace fedmlc {

// Configuration / argument problems: bad hyperparameters, invalid specs,
// incompatible modes. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches between matrices/models/datasets. Exit code 2.
class DimensionError : public ConfigError {
public:
    explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

// Data-level problems: empty datasets after filtering, unreadable or
// malformed input files. Exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally invalid serialized payloads: bad magic, unknown version,
// declared lengths that disagree with content. Carries the byte offset
// where decoding failed.
class FormatError : public DataError {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : DataError(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Payload ends before its declared content does.
class CorruptionError : public DataError {
public:
    CorruptionError(const std::string& msg, std::size_t byte_offset)
        : DataError(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Non-finite values where finite ones are required (gradients, losses).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss. Exit code 4.
class DivergenceError : public NumericError {
public:
    explicit DivergenceError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace fedmlc
